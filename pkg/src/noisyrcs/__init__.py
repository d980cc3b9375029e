"""Numerical laboratory for noisy random quantum circuits.

Exact density-matrix simulation of brickwork Haar ensembles with
single-qubit noise after every gate layer, closed-form moment formulas
and bounds for the output distribution, an exact two-copy second-moment
propagator, label-space recursions, and a reproducible Monte Carlo
harness with built-in verification suites.
"""

from .channels import (CHANNEL_KINDS, ORDERINGS, IteratedDiagonal,
                       KrausChannel, PairCoefficients, PauliTransferMap,
                       channel_from_json, channel_r, channel_to_json,
                       doubled_apply, effective_rotation_noise,
                       iterated_zero_overlap, make_channel, ptm_matrix,
                       r_value, rotation_unitary, twirl_strength,
                       werner_pair_coeffs)
from .circuits import (CONDITIONING_FLOOR, MAX_SIMULATE_QUBITS,
                       MAX_TWO_COPY_QUBITS, Circuit, Gate, NoisePlacement,
                       OutputDistribution, TwoCopyResult, brickwork_supports,
                       build_brickwork, check_density_matrix,
                       circuit_from_json, circuit_shape, circuit_to_json,
                       collision_probability, output_distribution,
                       parallel_supports, sample_haar_unitary, simulate,
                       singles_supports, two_copy_moment_propagate,
                       uniform_l2_distance, xeb, xeb_raw)
from .errors import (CPTPError, DegenerateConditioningError, DimensionError,
                     ParameterError, UnsupportedRegimeError)
from .harness import (ARTIFACT_VERSION, CSV_COLUMNS, SUITES, EstimateRecord,
                      ExperimentConfig, RunningStats, estimate_logprob_stats,
                      estimate_tail, pairwise_reduce, records_to_rows,
                      rows_to_csv, run_experiment, sample_rng, sidecar_json,
                      verify_suite, wilson_interval)
from .moments import (FormulaRecord, GeneralNoiseParams, SecondMomentParams,
                      bias, collision_lower_bound,
                      collision_lower_bound_general,
                      collision_lower_bound_rotations,
                      conditional_first_moment, first_moment, formula_record,
                      general_noise_params, last_layer_first_moment,
                      last_layer_regime, lightcone_terms,
                      log1p_collision_lower_bound, log_second_moment_bound,
                      logprob_tail_diagnostic, marginal_first_moment,
                      paley_zygmund_bound, regime_check, regime_check_general,
                      second_moment_bound, second_moment_params)
from .statmech import (MonotonicityRecord, Prop81State, SequenceCoeffs,
                       last_layer_correction, modified_ensemble_second_moment,
                       monotonicity_check, pair_collapse, prop_8_1_state,
                       sequence_coeffs, trajectory_second_moment)

__version__ = "0.1.0"
