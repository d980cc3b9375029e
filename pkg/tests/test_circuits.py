import numpy as np
import pytest

from noisyrcs.channels import make_channel
from noisyrcs.circuits import (Circuit, Gate, NoisePlacement,
                               brickwork_supports, build_brickwork,
                               check_density_matrix, circuit_from_json,
                               circuit_shape, circuit_to_json,
                               collision_probability, output_distribution,
                               parallel_supports, sample_haar_unitary,
                               simulate, singles_supports,
                               two_copy_moment_propagate, uniform_l2_distance,
                               xeb, xeb_raw)
from noisyrcs.errors import (DegenerateConditioningError, DimensionError,
                             ParameterError)


# ---------------------------------------
# Layouts
# ---------------------------------------

def test_brickwork_structure():
    layers = brickwork_supports(4, 3)
    assert layers[0] == [(0, 1), (2, 3)]
    assert layers[1] == [(0,), (1, 2), (3,)]
    assert layers[2] == [(0, 1), (2, 3)]


def test_brickwork_rejects_odd():
    with pytest.raises(ParameterError):
        brickwork_supports(3, 2)
    assert brickwork_supports(1, 2) == [[(0,)], [(0,)]]


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_parallel_layout_covers_all_qubits(n):
    layers = parallel_supports(n, 4)
    for layer in layers:
        covered = sorted(q for s in layer for q in s)
        assert covered == list(range(n))
        for s in layer:
            if len(s) == 2:
                assert abs(s[0] - s[1]) == 1


def test_parallel_matches_brickwork_for_even_n():
    assert parallel_supports(4, 3) == brickwork_supports(4, 3)


def test_singles_layout():
    assert singles_supports(3, 2) == [[(0,), (1,), (2,)], [(0,), (1,), (2,)]]


def test_circuit_layer_validation():
    with pytest.raises(ParameterError):
        Circuit(n=2, depth=1, layers=[[Gate(qubits=(0,))]])
    with pytest.raises(ParameterError):
        Circuit(n=3, depth=1, layers=[[Gate(qubits=(0, 2)), Gate(qubits=(1,))]])


# ---------------------------------------
# Haar sampling
# ---------------------------------------

@pytest.mark.parametrize("dim", [2, 4])
def test_haar_unitary_is_unitary(dim):
    rng = np.random.default_rng(0)
    for _ in range(10):
        u = sample_haar_unitary(dim, rng)
        assert np.allclose(u @ u.conj().T, np.eye(dim), atol=1e-12)


def test_haar_unitary_moments():
    # E |u_00|^2 = 1/dim and E |u_00|^4 = 2 / (dim (dim+1)) for Haar
    rng = np.random.default_rng(1)
    samples = 50000
    for dim in (2, 4):
        vals = np.empty(samples)
        for i in range(samples):
            u = sample_haar_unitary(dim, rng)
            vals[i] = np.abs(u[0, 0]) ** 2
        se2 = vals.std(ddof=1) / np.sqrt(samples)
        assert abs(vals.mean() - 1.0 / dim) <= 5 * se2
        quart = vals ** 2
        se4 = quart.std(ddof=1) / np.sqrt(samples)
        assert abs(quart.mean() - 2.0 / (dim * (dim + 1))) <= 5 * se4


def test_haar_unitary_rejects_other_dims():
    with pytest.raises(DimensionError):
        sample_haar_unitary(3, np.random.default_rng(0))


# ---------------------------------------
# Simulation
# ---------------------------------------

def _sample_circuit(n, depth, seed, channel=None, mode=None, layout="brickwork"):
    placement = NoisePlacement(mode=mode or "after_every_gate_with_final_layer",
                               channel=channel)
    return build_brickwork(n, depth, np.random.default_rng(seed), placement,
                           layout=layout)


@pytest.mark.parametrize("seed", range(5))
def test_simulate_density_matrix_invariants(seed):
    ch = make_channel("amp_then_dep", q=0.3, p=0.2)
    rho = simulate(_sample_circuit(4, 3, seed, ch))
    ok, diag = check_density_matrix(rho)
    assert ok, diag


def test_noiseless_simulation_is_pure():
    rho = simulate(_sample_circuit(4, 3, 7, channel=None))
    assert np.trace(rho @ rho).real == pytest.approx(1.0, abs=1e-10)


def test_full_damping_concentrates_on_zero():
    # q = 1 resets every qubit to |0> after the final layer
    ch = make_channel("amp_damp", q=1.0)
    rho = simulate(_sample_circuit(4, 2, 3, ch))
    dist = output_distribution(rho)
    assert dist.prob("0000") == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------
# Output distributions
# ---------------------------------------

def test_marginal_and_conditional_consistency():
    rho = simulate(_sample_circuit(4, 3, 9, make_channel("amp_damp", q=0.2)))
    dist = output_distribution(rho)
    # marginal over all qubits is the joint
    assert dist.marginal([0, 1, 2, 3], [1, 0, 1, 1]) == \
        pytest.approx(dist.prob("1011"), abs=1e-14)
    # chain rule
    cond = dist.conditional(2, 1, {0: 1, 1: 0, 3: 1})
    marg = dist.marginal([0, 1, 3], [1, 0, 1])
    assert cond * marg == pytest.approx(dist.prob("1011"), abs=1e-14)
    # marginals sum to one
    assert dist.marginal([1], [0]) + dist.marginal([1], [1]) == \
        pytest.approx(1.0, abs=1e-12)


def test_degenerate_conditioning_raises():
    dist = output_distribution(np.diag([1.0, 0.0, 0.0, 0.0]))
    with pytest.raises(DegenerateConditioningError):
        dist.conditional(1, 0, {0: 1})


def test_prob_accepts_string_and_int():
    dist = output_distribution(np.diag([0.1, 0.2, 0.3, 0.4]))
    assert dist.prob("10") == pytest.approx(0.3)
    assert dist.prob(2) == pytest.approx(0.3)
    with pytest.raises(ParameterError):
        dist.prob("101")


def test_xeb_definitions():
    ideal = output_distribution(np.diag([0.7, 0.1, 0.1, 0.1]))
    uniform = output_distribution(np.diag([0.25] * 4))
    assert xeb(ideal, uniform) == pytest.approx(0.0, abs=1e-12)
    assert xeb_raw(ideal, ideal) == pytest.approx(
        4 * collision_probability(ideal), abs=1e-12)


def test_uniform_distance_identity():
    rng = np.random.default_rng(5)
    p = rng.random(8)
    p /= p.sum()
    dist = output_distribution(np.diag(p))
    assert uniform_l2_distance(dist) == pytest.approx(
        8 * collision_probability(dist) - 1, abs=1e-12)


# ---------------------------------------
# Two-copy propagation oracle values
# ---------------------------------------

def test_two_copy_noiseless_single_qubit():
    # one Haar gate on one qubit: E[p_0^2] = 1/3 (Porter-Thomas d=2)
    exact = two_copy_moment_propagate(circuit_shape(1, 1))
    assert exact.e_p2[0] == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_two_copy_noiseless_two_qubit():
    # one Haar gate on two qubits: E[p_x^2] = 2 / (D (D+1)) / D = 1/10 each
    exact = two_copy_moment_propagate(circuit_shape(2, 1))
    assert np.allclose(exact.e_p2, 0.1, atol=1e-12)
    assert exact.z == pytest.approx(4 * 0.4 - 1, abs=1e-12)


def test_two_copy_matches_monte_carlo():
    ch = make_channel("amp_then_dep", q=0.3, p=0.1)
    placement = NoisePlacement(channel=ch)
    exact = two_copy_moment_propagate(circuit_shape(2, 2, placement))
    rng = np.random.default_rng(21)
    samples = 4000
    vals = np.empty((samples, 4))
    for i in range(samples):
        circuit = build_brickwork(2, 2, rng, placement)
        vals[i] = output_distribution(simulate(circuit)).probs ** 2
    est = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / np.sqrt(samples)
    assert np.all(np.abs(est - exact.e_p2) <= 5 * se)


def test_hiding_holds_without_noise_and_breaks_with_it():
    # noiseless ensemble: E[p_x^2] identical for all x (hiding); a
    # non-unital channel separates Hamming-weight classes
    exact = two_copy_moment_propagate(circuit_shape(2, 3))
    assert np.ptp(exact.e_p2) < 1e-13
    noisy = two_copy_moment_propagate(circuit_shape(
        2, 3, NoisePlacement(channel=make_channel("amp_damp", q=0.4))))
    assert noisy.e_p2[0] > noisy.e_p2[3] * 1.5


def test_two_copy_qubit_limit():
    with pytest.raises(DimensionError):
        two_copy_moment_propagate(circuit_shape(8, 1, layout="parallel"))


# ---------------------------------------
# Serialization
# ---------------------------------------

def test_circuit_json_round_trip():
    ch = make_channel("dep_then_amp", q=0.2, p=0.1)
    circuit = _sample_circuit(2, 2, 13, ch)
    back = circuit_from_json(circuit_to_json(circuit))
    assert back.n == circuit.n and back.depth == circuit.depth
    assert back.placement.mode == circuit.placement.mode
    rho1 = simulate(circuit)
    rho2 = simulate(back)
    assert np.allclose(rho1, rho2, atol=1e-12)
