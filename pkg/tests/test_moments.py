import numpy as np
import pytest

from noisyrcs.channels import (make_channel, ptm_matrix, r_value)
from noisyrcs.moments import (FORMULAS, bias, collision_lower_bound,
                              collision_lower_bound_general,
                              collision_lower_bound_rotations,
                              conditional_first_moment, first_moment,
                              formula_record, general_noise_params,
                              last_layer_first_moment, last_layer_regime,
                              lightcone_terms, log1p_collision_lower_bound,
                              log_second_moment_bound,
                              logprob_tail_diagnostic, marginal_first_moment,
                              paley_zygmund_bound, regime_check,
                              regime_check_general, second_moment_bound,
                              second_moment_params)
from noisyrcs.errors import ParameterError, UnsupportedRegimeError


# ---------------------------------------
# First moments
# ---------------------------------------

def test_first_moment_sums_to_one():
    n, q, p = 5, 0.3, 0.2
    total = sum(first_moment(n, bin(x).count("1"), "amp_then_dep", p, q)
                for x in range(2 ** n))
    assert total == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("order", ["amp_then_dep", "dep_then_amp"])
def test_first_moment_weight_ordering(order):
    # heavier strings are exponentially suppressed under non-unital noise
    vals = [first_moment(4, w, order, 0.1, 0.5) for w in range(5)]
    assert all(vals[i] > vals[i + 1] for i in range(4))
    r = r_value(order, 0.1, 0.5)
    assert vals[1] / vals[0] == pytest.approx((1 - r) / (1 + r), abs=1e-12)


def test_first_moment_noiseless_uniform():
    assert first_moment(4, 3, "amp_then_dep", 0.0, 0.0) == \
        pytest.approx(1 / 16, abs=1e-15)


def test_marginal_first_moment_matches_substring():
    assert marginal_first_moment(2, 1, "amp_then_dep", 0.1, 0.3) == \
        pytest.approx(first_moment(2, 1, "amp_then_dep", 0.1, 0.3), abs=1e-15)


def test_conditional_first_moment():
    ch = make_channel("amp_then_dep", q=0.2, p=0.1)
    # <0|N(I)|0>/2 = (1+r)/2 / ... with r = q
    assert conditional_first_moment(0, ch) == pytest.approx(0.6, abs=1e-12)
    assert conditional_first_moment(1, ch) == pytest.approx(0.4, abs=1e-12)


def test_first_moment_rejects_bad_weight():
    with pytest.raises(ParameterError):
        first_moment(3, 4, "amp_then_dep", 0.1, 0.1)


# ---------------------------------------
# Collision bounds
# ---------------------------------------

def test_collision_bound_log_consistency():
    for n in (1, 5, 30):
        for r in (0.0, 0.2, 1.0):
            assert collision_lower_bound(n, r) == pytest.approx(
                np.expm1(log1p_collision_lower_bound(n, r)), rel=1e-12)


def test_collision_bound_large_n_stable():
    # n far past the overflow point of (1+r^2)^n in linear space
    val = log1p_collision_lower_bound(10 ** 6, 0.5)
    assert val == pytest.approx(10 ** 6 * np.log1p(0.25), rel=1e-12)


def test_collision_bound_general_uses_t03_squared():
    assert collision_lower_bound_general(3, -0.4) == \
        pytest.approx(collision_lower_bound(3, 0.4), abs=1e-14)


def test_collision_bound_rotations_worst_angle():
    # the closest-to-pi/4 angle dominates
    got = collision_lower_bound_rotations(2, 0.5, [0.0, np.pi / 6])
    want = collision_lower_bound(2, 0.5 * np.cos(np.pi / 3))
    assert got == pytest.approx(want, abs=1e-12)


# ---------------------------------------
# Second-moment bound parameters
# ---------------------------------------

def test_second_moment_params_fixture():
    params = second_moment_params("amp_then_dep", 0.1, 0.2)
    c = 1 - 0.81 * 0.8 * (1 - 0.2 / 3)
    assert params.c == pytest.approx(c, abs=1e-12)
    assert params.mu == pytest.approx(0.25 + 0.04 / (12 * c), abs=1e-12)
    assert params.nu == pytest.approx(1 / 12 - 0.04 / (12 * c), abs=1e-12)
    assert params.eta == pytest.approx(0.96, abs=1e-12)
    assert params.mu + params.nu == pytest.approx(1 / 3, abs=1e-12)


def test_second_moment_noiseless_rejected():
    with pytest.raises(UnsupportedRegimeError):
        second_moment_params("amp_then_dep", 0.0, 0.0)


def test_second_moment_bound_log_consistency():
    params = second_moment_params("dep_then_amp", 0.2, 0.3)
    assert second_moment_bound(3, 4, params) == pytest.approx(
        np.exp(log_second_moment_bound(3, 4, params)), rel=1e-12)


def test_second_moment_bound_decreases_with_depth():
    params = second_moment_params("amp_then_dep", 0.1, 0.3)
    vals = [second_moment_bound(4, d, params) for d in range(2, 8)]
    assert all(vals[i] >= vals[i + 1] for i in range(len(vals) - 1))


def test_general_noise_params_match_composed_kind():
    # evaluated on a composed channel the general block must agree with
    # the order-specific parameterization where both are defined
    for order in ("amp_then_dep", "dep_then_amp"):
        ch = make_channel(order, q=0.3, p=0.1)
        gen = general_noise_params(ch.ptm())
        spec = second_moment_params(order, 0.1, 0.3)
        assert gen.c == pytest.approx(spec.c, abs=1e-12)
        assert gen.mu == pytest.approx(spec.mu, abs=1e-12)
        assert gen.nu == pytest.approx(spec.nu, abs=1e-12)


def test_general_noise_params_accepts_matrix():
    mat = ptm_matrix(make_channel("amp_damp", q=0.2))
    gen = general_noise_params(make_channel("general_ptm", t=mat))
    assert gen.a == pytest.approx(0.04 / 3, abs=1e-12)


def test_regime_checks():
    assert regime_check("amp_then_dep", 0.1, 0.3)
    assert not regime_check("amp_then_dep", 0.3, 0.0)  # unital: r = 0


def test_regime_check_general():
    # eta >= 1 + t03, so the general sufficient condition needs t03 < 0:
    # amplitude damping toward |1> gives 4 mu eta = 4(1-q)/(4-q) < 1
    q = 0.3
    s = np.sqrt(1 - q)
    inverted = [[1, 0, 0, 0], [0, s, 0, 0], [0, 0, s, 0], [-q, 0, 0, 1 - q]]
    gen = general_noise_params(make_channel("general_ptm", t=inverted))
    assert regime_check_general(gen)
    assert 4 * gen.mu * gen.eta == pytest.approx(4 * (1 - q) / (4 - q),
                                                 abs=1e-12)
    # damping toward |0> fails it: eta > 1 always
    gen0 = general_noise_params(make_channel("amp_damp", q=q).ptm())
    assert not regime_check_general(gen0)


# ---------------------------------------
# Lightcone quantities
# ---------------------------------------

def test_lightcone_terms_fixture():
    terms = lightcone_terms(4, 3, 0.2, 2, 6 / 7, 1 / 7, 0.72)
    assert terms["e_a_sigma"] == pytest.approx(2 * 3 * 0.2 - 4 * 0.2, abs=1e-12)
    want = 4 * (6 / 7 - 0.5 + (1 / 7) * 0.72 ** 2) ** 2 / 900.0
    assert terms["lemma13_lower"] == pytest.approx(want, abs=1e-15)
    rhs = 4 * np.log(2) + terms["e_a_sigma"] + (4 / 64) * want
    assert terms["eq58_rhs_expectation"] == pytest.approx(rhs, abs=1e-12)


def test_lightcone_validation():
    with pytest.raises(ParameterError):
        lightcone_terms(4, 5, 0.2, 2, 0.9, 0.1, 0.7)
    with pytest.raises(ParameterError):
        lightcone_terms(4, 2, 0.2, 2, 0.4, 0.1, 0.7)


def test_logprob_tail_diagnostic():
    out = logprob_tail_diagnostic(4, 2, 0.2, 2, 6 / 7, 1 / 7, 0.72, k=10.0)
    assert out["var_bound"] == 8.0
    assert out["chebyshev_tail"] == pytest.approx(0.08, abs=1e-12)


def test_paley_zygmund():
    assert paley_zygmund_bound(0.5, 0.5, 0.5) == pytest.approx(1 / 8, abs=1e-12)
    with pytest.raises(ParameterError):
        paley_zygmund_bound(1.0, 0.5, 0.5)


# ---------------------------------------
# Last layer
# ---------------------------------------

@pytest.mark.parametrize("theta,expect", [
    (0.0, 0.4), (np.pi / 4, 0.0), (np.pi / 2, -0.4)])
def test_bias_values(theta, expect):
    assert bias(0.4, theta) == pytest.approx(expect, abs=1e-12)


def test_last_layer_first_moment_complementary():
    q, theta = 0.3, np.pi / 8
    p0 = last_layer_first_moment(q, theta, 0)
    p1 = last_layer_first_moment(q, theta, 1)
    assert p0 + p1 == pytest.approx(1.0, abs=1e-15)
    assert p0 - p1 == pytest.approx(bias(q, theta), abs=1e-15)


def test_last_layer_regime_floor():
    # cos(2 theta) must clear 4 - sqrt(15) ~ 0.127
    assert last_layer_regime([0.0, np.pi / 8])
    assert not last_layer_regime([np.pi / 4])
    edge = np.arccos(4 - np.sqrt(15)) / 2
    assert not last_layer_regime([edge])


# ---------------------------------------
# Formula dispatch
# ---------------------------------------

def test_formula_dispatch_evaluates():
    fn, names = FORMULAS["first_moment"]
    assert fn(n=2, w_x=1, order="amp_then_dep", p=0.0, q=0.2) == \
        pytest.approx(first_moment(2, 1, "amp_then_dep", 0.0, 0.2))


def test_formula_record_wrapper():
    rec = formula_record("collision_bound", collision_lower_bound, n=2, r=0.5)
    assert rec.value == pytest.approx(collision_lower_bound(2, 0.5))
    assert rec.inputs == {"n": 2, "r": 0.5}
