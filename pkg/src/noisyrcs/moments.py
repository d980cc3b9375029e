"""Closed-form moment formulas and bounds.

Pure functions; each has a log-domain twin where the plain value would
overflow or lose precision for large n (beyond LOG_DOMAIN_THRESHOLD the
log forms are the canonical output).  Evaluators return floats; wrap
with :func:`formula_record` when a self-describing record is needed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .channels import PauliTransferMap, ptm_matrix, r_value
from .errors import ParameterError, UnsupportedRegimeError

LOG_DOMAIN_THRESHOLD = 50
ROTATION_REGIME_FLOOR = 4.0 - np.sqrt(15.0)


@dataclass(frozen=True)
class FormulaRecord:
    formula: str
    inputs: dict
    value: float


def formula_record(formula, fn, **inputs):
    return FormulaRecord(formula=formula, inputs=dict(inputs),
                         value=float(fn(**inputs)))


# ---------------------------------------
# First moments
# ---------------------------------------

def _weighted_first_moment(length, weight, r):
    if not 0 <= weight <= length:
        raise ParameterError("weight must lie in [0, length]")
    return (1 - r) ** weight * (1 + r) ** (length - weight) / 2 ** length


def first_moment(n, w_x, order, p, q):
    """E[p_x] for an n-bit string of Hamming weight w_x."""
    return _weighted_first_moment(n, w_x, r_value(order, p, q))


def marginal_first_moment(y_len, w_y, order, p, q):
    """E[Pr(substring y)] for a |y|-bit substring of weight w_y."""
    return _weighted_first_moment(y_len, w_y, r_value(order, p, q))


def conditional_first_moment(x_i, channel):
    """E[Pr(X_i = x_i | any conditioning)] = <x_i| N(I) |x_i> / 2."""
    img = channel.apply(np.eye(2))
    return float(np.real(img[x_i, x_i]) / 2.0)


# ---------------------------------------
# Collision-probability lower bounds
# ---------------------------------------

def log1p_collision_lower_bound(n, r):
    """log(1 + Z_bound) = n*log1p(r^2); stable for any n."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not -1.0 <= r <= 1.0:
        raise ParameterError("r must lie in [-1, 1]")
    return n * np.log1p(r * r)


def collision_lower_bound(n, r):
    """Lower bound (1 + r^2)^n - 1 on the scaled collision probability."""
    return float(np.expm1(log1p_collision_lower_bound(n, r)))


def collision_lower_bound_general(n, t03):
    return collision_lower_bound(n, t03)


def collision_lower_bound_rotations(n, q, thetas):
    """Bound with a fixed rotation layer: worst qubit sets the rate."""
    thetas = list(thetas)
    if len(thetas) == 0:
        raise ParameterError("need at least one rotation angle")
    c = min(abs(np.cos(2 * th)) for th in thetas)
    return collision_lower_bound(n, q * c)


# ---------------------------------------
# Second-moment bound
# ---------------------------------------

@dataclass(frozen=True)
class SecondMomentParams:
    mu: float
    nu: float
    eta: float   # 1 - r^2
    c: float
    r: float


@dataclass(frozen=True)
class GeneralNoiseParams:
    a: float
    b: float
    c: float
    mu: float
    nu: float
    eta: float   # sqrt-max form; differs from SecondMomentParams.eta


def second_moment_params(order, p, q):
    if p == 0 and q == 0:
        raise UnsupportedRegimeError(
            "second-moment bound is undefined for the noiseless channel")
    r = r_value(order, p, q)
    c = 1 - (1 - p) ** 2 * (1 - q) * (1 - q / 3)
    return SecondMomentParams(mu=0.25 + r * r / (12 * c),
                              nu=1 / 12 - r * r / (12 * c),
                              eta=1 - r * r, c=c, r=r)


def log_second_moment_bound(n, d, params):
    if n < 1 or d < 1:
        raise ParameterError("need n >= 1 and d >= 1")
    if params.mu <= 0:
        raise UnsupportedRegimeError("bound requires mu > 0")
    return (n * (np.log(params.mu) + np.log(params.eta))
            + n * (params.nu / params.mu) * np.exp(-params.c * (d - 1)))


def second_moment_bound(n, d, params):
    """mu^n eta^n exp[n (nu/mu) e^(-c(d-1))], an upper bound on E[p_x^2]
    for strings of Hamming weight >= n/2."""
    return float(np.exp(log_second_moment_bound(n, d, params)))


def general_noise_params(t):
    """The general-noise parameter block evaluated from a transfer map."""
    if not isinstance(t, PauliTransferMap):
        t = PauliTransferMap(ptm_matrix(t))
    a3 = sum(t.t(0, j) ** 2 for j in (1, 2, 3))
    block = sum(t.t(i, j) ** 2 for i in (1, 2, 3) for j in (1, 2, 3))
    a = a3 / 3.0
    b = 0.5 - (a3 + block) / 6.0
    c = 1.0 - block / 3.0
    mu = (-a3 + block - 3) / (4 * (block - 3))
    nu = (3 * a3 + block - 3) / (12 * (block - 3))
    t03 = t.t(0, 3)
    eta = np.sqrt(max((1 + t03) ** 2,
                      (t.t(1, 3) ** 2 + t.t(2, 3) ** 2 + t.t(3, 3) ** 2
                       + (1 + t03) ** 2) / 2.0))
    return GeneralNoiseParams(a=a, b=b, c=c, mu=mu, nu=nu, eta=float(eta))


def regime_check(order, p, q):
    """Sufficient condition for high-depth lack of anticoncentration."""
    params = second_moment_params(order, p, q)
    return params.r > 0 and 0 <= 4 * params.mu * params.eta < 1


def regime_check_general(params):
    return (params.mu >= 0 and params.nu >= 0 and 0 < params.c <= 1
            and 0 <= 4 * params.mu * params.eta < 1)


# ---------------------------------------
# Lightcone (low-depth) quantities
# ---------------------------------------

def lightcone_terms(n, w_x, r, d, kappa, tau, lam):
    """The three ingredients of the low-depth -log p_x lower bound."""
    if not 0 <= w_x <= n:
        raise ParameterError("w_x must lie in [0, n]")
    if kappa < 0.5:
        raise ParameterError("kappa must be >= 1/2")
    e_a_sigma = 2 * w_x * r - n * r
    lemma13_lower = 4 * (kappa - 0.5 + tau * lam ** d) ** 2 / 30.0 ** d
    rhs = n * np.log(2) + e_a_sigma + (n / (4 * 4.0 ** d)) * lemma13_lower
    return {"e_a_sigma": float(e_a_sigma),
            "lemma13_lower": float(lemma13_lower),
            "eq58_rhs_expectation": float(rhs)}


def logprob_tail_diagnostic(n, w_x, r, d, kappa, tau, lam, k):
    """Finite-n reading of the asymptotic low-depth statement.

    Returns the lower bound on E[-log p_x], the 2n variance bound, and
    the Chebyshev tail probability at deviation k.
    """
    terms = lightcone_terms(n, w_x, r, d, kappa, tau, lam)
    var_bound = 2.0 * n
    tail = min(1.0, var_bound / (k * k)) if k > 0 else 1.0
    return {"mean_lower": terms["eq58_rhs_expectation"],
            "var_bound": var_bound,
            "chebyshev_tail": float(tail)}


def paley_zygmund_bound(mean, second_moment, alpha):
    """Lower bound (1-alpha)^2 mean^2 / second_moment on Pr[p >= alpha*mean]."""
    if not 0 < alpha < 1:
        raise ParameterError("alpha must lie in (0, 1)")
    if second_moment < mean * mean:
        raise ParameterError("second moment below mean^2 is inconsistent")
    return (1 - alpha) ** 2 * mean * mean / second_moment


# ---------------------------------------
# Last layer of rotations
# ---------------------------------------

def bias(q, theta):
    """beta = q cos(2 theta), the measurement-axis bias of one qubit."""
    if not 0 <= q <= 1:
        raise ParameterError("q must lie in [0, 1]")
    return float(q * np.cos(2 * theta))


def last_layer_first_moment(q, theta, b):
    """E[p_{i,b}] = 1/2 + (-1)^b q cos(2 theta) / 2."""
    if b not in (0, 1):
        raise ParameterError("b must be a bit")
    return 0.5 + (-1) ** b * bias(q, theta) / 2.0


def last_layer_regime(thetas):
    """True iff every |cos 2 theta_i| clears the 4 - sqrt(15) floor."""
    return all(abs(np.cos(2 * th)) > ROTATION_REGIME_FLOOR for th in thetas)


# Dispatch table for the CLI's closedform subcommand.
FORMULAS = {
    "first_moment": (first_moment, ("n", "w_x", "order", "p", "q")),
    "marginal_first_moment":
        (marginal_first_moment, ("y_len", "w_y", "order", "p", "q")),
    "collision_bound": (collision_lower_bound, ("n", "r")),
    "log_collision_bound": (log1p_collision_lower_bound, ("n", "r")),
    "collision_bound_general": (collision_lower_bound_general, ("n", "t03")),
    "collision_bound_rotations":
        (collision_lower_bound_rotations, ("n", "q", "thetas")),
    "second_moment_bound": (
        lambda n, d, order, p, q: second_moment_bound(
            n, d, second_moment_params(order, p, q)),
        ("n", "d", "order", "p", "q")),
    "paley_zygmund": (paley_zygmund_bound, ("mean", "second_moment", "alpha")),
    "bias": (bias, ("q", "theta")),
    "last_layer_first_moment": (last_layer_first_moment, ("q", "theta", "b")),
}


def params_as_dict(params):
    return asdict(params)
