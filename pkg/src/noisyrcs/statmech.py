"""{I,S}-label statistical mechanics of two-copy averages.

The gate-averaged doubled state of a noisy circuit lives in the span of
per-site identity (I) and copy-swap (S) labels.  This module carries the
transfer rules on those labels: the pair-collapse rule of a two-qubit
gate, the single-site (a, b) rule, the closed-form recursions for the
all-single-gate comparison ensemble, the last-layer correction factors,
and a trajectory dynamic program used as a cross-check of the doubled
superoperator at tiny sizes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._linalg import SWAP_2
from .channels import doubled_apply, werner_pair_coeffs
from .circuits import circuit_shape, two_copy_moment_propagate
from .errors import ParameterError

PAIR_COLLAPSE = {
    ("I", "I"): {("I", "I"): 1.0},
    ("S", "S"): {("S", "S"): 1.0},
    ("I", "S"): {("I", "I"): 0.4, ("S", "S"): 0.4},
    ("S", "I"): {("I", "I"): 0.4, ("S", "S"): 0.4},
}


def pair_collapse(labels):
    """Two-copy gate average on a pair of site labels."""
    key = tuple(labels)
    if key not in PAIR_COLLAPSE:
        raise ParameterError("labels must be a pair over {I, S}")
    return dict(PAIR_COLLAPSE[key])


# ---------------------------------------
# Single-site recursions
# ---------------------------------------

@dataclass(frozen=True)
class Prop81State:
    """Coefficient x_m of the decomposition (1/10)(2I+S) + x_m (I-2S)."""
    m: int
    x_iterated: float
    x_closed: float          # NaN when the closed form is undefined
    closed_form_valid: bool


def prop_8_1_state(a, b, m):
    """Single-site state after m noise-plus-gate-average rounds."""
    if m < 0:
        raise ParameterError("m must be >= 0")
    rate = 1 - a - 2 * b
    drive = (-2 * a + b) / 10.0
    x = -1.0 / 30.0
    for _ in range(m):
        x = rate * x + drive
    if a + 2 * b != 0:
        fixed = drive / (a + 2 * b)
        closed = fixed + rate ** m * (-1.0 / 30.0 - fixed)
        return Prop81State(m=m, x_iterated=x, x_closed=float(closed),
                           closed_form_valid=True)
    return Prop81State(m=m, x_iterated=x, x_closed=float("nan"),
                       closed_form_valid=False)


@dataclass(frozen=True)
class SequenceCoeffs:
    """M^m I4 = x I4 + y S and M^m S = z I4 + w S for the single-site
    noise-plus-twirl map M."""
    m: int
    x: float
    y: float
    z: float
    w: float
    via_matrix: bool   # True when a = 0 forced the matrix fallback


def _sequence_matrix(a, b, m):
    mat = np.array([[1 - a, b], [2 * a, 1 - 2 * b]])
    acc = np.linalg.matrix_power(mat, m)
    return acc[:, 0], acc[:, 1]


def sequence_coeffs(a, b, m):
    if m < 0:
        raise ParameterError("m must be >= 0")
    if a == 0:
        (x, y), (z, w) = _sequence_matrix(a, b, m)
        return SequenceCoeffs(m=m, x=float(x), y=float(y), z=float(z),
                              w=float(w), via_matrix=True)
    rate = 1 - a - 2 * b
    ratio = b / a
    x = 1 - (1 - rate ** m) / (1 + 2 * ratio)
    y = (1 - rate ** m) / (0.5 + ratio)
    z = 0.5 - (0.5 + ratio * rate ** m) / (1 + 2 * ratio)
    w = (0.5 + ratio * rate ** m) / (0.5 + ratio)
    return SequenceCoeffs(m=m, x=float(x), y=float(y), z=float(z),
                          w=float(w), via_matrix=False)


def modified_ensemble_second_moment(n, d, a, b):
    """E[p_x^2] = (3/10 - x_{d-1})^n for the all-single-gate ensemble
    with the final noise layer removed."""
    if n < 1 or d < 1:
        raise ParameterError("need n >= 1 and d >= 1")
    if not 0 <= 1 - a - 2 * b <= 1:
        raise ParameterError("need 0 <= 1 - a - 2b <= 1")
    state = prop_8_1_state(a, b, d - 1)
    return float((0.3 - state.x_iterated) ** n)


def last_layer_correction(x_bits, r):
    """prod_j e_j with e_j = (1+r)^2 on zeros and (1-r)^2 on ones."""
    if not 0 <= r <= 1:
        raise ParameterError("r must lie in [0, 1]")
    out = 1.0
    for bit in _as_bits(x_bits):
        out *= (1 - r) ** 2 if bit else (1 + r) ** 2
    return out


def _as_bits(x_bits):
    if isinstance(x_bits, str):
        return [int(c) for c in x_bits]
    return [int(b) for b in x_bits]


# ---------------------------------------
# Monotonicity comparison
# ---------------------------------------

@dataclass(frozen=True)
class MonotonicityRecord:
    n: int
    depth: int
    exact_two_qubit: float      # E[p_x^2] of the brickwork ensemble
    closed_single_qubit: float  # closed form for the modified ensemble
    slack: float
    holds: bool


def monotonicity_check(n, depth, channel, tol=1e-10):
    """Exact two-qubit-gate second moment vs the single-gate closed form.

    Both ensembles have the final noise layer removed; the modified
    (single-gate) ensemble upper bounds the brickwork one whenever
    0 <= 1 - a - 2b <= 1.
    """
    if n > 5:
        raise ParameterError("comparison limited to n <= 5")
    shape = circuit_shape(n, depth)
    exact = two_copy_moment_propagate(shape, channel)
    pc = werner_pair_coeffs(channel)
    closed = modified_ensemble_second_moment(n, depth, pc.a, pc.b)
    lhs = float(np.max(exact.e_p2))
    return MonotonicityRecord(n=n, depth=depth, exact_two_qubit=lhs,
                              closed_single_qubit=closed,
                              slack=closed - lhs,
                              holds=bool(lhs <= closed + tol))


# ---------------------------------------
# Trajectory dynamic program (cross-check only)
# ---------------------------------------

def _site_traces(channel):
    """Tr[(N(x)N)(g)] and Tr[S (N(x)N)(g)] for g in {I, S}."""
    out = {}
    for name, op in (("I", np.eye(4, dtype=complex)), ("S", SWAP_2)):
        img = doubled_apply(channel, op)
        out[name] = (np.trace(img).real, np.trace(SWAP_2 @ img).real)
    return out


def _pair_gate_table(channel):
    """Transition weights of a noisy two-qubit gate on label pairs."""
    traces = _site_traces(channel)
    table = {}
    for gi, gj in itertools.product("IS", repeat=2):
        ti = traces[gi][0] * traces[gj][0]
        ts = traces[gi][1] * traces[gj][1]
        # Gram [[16, 4], [4, 16]] on span{doubled identity, pair swap}
        c_ii = (16 * ti - 4 * ts) / 240.0
        c_ss = (16 * ts - 4 * ti) / 240.0
        table[(gi, gj)] = {("I", "I"): c_ii, ("S", "S"): c_ss}
    return table


def _single_gate_table(channel):
    traces = _site_traces(channel)
    table = {}
    for g in "IS":
        ti, ts = traces[g]
        c_i = (4 * ti - 2 * ts) / 12.0
        c_s = (4 * ts - 2 * ti) / 12.0
        table[g] = {"I": c_i, "S": c_s}
    return table


def trajectory_second_moment(n, depth, channel, layout="brickwork"):
    """E[p_x^2] of a noisy gate ensemble (final noise removed), summed
    over weighted {I,S}^n label trajectories.

    Exponential in n and depth; intended purely as an independent check
    of the doubled-superoperator propagation (n <= 3, depth <= 6).
    Brickwork needs even n; use the singles layout for odd n.
    """
    if n > 3 or depth > 6:
        raise ParameterError("trajectory sum limited to n <= 3, depth <= 6")
    shape = circuit_shape(n, depth, layout=layout)
    pair_t = _pair_gate_table(channel)
    single_t = _single_gate_table(channel)

    def initial_weights(layer):
        # First gate layer applied to the doubled |0..0><0..0|: each
        # two-qubit gate contributes 1/20 to II and SS, each single gate
        # 1/6 to I and S.
        weights = {(): 1.0}
        for gate in layer:
            new = {}
            options = ([(("I", "I"), 0.05), (("S", "S"), 0.05)]
                       if len(gate.qubits) == 2
                       else [(("I",), 1 / 6), (("S",), 1 / 6)])
            for labels, w in weights.items():
                for add, c in options:
                    new[labels + add] = new.get(labels + add, 0.0) + w * c
            weights = new
        return weights

    def step(weights, layer):
        # Noise on every site followed by the layer's gate averages.
        new = {}
        for labels, w in weights.items():
            per_gate = []
            for gate in layer:
                if len(gate.qubits) == 2:
                    li = labels[gate.qubits[0]]
                    lj = labels[gate.qubits[1]]
                    per_gate.append([(out, c) for out, c in
                                     pair_t[(li, lj)].items()])
                else:
                    li = labels[gate.qubits[0]]
                    per_gate.append([((out,), c) for out, c in
                                     single_t[li].items()])
            for combo in itertools.product(*per_gate):
                out = [None] * n
                coeff = w
                for gate, (olabels, c) in zip(layer, combo):
                    coeff *= c
                    for q, lab in zip(gate.qubits, olabels):
                        out[q] = lab
                key = tuple(out)
                new[key] = new.get(key, 0.0) + coeff
        return new

    # Gate supports are position-ordered within a layer, so the label
    # tuple built by initial_weights lines up with qubit indices.
    weights = initial_weights(shape.layers[0])
    weights = {tuple(_flatten_first_layer(shape.layers[0], k)): v
               for k, v in weights.items()}
    for layer in shape.layers[1:]:
        weights = step(weights, layer)
    # No final noise layer: every label reads out as 1 against |xx>.
    return float(sum(weights.values()))


def _flatten_first_layer(layer, labels):
    out = [None] * sum(len(g.qubits) for g in layer)
    i = 0
    for gate in layer:
        for q in gate.qubits:
            out[q] = labels[i]
            i += 1
    return out
