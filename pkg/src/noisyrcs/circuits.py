"""Exact circuit back end.

Brickwork layouts of Haar gates, density-matrix evolution with per-gate
noise, output distributions with marginals/conditionals, XEB, and the
exact two-copy (second-moment) propagation used as the oracle for every
collision-probability statement.

Bit ordering: qubit 0 owns the most significant bit of a bitstring index,
so bitstring x maps to integer index int(x, 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._linalg import _support_back, _support_front, apply_superop, apply_unitary
from .channels import channel_from_json, channel_to_json, rotation_unitary
from .errors import (DegenerateConditioningError, DimensionError,
                     ParameterError)

MAX_SIMULATE_QUBITS = 12
MAX_TWO_COPY_QUBITS = 6
CONDITIONING_FLOOR = 1e-14

PLACEMENT_MODES = ("after_every_gate_with_final_layer",
                   "no_final_noise_layer",
                   "fixed_final_rotations")


@dataclass(frozen=True)
class NoisePlacement:
    """Where noise sits relative to the gate layers.

    ``channel`` may be None for the noiseless ensemble.  In
    ``fixed_final_rotations`` mode every layer (including the last) is
    noisy and the fixed rotations are applied noiselessly afterwards.
    """
    mode: str = "after_every_gate_with_final_layer"
    channel: object = None
    final_rotations: tuple = None

    def __post_init__(self):
        if self.mode not in PLACEMENT_MODES:
            raise ParameterError(f"unknown placement mode {self.mode!r}")
        if self.mode == "fixed_final_rotations" and not self.final_rotations:
            raise ParameterError(
                "fixed_final_rotations requires the rotation list")


@dataclass(frozen=True)
class Gate:
    qubits: tuple
    unitary: object = None  # None in a circuit shape


@dataclass
class Circuit:
    n: int
    depth: int
    layers: list
    placement: NoisePlacement = field(
        default_factory=lambda: NoisePlacement(mode="no_final_noise_layer"))

    def __post_init__(self):
        for layer in self.layers:
            covered = sorted(q for g in layer for q in g.qubits)
            if covered != list(range(self.n)):
                raise ParameterError("each layer must cover all qubits once")
            for g in layer:
                if len(g.qubits) == 2 and abs(g.qubits[0] - g.qubits[1]) != 1:
                    raise ParameterError(
                        "two-qubit gates must be nearest-neighbour")
        if (self.placement.mode == "fixed_final_rotations"
                and len(self.placement.final_rotations) != self.n):
            raise ParameterError(
                "need exactly one (theta, phi) pair per qubit")


def sample_haar_unitary(dim, rng):
    """Haar-random U(dim) via QR of a complex Ginibre matrix."""
    if dim not in (2, 4):
        raise DimensionError("supported gate dimensions are 2 and 4")
    z = (rng.standard_normal((dim, dim))
         + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def brickwork_supports(n, depth):
    """Alternating-offset nearest-neighbour layout (open boundary).

    n = 1 is the degenerate single-wire case (one single-qubit gate per
    layer); all other odd n are rejected.
    """
    if n == 1:
        return [[(0,)] for _ in range(depth)]
    if n % 2 != 0:
        raise ParameterError("qubit count must be even (or 1)")
    if depth < 1:
        raise ParameterError("depth must be >= 1")
    layers = []
    for layer in range(depth):
        if layer % 2 == 0:
            layers.append([(i, i + 1) for i in range(0, n, 2)])
        else:
            supports = [(0,)]
            supports += [(i, i + 1) for i in range(1, n - 1, 2)]
            supports.append((n - 1,))
            layers.append(supports)
    return layers


def singles_supports(n, depth):
    """All-single-qubit-gate layout (the modified comparison ensemble)."""
    if n < 1 or depth < 1:
        raise ParameterError("need n >= 1 and depth >= 1")
    return [[(i,) for i in range(n)] for _ in range(depth)]


def parallel_supports(n, depth):
    """Brickwork extended to odd n: the trailing qubit of an even layer
    (and the leading one of an odd layer) gets a single-qubit gate.

    The standard layout demands even n; this variant is the pluggable
    alternative for odd sizes, still parallel and nearest-neighbour.
    """
    if n % 2 == 0 or n == 1:
        return brickwork_supports(n, depth)
    if depth < 1:
        raise ParameterError("depth must be >= 1")
    layers = []
    for layer in range(depth):
        if layer % 2 == 0:
            supports = [(i, i + 1) for i in range(0, n - 1, 2)]
            supports.append((n - 1,))
        else:
            supports = [(0,)]
            supports += [(i, i + 1) for i in range(1, n, 2)]
        layers.append(supports)
    return layers


_LAYOUTS = {"brickwork": brickwork_supports, "singles": singles_supports,
            "parallel": parallel_supports}


def circuit_shape(n, depth, placement=None, layout="brickwork"):
    """A Circuit with gate positions but no sampled unitaries."""
    supports = _LAYOUTS[layout](n, depth)
    layers = [[Gate(qubits=s) for s in layer] for layer in supports]
    placement = placement or NoisePlacement(mode="no_final_noise_layer")
    return Circuit(n=n, depth=depth, layers=layers, placement=placement)


def build_brickwork(n, depth, rng, placement=None, layout="brickwork"):
    """Sample a brickwork circuit of Haar gates."""
    supports = _LAYOUTS[layout](n, depth)
    layers = [[Gate(qubits=s, unitary=sample_haar_unitary(2 ** len(s), rng))
               for s in layer] for layer in supports]
    placement = placement or NoisePlacement(mode="no_final_noise_layer")
    return Circuit(n=n, depth=depth, layers=layers, placement=placement)


def _noisy_layers(depth, mode):
    if mode == "no_final_noise_layer":
        return set(range(depth - 1))
    return set(range(depth))


def simulate(circuit):
    """Evolve |0^n><0^n| through the circuit; returns the density matrix."""
    n = circuit.n
    if n > MAX_SIMULATE_QUBITS:
        raise DimensionError(
            f"simulate supports up to {MAX_SIMULATE_QUBITS} qubits")
    rho = np.zeros((2 ** n, 2 ** n), dtype=complex)
    rho[0, 0] = 1.0
    placement = circuit.placement
    sop = placement.channel.superop() if placement.channel is not None else None
    noisy = _noisy_layers(circuit.depth, placement.mode)
    for idx, layer in enumerate(circuit.layers):
        for gate in layer:
            rho = apply_unitary(rho, gate.unitary, gate.qubits, n)
        if sop is not None and idx in noisy:
            for q in range(n):
                rho = apply_superop(rho, sop, q, n)
    if placement.mode == "fixed_final_rotations":
        for q, (theta, phi) in enumerate(placement.final_rotations):
            rho = apply_unitary(rho, rotation_unitary(theta, phi), (q,), n)
    return rho


def check_density_matrix(rho, herm_tol=1e-10, trace_tol=1e-10,
                         eig_tol=-1e-9):
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    trace = abs(np.trace(rho).real - 1.0)
    eig_min = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    ok = herm <= herm_tol and trace <= trace_tol and eig_min >= eig_tol
    return ok, {"hermiticity": herm, "trace_deviation": trace,
                "min_eigenvalue": eig_min}


class OutputDistribution:
    """Measurement distribution over bitstrings; x_1 is the leftmost bit."""

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        n = int(np.log2(probs.size))
        if 2 ** n != probs.size:
            raise DimensionError("length must be a power of two")
        self.probs = probs
        self.n = n

    def prob(self, x):
        return float(self.probs[_string_index(x, self.n)])

    def marginal(self, qubits, values):
        """Pr(X_q = v for each (q, v) pair)."""
        qubits = list(qubits)
        values = list(values)
        if len(qubits) != len(values):
            raise ParameterError("one value per qubit")
        if any(not 0 <= q < self.n for q in qubits):
            raise ParameterError("qubit index out of range")
        t = self.probs.reshape((2,) * self.n)
        idx = [slice(None)] * self.n
        for q, v in zip(qubits, values):
            idx[q] = int(v)
        return float(np.sum(t[tuple(idx)]))

    def conditional(self, i, x_i, conditioning):
        """Pr(X_i = x_i | X_j = v for (j, v) in conditioning)."""
        cond_q = sorted(conditioning)
        cond_v = [conditioning[j] for j in cond_q]
        denom = self.marginal(cond_q, cond_v)
        if denom < CONDITIONING_FLOOR:
            raise DegenerateConditioningError(
                f"conditioning event has probability {denom:.3e}")
        joint = self.marginal(cond_q + [i], cond_v + [x_i])
        return joint / denom


def _string_index(x, n):
    if isinstance(x, str):
        if len(x) != n:
            raise ParameterError("bitstring length mismatch")
        return int(x, 2)
    return int(x)


def output_distribution(rho):
    return OutputDistribution(np.real(np.diag(rho)))


def collision_probability(dist):
    return float(np.sum(dist.probs ** 2))


def uniform_l2_distance(dist):
    """2^n * sum_x (p_x - 2^-n)^2, the scaled distance to uniform."""
    u = 1.0 / dist.probs.size
    return float(dist.probs.size * np.sum((dist.probs - u) ** 2))


def xeb_raw(ideal, noisy):
    if ideal.n != noisy.n:
        raise DimensionError("distributions differ in size")
    return float(2 ** ideal.n * np.dot(ideal.probs, noisy.probs))


def xeb(ideal, noisy):
    """Shifted linear cross-entropy; 0 for a uniform noisy distribution."""
    return xeb_raw(ideal, noisy) - 1.0


# ---------------------------------------
# Exact two-copy (second moment) propagation
# ---------------------------------------

def _swap_matrix(k):
    """Swap of the two copy registers on a 2k-qubit doubled support."""
    d = 2 ** k
    s = np.zeros((d * d, d * d))
    for u in range(d):
        for v in range(d):
            s[u * d + v, v * d + u] = 1.0
    return s


def _pair_average(x, support, n, n2):
    """Replace the Haar gate on ``support`` by its exact two-copy average."""
    axes = tuple(support) + tuple(q + n for q in support)
    block, order = _support_front(x, n2, axes)
    d = 2 ** len(support)
    dd = d * d
    s = _swap_matrix(len(support))
    t1 = np.einsum("aras->rs", block)
    t2 = np.einsum("ab,bras->rs", s, block)
    det = dd * dd - d * d
    y1 = (dd * t1 - d * t2) / det
    y2 = (dd * t2 - d * t1) / det
    block = (np.einsum("ac,rs->arcs", np.eye(dd), y1)
             + np.einsum("ac,rs->arcs", s.astype(complex), y2))
    return _support_back(block, n2, order)


@dataclass(frozen=True)
class TwoCopyResult:
    n: int
    e_p2: object          # E[p_x^2] for every bitstring, length 2^n
    e_sum_p2: float       # E[sum_x p_x^2]
    z: float              # 2^n E[sum p^2] - 1
    doubled: object       # gate-averaged E[rho (x) rho]


def two_copy_moment_propagate(shape, channel=None):
    """Exact gate-averaged E[rho (x) rho] for a circuit shape.

    Each Haar gate becomes the projection onto span{doubled identity,
    copy swap} on its support; each noise site acts independently on the
    two copies.  Yields exact second moments with no sampling error.
    """
    n = shape.n
    if n > MAX_TWO_COPY_QUBITS:
        raise DimensionError(
            f"two-copy propagation supports up to {MAX_TWO_COPY_QUBITS} qubits")
    placement = shape.placement
    if channel is None:
        channel = placement.channel
    n2 = 2 * n
    x = np.zeros((4 ** n, 4 ** n), dtype=complex)
    x[0, 0] = 1.0
    sop = channel.superop() if channel is not None else None
    noisy = _noisy_layers(shape.depth, placement.mode)
    for idx, layer in enumerate(shape.layers):
        for gate in layer:
            x = _pair_average(x, gate.qubits, n, n2)
        if sop is not None and idx in noisy:
            for q in range(n):
                x = apply_superop(x, sop, q, n2)
                x = apply_superop(x, sop, q + n, n2)
    if placement.mode == "fixed_final_rotations":
        for q, (theta, phi) in enumerate(placement.final_rotations):
            u = rotation_unitary(theta, phi)
            x = apply_unitary(x, u, (q,), n2)
            x = apply_unitary(x, u, (q + n,), n2)
    idx = np.arange(2 ** n)
    diag = np.real(np.diag(x))
    e_p2 = diag[(idx << n) | idx]
    e_sum = float(np.sum(e_p2))
    return TwoCopyResult(n=n, e_p2=e_p2, e_sum_p2=e_sum,
                         z=float(2 ** n * e_sum - 1.0), doubled=x)


# ---------------------------------------
# Serialization
# ---------------------------------------

def circuit_to_json(circuit, include_unitaries=True):
    layers = []
    for idx, layer in enumerate(circuit.layers):
        gates = []
        for g in layer:
            entry = {"qubits": list(g.qubits)}
            if include_unitaries and g.unitary is not None:
                entry["unitary"] = [[[float(v.real), float(v.imag)]
                                     for v in row] for row in g.unitary]
            gates.append(entry)
        layers.append({"layer": idx, "gates": gates})
    placement = {"mode": circuit.placement.mode,
                 "channel": (channel_to_json(circuit.placement.channel)
                             if circuit.placement.channel is not None
                             else None),
                 "final_rotations": (
                     [list(r) for r in circuit.placement.final_rotations]
                     if circuit.placement.final_rotations else None)}
    return {"n": circuit.n, "depth": circuit.depth,
            "placement": placement, "layers": layers}


def circuit_from_json(obj):
    pl = obj["placement"]
    placement = NoisePlacement(
        mode=pl["mode"],
        channel=(channel_from_json(pl["channel"])
                 if pl.get("channel") else None),
        final_rotations=(tuple(tuple(r) for r in pl["final_rotations"])
                         if pl.get("final_rotations") else None))
    layers = []
    for layer in obj["layers"]:
        gates = []
        for g in layer["gates"]:
            u = None
            if "unitary" in g:
                u = np.array([[complex(re, im) for re, im in row]
                              for row in g["unitary"]])
            gates.append(Gate(qubits=tuple(g["qubits"]), unitary=u))
        layers.append(gates)
    return Circuit(n=obj["n"], depth=obj["depth"], layers=layers,
                   placement=placement)
