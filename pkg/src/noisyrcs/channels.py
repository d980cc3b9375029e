"""Single-qubit channel algebra.

Channels come in two concrete representations:

* :class:`KrausChannel` -- a list of Kraus matrices, the ground truth for
  the built-in noise kinds (amplitude damping, depolarizing, and their two
  compositions).
* :class:`PauliTransferMap` -- a 4x4 real transfer matrix for arbitrary
  (not necessarily CPTP) single-qubit maps.

Transfer-matrix conventions
---------------------------
The stored matrix is the standard superoperator form

    T[i][j] = (1/2) Tr[ sigma_i N(sigma_j) ],

whose row 0 is exactly (1, 0, 0, 0) for any trace-preserving map.  The
``t(i, j)`` accessor exposes the transposed "row vector" convention in
which sigma_i maps to sum_j t_ij sigma_j and the image of the identity is
I + t01 sx + t02 sy + t03 sz; both appear in the literature and mixing
them up silently flips unital and non-unital parts, hence the explicit
accessor.

Composition-kind naming: ``amp_then_dep`` builds N = N_amp o N_dep (the
depolarizing factor acts on the state first, amplitude damping second),
matching the symbol order of the composition; ``dep_then_amp`` is the
reverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import PAULIS, SIGMA_Z, SWAP_2, apply_superop, dagger
from .errors import CPTPError, DimensionError, ParameterError

COMPLETENESS_TOL = 1e-9
CHOI_PSD_TOL = -1e-9

CHANNEL_KINDS = ("amp_damp", "depolarizing", "amp_then_dep", "dep_then_amp",
                 "general_ptm")
ORDERINGS = ("amp_then_dep", "dep_then_amp")

_PAULI_ARR = np.array(PAULIS)


def _superop_to_choi(sop):
    # Choi C[(i,a),(j,b)] = N(E_ab)[i,j]
    return np.transpose(sop, (0, 2, 1, 3)).reshape(4, 4)


def _superop_to_ptm_matrix(sop):
    return 0.5 * np.real(
        np.einsum("ixy,yxab,jab->ij", _PAULI_ARR, sop, _PAULI_ARR))


def _ptm_matrix_to_superop(mat):
    return 0.5 * np.einsum("nm,mba,nij->ijab", mat, _PAULI_ARR, _PAULI_ARR)


class PauliTransferMap:
    """A single-qubit linear map stored as its 4x4 transfer matrix."""

    arity = 1

    def __init__(self, mat):
        mat = np.array(mat, dtype=float)
        if mat.shape != (4, 4):
            raise DimensionError("transfer matrix must be 4x4")
        if not np.array_equal(mat[0], [1.0, 0.0, 0.0, 0.0]):
            raise ParameterError(
                "row 0 of a transfer matrix must be exactly (1, 0, 0, 0)")
        self.mat = mat
        self.mat.flags.writeable = False
        choi = _superop_to_choi(self.superop())
        eigs = np.linalg.eigvalsh(0.5 * (choi + dagger(choi)))
        self.min_choi_eigenvalue = float(eigs[0])
        herm_dev = float(np.max(np.abs(choi - dagger(choi))))
        self.is_cptp = (self.min_choi_eigenvalue >= CHOI_PSD_TOL
                        and herm_dev <= 1e-12)

    def t(self, i, j):
        """Paper-convention entry: sigma_i -> sum_j t(i,j) sigma_j."""
        return float(self.mat[j, i])

    def superop(self):
        return _ptm_matrix_to_superop(self.mat)

    def apply(self, rho):
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (2, 2):
            raise DimensionError("expected a 2x2 operator")
        return apply_superop(rho, self.superop(), 0, 1)

    def adjoint_apply(self, a):
        a = np.asarray(a, dtype=complex)
        if a.shape != (2, 2):
            raise DimensionError("expected a 2x2 operator")
        return apply_superop(a, _ptm_matrix_to_superop(self.mat.T), 0, 1)

    def compose(self, other):
        """self o other (other acts first)."""
        return PauliTransferMap(self.mat @ ptm_matrix(other))

    def require_cptp(self):
        if not self.is_cptp:
            raise CPTPError(
                "map is not CPTP (min Choi eigenvalue %.3e)"
                % self.min_choi_eigenvalue,
                min_choi_eigenvalue=self.min_choi_eigenvalue)
        return self


class KrausChannel:
    """A CPTP map given by Kraus operators on one or two qubits."""

    def __init__(self, kraus_ops, kind=None, q=None, p=None):
        ops = [np.asarray(k, dtype=complex) for k in kraus_ops]
        if not ops:
            raise ParameterError("need at least one Kraus operator")
        dim = ops[0].shape[0]
        if dim not in (2, 4) or any(k.shape != (dim, dim) for k in ops):
            raise DimensionError("Kraus operators must be uniform 2x2 or 4x4")
        self.kraus_ops = ops
        self.arity = 1 if dim == 2 else 2
        self.kind = kind
        self.q = q
        self.p = p
        comp = sum(dagger(k) @ k for k in ops)
        if np.max(np.abs(comp - np.eye(dim))) > COMPLETENESS_TOL:
            raise CPTPError("Kraus completeness sum deviates from identity")
        choi = _superop_to_choi(self.superop()) if dim == 2 else self._choi4()
        eig_min = float(np.linalg.eigvalsh(choi)[0])
        if eig_min < CHOI_PSD_TOL:
            raise CPTPError("Choi matrix is not PSD",
                            min_choi_eigenvalue=eig_min)
        self.min_choi_eigenvalue = eig_min
        self.is_cptp = True

    def _choi4(self):
        dim = 4
        choi = np.zeros((dim * dim, dim * dim), dtype=complex)
        for k in self.kraus_ops:
            v = k.reshape(-1)  # vec of K in (out, in) index pairs
            # C[(i,a),(j,b)] = sum_k K[i,a] K*[j,b]
            choi += np.outer(v, v.conj())
        return choi

    def superop(self):
        """Tensor sop[i,j,a,b] with N(X)[i,j] = sum sop[i,j,a,b] X[a,b]."""
        return sum(np.einsum("ia,jb->ijab", k, k.conj())
                   for k in self.kraus_ops)

    def apply(self, rho):
        rho = np.asarray(rho, dtype=complex)
        dim = 2 ** self.arity
        if rho.shape != (dim, dim):
            raise DimensionError("operator dimension does not match arity")
        return sum(k @ rho @ dagger(k) for k in self.kraus_ops)

    def adjoint_apply(self, a):
        a = np.asarray(a, dtype=complex)
        dim = 2 ** self.arity
        if a.shape != (dim, dim):
            raise DimensionError("operator dimension does not match arity")
        return sum(dagger(k) @ a @ k for k in self.kraus_ops)

    def ptm(self):
        if self.arity != 1:
            raise DimensionError("transfer matrix defined for arity 1 only")
        mat = _superop_to_ptm_matrix(self.superop())
        mat[0] = [1.0, 0.0, 0.0, 0.0]  # exact by trace preservation
        return PauliTransferMap(mat)

    def t(self, i, j):
        return self.ptm().t(i, j)

    def compose(self, other):
        """self o other (other acts first); both arity 1."""
        if self.arity != 1 or getattr(other, "arity", 1) != 1:
            raise DimensionError("compose supports single-qubit channels")
        if isinstance(other, KrausChannel):
            return KrausChannel([a @ b for a in self.kraus_ops
                                 for b in other.kraus_ops])
        return self.ptm().compose(other)

    def doubled(self):
        """The two-copy channel N (x) N as a two-qubit KrausChannel."""
        if self.arity != 1:
            raise DimensionError("doubled() supports single-qubit channels")
        return KrausChannel([np.kron(a, b) for a in self.kraus_ops
                             for b in self.kraus_ops])


def ptm_matrix(channel):
    """The standard 4x4 transfer matrix of any single-qubit channel."""
    if isinstance(channel, PauliTransferMap):
        return channel.mat
    return channel.ptm().mat


def doubled_apply(channel, x):
    """(N (x) N)(X) for a 4x4 operator X on two copies of one qubit."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (4, 4):
        raise DimensionError("expected a 4x4 two-copy operator")
    if isinstance(channel, KrausChannel) and channel.arity == 1:
        return channel.doubled().apply(x)
    sop = channel.superop()
    return apply_superop(apply_superop(x, sop, 0, 2), sop, 1, 2)


# ---------------------------------------
# Channel constructors
# ---------------------------------------

def _check_unit(name, value):
    if value is None:
        raise ParameterError(f"{name} is required for this kind")
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {value}")
    return value


def _amp_damp_kraus(q):
    return [np.array([[1, 0], [0, np.sqrt(1 - q)]], dtype=complex),
            np.array([[0, np.sqrt(q)], [0, 0]], dtype=complex)]


def _depolarizing_kraus(p):
    return [np.sqrt(1 - 3 * p / 4) * PAULIS[0],
            np.sqrt(p / 4) * PAULIS[1],
            np.sqrt(p / 4) * PAULIS[2],
            np.sqrt(p / 4) * PAULIS[3]]


def make_channel(kind, q=None, p=None, t=None, require_cptp=False):
    """Construct a channel of the given kind.

    Returns a :class:`KrausChannel` for the standard kinds and a
    :class:`PauliTransferMap` for ``general_ptm``.  General maps are
    flagged (``is_cptp``) rather than rejected unless ``require_cptp``.
    """
    if kind == "amp_damp":
        q = _check_unit("q", q)
        return KrausChannel(_amp_damp_kraus(q), kind=kind, q=q, p=0.0)
    if kind == "depolarizing":
        p = _check_unit("p", p)
        return KrausChannel(_depolarizing_kraus(p), kind=kind, q=0.0, p=p)
    if kind == "amp_then_dep":
        q = _check_unit("q", q)
        p = _check_unit("p", p)
        amp, dep = _amp_damp_kraus(q), _depolarizing_kraus(p)
        return KrausChannel([a @ d for a in amp for d in dep],
                            kind=kind, q=q, p=p)
    if kind == "dep_then_amp":
        q = _check_unit("q", q)
        p = _check_unit("p", p)
        amp, dep = _amp_damp_kraus(q), _depolarizing_kraus(p)
        return KrausChannel([d @ a for d in dep for a in amp],
                            kind=kind, q=q, p=p)
    if kind == "general_ptm":
        if t is None:
            raise ParameterError("general_ptm requires the t matrix")
        m = PauliTransferMap(t)
        if require_cptp:
            m.require_cptp()
        return m
    raise ParameterError(f"unknown channel kind {kind!r}")


def channel_to_json(channel):
    """Serialize to the fixed {"kind","q","p","t"?} schema."""
    kind = getattr(channel, "kind", None)
    if isinstance(channel, PauliTransferMap) or kind is None:
        return {"kind": "general_ptm", "q": 0.0, "p": 0.0,
                "t": [[float(v) for v in row]
                      for row in ptm_matrix(channel)]}
    return {"kind": kind, "q": float(channel.q), "p": float(channel.p)}


def channel_from_json(obj):
    return make_channel(obj["kind"], q=obj.get("q"), p=obj.get("p"),
                        t=obj.get("t"))


# ---------------------------------------
# Scalar diagnostics
# ---------------------------------------

def r_value(order, p, q):
    """The surviving non-unital strength of the composed channel."""
    p = _check_unit("p", p)
    q = _check_unit("q", q)
    if order == "amp_then_dep":
        return q
    if order == "dep_then_amp":
        return q * (1 - p)
    raise ParameterError(f"unknown ordering {order!r}")


def channel_r(channel):
    """t03 of the channel: the sigma_z component of the image of I."""
    return channel.t(0, 3) if hasattr(channel, "t") \
        else PauliTransferMap(ptm_matrix(channel)).t(0, 3)


def twirl_strength(channel):
    """lambda of the Haar twirl: E_U[U* N(U rho U*) U] = (1-l)rho + l I/2."""
    if not getattr(channel, "is_cptp", False):
        raise CPTPError("twirl strength is defined for channels only")
    mat = ptm_matrix(channel)
    return float(1.0 - np.trace(mat[1:, 1:]) / 3.0)


@dataclass(frozen=True)
class PairCoefficients:
    """Action of the gate-averaged noisy block on the two-copy pair basis:
    I4 -> (1-a) I4 + 2a S and S -> b I4 + (1-2b) S; c = a + 2b."""
    a: float
    b: float
    c: float


def _project_pair(x):
    # Orthogonal projection of a 4x4 two-copy operator onto span{I4, S}.
    tr_i = np.trace(x).real
    tr_s = np.trace(SWAP_2 @ x).real
    # Gram matrix [[4, 2], [2, 4]]
    c_i = (4 * tr_i - 2 * tr_s) / 12.0
    c_s = (4 * tr_s - 2 * tr_i) / 12.0
    return c_i, c_s


def werner_pair_coeffs(channel):
    ci_i, cs_i = _project_pair(doubled_apply(channel, np.eye(4)))
    ci_s, cs_s = _project_pair(doubled_apply(channel, SWAP_2))
    a = cs_i / 2.0
    b = ci_s
    # redundant reads must agree with the (a, b) parameterization
    if abs(ci_i - (1 - a)) > 1e-9 or abs(cs_s - (1 - 2 * b)) > 1e-9:
        raise ParameterError("two-copy action is not of pair form")
    return PairCoefficients(a=float(a), b=float(b), c=float(a + 2 * b))


@dataclass(frozen=True)
class IteratedDiagonal:
    """Fit <0| N^d(|0><0|) |0> = kappa + tau * lambda^d."""
    kappa: float
    tau: float
    lam: float
    valid: bool


def iterated_zero_overlap(channel, d_max):
    """Exact sequence <0|N^d(|0><0|)|0> for d = 0..d_max plus a geometric fit.

    The sequence follows the Bloch-vector recursion v -> t0 + B v with
    (t0, B) read off the transfer matrix; the fit is valid when the z
    component evolves autonomously (t13 = t23 = 0), which holds for all
    the standard kinds.
    """
    if d_max < 1:
        raise ParameterError("d_max must be >= 1")
    mat = ptm_matrix(channel)
    v = np.array([0.0, 0.0, 1.0])
    seq = np.empty(d_max + 1)
    seq[0] = (1 + v[2]) / 2
    for d in range(1, d_max + 1):
        v = mat[1:, 0] + mat[1:, 1:] @ v
        seq[d] = (1 + v[2]) / 2
    lam = float(mat[3, 3])
    t03 = float(mat[3, 0])
    if abs(1 - lam) > 1e-12:
        z_star = t03 / (1 - lam)
    elif abs(t03) < 1e-14:
        z_star = 1.0  # identity-like: z is conserved
    else:
        z_star = np.nan
    kappa = (1 + z_star) / 2
    tau = 1 - kappa
    fitted = kappa + tau * lam ** np.arange(d_max + 1)
    valid = bool(np.isfinite(z_star)
                 and np.max(np.abs(seq - fitted)) < 1e-10)
    return seq, IteratedDiagonal(kappa=float(kappa), tau=float(tau),
                                 lam=lam, valid=valid)


# ---------------------------------------
# Last-layer rotations
# ---------------------------------------

def rotation_unitary(theta, phi=0.0):
    ct, st = np.cos(theta), np.sin(theta)
    return np.array([[ct * np.exp(1j * phi), st],
                     [-st, ct * np.exp(-1j * phi)]], dtype=complex)


def effective_rotation_noise(q, theta, phi=0.0):
    """Transfer matrix of U(theta,phi) o N_amp(q) o U(theta,phi)^dagger.

    This is the amplitude-damping channel as seen in the rotated
    measurement basis; its t03 entry is q*cos(2*theta).
    """
    q = _check_unit("q", q)
    u = rotation_unitary(theta, phi)
    ops = [u @ k @ dagger(u) for k in _amp_damp_kraus(q)]
    return KrausChannel(ops).ptm()
