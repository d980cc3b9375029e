"""Small linear-algebra helpers: Pauli basis and local operator application.

Multi-qubit operators are stored as dense (2**n, 2**n) complex matrices.
Qubit 0 owns the most significant bit of the row/column index.
"""

from __future__ import annotations

import numpy as np

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# Label convention: {0,1,2,3} = {I,X,Y,Z}.
PAULIS = (SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z)

# Swap of the two tensor factors of C^2 (x) C^2.
SWAP_2 = np.array(
    [[1, 0, 0, 0],
     [0, 0, 1, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1]], dtype=complex)


def _support_front(mat, n, qubits):
    """View ``mat`` with the row/col axes of ``qubits`` moved to the front.

    Returns an array of shape (D, R, D, R) with D = 2**len(qubits) and
    R = 2**(n - len(qubits)), plus the axis order used (for undoing).
    """
    k = len(qubits)
    rest = [q for q in range(n) if q not in qubits]
    order = list(qubits) + rest
    t = mat.reshape((2,) * (2 * n))
    perm = order + [n + q for q in order]
    t = np.transpose(t, perm)
    return t.reshape(2 ** k, 2 ** (n - k), 2 ** k, 2 ** (n - k)), order


def _support_back(block, n, order):
    """Inverse of :func:`_support_front`."""
    t = block.reshape((2,) * (2 * n))
    perm = order + [n + q for q in order]
    inv = np.argsort(perm)
    t = np.transpose(t, inv)
    return t.reshape(2 ** n, 2 ** n)


def apply_unitary(mat, u, qubits, n):
    """Conjugate ``mat`` by a unitary acting on the given qubits."""
    block, order = _support_front(mat, n, tuple(qubits))
    block = np.einsum("ab,bRcS,dc->aRdS", u, block, u.conj())
    return _support_back(block, n, order)


def apply_superop(mat, sop, qubit, n):
    """Apply a single-qubit superoperator tensor to one qubit of ``mat``.

    ``sop`` has shape (2, 2, 2, 2) with N(X)[i, j] = sum_ab sop[i,j,a,b] X[a,b].
    """
    block, order = _support_front(mat, n, (qubit,))
    block = np.einsum("ijab,aRbS->iRjS", sop, block)
    return _support_back(block, n, order)


def pauli_coefficients(mat):
    """Coefficients c with mat = sum_i c_i sigma_i (single qubit)."""
    return np.array([np.trace(p @ mat) / 2 for p in PAULIS])


def from_pauli_coefficients(coeffs):
    return sum(c * p for c, p in zip(coeffs, PAULIS))


def dagger(mat):
    return mat.conj().T
