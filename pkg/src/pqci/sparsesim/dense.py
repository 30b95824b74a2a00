"""Dense reference backend used to cross-check the sparse simulator.

Gates act through their literal matrices on the full ``2**width`` vector.
Index ``i`` of the vector is the basis key, so qubit ``q`` is bit ``q`` of
``i``, matching the sparse backend.
"""

from __future__ import annotations

import numpy as np

from pqci.sparsesim.layout import RegisterLayout
from pqci.sparsesim.state import PRUNE_TOL, SimulationError, SparseState

MAX_DENSE_QUBITS = 12

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def _width(vec: np.ndarray) -> int:
    n = int(vec.size).bit_length() - 1
    if vec.ndim != 1 or vec.size != 1 << n:
        raise SimulationError("dense state must be a 1-d vector of length 2**n")
    if n > MAX_DENSE_QUBITS:
        raise SimulationError(f"dense backend is limited to {MAX_DENSE_QUBITS} qubits, got {n}")
    return n


def _axis(n: int, q: int) -> int:
    # C-order reshape puts the most significant bit on axis 0
    if not 0 <= q < n:
        raise SimulationError(f"qubit {q} out of range for width {n}")
    return n - 1 - q


def apply_1q(vec: np.ndarray, matrix: np.ndarray, q: int) -> np.ndarray:
    n = _width(vec)
    ax = _axis(n, q)
    psi = vec.reshape((2,) * n)
    psi = np.tensordot(matrix, psi, axes=([1], [ax]))
    return np.moveaxis(psi, 0, ax).reshape(-1)


def apply_2q(vec: np.ndarray, matrix: np.ndarray, q_hi: int, q_lo: int) -> np.ndarray:
    """Apply a 4x4 matrix whose row index is ``2*bit(q_hi) + bit(q_lo)``."""
    n = _width(vec)
    if q_hi == q_lo:
        raise SimulationError("two-qubit gate needs distinct qubits")
    a, b = _axis(n, q_hi), _axis(n, q_lo)
    psi = vec.reshape((2,) * n)
    psi = np.tensordot(matrix.reshape(2, 2, 2, 2), psi, axes=([2, 3], [a, b]))
    return np.moveaxis(psi, [0, 1], [a, b]).reshape(-1)


def dense_x(vec, q):
    return apply_1q(vec, X, q)


def dense_z(vec, q):
    return apply_1q(vec, Z, q)


def dense_h(vec, q):
    return apply_1q(vec, H, q)


def dense_cnot(vec, control, target):
    return apply_2q(vec, CNOT, control, target)


def dense_permutation(vec, qubit_groups, bijection):
    """Permute basis states by a map on the joint value of `qubit_groups`.

    Each group is a list of qubit indices, least significant first; the first
    group supplies the lowest bits of the joint value.
    """
    n = _width(vec)
    qubits = [q for group in qubit_groups for q in group]
    if len(set(qubits)) != len(qubits):
        raise SimulationError("permutation registers overlap")
    k = len(qubits)
    image = [bijection(v) for v in range(1 << k)]
    if sorted(image) != list(range(1 << k)):
        raise SimulationError("map is not a permutation")
    out = np.zeros_like(vec)
    for i in range(1 << n):
        v = sum(((i >> q) & 1) << pos for pos, q in enumerate(qubits))
        w = image[v]
        j = i
        for pos, q in enumerate(qubits):
            j = (j & ~(1 << q)) | (((w >> pos) & 1) << q)
        out[j] = vec[i]
    return out


def dense_controlled(vec, controls, inner):
    """Apply `inner` on the subspace where every (qubit, bit) control matches."""
    n = _width(vec)
    idx = np.arange(1 << n)
    sel = np.ones(1 << n, dtype=bool)
    for q, bit in controls:
        _axis(n, q)
        sel &= ((idx >> q) & 1) == bit
    moved = inner(np.where(sel, vec, 0))
    return np.where(sel, moved, vec)


_GATES = {
    "x": dense_x,
    "z": dense_z,
    "h": dense_h,
    "cnot": dense_cnot,
    "permutation": dense_permutation,
    "controlled": dense_controlled,
}


def dense_reference_apply(vec: np.ndarray, gate: str, *args) -> np.ndarray:
    try:
        fn = _GATES[gate]
    except KeyError:
        raise SimulationError(f"unknown gate {gate!r}") from None
    return fn(vec, *args)


def to_dense(state: SparseState) -> np.ndarray:
    if state.width > MAX_DENSE_QUBITS:
        raise SimulationError(f"dense backend is limited to {MAX_DENSE_QUBITS} qubits")
    vec = np.zeros(1 << state.width, dtype=complex)
    for k, a in state.terms.items():
        vec[k] = a
    return vec


def from_dense(vec: np.ndarray, layout: RegisterLayout) -> SparseState:
    if vec.size != 1 << layout.width:
        raise SimulationError("vector length does not match layout width")
    return SparseState(layout, {int(i): complex(vec[i]) for i in np.flatnonzero(np.abs(vec) >= PRUNE_TOL)})
