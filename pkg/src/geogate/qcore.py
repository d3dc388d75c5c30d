"""Dense complex linear algebra for one and two qubits.

Operators and states are plain ``numpy`` arrays of dtype ``complex128``.
Every function here accepts stacks of matrices (leading batch axes) where
that makes sense, so schedule compilation can exponentiate thousands of
step Hamiltonians in one call.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_CLAMP = -1e-8

_PAULI = {
    "0": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_PAULI["i"] = _PAULI["0"]

PAULI_AXES = ("0", "x", "y", "z")


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class NotHermitianError(ValueError):
    """A Hermitian operator was required."""


def pauli(axis: str) -> np.ndarray:
    """Return the 2x2 identity (``'0'``) or the Pauli matrix for ``axis``."""
    try:
        return _PAULI[str(axis).lower()].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}; expected one of 0, x, y, z") from None


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product of two single-qubit operators, qubit ``a`` on the left."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise DimensionError(f"kron expects two 2x2 operators, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def on_qubit(op: np.ndarray, target: str, n_qubits: int) -> np.ndarray:
    """Embed a single-qubit operator acting on ``target`` ('a' or 'b')."""
    op = np.asarray(op, dtype=complex)
    if n_qubits == 1:
        return op
    eye = np.eye(2, dtype=complex)
    if target == "a":
        return kron(op, eye)
    if target == "b":
        return kron(eye, op)
    raise ValueError(f"target must be 'a' or 'b' for two qubits, got {target!r}")


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= tol)


def eigh(h: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix (or stack of them).

    Returns ascending real eigenvalues and the unitary matrix whose columns
    are the eigenvectors, so that ``h = V @ diag(w) @ V^dagger``.
    Inputs further than ``tol`` (max-abs) from Hermitian are rejected.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise DimensionError(f"eigh needs square matrices, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    if not is_hermitian(h, tol * scale):
        raise NotHermitianError("eigh input is not Hermitian")
    return np.linalg.eigh(h)


def expm_antihermitian(h: np.ndarray, t: float | np.ndarray) -> np.ndarray:
    """Unitary propagator ``exp(-i h t)`` for Hermitian ``h``.

    ``t`` may be a scalar or an array broadcastable against the batch axes
    of ``h``.
    """
    w, v = eigh(h)
    phase = np.exp(-1j * w * np.asarray(t, dtype=float)[..., None])
    return (v * phase[..., None, :]) @ dagger(v)


def rotation(axis: str, angle: float) -> np.ndarray:
    """Single-qubit rotation ``exp(-i angle sigma_axis / 2)``."""
    return expm_antihermitian(pauli(axis), angle / 2.0)


def expect(psi: np.ndarray, o: np.ndarray) -> complex:
    """``<psi|o|psi>`` for a state vector (or a stack of them)."""
    psi = np.asarray(psi, dtype=complex)
    o = np.asarray(o, dtype=complex)
    if o.shape[-1] != psi.shape[-1]:
        raise DimensionError(f"state of dim {psi.shape[-1]} vs operator {o.shape}")
    return np.einsum("...i,ij,...j->...", psi.conj(), o, psi)


def clamp_eigenvalues(w: np.ndarray) -> np.ndarray:
    """Zero out eigenvalues below zero (statistical PSD estimates)."""
    return np.where(w > 0.0, w, 0.0)


def herm_sqrt(rho: np.ndarray) -> np.ndarray:
    """PSD square root; negative eigenvalues are clamped to zero first."""
    rho = np.asarray(rho, dtype=complex)
    rho = 0.5 * (rho + dagger(rho))
    w, v = np.linalg.eigh(rho)
    s = np.sqrt(clamp_eigenvalues(w))
    return (v * s[..., None, :]) @ dagger(v)


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def normalize(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return psi / np.linalg.norm(psi)


def check_density_matrix(rho: np.ndarray, *, herm_tol: float = 1e-10, trace_tol: float = 1e-9) -> None:
    """Raise ``ValueError`` if ``rho`` violates the density-matrix invariants."""
    rho = np.asarray(rho)
    if rho.shape not in ((2, 2), (4, 4)):
        raise DimensionError(f"density matrix must be 2x2 or 4x4, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError("density matrix has non-finite entries")
    if not is_hermitian(rho, herm_tol):
        raise NotHermitianError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {tr.real:.12g} != 1")
    w = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
    if w[0] < PSD_CLAMP:
        raise ValueError(f"density matrix has eigenvalue {w[0]:.3g} < {PSD_CLAMP}")


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the trace norm of ``a - b``."""
    d = np.asarray(a) - np.asarray(b)
    d = 0.5 * (d + dagger(d))
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(d))))


def pauli_basis(n_qubits: int) -> tuple[list[str], np.ndarray]:
    """Labels and matrices of the Pauli product basis (4 or 16 operators)."""
    if n_qubits == 1:
        labels = list(PAULI_AXES)
        return labels, np.stack([pauli(a) for a in labels])
    if n_qubits == 2:
        labels = [i + j for i in PAULI_AXES for j in PAULI_AXES]
        return labels, np.stack([kron(pauli(i), pauli(j)) for i in PAULI_AXES for j in PAULI_AXES])
    raise ValueError("only one or two qubits are supported")
