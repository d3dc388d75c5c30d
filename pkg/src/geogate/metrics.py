"""Fidelities, entropy, Pauli tomography and two-qubit entanglement measures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import qcore

SIGMA_YY = qcore.kron(qcore.pauli("y"), qcore.pauli("y"))
JACKKNIFE_BLOCKS = 10
ZERO_CONCURRENCE = 1e-4


# ---------------------------------------------------------------- fidelity


def target_bloch_vector(theta: float, gamma_b: float) -> np.ndarray:
    return np.array([math.cos(theta) * math.cos(gamma_b), math.sin(gamma_b),
                     -math.sin(theta) * math.cos(gamma_b)])


def fidelity_footnote(sx: float, sy: float, sz: float, theta: float, gamma_b: float) -> float:
    """Gate fidelity from measured Pauli expectations.

    f = 1/2 [1 - sin(theta) cos(gamma_B) <sz> + cos(theta) cos(gamma_B) <sx>
             + sin(gamma_B) <sy>]
    """
    return 0.5 * (1.0 - math.sin(theta) * math.cos(gamma_b) * sz
                  + math.cos(theta) * math.cos(gamma_b) * sx + math.sin(gamma_b) * sy)


def tipped_frame(bloch: np.ndarray, theta: float) -> np.ndarray:
    """Bloch vector rotated by ``theta`` about y.

    The expectation-based fidelity reads its inputs in this frame; with it,
    ``fidelity_footnote(*tipped_frame(s, theta), theta, gamma_B)`` equals the
    overlap with the equatorial target state.
    """
    x, y, z = bloch
    c, s = math.cos(theta), math.sin(theta)
    return np.array([c * x + s * z, y, -s * x + c * z])


def fidelity_state(rho: np.ndarray, target: np.ndarray) -> float:
    """``<target|rho|target>``."""
    rho = np.asarray(rho, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if rho.shape != (target.shape[0],) * 2:
        raise qcore.DimensionError(f"rho {rho.shape} vs target {target.shape}")
    return float(np.clip(np.vdot(target, rho @ target).real, 0.0, 1.0))


def single_qubit_target(gamma_b: float) -> np.ndarray:
    """(exp(-i gamma_B/2)|0> + exp(i gamma_B/2)|1>)/sqrt(2)."""
    return np.array([np.exp(-0.5j * gamma_b), np.exp(0.5j * gamma_b)]) / math.sqrt(2)


def conditional_target(delta_gamma: float) -> np.ndarray:
    """Two-qubit state with phases exp(-+2i delta_gamma) on |00>,|11> and |01>,|10>."""
    p = np.exp(-2j * delta_gamma)
    return 0.5 * np.array([p, p.conjugate(), p.conjugate(), p])


def maximally_entangled_target() -> np.ndarray:
    """exp(-i pi/4) (|00> + i|01> + i|10> + |11>) / 2."""
    return conditional_target(math.pi / 8)


# ----------------------------------------------------------------- entropy


def _clamped_spectrum(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    w = qcore.clamp_eigenvalues(np.linalg.eigvalsh(0.5 * (rho + qcore.dagger(rho))))
    total = w.sum()
    return w / total if total > 0 else w


def entropy(rho: np.ndarray, base: float = 2) -> float:
    """Von Neumann entropy in the given log base, 0 log 0 = 0."""
    w = _clamped_spectrum(rho)
    w = w[w > 0]
    return float(max(0.0, -np.sum(w * np.log(w)) / math.log(base)))


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho)
    return float(np.trace(rho @ rho).real)


# --------------------------------------------------------------- tomography


@dataclass(frozen=True)
class ExpectationTable:
    """Pauli expectations keyed by labels such as ``'0z'`` or ``'xx'``."""

    values: dict[str, float]
    n_qubits: int = 2

    def __post_init__(self):
        labels, _ = qcore.pauli_basis(self.n_qubits)
        full = {lab: 0.0 for lab in labels}
        for k, v in self.values.items():
            if k not in full:
                raise KeyError(f"unknown Pauli label {k!r}")
            full[k] = float(v)
        identity = labels[0]
        if identity in self.values and abs(self.values[identity] - 1.0) > 1e-12:
            raise ValueError(f"<{identity}> must be 1")
        full[identity] = 1.0
        object.__setattr__(self, "values", full)

    def __getitem__(self, label: str) -> float:
        return self.values[label]

    def as_array(self) -> np.ndarray:
        return np.array(list(self.values.values()))


def tomography(table: ExpectationTable) -> np.ndarray:
    """Linear-inversion reconstruction ``rho = 2^-n sum <P> P``."""
    labels, basis = qcore.pauli_basis(table.n_qubits)
    coeffs = np.array([table[lab] for lab in labels])
    return np.einsum("p,pij->ij", coeffs, basis) / 2**table.n_qubits


def expectations_from_rho(rho: np.ndarray) -> ExpectationTable:
    rho = np.asarray(rho, dtype=complex)
    n = {2: 1, 4: 2}.get(rho.shape[0])
    if n is None or rho.shape != (rho.shape[0],) * 2:
        raise qcore.DimensionError(f"need a 2x2 or 4x4 density matrix, got {rho.shape}")
    labels, basis = qcore.pauli_basis(n)
    vals = np.einsum("ij,pji->p", rho, basis).real
    vals[0] = 1.0
    return ExpectationTable(dict(zip(labels, vals)), n)


# ------------------------------------------------------------ entanglement


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit state.

    The decreasing values lambda_i are the singular values of
    ``sqrt(rho) (sy x sy) sqrt(rho)*``, whose Gram matrix is
    ``sqrt(rho) rho~ sqrt(rho)``; this avoids square roots of round-off
    eigenvalues for rank-deficient states.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise qcore.DimensionError("concurrence needs a two-qubit density matrix")
    rho = 0.5 * (rho + qcore.dagger(rho))
    w, v = np.linalg.eigh(rho)
    w = qcore.clamp_eigenvalues(w)
    root = (v * np.sqrt(w / w.sum())) @ qcore.dagger(v)
    lam = np.linalg.svd(root @ SIGMA_YY @ root.conj(), compute_uv=False)
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def eof_from_concurrence(c: float) -> float:
    c = min(1.0, max(0.0, c))
    return binary_entropy(0.5 * (1.0 + math.sqrt(1.0 - c * c)))


def eof(rho: np.ndarray) -> float:
    """Entanglement of formation of a two-qubit state."""
    return eof_from_concurrence(concurrence(rho))


# --------------------------------------------------------------- statistics


def jackknife(states: np.ndarray, statistic: Callable[[np.ndarray], float],
              blocks: int = JACKKNIFE_BLOCKS) -> float:
    """Block-jackknife standard error of ``statistic(rho)``.

    ``states`` are the per-trajectory final states; each block-deleted
    estimate uses the density matrix of the remaining trajectories.
    """
    n = states.shape[0]
    blocks = min(blocks, n)
    if blocks < 2:
        return 0.0
    edges = np.linspace(0, n, blocks + 1).astype(int)
    outer = np.einsum("ni,nj->nij", states, states.conj())
    sums = np.stack([outer[a:b].sum(axis=0) for a, b in zip(edges[:-1], edges[1:])])
    total = sums.sum(axis=0)
    counts = np.diff(edges)
    est = np.array([statistic((total - sums[i]) / (n - counts[i])) for i in range(blocks)])
    return float(math.sqrt((blocks - 1) / blocks * np.sum((est - est.mean()) ** 2)))


def concurrence_is_zero(c: float, se: float) -> bool:
    return c <= max(ZERO_CONCURRENCE, 2.0 * se)


# ---------------------------------------------------------------- threshold


@dataclass(frozen=True)
class ThresholdResult:
    gamma_thres: float
    bracket_width: float
    trajectories: int
    tau: float
    evaluations: tuple[tuple[float, float, float], ...]

    @property
    def product(self) -> float:
        return self.gamma_thres * self.tau


class BracketError(ValueError):
    """Threshold bracket endpoints do not straddle the entanglement death point."""


def find_gamma_threshold(evaluate: Callable[[float], tuple[float, float]], bracket: tuple[float, float],
                         tau: float, trajectories: int = 0, rel_width: float = 0.02) -> ThresholdResult:
    """Bisect for the smallest rate at which the concurrence is zero.

    ``evaluate(gamma)`` returns ``(concurrence, stderr)``; zero is decided by
    :func:`concurrence_is_zero`.  Stops once the bracket is no wider than
    ``rel_width`` times its midpoint and reports the midpoint.
    """
    lo, hi = bracket
    if not 0 <= lo < hi:
        raise BracketError(f"bad bracket {bracket}")
    history = []

    def dead(g):
        c, se = evaluate(g)
        history.append((g, c, se))
        return concurrence_is_zero(c, se)

    if dead(lo):
        raise BracketError(f"concurrence already zero at gamma = {lo}")
    if not dead(hi):
        raise BracketError(f"concurrence still nonzero at gamma = {hi}")
    while hi - lo > rel_width * 0.5 * (lo + hi):
        mid = 0.5 * (lo + hi)
        if dead(mid):
            hi = mid
        else:
            lo = mid
    mid = 0.5 * (lo + hi)
    return ThresholdResult(mid, hi - lo, trajectories, tau, tuple(history))
