"""Direct integration of the Lindblad master equation on the density matrix.

Deterministic RK4 on the same step grid as the trajectory engine, used as an
independent check of the stochastic ensemble and for cheap reference curves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qcore
from .qsd import NoiseModel, initial_state
from .schedule import InstantRotation, PulseSchedule, instant_unitary, iter_grid, segment_hamiltonians

TRACE_DRIFT_LIMIT = 1e-6


class OracleError(RuntimeError):
    """The RK4 integration lost trace beyond tolerance."""


def lindblad_rhs(rho: np.ndarray, h: np.ndarray, ops: np.ndarray) -> np.ndarray:
    """Right-hand side ``-i[H, rho] + sum_m (L rho L^+ - {L^+ L, rho}/2)``.

    ``ops`` is a stack of channel operators with their strengths folded in.
    """
    rho = np.asarray(rho, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if rho.shape != h.shape:
        raise qcore.DimensionError(f"rho {rho.shape} vs H {h.shape}")
    out = -1j * (h @ rho - rho @ h)
    ops = np.asarray(ops, dtype=complex)
    if ops.size:
        if ops.shape[1:] != rho.shape:
            raise qcore.DimensionError(f"channel operators {ops.shape[1:]} vs rho {rho.shape}")
        ld = qcore.dagger(ops)
        k = np.einsum("mij,mjk->ik", ld, ops)
        out += np.einsum("mij,jk,mkl->il", ops, rho, ld) - 0.5 * (k @ rho + rho @ k)
    return out


@dataclass
class OracleResult:
    times: np.ndarray
    rhos: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.rhos[-1]


def _rk4_segment(rho, hams, h, ops, ld, kmat):
    """Integrate through one segment; ``hams`` holds H at t, t+h/2, ... on a half-step grid."""

    def rhs(r, ham):
        out = -1j * (ham @ r - r @ ham)
        if ops.shape[0]:
            out += np.einsum("mij,jk,mkl->il", ops, r, ld) - 0.5 * (kmat @ r + r @ kmat)
        return out

    n = (len(hams) - 1) // 2
    for j in range(n):
        h0, hm, h1 = hams[2 * j], hams[2 * j + 1], hams[2 * j + 2]
        k1 = rhs(rho, h0)
        k2 = rhs(rho + 0.5 * h * k1, hm)
        k3 = rhs(rho + 0.5 * h * k2, hm)
        k4 = rhs(rho + h * k3, h1)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > TRACE_DRIFT_LIMIT:
            raise OracleError(f"trace drifted to {tr:.12g}; reduce dt")
        rho = rho / tr
        yield rho


def integrate_lindblad(schedule: PulseSchedule, noise: NoiseModel, dt: float = 5e-4,
                       rho0: np.ndarray | None = None, sample_stride: int | None = None) -> OracleResult:
    """Integrate the master equation through ``schedule``.

    Returns the initial state, every ``sample_stride``-th step (if given)
    and the final state, with their times.
    """
    if rho0 is None:
        rho0 = qcore.projector(initial_state(schedule.n_qubits))
    rho = np.array(rho0, dtype=complex)
    ops = noise.operators(schedule.n_qubits)
    ld = qcore.dagger(ops)
    kmat = np.einsum("mij,mjk->ik", ld, ops) if ops.shape[0] else np.zeros_like(rho)
    times, rhos = [0.0], [rho.copy()]
    step = 0
    for i, seg, start, n, h in iter_grid(schedule, dt):
        if isinstance(seg, InstantRotation):
            u = instant_unitary(schedule, seg)
            rho = u @ rho @ u.conj().T
            continue
        if n == 0:
            continue
        hams = segment_hamiltonians(schedule, i, np.arange(2 * n + 1) * (0.5 * h))
        for j, rho in enumerate(_rk4_segment(rho, hams, h, ops, ld, kmat)):
            step += 1
            if sample_stride and step % sample_stride == 0:
                times.append(start + (j + 1) * h)
                rhos.append(rho.copy())
    if times[-1] != schedule.tau or len(rhos) == 1 or not np.array_equal(rhos[-1], rho):
        times.append(schedule.tau)
        rhos.append(rho.copy())
    return OracleResult(np.array(times), np.array(rhos))
