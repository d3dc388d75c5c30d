"""Quantum state diffusion: stochastic pure-state unraveling of the master equation.

Each trajectory obeys the Ito equation

    d|psi> = -i H |psi> dt
             + sum_m (<L_m^+> L_m - L_m^+ L_m / 2 - <L_m^+><L_m> / 2) |psi> dt
             + sum_m (L_m - <L_m>) |psi> dxi_m

with complex Wiener increments ``E[dxi_m dxi_n^*] = delta_mn dt``.  The
split-step scheme applies the exact step unitary first and then an Euler
update of the Lindblad terms, renormalizing after every step.

Trajectory ``k`` draws its increments from a Philox stream keyed by
``derive_seed(seed, stream << 32 | k)``, so results do not depend on how
trajectories are spread over worker threads.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from . import qcore
from .schedule import PulseSchedule, step_propagators

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15
WORKERS_ENV = "GEOGATE_WORKERS"
STABILITY_BOUND = 0.05

_OK, _COLLAPSE = 0, 1


class TrajectoryError(RuntimeError):
    """A trajectory became numerically unstable."""


# ---------------------------------------------------------------- seeding


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Stateless per-trajectory key: SplitMix64 finalizer of ``master ^ golden*(index+1)``."""
    return _mix64((master ^ (GOLDEN64 * (index + 1))) & MASK64)


def trajectory_rng(master: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=derive_seed(master, index)))


def wiener_increments(rng: np.random.Generator, m: int, dt: float) -> np.ndarray:
    """``m`` complex Gaussian increments with real and imaginary variance ``dt/2``.

    Draw order (re, im per channel) matches the compiled integrator.
    """
    z = rng.standard_normal(2 * m)
    return math.sqrt(dt / 2.0) * (z[0::2] + 1j * z[1::2])


# ------------------------------------------------------------ noise model


@dataclass(frozen=True)
class LindbladChannel:
    """``L = kappa * op`` on ``target`` ('a', 'b' or 'single')."""

    op: str | np.ndarray
    kappa: float
    target: str = "single"

    def __post_init__(self):
        if not self.kappa >= 0:
            raise ValueError("kappa must be >= 0")

    @property
    def rate(self) -> float:
        return self.kappa**2

    def matrix(self, n_qubits: int) -> np.ndarray:
        if isinstance(self.op, str):
            base = qcore.pauli(self.op)
            if n_qubits == 2:
                if self.target not in ("a", "b"):
                    raise ValueError("two-qubit channels need target 'a' or 'b'")
                base = qcore.on_qubit(base, self.target, 2)
        else:
            base = np.asarray(self.op, dtype=complex)
            if self.target in ("a", "b") and n_qubits == 2 and base.shape == (2, 2):
                base = qcore.on_qubit(base, self.target, 2)
        if base.shape != (2**n_qubits,) * 2:
            raise qcore.DimensionError(f"channel operator {base.shape} for {n_qubits} qubit(s)")
        return self.kappa * base


@dataclass(frozen=True)
class NoiseModel:
    channels: tuple[LindbladChannel, ...] = ()
    name: str = "none"

    def operators(self, n_qubits: int, drop_zero: bool = True) -> np.ndarray:
        ops = [c.matrix(n_qubits) for c in self.channels if c.kappa > 0 or not drop_zero]
        d = 2**n_qubits
        return np.array(ops, dtype=complex).reshape(len(ops), d, d)

    @classmethod
    def preset(cls, name: str, gamma: float, targets: str = "both") -> "NoiseModel":
        """Named noise model with rate ``gamma = kappa**2`` per channel.

        ``name`` is 'x', 'y', 'z' or 'iso'; ``targets`` is 'single' for a
        one-qubit gate, or 'a', 'b', 'both' for two qubits.
        """
        if gamma < 0:
            raise ValueError("gamma must be >= 0")
        kappa = math.sqrt(gamma)
        axes = {"x": "x", "y": "y", "z": "z", "iso": "xyz"}.get(name)
        if axes is None:
            raise ValueError(f"unknown noise preset {name!r}")
        qubits = {"single": ["single"], "a": ["a"], "b": ["b"], "both": ["a", "b"]}.get(targets)
        if qubits is None:
            raise ValueError(f"unknown noise targets {targets!r}")
        chans = tuple(LindbladChannel(ax, kappa, q) for q in qubits for ax in axes)
        return cls(chans, name=f"{name}-{targets}")


def no_noise() -> NoiseModel:
    return NoiseModel()


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 5e-4
    scheme: str = "split-step"
    seed: int = 42
    trajectories: int = 1000
    sample_stride: int | None = None
    workers: int | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")
        if self.scheme not in ("split-step", "euler-maruyama"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.sample_stride is not None and self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")


def worker_count(cfg: IntegratorConfig | None = None) -> int:
    if cfg is not None and cfg.workers:
        return cfg.workers
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ----------------------------------------------------- reference stepper


def _lindblad_update(psi, ops, dt, increments):
    out = np.zeros_like(psi)
    for op, dxi in zip(ops, increments):
        lpsi = op @ psi
        ell = np.vdot(psi, lpsi)
        out += (np.conj(ell) * lpsi - 0.5 * (op.conj().T @ lpsi) - 0.5 * abs(ell) ** 2 * psi) * dt
        out += (lpsi - ell * psi) * dxi
    return out


def qsd_step(psi: np.ndarray, h: np.ndarray, ops, dt: float, increments,
             scheme: str = "split-step") -> np.ndarray:
    """Advance one state by one step (reference implementation).

    ``ops`` are the full channel operators (kappa included) and
    ``increments`` their Wiener increments for this step.
    """
    psi = np.asarray(psi, dtype=complex)
    ops = list(ops)
    if scheme == "split-step":
        psi_u = qcore.expm_antihermitian(h, dt) @ psi
        new = psi_u + _lindblad_update(psi_u, ops, dt, increments)
    elif scheme == "euler-maruyama":
        new = psi - 1j * dt * (h @ psi) + _lindblad_update(psi, ops, dt, increments)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    norm = np.linalg.norm(new)
    if norm < 1e-6:
        raise TrajectoryError(f"state norm collapsed to {norm:.3g}")
    return new / norm


# ------------------------------------------------------- compiled kernel


def _sparse_channels(ops: np.ndarray):
    """Row-compressed nonzeros of each channel operator, padded to a common width."""
    m, d = ops.shape[0], (ops.shape[1] if ops.ndim == 3 else 1)
    width = max([int(np.count_nonzero(ops[k], axis=1).max()) for k in range(m)] + [1])
    cols = np.zeros((m, d, width), dtype=np.int64)
    vals = np.zeros((m, d, width), dtype=complex)
    for k in range(m):
        for i in range(d):
            nz = np.flatnonzero(ops[k, i])
            cols[k, i, :len(nz)] = nz
            vals[k, i, :len(nz)] = ops[k, i, nz]
    return cols, vals


@numba.njit(nogil=True, cache=True)
def _integrate(psi, props, hs, cols, vals, kmat, rng, split, sample_at, samples):
    d = psi.shape[0]
    m = cols.shape[0]
    width = cols.shape[2]
    src = np.empty(d, dtype=np.complex128)
    cur = np.empty(d, dtype=np.complex128)
    acc = np.empty(d, dtype=np.complex128)
    lpsi = np.empty(d, dtype=np.complex128)
    next_sample = 0
    for k in range(props.shape[0]):
        h = hs[k]
        for i in range(d):
            s = 0j
            for j in range(d):
                s += props[k, i, j] * psi[j]
            cur[i] = s
        if h > 0.0 and m > 0:
            for i in range(d):
                src[i] = cur[i] if split else psi[i]
            # -1/2 sum L^+L psi dt
            for i in range(d):
                s = 0j
                for j in range(d):
                    s += kmat[i, j] * src[j]
                acc[i] = -0.5 * h * s
            scale = math.sqrt(0.5 * h)
            for c in range(m):
                dre = rng.standard_normal()
                dim = rng.standard_normal()
                dxi = scale * complex(dre, dim)
                ell = 0j
                for i in range(d):
                    s = 0j
                    for w in range(width):
                        s += vals[c, i, w] * src[cols[c, i, w]]
                    lpsi[i] = s
                    ell += src[i].conjugate() * s
                ellc = ell.conjugate()
                mag = (ell * ellc).real
                for i in range(d):
                    acc[i] += (ellc * lpsi[i] - 0.5 * mag * src[i]) * h + (lpsi[i] - ell * src[i]) * dxi
            for i in range(d):
                cur[i] += acc[i]
        nrm = 0.0
        for i in range(d):
            nrm += cur[i].real ** 2 + cur[i].imag ** 2
        nrm = math.sqrt(nrm)
        if nrm < 1e-6 or not math.isfinite(nrm):
            return _COLLAPSE, k
        inv = 1.0 / nrm
        for i in range(d):
            psi[i] = cur[i] * inv
        while next_sample < sample_at.shape[0] and sample_at[next_sample] == k:
            for i in range(d):
                samples[next_sample, i] = psi[i]
            next_sample += 1
    return _OK, -1


@numba.njit(nogil=True, cache=True)
def _accumulate(states):
    n, d = states.shape
    rho = np.zeros((d, d), dtype=np.complex128)
    for k in range(n):
        for i in range(d):
            for j in range(d):
                rho[i, j] += states[k, i] * states[k, j].conjugate()
    return rho / n


@dataclass
class CompiledRun:
    """A schedule and noise model lowered to arrays for the kernel."""

    schedule: PulseSchedule
    noise: NoiseModel
    cfg: IntegratorConfig
    props: np.ndarray
    hs: np.ndarray
    times: np.ndarray
    ops: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    kmat: np.ndarray
    sample_at: np.ndarray
    sample_times: np.ndarray


def compile_run(schedule: PulseSchedule, noise: NoiseModel, cfg: IntegratorConfig) -> CompiledRun:
    props, hs, times = step_propagators(schedule, cfg.dt, cfg.scheme)
    ops = noise.operators(schedule.n_qubits)
    d = schedule.dim
    if ops.shape[0]:
        cols, vals = _sparse_channels(ops)
        kmat = np.einsum("mji,mjk->ik", ops.conj(), ops)
    else:
        cols = np.zeros((0, d, 1), dtype=np.int64)
        vals = np.zeros((0, d, 1), dtype=complex)
        kmat = np.zeros((d, d), dtype=complex)
    if cfg.sample_stride:
        sample_at = np.arange(cfg.sample_stride - 1, len(hs), cfg.sample_stride, dtype=np.int64)
    else:
        sample_at = np.zeros(0, dtype=np.int64)
    _check_stability(schedule, hs, cfg)
    return CompiledRun(schedule, noise, cfg, props, hs, times, ops, cols, vals,
                       np.ascontiguousarray(kmat), sample_at, times[sample_at] if len(sample_at) else np.zeros(0))


def _check_stability(schedule, hs, cfg):
    if cfg.scheme != "split-step" or not len(hs):
        return
    from .schedule import iter_grid, segment_hamiltonians

    worst = 0.0
    for i, seg, start, n, h in iter_grid(schedule, cfg.dt):
        if n == 0:
            continue
        ham = segment_hamiltonians(schedule, i, [0.0, 0.5 * seg.duration, seg.duration])
        worst = max(worst, float(np.max(np.abs(np.linalg.eigvalsh(ham)))) * h)
    if worst > STABILITY_BOUND:
        log.warning("||H|| dt = %.3g exceeds the split-step bound %.2g", worst, STABILITY_BOUND)


def initial_state(n_qubits: int) -> np.ndarray:
    """(|0> + |1>)/sqrt(2) on every qubit."""
    return np.full(2**n_qubits, 2.0 ** (-n_qubits / 2), dtype=complex)


def _run_one(run: CompiledRun, psi0: np.ndarray, index: int, stream: int):
    psi = np.array(psi0, dtype=complex)
    samples = np.zeros((len(run.sample_at), psi.shape[0]), dtype=complex)
    rng = trajectory_rng(run.cfg.seed, (stream << 32) | index)
    status, step = _integrate(psi, run.props, run.hs, run.cols, run.vals, run.kmat, rng,
                              run.cfg.scheme == "split-step", run.sample_at, samples)
    if status != _OK:
        t = run.times[step] if step >= 0 else float("nan")
        raise TrajectoryError(
            f"trajectory {index} (stream {stream}) collapsed at step {step}, t = {t:.6g}; "
            f"reduce dt (currently {run.cfg.dt})")
    return psi, samples


def pauli_records(states: np.ndarray, n_qubits: int) -> tuple[list[str], np.ndarray]:
    """Per-state Pauli expectations, shape ``(n_states, 4**n_qubits)``."""
    labels, basis = qcore.pauli_basis(n_qubits)
    vals = np.einsum("ni,pij,nj->np", states.conj(), basis, states).real
    return labels, vals


def run_trajectory(schedule: PulseSchedule, noise: NoiseModel, cfg: IntegratorConfig,
                   index: int, stream: int = 0, psi0: np.ndarray | None = None):
    """Integrate one trajectory; returns the final state and its Pauli record."""
    run = compile_run(schedule, noise, cfg)
    psi0 = initial_state(schedule.n_qubits) if psi0 is None else psi0
    psi, _ = _run_one(run, psi0, index, stream)
    _, rec = pauli_records(psi[None], schedule.n_qubits)
    return psi, rec[0]


@dataclass
class EnsembleResult:
    rho: np.ndarray
    states: np.ndarray
    labels: list[str]
    records: np.ndarray
    stderr: np.ndarray
    tau: float
    seed: int
    stream: int
    sample_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sample_rhos: np.ndarray | None = None
    sample_states: np.ndarray | None = None

    @property
    def n_traj(self) -> int:
        return self.states.shape[0]

    @property
    def expectations(self) -> np.ndarray:
        return self.records.mean(axis=0)


def run_ensemble(schedule: PulseSchedule, noise: NoiseModel, cfg: IntegratorConfig,
                 stream: int = 0, psi0: np.ndarray | None = None) -> EnsembleResult:
    """Average ``cfg.trajectories`` trajectories into a density matrix.

    Trajectories are split into contiguous chunks over worker threads; the
    reduction always runs in trajectory-index order.
    """
    run = compile_run(schedule, noise, cfg)
    n = cfg.trajectories
    d = schedule.dim
    psi0 = initial_state(schedule.n_qubits) if psi0 is None else np.asarray(psi0, dtype=complex)
    states = np.empty((n, d), dtype=complex)
    samples = np.empty((n, len(run.sample_at), d), dtype=complex)

    def work(chunk):
        for k in chunk:
            states[k], samples[k] = _run_one(run, psi0, k, stream)

    workers = min(worker_count(cfg), n)
    chunks = [range(lo, min(lo + math.ceil(n / workers), n)) for lo in range(0, n, math.ceil(n / workers))]
    if workers == 1:
        work(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for fut in [pool.submit(work, c) for c in chunks]:
                fut.result()

    rho = _accumulate(states)
    labels, records = pauli_records(states, schedule.n_qubits)
    stderr = records.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(records.shape[1])
    result = EnsembleResult(rho, states, labels, records, stderr, schedule.tau, cfg.seed, stream)
    if len(run.sample_at):
        result.sample_times = run.sample_times
        result.sample_states = samples
        result.sample_rhos = np.stack([_accumulate(np.ascontiguousarray(samples[:, j]))
                                       for j in range(samples.shape[1])])
    return result
