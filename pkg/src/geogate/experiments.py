"""Named decoherence sweeps for the one- and two-qubit gates.

Each scenario fixes a gate, a noise preset and a grid of rates
``Gamma = kappa**2``; :func:`run_scenario` produces one :class:`SweepRow`
per grid point.  Grid point ``i`` uses random stream ``i`` so rows are
reproducible independently of each other.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from . import metrics, oracle, qsd
from .schedule import (FrameParams, GateSpec, PulseSchedule, Timings, build_conditional_adiabatic,
                       build_dynamic, build_fast_geometric, build_single_adiabatic,
                       signed_conditional_phase)

log = logging.getLogger(__name__)

MODES = ("full", "fast", "oracle")
FAST_TRAJECTORIES = 200
FAST_DT = 7e-4

FIG1_GRID = tuple(float(g) for g in np.geomspace(2.5e-5, 3e-2, 13))
FIG2_GRID = tuple(float(g) for g in np.linspace(0.0, 0.01, 11))
FIG3A_GRID = tuple(float(g) for g in np.linspace(0.0, 3.0, 13))
FIG3B_GRID = tuple(float(g) for g in np.linspace(0.0, 1.5, 13))


@dataclass(frozen=True)
class Scenario:
    name: str
    gate: str
    noise: str
    targets: str
    gammas: tuple[float, ...]
    description: str = ""
    gamma_b: float = math.pi
    delta_gamma: float = math.pi / 8
    detuning: float = 100.0
    omega_b: float = 1.0
    omega1: float = 87.9238
    coupling: float = 37.5
    delta_omega: float = 18.75
    omega_B: float = 0.01
    t_tip: float = math.pi
    t_loop: float = 2 * math.pi
    t_pi: float = math.pi / 100
    trajectories: int = 1000
    dt: float = 5e-4
    threshold_bracket: tuple[float, float] | None = None

    def __post_init__(self):
        if self.gate not in ("single", "conditional", "dynamic", "fast"):
            raise ValueError(f"unknown gate {self.gate!r}")
        if any(g < 0 for g in self.gammas):
            raise ValueError("grid rates must be >= 0")
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))

    @property
    def n_qubits(self) -> int:
        return 1 if self.gate == "single" else 2

    def with_overrides(self, **changes) -> "Scenario":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def parameters(self) -> dict:
        d = asdict(self)
        d.pop("description")
        return d


def _fig1(name, gamma_b, noise, label):
    return Scenario(name, "single", noise, "single", FIG1_GRID, gamma_b=gamma_b,
                    description=f"single-qubit gate, gamma_B = {label}, {noise}-noise")


SCENARIOS: dict[str, Scenario] = {s.name: s for s in [
    _fig1("fig1a", math.pi / 8, "z", "pi/8"),
    _fig1("fig1a-ii", math.pi, "z", "pi"),
    _fig1("fig1a-iii", math.pi, "x", "pi"),
    _fig1("fig1a-iv", math.pi / 8, "x", "pi/8"),
    _fig1("fig1b", math.pi, "iso", "pi"),
    Scenario("fig2a", "conditional", "iso", "both", FIG2_GRID, threshold_bracket=(0.002, 0.008),
             description="conditional adiabatic gate, isotropic noise on both qubits"),
    Scenario("fig2b", "conditional", "x", "both", FIG2_GRID,
             description="conditional adiabatic gate, x-noise on both qubits"),
    Scenario("fig2b-ii", "conditional", "z", "both", FIG2_GRID,
             description="conditional adiabatic gate, z-noise on both qubits"),
    Scenario("fig2b-iii", "conditional", "iso", "both", FIG2_GRID, threshold_bracket=(0.002, 0.008),
             description="conditional adiabatic gate, isotropic noise on both qubits"),
    Scenario("fig3a", "dynamic", "iso", "both", FIG3A_GRID, threshold_bracket=(1.0, 3.0),
             description="dynamic gate exp(-i pi/4 sz sz), isotropic noise on both qubits"),
    Scenario("fig3b", "fast", "iso", "both", FIG3B_GRID, threshold_bracket=(0.4, 1.5),
             description="non-adiabatic geometric gate, isotropic noise on both qubits"),
]}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(SCENARIOS)}") from None


# ------------------------------------------------------------------ gates


def build_schedule(sc: Scenario) -> PulseSchedule:
    timings = Timings(sc.t_tip, sc.t_loop, sc.t_pi)
    if sc.gate == "single":
        return build_single_adiabatic(GateSpec(sc.gamma_b), FrameParams(detuning=sc.detuning), timings)
    if sc.gate == "conditional":
        frame = FrameParams(detuning=sc.detuning, omega_b=sc.omega_b, coupling=sc.coupling)
        return build_conditional_adiabatic(sc.delta_gamma, frame, timings, omega1=sc.omega1)
    if sc.gate == "dynamic":
        return build_dynamic(sc.coupling)
    return build_fast_geometric(sc.coupling, sc.delta_omega, sc.omega_B)


def target_state(sc: Scenario, schedule: PulseSchedule | None = None) -> np.ndarray:
    """Ideal output for the scenario's gate acting on (|0>+|1>)/sqrt2 per qubit.

    For the conditional gate the phase is the signed difference
    gamma(up_b) - gamma(down_b) realised by the schedule's drive amplitude.
    """
    if sc.gate == "single":
        return metrics.single_qubit_target(sc.gamma_b)
    if sc.gate == "conditional":
        schedule = schedule or build_schedule(sc)
        f = schedule.frame
        return metrics.conditional_target(signed_conditional_phase(f.detuning, f.coupling, f.omega1_max))
    return metrics.maximally_entangled_target()


def noise_model(sc: Scenario, gamma: float) -> qsd.NoiseModel:
    return qsd.NoiseModel.preset(sc.noise, gamma, sc.targets)


# ------------------------------------------------------------------ sweep


@dataclass(frozen=True)
class SweepRow:
    gamma: float
    loss: float
    entropy: float
    eof: float | None
    se_loss: float
    se_entropy: float
    se_eof: float | None
    tau: float
    n_traj: int
    seed: int
    concurrence: float | None = None
    se_concurrence: float | None = None


def _config(sc: Scenario, mode: str, seed: int, trajectories: int | None, dt: float | None,
            workers: int | None) -> qsd.IntegratorConfig:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    n = trajectories or (FAST_TRAJECTORIES if mode == "fast" else sc.trajectories)
    step = dt or (FAST_DT if mode == "fast" else sc.dt)
    return qsd.IntegratorConfig(dt=step, seed=seed, trajectories=n, workers=workers)


def _single_loss_samples(sc: Scenario, schedule: PulseSchedule, records: np.ndarray) -> np.ndarray:
    theta = schedule.segments[0].theta
    return np.array([1.0 - metrics.fidelity_footnote(*metrics.tipped_frame(r[1:4], theta), theta, sc.gamma_b)
                     for r in records])


def evaluate_point(sc: Scenario, gamma: float, cfg: qsd.IntegratorConfig, mode: str = "full",
                   stream: int = 0, schedule: PulseSchedule | None = None) -> SweepRow:
    """All metrics for one rate, from a trajectory ensemble or the oracle."""
    schedule = schedule or build_schedule(sc)
    noise = noise_model(sc, gamma)
    target = target_state(sc, schedule)
    two = sc.n_qubits == 2
    base = 4 if two else 2

    if mode == "oracle":
        rho = oracle.integrate_lindblad(schedule, noise, cfg.dt).final
        if two:
            rho = metrics.tomography(metrics.expectations_from_rho(rho))
            c = metrics.concurrence(rho)
            return SweepRow(gamma, 1 - metrics.fidelity_state(rho, target), metrics.entropy(rho, 4),
                            metrics.eof_from_concurrence(c), 0.0, 0.0, 0.0, schedule.tau, 0, cfg.seed, c, 0.0)
        theta = schedule.segments[0].theta
        bloch = metrics.expectations_from_rho(rho).as_array()[1:4]
        f = metrics.fidelity_footnote(*metrics.tipped_frame(bloch, theta), theta, sc.gamma_b)
        return SweepRow(gamma, 1 - f, metrics.entropy(rho, 2), None, 0.0, 0.0, None,
                        schedule.tau, 0, cfg.seed)

    res = qsd.run_ensemble(schedule, noise, cfg, stream=stream)
    n = res.n_traj
    table = metrics.ExpectationTable(dict(zip(res.labels, res.expectations)), sc.n_qubits)
    rho = metrics.tomography(table)
    ent = metrics.entropy(rho, base)
    se_ent = metrics.jackknife(res.states, lambda r: metrics.entropy(r, base))
    if two:
        fid = np.abs(res.states @ target.conj()) ** 2
        loss = 1 - metrics.fidelity_state(rho, target)
        se_loss = float(fid.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        c = metrics.concurrence(rho)
        se_c = metrics.jackknife(res.states, metrics.concurrence)
        e = metrics.eof_from_concurrence(c)
        se_e = metrics.jackknife(res.states, metrics.eof)
        if metrics.concurrence_is_zero(c, se_c):
            e = 0.0
        return SweepRow(gamma, loss, ent, e, se_loss, se_ent, se_e, res.tau, n, cfg.seed, c, se_c)
    losses = _single_loss_samples(sc, schedule, res.records)
    se_loss = float(losses.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return SweepRow(gamma, float(losses.mean()), ent, None, se_loss, se_ent, None, res.tau, n, cfg.seed)


def run_scenario(sc: Scenario, seed: int = 42, mode: str = "full", trajectories: int | None = None,
                 dt: float | None = None, workers: int | None = None,
                 progress: Callable[[int, int], None] | None = None) -> list[SweepRow]:
    """Sweep the scenario's rate grid; deterministic for a fixed seed."""
    cfg = _config(sc, mode, seed, trajectories, dt, workers)
    schedule = build_schedule(sc)
    rows = []
    for i, g in enumerate(sc.gammas):
        rows.append(evaluate_point(sc, g, cfg, mode, stream=i, schedule=schedule))
        if progress:
            progress(i + 1, len(sc.gammas))
    return rows


def scenario_threshold(sc: Scenario, bracket: tuple[float, float] | None = None, seed: int = 42,
                       mode: str = "full", trajectories: int | None = None, dt: float | None = None,
                       workers: int | None = None) -> metrics.ThresholdResult:
    """Entanglement death rate for a two-qubit scenario.

    Every evaluation reuses random stream 0, so the bisection compares rates
    under common random numbers.
    """
    if sc.n_qubits != 2:
        raise ValueError("thresholds need a two-qubit scenario")
    bracket = bracket or sc.threshold_bracket
    if bracket is None:
        raise ValueError(f"scenario {sc.name} has no default threshold bracket")
    cfg = _config(sc, mode, seed, trajectories, dt, workers)
    schedule = build_schedule(sc)

    def evaluate(g):
        row = evaluate_point(sc, g, cfg, mode, stream=0, schedule=schedule)
        log.info("gamma=%.6g concurrence=%.4g +- %.2g", g, row.concurrence, row.se_concurrence)
        return row.concurrence, row.se_concurrence

    n = 0 if mode == "oracle" else cfg.trajectories
    return metrics.find_gamma_threshold(evaluate, bracket, schedule.tau, n)


# ---------------------------------------------------------------- analysis


@dataclass(frozen=True)
class AnisotropyReport:
    gammas: tuple[float, ...]
    ratios: tuple[float, ...]
    z_margin: tuple[float, ...]
    dominant: str

    @property
    def distinction(self) -> float:
        """Mean |log(loss_z / loss_x)| over rates with nonzero losses."""
        r = np.array([x for x in self.ratios if math.isfinite(x) and x > 0])
        return float(np.mean(np.abs(np.log(r)))) if len(r) else 0.0


def compare_anisotropy(rows_x: Sequence[SweepRow], rows_z: Sequence[SweepRow],
                       n_sigma: float = 2.0) -> AnisotropyReport:
    """Per-rate loss ratios z/x and which axis dominates.

    ``z_margin`` is ``(loss_z - loss_x) / sqrt(se_z^2 + se_x^2)``.
    """
    gx = [r.gamma for r in rows_x]
    if gx != [r.gamma for r in rows_z]:
        raise ValueError("x and z sweeps use different rate grids")
    ratios, margins = [], []
    for rx, rz in zip(rows_x, rows_z):
        ratios.append(rz.loss / rx.loss if rx.loss > 0 else math.nan)
        se = math.hypot(rx.se_loss, rz.se_loss)
        diff = rz.loss - rx.loss
        margins.append(diff / se if se > 0 else (math.inf if diff > 0 else -math.inf if diff < 0 else 0.0))
    active = [m for g, m in zip(gx, margins) if g > 0]
    if active and all(m >= n_sigma for m in active):
        dominant = "z"
    elif active and all(m <= -n_sigma for m in active):
        dominant = "x"
    else:
        dominant = "none"
    return AnisotropyReport(tuple(gx), tuple(ratios), tuple(margins), dominant)


@dataclass(frozen=True)
class ExponentialFit:
    rate: float
    normalized: float
    max_residual: float


def fit_exponential_loss(rows: Sequence[SweepRow], tau: float | None = None) -> ExponentialFit:
    """Least-squares fit of ``loss = (1 - exp(-c Gamma)) / 2``.

    ``normalized`` is ``c / (4 tau)``, which is 1 for the isotropic law.
    """
    if len(rows) < 4:
        raise ValueError("need at least 4 grid points")
    g = np.array([r.gamma for r in rows])
    y = np.array([r.loss for r in rows])
    if len(np.unique(g)) < 2 or np.all(g == 0):
        raise ValueError("degenerate rate grid")
    tau = tau if tau is not None else rows[0].tau

    def model(c):
        return 0.5 * (1.0 - np.exp(-c * g))

    mask = (g > 0) & (y > 0) & (y < 0.5)
    c0 = float(np.median(-np.log(1.0 - 2.0 * y[mask]) / g[mask])) if mask.any() else 0.0
    if np.all(y == 0):
        c = 0.0
    else:
        fit = least_squares(lambda p: model(p[0]) - y, x0=[c0], bounds=(0.0, np.inf),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15)
        c = float(fit.x[0])
    resid = float(np.max(np.abs(model(c) - y)))
    return ExponentialFit(c, c / (4.0 * tau) if tau > 0 else math.nan, resid)
