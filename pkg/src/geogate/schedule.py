"""Pulse schedules for the geometric and dynamic gates.

All dynamics are expressed in the frame rotating at the drive frequency, so
the single-qubit Hamiltonian is

    H(t) = (detuning/2) sz + (w1(t)/2) (cos phi(t) sx + sin phi(t) sy)

and for two qubits the static terms ``(omega_b/2) sz_b + (J/4) sz_a sz_b``
are added, with the drive acting on qubit ``a`` only.  Square pi pulses are
treated as hard pulses: while one is on, only the pulse term acts.

A schedule is an ordered tuple of segments.  ``step_propagators`` turns it into the
step grid shared by the trajectory engine and the density-matrix oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Literal, Union

import numpy as np
from scipy.optimize import brentq

from . import qcore

Direction = Literal["up", "down"]
LoopDirection = Literal["fwd", "rev"]


class ScheduleError(ValueError):
    """Invalid schedule construction or evaluation."""


# ---------------------------------------------------------------- parameters


@dataclass(frozen=True)
class FrameParams:
    """Rotating-frame parameters.

    ``detuning`` is omega_0 - omega for one qubit (omega_a - omega for the
    target of a two-qubit gate).  For the fast geometric gate it carries the
    free-evolution splitting of qubit a and ``omega_b`` that of qubit b.
    """

    detuning: float = 100.0
    omega1_max: float = 0.0
    omega_b: float = 0.0
    coupling: float = 0.0

    def __post_init__(self):
        for name in ("detuning", "omega1_max", "omega_b", "coupling"):
            if not math.isfinite(getattr(self, name)):
                raise ScheduleError(f"{name} must be finite")
        if self.omega1_max < 0:
            raise ScheduleError("omega1_max must be >= 0")
        if self.coupling < 0:
            raise ScheduleError("coupling J must be >= 0")


@dataclass(frozen=True)
class GateSpec:
    """Target Berry phase of the single-qubit gate and the derived tip angle."""

    gamma_b: float

    @property
    def theta(self) -> float:
        return theta_for_gamma_b(self.gamma_b)

    @property
    def gamma(self) -> float:
        return math.pi * (1.0 - math.cos(self.theta))


@dataclass(frozen=True)
class Timings:
    t_tip: float = math.pi
    t_loop: float = 2.0 * math.pi
    t_pi: float = math.pi / 100.0

    def __post_init__(self):
        if self.t_tip <= 0 or self.t_loop <= 0 or self.t_pi < 0:
            raise ScheduleError("tip and loop times must be positive, pi-pulse time non-negative")


# ------------------------------------------------------------------ segments


@dataclass(frozen=True)
class TipRamp:
    """Linear ramp of the drive amplitude between 0 and ``omega1`` at phase 0."""

    direction: Direction
    theta: float
    omega1: float
    duration: float
    kind = "tip"


@dataclass(frozen=True)
class PhaseLoop:
    """Drive phase swept through 2*pi at fixed amplitude ``omega1``."""

    direction: LoopDirection
    omega1: float
    duration: float
    kind = "loop"


@dataclass(frozen=True)
class SquarePiPulse:
    """Hard resonant pulse; ``amplitude * duration`` is the rotation angle."""

    axis: str
    amplitude: float
    duration: float
    target: str = "a"
    kind = "pulse"


@dataclass(frozen=True)
class FreeEvolution:
    """Evolution under the static frame Hamiltonian only."""

    duration: float
    kind = "free"


@dataclass(frozen=True)
class InstantRotation:
    """Zero-duration rotation ``exp(-i angle sigma_axis / 2)`` on one qubit."""

    axis: str
    angle: float
    target: str = "a"
    kind = "rot"

    @property
    def duration(self) -> float:
        return 0.0


Segment = Union[TipRamp, PhaseLoop, SquarePiPulse, FreeEvolution, InstantRotation]


@dataclass(frozen=True)
class PulseSchedule:
    segments: tuple[Segment, ...]
    frame: FrameParams
    n_qubits: int = 1
    name: str = ""
    hamiltonian_sign: float = 1.0
    starts: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_qubits not in (1, 2):
            raise ScheduleError("n_qubits must be 1 or 2")
        t = 0.0
        starts = []
        for seg in self.segments:
            if not math.isfinite(seg.duration) or seg.duration < 0:
                raise ScheduleError(f"segment {seg!r} has invalid duration")
            if isinstance(seg, (InstantRotation, SquarePiPulse)):
                if seg.axis not in ("x", "y", "z"):
                    raise ScheduleError(f"bad rotation axis {seg.axis!r}")
                if self.n_qubits == 2 and seg.target not in ("a", "b"):
                    raise ScheduleError(f"bad target {seg.target!r}")
            starts.append(t)
            t += seg.duration
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "starts", tuple(starts))

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def tau(self) -> float:
        return float(sum(seg.duration for seg in self.segments))

    def inverse(self) -> "PulseSchedule":
        """Schedule whose zero-noise propagator is the inverse of this one.

        Segments run in reverse order along reversed paths, rotations are
        conjugated and the Hamiltonian sign is flipped.
        """
        segs = []
        for seg in reversed(self.segments):
            if isinstance(seg, TipRamp):
                seg = replace(seg, direction="down" if seg.direction == "up" else "up")
            elif isinstance(seg, PhaseLoop):
                seg = replace(seg, direction="rev" if seg.direction == "fwd" else "fwd")
            elif isinstance(seg, InstantRotation):
                seg = replace(seg, angle=-seg.angle)
            segs.append(seg)
        return replace(self, segments=tuple(segs), hamiltonian_sign=-self.hamiltonian_sign,
                       name=f"inverse({self.name})" if self.name else "")

    def describe(self) -> str:
        """Line-oriented text description, used for debugging and golden files."""
        f = self.frame
        lines = [
            f"schedule {self.name or '-'}",
            f"qubits {self.n_qubits}",
            f"frame detuning={_fmt(f.detuning)} omega1_max={_fmt(f.omega1_max)} "
            f"omega_b={_fmt(f.omega_b)} coupling={_fmt(f.coupling)}",
            f"sign {_fmt(self.hamiltonian_sign)}",
        ]
        for start, seg in zip(self.starts, self.segments):
            if isinstance(seg, TipRamp):
                params = f"direction={seg.direction} theta={_fmt(seg.theta)} omega1={_fmt(seg.omega1)}"
            elif isinstance(seg, PhaseLoop):
                params = f"direction={seg.direction} omega1={_fmt(seg.omega1)}"
            elif isinstance(seg, SquarePiPulse):
                params = f"axis={seg.axis} amplitude={_fmt(seg.amplitude)} target={seg.target}"
            elif isinstance(seg, InstantRotation):
                params = f"axis={seg.axis} angle={_fmt(seg.angle)} target={seg.target}"
            else:
                params = ""
            lines.append(f"{seg.kind:5s} start={_fmt(start)} duration={_fmt(seg.duration)} {params}".rstrip())
        lines.append(f"tau {_fmt(self.tau)}")
        return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


# ------------------------------------------------------------ angle helpers


def theta_for_gamma_b(gamma_b: float) -> float:
    """Tip angle giving Berry phase ``gamma_b = 4 pi (1 - cos theta)``."""
    if not 0.0 < gamma_b < 8.0 * math.pi:
        raise ScheduleError(f"gamma_B must lie in (0, 8 pi), got {gamma_b}")
    return math.acos(1.0 - gamma_b / (4.0 * math.pi))


def omega1_for_theta(detuning: float, theta: float) -> float:
    """Drive amplitude that tips the effective field by ``theta``."""
    if detuning <= 0:
        raise ScheduleError("detuning must be positive")
    if not 0.0 <= theta < math.pi / 2:
        raise ScheduleError("theta must lie in [0, pi/2)")
    return detuning * math.tan(theta)


def _cos_tip(detuning: float, omega1: float) -> float:
    return detuning / math.hypot(detuning, omega1)


def conditional_cos_difference(detuning: float, coupling: float, omega1: float) -> float:
    """``cos theta_+ - cos theta_-`` for effective detunings ``detuning +- J/2``.

    Positive for ``omega1 > 0``: the branch with the larger detuning tips less.
    """
    return _cos_tip(detuning + coupling / 2, omega1) - _cos_tip(detuning - coupling / 2, omega1)


def omega1_for_conditional(detuning: float, coupling: float, delta_gamma: float,
                           tol: float = 1e-8) -> float:
    """Drive amplitude producing conditional phase magnitude ``delta_gamma``.

    Solves ``pi |cos theta_+ - cos theta_-| = |delta_gamma|`` on the branch
    that starts at ``omega1 = 0``; beyond the maximum of the cosine difference
    a second, larger root exists and is ignored.
    """
    if not detuning > coupling / 2 > 0:
        raise ScheduleError("need detuning > J/2 > 0")
    target = abs(delta_gamma) / math.pi
    if target == 0.0:
        return 0.0

    def residual(w):
        return conditional_cos_difference(detuning, coupling, w) - target

    # the cosine difference rises from 0, peaks, and decays back to 0
    hi = 10.0 * detuning
    peak = _argmax_on(lambda w: conditional_cos_difference(detuning, coupling, w), 0.0, hi)
    if residual(peak) < 0:
        raise ScheduleError(f"no omega1 in (0, {hi}) gives conditional phase {delta_gamma}")
    w = brentq(residual, 0.0, peak, xtol=1e-13, rtol=1e-15, maxiter=500)
    if abs(residual(w)) > tol:
        raise ScheduleError("conditional phase root did not converge")
    return w


def _argmax_on(fn, lo: float, hi: float) -> float:
    from scipy.optimize import minimize_scalar

    grid = np.linspace(lo, hi, 2001)
    vals = np.array([fn(w) for w in grid])
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda w: -fn(w), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


def signed_conditional_phase(detuning: float, coupling: float, omega1: float) -> float:
    """``gamma(up_b) - gamma(down_b)`` with ``gamma = pi (1 - cos theta)``.

    Control ``up`` (|0>_b, sz_b = +1) shifts the target detuning to
    ``detuning + J/2``.
    """
    up = math.pi * (1.0 - _cos_tip(detuning + coupling / 2, omega1))
    down = math.pi * (1.0 - _cos_tip(detuning - coupling / 2, omega1))
    return up - down


# ------------------------------------------------------------------ builders


def _pi_segment(timings: Timings, target: str = "a") -> Segment:
    if timings.t_pi == 0.0:
        return InstantRotation("y", math.pi, target)
    return SquarePiPulse("y", math.pi / timings.t_pi, timings.t_pi, target)


def _half_sequence(theta: float, omega1: float, timings: Timings) -> list[Segment]:
    # T, C, Pi_y, C-bar, T-bar; the central T-bar/T pair is dropped because
    # the pi pulse is about y
    return [
        TipRamp("up", theta, omega1, timings.t_tip),
        PhaseLoop("fwd", omega1, timings.t_loop),
        _pi_segment(timings),
        PhaseLoop("rev", omega1, timings.t_loop),
        TipRamp("down", theta, omega1, timings.t_tip),
    ]


def build_single_adiabatic(spec: GateSpec, frame: FrameParams | None = None,
                           timings: Timings | None = None) -> PulseSchedule:
    """Single-qubit Berry phase gate T, C, Pi, C-bar, T-bar, Pi.

    ``frame.omega1_max`` is ignored: the drive amplitude follows from the
    tip angle of ``spec``.
    """
    frame = frame or FrameParams()
    timings = timings or Timings()
    theta = spec.theta
    w1 = omega1_for_theta(frame.detuning, theta)
    segs = _half_sequence(theta, w1, timings) + [_pi_segment(timings)]
    return PulseSchedule(tuple(segs), replace(frame, omega1_max=w1, omega_b=0.0, coupling=0.0),
                         1, name=f"single_adiabatic(gamma_B={spec.gamma_b:.6g})")


def build_conditional_adiabatic(delta_gamma: float, frame: FrameParams | None = None,
                                timings: Timings | None = None,
                                omega1: float | None = None) -> PulseSchedule:
    """Conditional gate Pi^b U^a Pi^b U^a with instantaneous Pi^b.

    ``omega1`` defaults to the root of :func:`omega1_for_conditional`.
    """
    frame = frame or FrameParams(detuning=100.0, omega_b=1.0, coupling=37.5)
    timings = timings or Timings()
    if omega1 is None:
        omega1 = omega1_for_conditional(frame.detuning, frame.coupling, delta_gamma) \
            if frame.coupling > 0 else 0.0
    theta = math.atan2(omega1, frame.detuning)
    half = _half_sequence(theta, omega1, timings) + [InstantRotation("y", math.pi, "b")]
    return PulseSchedule(tuple(half + half), replace(frame, omega1_max=omega1), 2,
                         name=f"conditional_adiabatic(delta_gamma={delta_gamma:.6g})")


def build_dynamic(coupling: float = 37.5, duration: float | None = None) -> PulseSchedule:
    """Free evolution under (J/4) sz_a sz_b for ``duration`` (default pi/J)."""
    if coupling <= 0:
        raise ScheduleError("J must be positive")
    if duration is None:
        duration = math.pi / coupling
    if duration < 0:
        raise ScheduleError("duration must be non-negative")
    segs = (FreeEvolution(duration),) if duration > 0 else ()
    return PulseSchedule(segs, FrameParams(detuning=0.0, coupling=coupling), 2, name="dynamic")


def build_fast_geometric(coupling: float = 37.5, delta_omega: float = 18.75,
                         omega_B: float = 0.01) -> PulseSchedule:
    """Non-adiabatic geometric gate R_x(pi/2) R_z(-pi/2) U~ R_y(-pi/2).

    ``U~ = R_x(3pi/4) U(pi/J) R_x(-pi/2) U(pi/J) R_x(-pi/4)``, all rotations
    on qubit a, each U a free evolution under
    ``(delta_omega/2) sz_a + (omega_B/2) sz_b + (J/4) sz_a sz_b``.
    """
    if coupling <= 0:
        raise ScheduleError("J must be positive")
    t = math.pi / coupling
    pi = math.pi
    segs = (
        InstantRotation("y", -pi / 2),
        InstantRotation("x", -pi / 4),
        FreeEvolution(t),
        InstantRotation("x", -pi / 2),
        FreeEvolution(t),
        InstantRotation("x", 3 * pi / 4),
        InstantRotation("z", -pi / 2),
        InstantRotation("x", pi / 2),
    )
    frame = FrameParams(detuning=delta_omega, omega_b=omega_B, coupling=coupling)
    return PulseSchedule(segs, frame, 2, name="fast_geometric")


def build_free(duration: float, frame: FrameParams | None = None, n_qubits: int = 1) -> PulseSchedule:
    """Plain free evolution; with a zero frame this is H = 0."""
    frame = frame or FrameParams(detuning=0.0)
    return PulseSchedule((FreeEvolution(duration),), frame, n_qubits, name="free")


# --------------------------------------------------------------- Hamiltonian


def _static_terms(frame: FrameParams, n_qubits: int) -> np.ndarray:
    sz = qcore.pauli("z")
    if n_qubits == 1:
        return 0.5 * frame.detuning * sz
    eye = np.eye(2, dtype=complex)
    return (0.5 * frame.detuning * qcore.kron(sz, eye)
            + 0.5 * frame.omega_b * qcore.kron(eye, sz)
            + 0.25 * frame.coupling * qcore.kron(sz, sz))


def drive_profile(seg: Segment, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drive amplitude and phase at fractional times ``s`` in [0, 1]."""
    s = np.asarray(s, dtype=float)
    if isinstance(seg, TipRamp):
        w1 = seg.omega1 * (s if seg.direction == "up" else 1.0 - s)
        return w1, np.zeros_like(s)
    if isinstance(seg, PhaseLoop):
        phi = 2.0 * np.pi * (s if seg.direction == "fwd" else 1.0 - s)
        return np.full_like(s, seg.omega1), phi
    raise ScheduleError(f"segment {seg.kind} has no drive")


def segment_hamiltonians(schedule: PulseSchedule, index: int, local_times) -> np.ndarray:
    """Stack of Hamiltonians for segment ``index`` at times since its start."""
    seg = schedule.segments[index]
    t = np.atleast_1d(np.asarray(local_times, dtype=float))
    n = schedule.n_qubits
    if isinstance(seg, InstantRotation):
        raise ScheduleError("instantaneous rotations have no Hamiltonian")
    if isinstance(seg, SquarePiPulse):
        h = qcore.on_qubit(0.5 * seg.amplitude * qcore.pauli(seg.axis), seg.target, n)
        out = np.broadcast_to(h, t.shape + h.shape).copy()
    elif isinstance(seg, FreeEvolution):
        h = _static_terms(schedule.frame, n)
        out = np.broadcast_to(h, t.shape + h.shape).copy()
    else:
        s = t / seg.duration
        w1, phi = drive_profile(seg, s)
        sx, sy = qcore.pauli("x"), qcore.pauli("y")
        drive = 0.5 * w1[:, None, None] * (np.cos(phi)[:, None, None] * sx + np.sin(phi)[:, None, None] * sy)
        if n == 2:
            drive = np.einsum("kij,lm->kiljm", drive, np.eye(2)).reshape(len(t), 4, 4)
        out = _static_terms(schedule.frame, n)[None] + drive
    return schedule.hamiltonian_sign * out


def locate(schedule: PulseSchedule, t: float) -> tuple[int, float]:
    """Index of the timed segment containing ``t`` and the local time."""
    tau = schedule.tau
    if not -1e-12 <= t <= tau + 1e-12:
        raise ScheduleError(f"t = {t} outside [0, {tau}]")
    last = None
    for i, (start, seg) in enumerate(zip(schedule.starts, schedule.segments)):
        if seg.duration == 0:
            continue
        last = i
        if t < start + seg.duration:
            return i, max(t - start, 0.0)
    if last is None:
        raise ScheduleError("schedule has no timed segments")
    return last, schedule.segments[last].duration


def hamiltonian_at(schedule: PulseSchedule, t: float, control_branch: str | None = None) -> np.ndarray:
    """Rotating-frame Hamiltonian at time ``t``.

    With ``control_branch`` ('up' or 'down') a two-qubit schedule is reduced
    to the effective 2x2 Hamiltonian of qubit a with sz_b replaced by +1/-1.
    """
    i, local = locate(schedule, t)
    h = segment_hamiltonians(schedule, i, local)[0]
    if control_branch is None:
        return h
    if schedule.n_qubits != 2:
        raise ScheduleError("control_branch needs a two-qubit schedule")
    b = {"up": 0, "down": 1}[control_branch]
    return h.reshape(2, 2, 2, 2)[:, b, :, b].copy()


# -------------------------------------------------------------- step grid


@dataclass(frozen=True)
class Step:
    """One integration step or one instantaneous rotation (``h == 0``)."""

    segment: int
    t0: float
    h: float
    unitary: np.ndarray | None = None


def segment_grid(duration: float, dt: float) -> tuple[int, float]:
    """Number of equal sub-steps no longer than ``dt`` and their length."""
    if duration == 0:
        return 0, 0.0
    n = max(1, math.ceil(duration / dt - 1e-9))
    return n, duration / n


def iter_grid(schedule: PulseSchedule, dt: float) -> Iterator[tuple[int, Segment, float, int, float]]:
    """Yield ``(index, segment, start, n_steps, h)`` for every segment."""
    if dt <= 0:
        raise ScheduleError("dt must be positive")
    for i, (start, seg) in enumerate(zip(schedule.starts, schedule.segments)):
        n, h = segment_grid(seg.duration, dt)
        yield i, seg, start, n, h


def instant_unitary(schedule: PulseSchedule, seg: InstantRotation) -> np.ndarray:
    return qcore.on_qubit(qcore.rotation(seg.axis, seg.angle), seg.target, schedule.n_qubits)


def step_propagators(schedule: PulseSchedule, dt: float, scheme: str = "split-step"):
    """Per-step propagators on the shared grid.

    Returns ``(props, hs, times)``: ``props[k]`` is ``exp(-i H h)`` with H at
    the step midpoint (or ``1 - i H h`` for ``scheme='euler-maruyama'``),
    ``hs[k]`` the step length (0 for instantaneous rotations) and
    ``times[k]`` the time at the end of the step.
    """
    d = schedule.dim
    props, hs, times = [], [], []
    for i, seg, start, n, h in iter_grid(schedule, dt):
        if isinstance(seg, InstantRotation):
            props.append(instant_unitary(schedule, seg)[None])
            hs.append([0.0])
            times.append([start])
            continue
        if n == 0:
            continue
        mids = (np.arange(n) + 0.5) * h
        ham = segment_hamiltonians(schedule, i, mids)
        if scheme == "split-step":
            u = qcore.expm_antihermitian(ham, h)
        elif scheme == "euler-maruyama":
            u = np.eye(d)[None] - 1j * h * ham
        else:
            raise ScheduleError(f"unknown scheme {scheme!r}")
        props.append(u)
        hs.append(np.full(n, h))
        times.append(start + (np.arange(n) + 1) * h)
    if not props:
        return np.zeros((0, d, d), complex), np.zeros(0), np.zeros(0)
    return (np.ascontiguousarray(np.concatenate(props)), np.concatenate(hs),
            np.concatenate([np.atleast_1d(t) for t in times]))


def zero_noise_unitary(schedule: PulseSchedule, dt: float) -> np.ndarray:
    """Net propagator of the discretized schedule without noise."""
    props, _, _ = step_propagators(schedule, dt)
    u = np.eye(schedule.dim, dtype=complex)
    for p in props:
        u = p @ u
    return u
