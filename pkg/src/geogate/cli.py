"""Command-line front end: run a scenario sweep and write a CSV table.

Example::

    geogate --scenario fig1b --trajectories 1000 --seed 42 --out fig1b.csv

Options may also come from a ``--config`` file of ``key = value`` lines
using the long flag names (``gamma-grid = 0:0.01:11``); flags given on the
command line win.  Worker threads default to the CPU count and can be set
with the ``GEOGATE_WORKERS`` environment variable.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import experiments
from .qsd import TrajectoryError

CSV_HEADER = ("gamma", "loss_fidelity", "entropy", "eof", "se_loss", "se_entropy", "se_eof",
              "tau", "n_traj", "seed")
CONFIG_KEYS = ("scenario", "gamma-grid", "trajectories", "dt", "seed", "mode", "noise", "targets",
               "out")
DEFAULT_SEED = 42


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    gamma_grid: tuple[float, ...] | None = None
    trajectories: int | None = None
    dt: float | None = None
    seed: int = DEFAULT_SEED
    mode: str = "full"
    noise: str | None = None
    targets: str | None = None
    out: str | None = None
    threshold: bool = False


class UsageError(Exception):
    pass


# ------------------------------------------------------------ value parsing


def parse_grid(text: str) -> tuple[float, ...]:
    """``'lo:hi:n'`` (linear, endpoints included) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            grid = np.linspace(float(lo), float(hi), n)
        else:
            grid = np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed gamma grid {text!r}") from None
    if not len(grid) or not np.all(np.isfinite(grid)) or np.any(grid < 0):
        raise argparse.ArgumentTypeError(f"gamma grid {text!r} must hold finite rates >= 0")
    return tuple(float(g) for g in grid)


def format_grid(grid: Sequence[float]) -> str:
    return ",".join(repr(float(g)) for g in grid)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed integer {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed {text!r} must fit in 64 unsigned bits")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed number {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"{text!r} must be a positive number")
    return v


def read_config_file(path: str) -> list[str]:
    """Turn a ``key = value`` file into the equivalent flag list."""
    argv = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config entry {raw.strip()!r}")
        argv += [f"--{key}", value]
    return argv


def dump_config(cfg: RunConfig) -> str:
    out = io.StringIO()
    values = {
        "scenario": cfg.scenario,
        "gamma-grid": format_grid(cfg.gamma_grid) if cfg.gamma_grid is not None else None,
        "trajectories": cfg.trajectories,
        "dt": repr(cfg.dt) if cfg.dt is not None else None,
        "seed": cfg.seed,
        "mode": cfg.mode,
        "noise": cfg.noise,
        "targets": cfg.targets,
        "out": cfg.out,
    }
    for key in CONFIG_KEYS:
        if values[key] is not None:
            out.write(f"{key} = {values[key]}\n")
    return out.getvalue()


# ---------------------------------------------------------------- parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geogate", description="Decoherence sweeps for geometric and dynamic phase gates.")
    p.add_argument("--scenario", help="scenario name (see --list-scenarios)")
    p.add_argument("--gamma-grid", type=parse_grid, help="rates as lo:hi:n or a comma list")
    p.add_argument("--trajectories", type=_positive_int, help="trajectories per rate")
    p.add_argument("--dt", type=_positive_float, help="integration step")
    p.add_argument("--seed", type=_seed, help=f"master seed (default {DEFAULT_SEED})")
    p.add_argument("--mode", choices=experiments.MODES, help="full, fast or oracle (default full)")
    p.add_argument("--noise", choices=("x", "y", "z", "iso"), help="override the noise preset")
    p.add_argument("--targets", choices=("single", "a", "b", "both"), help="override noisy qubits")
    p.add_argument("--out", help="CSV output path (default: standard output)")
    p.add_argument("--config", help="key = value file with the same option names")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    p.add_argument("--list-scenarios", action="store_true", help="list scenarios and exit")
    p.add_argument("--threshold", action="store_true",
                   help="bisect for the entanglement death rate instead of sweeping")
    return p


def parse_args(argv: Sequence[str]) -> tuple[RunConfig | None, argparse.Namespace]:
    """Resolve flags (and an optional config file) into a :class:`RunConfig`.

    Returns ``(None, ns)`` when only ``--list-scenarios`` was requested.
    Raises :class:`UsageError` with a message naming the offending token.
    """
    parser = _build_parser()
    ns = parser.parse_args(list(argv))
    if ns.config:
        # command-line values are parsed on top of the file's
        file_ns = parser.parse_args(read_config_file(ns.config))
        ns = parser.parse_args(list(argv), namespace=file_ns)
    if ns.list_scenarios:
        return None, ns
    if not ns.scenario:
        raise UsageError(f"--scenario is required; available: {', '.join(experiments.SCENARIOS)}")
    if ns.scenario not in experiments.SCENARIOS:
        raise UsageError(f"unknown scenario {ns.scenario!r}; available: {', '.join(experiments.SCENARIOS)}")
    cfg = RunConfig(
        scenario=ns.scenario,
        gamma_grid=ns.gamma_grid,
        trajectories=ns.trajectories,
        dt=ns.dt,
        seed=DEFAULT_SEED if ns.seed is None else ns.seed,
        mode=ns.mode or "full",
        noise=ns.noise,
        targets=ns.targets,
        out=ns.out,
        threshold=ns.threshold,
    )
    return cfg, ns


# ----------------------------------------------------------------- output


def _num(x) -> str:
    return "" if x is None else f"{x:.9g}"


def emit_table(rows: Sequence[experiments.SweepRow], path: str | None = None) -> str:
    """Write rows as CSV (LF line endings); returns the text.

    The file is only created once the whole table has been formatted.
    """
    if not rows:
        raise ValueError("no rows to write")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_num(r.gamma), _num(r.loss), _num(r.entropy), _num(r.eof), _num(r.se_loss),
                    _num(r.se_entropy), _num(r.se_eof), _num(r.tau), str(r.n_traj), str(r.seed)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def list_scenarios() -> str:
    lines = []
    for name, sc in experiments.SCENARIOS.items():
        params = sc.parameters()
        grid = params.pop("gammas")
        shown = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                          for k, v in params.items() if v is not None)
        lines.append(f"{name}: {sc.description}\n    {shown}\n    gammas={format_grid(grid)}")
    return "\n".join(lines) + "\n"


def _progress(done: int, total: int) -> None:
    print(f"geogate: point {done}/{total}", file=sys.stderr, flush=True)


def run(cfg: RunConfig) -> list[experiments.SweepRow]:
    sc = experiments.get_scenario(cfg.scenario).with_overrides(
        gammas=cfg.gamma_grid, noise=cfg.noise, targets=cfg.targets)
    return experiments.run_scenario(sc, seed=cfg.seed, mode=cfg.mode, trajectories=cfg.trajectories,
                                    dt=cfg.dt, progress=_progress)


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("GEOGATE_LOGLEVEL", "WARNING"), stream=sys.stderr,
                        format="%(name)s: %(message)s")
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, ns = parse_args(argv)
    except UsageError as exc:
        print(f"geogate: error: {exc}", file=sys.stderr)
        return 2
    if cfg is None:
        sys.stdout.write(list_scenarios())
        return 0
    if ns.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    try:
        if cfg.threshold:
            sc = experiments.get_scenario(cfg.scenario).with_overrides(noise=cfg.noise, targets=cfg.targets)
            res = experiments.scenario_threshold(sc, seed=cfg.seed, mode=cfg.mode,
                                                 trajectories=cfg.trajectories, dt=cfg.dt)
            print(f"gamma_thres={res.gamma_thres:.6g} bracket_width={res.bracket_width:.3g} "
                  f"tau={res.tau:.9g} gamma_thres_tau={res.product:.6g} n_traj={res.trajectories}")
            return 0
        rows = run(cfg)
        text = emit_table(rows, cfg.out)
    except TrajectoryError as exc:
        print(f"geogate: trajectory aborted: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"geogate: error: {exc}", file=sys.stderr)
        return 1
    if cfg.out is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
