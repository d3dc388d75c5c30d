"""Acceptance checks at full statistics.

Each test records one PASS/FAIL line, collected in the terminal summary.
Expensive ensembles are cached so criteria that share a threshold or a
sweep compute it once.  Full-mode runtime is roughly a quarter of an hour
on one core.
"""

import functools
import math

import numpy as np
import pytest

from geogate import cli, metrics, oracle, qcore, qsd
from geogate import experiments as E
from geogate import schedule as S

SEED = 42
N = 1000
TARGET_PRODUCT = 4 * math.pi / 75

pytestmark = pytest.mark.slow


def cfg(**kw):
    base = dict(dt=5e-4, seed=SEED, trajectories=N)
    base.update(kw)
    return qsd.IntegratorConfig(**base)


@functools.lru_cache(maxsize=None)
def sweep(name, gammas=None, mode="full"):
    sc = E.get_scenario(name)
    if gammas is not None:
        sc = sc.with_overrides(gammas=gammas)
    return tuple(E.run_scenario(sc, seed=SEED, mode=mode))


@functools.lru_cache(maxsize=None)
def threshold(name):
    return E.scenario_threshold(E.get_scenario(name), seed=SEED)


def test_01_zero_noise_single_qubit(record_criterion):
    f = {}
    for name in ("fig1b", "fig1a"):
        sc = E.get_scenario(name)
        f[name] = 1 - E.evaluate_point(sc, 0.0, cfg(trajectories=1)).loss
    ok = f["fig1b"] >= 0.9998 and f["fig1a"] >= 0.9999
    assert record_criterion(1, "zero-noise single-qubit fidelity", ok,
                            f"f(pi) = {f['fig1b']:.7f} (>= 0.9998), f(pi/8) = {f['fig1a']:.7f} (>= 0.9999)")


def test_02_zero_noise_conditional(record_criterion):
    row = E.evaluate_point(E.get_scenario("fig2a"), 0.0, cfg(trajectories=1))
    f = 1 - row.loss
    ok = f >= 0.999 and row.concurrence >= 0.999
    assert record_criterion(2, "zero-noise conditional gate", ok,
                            f"fidelity = {f:.6f}, concurrence = {row.concurrence:.6f} (both >= 0.999)")


def test_03_isotropic_law(record_criterion):
    gammas = (0.002, 0.005, 0.01)
    parts, ok = [], True
    for mode, tol in (("full", 0.02), ("oracle", 5e-3)):
        for row in sweep("fig1b", gammas, mode):
            law = 0.5 * (1 - math.exp(-4 * row.gamma * row.tau))
            dev = abs(row.loss - law)
            ok &= dev <= tol
            parts.append(f"{mode} G={row.gamma:g} |dev|={dev:.2e}")
    assert record_criterion(3, "isotropic loss law", ok, "; ".join(parts) + " (tol 2e-2 / 5e-3)")


def test_04_anisotropy_ordering(record_criterion):
    small = E.compare_anisotropy(sweep("fig1a-iv"), sweep("fig1a"))
    large = E.compare_anisotropy(sweep("fig1a-iii"), sweep("fig1a-ii"))
    ordered = small.dominant == "z" and min(small.z_margin) >= 2
    closer = all(abs(math.log(rl)) < abs(math.log(rs)) for rs, rl in zip(small.ratios, large.ratios))
    ratios = ", ".join(f"{rs:.3f}/{rl:.3f}" for rs, rl in zip(small.ratios, large.ratios))
    assert record_criterion(4, "anisotropy ordering", ordered and closer,
                            f"min z-x margin at pi/8 = {min(small.z_margin):.1f} SE (>= 2); "
                            f"z/x ratios pi/8 vs pi per rate: {ratios}")


def test_05_entanglement_threshold(record_criterion):
    res = threshold("fig2a")
    ok = 0.0035 <= res.gamma_thres <= 0.0055
    assert record_criterion(5, "adiabatic entanglement threshold", ok,
                            f"G_thres = {res.gamma_thres:.5f} +- {res.bracket_width / 2:.1e} "
                            f"(window [0.0035, 0.0055], N = {res.trajectories})")


def test_06_time_decoherence_product(record_criterion):
    products = {name: threshold(name).product for name in ("fig2a", "fig3a")}
    ok = all(abs(p / TARGET_PRODUCT - 1) <= 0.15 for p in products.values())
    detail = ", ".join(f"{k}: G*tau = {v:.4f} ({100 * (v / TARGET_PRODUCT - 1):+.1f}%)" for k, v in products.items())
    assert record_criterion(6, "time-decoherence product", ok, detail + f" vs {TARGET_PRODUCT:.4f} +- 15%")


def test_07_dynamic_and_fast_thresholds(record_criterion):
    dyn, fast = threshold("fig3a"), threshold("fig3b")
    ratio = fast.tau / dyn.tau
    ok = abs(dyn.gamma_thres - 2) <= 0.3 and abs(fast.gamma_thres - 0.945) <= 0.15 and ratio == 2.0
    assert record_criterion(7, "dynamic and fast gate thresholds", ok,
                            f"dynamic {dyn.gamma_thres:.3f} (2 +- 0.3), fast {fast.gamma_thres:.3f} "
                            f"(0.945 +- 0.15), tau ratio {ratio!r}")


def test_08_oracle_equivalence(record_criterion):
    cases = {
        "dephasing": (S.build_free(2.0), qsd.NoiseModel.preset("z", 0.25, "single")),
        "single iso G=0.005": (E.build_schedule(E.get_scenario("fig1b")),
                               qsd.NoiseModel.preset("iso", 0.005, "single")),
        "conditional G=0.002": (E.build_schedule(E.get_scenario("fig2a")),
                                qsd.NoiseModel.preset("iso", 0.002, "both")),
    }
    dists = {}
    for name, (sched, noise) in cases.items():
        rho_qsd = qsd.run_ensemble(sched, noise, cfg()).rho
        rho_ora = oracle.integrate_lindblad(sched, noise, dt=5e-4).final
        dists[name] = qcore.trace_distance(rho_qsd, rho_ora)
    ok = all(d <= 0.03 for d in dists.values())
    assert record_criterion(8, "trajectory ensemble vs master equation", ok,
                            ", ".join(f"{k}: D = {v:.4f}" for k, v in dists.items()) + " (<= 0.03)")


def test_09_analytic_dephasing(record_criterion):
    gamma, t_end = 0.5, 2.0
    res = qsd.run_ensemble(S.build_free(t_end), qsd.NoiseModel.preset("z", gamma, "single"),
                           cfg(dt=1e-3, sample_stride=200))
    sx = np.einsum("ntj,jk,ntk->nt", res.sample_states.conj(), qcore.pauli("x"), res.sample_states).real
    mean = sx.mean(axis=0)
    se = sx.std(axis=0, ddof=1) / math.sqrt(sx.shape[0])
    z = np.abs(mean - np.exp(-2 * gamma * res.sample_times)) / se
    ok = len(z) == 10 and bool(np.all(z <= 3))
    assert record_criterion(9, "analytic dephasing", ok,
                            f"{len(z)} sampled times, max |dev|/SE = {z.max():.2f} (<= 3)")


def test_10_entanglement_metric_oracles(record_criterion):
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    cases = [("bell", qcore.projector(bell), 1.0),
             ("product", qcore.projector(np.array([1, 1, 1, 1]) / 2), 0.0),
             ("entangling target", qcore.projector(metrics.maximally_entangled_target()), 1.0),
             ("signed target", qcore.projector(metrics.conditional_target(-math.pi / 8)), 1.0),
             ("partial target", qcore.projector(metrics.conditional_target(0.1)), math.sin(0.4))]
    for p in np.linspace(0, 1, 11):
        rho = p * qcore.projector(bell) + (1 - p) * np.eye(4) / 4
        cases.append((f"werner p={p:.1f}", rho, max(0.0, (3 * p - 1) / 2)))
    worst = 0.0
    for _, rho, c in cases:
        x = 0.5 * (1 + math.sqrt(1 - c * c))
        e = 0.0 if x >= 1 else -x * math.log2(x) - (1 - x) * math.log2(1 - x)
        worst = max(worst, abs(metrics.concurrence(rho) - c), abs(metrics.eof(rho) - e))
    assert record_criterion(10, "entanglement metric oracles", worst <= 1e-8,
                            f"{len(cases)} states, max error {worst:.1e} (<= 1e-8)")


def test_11_determinism_across_workers(record_criterion, tmp_path, monkeypatch):
    argv = ["--scenario", "fig2a", "--gamma-grid", "0,0.004", "--trajectories", "40", "--seed", "7"]
    blobs = {}
    for workers in (1, 2, 8):
        monkeypatch.setenv(qsd.WORKERS_ENV, str(workers))
        out = tmp_path / f"w{workers}.csv"
        assert cli.main(argv + ["--out", str(out)]) == 0
        blobs[workers] = out.read_bytes()
    ok = blobs[1] == blobs[2] == blobs[8]
    assert record_criterion(11, "byte-identical CSV across worker counts", ok,
                            f"workers 1/2/8, {len(blobs[1])} bytes each")


def test_12_entropy_exceeds_loss(record_criterion):
    grid = E.get_scenario("fig1b").gammas
    smallest = tuple(sorted(g for g in grid if g > 0)[:3])
    margins = [(r.entropy - r.loss) / math.hypot(r.se_entropy, r.se_loss) for r in sweep("fig1b", smallest)]
    ok = all(m >= 2 for m in margins)
    assert record_criterion(12, "entropy grows faster than loss", ok,
                            ", ".join(f"G={g:.2e}: {m:.1f} SE" for g, m in zip(smallest, margins)) + " (>= 2)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
