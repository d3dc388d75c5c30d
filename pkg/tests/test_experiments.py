import math

import numpy as np
import pytest

from geogate import experiments as E
from geogate import metrics

SHORT = dict(t_tip=0.2, t_loop=0.4, t_pi=0.01, trajectories=30, dt=1e-3)


def rows_from(gammas, losses, ses, tau=1.0):
    return [E.SweepRow(g, l, 0.0, None, s, 0.0, None, tau, 100, 1) for g, l, s in zip(gammas, losses, ses)]


def test_registry():
    assert {"fig1a", "fig1b", "fig2a", "fig3a", "fig3b"} <= set(E.SCENARIOS)
    with pytest.raises(KeyError, match="available"):
        E.get_scenario("nope")
    assert len(E.get_scenario("fig2a").gammas) == 11
    assert E.get_scenario("fig2a").gammas[-1] == 0.01


def test_overrides_ignore_none():
    sc = E.get_scenario("fig1b")
    assert sc.with_overrides(noise=None, trajectories=5).trajectories == 5
    assert sc.with_overrides(noise=None).noise == "iso"
    with pytest.raises(ValueError):
        sc.with_overrides(gammas=(-1.0,))
    with pytest.raises(ValueError):
        E.Scenario("bad", "quantum", "x", "single", (0.0,))


def test_schedule_durations():
    assert E.build_schedule(E.get_scenario("fig1b")).tau == pytest.approx(6.02 * math.pi)
    assert E.build_schedule(E.get_scenario("fig2a")).tau == pytest.approx(12.02 * math.pi)
    assert E.build_schedule(E.get_scenario("fig3b")).tau == pytest.approx(2 * math.pi / 37.5)


def test_conditional_target_uses_signed_phase():
    sc = E.get_scenario("fig2a")
    assert np.allclose(E.target_state(sc), metrics.conditional_target(-math.pi / 8), atol=1e-6)


def test_single_sweep_is_reproducible():
    sc = E.get_scenario("fig1b").with_overrides(gammas=(0.0, 0.05), **SHORT)
    a = E.run_scenario(sc, seed=5, workers=1)
    b = E.run_scenario(sc, seed=5, workers=3)
    assert a == b
    assert [r.gamma for r in a] == [0.0, 0.05]
    assert all(r.eof is None and r.se_eof is None for r in a)
    assert a[1].loss > a[0].loss and a[1].entropy > a[0].entropy
    assert a[0].n_traj == 30 and a[0].seed == 5


def test_two_qubit_sweep_has_entanglement_columns():
    sc = E.get_scenario("fig3a").with_overrides(gammas=(0.0, 4.0), trajectories=40)
    rows = E.run_scenario(sc, workers=2)
    assert rows[0].eof == pytest.approx(1.0, abs=1e-6)
    assert rows[0].concurrence == pytest.approx(1.0, abs=1e-6)
    assert rows[1].eof == 0.0


def test_oracle_mode_isotropic_law():
    sc = E.get_scenario("fig1b").with_overrides(gammas=(0.1,), **SHORT)
    row = E.run_scenario(sc, mode="oracle")[0]
    assert row.loss == pytest.approx(0.5 * (1 - math.exp(-4 * 0.1 * row.tau)), abs=2e-3)
    assert row.n_traj == 0 and row.se_loss == 0.0


def test_fast_mode_defaults():
    cfg = E._config(E.get_scenario("fig1b"), "fast", 1, None, None, None)
    assert cfg.trajectories == E.FAST_TRAJECTORIES and cfg.dt == E.FAST_DT
    with pytest.raises(ValueError):
        E._config(E.get_scenario("fig1b"), "turbo", 1, None, None, None)


def test_threshold_needs_two_qubits():
    with pytest.raises(ValueError):
        E.scenario_threshold(E.get_scenario("fig1b"))
    with pytest.raises(ValueError):
        E.scenario_threshold(E.get_scenario("fig2b"))


def test_oracle_threshold_dynamic_gate():
    res = E.scenario_threshold(E.get_scenario("fig3a"), mode="oracle", dt=1e-3)
    assert 1.7 < res.gamma_thres < 2.3
    assert res.trajectories == 0


def test_compare_anisotropy():
    g = [0.0, 0.1, 0.2]
    x = rows_from(g, [0.0, 0.1, 0.2], [0.0, 0.01, 0.01])
    z = rows_from(g, [0.0, 0.2, 0.4], [0.0, 0.01, 0.01])
    rep = E.compare_anisotropy(x, z)
    assert rep.dominant == "z"
    assert rep.distinction == pytest.approx(math.log(2))
    assert E.compare_anisotropy(x, x).dominant == "none"
    with pytest.raises(ValueError):
        E.compare_anisotropy(x, z[:2])


def test_exponential_fit_recovers_rate():
    g = np.linspace(0, 0.01, 11)
    tau = 6.02 * math.pi
    loss = 0.5 * (1 - np.exp(-4 * tau * g))
    fit = E.fit_exponential_loss(rows_from(g, loss, np.zeros(11), tau))
    assert fit.normalized == pytest.approx(1.0, rel=1e-8)
    assert fit.max_residual < 1e-10
    assert E.fit_exponential_loss(rows_from(g, np.zeros(11), np.zeros(11), tau)).rate == 0.0
    with pytest.raises(ValueError):
        E.fit_exponential_loss(rows_from(g[:3], loss[:3], np.zeros(3), tau))
