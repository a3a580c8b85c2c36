import math

import numpy as np
import pytest

from xpoint import closedform as cf
from xpoint import model
from xpoint.integrate import (IntegratorConfig, Terminal, integrate_full, integrate_q,
                              monitor_conservation, solve_ode, _aitken)
from xpoint.model import InitialData, VorticitySpec

C = 0.5
TIGHT = dict(rel_tol=1e-12, abs_tol=1e-14)
MIXED = (0.3, 0.4, -0.2, 0.25, 0.5)


def mixed(de=0.1, gamma=0.2):
    spec = VorticitySpec.constant(gamma) if gamma else VorticitySpec.zero()
    return InitialData(*MIXED, 1.0, de, spec)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(rel_tol=0), dict(abs_tol=-1), dict(blowup_threshold=0.5),
                                    dict(max_step=0), dict(max_time=-1)])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            IntegratorConfig(**kw)


class TestBasics:
    def test_zero_data_stays_zero(self):
        init = InitialData(0, 0, 0, 0, 0, 1.0, 0.0)
        traj = integrate_full(init, IntegratorConfig(max_time=3.0))
        assert traj.terminal is Terminal.REACHED_MAX_TIME
        assert np.all(traj.y == 0)
        assert monitor_conservation(traj, init) == (0.0, 0.0, 0.0)

    def test_rest_point(self):
        traj = integrate_q(C, 0.0, 0.0, IntegratorConfig(max_time=2.0))
        assert np.all(traj.y == 0) and traj.t_end == pytest.approx(2.0)

    def test_exponential_growth(self):
        traj = solve_ode(lambda t, y: y, np.array([1.0]), IntegratorConfig(max_time=1.0, **TIGHT))
        assert traj.y[-1, 0] == pytest.approx(math.e, rel=1e-11)

    def test_dense_output_is_accurate(self):
        traj = solve_ode(lambda t, y: np.array([y[1], -y[0]]), np.array([0.0, 1.0]),
                         IntegratorConfig(max_time=6.0, **TIGHT))
        ts = np.linspace(0, 6, 301)
        assert np.max(np.abs(traj(ts)[:, 0] - np.sin(ts))) < 1e-9

    def test_dense_output_range(self):
        traj = integrate_q(C, 0.1, 0.0, IntegratorConfig(max_time=1.0))
        with pytest.raises(ValueError):
            traj([1.5])

    def test_states(self):
        traj = integrate_full(mixed(), IntegratorConfig(max_time=0.5))
        s = traj.states()
        assert s[0].alpha1 == MIXED[0] and s[-1].t == pytest.approx(0.5)


class TestAgainstClosedForms:
    def test_bounded_periodic(self):
        q0, p0 = model.canonical_qp(C, 0.5, bounded=True)
        orb = cf.solve_B_bounded(C, math.asin(math.sqrt(0.5)))
        init = model.initial_data_for(C, q0, p0)
        prm = model.classify(init)
        assert prm.regime is model.RegimeLabel.B_BOUNDED
        traj = integrate_q(prm.c, prm.q0, prm.qdot0, IntegratorConfig(max_time=3 * orb.period, **TIGHT))
        ts = np.linspace(0, orb.period, 50)
        for n in (1, 2, 3):
            assert np.max(np.abs(traj(ts + (n - 1) * orb.period)[:, 0] - orb.q(ts))) < 1e-8
        assert abs(traj(3 * orb.period)[0, 0] - q0) < 1e-8

    def test_region_C_blowup(self):
        orb = cf.solve_C(C, 0.6)
        traj = integrate_q(C, orb.q(0.0), 0.0, IntegratorConfig(max_time=5.0, **TIGHT))
        assert traj.terminal is Terminal.BLOWUP_DETECTED
        assert abs(traj.t_blowup - orb.t_blowup) < 1e-5
        assert traj.bracket_width == pytest.approx(1e-8)

    def test_separatrix_stays_inside(self):
        traj = integrate_q(C, 0.0, C, IntegratorConfig(max_time=20.0, **TIGHT))
        assert traj.terminal is Terminal.REACHED_MAX_TIME
        assert np.max(np.abs(traj.y[:, 0])) < math.sqrt(C)

    def test_energy_drift(self):
        q0, p0 = model.canonical_qp(C, 0.5)
        traj = integrate_q(C, q0, p0, IntegratorConfig(max_time=10.0, **TIGHT))
        E = model.energy(q0, p0, C)
        err = np.abs(model.energy(traj.y[:, 0], traj.y[:, 1], C) - E)
        assert np.all(err <= 1e-9 * np.maximum(traj.t, 1.0))


class TestConservation:
    def test_generic_data(self):
        init = mixed()
        traj = integrate_full(init, IntegratorConfig(max_time=1.0, **TIGHT))
        assert max(monitor_conservation(traj, init)) < 1e-8

    def test_tightening_reduces_residuals(self):
        init = mixed()
        loose = max(monitor_conservation(integrate_full(init, IntegratorConfig(rel_tol=1e-6, abs_tol=1e-9, max_time=1.0)), init))
        tight = max(monitor_conservation(integrate_full(init, IntegratorConfig(rel_tol=1e-7, abs_tol=1e-10, max_time=1.0)), init))
        assert tight * 5 <= loose


class TestOrder:
    def test_fixed_step_order(self):
        q0, p0 = model.canonical_qp(C, 0.5)
        ref = integrate_q(C, q0, p0, IntegratorConfig(rel_tol=1e-13, abs_tol=1e-15, max_time=2.0)).y[-1]
        errs = []
        for h in (0.2, 0.1, 0.05):
            y = integrate_q(C, q0, p0, IntegratorConfig(fixed_step=h, max_time=2.0)).y[-1]
            errs.append(np.max(np.abs(y - ref)))
        # order >= 4 within a factor of 2: halving h gains at least 2^4 / 2
        assert errs[0] / errs[1] >= 8 and errs[1] / errs[2] >= 8

    def test_adaptive_error_tracks_tolerance(self):
        q0, p0 = model.canonical_qp(C, 0.5)
        orb = cf.solve_B_bounded(C, math.asin(math.sqrt(0.5)))
        errs = []
        for tol in (1e-6, 1e-8, 1e-10):
            traj = integrate_q(C, q0, p0, IntegratorConfig(rel_tol=tol, abs_tol=tol * 1e-2, max_time=5.0))
            errs.append(abs(traj.y[-1, 0] - orb.q(5.0)))
        assert errs[0] > errs[1] > errs[2]


class TestBlowupDetection:
    def test_threshold_independence(self):
        orb = cf.solve_C(C, 0.6)
        est = []
        for thr in (1e6, 1e8, 1e10):
            traj = integrate_q(C, orb.q(0.0), 0.0,
                               IntegratorConfig(blowup_threshold=thr, max_time=5.0, **TIGHT))
            est.append(traj.t_blowup)
        assert max(est) - min(est) < 1e-5
        assert all(abs(e - orb.t_blowup) < 1e-5 for e in est)

    def test_crossings_increase_toward_pole(self):
        orb = cf.solve_B_unbounded(C, 0.6)
        traj = integrate_q(C, orb.q(0.0), 0.0, IntegratorConfig(max_time=5.0, **TIGHT))
        t0, t1, t2 = traj.crossings
        assert t0 < t1 < t2 < orb.t_blowup + 1e-7
        assert traj.t_blowup >= t2

    def test_aitken_exact_for_geometric(self):
        assert _aitken((1.0, 1.5, 1.75)) == pytest.approx(2.0)
        assert _aitken((1.0, 1.0, 1.0)) == 1.0

    def test_full_system_blowup(self):
        init = model.initial_data_for(C, *model.canonical_qp(C, 0.5, bounded=False))
        traj = integrate_full(init, IntegratorConfig(max_time=5.0, **TIGHT))
        assert traj.terminal is Terminal.BLOWUP_DETECTED
        assert abs(traj.t_blowup - cf.blowup_time_eps(C, 0.5)) < 1e-5


def test_full_and_scalar_agree_on_b():
    init = model.initial_data_for(C, 0.9, 0.3, d_i=1.3)
    prm = model.classify(init)
    end = min(1.0, 0.9 * cf.exact_orbit(init).t_blowup)
    cfg = IntegratorConfig(max_time=end, **TIGHT)
    full = integrate_full(init, cfg)
    scalar = integrate_q(prm.c, prm.q0, prm.qdot0, cfg)
    ts = np.linspace(0, end, 40)
    assert np.max(np.abs(full(ts)[:, 4] - scalar(ts)[:, 0] / init.d_i)) < 1e-8
