import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from xpoint import model
from xpoint.errors import UnsupportedParameters
from xpoint.integrate import IntegratorConfig, integrate_full, integrate_q
from xpoint.model import (CoefficientState, InitialData, RegimeLabel, VorticitySpec, classify,
                          classify_qp, compute_c, potential_U)


def data(a1=0.0, a2=0.0, b1=0.0, b2=0.0, b0=0.0, di=1.0, de=0.0, spec=None):
    return InitialData(a1, a2, b1, b2, b0, di, de, spec or VorticitySpec.zero())


class TestRhs:
    def test_zero_state_fixed(self):
        assert np.all(model.rhs_full(np.zeros(5), 0.0, 1.0, 0.0) == 0)

    def test_b_alone_is_constant(self):
        assert np.all(model.rhs_full(np.array([0, 0, 0, 0, 1.0]), 0.0, 1.0, 0.0) == 0)

    def test_bdot_hand_value(self):
        d = model.rhs_full(np.array([1.0, 0, 0, 1.0, 0]), 0.0, 1.0, 0.0)
        assert d[4] == -4.0

    def test_gamma_scales_alpha_beta(self):
        d = model.rhs_full(np.array([1.0, 2.0, 3.0, 4.0, 0.0]), 0.5, 1.0, 0.0)
        np.testing.assert_allclose(d[:4], [1.0, -2.0, 3.0, -4.0])

    def test_q_rhs(self):
        np.testing.assert_allclose(model.rhs_q(np.array([1.0, 0.3]), 0.5), [0.3, 1.0])


class TestConstantC:
    def test_zero(self):
        assert compute_c(data()) == 0

    def test_b_only(self):
        assert compute_c(data(b0=1.0)) == 1.0

    def test_alpha_beta(self):
        assert compute_c(data(a1=0.5, b2=0.5)) == pytest.approx(1.0)

    def test_is_constant_of_motion(self):
        # restarting from any later state must give the same c
        init = data(0.3, 0.4, -0.2, 0.25, 0.5, 1.0, 0.1)
        traj = integrate_full(init, IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, max_time=1.0))
        c0 = compute_c(init)
        for y in traj.y[::5]:
            later = InitialData(*y, 1.0, 0.1, VorticitySpec.zero())
            assert compute_c(later) == pytest.approx(c0, abs=1e-9)


class TestConservation:
    def test_initial_state_zero(self):
        init = data(0.3, 0.4, -0.2, 0.25, 0.5, 1.0, 0.1)
        assert model.conservation_triplet(init.state(), init) == (0.0, 0.0, 0.0)

    def test_along_numeric_trajectory(self):
        init = data(0.3, 0.4, -0.2, 0.25, 0.5, 1.0, 0.1, VorticitySpec.constant(0.2))
        traj = integrate_full(init, IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, max_time=1.0))
        assert traj.t_end == pytest.approx(1.0)
        r = model.conservation_triplet(CoefficientState.from_array(1.0, traj.y[-1]), init)
        assert max(abs(v) for v in r) < 1e-9

    def test_tabulated_gamma(self):
        spec = VorticitySpec.tabulated([(0.0, 0.0), (0.5, 0.3), (1.0, -0.1)])
        init = data(0.3, 0.4, -0.2, 0.25, 0.5, 1.0, 0.1, spec)
        traj = integrate_full(init, IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, max_time=1.0))
        for t, y in zip(traj.t, traj.y):
            r = model.conservation_triplet(CoefficientState.from_array(t, y), init)
            assert max(abs(v) for v in r) < 1e-9


class TestPotential:
    def test_origin(self):
        assert potential_U(0.0, 0.5) == 0.0

    def test_saddle_value(self):
        assert potential_U(math.sqrt(0.5), 0.5) == pytest.approx(0.125, abs=1e-15)

    def test_curvature(self):
        h = 1e-4
        second = (potential_U(h, 0.5) - 2 * potential_U(0.0, 0.5) + potential_U(-h, 0.5)) / h**2
        assert abs(second - 1.0) < 1e-6


class TestClassify:
    c = 0.5

    def test_separatrix(self):
        p = classify_qp(self.c, 0.0, self.c)
        assert p.regime is RegimeLabel.SEPARATRIX
        assert p.epsilon == pytest.approx(1.0)

    def test_bounded(self):
        mu = 0.8
        p = classify_qp(self.c, math.sqrt(2 * self.c) * math.sin(mu / 2), 0.0)
        assert p.regime is RegimeLabel.B_BOUNDED
        assert p.epsilon == pytest.approx(math.sin(mu) ** 2, abs=1e-14)
        assert p.angle == pytest.approx(mu, abs=1e-12)

    def test_unbounded_B(self):
        mu = 0.8
        p = classify_qp(self.c, math.sqrt(2 * self.c) * math.cos(mu / 2), 0.0)
        assert p.regime is RegimeLabel.B_UNBOUNDED
        assert p.epsilon == pytest.approx(math.sin(mu) ** 2, abs=1e-14)

    def test_region_C(self):
        nu = 0.5
        p = classify_qp(self.c, math.sqrt(2 * self.c) * math.cosh(nu / 2), 0.0)
        assert p.regime is RegimeLabel.C_UNBOUNDED
        assert p.epsilon == pytest.approx(-math.sinh(nu) ** 2, abs=1e-14)
        assert p.angle == pytest.approx(nu, abs=1e-12)

    def test_region_A(self):
        p = classify_qp(self.c, 0.0, self.c * math.cosh(0.3))
        assert p.regime is RegimeLabel.A_UNBOUNDED
        assert p.epsilon == pytest.approx(math.cosh(0.3) ** 2, abs=1e-14)
        assert p.angle == pytest.approx(0.3, abs=1e-12)
        assert p.phi_A == pytest.approx(math.atan(math.sinh(0.3)), abs=1e-14)
        assert not p.c0_is_real

    @pytest.mark.parametrize("c", [0.0, -0.3])
    def test_nonpositive_c(self, c):
        with pytest.raises(UnsupportedParameters):
            classify_qp(c, 0.1, 0.1)

    def test_from_physical_data(self):
        p = classify(data(b0=1.0))
        assert p.c == 1.0
        assert p.energy_E == pytest.approx(0.5)
        assert p.regime is RegimeLabel.SEPARATRIX

    def test_scale_uses_both_skin_depths(self):
        init = data(0.5, 0.0, 0.0, 0.5, 0.3, 1.0, 0.2)
        p = classify(init)
        s = math.sqrt(4 * 0.04 + 1.0)
        assert p.q0 == pytest.approx(s * 0.3)
        assert p.qdot0 == pytest.approx(s * -4 * 0.25)

    def test_energy_definition(self):
        p = classify_qp(0.7, 0.2, -0.4)
        assert p.energy_E == pytest.approx(0.5 * 0.7**2 * p.epsilon, rel=1e-14)
        assert p.energy_E == pytest.approx(0.5 * 0.16 + potential_U(0.2, 0.7), rel=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(c=st.floats(0.05, 3.0), q=st.floats(-2, 2), p=st.floats(-2, 2))
    def test_c0_consistency(self, c, q, p):
        prm = classify_qp(c, q, p)
        assume(prm.epsilon <= 1.0)
        assert prm.c0.real == pytest.approx(c * math.sqrt(1 - prm.epsilon), abs=1e-12 * max(1, c * c))

    @settings(max_examples=60, deadline=None)
    @given(c=st.floats(0.05, 3.0), eps=st.floats(-3, 3), lam=st.floats(0.2, 5.0))
    def test_label_invariant_under_rescaling(self, c, eps, lam):
        # q -> lam q, t -> t/lam maps c -> lam^2 c and keeps eps
        # eps = 0 and eps = 1 are label boundaries; roundoff may cross them
        assume(abs(eps - 1) > 1e-6 and abs(eps) > 1e-6)
        for bounded in (True, False):
            q, p = model.canonical_qp(c, eps, bounded)
            a = classify_qp(c, q, p)
            b = classify_qp(lam * lam * c, lam * q, lam * lam * p)
            assert a.regime is b.regime
            assert b.epsilon == pytest.approx(a.epsilon, abs=1e-9)


class TestTurningPoints:
    def test_zero_energy(self):
        tp = model.turning_points(0.5, 0.0)
        np.testing.assert_allclose(tp, [-1.0, 0.0, 0.0, 1.0], atol=1e-15)

    def test_separatrix_merges(self):
        r = math.sqrt(0.5)
        assert model.turning_points(0.5, 1.0) == pytest.approx([-r, r])
        assert model.turning_points(0.5, 1 - 1e-12) == pytest.approx([-r, -r, r, r], abs=1e-5)

    def test_none_above(self):
        assert model.turning_points(0.5, 1.5) == []

    def test_region_C_outer_only(self):
        tp = model.turning_points(0.5, -0.5)
        assert len(tp) == 2

    @settings(max_examples=50, deadline=None)
    @given(c=st.floats(0.05, 3.0), eps=st.floats(-3, 0.999))
    def test_are_zero_velocity_points(self, c, eps):
        for q in model.turning_points(c, eps):
            assert potential_U(q, c) == pytest.approx(0.5 * c * c * eps, abs=1e-12 * max(1, c * c))


class TestFields:
    def test_zero_state(self):
        f = model.field_snapshot(CoefficientState(0, 0, 0, 0, 0, 0), 0.0, np.ones(3), np.ones(3))
        assert all(np.all(a == 0) for a in f)

    def test_symmetric_psi(self):
        _, psi, _, _ = model.field_snapshot(CoefficientState(0, 1, 1, 0, 0, 0), 0.0, 1.0, 1.0)
        assert psi == 0

    def test_bz(self):
        *_, bz = model.field_snapshot(CoefficientState(0, 0, 0, 0, 0, 2.0), 0.0, 0.5, 0.5)
        assert bz == 0.5

    def test_flow_potential(self):
        phi, *_ = model.field_snapshot(CoefficientState(0, 0, 0, 0, 0, 0), 0.3, 2.0, -1.0)
        assert phi == pytest.approx(-0.6)


class TestVorticitySpec:
    def test_zero(self):
        s = VorticitySpec.zero()
        assert s.gamma_at(1.0) == 0 and s.Gamma(2.0) == 0

    def test_constant(self):
        s = VorticitySpec.constant(0.2)
        assert s.Gamma(1.5) == pytest.approx(0.3)
        np.testing.assert_allclose(s.Gamma(np.array([0.0, 1.0])), [0.0, 0.2])

    def test_tabulated_trapezoid(self):
        s = VorticitySpec.tabulated([(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)])
        assert s.gamma_at(0.5) == pytest.approx(0.5)
        assert s.Gamma(1.0) == pytest.approx(0.5)
        assert s.Gamma(2.0) == pytest.approx(1.0)
        assert s.Gamma(0.5) == pytest.approx(0.125)

    def test_tabulated_must_increase(self):
        with pytest.raises(ValueError):
            VorticitySpec.tabulated([(0.0, 0.0), (0.0, 1.0)])


class TestInitialData:
    def test_requires_positive_di(self):
        with pytest.raises(ValueError):
            data(di=0.0)

    def test_requires_nonnegative_de(self):
        with pytest.raises(ValueError):
            data(de=-0.1)

    @settings(max_examples=50, deadline=None)
    @given(c=st.floats(0.05, 2.0), q=st.floats(-1.5, 1.5), p=st.floats(-1.5, 1.5),
           de=st.sampled_from([0.0, 0.1, 0.3]))
    def test_inverse_map_round_trip(self, c, q, p, de):
        init = model.initial_data_for(c, q, p, d_e=de)
        prm = classify(init)
        assert prm.c == pytest.approx(c, abs=1e-12)
        assert prm.q0 == pytest.approx(q, abs=1e-12)
        assert prm.qdot0 == pytest.approx(p, abs=1e-12)


def test_b_equation_matches_full_system():
    # the reduction holds for any sign of c, so no classification is needed here
    init = data(0.3, 0.4, -0.2, 0.25, 0.5, 1.0, 0.1)
    s = init.scale
    cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, max_time=1.0)
    full = integrate_full(init, cfg)
    scalar = integrate_q(compute_c(init), s * init.b_0, s * init.bdot_0, cfg)
    ts = np.linspace(0, 1.0, 50)
    b_full = full(ts)[:, 4]
    b_scalar = scalar(ts)[:, 0] / init.scale
    assert np.max(np.abs(b_full - b_scalar)) < 1e-8


def test_energy_law_along_numeric_orbit():
    c = 0.5
    q0, p0 = model.canonical_qp(c, 0.5, bounded=True)
    traj = integrate_q(c, q0, p0, IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, max_time=5.0))
    E = model.energy(q0, p0, c)
    drift = np.max(np.abs(model.energy(traj.y[:, 0], traj.y[:, 1], c) - E))
    assert drift < 1e-9 * traj.t_end
