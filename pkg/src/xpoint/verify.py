"""Cross-check battery: closed forms against the oracle and against each other.

Each check returns a ``CheckResult``; ``run_checks`` drives a selection of
them. The CLI ``verify`` command is a thin wrapper around this module.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import closedform as cf
from . import elliptic
from . import integrate as ig
from . import model

EPS_SET = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class CheckResult:
    check_name: str
    max_residual: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.max_residual < self.tolerance)

    def as_dict(self):
        d = asdict(self)
        d["pass"] = self.passed
        return d


def _mu(eps):
    return math.asin(math.sqrt(eps))


def regime_orbits(c=0.5):
    """The five reference orbits: A (nu=0.5), B-/B+ (eps=0.5), C (nu=0.6), separatrix."""
    mu = _mu(0.5)
    return {
        "A": cf.solve_A(c, 0.5),
        "B-": cf.solve_B_bounded(c, mu),
        "B+": cf.solve_B_unbounded(c, mu),
        "C": cf.solve_C(c, 0.6),
        "separatrix": cf.solve_separatrix(c),
    }


def comparison_window(orbit, cap=10.0):
    """min(3T, 0.9 T_inf, cap)."""
    end = cap
    if orbit.period is not None:
        end = min(end, 3.0 * orbit.period)
    if orbit.t_blowup is not None:
        end = min(end, 0.9 * orbit.t_blowup)
    return end


def check_sho_limit(c=0.5):
    # linear extrapolation to eps = 0 from eps = 1e-6, 2e-6
    t1 = cf.period_jacobi(c, _mu(1e-6))
    t2 = cf.period_jacobi(c, _mu(2e-6))
    t0 = 2.0 * t1 - t2
    return CheckResult("sho_limit", abs(t0 - 2.0 * math.pi / math.sqrt(2.0 * c)), 1e-4)


def check_quarter_period(c=0.5):
    res = max(abs(cf.solve_B_unbounded(c, _mu(e)).t_blowup - cf.solve_B_bounded(c, _mu(e)).period / 4)
              for e in EPS_SET)
    return CheckResult("quarter_period", res, 1e-12)


def check_landen_equivalence(c=0.5):
    res = max(abs(cf.period_jacobi(c, _mu(e)) - cf.period_weierstrass(c, e)) for e in EPS_SET)
    return CheckResult("landen_equivalence", res, 1e-11)


def _oracle_cfg(t_end):
    return ig.IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, max_time=t_end)


def check_oracle_agreement(c=0.5):
    worst = 0.0
    for orb in regime_orbits(c).values():
        t_end = comparison_window(orb)
        traj = ig.integrate_q(c, orb.q(0.0), orb.qdot(0.0), _oracle_cfg(t_end))
        ts = np.linspace(0.0, min(t_end, traj.t_end), 400)
        worst = max(worst, float(np.max(np.abs(traj(ts)[:, 0] - orb.q(ts)))))
    return CheckResult("oracle_agreement", worst, 1e-7)


def check_blowup_times(c=0.5):
    worst = 0.0
    for name in ("A", "B+", "C"):
        orb = regime_orbits(c)[name]
        traj = ig.integrate_q(c, orb.q(0.0), orb.qdot(0.0), _oracle_cfg(2.0 * orb.t_blowup))
        if traj.t_blowup is None:
            return CheckResult("blowup_times", math.inf, 1e-5)
        worst = max(worst, abs(traj.t_blowup - orb.t_blowup))
    return CheckResult("blowup_times", worst, 1e-5)


def conservation_cases():
    """Mixed nonzero initial data over d_e in {0, 0.1} and gamma in {0, 0.2}."""
    cases = []
    for de in (0.0, 0.1):
        for g in (0.0, 0.2):
            spec = model.VorticitySpec.constant(g) if g else model.VorticitySpec.zero()
            cases.append(model.InitialData(0.3, 0.4, -0.2, 0.25, 0.5, 1.0, de, spec))
    return cases


def check_conservation():
    worst = 0.0
    for init in conservation_cases():
        traj = ig.integrate_full(init, _oracle_cfg(1.0))
        if traj.t_blowup is not None:
            end = 0.9 * traj.t_blowup
            traj = ig.integrate_full(init, _oracle_cfg(end))
        worst = max(worst, *ig.monitor_conservation(traj, init))
    return CheckResult("conservation", worst, 1e-8)


def check_initial_condition(c=0.5, flipped=False):
    """q'^2 = q^4 - 2c q^2 + c^2 - c0^2 must return qdot0^2 at t = 0."""
    worst = 0.0
    for q0, qd0 in ((0.0, c * math.cosh(0.5)), (0.3, 0.2), (0.9, -0.4), (0.2, 0.0)):
        c0_sq = model.c0_squared(q0, qd0, c, flipped=flipped)
        worst = max(worst, abs(model.velocity_squared(q0, c, c0_sq) - qd0 * qd0))
    return CheckResult("initial_condition" + ("[flipped_c0]" if flipped else ""), worst, 1e-12)


def check_exp2Q_logderiv(c=0.5, h=1e-6):
    worst = 0.0
    for name in ("A", "B-", "B+", "C"):
        orb = regime_orbits(c)[name]
        ts = np.linspace(0.05, 0.8 * comparison_window(orb, cap=5.0), 20)
        dlog = (np.log(orb.exp2Q(ts + h)) - np.log(orb.exp2Q(ts - h))) / (2.0 * h)
        worst = max(worst, float(np.max(np.abs(dlog - 2.0 * orb.q(ts)))))
    return CheckResult("exp2Q_logderiv", worst, 1e-6)


def check_exp2Q_peak(c=0.5):
    b = regime_orbits(c)["B-"]
    k = math.tan(b.angle / 2)
    return CheckResult("exp2Q_peak", abs(b.exp2Q(b.period / 4) - (1 + k) / (1 - k)), 1e-10)


def reconstruction_cases(c=0.5):
    out = {}
    for name, orb in regime_orbits(c).items():
        init = model.initial_data_for(c, orb.q(0.0), orb.qdot(0.0), d_i=1.0, d_e=0.0)
        out[name] = (init, cf.PlacedOrbit(orb, 0.0))
    return out


def reconstruction_residual(init, orbit, ts, h=1e-6):
    """Max |d/dt (alpha, beta) - rhs| using central differences of the closed forms."""
    ab = np.array(cf.reconstruct_alpha_beta(init, orbit, ts))
    ab_p = np.array(cf.reconstruct_alpha_beta(init, orbit, ts + h))
    ab_m = np.array(cf.reconstruct_alpha_beta(init, orbit, ts - h))
    deriv = (ab_p - ab_m) / (2.0 * h)
    b = np.asarray(orbit.q(ts)) / init.d_i
    gam = np.asarray(init.gamma_spec.gamma_at(ts))
    y = np.vstack([ab, b])
    rhs = model.rhs_full(y, gam, init.d_i, 0.0)[:4]
    scale = np.maximum(1.0, np.abs(ab))
    return float(np.max(np.abs(deriv - rhs) / scale))


def check_reconstruction(c=0.5):
    worst = 0.0
    for init, orbit in reconstruction_cases(c).values():
        t_end = comparison_window(orbit.orbit, cap=5.0)
        ts = np.linspace(0.05, 0.95 * t_end, 20)
        worst = max(worst, reconstruction_residual(init, orbit, ts))
    return CheckResult("reconstruction", worst, 1e-6)


def check_elliptic_identities():
    worst = 0.0
    rng = np.random.default_rng(7)
    us = rng.uniform(-3, 3, 100)
    ks = rng.uniform(0, 0.95, 100)
    for u, k in zip(us, ks):
        s, cn, dn = elliptic.jacobi_sncndn(u, k)
        worst = max(worst, abs(s * s + cn * cn - 1), abs(dn * dn + k * k * s * s - 1))
    u = np.linspace(-3, 3, 13)
    worst = max(worst, float(np.max(np.abs(np.asarray(elliptic.jacobi_sncndn(u, 1.0).sn) - np.tanh(u)))))
    worst = max(worst, abs(elliptic.complete_K(0.0) - math.pi / 2))
    return CheckResult("elliptic_identities", worst, 1e-10)


def check_sn_periodicity():
    worst = 0.0
    u = np.linspace(-2, 2, 9)
    for k in (0.1, 0.5, 0.9):
        per = 4.0 * elliptic.complete_K(k * k)
        diff = np.asarray(elliptic.jacobi_sncndn(u + per, k).sn) - np.asarray(elliptic.jacobi_sncndn(u, k).sn)
        worst = max(worst, float(np.max(np.abs(diff))))
    return CheckResult("sn_periodicity", worst, 1e-9)


CHECKS = {
    "sho_limit": check_sho_limit,
    "quarter_period": check_quarter_period,
    "landen_equivalence": check_landen_equivalence,
    "oracle_agreement": check_oracle_agreement,
    "blowup_times": check_blowup_times,
    "conservation": check_conservation,
    "initial_condition": check_initial_condition,
    "exp2Q_logderiv": check_exp2Q_logderiv,
    "exp2Q_peak": check_exp2Q_peak,
    "reconstruction": check_reconstruction,
    "elliptic_identities": check_elliptic_identities,
    "sn_periodicity": check_sn_periodicity,
}


def run_checks(names=None, flipped_c0=False):
    """Run the named checks (all when ``names`` is None) and build the summary dict."""
    names = list(CHECKS) if names is None else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks: {', '.join(unknown)}")
    results = []
    for n in names:
        if n == "initial_condition":
            results.append(check_initial_condition(flipped=flipped_c0))
        else:
            results.append(CHECKS[n]())
    return {
        "checks": [r.as_dict() for r in results],
        "n_checks": len(results),
        "empty_selection": not results,
        "all_pass": all(r.passed for r in results),
    }
