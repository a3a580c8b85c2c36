"""Exact orbits of the quartic oscillator and the d_e = 0 coefficient solution.

Every orbit is built at its canonical starting point (a turning point, or
q = 0 for energies above the saddles) with an explicit ``sign`` for the
mirror orbit q -> -q. Arbitrary initial data are handled by ``place_orbit``,
which finds the time shift onto the canonical orbit numerically.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import elliptic
from .errors import (DegenerateOrbit, DomainError, NoBlowup, PoleError, RealityError,
                     UnsupportedParameters)
from .model import RegimeLabel, classify

POLE_GUARD = 1e-8
IMAG_TOL = 1e-9


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


@dataclass(frozen=True)
class OrbitSolution:
    """Closed-form q(t) for one regime; immutable, evaluation is pure."""

    regime: RegimeLabel
    c: float
    angle: float
    k_modulus: complex
    omega_freq: complex
    q0_amp: float
    period: float | None = None
    t_blowup: float | None = None
    sign: int = 1

    def _guard(self, t):
        t = np.asarray(t, dtype=float)
        if self.t_blowup is not None:
            near = np.abs(t) > self.t_blowup - POLE_GUARD
            if np.any(near):
                raise PoleError(
                    f"t={float(np.ravel(t)[np.flatnonzero(near)[0]])!r} is at or past the "
                    f"finite-time singularity T_inf={self.t_blowup!r}",
                    location=self.t_blowup)
        return t

    def q(self, t):
        return _out(self.sign * self._q(self._guard(t)))

    def qdot(self, t):
        return _out(self.sign * self._qdot(self._guard(t)))

    def exp2Q(self, t):
        """exp(2 int_0^t q dt')."""
        val = self._exp2Q(self._guard(t))
        return _out(val if self.sign > 0 else 1.0 / val)

    def _q(self, t):
        raise NotImplementedError

    def _qdot(self, t):
        raise NotImplementedError

    def _exp2Q(self, t):
        raise NotImplementedError


def _real_part(z, what):
    z = np.asarray(z)
    bad = np.abs(z.imag) > IMAG_TOL * np.maximum(1.0, np.abs(z.real))
    if np.any(bad):
        raise RealityError(f"{what}: imaginary residual {float(np.max(np.abs(z.imag)))!r}")
    return z.real


class RegionAOrbit(OrbitSolution):
    """q = sqrt(qdot0) e^{i Phi/2} sn(Omega t, e^{i Phi}), energy above the saddles."""

    @property
    def _amp(self):
        return cmath.sqrt(self.q0_amp) * cmath.exp(0.5j * self.angle_phi)

    @property
    def angle_phi(self):
        return cmath.phase(self.k_modulus)

    def q_complex(self, t):
        t = np.asarray(t, dtype=float)
        return self._amp * np.asarray(elliptic.jacobi_sncndn(self.omega_freq * t, self.k_modulus).sn)

    def _q(self, t):
        return _real_part(self.q_complex(t), "region-A q")

    def _qdot(self, t):
        tri = elliptic.jacobi_sncndn(self.omega_freq * t, self.k_modulus)
        return _real_part(self.q0_amp * np.asarray(tri.cn) * np.asarray(tri.dn), "region-A qdot")

    def _exp2Q(self, t):
        k = self.k_modulus
        tri = elliptic.jacobi_sncndn(self.omega_freq * t, k)
        z = ((np.asarray(tri.dn) - k * np.asarray(tri.cn)) / (1.0 - k)) ** 2
        return _real_part(z, "region-A exp(2Q)")


class SeparatrixOrbit(OrbitSolution):
    """q = sqrt(c) tanh(sqrt(c) t)."""

    def _q(self, t):
        r = math.sqrt(self.c)
        return r * np.tanh(r * t)

    def _qdot(self, t):
        r = math.sqrt(self.c)
        return self.c / np.cosh(r * t) ** 2

    def _exp2Q(self, t):
        return np.cosh(math.sqrt(self.c) * t) ** 2


class RestOrbit(OrbitSolution):
    """The saddle equilibrium q = +-sqrt(c) on the eps = 1 level."""

    def _q(self, t):
        return np.full(np.shape(t), math.sqrt(self.c))

    def _qdot(self, t):
        return np.zeros(np.shape(t))

    def _exp2Q(self, t):
        return np.exp(2.0 * math.sqrt(self.c) * t)


class BoundedOrbit(OrbitSolution):
    """q = q0 cn(Omega t, k)/dn(Omega t, k), k = tan(mu/2)."""

    def _tri(self, t):
        return elliptic.jacobi_sncndn(self.omega_freq.real * t, self.k_modulus.real)

    def _q(self, t):
        tri = self._tri(t)
        return self.q0_amp * (tri.cn / tri.dn).real

    def _qdot(self, t):
        k = self.k_modulus.real
        tri = self._tri(t)
        return (-self.q0_amp * self.omega_freq.real * (1.0 - k * k) * tri.sn / tri.dn**2).real

    def _exp2Q(self, t):
        k = self.k_modulus.real
        tri = self._tri(t)
        return (((1.0 + k * tri.sn) / tri.dn) ** 2).real


class UnboundedBOrbit(OrbitSolution):
    """q = q0 dn(w, kappa)/cn(w, kappa), w = sqrt(2c) cos(mu/2) t, kappa = tan(mu/2).

    ``k_modulus`` stores kappa (the reciprocal of the modulus cot(mu/2) of the
    raw form) and ``omega_freq`` stores the rescaled frequency k Omega.
    """

    def _tri(self, t):
        return elliptic.jacobi_sncndn(self.omega_freq.real * t, self.k_modulus.real)

    def _q(self, t):
        tri = self._tri(t)
        return self.q0_amp * (tri.dn / tri.cn).real

    def _qdot(self, t):
        kap = self.k_modulus.real
        tri = self._tri(t)
        return (self.q0_amp * self.omega_freq.real * (1.0 - kap * kap) * tri.sn / tri.cn**2).real

    def _exp2Q(self, t):
        tri = self._tri(t)
        return (((1.0 + tri.sn) / tri.cn) ** 2).real


class RegionCOrbit(OrbitSolution):
    """q = q0 / cn(Omega t, k'), energy below zero.

    ``k_modulus`` stores k' = sinh(nu/2)/sqrt(cosh nu).
    """

    def _tri(self, t):
        return elliptic.jacobi_sncndn(self.omega_freq.real * t, self.k_modulus.real)

    @property
    def _k_comp(self):
        kp = self.k_modulus.real
        return math.sqrt(1.0 - kp * kp)

    def _q(self, t):
        return (self.q0_amp / self._tri(t).cn).real

    def _qdot(self, t):
        tri = self._tri(t)
        return (self.q0_amp * self.omega_freq.real * tri.sn * tri.dn / tri.cn**2).real

    def _exp2Q(self, t):
        tri = self._tri(t)
        return (((tri.dn + self._k_comp * tri.sn) / tri.cn) ** 2).real


def _check_c(c):
    if not c > 0:
        raise UnsupportedParameters(f"closed forms need c > 0, got {c!r}")


def _check_mu(mu):
    if not 0.0 < mu < math.pi / 2:
        raise DegenerateOrbit(
            f"mu={mu!r}: mu -> 0 is the zero orbit / outer turning point, mu -> pi/2 the separatrix")


def solve_separatrix(c, sign=1):
    _check_c(c)
    r = math.sqrt(c)
    return SeparatrixOrbit(RegimeLabel.SEPARATRIX, c, 0.0, 1.0 + 0j, r + 0j, c, sign=sign)


def solve_A(c, nu, sign=1):
    """Orbit starting at q = 0 with qdot = sign c cosh(nu); nu = 0 is the separatrix."""
    _check_c(c)
    if nu < 0:
        raise DomainError(f"nu must be >= 0, got {nu!r}")
    if nu == 0:
        return solve_separatrix(c, sign)
    phi = math.atan(math.sinh(nu))
    qdot0 = c * math.cosh(nu)
    k = cmath.exp(1j * phi)
    omega = math.sqrt(qdot0) * cmath.exp(-0.5j * phi)
    t_inf = (2.0 * elliptic.complete_K_complex(k * k) / omega).real
    return RegionAOrbit(RegimeLabel.A_UNBOUNDED, c, nu, k, omega, qdot0, t_blowup=t_inf, sign=sign)


def period_jacobi(c, mu):
    """4 K(tan(mu/2)) / (sqrt(2c) cos(mu/2)); mu = 0 gives the harmonic limit."""
    _check_c(c)
    if not 0.0 <= mu < math.pi / 2:
        raise DomainError(f"period needs 0 <= mu < pi/2, got {mu!r}")
    k = math.tan(mu / 2)
    return 4.0 * elliptic.complete_K(k * k) / (math.sqrt(2.0 * c) * math.cos(mu / 2))


def period_weierstrass(c, epsilon):
    """2 omega1 = 2 K(k)/sqrt(e1 - e3) with k^2 = 2 sqrt(eps)/(1 + sqrt(eps))."""
    _check_c(c)
    if not 0.0 <= epsilon < 1.0:
        raise DomainError(f"period needs 0 <= eps < 1, got {epsilon!r}")
    r = math.sqrt(epsilon)
    return 2.0 * elliptic.complete_K(2.0 * r / (1.0 + r)) / math.sqrt(0.5 * c * (1.0 + r))


def solve_B_bounded(c, mu, sign=1):
    _check_c(c)
    _check_mu(mu)
    s = math.sqrt(2.0 * c)
    return BoundedOrbit(RegimeLabel.B_BOUNDED, c, mu, math.tan(mu / 2) + 0j,
                        s * math.cos(mu / 2) + 0j, s * math.sin(mu / 2),
                        period=period_jacobi(c, mu), sign=sign)


def solve_B_unbounded(c, mu, sign=1):
    _check_c(c)
    _check_mu(mu)
    s = math.sqrt(2.0 * c)
    return UnboundedBOrbit(RegimeLabel.B_UNBOUNDED, c, mu, math.tan(mu / 2) + 0j,
                           s * math.cos(mu / 2) + 0j, s * math.cos(mu / 2),
                           t_blowup=blowup_time(RegimeLabel.B_UNBOUNDED, c, mu), sign=sign)


def solve_C(c, nu, sign=1):
    _check_c(c)
    if not nu > 0:
        raise DomainError(f"region C needs nu > 0, got {nu!r}")
    ch = math.cosh(nu)
    kp = math.sinh(nu / 2) / math.sqrt(ch)
    return RegionCOrbit(RegimeLabel.C_UNBOUNDED, c, nu, kp + 0j, math.sqrt(2.0 * c * ch) + 0j,
                        math.sqrt(2.0 * c) * math.cosh(nu / 2),
                        t_blowup=blowup_time(RegimeLabel.C_UNBOUNDED, c, nu), sign=sign)


def blowup_time(regime, c, angle):
    """Finite-time singularity T_inf of a singular orbit (angle is mu or nu)."""
    _check_c(c)
    if regime is RegimeLabel.B_UNBOUNDED:
        k = math.tan(angle / 2)
        return elliptic.complete_K(k * k) / (math.sqrt(2.0 * c) * math.cos(angle / 2))
    if regime is RegimeLabel.C_UNBOUNDED:
        ch = math.cosh(angle)
        return elliptic.complete_K(math.sinh(angle / 2) ** 2 / ch) / math.sqrt(2.0 * c * ch)
    if regime is RegimeLabel.A_UNBOUNDED:
        if angle == 0:
            raise NoBlowup("the separatrix approaches sqrt(c) only as t -> infinity")
        return solve_A(c, angle).t_blowup
    raise NoBlowup(f"{regime.value} orbits stay finite")


def blowup_time_eps(c, epsilon):
    """T_inf as a function of eps alone (outer branch for 0 <= eps < 1)."""
    if epsilon > 1.0:
        return blowup_time(RegimeLabel.A_UNBOUNDED, c, math.acosh(math.sqrt(epsilon)))
    if epsilon == 1.0:
        raise NoBlowup("eps = 1 is the separatrix")
    if epsilon >= 0.0:
        return blowup_time(RegimeLabel.B_UNBOUNDED, c, math.asin(math.sqrt(epsilon)))
    return blowup_time(RegimeLabel.C_UNBOUNDED, c, math.asinh(math.sqrt(-epsilon)))


def solve(params, sign=1):
    """Canonical orbit for classified parameters."""
    regime = params.regime
    if regime is RegimeLabel.SEPARATRIX:
        return solve_separatrix(params.c, sign)
    if regime is RegimeLabel.A_UNBOUNDED:
        return solve_A(params.c, params.angle, sign)
    if regime is RegimeLabel.B_BOUNDED:
        return solve_B_bounded(params.c, params.angle, sign)
    if regime is RegimeLabel.B_UNBOUNDED:
        return solve_B_unbounded(params.c, params.angle, sign)
    return solve_C(params.c, params.angle, sign)


@dataclass(frozen=True)
class WeierstrassOrbit:
    """q(t) = q0 (1 + s c0 / (p(t) - e1 - s c0/2)), s = +1 unbounded, -1 bounded."""

    c: float
    epsilon: float
    branch: int
    c0: float
    q0_amp: float
    roots: elliptic.WeierstrassRoots
    omega1: float
    period: float | None = None
    t_blowup: float | None = None

    def _reduced(self, t):
        t = np.asarray(t, dtype=float)
        if self.t_blowup is not None and np.any(np.abs(t - self.t_blowup) < POLE_GUARD):
            raise PoleError(f"q+ has its singularity at t = omega1/2 = {self.t_blowup!r}",
                            location=self.t_blowup)
        # p has period 2 omega1 on the real axis; t = 0 (mod 2 omega1) is its double pole
        tr = np.mod(t, 2.0 * self.omega1)
        at_pole = (tr < 1e-12) | (2.0 * self.omega1 - tr < 1e-12)
        return tr, at_pole

    def q(self, t):
        tr, at_pole = self._reduced(t)
        # placeholder argument for masked entries; regular on both branches
        safe = np.where(at_pole, 0.25 * self.omega1, tr)
        p = np.asarray(elliptic.weierstrass_p(safe, self.roots))
        s = self.branch
        val = self.q0_amp * (1.0 + s * self.c0 / (p - self.roots.e1 - 0.5 * s * self.c0))
        return _out(_real_part(np.where(at_pole, self.q0_amp, val), "Weierstrass q"))

    def qdot(self, t):
        tr, at_pole = self._reduced(t)
        safe = np.where(at_pole, 0.25 * self.omega1, tr)
        p = np.asarray(elliptic.weierstrass_p(safe, self.roots))
        dp = np.asarray(elliptic.weierstrass_p_prime(safe, self.roots))
        s = self.branch
        den = p - self.roots.e1 - 0.5 * s * self.c0
        val = -s * self.q0_amp * self.c0 * dp / den**2
        return _out(_real_part(np.where(at_pole, 0.0, val), "Weierstrass qdot"))


def solve_weierstrass(c, epsilon, branch=1):
    """Weierstrass-form orbit; branch +1 (unbounded) allows eps < 1, branch -1 needs 0 <= eps < 1."""
    _check_c(c)
    if branch not in (1, -1):
        raise DomainError("branch must be +1 (unbounded) or -1 (bounded)")
    if epsilon >= 1.0 or (branch < 0 and epsilon < 0.0):
        raise DomainError(f"no real Weierstrass branch {branch:+d} at eps={epsilon!r}")
    c0 = c * math.sqrt(1.0 - epsilon)
    q0 = math.sqrt(c + branch * c0)
    if q0 == 0.0:
        raise DegenerateOrbit("eps = 0 bounded branch is the rest point q = 0")
    roots = elliptic.WeierstrassRoots.for_energy(c, epsilon)
    w1 = roots.half_periods()[0]
    if abs(w1.imag) > 1e-9 * abs(w1):
        raise RealityError(f"half-period omega1={w1!r} is not real")
    w1 = w1.real
    if branch < 0:
        return WeierstrassOrbit(c, epsilon, branch, c0, q0, roots, w1, period=2.0 * w1)
    return WeierstrassOrbit(c, epsilon, branch, c0, q0, roots, w1, t_blowup=0.5 * w1)


def weierstrass_region_A(c, nu, t):
    """Region-A orbit through p: e^{i Phi/2} sqrt(p(e^{i Phi/2} t + omega3) - e3).

    The square-root branch is the one continuous with q(0) = 0 and qdot(0) > 0,
    i.e. the root with non-negative real part (q > 0 for 0 < t < T_inf).
    """
    _check_c(c)
    if not nu > 0:
        raise DomainError(f"region A needs nu > 0, got {nu!r}")
    phi = math.atan(math.sinh(nu))
    qdot0 = c * math.cosh(nu)
    roots = elliptic.WeierstrassRoots.unbounded_above_saddles(qdot0, phi)
    w3 = roots.half_periods()[1]
    rot = cmath.exp(0.5j * phi)
    t = np.asarray(t, dtype=float)
    p = np.asarray(elliptic.weierstrass_p(rot * t + w3, roots))
    z = rot * np.sqrt(p - roots.e3)
    z = np.where(z.real < 0, -z, z)
    z = np.where(t < 0, -z, z)
    return _out(_real_part(z, "Weierstrass region-A q"))


@dataclass(frozen=True)
class PlacedOrbit:
    """A canonical orbit re-timed so that t = 0 matches given initial data: q(t) = orbit.q(t + shift)."""

    orbit: OrbitSolution
    shift: float

    @property
    def regime(self):
        return self.orbit.regime

    @property
    def period(self):
        return self.orbit.period

    @property
    def t_blowup(self):
        """Forward-time singularity of the placed orbit."""
        if self.orbit.t_blowup is None:
            return None
        return self.orbit.t_blowup - self.shift

    def q(self, t):
        return self.orbit.q(np.asarray(t, dtype=float) + self.shift)

    def qdot(self, t):
        return self.orbit.qdot(np.asarray(t, dtype=float) + self.shift)

    def exp2Q(self, t):
        return _out(np.asarray(self.orbit.exp2Q(np.asarray(t, dtype=float) + self.shift))
                    / self.orbit.exp2Q(self.shift))


def _invert_monotone(f, x, lo, hi):
    """Root of f(t) = x on [lo, hi] for monotone f, clamping x to the bracket values."""
    f_lo, f_hi = f(lo), f(hi)
    if (x - f_lo) * (f_hi - f_lo) <= 0:
        return lo
    if (x - f_hi) * (f_lo - f_hi) <= 0:
        return hi
    return brentq(lambda t: f(t) - x, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)


def _upper_bracket(orbit, x, start=0.0):
    """A time below T_inf where the (increasing) orbit already exceeds x."""
    t_inf = orbit.t_blowup
    for n in range(1, 60):
        t_hi = t_inf - max((t_inf - start) * 2.0**-n, 2.0 * POLE_GUARD)
        if orbit.q(t_hi) * orbit.sign >= x or t_inf - t_hi <= 2.0 * POLE_GUARD:
            return t_hi
    return t_hi


def _polish(placed, q0, qdot0, c, steps=3):
    """Newton steps on the shift, matching q or qdot, whichever moves faster there.

    Matching q alone is ill-conditioned at turning points (qdot = 0), where the
    shift is only known to sqrt(roundoff).
    """
    orb, s = placed.orbit, placed.shift
    for _ in range(steps):
        try:
            q, p = float(orb.q(s)), float(orb.qdot(s))
        except PoleError:
            break
        acc = 2.0 * q**3 - 2.0 * c * q
        ds = -(q - q0) / p if abs(p) >= abs(acc) else -(p - qdot0) / acc
        if not math.isfinite(ds) or abs(ds) > 1e-4 * (1.0 + abs(s)):
            break
        if orb.t_blowup is not None and abs(s + ds) >= orb.t_blowup - POLE_GUARD:
            break
        s += ds
    return PlacedOrbit(orb, s)


def place_orbit(params):
    """Canonical orbit and time shift reproducing (params.q0, params.qdot0) at t = 0."""
    placed = _place_coarse(params)
    if isinstance(placed.orbit, RestOrbit):
        return placed
    return _polish(placed, params.q0, params.qdot0, params.c)


def _place_coarse(params):
    q0, qdot0, c = params.q0, params.qdot0, params.c
    regime = params.regime
    if regime is RegimeLabel.SEPARATRIX:
        r = math.sqrt(c)
        if abs(qdot0) < 1e-12 and abs(abs(q0) - r) < 1e-9 * max(1.0, r):
            sign = 1 if q0 > 0 else -1
            return PlacedOrbit(RestOrbit(RegimeLabel.SEPARATRIX, c, 0.0, 1.0 + 0j, 0j, r, sign=sign), 0.0)
        if abs(q0) >= r:
            raise UnsupportedParameters(
                "only the inner separatrix branch |q| < sqrt(c) has a closed form here")
        sign = 1 if qdot0 >= 0 else -1
        return PlacedOrbit(solve_separatrix(c, sign), math.atanh(sign * q0 / r) / r)
    if regime is RegimeLabel.B_BOUNDED:
        orb = solve(params)
        half = 0.5 * orb.period
        tau = _invert_monotone(lambda t: -orb.q(t), -q0, 0.0, half)
        return PlacedOrbit(orb, -tau if qdot0 > 0 else tau)
    if regime is RegimeLabel.A_UNBOUNDED:
        sign = 1 if qdot0 >= 0 else -1
        orb = solve(params, sign)
        # raw orbit is odd and increasing on (-T_inf, T_inf)
        x = sign * q0
        raw = lambda t: sign * orb.q(t)
        tau = _invert_monotone(raw, abs(x), 0.0, _upper_bracket(orb, abs(x)))
        return PlacedOrbit(orb, math.copysign(tau, x))
    # B_UNBOUNDED / C_UNBOUNDED: even orbits that leave their turning point outward
    sign = 1 if q0 >= 0 else -1
    orb = solve(params, sign)
    x = abs(q0)
    hi = _upper_bracket(orb, x)
    tau = _invert_monotone(lambda t: sign * orb.q(t), x, 0.0, hi)
    return PlacedOrbit(orb, tau if sign * qdot0 >= 0 else -tau)


def exact_orbit(init):
    """Closed-form q(t) for physical initial data."""
    return place_orbit(classify(init))


def reconstruct_alpha_beta(init, orbit, t):
    """Exact (alpha1, alpha2, beta1, beta2) at d_e = 0 from Gamma(t) and exp(2Q(t))."""
    if init.d_e != 0.0:
        raise UnsupportedParameters(
            "d_e != 0: perturbative corrections to alpha/beta are outside the closed forms")
    q_start = float(orbit.q(0.0))
    if abs(q_start - init.d_i * init.b_0) > 1e-8 * max(1.0, abs(q_start)):
        raise DomainError(f"orbit q(0)={q_start!r} does not match d_i b_0={init.d_i * init.b_0!r}")
    di = init.d_i
    g2 = np.exp(2.0 * np.asarray(init.gamma_spec.Gamma(t), dtype=float))
    e2q = np.asarray(orbit.exp2Q(t), dtype=float)
    a1 = init.alpha1_0 * g2 * e2q
    a2 = init.alpha2_0 / (g2 * e2q)
    b1 = (init.beta1_0 + init.alpha1_0 / di) * g2 - a1 / di
    b2 = (init.beta2_0 - init.alpha2_0 / di) / g2 + a2 / di
    return tuple(_out(v) for v in (a1, a2, b1, b2))
