"""Elliptic-function kernel.

Complete elliptic integral K, Jacobi sn/cn/dn for real or complex argument
and modulus, and the Weierstrass function built from its three cubic roots.
Everything here works in complex arithmetic; real inputs come back with a
zero (or roundoff-level) imaginary part.

The Jacobi functions use the descending Landen (Gauss) transformation:
with k1 = (1 - k')/(1 + k') and w = u/(1 + k1),

    sn(u, k) = (1 + k1) sn(w, k1) / (1 + k1 sn^2(w, k1))
    cn(u, k) = cn(w, k1) dn(w, k1) / (1 + k1 sn^2(w, k1))
    dn(u, k) = (1 - k1 sn^2(w, k1)) / (1 + k1 sn^2(w, k1))

The modulus sequence converges quadratically to zero whenever Re k' > 0,
which the principal square root guarantees for every k^2 != 1.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PoleError

LANDEN_TOL = 1e-12
POLE_TINY = 1e-300
# 1 + k s^2 cancelled to within a few ulps: the argument is a pole to working precision
POLE_REL = 1e-15
_MAX_LEVELS = 40


@dataclass(frozen=True)
class JacobiTriple:
    sn: complex
    cn: complex
    dn: complex

    def __iter__(self):
        return iter((self.sn, self.cn, self.dn))


def agm(a, b, tol=4e-16):
    """Arithmetic-geometric mean, complex-capable.

    The geometric step takes the square-root branch closest to the new
    arithmetic mean (the "right" choice), which yields the principal value
    whenever Re(b/a) > 0.
    """
    a = complex(a)
    b = complex(b)
    for _ in range(64):
        a1 = 0.5 * (a + b)
        g = cmath.sqrt(a * b)
        if abs(a1 - g) > abs(a1 + g):
            g = -g
        a, b = a1, g
        if abs(a - b) <= tol * abs(a):
            break
    return 0.5 * (a + b)


def complete_K(m):
    """K(k) for real parameter m = k^2 in [0, 1)."""
    m = float(m)
    if not (0.0 <= m < 1.0):
        raise DomainError(f"complete_K needs 0 <= m < 1, got m={m!r}")
    if m == 0.0:
        return math.pi / 2
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - m)).real)


def complete_K_complex(m):
    """Principal branch of K for complex parameter m = k^2 (cut on [1, inf))."""
    m = complex(m)
    if m == 1.0:
        raise DomainError("K(k) diverges at k^2 = 1")
    if m.imag == 0.0 and m.real > 1.0:
        raise DomainError(f"m={m!r} lies on the branch cut of K")
    return math.pi / (2.0 * agm(1.0, cmath.sqrt(1.0 - m)))


def landen_descend_K(m):
    """K(k) through one explicit descending Landen step, K(k) = (1 + k1) K(k1).

    K(k1) is then evaluated as pi/2 times the product of (1 + k_n) over the
    remaining descending moduli, so no AGM code is shared with complete_K.
    """
    m = float(m)
    if not (0.0 <= m < 1.0):
        raise DomainError(f"landen_descend_K needs 0 <= m < 1, got m={m!r}")
    k1 = m / (1.0 + math.sqrt(1.0 - m)) ** 2
    prod = 1.0
    kn = k1
    while kn > 1e-17:
        kn_next = kn * kn / (1.0 + math.sqrt(1.0 - kn * kn)) ** 2
        prod *= 1.0 + kn_next
        kn = kn_next
    return (1.0 + k1) * (math.pi / 2) * prod


def descending_moduli(k):
    """Moduli k1, k2, ... of the descending Landen chain starting at k."""
    mn = complex(k) * complex(k)
    if mn == 1.0:
        raise DomainError("Landen chain does not descend from k^2 = 1")
    chain = []
    kn = cmath.sqrt(mn)
    for _ in range(_MAX_LEVELS):
        if abs(kn) < LANDEN_TOL:
            return chain
        kp = cmath.sqrt(1.0 - mn)
        # (1 - k')/(1 + k') without the cancellation in 1 - k'
        kn = mn / (1.0 + kp) ** 2
        chain.append(kn)
        mn = kn * kn
    raise DomainError(f"Landen chain failed to converge for k={k!r}")


def nearest_pole(u, k):
    """Closest pole of sn(., k) to u, from the lattice (2n+1) iK' + 2m K."""
    m = complex(k) ** 2
    K = complete_K_complex(m)
    Kp = complete_K_complex(1.0 - m)
    w1 = 2.0 * K
    w3 = 2.0 * 1j * Kp
    shifted = complex(u) - 1j * Kp
    a = np.array([[w1.real, w3.real], [w1.imag, w3.imag]])
    try:
        mm, nn = np.linalg.solve(a, [shifted.real, shifted.imag])
    except np.linalg.LinAlgError:
        return None
    return 1j * Kp + round(mm) * w1 + round(nn) * w3


def _as_complex_array(u):
    arr = np.asarray(u, dtype=complex)
    return arr


def _unwrap(arr):
    return complex(arr) if arr.ndim == 0 else arr


def _raise_pole(u_arr, bad, k):
    idx = np.flatnonzero(np.ravel(bad))[0]
    u_bad = complex(np.ravel(u_arr)[idx])
    try:
        loc = nearest_pole(u_bad, k)
    except DomainError:
        loc = None
    raise PoleError(f"sn/cn/dn pole near u={u_bad!r} (k={k!r})", location=loc)


def _landen_triple(u, k, near_pole_error=True):
    u_arr = _as_complex_array(u)
    chain = descending_moduli(k)
    scale = 1.0
    for kn in chain:
        scale *= 1.0 + kn
    w = u_arr / scale
    with np.errstate(all="ignore"):
        s = np.sin(w)
        c = np.cos(w)
        d = np.ones_like(w)
        for kn in reversed(chain):
            ks2 = kn * s * s
            den = 1.0 + ks2
            bad = np.abs(den) < POLE_TINY
            if near_pole_error:
                bad |= np.abs(den) <= POLE_REL * np.abs(ks2)
            if np.any(bad):
                _raise_pole(u_arr, bad, k)
            s, c, d = (1.0 + kn) * s / den, c * d / den, (1.0 - ks2) / den
    bad = ~(np.isfinite(s) & np.isfinite(c) & np.isfinite(d))
    if np.any(bad):
        _raise_pole(u_arr, bad, k)
    return JacobiTriple(_unwrap(s), _unwrap(c), _unwrap(d))


def _unit_modulus_triple(u):
    u_arr = _as_complex_array(u)
    with np.errstate(all="ignore"):
        ch = np.cosh(u_arr)
        bad = np.abs(ch) < POLE_TINY
        if np.any(bad):
            _raise_pole(u_arr, bad, 1.0)
        sech = 1.0 / ch
        sn = np.tanh(u_arr)
    return JacobiTriple(_unwrap(sn), _unwrap(sech), _unwrap(sech))


def jacobi_sncndn(u, k):
    """sn, cn, dn at argument u (scalar or array) and modulus k.

    Real k > 1 is routed through the reciprocal-modulus transformation;
    every other modulus, including complex ones on or off the unit circle,
    runs the descending Landen recursion in complex arithmetic. k^2 = 1 uses
    the hyperbolic degeneration sn = tanh, cn = dn = sech.
    """
    return _triple(u, k)


def _triple(u, k, near_pole_error=True):
    # near_pole_error=False lets callers that only need 1/sn through sn poles
    k = complex(k)
    if k * k == 1.0:
        return _unit_modulus_triple(u)
    if k.imag == 0.0 and abs(k.real) > 1.0:
        return _reciprocal(u, k, near_pole_error)
    return _landen_triple(u, k, near_pole_error)


def reciprocal_modulus(u, k):
    """Triple at modulus |k| > 1 via evaluation at (k u, 1/k).

    sn(u, k) = sn(k u, 1/k)/k, cn(u, k) = dn(k u, 1/k), dn(u, k) = cn(k u, 1/k).
    """
    return _reciprocal(u, k)


def _reciprocal(u, k, near_pole_error=True):
    k = complex(k)
    if not abs(k) > 1.0:
        raise DomainError(f"reciprocal_modulus needs |k| > 1, got {k!r}")
    inner = _landen_triple(_as_complex_array(u) * k, 1.0 / k, near_pole_error)
    return JacobiTriple(inner.sn / k, inner.dn, inner.cn)


@dataclass(frozen=True)
class WeierstrassRoots:
    """The three roots of 4 x^3 - g2 x - g3, labelled to match the Jacobi form."""

    e1: complex
    e2: complex
    e3: complex

    @property
    def g2(self):
        e1, e2, e3 = self.e1, self.e2, self.e3
        return -4.0 * (e1 * e2 + e2 * e3 + e3 * e1)

    @property
    def g3(self):
        return 4.0 * self.e1 * self.e2 * self.e3

    @property
    def modulus_squared(self):
        return (self.e2 - self.e3) / (self.e1 - self.e3)

    @property
    def scale(self):
        """sqrt(e1 - e3), the factor turning t into the Jacobi argument."""
        return cmath.sqrt(self.e1 - self.e3)

    @classmethod
    def for_energy(cls, c, epsilon):
        """Roots for the quartic oscillator: e1 = c/3, e2,3 = -c/6 +- (c/2) sqrt(eps)."""
        r = 0.5 * c * cmath.sqrt(epsilon)
        e1 = complex(c / 3.0)
        return cls(e1, -c / 6.0 + r, -c / 6.0 - r)

    @classmethod
    def unbounded_above_saddles(cls, qdot0, phi):
        """Complex roots of the energy-above-the-saddles orbit."""
        z = cmath.exp(-2j * phi)
        return cls(
            -qdot0 * (1.0 - 2.0 * z) / 3.0,
            qdot0 * (2.0 - z) / 3.0,
            -qdot0 * (1.0 + z) / 3.0,
        )

    def half_periods(self):
        """(omega1, omega3) with p(omega1) = e1 and p(omega3) = e3."""
        m = self.modulus_squared
        s = self.scale
        return complete_K_complex(m) / s, 1j * complete_K_complex(1.0 - m) / s


def _check_lattice(t_arr, roots, tol=1e-12):
    w1, w3 = roots.half_periods()
    a = np.array([[2 * w1.real, 2 * w3.real], [2 * w1.imag, 2 * w3.imag]])
    try:
        inv = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        return
    flat = np.ravel(t_arr)
    coords = inv @ np.vstack([flat.real, flat.imag])
    near = np.rint(coords)
    lattice = near[0] * 2 * w1 + near[1] * 2 * w3
    bad = np.abs(flat - lattice) < tol
    if np.any(bad):
        i = np.flatnonzero(bad)[0]
        raise PoleError(f"p(t) has a double pole at t={complex(lattice[i])!r}",
                        location=complex(lattice[i]))


def weierstrass_p(t, roots):
    """p(t; g2, g3) = e3 + (e1 - e3) / sn^2(t sqrt(e1 - e3), k), k^2 = (e2-e3)/(e1-e3)."""
    t_arr = _as_complex_array(t)
    _check_lattice(t_arr, roots)
    s = roots.scale
    k = cmath.sqrt(roots.modulus_squared)
    # p is regular where sn has a pole (p = e3 there), so sn poles are not errors here
    sn = np.asarray(_triple(t_arr * s, k, near_pole_error=False).sn)
    return _unwrap(roots.e3 + (roots.e1 - roots.e3) / (sn * sn))


def weierstrass_p_prime(t, roots):
    """Derivative of p: -2 (e1 - e3)^(3/2) cn dn / sn^3."""
    t_arr = _as_complex_array(t)
    _check_lattice(t_arr, roots)
    s = roots.scale
    k = cmath.sqrt(roots.modulus_squared)
    tri = _triple(t_arr * s, k, near_pole_error=False)
    sn = np.asarray(tri.sn)
    return _unwrap(-2.0 * s**3 * np.asarray(tri.cn) * np.asarray(tri.dn) / sn**3)
