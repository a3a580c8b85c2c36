"""Coefficient system of the Hall-MHD X-point collapse.

The fields are phi = gamma xy, V_z = beta1 x^2 + beta2 y^2,
psi = alpha1 x^2 - alpha2 y^2 and B_z = b xy. The five time-dependent
coefficients obey a closed ODE system whose b-component reduces, after
rescaling q = sqrt(4 d_e^2 + d_i^2) b, to the quartic oscillator

    q'' = 2 q^3 - 2 c q,     U(q) = c q^2 - q^4 / 2,

with the energy normalised as E = c^2 eps / 2.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedParameters


class VorticityKind(enum.Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class VorticitySpec:
    """The free coefficient gamma(t) and its running integral Gamma(t).

    Tabulated samples are linearly interpolated (held constant outside the
    table) and integrated with the trapezoid rule, which is exact for the
    interpolant.
    """

    kind: VorticityKind = VorticityKind.ZERO
    value: float = 0.0
    samples: tuple = ()

    def __post_init__(self):
        if self.kind is VorticityKind.TABULATED:
            ts = [s[0] for s in self.samples]
            if len(ts) < 2 or any(b <= a for a, b in zip(ts, ts[1:])):
                raise DomainError("tabulated gamma needs >= 2 samples with strictly increasing t")

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def constant(cls, gamma):
        return cls(VorticityKind.CONSTANT, float(gamma))

    @classmethod
    def tabulated(cls, samples):
        return cls(VorticityKind.TABULATED, samples=tuple((float(t), float(g)) for t, g in samples))

    def gamma_at(self, t):
        if self.kind is VorticityKind.TABULATED:
            ts, gs = np.array(self.samples).T
            out = np.interp(t, ts, gs)
            return float(out) if np.ndim(out) == 0 else out
        value = self.value if self.kind is VorticityKind.CONSTANT else 0.0
        return float(value) if np.ndim(t) == 0 else np.full(np.shape(t), value)

    def Gamma(self, t):
        """Integral of gamma from 0 to t."""
        if self.kind is VorticityKind.TABULATED:
            if np.ndim(t) == 0:
                return self._tab_integral(0.0, float(t))
            return np.array([self._tab_integral(0.0, ti) for ti in np.ravel(t)]).reshape(np.shape(t))
        value = self.value if self.kind is VorticityKind.CONSTANT else 0.0
        return value * (float(t) if np.ndim(t) == 0 else np.asarray(t, dtype=float))

    def _tab_integral(self, a, b):
        if b < a:
            return -self._tab_integral(b, a)
        ts, gs = np.array(self.samples).T
        inner = ts[(ts > a) & (ts < b)]
        nodes = np.concatenate([[a], inner, [b]])
        vals = np.interp(nodes, ts, gs)
        return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(nodes)))


@dataclass(frozen=True)
class InitialData:
    alpha1_0: float
    alpha2_0: float
    beta1_0: float
    beta2_0: float
    b_0: float
    d_i: float
    d_e: float = 0.0
    gamma_spec: VorticitySpec = field(default_factory=VorticitySpec)

    def __post_init__(self):
        if not self.d_i > 0:
            raise DomainError(f"d_i must be positive, got {self.d_i!r}")
        if self.d_e < 0:
            raise DomainError(f"d_e must be non-negative, got {self.d_e!r}")

    @property
    def scale(self):
        """sqrt(4 d_e^2 + d_i^2), the factor mapping b to q."""
        return math.sqrt(4.0 * self.d_e**2 + self.d_i**2)

    @property
    def bdot_0(self):
        return -4.0 * (self.alpha1_0 * self.beta2_0 + self.alpha2_0 * self.beta1_0)

    def state(self):
        return CoefficientState(0.0, self.alpha1_0, self.alpha2_0, self.beta1_0, self.beta2_0, self.b_0)


@dataclass(frozen=True)
class CoefficientState:
    t: float
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    b: float

    def as_array(self):
        return np.array([self.alpha1, self.alpha2, self.beta1, self.beta2, self.b])

    @classmethod
    def from_array(cls, t, y):
        return cls(float(t), *(float(v) for v in y))


class RegimeLabel(enum.Enum):
    A_UNBOUNDED = "A_unbounded"
    B_BOUNDED = "B_bounded"
    B_UNBOUNDED = "B_unbounded"
    C_UNBOUNDED = "C_unbounded"
    SEPARATRIX = "Separatrix"

    @property
    def singular(self):
        return self in (RegimeLabel.A_UNBOUNDED, RegimeLabel.B_UNBOUNDED, RegimeLabel.C_UNBOUNDED)


@dataclass(frozen=True)
class DerivedParams:
    c: float
    q0: float
    qdot0: float
    energy_E: float
    epsilon: float
    c0: complex
    regime: RegimeLabel
    angle: float | None = None
    phi_A: float | None = None

    @property
    def c0_is_real(self):
        return self.c0.imag == 0.0


def rhs_full(y, gamma, d_i, d_e):
    """Time derivative of (alpha1, alpha2, beta1, beta2, b)."""
    a1, a2, b1, b2, b = y
    de2 = d_e * d_e
    return np.array([
        2.0 * gamma * a1 + 2.0 * b * (d_i * a1 - de2 * b1),
        -2.0 * gamma * a2 - 2.0 * b * (d_i * a2 + de2 * b2),
        2.0 * gamma * b1 - 2.0 * b * a1,
        -2.0 * gamma * b2 - 2.0 * b * a2,
        -4.0 * (a1 * b2 + a2 * b1),
    ])


def rhs_q(y, c):
    """Time derivative of (q, qdot) for q'' = 2 q^3 - 2 c q."""
    q, p = y
    return np.array([p, 2.0 * q**3 - 2.0 * c * q])


def conservation_triplet(state, init):
    """Residuals of the three conservation laws; all vanish on exact solutions."""
    a1, a2, b1, b2, b = state.alpha1, state.alpha2, state.beta1, state.beta2, state.b
    a10, a20, b10, b20, b0 = init.alpha1_0, init.alpha2_0, init.beta1_0, init.beta2_0, init.b_0
    di, de2 = init.d_i, init.d_e**2
    db2 = 0.25 * (b * b - b0 * b0)
    r1 = (a1 * a2 - a10 * a20) - de2 * db2
    r2 = (b1 * b2 - b10 * b20) - db2
    r3 = (a1 + di * b1) * (a2 - di * b2) - (a10 + di * b10) * (a20 - di * b20) - de2 * db2
    return r1, r2, r3


def compute_c(init):
    """The initial-data coefficient multiplying b in the b'' equation."""
    di, de2 = init.d_i, init.d_e**2
    a10, a20, b10, b20 = init.alpha1_0, init.alpha2_0, init.beta1_0, init.beta2_0
    return (4.0 * di * (a10 * b20 - a20 * b10)
            + (4.0 * de2 + di * di) * init.b_0**2
            - 8.0 * (a10 * a20 + de2 * b10 * b20))


def potential_U(q, c):
    return c * q**2 - 0.5 * q**4


def energy(q, qdot, c):
    return 0.5 * qdot**2 + potential_U(q, c)


def c0_squared(q0, qdot0, c, flipped=False):
    """(q0^2 - c)^2 - qdot0^2, or with ``flipped=True`` the "+ qdot0^2" variant.

    The "+" variant makes q'^2 = q^4 - 2 c q^2 + c^2 - c0^2 return -qdot0^2 at
    t = 0 instead of qdot0^2; it is kept only so the verify battery can show
    that it breaks the initial condition.
    """
    sign = 1.0 if flipped else -1.0
    return (q0 * q0 - c) ** 2 + sign * qdot0 * qdot0


def velocity_squared(q, c, c0_sq):
    """q'^2 from the quartic q^4 - 2 c q^2 + (c^2 - c0^2)."""
    return q**4 - 2.0 * c * q * q + (c * c - c0_sq)


def turning_points(c, epsilon):
    """Real solutions of U(q) = c^2 eps / 2, in ascending order."""
    if not c > 0:
        raise UnsupportedParameters(f"turning points need c > 0, got {c!r}")
    if epsilon > 1.0:
        return []
    if epsilon == 1.0:
        return [-math.sqrt(c), math.sqrt(c)]
    c0 = c * math.sqrt(1.0 - epsilon)
    outer = math.sqrt(c + c0)
    if epsilon < 0.0:
        return [-outer, outer]
    inner = math.sqrt(max(c - c0, 0.0))
    return [-outer, -inner, inner, outer]


def classify_qp(c, q0, qdot0, tol_eps=1e-10):
    """Regime of the oscillator state (q0, qdot0) at coefficient c."""
    if not c > 0:
        raise UnsupportedParameters(
            f"c = {c!r} <= 0: the turning-point analysis and every closed form assume c > 0")
    E = energy(q0, qdot0, c)
    eps = 2.0 * E / (c * c)
    c0_sq = c0_squared(q0, qdot0, c)
    c0 = complex(math.sqrt(c0_sq)) if c0_sq >= 0 else complex(0.0, math.sqrt(-c0_sq))
    angle = phi = None
    if abs(eps - 1.0) < tol_eps:
        regime = RegimeLabel.SEPARATRIX
    elif eps > 1.0:
        regime = RegimeLabel.A_UNBOUNDED
        angle = math.acosh(math.sqrt(eps))
        phi = math.atan(math.sinh(angle))
    elif eps >= 0.0:
        # below the saddles the wells |q| < sqrt(c) and |q| > sqrt(c) are disconnected
        regime = RegimeLabel.B_BOUNDED if abs(q0) < math.sqrt(c) else RegimeLabel.B_UNBOUNDED
        angle = math.asin(math.sqrt(eps))
    else:
        regime = RegimeLabel.C_UNBOUNDED
        angle = math.asinh(math.sqrt(-eps))
    return DerivedParams(c, q0, qdot0, E, eps, c0, regime, angle, phi)


def classify(init, tol_eps=1e-10):
    c = compute_c(init)
    s = init.scale
    return classify_qp(c, s * init.b_0, s * init.bdot_0, tol_eps)


def initial_data_for(c, q0, qdot0, d_i=1.0, d_e=0.0, alpha1_0=0.5, beta1_0=0.25,
                     gamma_spec=None):
    """Physical initial coefficients realising a prescribed (c, q0, qdot0).

    alpha1_0 and beta1_0 are free; alpha2_0 and beta2_0 follow from the two
    linear conditions fixing bdot_0 and c.
    """
    s = math.sqrt(4.0 * d_e**2 + d_i**2)
    b0 = q0 / s
    a1, b1 = alpha1_0, beta1_0
    # unknowns (alpha2, beta2)
    mat = np.array([
        [b1, a1],
        [-4.0 * d_i * b1 - 8.0 * a1, 4.0 * d_i * a1 - 8.0 * d_e**2 * b1],
    ])
    rhs = np.array([-qdot0 / (4.0 * s), c - q0 * q0])
    if abs(np.linalg.det(mat)) < 1e-14:
        raise UnsupportedParameters("alpha1_0/beta1_0 choice leaves c and bdot_0 underdetermined")
    a2, b2 = np.linalg.solve(mat, rhs)
    return InitialData(a1, float(a2), b1, float(b2), b0, d_i, d_e,
                       gamma_spec if gamma_spec is not None else VorticitySpec())


def canonical_qp(c, epsilon, bounded=True):
    """Canonical starting point (q0, qdot0) of the orbit at normalised energy eps."""
    if not c > 0:
        raise UnsupportedParameters(f"c must be positive, got {c!r}")
    if epsilon > 1.0:
        nu = math.acosh(math.sqrt(epsilon))
        return 0.0, c * math.cosh(nu)
    if epsilon == 1.0:
        return 0.0, c
    if epsilon >= 0.0:
        mu = math.asin(math.sqrt(epsilon))
        amp = math.sin(mu / 2) if bounded else math.cos(mu / 2)
        return math.sqrt(2.0 * c) * amp, 0.0
    nu = math.asinh(math.sqrt(-epsilon))
    return math.sqrt(2.0 * c) * math.cosh(nu / 2), 0.0


def field_snapshot(state, gamma, x, y):
    """Pointwise fields (phi, psi, V_z, B_z) on the grid x, y (broadcastable)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xy = x * y
    phi = gamma * xy
    psi = state.alpha1 * x**2 - state.alpha2 * y**2
    vz = state.beta1 * x**2 + state.beta2 * y**2
    bz = state.b * xy
    return phi, psi, vz, bz
