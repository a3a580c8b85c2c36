"""Adaptive Dormand-Prince 5(4) oracle with finite-time blow-up detection.

This integrator knows nothing about elliptic functions; it is the
independent numerical check on every closed form. It also locates the
singularity: each threshold in a geometric ladder is bracketed by step
bisection, and the crossing times are extrapolated (Aitken) to the pole.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .model import CoefficientState, conservation_triplet, rhs_full, rhs_q

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
PI_ALPHA = 0.7 / 4
PI_BETA = 0.4 / 4
MIN_STEP = 1e-14
BRACKET_WIDTH = 1e-8
LADDER = (1e-2, 1e-1, 1.0)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.25
    blowup_threshold: float = 1e8
    max_time: float = 10.0
    fixed_step: float | None = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.blowup_threshold > 1:
            raise ValueError("blowup_threshold must exceed 1")
        if not (self.max_step > 0 and self.max_time > 0):
            raise ValueError("max_step and max_time must be positive")


class Terminal(enum.Enum):
    REACHED_MAX_TIME = "ReachedMaxTime"
    BLOWUP_DETECTED = "BlowupDetected"
    STEP_FAILURE = "StepFailure"


@dataclass(frozen=True)
class Trajectory:
    """Accepted steps (t, y, f) with cubic-Hermite dense output between them."""

    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    terminal: Terminal
    t_blowup: float | None = None
    bracket_width: float | None = None
    crossings: tuple = field(default=())

    def __call__(self, ts):
        """Dense output at times inside [t[0], t[-1]]."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if ts.min() < self.t[0] - 1e-15 or ts.max() > self.t[-1] + 1e-15:
            raise ValueError(f"requested times outside [{self.t[0]}, {self.t[-1]}]")
        idx = np.clip(np.searchsorted(self.t, ts, side="right") - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[idx], self.t[idx + 1]
        h = (t1 - t0)[:, None]
        s = ((ts - t0) / (t1 - t0))[:, None]
        y0, y1 = self.y[idx], self.y[idx + 1]
        f0, f1 = self.f[idx], self.f[idx + 1]
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1

    @property
    def t_end(self):
        return float(self.t[-1])

    def states(self):
        return [CoefficientState.from_array(t, y) for t, y in zip(self.t, self.y)]


def _dp_step(fun, t, y, f0, h):
    k = [f0]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k) if a != 0.0)
        k.append(fun(t + _C[i] * h, yi))
    y_new = y + h * sum(b * kj for b, kj in zip(_B5, k) if b != 0.0)
    err = h * sum(e * kj for e, kj in zip(_E, k))
    # FSAL: stage 7 is f(t + h, y_new)
    return y_new, k[6], err


def _error_norm(err, y, y_new, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(fun, t0, y0, f0, cfg):
    d0 = np.linalg.norm(y0) + 1e-30
    d1 = np.linalg.norm(f0) + 1e-30
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    return min(h, cfg.max_step, cfg.max_time)


def _aitken(times):
    """Limit of a geometrically converging sequence of three crossing times."""
    t0, t1, t2 = times
    d1, d2 = t1 - t0, t2 - t1
    den = d2 - d1
    if den == 0.0 or d1 == 0.0 or not (0.0 < d2 / d1 < 1.0):
        return t2
    return t2 - d2 * d2 / den


def solve_ode(fun, y0, cfg, t0=0.0):
    """Integrate y' = fun(t, y) from t0 until max_time, blow-up, or step failure."""
    y = np.asarray(y0, dtype=float)
    t = float(t0)
    t_stop = t0 + cfg.max_time
    f = fun(t, y)
    ts, ys, fs = [t], [y], [f]
    thresholds = [cfg.blowup_threshold * r for r in LADDER]
    crossings = []
    level = 0
    fixed = cfg.fixed_step is not None
    h = cfg.fixed_step if fixed else _initial_step(fun, t, y, f, cfg)
    err_prev = 1e-4
    bracket = None
    terminal = Terminal.REACHED_MAX_TIME

    while t < t_stop:
        h = min(h, t_stop - t)
        if bracket is not None and bracket <= BRACKET_WIDTH:
            crossings.append(t + 0.5 * bracket)
            bracket = None
            level += 1
            if level == len(thresholds):
                terminal = Terminal.BLOWUP_DETECTED
                break
            h = min(h, cfg.max_step)
        if h < MIN_STEP:
            terminal = Terminal.STEP_FAILURE
            break
        y_new, f_new, err = _dp_step(fun, t, y, f, h)
        finite = bool(np.all(np.isfinite(y_new)))
        en = _error_norm(err, y, y_new, cfg) if finite else math.inf
        if not fixed and en > 1.0:
            h *= max(0.2, SAFETY * en ** -0.2) if finite else 0.25
            continue
        if not finite or np.max(np.abs(y_new)) > thresholds[level]:
            # crossing lies in (t, t + h]: shrink until bracket is tight
            bracket = h
            h *= 0.5
            continue
        t += h
        y, f = y_new, f_new
        ts.append(t)
        ys.append(y)
        fs.append(f)
        if bracket is not None:
            bracket -= h
            h = min(h, 0.5 * bracket) if bracket > 0 else h
            continue
        if not fixed:
            en = max(en, 1e-10)
            fac = SAFETY * en ** -PI_ALPHA * err_prev ** PI_BETA
            h = min(h * min(5.0, max(0.2, fac)), cfg.max_step)
            err_prev = en

    t_blow = None
    width = None
    if terminal is Terminal.BLOWUP_DETECTED:
        t_blow = _aitken(crossings)
        width = BRACKET_WIDTH
    return Trajectory(np.array(ts), np.array(ys), np.array(fs), terminal,
                      t_blow, width, tuple(crossings))


def integrate_full(init, cfg=IntegratorConfig()):
    """Oracle for the five-coefficient system from physical initial data."""
    spec = init.gamma_spec
    di, de = init.d_i, init.d_e

    def fun(t, y):
        return rhs_full(y, spec.gamma_at(t), di, de)

    return solve_ode(fun, init.state().as_array(), cfg)


def integrate_q(c, q0, qdot0, cfg=IntegratorConfig()):
    """Oracle for q'' = 2 q^3 - 2 c q with state (q, qdot)."""
    return solve_ode(lambda t, y: rhs_q(y, c), np.array([q0, qdot0], dtype=float), cfg)


def monitor_conservation(traj, init):
    """Largest absolute value of each conservation residual over the samples."""
    worst = np.zeros(3)
    for t, y in zip(traj.t, traj.y):
        r = conservation_triplet(CoefficientState.from_array(t, y), init)
        worst = np.maximum(worst, np.abs(r))
    return tuple(float(v) for v in worst)
