"""Time stepping for the friction pair.

Two schemes are available:

* :class:`Euler` - fixed-step forward Euler on the literal right-hand side, the
  scheme the original experiments were produced with. Slip-to-stick is
  triggered by a sign change of zdot across a step.
* :class:`EventRK4` - classical RK4 on the smooth field of the current mode,
  with switching instants located by bisection on the RK4 sub-step.

Both feed :func:`simulate`, which returns a :class:`Trajectory` of uniformly
spaced samples plus a log of every mode change.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Iterator, Union

import numpy as np

from .core import Forcing, Mode, Params, State, energy, validate
from .dynamics import (
    DEFAULT_TOL_V,
    ModelVariant,
    Region,
    breakaway_direction,
    breakaway_violated,
    filippov_region,
    mode_transition,
    rhs,
    sliding_field,
)

MAX_BISECTIONS = 64
MAX_EVENTS_PER_STEP = 10_000


class IntegrationError(RuntimeError):
    """A step failed (non-finite state, chattering, degenerate event)."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message if time is None else f"{message} (t={time:.17g})")
        self.time = time


@dataclass(frozen=True)
class Euler:
    h: float = 1e-4

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be > 0")


@dataclass(frozen=True)
class EventRK4:
    h: float = 1e-3
    event_tol_t: float = 1e-9

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be > 0")
        if not 0 < self.event_tol_t < self.h:
            raise ValueError("event_tol_t must lie in (0, h)")


Integrator = Union[Euler, EventRK4]


@dataclass(frozen=True)
class Scenario:
    params: Params
    initial: State
    t_end: float
    variant: ModelVariant = ModelVariant.CLOSED_FORM
    integrator: Integrator = field(default_factory=EventRK4)
    forcing: Forcing = field(default_factory=Forcing.zero)
    initial_mode: Mode | None = None  # None resolves automatically at t = 0
    record_every: int = 1
    tol_v: float = DEFAULT_TOL_V

    def __post_init__(self):
        validate(self.params)
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ValueError("t_end must be >= 0")
        if not (isinstance(self.record_every, int) and self.record_every >= 1):
            raise ValueError("record_every must be an integer >= 1")
        if not self.tol_v > 0:
            raise ValueError("tol_v must be > 0")

    def replace(self, **changes) -> Scenario:
        return replace(self, **changes)


class EventKind(str, enum.Enum):
    SLIP_ONSET = "SlipOnset"
    STICK_ONSET = "StickOnset"
    DIRECTION_REVERSAL = "DirectionReversal"
    REGION_CROSS = "RegionCross"


@dataclass(frozen=True)
class Event:
    time: float
    kind: EventKind
    state_at: State
    direction: int = 0  # outgoing slip direction; 0 for stick onset
    momentum_jump: float = 0.0  # |m2 * zdot| removed by the stick projection

    @property
    def label(self) -> str:
        if self.kind in (EventKind.SLIP_ONSET, EventKind.DIRECTION_REVERSAL):
            return f"{self.kind.value}({self.direction:+d})"
        return self.kind.value


@dataclass
class Trajectory:
    """Uniformly recorded samples (column arrays) plus the full event log."""

    t: np.ndarray
    x1: np.ndarray
    v1: np.ndarray
    x2: np.ndarray
    v2: np.ndarray
    mode: np.ndarray  # int codes: 0 stick, +1 / -1 slip direction
    energy: np.ndarray
    events: list[Event]
    scenario: Scenario

    @property
    def z(self) -> np.ndarray:
        return self.x1 - self.x2

    @property
    def zdot(self) -> np.ndarray:
        return self.v1 - self.v2

    def __len__(self) -> int:
        return len(self.t)

    def state(self, i: int) -> State:
        return State(float(self.x1[i]), float(self.v1[i]), float(self.x2[i]), float(self.v2[i]))

    def samples(self) -> Iterator[tuple[float, State, Mode, float]]:
        for i in range(len(self.t)):
            yield float(self.t[i]), self.state(i), Mode.from_code(int(self.mode[i])), float(self.energy[i])

    @property
    def final_state(self) -> State:
        return self.state(-1)


# -- raw-float kernels ----------------------------------------------------------


def _steppers(p: Params, forcing: Forcing, variant: ModelVariant):
    """One RK4 stepper ``(y, t, dt) -> y`` per mode direction.

    Every mode field is affine in (x1, v1), so the default steppers work on
    precomputed coefficients. The Filippov variant steps stick through its own
    sliding field (the convex combination of the side fields) instead, which
    keeps it an independent computation of the same dynamics.
    """
    u = None if forcing.is_zero else forcing
    mt = p.m1 + p.m2
    table = {0: partial(_rk4, (-p.a2 / mt, -p.a1 / mt, 0.0, 1.0 / mt, None, u))}
    for d in (-1, 1):
        table[d] = partial(_rk4, (-p.a2 / p.m1, -p.a1 / p.m1, -p.b * d / p.m1, 1.0 / p.m1,
                                  p.b * d / p.m2, u))
    if variant is ModelVariant.FILIPPOV:
        table[0] = partial(_rk4_sliding, p, forcing)
    return table


def _rk4(cf, y, t, dt):
    """Classical RK4 on one affine mode field dv1 = c0 + cx*x1 + cv*v1 + u/m.

    Body 2 in slip has constant acceleration ``acc2`` and is advanced exactly
    (RK4 is exact there anyway); in stick it shares body 1's increments.
    """
    cx, cv, c0, iu, acc2, u = cf
    x1, v1, x2, v2 = y
    hh = 0.5 * dt
    if u is None:
        u0 = um = u1 = 0.0
    else:
        u0, um, u1 = u(t) * iu, u(t + hh) * iu, u(t + dt) * iu
    k1 = c0 + cx * x1 + cv * v1 + u0
    vb = v1 + hh * k1
    k2 = c0 + cx * (x1 + hh * v1) + cv * vb + um
    vc = v1 + hh * k2
    k3 = c0 + cx * (x1 + hh * vb) + cv * vc + um
    vd = v1 + dt * k3
    k4 = c0 + cx * (x1 + dt * vc) + cv * vd + u1
    s6 = dt / 6.0
    dx1 = s6 * (v1 + 2.0 * vb + 2.0 * vc + vd)
    v1n = v1 + s6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if acc2 is None:
        return x1 + dx1, v1n, x2 + dx1, v1n
    return x1 + dx1, v1n, x2 + dt * (v2 + 0.5 * acc2 * dt), v2 + acc2 * dt


def _rk4_sliding(p, forcing, y, t, dt):
    """RK4 along the Filippov sliding field; v2 is pinned to v1 afterwards."""
    def f(tt, x1, v1, v2):
        return sliding_field(p, x1, v1, v2, forcing(tt))

    x1, v1, x2, v2 = y
    hh = 0.5 * dt
    a1, b1 = f(t, x1, v1, v2)
    v1b, v2b = v1 + hh * a1, v2 + hh * b1
    a2, b2 = f(t + hh, x1 + hh * v1, v1b, v2b)
    v1c, v2c = v1 + hh * a2, v2 + hh * b2
    a3, b3 = f(t + hh, x1 + hh * v1b, v1c, v2c)
    v1d, v2d = v1 + dt * a3, v2 + dt * b3
    a4, _ = f(t + dt, x1 + dt * v1c, v1d, v2d)
    s6 = dt / 6.0
    v1n = v1 + s6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return (x1 + s6 * (v1 + 2.0 * v1b + 2.0 * v1c + v1d), v1n,
            x2 + s6 * (v2 + 2.0 * v2b + 2.0 * v2c + v2d), v1n)


def _finite(y, t):
    if not all(math.isfinite(c) for c in y):
        raise IntegrationError("non-finite state (unstable step)", t)


def _resolve(p, variant, forcing, y, mode, t, tol_v, crossed):
    """Apply the mode machine at a located switching point.

    Returns (state tuple, new mode, event or None).
    """
    s = State(*y)
    u = forcing(t)
    new = mode_transition(p, s, mode, u, tol_v, crossed=crossed, variant=variant)
    if new is mode and crossed:
        # numerical grazing at a ray end point: zdot crossed but the net force
        # points back; treat it as a reversal rather than looping
        new = Mode.slip(-mode.direction)
    if new is mode:
        return y, mode, None
    if new.is_stick:
        jump = p.m2 * abs(y[1] - y[3])
        y = (y[0], y[1], y[2], y[1])
        return y, new, Event(t, EventKind.STICK_ONSET, State(*y), 0, jump)
    if mode.is_stick:
        return y, new, Event(t, EventKind.SLIP_ONSET, s, new.direction)
    return y, new, Event(t, EventKind.DIRECTION_REVERSAL, s, new.direction)


def resolve_initial_mode(sc: Scenario) -> tuple[Mode, Event | None]:
    """Mode at t = 0; an immediate breakaway from S is logged as a slip onset."""
    s0 = sc.initial
    if sc.initial_mode is not None:
        return sc.initial_mode, None
    u0 = sc.forcing(0.0)
    region = filippov_region(sc.params, s0, sc.tol_v)
    if region is Region.OMEGA_PLUS:
        return Mode.SLIP_PLUS, None
    if region is Region.OMEGA_MINUS:
        return Mode.SLIP_MINUS, None
    if sc.variant.breaks_away and breakaway_violated(sc.params, s0, u0):
        d = breakaway_direction(sc.params, s0, u0)
        return Mode.slip(d), Event(0.0, EventKind.SLIP_ONSET, s0, d)
    return Mode.STICK, None


def _euler(variant, p, forcing, y, mode, t, h, tol_v):
    d = mode.direction
    der = rhs(variant, p, State(*y), forcing(t), mode, tol_v=math.inf)
    y1 = (y[0] + h * der.dx1, y[1] + h * der.dv1, y[2] + h * der.dx2, y[3] + h * der.dv2)
    t1 = t + h
    _finite(y1, t1)
    if d == 0:
        y1 = (y1[0], y1[1], y1[2], y1[1])
        return _resolve(p, variant, forcing, y1, mode, t1, tol_v, False)
    g0 = d * (y[1] - y[3])
    g1 = d * (y1[1] - y1[3])
    crossed = g1 < 0 or (g1 == 0 and g0 > 0)
    if not crossed:
        return y1, mode, None
    return _resolve(p, variant, forcing, y1, mode, t1, tol_v, True)


def step_euler(variant: ModelVariant, p: Params, forcing: Forcing, s: State, mode: Mode,
               t: float, h: float, tol_v: float = DEFAULT_TOL_V) -> tuple[State, Mode]:
    """One forward Euler step followed by the mode machine."""
    if not h > 0:
        raise ValueError("h must be > 0")
    y, mode, _ = _euler(variant, p, forcing, s.as_tuple(), mode, t, h, tol_v)
    return State(*y), mode


def _event_rk4(steppers, variant, p, forcing, y, mode, t, t_end_step, tol_t, tol_v):
    m2b = p.b / p.m2
    mt = p.m1 + p.m2
    a1, a2 = p.a1, p.a2
    zero = forcing.is_zero
    breaks = variant.breaks_away
    events = []
    t_a = t
    while t_a < t_end_step:
        d = mode.direction
        step = steppers[d]
        dt = t_end_step - t_a
        if d == 0:
            if not breaks:
                y = step(y, t_a, dt)
                _finite(y, t_end_step)
                break
            u = 0.0 if zero else forcing(t_a)
            if abs(u - a1 * y[1] - a2 * y[0]) / mt > m2b:
                y, mode, ev = _resolve(p, variant, forcing, y, mode, t_a, tol_v, False)
                events.append(ev)
                continue
            floor = 0.0
        else:
            g_a = d * (y[1] - y[3])
            if g_a < 0:
                # short arc missed at the end of the previous sub-step
                y, mode, ev = _resolve(p, variant, forcing, y, mode, t_a, tol_v, True)
                if ev is not None:
                    events.append(ev)
                continue
            # right after an onset zdot is exactly zero; ignore round-off of that size
            floor = 0.0 if g_a > 0 else -8 * 2.2e-16 * max(abs(y[1]), abs(y[3]), 1e-300)

        y_b = step(y, t_a, dt)
        _finite(y_b, t_end_step)
        if not _fired(d, y_b, t_end_step, floor, zero, forcing, a1, a2, mt, m2b):
            y = y_b
            break
        lo, hi, y_hi = 0.0, dt, y_b
        n = 0
        while hi - lo > tol_t:
            n += 1
            if n > MAX_BISECTIONS:
                raise IntegrationError("event bisection did not collapse", t_a)
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            y_mid = step(y, t_a, mid)
            if _fired(d, y_mid, t_a + mid, floor, zero, forcing, a1, a2, mt, m2b):
                hi, y_hi = mid, y_mid
            else:
                lo = mid
        t_e = t_a + hi
        y, mode, ev = _resolve(p, variant, forcing, y_hi, mode, t_e, tol_v, d != 0)
        if ev is not None:
            events.append(ev)
        t_a = t_e
        if len(events) > MAX_EVENTS_PER_STEP:
            raise IntegrationError("chattering: too many events within one step", t_a)
    return y, mode, events


def _fired(d, y, t, floor, zero, forcing, a1, a2, mt, m2b):
    """Event function of mode ``d``: breakaway in stick, zdot reaching zero in slip."""
    if d == 0:
        u = 0.0 if zero else forcing(t)
        return abs(u - a1 * y[1] - a2 * y[0]) / mt > m2b
    g = d * (y[1] - y[3])
    return g < floor or (floor == 0.0 and g == 0.0)


def step_event_rk4(variant: ModelVariant, p: Params, forcing: Forcing, s: State, mode: Mode,
                   t: float, h: float, event_tol_t: float,
                   tol_v: float = DEFAULT_TOL_V) -> tuple[State, Mode, list[Event]]:
    """Advance one RK4 step of length ``h``, stopping at every mode switch inside it."""
    if not h > 0:
        raise ValueError("h must be > 0")
    if not 0 < event_tol_t < h:
        raise ValueError("event_tol_t must lie in (0, h)")
    y, mode, events = _event_rk4(_steppers(p, forcing, variant), variant, p, forcing, s.as_tuple(), mode, t, t + h,
                                 event_tol_t, tol_v)
    return State(*y), mode, events


def sample_grid(sc: Scenario) -> np.ndarray:
    """Step end times: k*h for k < n, and exactly t_end at the end."""
    h = sc.integrator.h
    if sc.t_end == 0:
        return np.zeros(1)
    n = max(1, math.ceil(sc.t_end / h - 1e-9))
    grid = np.arange(n + 1, dtype=float) * h
    grid[-1] = sc.t_end
    return grid


def recorded_indices(sc: Scenario, n_points: int) -> np.ndarray:
    idx = np.arange(0, n_points, sc.record_every)
    if idx[-1] != n_points - 1:
        idx = np.append(idx, n_points - 1)
    return idx


def simulate(sc: Scenario) -> Trajectory:
    """Integrate ``sc`` from t = 0 to ``t_end``; a pure function of the scenario."""
    p, forcing, variant = sc.params, sc.forcing, sc.variant
    grid = sample_grid(sc)
    keep = recorded_indices(sc, len(grid))
    out = np.empty((len(keep), 5))
    modes = np.empty(len(keep), dtype=np.int8)

    mode, ev0 = resolve_initial_mode(sc)
    events: list[Event] = [ev0] if ev0 is not None else []
    y = sc.initial.as_tuple()
    out[0] = (0.0, *y)
    modes[0] = mode.direction
    j = 1
    rk = isinstance(sc.integrator, EventRK4)
    steppers = _steppers(p, forcing, variant) if rk else None
    tol_t = sc.integrator.event_tol_t if rk else 0.0
    record_every = sc.record_every
    last = len(grid) - 1
    for k in range(1, len(grid)):
        t0, t1 = float(grid[k - 1]), float(grid[k])
        try:
            if rk:
                y, mode, evs = _event_rk4(steppers, variant, p, forcing, y, mode, t0, t1, tol_t, sc.tol_v)
                events.extend(evs)
            else:
                y, mode, ev = _euler(variant, p, forcing, y, mode, t0, t1 - t0, sc.tol_v)
                if ev is not None:
                    events.append(ev)
        except IntegrationError as exc:
            if exc.time is None:
                exc.time = t0
            raise
        if k % record_every == 0 or k == last:
            out[j] = (t1, *y)
            modes[j] = mode.direction
            j += 1
    x1, v1, x2, v2 = out[:, 1], out[:, 2], out[:, 3], out[:, 4]
    e = 0.5 * p.a2 * x1 * x1 + 0.5 * p.m1 * v1 * v1 + 0.5 * p.m2 * v2 * v2
    return Trajectory(out[:, 0].copy(), x1.copy(), v1.copy(), x2.copy(), v2.copy(), modes, e,
                      events, sc)


def energy_of(p: Params, traj: Trajectory) -> np.ndarray:
    """Recompute the energy column from the stored states."""
    return np.array([energy(p, traj.state(i)) for i in range(len(traj))])
