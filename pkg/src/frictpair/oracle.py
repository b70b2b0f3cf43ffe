"""Semi-analytic reference trajectories for the free, undamped pair.

With a1 = 0 and u = 0 every mode is linear with constant coefficients, so a
trajectory is a chain of closed-form arcs:

* stick: both bodies oscillate together at sqrt(a2 / (m1 + m2)); the arc ends
  when |x1| reaches the strip edge x_star (breakaway);
* slip: body 1 oscillates at sqrt(a2 / m1) about -d*b/a2, body 2 moves with
  constant acceleration d*b/m2; the arc ends at the next root of zdot.

Only root finding is numeric (grid bracketing plus bisection on the closed
form), so these trajectories are independent of the time steppers.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import Mode, Params, State
from .dynamics import ModelVariant
from .integrators import Event, EventKind, Scenario, Trajectory, recorded_indices, resolve_initial_mode, sample_grid

ROOT_TOL_T = 1e-12
GRID_PER_PERIOD = 20
MAX_PERIODS = 10


class OracleError(ValueError):
    """Raised for cases the closed-form chain does not cover."""


class ArcKind(enum.Enum):
    STICK = "stick"
    SLIP = "slip"


@dataclass(frozen=True)
class Arc:
    kind: ArcKind
    t_start: float
    t_end: float  # math.inf for a stick arc that never breaks away
    start: State
    omega: float
    center: float  # equilibrium position of the harmonic part
    direction: int = 0  # slip direction, 0 for stick
    acc2: float = 0.0  # constant acceleration of body 2 in slip

    @property
    def amplitude(self) -> float:
        dx = self.start.x1 - self.center
        return math.hypot(dx, self.start.v1 / self.omega)

    def at(self, t: float) -> State:
        tau = t - self.t_start
        c, s = math.cos(self.omega * tau), math.sin(self.omega * tau)
        x0, v0 = self.start.x1 - self.center, self.start.v1
        x1 = self.center + x0 * c + v0 / self.omega * s
        v1 = -x0 * self.omega * s + v0 * c
        if self.kind is ArcKind.STICK:
            # common velocity; the gap x1 - x2 is frozen
            return State(x1, v1, x1 - self.start.z, v1)
        x2 = self.start.x2 + self.start.v2 * tau + 0.5 * self.acc2 * tau * tau
        v2 = self.start.v2 + self.acc2 * tau
        return State(x1, v1, x2, v2)

    def zdot(self, tau: float) -> float:
        """Relative velocity a time ``tau`` into a slip arc, free of the
        cancellation that ``at(t).zdot`` suffers right after an onset."""
        half = math.sin(0.5 * self.omega * tau)
        x0, v0 = self.start.x1 - self.center, self.start.v1
        return (self.start.zdot - 2.0 * v0 * half * half
                - x0 * self.omega * math.sin(self.omega * tau) - self.acc2 * tau)


def _require_free(p: Params):
    if p.a1 != 0:
        raise OracleError("reference arcs need a1 = 0")


def analytic_stick_arc(p: Params, s0: State, t0: float) -> Arc:
    """Stuck motion from ``s0``; ends where the required friction reaches b."""
    _require_free(p)
    if abs(s0.zdot) > 1e-9 * (1.0 + abs(s0.v1)):
        raise OracleError("stick arc must start with v1 == v2")
    s0 = State(s0.x1, s0.v1, s0.x2, s0.v1)
    mt = p.m1 + p.m2
    x_star = p.b * mt / (p.a2 * p.m2)
    if abs(s0.x1) > x_star:
        raise OracleError("breakaway already violated at the start of the stick arc")
    omega = math.sqrt(p.a2 / mt)
    amp = math.hypot(s0.x1, s0.v1 / omega)
    if amp <= x_star:
        return Arc(ArcKind.STICK, t0, math.inf, s0, omega, 0.0)
    # x1 = amp*cos(theta), theta = omega*tau + theta0; |x1| grows through x_star
    # at theta = -alpha (mod pi)
    alpha = math.acos(x_star / amp)
    theta0 = math.atan2(-s0.v1 / omega, s0.x1)
    dtheta = (-alpha - theta0) % math.pi
    if dtheta > math.pi - 1e-12 and s0.x1 * s0.v1 > 0:
        dtheta = 0.0
    return Arc(ArcKind.STICK, t0, t0 + dtheta / omega, s0, omega, 0.0)


def analytic_slip_arc(p: Params, s0: State, direction: int, t0: float) -> Arc:
    """Relative sliding from ``s0`` in ``direction``; ends at the next zero of zdot."""
    _require_free(p)
    if direction not in (-1, 1):
        raise OracleError("direction must be -1 or +1")
    omega = math.sqrt(p.a2 / p.m1)
    arc = Arc(ArcKind.SLIP, t0, math.inf, s0, omega, -direction * p.b / p.a2,
              direction, direction * p.b / p.m2)
    period = 2.0 * math.pi / omega
    dt = period / GRID_PER_PERIOD
    lo = 0.0
    for k in range(1, GRID_PER_PERIOD * MAX_PERIODS + 1):
        hi = k * dt
        if direction * arc.zdot(hi) <= 0:
            break
        lo = hi
    else:
        raise OracleError(f"no zero of zdot within {MAX_PERIODS} periods")
    while hi - lo > ROOT_TOL_T:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if direction * arc.zdot(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return Arc(ArcKind.SLIP, t0, t0 + hi, s0, omega, arc.center, direction, arc.acc2)


def chain_arcs(p: Params, s0: State, mode: Mode, t_end: float) -> tuple[list[Arc], list[Event]]:
    """Arcs covering [0, t_end] starting in ``mode`` and the events between them."""
    _require_free(p)
    x_star = p.b * (p.m1 + p.m2) / (p.a2 * p.m2)
    arcs, events = [], []
    t, s = 0.0, s0
    while True:
        if mode.is_stick:
            arc = analytic_stick_arc(p, s, t)
        else:
            arc = analytic_slip_arc(p, s, mode.direction, t)
        arcs.append(arc)
        if arc.t_end > t_end:
            break
        t = arc.t_end
        s = arc.at(t)
        if mode.is_stick:
            d = -1 if s.x1 > 0 else 1
            mode = Mode.slip(d)
            events.append(Event(t, EventKind.SLIP_ONSET, s, d))
        elif abs(s.x1) > x_star:
            mode = Mode.slip(-mode.direction)
            events.append(Event(t, EventKind.DIRECTION_REVERSAL, s, mode.direction))
        else:
            mode = Mode.STICK
            jump = p.m2 * abs(s.zdot)
            s = State(s.x1, s.v1, s.x2, s.v1)
            events.append(Event(t, EventKind.STICK_ONSET, s, 0, jump))
    return arcs, events


def evaluate(arcs: list[Arc], times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """States (n, 4) and mode codes at ``times`` (sorted)."""
    out = np.empty((len(times), 4))
    modes = np.empty(len(times), dtype=np.int8)
    k = 0
    for i, t in enumerate(times):
        while k < len(arcs) - 1 and t > arcs[k].t_end:
            k += 1
        arc = arcs[k]
        out[i] = arc.at(float(t)).as_tuple()
        modes[i] = arc.direction
    return out, modes


def reference_trajectory(sc: Scenario) -> Trajectory:
    """Arc-chained counterpart of ``simulate(sc)`` on the same sample grid."""
    p = sc.params
    _require_free(p)
    if not sc.forcing.is_zero:
        raise OracleError("reference arcs need zero forcing")
    if sc.variant is ModelVariant.SIMPLIFIED:
        raise OracleError("the simplified model never breaks away; use closed_form or filippov")
    mode, ev0 = resolve_initial_mode(sc)
    arcs, events = chain_arcs(p, sc.initial, mode, sc.t_end)
    if ev0 is not None:
        events.insert(0, ev0)
    grid = sample_grid(sc)
    times = grid[recorded_indices(sc, len(grid))]
    states, modes = evaluate(arcs, times)
    states[0] = sc.initial.as_tuple()
    x1, v1, x2, v2 = states.T
    e = 0.5 * p.a2 * x1 * x1 + 0.5 * p.m1 * v1 * v1 + 0.5 * p.m2 * v2 * v2
    return Trajectory(times.copy(), x1.copy(), v1.copy(), x2.copy(), v2.copy(), modes, e, events, sc)
