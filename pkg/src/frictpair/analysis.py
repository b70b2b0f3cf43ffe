"""Geometry of the switching surface and convergence diagnostics for trajectories.

The switching surface S = {v1 = v2} splits into the sliding strip S0
(|x1| <= x_star) and the crossing parts S+ / S-. The rays l+ / l- bound S0 and
are where stick is lost. Everything here is a pure function of parameters and
recorded trajectories.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import Params, State
from .integrators import EventKind, Trajectory


class InsufficientDataError(ValueError):
    """The trajectory is too short or too sparse for the requested statistic."""


class RegionLabel(str, enum.Enum):
    OMEGA_PLUS = "OmegaPlus"
    OMEGA_MINUS = "OmegaMinus"
    S0 = "S0"
    S_PLUS = "SPlus"
    S_MINUS = "SMinus"
    L_PLUS = "LPlus"
    L_MINUS = "LMinus"


@dataclass(frozen=True)
class SlidingGeometry:
    x_star: float  # half-width of the sliding strip
    e_cr: float  # energy of the largest closed orbit inside the strip
    half_period: float  # duration of a stick arc between the rays in the limit
    n_s: tuple[float, float, float] = (0.0, 1.0, -1.0)  # normal to S in (x1, v1, v2)


def sliding_geometry(p: Params) -> SlidingGeometry:
    mt = p.m1 + p.m2
    x_star = p.b * mt / (p.a2 * p.m2)
    e_cr = p.b ** 2 * mt ** 2 / (2.0 * p.a2 * p.m2 ** 2)
    return SlidingGeometry(x_star, e_cr, math.pi * math.sqrt(mt / p.a2))


def classify_point(p: Params, s: State, tol_v: float, tol_x: float) -> RegionLabel:
    """Region of the (x1, v1, v2) space containing ``s``.

    Points within ``tol_x`` of a strip edge are rays only when moving outward;
    everything else on the edge counts as S0.
    """
    if tol_v <= 0 or tol_x <= 0:
        raise ValueError("tolerances must be > 0")
    zdot = s.zdot
    if zdot > tol_v:
        return RegionLabel.OMEGA_PLUS
    if zdot < -tol_v:
        return RegionLabel.OMEGA_MINUS
    x_star = sliding_geometry(p).x_star
    x = s.x1
    v = 0.5 * (s.v1 + s.v2)
    if abs(x) < x_star - tol_x:
        return RegionLabel.S0
    if x > x_star + tol_x:
        return RegionLabel.S_PLUS
    if x < -x_star - tol_x:
        return RegionLabel.S_MINUS
    if x > 0 and v > tol_v:
        return RegionLabel.L_PLUS
    if x < 0 and v < -tol_v:
        return RegionLabel.L_MINUS
    return RegionLabel.S0


def transversality(p: Params, s: State) -> tuple[float, float]:
    """Normal components of the two side fields of the free system at ``s``.

    Returns ``(phi_minus . n, phi_plus . n)``; both negative on S+, both
    positive on S-, and of opposite signs (minus >= 0 >= plus) on S0.
    """
    base = -p.a2 / p.m1 * s.x1
    tail = p.b / p.m1 + p.b / p.m2
    return base + tail, base - tail


@dataclass(frozen=True)
class StickInterval:
    t_start: float
    t_end: float
    open: bool = False  # still stuck when the record ends

    @property
    def length(self) -> float:
        return self.t_end - self.t_start


def stick_intervals(traj: Trajectory) -> list[StickInterval]:
    """Maximal stick intervals, paired from the event log."""
    t_final = float(traj.t[-1])
    out = []
    start = 0.0 if traj.mode[0] == 0 else None
    # an initial breakaway is logged at t = 0 while mode[0] already reads slip
    for ev in traj.events:
        if ev.kind is EventKind.STICK_ONSET:
            start = ev.time
        elif ev.kind is EventKind.SLIP_ONSET and start is not None:
            out.append(StickInterval(start, ev.time))
            start = None
    if start is not None:
        out.append(StickInterval(start, t_final, open=True))
    return out


def sync_time(traj: Trajectory, eps: float) -> float | None:
    """Earliest recorded time after which |zdot| stays within ``eps``."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    bad = np.nonzero(np.abs(traj.zdot) > eps)[0]
    if len(bad) == 0:
        return float(traj.t[0])
    if bad[-1] == len(traj.t) - 1:
        return None
    return float(traj.t[bad[-1] + 1])


def abs_peaks(t: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Local maxima of |x| with a parabola through each three-point peak."""
    y = np.abs(x)
    i = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    ya, yb, yc = y[i - 1], y[i], y[i + 1]
    denom = ya - 2.0 * yb + yc
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(denom != 0, 0.5 * (ya - yc) / denom, 0.0)
    peak = yb - 0.25 * (ya - yc) * off
    return t[i] + off * 0.5 * (t[i + 1] - t[i - 1]), peak


def amplitude_decay(traj: Trajectory, t_min: float = 0.0, t_max: float = math.inf) -> np.ndarray:
    """Successive decrements of the |x1| peaks within ``[t_min, t_max]``."""
    m = (traj.t >= t_min) & (traj.t <= t_max)
    t_pk, pk = abs_peaks(traj.t[m], traj.x1[m])
    if len(pk) < 3:
        raise InsufficientDataError(f"need >= 3 extrema of x1, found {len(pk)}")
    return pk[:-1] - pk[1:]


def expected_energy_rate(p: Params, s: State, u_val: float = 0.0) -> float:
    """Power balance: friction and viscous losses plus input power."""
    return -p.b * abs(s.zdot) - p.a1 * s.v1 * s.v1 + u_val * s.v1


def energy_rate_residual(p: Params, traj: Trajectory) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Finite-difference dE/dt against the power balance on event-free stencils.

    Uses the fourth-order five-point central difference, so sampling must be
    uniform. Returns (times, numerical rate, expected rate) at usable samples.
    """
    t, e = traj.t, traj.energy
    if len(t) < 5:
        raise InsufficientDataError("need >= 5 samples")
    dt = np.diff(t)
    h = float(np.median(dt))
    idx = np.arange(2, len(t) - 2)
    uniform = np.abs(dt - h) <= 1e-9 * h
    ok = uniform[idx - 2] & uniform[idx - 1] & uniform[idx] & uniform[idx + 1]
    ev_t = np.array(sorted(ev.time for ev in traj.events))
    if len(ev_t):
        lo = t[idx - 2] - 0.5 * h
        hi = t[idx + 2] + 0.5 * h
        first = np.searchsorted(ev_t, lo, side="left")
        last = np.searchsorted(ev_t, hi, side="right")
        ok &= first == last
    idx = idx[ok]
    rate = (e[idx - 2] - 8.0 * e[idx - 1] + 8.0 * e[idx + 1] - e[idx + 2]) / (12.0 * h)
    forcing = traj.scenario.forcing
    u = np.zeros(len(idx)) if forcing.is_zero else np.array([forcing(tt) for tt in t[idx]])
    zd = traj.v1[idx] - traj.v2[idx]
    v1 = traj.v1[idx]
    expected = -p.b * np.abs(zd) - p.a1 * v1 * v1 + u * v1
    return t[idx], rate, expected


def energy_rate_check(p: Params, traj: Trajectory) -> float:
    """Max |dE/dt - expected| over samples whose stencil avoids every event."""
    _, rate, expected = energy_rate_residual(p, traj)
    if len(rate) == 0:
        raise InsufficientDataError("no event-free stencil")
    return float(np.max(np.abs(rate - expected)))


class OutcomeKind(str, enum.Enum):
    EQUILIBRIUM = "Equilibrium"
    MERGED_PERIODIC = "MergedPeriodic"
    CONVERGING_TO_CRITICAL = "ConvergingToCritical"


@dataclass(frozen=True)
class OutcomeClass:
    kind: OutcomeKind
    e0: float | None = None
    merge_time: float | None = None
    fit_exponent: float | None = None

    def as_dict(self) -> dict:
        d = {"class": self.kind.value}
        if self.kind is OutcomeKind.MERGED_PERIODIC:
            d.update(E0=self.e0, merge_time=self.merge_time)
        elif self.kind is OutcomeKind.CONVERGING_TO_CRITICAL:
            d.update(fit_exponent=self.fit_exponent)
        return d


def mode_runs(traj: Trajectory) -> list[tuple[int, int, int]]:
    """Runs of constant stick/slip status in the recorded mode column as
    (is_stick, first index, last index)."""
    stick = (traj.mode == 0).astype(np.int8)
    cuts = np.nonzero(np.diff(stick))[0] + 1
    starts = np.concatenate(([0], cuts))
    ends = np.concatenate((cuts - 1, [len(stick) - 1]))
    return [(int(stick[s]), int(s), int(e)) for s, e in zip(starts, ends)]


MIN_TAIL_POINTS = 10


def classify_outcome(p: Params, traj: Trajectory, tol: float) -> OutcomeClass:
    """Long-run fate of a trajectory, read from its recorded samples.

    Only the sample columns are used so that a trajectory re-read from CSV is
    classified exactly as the in-memory one.
    """
    geo = sliding_geometry(p)
    e_end = float(traj.energy[-1])
    if e_end <= tol:
        return OutcomeClass(OutcomeKind.EQUILIBRIUM)
    runs = mode_runs(traj)
    last_stick, i0, _ = runs[-1]
    if last_stick and e_end <= geo.e_cr + tol:
        merged = len(runs) > 1
        if merged or traj.mode[0] == 0:
            return OutcomeClass(OutcomeKind.MERGED_PERIODIC, e0=float(traj.energy[i0]),
                                merge_time=float(traj.t[i0]))
    sticks = [(i, j) for s, i, j in runs if s]
    if len(sticks) < 2 * MIN_TAIL_POINTS:
        raise InsufficientDataError(
            f"horizon too short: {len(sticks)} stick intervals, need {2 * MIN_TAIL_POINTS}")
    tail = sticks[len(sticks) // 2:]
    t_k = np.array([traj.t[i] for i, _ in tail])
    e_k = np.array([traj.energy[i:j + 1].max() for i, j in tail]) - geo.e_cr
    if np.any(e_k <= 0) or np.any(t_k <= 0):
        raise InsufficientDataError("tail energies not above the critical level")
    slope = np.polyfit(np.log(t_k), np.log(e_k), 1)[0]
    return OutcomeClass(OutcomeKind.CONVERGING_TO_CRITICAL, fit_exponent=float(slope))
