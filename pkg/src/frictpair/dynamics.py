"""Right-hand sides of the friction-coupled pair and the stick/slip mode machine.

Three formulations are provided:

* ``CLOSED_FORM``: the switched ODE written with the three-valued sign, with the
  mass lumping factor ``1 - |sgn(zdot)|`` and the acceleration-dependent
  stiction factor ``(1 - sgn(|x1''| - b/m2)) / 2`` evaluated literally.
* ``SIMPLIFIED``: identical, but without the stiction factor, so a stuck pair
  never breaks away from within stick.
* ``FILIPPOV``: piecewise fields on either side of ``zdot = 0`` and, in stick,
  Filippov's convex combination of the two fields tangent to the surface.
"""
from __future__ import annotations

import enum
from typing import NamedTuple

from .core import Mode, Params, State, sgn3

DEFAULT_TOL_V = 1e-9


class ModelVariant(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    SIMPLIFIED = "simplified"
    FILIPPOV = "filippov"

    @property
    def breaks_away(self) -> bool:
        """Whether stick can be left once entered."""
        return self is not ModelVariant.SIMPLIFIED


class Region(str, enum.Enum):
    OMEGA_PLUS = "OmegaPlus"
    OMEGA_MINUS = "OmegaMinus"
    ON_S = "OnS"


class Derivative(NamedTuple):
    dx1: float
    dv1: float
    dx2: float
    dv2: float


class InconsistentModeError(ValueError):
    """The requested Filippov mode does not match the side of S the state is on."""


def _stick_acc(p: Params, x1: float, v1: float, u: float) -> float:
    return (u - p.a1 * v1 - p.a2 * x1) / (p.m1 + p.m2)


def stick_acceleration(p: Params, s: State, u_val: float) -> float:
    """Common acceleration of both bodies while they stick together."""
    return _stick_acc(p, s.x1, s.v1, u_val)


def breakaway_violated(p: Params, s: State, u_val: float) -> bool:
    """True when friction cannot supply the force needed to keep body 2 stuck."""
    return abs(_stick_acc(p, s.x1, s.v1, u_val)) > p.b / p.m2


def slip_field(p: Params, x1: float, v1: float, u: float, direction: int) -> tuple[float, float]:
    """(dv1, dv2) with friction at full magnitude opposing ``direction``."""
    f = p.b * direction
    return (u - p.a1 * v1 - p.a2 * x1 - f) / p.m1, f / p.m2


def sliding_field(p: Params, x1: float, v1: float, v2: float, u: float) -> tuple[float, float]:
    """Filippov sliding velocity on S: the convex combination of both side fields
    whose component along the normal (0, 1, -1) vanishes."""
    dv1_p, dv2_p = slip_field(p, x1, v1, u, 1)
    dv1_m, dv2_m = slip_field(p, x1, v1, u, -1)
    n_plus = dv1_p - dv2_p
    n_minus = dv1_m - dv2_m
    lam = n_minus / (n_minus - n_plus)
    return lam * dv1_p + (1.0 - lam) * dv1_m, lam * dv2_p + (1.0 - lam) * dv2_m


def closed_form_accelerations(p: Params, x1: float, v1: float, v2: float, u: float,
                              stiction_factor: bool = True) -> tuple[float, float]:
    """Literal evaluation of the switched equations from the sign of zdot."""
    sz = sgn3(v1 - v2)
    lump = 1 - abs(sz)
    acc1 = (u - p.a1 * v1 - p.a2 * x1 - p.b * sz) / (p.m1 + p.m2 * lump)
    if stiction_factor:
        hold = 0.5 * (1 - sgn3(abs(acc1) - p.b / p.m2))
    else:
        hold = 1.0
    acc2 = acc1 * lump * hold + p.b * sz / p.m2
    return acc1, acc2


def mode_field(p: Params, x1: float, v1: float, x2: float, v2: float, u: float,
               direction: int) -> tuple[float, float, float, float]:
    """Smooth vector field of one mode (``direction`` 0 = stick), on raw floats.

    This is what the integrators step through: the field of the current mode,
    continued smoothly across the switching surface until an event is located.
    """
    if direction == 0:
        a = _stick_acc(p, x1, v1, u)
        return v1, a, v2, a
    dv1, dv2 = slip_field(p, x1, v1, u, direction)
    return v1, dv1, v2, dv2


def rhs(variant: ModelVariant, p: Params, s: State, u_val: float, mode: Mode,
        tol_v: float = DEFAULT_TOL_V) -> Derivative:
    """Time derivative of the state under ``variant``.

    Closed-form and simplified variants read the switching from the sign of
    zdot and ignore ``mode``. The Filippov variant dispatches on ``mode``.
    """
    if variant is ModelVariant.FILIPPOV:
        zdot = s.zdot
        d = mode.direction
        if d == 0:
            if abs(zdot) > tol_v:
                raise InconsistentModeError(f"stick requested off S (zdot={zdot:g})")
            dv1, dv2 = sliding_field(p, s.x1, s.v1, s.v2, u_val)
        else:
            if sgn3(zdot) == -d and abs(zdot) > tol_v:
                raise InconsistentModeError(f"{mode.value} requested with zdot={zdot:g}")
            dv1, dv2 = slip_field(p, s.x1, s.v1, u_val, d)
        return Derivative(s.v1, dv1, s.v2, dv2)
    dv1, dv2 = closed_form_accelerations(
        p, s.x1, s.v1, s.v2, u_val, stiction_factor=variant is ModelVariant.CLOSED_FORM)
    return Derivative(s.v1, dv1, s.v2, dv2)


def filippov_region(p: Params, s: State, tol_v: float) -> Region:
    if tol_v < 0:
        raise ValueError("tol_v must be >= 0")
    zdot = s.zdot
    if abs(zdot) <= tol_v:
        return Region.ON_S
    return Region.OMEGA_PLUS if zdot > 0 else Region.OMEGA_MINUS


def breakaway_direction(p: Params, s: State, u_val: float) -> int:
    """Sign zdot acquires when stick is lost: opposite to the net spring/damper/input force."""
    return -sgn3(p.a2 * s.x1 + p.a1 * s.v1 - u_val)


def mode_transition(p: Params, s: State, mode: Mode, u_val: float, tol_v: float = DEFAULT_TOL_V,
                    *, crossed: bool = False,
                    variant: ModelVariant = ModelVariant.CLOSED_FORM) -> Mode:
    """Next contact mode at state ``s``.

    ``crossed`` tells the machine that zdot changed sign over the last step,
    which stands in for ``|zdot| <= tol_v`` when the exact zero was stepped over.
    """
    if tol_v <= 0:
        raise ValueError("tol_v must be > 0")
    if mode.is_stick:
        if variant.breaks_away and breakaway_violated(p, s, u_val):
            d = breakaway_direction(p, s, u_val)
            if d != 0:
                return Mode.slip(d)
        return mode
    if crossed or abs(s.zdot) <= tol_v:
        if variant.breaks_away and breakaway_violated(p, s, u_val):
            # a transversal crossing leaves in the direction the net force drives zdot;
            # this is -d at a genuine crossing and keeps the map idempotent
            return Mode.slip(breakaway_direction(p, s, u_val))
        return Mode.STICK
    return mode
