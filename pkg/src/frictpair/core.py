"""Domain types shared by every other module: parameters, forcing, state, mode.

All quantities are SI reals. Values are immutable so they can be shared freely
between threads and worker processes.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class ParameterError(ValueError):
    """Raised when a physical parameter violates its admissible range."""


@dataclass(frozen=True)
class Params:
    """Coefficients of the friction-coupled pair.

    m1 is the driving body (grounded through spring ``a2`` and damper ``a1``),
    m2 the passive body resting on it, ``b`` the Coulomb friction magnitude.
    """

    m1: float
    m2: float
    a1: float
    a2: float
    b: float


def validate(p: Params) -> Params:
    """Return ``p`` unchanged if admissible, else raise naming the first violation."""
    for name in ("m1", "m2", "a1", "a2", "b"):
        value = getattr(p, name)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ParameterError(f"{name} must be a finite real")
    if p.m1 <= 0:
        raise ParameterError("m1 must be > 0")
    if p.m2 <= 0:
        raise ParameterError("m2 must be > 0")
    if p.a1 < 0:
        raise ParameterError("a1 must be >= 0")
    if p.a2 <= 0:
        raise ParameterError("a2 must be > 0")
    if p.b <= 0:
        raise ParameterError("b must be > 0")
    return p


class ForcingKind(str, enum.Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    SINUSOID = "sinusoid"


@dataclass(frozen=True)
class Forcing:
    """External force u(t) on the driving body, from a closed set of shapes."""

    kind: ForcingKind = ForcingKind.ZERO
    value: float = 0.0  # constant level
    amplitude: float = 0.0
    omega: float = 0.0
    phase: float = 0.0

    @classmethod
    def zero(cls) -> Forcing:
        return cls()

    @classmethod
    def constant(cls, c: float) -> Forcing:
        return cls(ForcingKind.CONSTANT, value=float(c))

    @classmethod
    def sinusoid(cls, amplitude: float, omega: float, phase: float = 0.0) -> Forcing:
        return cls(ForcingKind.SINUSOID, amplitude=float(amplitude), omega=float(omega), phase=float(phase))

    @property
    def is_zero(self) -> bool:
        return self.kind is ForcingKind.ZERO

    def __call__(self, t: float) -> float:
        if self.kind is ForcingKind.ZERO:
            return 0.0
        if self.kind is ForcingKind.CONSTANT:
            return self.value
        return self.amplitude * math.sin(self.omega * t + self.phase)


@dataclass(frozen=True)
class State:
    x1: float
    v1: float
    x2: float
    v2: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x1, self.v1, self.x2, self.v2)):
            raise ValueError(f"non-finite state {self!r}")

    @property
    def z(self) -> float:
        """Relative displacement x1 - x2."""
        return self.x1 - self.x2

    @property
    def zdot(self) -> float:
        return self.v1 - self.v2

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.v1, self.x2, self.v2)


class Mode(enum.Enum):
    """Contact regime. Slip modes carry the sign of the relative velocity."""

    STICK = "stick"
    SLIP_PLUS = "slip+"
    SLIP_MINUS = "slip-"

    @classmethod
    def slip(cls, direction: int) -> Mode:
        if direction == 1:
            return cls.SLIP_PLUS
        if direction == -1:
            return cls.SLIP_MINUS
        raise ValueError(f"slip direction must be -1 or +1, got {direction!r}")

    @classmethod
    def from_code(cls, code: int) -> Mode:
        return cls.STICK if code == 0 else cls.slip(code)

    @property
    def direction(self) -> int:
        """+1 / -1 for slip, 0 for stick."""
        return _DIRECTION[self]

    @property
    def is_stick(self) -> bool:
        return self is Mode.STICK


_DIRECTION = {Mode.STICK: 0, Mode.SLIP_PLUS: 1, Mode.SLIP_MINUS: -1}


def sgn3(v: float) -> int:
    """Three-valued signum; exact zero maps to 0."""
    if not math.isfinite(v):
        raise ValueError(f"sgn3 of non-finite value {v!r}")
    if v > 0:
        return 1
    if v < 0:
        return -1
    return 0


def energy(p: Params, s: State) -> float:
    """Spring plus kinetic energy; the passive body's position does not enter."""
    return 0.5 * p.a2 * s.x1 * s.x1 + 0.5 * p.m1 * s.v1 * s.v1 + 0.5 * p.m2 * s.v2 * s.v2
