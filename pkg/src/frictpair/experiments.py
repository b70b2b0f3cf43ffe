"""Canonical scenarios and the randomized free-system suite."""
from __future__ import annotations

import math

import numpy as np

from .analysis import sliding_geometry
from .core import Params, State
from .dynamics import ModelVariant
from .integrators import Euler, EventRK4, Scenario

UNIT_PAIR = dict(m1=1.0, m2=1.0, a1=0.0, a2=200.0)


def fig3a(variant: ModelVariant = ModelVariant.SIMPLIFIED, t_end: float = 5.0) -> Scenario:
    """Stuck start, x1(0) = 6 mm, b = 0.5, forward Euler as in the original runs."""
    return Scenario(Params(b=0.5, **UNIT_PAIR), State(0.006, 0.0, 0.0, 0.0), t_end,
                    variant, Euler(1e-4))


def fig4a(b: float = 0.05, t_end: float = 6.0, h: float = 1e-3, a1: float = 0.0,
          variant: ModelVariant = ModelVariant.CLOSED_FORM, event_tol_t: float = 1e-9) -> Scenario:
    """Driving body kicked to 0.15 m/s with the passive body at rest."""
    pars = dict(UNIT_PAIR, a1=a1)
    return Scenario(Params(b=b, **pars), State(0.0, 0.15, 0.0, 0.0), t_end, variant,
                    EventRK4(h, event_tol_t))


def on_sliding_strip(p: Params, energy_ratio: float) -> State:
    """State at x1 = 0 on S carrying ``energy_ratio * e_cr``."""
    e0 = energy_ratio * sliding_geometry(p).e_cr
    v = math.sqrt(2.0 * e0 / (p.m1 + p.m2))
    return State(0.0, v, 0.0, v)


def random_params(rng: np.random.Generator) -> Params:
    m1, m2 = np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=2))
    a2 = rng.uniform(10.0, 500.0)
    b = math.exp(rng.uniform(math.log(0.01), math.log(1.0)))
    return Params(float(m1), float(m2), 0.0, float(a2), float(b))


def random_free_state(rng: np.random.Generator, p: Params, max_ratio: float = 10.0) -> State:
    """Uniform direction on the energy ellipsoid, energy in (0.1, max_ratio] * e_cr."""
    e0 = sliding_geometry(p).e_cr * math.exp(rng.uniform(math.log(0.1), math.log(max_ratio)))
    d = rng.normal(size=3)
    d /= np.linalg.norm(d)
    scale = math.sqrt(2.0 * e0)
    x1 = d[0] * scale / math.sqrt(p.a2)
    v1 = d[1] * scale / math.sqrt(p.m1)
    v2 = d[2] * scale / math.sqrt(p.m2)
    return State(float(x1), float(v1), 0.0, float(v2))


def fast_period(p: Params) -> float:
    """Shortest natural period (body 1 alone on its spring)."""
    return 2.0 * math.pi * math.sqrt(p.m1 / p.a2)


def stick_period(p: Params) -> float:
    return 2.0 * math.pi * math.sqrt((p.m1 + p.m2) / p.a2)


def random_free_scenario(rng: np.random.Generator, periods: float = 1000.0,
                         steps_per_period: int = 100,
                         variant: ModelVariant = ModelVariant.CLOSED_FORM) -> Scenario:
    """Free run lasting ``periods`` stick periods, stepped finely against the fastest mode."""
    p = random_params(rng)
    s0 = random_free_state(rng, p)
    h = fast_period(p) / steps_per_period
    return Scenario(p, s0, periods * stick_period(p), variant, EventRK4(h, min(1e-9, h * 1e-6)))


def random_suite(seed: int = 20240601, n: int = 50, **kw) -> list[Scenario]:
    rng = np.random.default_rng(seed)
    return [random_free_scenario(rng, **kw) for _ in range(n)]
