"""Hypothesis strategies shared by the property tests."""
from hypothesis import strategies as st

from frictpair.core import Params, State

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
small = st.floats(-0.05, 0.05, allow_nan=False, allow_infinity=False, allow_subnormal=False)


@st.composite
def params(draw, viscous=False):
    pos = st.floats(0.1, 10.0)
    return Params(draw(pos), draw(pos), draw(st.floats(0.0, 2.0)) if viscous else 0.0,
                  draw(st.floats(10.0, 500.0)), draw(st.floats(0.01, 1.0)))


@st.composite
def states(draw, on_surface=False):
    x1, v1, x2 = draw(small), draw(small), draw(small)
    v2 = v1 if on_surface else draw(small)
    return State(x1, v1, x2, v2)
