from fractions import Fraction

import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from radinterp.core import HALF_LINE, UNIT, StepFunction

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


@st.composite
def sequences(draw, min_size=0, max_size=8, exact=False, nonzero=False):
    if exact:
        elem = st.integers(-64, 64).map(lambda k: Fraction(k, 16))
    else:
        elem = finite
    xs = draw(st.lists(elem, min_size=min_size, max_size=max_size))
    if nonzero and not any(xs):
        xs = list(xs) + [Fraction(1) if exact else 1.0]
    return np.array(xs, dtype=object) if exact else np.array(xs, dtype=float)


@st.composite
def step_functions(draw, domain=UNIT, max_pieces=6, exact=False, nonzero=False):
    m = draw(st.integers(1, max_pieces))
    if exact:
        w = draw(st.lists(st.integers(1, 8), min_size=m, max_size=m))
        vals = draw(st.lists(st.integers(-12, 12).map(lambda k: Fraction(k, 4)), min_size=m, max_size=m))
        cum = np.cumsum([Fraction(v) for v in w])
        breaks = [c / cum[-1] for c in cum] if domain == UNIT else [c / 2 for c in cum]
    else:
        w = np.array(draw(st.lists(st.floats(0.05, 4.0), min_size=m, max_size=m)))
        vals = draw(st.lists(finite, min_size=m, max_size=m))
        cum = np.cumsum(w)
        breaks = cum / cum[-1] if domain == UNIT else cum
        vals = np.array(vals, dtype=float)
    if nonzero and not any(v != 0 for v in vals):
        vals = list(vals)
        vals[0] = Fraction(1) if exact else 1.0
    if not exact:
        breaks, vals = np.asarray(breaks, float), np.asarray(vals, float)
    return StepFunction(breaks, vals, domain)


def same_step(x: StepFunction, y: StepFunction, tol: float = 0.0) -> bool:
    if x.domain != y.domain or len(x) != len(y):
        return False
    if tol == 0:
        return all(a == b for a, b in zip(x.breaks, y.breaks)) and all(a == b for a, b in zip(x.values, y.values))
    return np.allclose(x.breaks.astype(float), y.breaks.astype(float), rtol=tol, atol=tol) and np.allclose(
        x.values.astype(float), y.values.astype(float), rtol=tol, atol=tol
    )


HALF = HALF_LINE


# criterion number -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
