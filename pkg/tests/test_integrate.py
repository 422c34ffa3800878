import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from gse_lvrt.integrate import (
    IntegratorConfig,
    _grid_times,
    hermite_crossing,
    march,
    march_adaptive,
    rk4_step,
)
from gse_lvrt.numerics import adaptive_simpson, first_sign_change


def test_config_invariants():
    with pytest.raises(ValueError):
        IntegratorConfig(step=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="Euler")
    with pytest.raises(ValueError):
        IntegratorConfig(step=1e-4, event_tol=1e-3)
    h = IntegratorConfig().halved()
    assert h.step == 5e-5 and h.event_tol <= h.step


def test_rk4_exponential_order():
    errs = []
    for h in (0.1, 0.05):
        y = (1.0,)
        for _ in range(int(round(1 / h))):
            y = rk4_step(lambda s: (-s[0],), y, h)
        errs.append(abs(y[0] - math.exp(-1)))
    assert 14 < errs[0] / errs[1] < 18


def test_grid_times_hit_grid_and_end():
    ts = _grid_times(0.0, 0.35, 0.1)
    assert ts[:-1] == pytest.approx([0.1, 0.2, 0.3])
    assert ts[-1] == 0.35
    ts = _grid_times(0.35, 0.6, 0.1)
    assert ts == pytest.approx([0.4, 0.5, 0.6])
    assert ts[-1] == 0.6


def test_march_early_stop():
    t, y, stopped = march(lambda s: (1.0,), (0.0,), 0.0, 1.0, 0.01, lambda t, y: y[0] >= 0.5)
    assert stopped
    assert t == pytest.approx(0.5)


def test_adaptive_matches_fixed_on_oscillator():
    f = lambda s: (s[1], -s[0])  # noqa: E731
    _, a, _ = march(f, (1.0, 0.0), 0.0, 2.0, 1e-3)
    _, b, _ = march_adaptive(f, (1.0, 0.0), 0.0, 2.0, 1e-3, 1e-10, 1e-12)
    assert a[0] == pytest.approx(math.cos(2.0), abs=1e-10)
    assert b[0] == pytest.approx(math.cos(2.0), abs=1e-8)


def test_hermite_crossing_exact_for_cubic():
    # x(t) = t^3 is reproduced exactly by the cubic Hermite interpolant
    t = hermite_crossing(0.0, 1.0, 0.0, 1.0, 0.0, 3.0, 0.125, 1e-12)
    assert t == pytest.approx(0.5, abs=1e-11)


def test_adaptive_simpson_against_quad_on_sqrt_endpoints():
    # integrand vanishes like a square root at both ends
    f = lambda x: math.cos(x) * math.sqrt(max(x * (2.0 - x), 0.0))  # noqa: E731
    ref, _ = quad(f, 0.0, 2.0, epsabs=1e-14, limit=200)
    assert adaptive_simpson(f, 0.0, 2.0, 1e-10) == pytest.approx(ref, abs=1e-10)


@given(st.floats(-3, 3), st.floats(0.01, 4))
def test_adaptive_simpson_polynomial_and_reversal(a, w):
    b = a + w
    f = lambda x: 3 * x ** 2 - x + 1  # noqa: E731
    exact = (b ** 3 - a ** 3) - (b ** 2 - a ** 2) / 2 + (b - a)
    assert adaptive_simpson(f, a, b) == pytest.approx(exact, abs=1e-9)
    assert adaptive_simpson(f, b, a) == pytest.approx(-exact, abs=1e-9)
    assert adaptive_simpson(f, a, a) == 0.0


def test_first_sign_change_finds_smallest():
    g = lambda x: math.sin(x)  # noqa: E731
    lo, hi, glo, ghi = first_sign_change(g, 1.0, 10.0, 1000)
    assert lo <= math.pi <= hi
    assert glo > 0 > ghi
    assert first_sign_change(lambda x: 1.0 + x * x, -1, 1) is None


def test_first_sign_change_exact_zero():
    assert first_sign_change(lambda x: x, 0.0, 1.0, 10)[:2] == (0.0, 0.0)


def test_rk4_on_arrays_is_elementwise():
    f = lambda s: (s[1], -np.sin(s[0]))  # noqa: E731
    y = (np.array([0.1, 1.0, 2.0]), np.zeros(3))
    batch = rk4_step(f, y, 0.01)
    for k in range(3):
        one = rk4_step(f, (float(y[0][k]), 0.0), 0.01)
        assert batch[0][k] == one[0]
        assert batch[1][k] == one[1]
