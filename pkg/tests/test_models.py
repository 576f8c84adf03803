import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slfib.calibration import FiberChartPoint, fiber_points
from slfib.models import (
    BaseCoordHL,
    NaSlice,
    explicit_F,
    explicit_Fprime,
    hl_discriminant_contains,
    hl_map,
    holo_disc_area,
    na_oracle,
    na_oracle_grid,
    na_potential_circle,
    na_slice_formulas,
    u_slice,
    v_slice,
)


class P:
    def __init__(self, z1, z2, z3):
        self.z1, self.z2, self.z3 = complex(z1), complex(z2), complex(z3)


def test_hl_map_symmetric_point():
    b = hl_map(P(1, 1, 1))
    assert (b.t1, b.t2, b.t3) == (0.0, 0.0, 0.0)


def test_hl_map_direct():
    b = hl_map(P(1, 0, 0))
    assert (b.t1, b.t2, b.t3) == (1.0, 1.0, 0.0)


def test_hl_map_hits_discriminant_ray():
    b = hl_map(P(0, 0, 1j))
    assert (b.t1, b.t2, b.t3) == (0.0, -1.0, 0.0)
    assert hl_discriminant_contains(b, 1e-9)


def test_discriminant_rays():
    assert hl_discriminant_contains(BaseCoordHL(2.0, 2.0, 0.0), 1e-9)
    assert hl_discriminant_contains(BaseCoordHL(0.0, 0.0, 0.0), 1e-9)
    assert not hl_discriminant_contains(BaseCoordHL(1.0, 0.0, 0.0), 1e-9)
    with pytest.raises(ValueError):
        hl_discriminant_contains(BaseCoordHL(0, 0, 0), 0.0)


def test_oracle_vertical_slice_value():
    u, v = na_oracle(1.0, 0.0, 1.0)
    assert v == 0.0
    assert abs(u - (-(1.0 + np.sqrt(2.0)) ** -0.5)) < 1e-12


def test_oracle_horizontal_slice_value():
    u, v = na_oracle(0.0, 1.0, 0.0)
    assert (u, v) == (0.0, 1.0)
    assert abs(na_slice_formulas(1.0, 1.0, "v") - np.sqrt(3.0)) < 1e-14


def test_oracle_origin():
    assert na_oracle(0.0, 0.0, 0.0) == (0.0, 0.0)


def test_slice_formulas():
    assert na_slice_formulas(0.0, 1.0, "u") == -1.0
    assert na_slice_formulas(0.7, 0.0, "v") == 0.0
    assert na_slice_formulas(2.0, -0.3, "v") == -na_slice_formulas(2.0, 0.3, "v")
    with pytest.raises(ValueError):
        na_slice_formulas(1.0, 1.0, "w")


@given(
    a=st.floats(-2, 2),
    x=st.floats(-2, 2),
    y=st.floats(-2, 2),
)
@settings(max_examples=200, deadline=None)
def test_oracle_solves_the_system(a, x, y):
    u, v = na_oracle(a, x, y)
    q = x * x + u * u + abs(a)
    assert abs(v * v + y * y - q * q + a * a) < 1e-10 * max(1.0, q * q)
    assert abs(u * v + x * y) < 1e-10 * max(1.0, abs(x * y))
    # sign pattern of the graph functions
    if x > 1e-12:
        assert v >= 0.0
    if x < -1e-12:
        assert v <= 0.0
    if y > 1e-12:
        assert u <= 0.0
    if y < -1e-12:
        assert u >= 0.0


@given(a=st.floats(0.0, 2.0), x=st.floats(-2, 2), y=st.floats(-2, 2))
@settings(max_examples=60, deadline=None)
def test_oracle_even_in_a(a, x, y):
    assert na_oracle(a, x, y) == na_oracle(-a, x, y)


@pytest.mark.parametrize("a", [0.0, 0.5, 1.0, 2.0])
def test_axis_agreement(a):
    s = np.linspace(-3.0, 3.0, 41)
    u, v = na_oracle_grid(a, s, np.zeros_like(s))
    assert np.max(np.abs(v - v_slice(a, s))) < 1e-10
    assert np.max(np.abs(u)) < 1e-14
    u, v = na_oracle_grid(a, np.zeros_like(s), s)
    assert np.max(np.abs(u - u_slice(a, s))) < 1e-10
    assert np.max(np.abs(v)) < 1e-14


def test_explicit_f_on_axis_fibre():
    b = explicit_F(P(0, 0, 0.5j))
    assert b.a == 0.0 and b.c == 0.5j


def test_explicit_f_kills_correction_when_z2_zero():
    b = explicit_F(P(1, 0, 0))
    assert b.a == 0.5 and b.c == 0.0


def test_explicit_f_zero_guard():
    # a >= 0 with z1 = 0 can only happen when z2 = 0 as well
    b = explicit_F(P(0, 0, 2 + 1j))
    assert b.c == 2 + 1j


@pytest.mark.parametrize("negate,fib", [(False, explicit_F), (True, explicit_Fprime)])
def test_translated_fibre_roundtrip(negate, fib, rng):
    a, c = 0.3, 0.1 + 0.2j
    sl = NaSlice(a, c, negate=negate)
    for _ in range(20):
        x, y = rng.uniform(-1.5, 1.5, 2)
        phase = rng.uniform(0, 2 * np.pi)
        p = fiber_points(sl, FiberChartPoint(x, y, phase, a))
        base = fib(p)
        assert abs(base.a - a) < 1e-9
        assert abs(base.c - c) < 1e-9


def test_fibration_property_random(rng):
    for _ in range(50):
        a = rng.uniform(-1, 1)
        c = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        x, y = rng.uniform(-1.5, 1.5, 2)
        phase = rng.uniform(0, 2 * np.pi)
        p = fiber_points(NaSlice(a, c), FiberChartPoint(x, y, phase, a))
        base = explicit_F(p)
        assert abs(base.a - a) < 1e-9 and abs(base.c - c) < 1e-9
        p = fiber_points(NaSlice(a, c, negate=True), FiberChartPoint(x, y, phase, a))
        base = explicit_Fprime(p)
        assert abs(base.a - a) < 1e-9 and abs(base.c - c) < 1e-9


@pytest.mark.parametrize("a,expected", [(0.6, (1.2, 1.2, 0.0)), (-0.4, (-0.8, 0.0, 0.0))])
def test_quadratic_map_constant_on_fibres(a, expected, rng):
    sl = NaSlice(a)
    for _ in range(15):
        x, y = rng.uniform(-1.2, 1.2, 2)
        p = fiber_points(sl, FiberChartPoint(x, y, rng.uniform(0, 6.28), a))
        b = hl_map(p)
        assert np.allclose((b.t1, b.t2, b.t3), expected, atol=1e-9)


def test_continuity_and_kink_across_equal_moduli():
    # along z1 = (1+s), z2 = 1, z3 = 0 the base point is continuous at
    # s = 0 but its s-derivative jumps by 1
    def b_of(s):
        return explicit_F(P(1.0 + s, 1.0, 0.0)).c

    eps = 1e-9
    assert abs(b_of(eps) - b_of(-eps)) < 1e-8
    h = 1e-5
    slope_right = (b_of(2 * h) - b_of(h)) / h
    slope_left = (b_of(-h) - b_of(-2 * h)) / h
    assert abs(slope_right - slope_left) > 0.5


def test_disc_areas():
    assert abs(holo_disc_area(0.5) - np.pi) < 1e-15
    assert holo_disc_area(0.0) == 0.0
    assert abs(holo_disc_area(-1.0) - 2 * np.pi) < 1e-15


def test_potential_circle_matches_quadrature():
    spec = na_potential_circle(0.5)
    assert not spec.sin_coeffs  # the slice graph is even in x
    # direct numeric integral of the tangential gradient up to theta
    thetas = np.array([0.7, 1.9, 4.1])
    tau = np.linspace(0, 2 * np.pi, 20001)
    u, v = na_oracle_grid(0.5, np.cos(tau), np.sin(tau))
    g = -v * np.sin(tau) + u * np.cos(tau)
    from scipy.integrate import cumulative_trapezoid

    f_ref = cumulative_trapezoid(g, tau, initial=0.0)
    ref = np.interp(thetas, tau, f_ref)
    got = spec.sample(thetas) - spec.sample(np.array([0.0]))
    assert np.max(np.abs(got - ref)) < 1e-6  # reference trapezoid accuracy
