import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from slowfast.grid import (
    Field, Grid, ImplicitDiffusion, h1_norm, h1_seminorm, lap_neumann, laplacian_neumann, lp_norm,
    norm_Lp, seminorm,
)

vals = arrays(np.float64, st.integers(4, 40), elements=st.floats(-10, 10))


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(1.0, 3)
    with pytest.raises(ValueError):
        Grid(0.0, 8)
    g = Grid(2.0, 8)
    assert g.h == 0.25
    assert g.x[0] == 0.125 and g.x[-1] == 1.875


def test_field_checks():
    g = Grid(1.0, 4)
    with pytest.raises(ValueError):
        Field(g, [1.0, 2.0])
    with pytest.raises(ValueError):
        Field(g, [1.0, 2.0, np.nan, 0.0])
    f = Field(g, [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        f.values[0] = 5.0
    lines = f.to_csv().splitlines()
    assert lines[0] == "x,value" and lines[1] == "0.125,1.0"


def test_laplacian_examples():
    g = Grid(4.0, 4)
    assert np.array_equal(laplacian_neumann(Field(g, [0, 1, 1, 0])).values, [1, -1, -1, 1])
    assert np.array_equal(lap_neumann(np.full(7, 3.2), 0.1), np.zeros(7))


@pytest.mark.parametrize("n,L", [(8, 1.0), (33, 2.5), (128, 1.0)])
def test_laplacian_cosine_eigenfield(n, L):
    # [DERIVED] discrete Fourier analysis: eigenvalue -(2/h^2)(1 - cos(pi h / L))
    g = Grid(L, n)
    f = np.cos(np.pi * g.x / L)
    lam = -(2 / g.h**2) * (1 - math.cos(math.pi * g.h / L))
    assert np.allclose(lap_neumann(f, g.h), lam * f, rtol=0, atol=1e-9 * abs(lam))


def test_laplacian_second_order():
    errs = []
    for n in (32, 64, 128):
        g = Grid(1.0, n)
        f = np.cos(np.pi * g.x)
        errs.append(np.max(np.abs(lap_neumann(f, g.h) + np.pi**2 * f)))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(1.9 <= o <= 2.1 for o in orders)


@given(vals)
def test_laplacian_conserves(f):
    h = 1.0 / len(f)
    assert abs(h * np.sum(lap_neumann(f, h))) <= 1e-12 * max(1.0, np.max(np.abs(f))) / h


def test_norm_examples():
    g = Grid(1.0, 10)
    c = Field(g, np.full(10, -2.5))
    for p in (1, 2, 3.5, math.inf):
        assert norm_Lp(c, p) == pytest.approx(2.5, rel=1e-14)
    assert lp_norm(np.array([3.0, 4.0]), 0.5, 2) == pytest.approx(math.sqrt(12.5), rel=1e-15)
    f = np.array([1.0, -2.0, 3.0, 0.5])
    assert lp_norm(f, 0.25, 1) == 0.25 * 6.5
    with pytest.raises(ValueError):
        lp_norm(f, 0.25, 0.5)


@given(arrays(np.float64, st.integers(4, 40), elements=st.floats(0.01, 10)),
       st.floats(1.0, 6.0), st.floats(0.0, 4.0))
def test_norm_monotone_in_p(f, p, dp):
    h = 1.0 / len(f)
    f = f / (h * f.sum())  # probability normalised on (0, 1)
    assert lp_norm(f, h, p) <= lp_norm(f, h, p + dp) * (1 + 1e-12)


def test_seminorm_examples():
    g = Grid(1.0, 20)
    assert h1_seminorm(Field(g, np.full(20, 4.0))) == 0.0
    assert seminorm(g.x, g.h) == pytest.approx(math.sqrt(1 - g.h), rel=1e-14)
    assert h1_norm(g.x, g.h) == pytest.approx(math.hypot(lp_norm(g.x, g.h), math.sqrt(1 - g.h)))


@given(vals)
def test_seminorm_flip(f):
    h = 1.0 / len(f)
    assert seminorm(f, h) == pytest.approx(seminorm(f[::-1], h), rel=1e-12, abs=1e-300)


def test_implicit_diffusion(rng):
    n, h, d, dt = 16, 1 / 16, 1.3, 1e-2
    b = rng.uniform(0, 1, n)
    x = ImplicitDiffusion(n, h, d, dt)(b)
    assert np.allclose(x - dt * d * lap_neumann(x, h), b, atol=1e-14)
    assert np.sum(x) == pytest.approx(np.sum(b), rel=1e-14)
    assert np.all(x > 0)
