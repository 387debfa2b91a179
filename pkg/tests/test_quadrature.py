import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from fracflow.config import build_grid
from fracflow.errors import QuadratureDomainError, SingularEndpointError, ValidationError
from fracflow.quadrature import (cell_weight, distance_weights, far_field_tail, gagliardo_seminorm_sq,
                                 pair_weight_matrix)

from conftest import small_config

sigmas = st.floats(0.05, 0.95)


@given(sigma=sigmas, gap=st.floats(1e-3, 50.0), width=st.floats(1e-3, 10.0))
@settings(max_examples=60, deadline=None)
def test_cell_weight_matches_adaptive_quadrature(sigma, gap, width):
    a = 2.0 + gap
    got = cell_weight(2.0, a, a + width, sigma)
    ref = quad(lambda y: (y - 2.0) ** (-1 - 2 * sigma), a, a + width, epsabs=0, epsrel=1e-13)[0]
    assert got == pytest.approx(ref, rel=1e-10)


def test_cell_weight_left_and_right_agree():
    assert cell_weight(0.0, 1.0, 2.0, 0.3) == pytest.approx(cell_weight(0.0, -2.0, -1.0, 0.3), rel=1e-15)


def test_cell_weight_closed_form_half():
    # sigma = 1/2: int_1^2 y^-2 dy = 1/2
    assert cell_weight(0.0, 1.0, 2.0, 0.5) == pytest.approx(0.5, rel=1e-15)


def test_far_cell_has_no_cancellation():
    w = cell_weight(0.0, 1e8, 1e8 + 1e-3, 0.25)
    assert w == pytest.approx(1e-3 * (1e8) ** -1.5, rel=1e-7)


def test_cell_weight_errors():
    with pytest.raises(SingularEndpointError):
        cell_weight(1.0, 1.0, 2.0, 0.5)
    with pytest.raises(QuadratureDomainError):
        cell_weight(1.5, 1.0, 2.0, 0.5)
    with pytest.raises(ValidationError):
        cell_weight(0.0, 2.0, 1.0, 0.5)
    with pytest.raises(ValidationError):
        cell_weight(0.0, 1.0, 2.0, 1.0)
    # the endpoint error is also a domain error
    assert issubclass(SingularEndpointError, QuadratureDomainError)


@given(sigma=sigmas, n=st.integers(2, 400), h=st.floats(1e-3, 1.0))
@settings(max_examples=40, deadline=None)
def test_distance_weights_additive(sigma, n, h):
    # cells tile [h/2, (n - 1/2) h], so the weights sum to the integral over that interval
    w = distance_weights(n, h, sigma)
    assert w[0] == 0
    exact = ((h / 2) ** (-2 * sigma) - ((n - 0.5) * h) ** (-2 * sigma)) / (2 * sigma)
    assert w.sum() == pytest.approx(exact, rel=1e-11)


def test_pair_weights_symmetric_against_cell_weight():
    g = build_grid(small_config(n=16))
    W = pair_weight_matrix(g, 0.4)
    assert np.array_equal(W, W.T)
    assert np.all(np.diag(W) == 0)
    x, e = g.cell_centers, g.edges
    for i, j in [(0, 5), (3, 4), (15, 2)]:
        assert W[i, j] == pytest.approx(g.h * cell_weight(x[i], e[j], e[j + 1], 0.4), rel=1e-13)


def _naive(f, W, mask):
    idx = np.flatnonzero(mask)
    return sum(W[i, j] * (f[i] - f[j]) ** 2 for i in idx for j in idx)


def test_seminorm_matches_naive_double_sum(rng):
    g = build_grid(small_config(n=40))
    W = pair_weight_matrix(g, 0.3)
    f = rng.normal(size=g.n)
    f[:5] = 0.0
    for mask in (g.exterior, g.inner, np.ones(g.n, bool)):
        assert gagliardo_seminorm_sq(f, 0.3, mask, g) == pytest.approx(_naive(f, W, mask), rel=1e-12)
        assert gagliardo_seminorm_sq(f, 0.3, mask, g, weights=W) == pytest.approx(_naive(f, W, mask), rel=1e-12)


@given(c=st.floats(-5, 5), scale=st.floats(0.1, 10))
@settings(max_examples=20, deadline=None)
def test_seminorm_invariances(c, scale):
    g = build_grid(small_config(n=48))
    f = np.sin(g.cell_centers)
    base = gagliardo_seminorm_sq(f, 0.4, g.exterior, g)
    assert gagliardo_seminorm_sq(f + c, 0.4, g.exterior, g) == pytest.approx(base, rel=1e-9)
    assert gagliardo_seminorm_sq(scale * f, 0.4, g.exterior, g) == pytest.approx(scale ** 2 * base, rel=1e-12)
    assert gagliardo_seminorm_sq(-f, 0.4, g.exterior, g) == pytest.approx(base, rel=1e-14)


def test_seminorm_is_bitwise_reproducible(rng):
    g = build_grid(small_config(n=200))
    f = rng.normal(size=g.n)
    a = gagliardo_seminorm_sq(f, 0.35, g.exterior, g)
    b = gagliardo_seminorm_sq(f.copy(), 0.35, g.exterior.copy(), g)
    assert a == b


def test_empty_mask_warns():
    g = build_grid(small_config(n=16))
    with pytest.warns(RuntimeWarning):
        assert gagliardo_seminorm_sq(np.ones(g.n), 0.5, np.zeros(g.n, bool), g) == 0.0


def test_far_field_equals_wider_window():
    # the tail term is exactly the contribution of the extra cells of a wider window plus its own tail
    narrow = build_grid(small_config(n=80, L=4.0))
    wide = build_grid(small_config(n=160, L=8.0))
    f_n = np.where(np.abs(narrow.cell_centers - 2.5) < 1, np.cos(narrow.cell_centers), 0.0)
    f_w = np.where(np.abs(wide.cell_centers - 2.5) < 1, np.cos(wide.cell_centers), 0.0)
    a = gagliardo_seminorm_sq(f_n, 0.3, narrow.exterior, narrow, far_field=True)
    b = gagliardo_seminorm_sq(f_w, 0.3, wide.exterior, wide, far_field=True)
    assert a == pytest.approx(b, rel=1e-12)
    assert gagliardo_seminorm_sq(f_n, 0.3, narrow.exterior, narrow) < a


def test_far_field_tail_closed_form():
    g = build_grid(small_config(n=20, L=5.0))
    t = far_field_tail(g, 0.5)
    x = g.cell_centers
    np.testing.assert_allclose(t, 1 / (5 - x) + 1 / (5 + x), rtol=1e-14)
    np.testing.assert_allclose(far_field_tail(g, 0.5, left=False), 1 / (5 - x), rtol=1e-14)
