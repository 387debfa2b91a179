import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import gamma

from fracflow.errors import AccuracyError, ValidationError
from fracflow.kernel import (diffusivity, fractional_laplacian_constant, kernel_table, kernel_values,
                             limit_profile, poisson_kernel, window_mass)

X50 = np.linspace(-50, 50, 2001)


def test_poisson_oracle():
    for t in (0.1, 1.0, 2.0, 10.0):
        err = np.max(np.abs(kernel_values(0.5, t, X50) - poisson_kernel(t, X50)))
        assert err <= 1e-8


def test_spot_values():
    assert kernel_values(0.5, 1.0, [0.0])[0] == pytest.approx(1 / math.pi, abs=1e-12)
    assert kernel_values(0.5, 2.0, [1.0])[0] == pytest.approx(2 / (5 * math.pi), abs=1e-12)


@pytest.mark.parametrize("y", [0.0, 0.7, 3.0, 25.0])
def test_against_adaptive_quadrature(y):
    ref = quad(lambda xi: math.cos(y * xi) * math.exp(-xi ** 0.6), 0, math.inf, limit=4000)[0] / math.pi
    assert kernel_values(0.3, 1.0, [y])[0] == pytest.approx(ref, abs=1e-8)


@given(r=st.floats(0.3, 0.95), t=st.floats(0.5, 20.0))
@settings(max_examples=20, deadline=None)
def test_self_similarity(r, t):
    x = np.linspace(-20, 20, 81)
    direct = kernel_values(r, t, x, reduce=False)
    reduced = kernel_values(r, t, x)
    scale = t ** (-1 / (2 * r))
    via_one = scale * kernel_values(r, 1.0, scale * x)
    assert np.max(np.abs(direct - reduced)) <= 1e-8
    assert np.max(np.abs(via_one - reduced)) <= 1e-8


def test_even_exactly():
    x = np.linspace(0.01, 40, 300)
    assert np.array_equal(kernel_values(0.37, 1.3, x), kernel_values(0.37, 1.3, -x))


@pytest.mark.parametrize("r,xmax", [(0.15, 0.5), (0.25, 50.0), (0.5, 50.0), (0.8, 50.0)])
def test_positive_and_monotone(r, xmax):
    tab = kernel_table(r, 1.0, np.linspace(0, xmax, 501))
    assert tab.values.min() >= -1e-10
    assert np.all(np.diff(tab.values) < 0)


def test_window_mass_against_arctan():
    for X in (1.0, 200.0):
        assert window_mass(0.5, 1.0, X) == pytest.approx(2 / math.pi * math.atan(X), abs=1e-12)


@pytest.mark.parametrize("r", [0.5, 0.75])
def test_riemann_sum_reproduces_window_mass(r):
    h = 0.01
    x = -200 + h * (np.arange(40000) + 0.5)
    tab = kernel_table(r, 1.0, x)
    assert tab.riemann_mass() == pytest.approx(window_mass(r, 1.0, 200.0), abs=1e-6)


def test_semigroup_on_grid():
    h = 0.01
    x = np.arange(-5000, 5001) * h
    Ks, Kt, Kst = (kernel_values(0.5, t, x) for t in (0.5, 1.0, 1.5))
    conv = h * np.convolve(Ks, Kt, mode="same")
    near = np.abs(x) <= 10
    assert np.max(np.abs(conv - Kst)[near]) <= 1e-4


def test_near_one_approaches_gaussian():
    x = np.linspace(-10, 10, 401)
    gauss = np.exp(-x ** 2 / 4) / math.sqrt(4 * math.pi)
    assert np.max(np.abs(kernel_values(0.99, 1.0, x) - gauss)) <= 2e-2


def test_accuracy_error_suggests_nodes():
    with pytest.raises(AccuracyError) as info:
        kernel_table(0.5, 1.0, [0.0, 1e4], max_nodes=1000)
    assert info.value.suggested_nodes > 1000
    tab = kernel_table(0.5, 1.0, [0.0, 1e4], max_nodes=info.value.suggested_nodes)
    assert tab.n_nodes == info.value.suggested_nodes


def test_domain_errors():
    with pytest.raises(ValidationError):
        kernel_table(1.0, 1.0, [0.0])
    with pytest.raises(ValidationError):
        kernel_table(0.5, 0.0, [0.0])


def test_cutoff_metadata():
    tab = kernel_table(0.25, 1.0, [0.0])
    assert math.exp(-tab.cutoff ** 0.5) <= 1e-16 * (1 + 1e-9)


def test_fractional_laplacian_constant():
    assert fractional_laplacian_constant(0.5) == pytest.approx(1 / math.pi, rel=1e-15)
    for r in (0.1, 0.25, 0.9):
        # equivalent form r 4^r Gamma(1/2 + r) / (sqrt(pi) Gamma(1 - r))
        alt = r * 4 ** r * gamma(0.5 + r) / (math.sqrt(math.pi) * gamma(1 - r))
        assert fractional_laplacian_constant(r) == pytest.approx(alt, rel=1e-13)
    assert diffusivity(1.0, 0.5) == pytest.approx(math.pi)


def test_limit_profile():
    x = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(limit_profile(1.0, 1.0, 0.4, 2.0, x), kernel_values(0.4, 2.0, x), rtol=1e-15)
    assert np.all(limit_profile(0.0, 3.0, 0.4, 2.0, x) == 0)
    assert limit_profile(2.0, 1.0, 0.5, 1.0, [0.0])[0] == pytest.approx(2 / math.pi, abs=1e-12)
    # C rescales time: U solves U_t + C (-Delta)^r U = 0
    np.testing.assert_allclose(limit_profile(1.0, 3.0, 0.5, 2.0, x), poisson_kernel(6.0, x), atol=1e-12)
    with pytest.raises(ValidationError):
        limit_profile(1.0, 0.0, 0.5, 1.0, x)


def test_csv_export(tmp_path):
    tab = kernel_table(0.5, 1.0, np.linspace(-1, 1, 5))
    p = tab.to_csv(tmp_path / "k.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "# r: 0.5" and "x,K" in lines
    rows = [l.split(",") for l in lines[lines.index("x,K") + 1:]]
    np.testing.assert_array_equal([float(b) for _, b in rows], tab.values)
