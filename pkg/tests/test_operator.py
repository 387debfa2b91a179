import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracflow.config import build_grid
from fracflow.errors import ValidationError
from fracflow.kernel import fractional_laplacian_constant
from fracflow.operator import (assemble, assemble_coefficients, assemble_rescaled, bilinear, dump_matrix,
                               energy, far_field_diagonal, quadratic_energy)
from fracflow.quadrature import cell_weight

from conftest import default_config, small_config


def scalar_reference(grid, cfg):
    """Entry-by-entry assembly from cell_weight, no vectorization."""
    n = grid.n
    x, e = grid.cell_centers, grid.edges
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = grid.inner[i], grid.inner[j]
            key = "s" if a and b else ("r" if not a and not b else "c")
            sigma = {"s": cfg.s, "r": cfg.r, "c": cfg.c}[key]
            alpha = {"s": cfg.alpha_s, "r": cfg.alpha_r, "c": cfg.alpha_c}[key]
            A[i, j] = -alpha * cell_weight(x[i], e[j], e[j + 1], sigma)
        A[i, i] = -A[i].sum()
    return A


def test_matches_scalar_reference_8_cells():
    cfg = small_config(n=8, L=2.0, inner_radius=1.0, alpha_r=1.3, alpha_s=0.7, alpha_c=2.1)
    g = build_grid(cfg)
    op = assemble(g, cfg)
    ref = scalar_reference(g, cfg)
    assert np.max(np.abs(op.matrix - ref)) <= 1e-14 * np.max(np.abs(ref))


@given(r=st.floats(0.05, 0.95), s=st.floats(0.05, 0.95), c=st.floats(0.05, 0.95),
       n=st.integers(16, 120))
@settings(max_examples=25, deadline=None)
def test_structure(r, s, c, n):
    cfg = small_config(n=n, L=4.0, r=r, s=s, c=c)
    g = build_grid(cfg)
    A = assemble(g, cfg).matrix
    assert np.array_equal(A, A.T)
    assert np.max(np.abs(A.sum(axis=1))) <= 1e-12 * np.max(np.abs(A))
    off = A - np.diag(np.diag(A))
    assert np.all(off <= 0)
    assert np.all(np.diag(A) > 0)
    ev = np.linalg.eigvalsh(A)
    assert ev.min() >= -1e-12 * ev.max()


def test_matrix_read_only():
    cfg = small_config()
    op = assemble(build_grid(cfg), cfg)
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 1.0


def test_decoupled_is_block_diagonal():
    cfg = small_config(n=40)
    g = build_grid(cfg)
    op = assemble_coefficients(g, {"s": 0.3, "r": 0.5, "c": 0.4}, {"s": 1.0, "r": 1.0, "c": 0.0})
    A = op.matrix
    inn, ext = g.inner, g.exterior
    assert np.all(A[np.ix_(inn, ext)] == 0) and np.all(A[np.ix_(ext, inn)] == 0)
    with pytest.raises(ValidationError):
        assemble_coefficients(g, {"s": 0.3, "r": 0.5, "c": 0.4}, {"s": 1.0, "r": 1.0, "c": -1.0})


def test_energy_breakdown_matches_quadratic_form(rng):
    cfg = small_config(n=60, alpha_c=1.7)
    op = assemble(build_grid(cfg), cfg)
    for _ in range(5):
        u = rng.normal(size=op.n)
        e = energy(op, u)
        assert e.total == pytest.approx(quadratic_energy(op, u), rel=1e-11)
        assert min(e.e_ss, e.e_rr, e.e_cross) >= 0
        assert bilinear(op, u, u) == pytest.approx(2 * e.total, rel=1e-11)


def test_energy_of_constants_is_zero():
    cfg = small_config(n=60)
    op = assemble(build_grid(cfg), cfg)
    e = energy(op, np.full(op.n, 3.0))
    assert e.total == 0.0
    assert abs(quadratic_energy(op, np.full(op.n, 3.0))) <= 1e-12


def test_bilinear_symmetric(rng):
    cfg = small_config(n=50)
    op = assemble(build_grid(cfg), cfg)
    u, v = rng.normal(size=(2, op.n))
    assert bilinear(op, u, v) == pytest.approx(bilinear(op, v, u), rel=1e-12)


def test_rescaled_identity_at_lambda_one():
    cfg = small_config(n=64)
    g = build_grid(cfg)
    a = assemble(g, cfg)
    b = assemble_rescaled(g, cfg, 1.0)
    assert np.array_equal(a.matrix, b.matrix)


def test_rescaled_relabels_and_weights():
    cfg = small_config(n=200, L=4.0, r=0.6, s=0.3, c=0.4)
    g = build_grid(cfg)
    op = assemble_rescaled(g, cfg, 2.0)
    assert op.grid.inner.sum() == np.sum(np.abs(g.cell_centers) < 0.5)
    assert op.coefficients["s"] == pytest.approx(2.0 ** (2 * 0.6 - 2 * 0.3))
    assert op.coefficients["c"] == pytest.approx(2.0 ** (2 * 0.6 - 2 * 0.4))
    assert op.coefficients["r"] == 1.0
    A = op.matrix
    assert np.array_equal(A, A.T)
    assert np.max(np.abs(A.sum(axis=1))) <= 1e-12 * np.max(np.abs(A))
    with pytest.raises(ValidationError):
        assemble_rescaled(g, cfg, 0.0)
    with pytest.raises(ValidationError):
        assemble_rescaled(g, cfg.replace(n_cells=100), 2.0)


def test_far_field_energy_equals_wider_window():
    narrow_cfg, wide_cfg = small_config(n=80, L=4.0), small_config(n=160, L=8.0)
    a, b = (assemble(build_grid(c), c) for c in (narrow_cfg, wide_cfg))
    fa = np.where(np.abs(a.grid.cell_centers) < 3, np.cos(a.grid.cell_centers), 0.0)
    fb = np.where(np.abs(b.grid.cell_centers) < 3, np.cos(b.grid.cell_centers), 0.0)
    assert quadratic_energy(a, fa, far_field=True) == pytest.approx(quadratic_energy(b, fb, far_field=True), rel=1e-12)
    assert np.all(far_field_diagonal(a) > 0)


def test_generator_approximates_half_laplacian():
    # f = Poisson kernel P_1; alpha int (f(y) - f(x)) |x-y|^-2 dy = -(alpha / C_{1,1/2}) (-Delta)^(1/2) f
    # with (-Delta)^(1/2) P_1 = (1 - x^2) / (pi (1 + x^2)^2)
    cfg = default_config(truncation_radius=40.0, n_cells=4000)
    op = assemble(build_grid(cfg), cfg)
    x = op.grid.cell_centers
    f = 1 / (math.pi * (1 + x * x))
    half_lap = (1 - x * x) / (math.pi * (1 + x * x) ** 2)
    want = -half_lap / fractional_laplacian_constant(0.5)
    got = op.apply_generator(f, exterior_value=0.0)
    near = np.abs(x) < 2
    assert np.max(np.abs(got - want)[near]) <= 2e-4


def test_dump_matrix_roundtrip(tmp_path):
    cfg = small_config(n=16)
    op = assemble(build_grid(cfg), cfg)
    path, meta = dump_matrix(op, tmp_path / "A.bin")
    back = np.fromfile(path, dtype="<f8").reshape(op.n, op.n)
    assert np.array_equal(back, op.matrix)
    info = json.loads(meta.read_text())
    assert info["n"] == 16 and info["order"] == "row-major"
