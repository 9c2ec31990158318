import numpy as np
import pytest

from inpaint_opt import (
    ConvergenceError,
    Image,
    KnownData,
    Mask,
    NegatedLaplacian,
    NoKnownDataError,
    ReducedInpaintingOperator,
    SolverParams,
    apply_laplacian,
    inpaint,
    residual_norm,
)
from inpaint_opt.solver import laplacian2d
from oracles import dense_laplacian, dense_reduced_solve


def make_known(mask_bool, g_grid):
    mask = Mask(mask_bool.astype(float), "binary")
    return KnownData(mask=mask, values=g_grid[mask_bool][:, np.newaxis])


def test_laplacian_of_constant_is_zero():
    out = apply_laplacian(Image(np.full((6, 7, 1), 0.42)))
    assert np.abs(out.data).max() < 1e-14


def test_laplacian_of_ramp_vanishes_in_interior():
    i = np.arange(8, dtype=float)
    ramp = np.tile(i, (6, 1))  # f(i, j) = j along x
    out = laplacian2d(ramp)
    assert np.abs(out[1:-1, 1:-1]).max() < 1e-14


def test_laplacian_matches_dense_stencil(rng):
    field = rng.random((5, 5))
    lap = dense_laplacian(5, 5)
    expected = (lap @ field.reshape(-1)).reshape(5, 5)
    assert np.allclose(laplacian2d(field), expected, atol=1e-13)


def test_laplacian_rejects_colour():
    with pytest.raises(ValueError):
        apply_laplacian(Image(np.zeros((4, 4, 3))))


def test_operator_linearity_on_random_triples(rng):
    neg = NegatedLaplacian(6, 5)
    known = rng.random((6, 5)) < 0.3
    reduced = ReducedInpaintingOperator(known)
    for _ in range(25):
        x = rng.standard_normal((6, 5))
        y = rng.standard_normal((6, 5))
        a, b = rng.standard_normal(2)
        lhs = neg.apply(a * x + b * y)
        rhs = a * neg.apply(x) + b * neg.apply(y)
        assert np.abs(lhs - rhs).max() < 1e-12
        x[known] = 0.0
        y[known] = 0.0
        lhs = reduced.apply(a * x + b * y)
        rhs = a * reduced.apply(x) + b * reduced.apply(y)
        assert np.abs(lhs - rhs).max() < 1e-12


def test_full_mask_returns_values_exactly(rng):
    g = rng.random((5, 5))
    kd = make_known(np.ones((5, 5), bool), g)
    u = inpaint(kd)
    assert np.array_equal(u.data[:, :, 0], g)


def test_two_known_pixels_same_value_gives_constant():
    known = np.zeros((7, 9), bool)
    known[1, 2] = known[5, 7] = True
    g = np.where(known, 0.7, 0.0)
    u = inpaint(make_known(known, g))
    assert np.abs(u.data - 0.7).max() < 1e-5


def test_four_by_four_matches_dense_oracle():
    known = np.zeros((4, 4), bool)
    known[0, 0] = known[3, 3] = True
    g = np.zeros((4, 4))
    g[3, 3] = 1.0
    u = inpaint(make_known(known, g), SolverParams(rel_tolerance=1e-12))
    expected = dense_reduced_solve(known, g)
    assert np.abs(u.data[:, :, 0] - expected).max() < 1e-8


def test_empty_mask_raises():
    mask = Mask(np.zeros((4, 4)), "binary")
    kd = KnownData(mask=mask, values=np.zeros((0, 1)))
    with pytest.raises(NoKnownDataError):
        inpaint(kd)


def test_convergence_error_carries_residual():
    known = np.zeros((16, 16), bool)
    known[0, 0] = True
    g = np.where(known, 1.0, 0.0)
    with pytest.raises(ConvergenceError) as err:
        inpaint(make_known(known, g), SolverParams(rel_tolerance=1e-12, max_iterations=2))
    assert err.value.iterations == 2
    assert 0.0 < err.value.residual


def test_residual_of_converged_solve_is_tiny(rng):
    known = rng.random((10, 10)) < 0.2
    known[0, 0] = True
    f = rng.random((10, 10))
    g = np.where(known, f, 0.0)
    kd = make_known(known, g)
    u = inpaint(kd)
    assert residual_norm(u, kd) < 1e-9


def test_residual_zero_for_exact_cases():
    g = np.linspace(0, 1, 16).reshape(4, 4)
    kd = make_known(np.ones((4, 4), bool), g)
    assert residual_norm(Image(g), kd) == 0.0
    known = np.zeros((4, 4), bool)
    known[1, 1] = True
    kd0 = make_known(known, np.zeros((4, 4)))
    assert residual_norm(Image(np.zeros((4, 4))), kd0) == 0.0


def test_maximum_principle(rng):
    for _ in range(10):
        known = rng.random((8, 8)) < 0.25
        known[4, 4] = True
        g_grid = np.where(known, rng.random((8, 8)), 0.0)
        u = inpaint(make_known(known, g_grid)).data[:, :, 0]
        g_vals = g_grid[known]
        slack = 10 * 1e-6
        assert u.min() >= g_vals.min() - slack
        assert u.max() <= g_vals.max() + slack


def test_inpainting_is_linear_in_known_values(rng):
    known = rng.random((8, 8)) < 0.3
    known[2, 2] = True
    g1 = np.where(known, rng.random((8, 8)), 0.0)
    g2 = np.where(known, rng.random((8, 8)), 0.0)
    params = SolverParams(rel_tolerance=1e-11)
    u1 = inpaint(make_known(known, g1), params).data
    u2 = inpaint(make_known(known, g2), params).data
    u12 = inpaint(make_known(known, g1 + g2), params).data
    assert np.abs(u12 - (u1 + u2)).max() < 1e-7


def test_grey_shift_invariance(rng):
    known = rng.random((8, 8)) < 0.3
    known[5, 3] = True
    g = np.where(known, 0.5 * rng.random((8, 8)), 0.0)
    params = SolverParams(rel_tolerance=1e-11)
    base = inpaint(make_known(known, g), params).data
    shifted = inpaint(make_known(known, np.where(known, g + 0.25, 0.0)), params).data
    assert np.abs(shifted - (base + 0.25)).max() < 1e-7


def test_solver_params_validation():
    with pytest.raises(ValueError):
        SolverParams(rel_tolerance=0.0)
    with pytest.raises(ValueError):
        SolverParams(rel_tolerance=1.5)
    with pytest.raises(ValueError):
        SolverParams(max_iterations=0)
    assert SolverParams().budget(100) == 1000


def test_colour_channels_solved_independently(rng):
    known = rng.random((6, 6)) < 0.4
    known[0, 0] = True
    f = rng.random((6, 6, 3))
    mask = Mask(known.astype(float), "binary")
    kd = KnownData.from_image(Image(f), mask)
    u = inpaint(kd)
    for ch in range(3):
        single = make_known(known, np.where(known, f[:, :, ch], 0.0))
        expected = inpaint(single).data[:, :, 0]
        assert np.abs(u.data[:, :, ch] - expected).max() < 1e-12
