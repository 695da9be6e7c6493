import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dbcd.errors import CurvatureError, DegenerateBlockError, ParameterError
from dbcd.generate import random_lasso, separable_svm
from oracles import zoom_argmin

from dbcd.problems import (
    LassoProblem,
    SparseMatrix,
    SvmDualProblem,
    block_gradient,
    clip_update,
    delta_g,
    duality_gap,
    lipschitz_constants,
    objective_value,
    soft_threshold_update,
)


def test_sparse_matrix_views():
    A = SparseMatrix.from_dense([[1.0, 0.0, 2.0], [0.0, 3.0, 0.0]])
    A.check()
    assert A.nnz == 3 and A.shape == (2, 3)
    idx, val = A.col(2)
    assert list(idx) == [0] and list(val) == [2.0]
    idx, val = A.row(0)
    assert list(idx) == [0, 2]
    assert list(A.triples()) == [(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]
    assert np.array_equal(A.col_norms_sq(), [1.0, 9.0, 4.0])
    assert np.array_equal(A.row_norms_sq(), [5.0, 9.0])


def test_sparse_matrix_drops_explicit_zeros():
    A = SparseMatrix.from_triples([0, 1, 1], [0, 0, 1], [0.0, 2.0, 1.0], (2, 2))
    assert A.nnz == 2
    A.check()


def test_lipschitz_examples():
    assert np.array_equal(LassoProblem(np.eye(3), np.zeros(3), 1.0).lipschitz_constants(), np.ones(3))
    assert LassoProblem(np.array([[1.0], [2.0]]), np.zeros(2), 1.0).lipschitz_constants()[0] == 5.0
    svm = SvmDualProblem(np.array([[3.0, 4.0], [1.0, 0.0]]), [1, -1], 1.0)
    assert svm.lipschitz_constants()[0] == pytest.approx(25 / 4)
    assert np.array_equal(lipschitz_constants(svm), svm.lipschitz_constants())


def test_gradient_examples():
    A = np.array([[1.0], [2.0]])
    p = LassoProblem(A, np.zeros(2), 1.0)
    g = p.residual([1.0])
    assert np.array_equal(g, [1.0, 2.0])
    assert block_gradient(p, 0, g) == 5.0
    q = LassoProblem(np.eye(2), [1.0, -2.0], 1.0)
    gq = q.residual([1.0, -2.0])
    assert [q.block_gradient(i, gq) for i in range(2)] == [0.0, 0.0]
    svm = separable_svm(20, seed=1)
    g0 = svm.residual(np.zeros(20))
    assert all(svm.block_gradient(i, g0) == -1 / 20 for i in range(20))


def test_lasso_gradient_finite_difference(rng):
    p = random_lasso(30, 12, 0.3, 0.1, seed=2)
    x = rng.standard_normal(12)
    smooth = lambda z: 0.5 * float(np.sum(p.residual(z) ** 2))
    g = p.residual(x)
    for i in range(12):
        e = np.zeros(12)
        e[i] = 1e-6
        fd = (smooth(x + e) - smooth(x - e)) / 2e-6
        assert p.block_gradient(i, g) == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_svm_gradient_finite_difference(rng):
    p = separable_svm(15, lam=0.3, seed=4, features=3)
    x = rng.uniform(0.1, 0.9, 15)
    g = p.residual(x)
    for i in range(15):
        e = np.zeros(15)
        e[i] = 1e-6
        fd = (p.objective_from_scratch(x + e) - p.objective_from_scratch(x - e)) / 2e-6
        assert p.block_gradient(i, g) == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_soft_threshold_examples():
    assert soft_threshold_update(3.0, 2.0, 0.0, 0.0) == -1.5
    assert soft_threshold_update(0.0, 2.0, 0.0, 5.0) == 0.0
    with pytest.raises(CurvatureError):
        soft_threshold_update(1.0, 0.0, 0.0, 1.0)


def test_soft_threshold_grid_oracle():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        b, d = rng.normal(0, 3, size=2)
        c = float(10 ** rng.uniform(-1, 1))
        lam = float(rng.exponential(1.0))
        t = soft_threshold_update(b, c, d, lam)
        dphi = lambda u: b + c * u + lam * np.where(d + u >= 0, 1.0, -1.0)
        R = abs(d) + (abs(b) + lam) / c + 1
        assert abs(t - zoom_argmin(dphi, -R, R)) <= 1e-8
        # optimality: 0 in b + c t + lam * subdiff |d + t|
        r = b + c * t
        scale = 1 + abs(b) + lam
        if d + t != 0:
            assert abs(r + lam * math.copysign(1, d + t)) <= 1e-10 * scale
        else:
            assert abs(r) <= lam + 1e-10 * scale


def test_clip_examples():
    # interior step unchanged: lam*m*(1-margin)/(beta*row_sq) = 0.25
    assert clip_update(0.5, 0.5, 2.0, 1.0, 1, 1.0) == 0.25
    # unconstrained -0.5 at x = 0 clips to 0
    assert clip_update(0.0, 2.0, 2.0, 1.0, 1, 1.0) == 0.0
    with pytest.raises(DegenerateBlockError):
        clip_update(0.5, 0.0, 0.0, 1.0, 1, 1.0)


def test_clip_grid_oracle():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        x = float(rng.uniform())
        margin = float(rng.normal(1, 2))
        row_sq = float(10 ** rng.uniform(-1, 1))
        lam = float(10 ** rng.uniform(-2, 0))
        m = int(rng.integers(1, 200))
        beta = float(rng.uniform(1, 5))
        h = clip_update(x, margin, row_sq, lam, m, beta)
        grad = (margin - 1) / m
        L = row_sq / (lam * m * m)
        grid = np.linspace(-x, 1 - x, 4001)
        best = grid[np.argmin(grad * grid + 0.5 * beta * L * grid**2)]
        assert abs(h - best) <= grid[1] - grid[0]
        u = x + h
        assert -1e-15 <= u <= 1 + 1e-15
        inner = grad + beta * L * h
        tol = 1e-10 * (1 + abs(grad))
        if 0 < u < 1:
            assert abs(inner) <= tol
        elif u == 0:
            assert inner >= -tol
        else:
            assert inner <= tol


def test_delta_g_examples(rng):
    p = random_lasso(20, 10, 0.3, 0.1, seed=5)
    assert np.array_equal(delta_g(p, []), np.zeros(20))
    d = delta_g(p, [(3, 0.5)])
    assert np.allclose(d, 0.5 * p.A.toarray()[:, 3], atol=0, rtol=0)


@pytest.mark.parametrize("make", [
    lambda: random_lasso(25, 16, 0.3, 0.1, seed=6),
    lambda: separable_svm(16, lam=0.2, seed=6, features=3),
])
def test_incremental_residual_matches_scratch(make, rng):
    p = make()
    x = np.zeros(p.n_blocks)
    g = p.residual(x)
    for _ in range(4):
        updates = []
        for i in rng.choice(p.n_blocks, 4, replace=False):
            h = p.block_update(int(i), x[i], g, 2.0)
            updates.append((int(i), h))
        for i, h in updates:
            x[i] += h
        g = g + delta_g(p, updates)
    assert np.max(np.abs(g - p.residual(x))) <= 1e-10


def test_objective_examples():
    y = np.array([1.0, -2.0, 3.0])
    p = LassoProblem(np.eye(3), y, 0.5)
    assert objective_value(p, np.zeros(3), p.residual(np.zeros(3))) == 7.0
    svm = separable_svm(30, seed=2)
    x0 = np.zeros(30)
    assert duality_gap(svm, x0, svm.residual(x0)) == 1.0
    assert svm.objective(np.full(30, 1.5), svm.residual(np.full(30, 1.5))) == math.inf


def test_lasso_gap_is_an_upper_bound(rng):
    p = random_lasso(30, 20, 0.3, 0.2, seed=7)
    for _ in range(10):
        x = rng.standard_normal(20)
        g = p.residual(x)
        assert p.gap(x, g) >= 0
        assert p.objective(x, g) == pytest.approx(p.objective_from_scratch(x), rel=1e-12)


def test_svm_gap_near_optimum_matches_scratch():
    p = separable_svm(12, lam=0.5, seed=8)
    x = np.zeros(12)
    g = p.residual(x)
    for sweep in range(3000):
        for i in range(12):
            h = p.block_update(i, x[i], g, 1.0)
            x[i] += h
            p.accumulate(g, i, h)
    g = p.residual(x)
    w = g
    scratch = p.primal_value(w) + p.objective_from_scratch(x)
    assert abs(scratch - p.gap(x, g)) <= 1e-10
    assert p.gap(x, g) <= 1e-8


def test_svm_degenerate_row_moves_to_upper_bound():
    p = SvmDualProblem(np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 2.0]]), [1, -1, 1], 1.0)
    g = p.residual(np.zeros(3))
    assert p.block_update(1, 0.3, g, 1.0) == pytest.approx(0.7)


def test_lasso_empty_column_goes_to_zero():
    p = LassoProblem(np.array([[1.0, 0.0], [1.0, 0.0]]), [1.0, 1.0], 0.1)
    assert list(p.degenerate_blocks()) == [1]
    assert p.block_update(1, 2.5, p.residual([0.0, 2.5]), 1.0) == -2.5


def test_problem_validation():
    with pytest.raises(ParameterError):
        LassoProblem(np.eye(2), [1.0], 1.0)
    with pytest.raises(ParameterError):
        LassoProblem(np.eye(2), [1.0, 2.0], 0.0)
    with pytest.raises(ParameterError):
        SvmDualProblem(np.eye(2), [1, 0], 1.0)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 1000))
def test_separability_groups_are_rows(m, n, seed):
    rng = np.random.default_rng(seed)
    A = np.where(rng.random((m, n)) < 0.5, 1.0, 0.0)
    p = LassoProblem(A, np.zeros(m), 1.0)
    s = p.separability()
    expect = {frozenset(np.flatnonzero(r).tolist()) for r in A if r.any()}
    assert set(s.groups) == expect
    assert s.omega == max((len(J) for J in expect), default=1)
