"""Synthetic instances: block-angular LASSO matrices and separable SVM data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .problems import LassoProblem, SparseMatrix, SvmDualProblem

# per-node dimensions of a large reference block-angular instance
LARGE_LOCAL_ROWS = 1_952_148
LARGE_GLOBAL_ROWS = 500_224
LARGE_LOCAL_COLS = 976_562


@dataclass(frozen=True)
class BlockAngularSpec:
    """Shape of a block-angular matrix: C diagonal local blocks over a shared band.

    Node ``c`` owns columns ``c*local_cols .. (c+1)*local_cols - 1``, the local rows
    ``c*local_rows ..`` and contributes ``A_glob^(c)`` to the last ``global_rows`` rows.
    """

    C: int = 2
    local_rows: int = 20
    local_cols: int = 10
    global_rows: int = 5
    local_nnz_per_row: int = 3
    global_nnz_per_row: int = 4
    value_scale: float = 1.0
    planted_nonzeros: int = 4
    noise: float = 0.0
    lam: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if min(self.C, self.local_rows, self.local_cols) < 1 or self.global_rows < 0:
            raise ParameterError("block-angular dimensions must be positive")
        if not 1 <= self.local_nnz_per_row <= self.local_cols:
            raise ParameterError("local nonzeros per row must lie in [1, local_cols]")
        if not 0 <= self.global_nnz_per_row <= self.local_cols:
            raise ParameterError("global nonzeros per row must lie in [0, local_cols]")
        if not 0 <= self.planted_nonzeros <= self.C * self.local_cols:
            raise ParameterError("planted support larger than the column count")
        if self.noise < 0 or self.lam <= 0:
            raise ParameterError("noise must be >= 0 and lambda > 0")

    @property
    def shape(self):
        return self.C * self.local_rows + self.global_rows, self.C * self.local_cols

    @classmethod
    def large_run_scaled(cls, scale: float = 1e-4, **kw):
        """Reference dimensions shrunk by ``scale`` with the row ratio kept."""
        return cls(
            local_rows=max(1, round(LARGE_LOCAL_ROWS * scale)),
            global_rows=max(1, round(LARGE_GLOBAL_ROWS * scale)),
            local_cols=max(1, round(LARGE_LOCAL_COLS * scale)),
            **kw,
        )


def block_angular_matrix(spec: BlockAngularSpec, rng) -> SparseMatrix:
    rows, cols = [], []
    lc, lr = spec.local_cols, spec.local_rows
    for c in range(spec.C):
        for r in range(lr):
            for j in rng.choice(lc, size=spec.local_nnz_per_row, replace=False):
                rows.append(c * lr + r)
                cols.append(c * lc + int(j))
        for r in range(spec.global_rows):
            for j in rng.choice(lc, size=spec.global_nnz_per_row, replace=False):
                rows.append(spec.C * lr + r)
                cols.append(c * lc + int(j))
    # no empty columns: give each one a nonzero in a local row of its owner
    present = np.zeros(spec.C * lc, dtype=bool)
    present[cols] = True
    for col in np.flatnonzero(~present):
        c = col // lc
        rows.append(c * lr + int(rng.integers(lr)))
        cols.append(int(col))
    vals = rng.uniform(-spec.value_scale, spec.value_scale, size=len(rows))
    vals[vals == 0] = spec.value_scale
    return SparseMatrix.from_triples(rows, cols, vals, spec.shape)


def generate_block_angular(spec: BlockAngularSpec):
    """Return ``(problem, x_star)`` with ``y = A x_star + noise``."""
    rng = np.random.default_rng(spec.seed)
    A = block_angular_matrix(spec, rng)
    x_star = np.zeros(A.N)
    support = rng.choice(A.N, size=spec.planted_nonzeros, replace=False)
    x_star[support] = rng.uniform(-1, 1, size=support.size)
    x_star[support] += np.sign(x_star[support])  # keep planted entries away from zero
    y = A.csc @ x_star
    if spec.noise:
        y = y + spec.noise * rng.standard_normal(A.m)
    return LassoProblem(A, y, spec.lam), x_star


def separable_svm(m: int = 100, lam: float = 0.1, margin: float = 0.1, seed: int = 0,
                  features: int = 2) -> SvmDualProblem:
    """Points in [-1, 1]^features labelled by a random hyperplane through the origin,
    keeping only those at distance >= ``margin`` from it."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(features)
    w /= np.linalg.norm(w)
    pts = []
    while len(pts) < m:
        p = rng.uniform(-1, 1, size=features)
        if abs(p @ w) >= margin:
            pts.append(p)
    X = np.array(pts)
    labels = np.sign(X @ w)
    return SvmDualProblem(SparseMatrix.from_dense(X), labels, lam)


def random_lasso(m: int, n: int, density: float = 0.1, lam: float = 0.1, seed: int = 0,
                 noise: float = 0.1) -> LassoProblem:
    """Uniform random sparse design with a planted sparse signal; no empty columns."""
    rng = np.random.default_rng(seed)
    mask = rng.random((m, n)) < density
    mask[rng.integers(m, size=n), np.arange(n)] = True
    A = np.where(mask, rng.uniform(-1, 1, size=(m, n)), 0.0)
    x_star = np.where(rng.random(n) < 0.1, rng.standard_normal(n), 0.0)
    y = A @ x_star + noise * rng.standard_normal(m)
    return LassoProblem(SparseMatrix.from_dense(A), y, lam)
