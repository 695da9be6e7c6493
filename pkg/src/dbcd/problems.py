"""LASSO and SVM-dual instances with residual-based block updates.

Both problems use scalar blocks (N_i = 1). Each keeps an auxiliary residual
vector ``g`` from which every block gradient is a sparse inner product:

* LASSO, blocks = columns of A:   g = A x - y                  (length m)
* SVM dual, blocks = rows of A:   g = (1/(lambda m)) A^T (x*y)  (length N)
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from .blocks import SeparabilityStructure
from .errors import CurvatureError, DegenerateBlockError, ParameterError


class SparseMatrix:
    """Sparse matrix held in both compressed-column and compressed-row form."""

    def __init__(self, matrix):
        csc = sp.csc_matrix(matrix, dtype=float)
        csc.sum_duplicates()
        csc.eliminate_zeros()
        csc.sort_indices()
        csr = csc.tocsr()
        csr.sort_indices()
        self.csc = csc
        self.csr = csr
        self._cols = [(csc.indices[a:b], csc.data[a:b])
                      for a, b in zip(csc.indptr[:-1], csc.indptr[1:])]
        self._rows = [(csr.indices[a:b], csr.data[a:b])
                      for a, b in zip(csr.indptr[:-1], csr.indptr[1:])]

    @classmethod
    def from_triples(cls, rows, cols, values, shape):
        return cls(sp.coo_matrix((values, (rows, cols)), shape=shape))

    @classmethod
    def from_dense(cls, a):
        return cls(sp.csc_matrix(np.asarray(a, dtype=float)))

    @property
    def shape(self):
        return self.csc.shape

    @property
    def m(self) -> int:
        return self.csc.shape[0]

    @property
    def N(self) -> int:
        return self.csc.shape[1]

    @property
    def nnz(self) -> int:
        return self.csc.nnz

    def col(self, i):
        """(row indices, values) of column ``i``."""
        return self._cols[i]

    def row(self, j):
        """(column indices, values) of row ``j``."""
        return self._rows[j]

    def col_norms_sq(self) -> np.ndarray:
        return np.array([float(np.dot(v, v)) for _, v in self._cols])

    def row_norms_sq(self) -> np.ndarray:
        return np.array([float(np.dot(v, v)) for _, v in self._rows])

    def triples(self):
        """Nonzeros in row-major order as (row, col, value)."""
        coo = self.csr.tocoo()
        return zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())

    def toarray(self) -> np.ndarray:
        return self.csc.toarray()

    def check(self) -> None:
        """Both storage forms describe the same matrix, sorted, with no stored zeros."""
        for fmt in (self.csc, self.csr):
            if not fmt.has_sorted_indices:
                raise AssertionError("indices not sorted")
            if np.any(fmt.data == 0):
                raise AssertionError("explicit zero stored")
        if (self.csc != self.csr.tocsc()).nnz:
            raise AssertionError("column and row forms disagree")


def soft_threshold_update(b: float, c: float, d: float, lam: float) -> float:
    """Minimiser t of  b t + (c/2) t^2 + lam |d + t|."""
    if not c > 0:
        raise CurvatureError(f"curvature must be positive, got {c}")
    zeta = d - b / c
    return math.copysign(max(abs(zeta) - lam / c, 0.0), zeta) - d


def clip_update(xi: float, grad_inner: float, row_norm_sq: float, lam: float, m: int,
                beta: float) -> float:
    """Box-constrained SVM-dual step keeping ``xi + h`` inside [0, 1].

    ``grad_inner`` is y_i A_i: g.
    """
    if not row_norm_sq > 0:
        raise DegenerateBlockError("empty row has no curvature")
    if not beta > 0:
        raise CurvatureError("beta must be positive")
    step = lam * m * (1.0 - grad_inner) / (beta * row_norm_sq)
    return min(max(step, -xi), 1.0 - xi)


class LassoProblem:
    """min_x 1/2 ||A x - y||^2 + lam ||x||_1."""

    kind = "lasso"

    def __init__(self, A, y, lam: float):
        self.A = A if isinstance(A, SparseMatrix) else SparseMatrix(A)
        self.y = np.asarray(y, dtype=float)
        self.lam = float(lam)
        if self.y.shape != (self.A.m,):
            raise ParameterError("y must have one entry per row of A")
        if not self.lam > 0:
            raise ParameterError("lambda must be positive")
        self._L = self.A.col_norms_sq()

    @property
    def n_blocks(self) -> int:
        return self.A.N

    @property
    def residual_dim(self) -> int:
        return self.A.m

    def lipschitz_constants(self) -> np.ndarray:
        return self._L.copy()

    def degenerate_blocks(self) -> np.ndarray:
        return np.flatnonzero(self._L == 0)

    def separability(self) -> SeparabilityStructure:
        """One group per row: the columns that row touches."""
        groups = [frozenset(self.A.row(j)[0].tolist()) for j in range(self.A.m)]
        return SeparabilityStructure(tuple(J for J in groups if J), self.n_blocks)

    def block_support(self, i: int) -> np.ndarray:
        return self.A.col(i)[0]

    def residual(self, x) -> np.ndarray:
        return self.A.csc @ np.asarray(x, dtype=float) - self.y

    def block_gradient(self, i: int, g) -> float:
        idx, val = self.A.col(i)
        return float(np.dot(val, g[idx]))

    def block_update(self, i: int, xi: float, g, beta: float) -> float:
        L = self._L[i]
        if L == 0:
            # f does not depend on x_i; the l1 term alone puts it at zero
            return -xi
        return soft_threshold_update(self.block_gradient(i, g), beta * L, xi, self.lam)

    def accumulate(self, dg, i: int, h: float) -> None:
        idx, val = self.A.col(i)
        dg[idx] += val * h

    def objective(self, x, g) -> float:
        return 0.5 * float(np.dot(g, g)) + self.lam * float(np.abs(x).sum())

    def objective_from_scratch(self, x) -> float:
        r = self.residual(x)
        return 0.5 * math.fsum(r * r) + self.lam * math.fsum(np.abs(x))

    def dual_value(self, g) -> float:
        """Dual objective at the feasible point obtained by rescaling the residual."""
        corr = np.abs(self.A.csc.T @ g).max(initial=0.0)
        theta = g * min(1.0, self.lam / corr) if corr > 0 else g
        return -0.5 * float(np.dot(theta, theta)) - float(np.dot(theta, self.y))

    def gap(self, x, g) -> float:
        """Certified gap F(x) - D(theta) >= F(x) - F*."""
        return self.objective(x, g) - self.dual_value(g)


class SvmDualProblem:
    """min_x 1/(2 lam m^2) x^T Q x - (1/m) sum x  subject to 0 <= x <= 1.

    Q_ij = y_i y_j <A_i:, A_j:> is never formed.
    """

    kind = "svm"

    def __init__(self, A, labels, lam: float):
        self.A = A if isinstance(A, SparseMatrix) else SparseMatrix(A)
        self.y = np.asarray(labels, dtype=float)
        self.lam = float(lam)
        if self.y.shape != (self.A.m,):
            raise ParameterError("need one label per row of A")
        if not np.all(np.abs(self.y) == 1):
            raise ParameterError("labels must be +1 or -1")
        if not self.lam > 0:
            raise ParameterError("lambda must be positive")
        self.m = self.A.m
        self._row_sq = self.A.row_norms_sq()
        self._L = self._row_sq / (self.lam * self.m**2)
        self._scale = 1.0 / (self.lam * self.m)

    @property
    def n_blocks(self) -> int:
        return self.m

    @property
    def residual_dim(self) -> int:
        return self.A.N

    def lipschitz_constants(self) -> np.ndarray:
        return self._L.copy()

    def degenerate_blocks(self) -> np.ndarray:
        return np.flatnonzero(self._L == 0)

    def separability(self) -> SeparabilityStructure:
        """One group per feature: the examples having that feature."""
        groups = [frozenset(self.A.col(f)[0].tolist()) for f in range(self.A.N)]
        return SeparabilityStructure(tuple(J for J in groups if J), self.n_blocks)

    def block_support(self, i: int) -> np.ndarray:
        return self.A.row(i)[0]

    def residual(self, x) -> np.ndarray:
        return self._scale * (self.A.csr.T @ (np.asarray(x, dtype=float) * self.y))

    def margin(self, i: int, g) -> float:
        """y_i <A_i:, g>."""
        idx, val = self.A.row(i)
        return self.y[i] * float(np.dot(val, g[idx]))

    def block_gradient(self, i: int, g) -> float:
        return (self.margin(i, g) - 1.0) / self.m

    def block_update(self, i: int, xi: float, g, beta: float) -> float:
        if self._row_sq[i] == 0:
            # linear term only: the box minimiser is the upper end
            return 1.0 - xi
        return clip_update(xi, self.margin(i, g), self._row_sq[i], self.lam, self.m, beta)

    def accumulate(self, dg, i: int, h: float) -> None:
        idx, val = self.A.row(i)
        dg[idx] += val * (self._scale * h * self.y[i])

    def objective(self, x, g) -> float:
        x = np.asarray(x)
        if np.any(x < 0) or np.any(x > 1):
            return math.inf
        return 0.5 * self.lam * float(np.dot(g, g)) - float(x.sum()) / self.m

    def objective_from_scratch(self, x) -> float:
        """Dual objective through the explicit Gram matrix (small instances only)."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > 1):
            return math.inf
        Ay = self.A.toarray() * self.y[:, None]
        Q = Ay @ Ay.T
        return math.fsum([float(x @ Q @ x) / (2 * self.lam * self.m**2), -math.fsum(x) / self.m])

    def hinge_losses(self, w) -> np.ndarray:
        return np.maximum(0.0, 1.0 - self.y * (self.A.csr @ w))

    def primal_value(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return math.fsum(self.hinge_losses(w)) / self.m + 0.5 * self.lam * math.fsum(w * w)

    def gap(self, x, g) -> float:
        """Duality gap P(g) + F(x) evaluated through the residual."""
        return (float(self.hinge_losses(g).sum()) - float(np.sum(x))) / self.m \
            + self.lam * float(np.dot(g, g))

    def duality_gap(self, x, g) -> float:
        return self.gap(x, g)


def lipschitz_constants(problem) -> np.ndarray:
    return problem.lipschitz_constants()


def block_gradient(problem, i: int, g) -> float:
    return problem.block_gradient(i, g)


def delta_g(problem, updates) -> np.ndarray:
    """Residual contribution of a list of (block, step) pairs, summed in list order."""
    dg = np.zeros(problem.residual_dim)
    for i, h in updates:
        problem.accumulate(dg, i, h)
    return dg


def objective_value(problem, x, g) -> float:
    return problem.objective(x, g)


def duality_gap(problem: SvmDualProblem, x, g) -> float:
    return problem.duality_gap(x, g)
