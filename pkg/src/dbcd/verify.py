"""Exhaustive and Monte-Carlo checks of the sampling identities and the ESO.

These routines enumerate sampling outcomes directly and never call the
closed forms in :mod:`dbcd.eso` except to obtain the quantity under test
(beta), so they serve as independent oracles.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .blocks import (
    BlockLayout,
    Partition,
    SeparabilityStructure,
    compute_xi,
    make_balanced_partition,
    node_streams,
    project_onto_sampling,
    sample_distributed,
    weighted_norm_squared,
)
from .errors import BudgetError, ParameterError
from .eso import compute_beta

EXHAUSTIVE = "exhaustive"


def enumerate_samplings(partition: Partition, tau: int, budget: int = 10**6):
    """Yield every (C, tau)-distributed sampling as a tuple of blocks; all equally likely."""
    count = math.comb(partition.s, tau) ** partition.C
    if count > budget:
        raise BudgetError(f"{count} sampling outcomes exceed the budget of {budget}")
    per_node = [list(itertools.combinations(g, tau)) for g in partition.groups]
    for combo in itertools.product(*per_node):
        yield tuple(i for z in combo for i in z)


def enumerate_theta_squared(xi: int, tau: int, s: int, C: int) -> float:
    """E[|Z cap J|^2] by listing every outcome, with J made of xi blocks per node."""
    partition = make_balanced_partition(s * C, C)
    J = {i for g in partition.groups for i in g[:xi]}
    total = 0
    count = 0
    for Z in enumerate_samplings(partition, tau):
        theta = sum(1 for i in Z if i in J)
        total += theta * theta
        count += 1
    return total / count


def theta_sum_pmf(pmf_per_node: np.ndarray, C: int) -> np.ndarray:
    """Law of the sum of C independent copies of a per-node pmf."""
    out = np.array([1.0])
    for _ in range(C):
        out = np.convolve(out, pmf_per_node)
    return out


def identity_sides(partition: Partition, J, tau: int, kappa: Callable[[int, int], float]):
    """Both sides of the sampling identity

        E[sum_{i in Z cap J} kappa(theta, i)] = E[theta/(C xi) sum_{i in J} kappa(theta, i)]

    computed exactly by enumeration. ``J`` must meet every group in the same
    number ``xi`` of blocks.
    """
    J = sorted(set(J))
    Jset = set(J)
    counts = {sum(1 for i in g if i in Jset) for g in partition.groups}
    if len(counts) != 1 or 0 in counts:
        raise ParameterError("J must intersect every group in the same positive count")
    xi = counts.pop()
    C = partition.C
    lhs_terms, rhs_terms = [], []
    for Z in enumerate_samplings(partition, tau):
        hit = [i for i in Z if i in Jset]
        theta = len(hit)
        lhs_terms.append(math.fsum(kappa(theta, i) for i in hit))
        rhs_terms.append(theta / (C * xi) * math.fsum(kappa(theta, i) for i in J))
    return math.fsum(lhs_terms) / len(lhs_terms), math.fsum(rhs_terms) / len(rhs_terms)


def identity_configs(n: int, C: int, tau: int | None = None):
    """Yield (partition, J, tau) covering every xi and tau for a contiguous split."""
    partition = make_balanced_partition(n, C)
    s = partition.s
    taus = range(1, s + 1) if tau is None else [tau]
    for xi in range(1, s + 1):
        # J takes the last xi blocks of each group so it is not a prefix of [n]
        J = [i for g in partition.groups for i in g[s - xi:]]
        for t in taus:
            yield partition, J, t


IDENTITY_KAPPAS = {
    "one": lambda theta, i: 1.0,
    "theta": lambda theta, i: float(theta),
    "i_theta_sq": lambda theta, i: float((i + 1) * theta * theta),
}


class QuadraticTestObjective:
    """f(x) = sum_J 1/2 ||B_J x_J - b_J||^2, a convex partially separable test function.

    ``B[J]`` has one column per coordinate in the blocks of J (block order as
    in ``sorted(J)``).
    """

    def __init__(self, layout: BlockLayout, structure: SeparabilityStructure, B, b):
        self.layout = layout
        self.structure = structure
        self.terms = []
        for J, BJ, bJ in zip(structure.groups, B, b):
            blocks = sorted(J)
            coords = layout.coordinates(blocks)
            BJ = np.asarray(BJ, dtype=float)
            if BJ.shape[1] != coords.size:
                raise ParameterError("B_J column count must match the coordinates of J")
            self.terms.append((coords, BJ, np.asarray(bJ, dtype=float)))

    @classmethod
    def random(cls, rng, layout: BlockLayout, structure: SeparabilityStructure, rows: int = 3):
        B, b = [], []
        for J in structure.groups:
            ncols = layout.coordinates(sorted(J)).size
            B.append(rng.standard_normal((rows, ncols)))
            b.append(rng.standard_normal(rows))
        return cls(layout, structure, B, b)

    def value(self, x) -> float:
        return math.fsum(0.5 * float(np.dot(r, r)) for r in self._residuals(x))

    def _residuals(self, x):
        for coords, BJ, bJ in self.terms:
            yield BJ @ x[coords] - bJ

    def gradient(self, x) -> np.ndarray:
        grad = np.zeros(self.layout.N)
        for (coords, BJ, _), r in zip(self.terms, self._residuals(x)):
            grad[coords] += BJ.T @ r
        return grad

    def lipschitz(self) -> np.ndarray:
        """Exact block Lipschitz constants: top eigenvalue of each diagonal Hessian block."""
        H = np.zeros((self.layout.N, self.layout.N))
        for coords, BJ, _ in self.terms:
            H[np.ix_(coords, coords)] += BJ.T @ BJ
        L = np.empty(self.layout.n)
        for i in range(self.layout.n):
            sl = self.layout.block_slice(i)
            L[i] = np.linalg.eigvalsh(H[sl, sl])[-1]
        return L


@dataclass(frozen=True)
class EsoReport:
    lhs: float
    rhs: float
    holds: bool
    stderr: float = 0.0
    beta: float = float("nan")
    outcomes: int = 0


def verify_eso(f, partition: Partition, tau: int, x, h, trials=EXHAUSTIVE, rng=None,
               budget: int = 10**6) -> EsoReport:
    """Check E[f(x + h_[Z])] <= f(x) + (C tau / n)(<grad f(x), h> + beta/2 ||h||_w^2).

    ``f`` needs ``value``, ``gradient``, ``lipschitz`` and ``layout``/``structure``
    attributes (see :class:`QuadraticTestObjective`).
    """
    layout = f.layout
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    C, s = partition.C, partition.s
    xi = compute_xi(f.structure, partition)
    beta = compute_beta(xi, tau, s, C)
    w = f.lipschitz()
    fx = f.value(x)
    rhs = fx + C * tau / partition.n * (
        float(np.dot(f.gradient(x), h)) + beta / 2 * weighted_norm_squared(h, w, layout)
    )
    if trials == EXHAUSTIVE:
        vals = [f.value(x + project_onto_sampling(h, Z, layout))
                for Z in enumerate_samplings(partition, tau, budget)]
        lhs = math.fsum(vals) / len(vals)
        tol = 1e-9 * max(1.0, abs(rhs))
        return EsoReport(lhs, rhs, lhs <= rhs + tol, 0.0, beta, len(vals))
    if rng is None:
        raise ParameterError("Monte-Carlo mode needs a seed or generator")
    seed = rng if isinstance(rng, int) else int(rng.integers(2**63))
    streams = node_streams(seed, C)
    vals = np.array([
        f.value(x + project_onto_sampling(h, sample_distributed(partition, tau, streams).blocks, layout))
        for _ in range(int(trials))
    ])
    lhs = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else float("inf")
    return EsoReport(lhs, rhs, lhs <= rhs + max(1e-9, 3 * stderr), stderr, beta, len(vals))


def random_structure(rng, n: int, n_groups: int, max_size: int) -> SeparabilityStructure:
    """Random collection of groups, each of size 1..max_size, covering every block."""
    groups = []
    for _ in range(n_groups):
        size = int(rng.integers(1, max_size + 1))
        groups.append(frozenset(int(i) for i in rng.choice(n, size=size, replace=False)))
    covered = set().union(*groups) if groups else set()
    groups.extend(frozenset([i]) for i in range(n) if i not in covered)
    return SeparabilityStructure(tuple(groups), n)
