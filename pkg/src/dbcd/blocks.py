"""Block layout of the variable space and how blocks are split and sampled across nodes.

Block indices are 0-based throughout. A vector ``x`` in R^N is a flat numpy
array; block ``i`` occupies ``x[layout.offsets[i]:layout.offsets[i + 1]]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError, PartitionError


@dataclass(frozen=True)
class BlockLayout:
    """Decomposition of R^N into ``n`` consecutive blocks of sizes ``sizes``."""

    sizes: tuple[int, ...]
    offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes:
            raise ParameterError("a layout needs at least one block")
        if any(s <= 0 for s in sizes):
            raise ParameterError("block sizes must be positive")
        object.__setattr__(self, "sizes", sizes)
        offsets = np.zeros(len(sizes) + 1, dtype=np.int64)
        np.cumsum(sizes, out=offsets[1:])
        offsets.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)

    @classmethod
    def uniform(cls, n: int, size: int = 1) -> "BlockLayout":
        return cls((size,) * n)

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def N(self) -> int:
        return int(self.offsets[-1])

    def block_slice(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def block_of_coordinate(self, j: int) -> int:
        if not 0 <= j < self.N:
            raise IndexError(j)
        return int(np.searchsorted(self.offsets, j, side="right") - 1)

    def coordinates(self, blocks) -> np.ndarray:
        """Coordinate indices covered by ``blocks`` (in the given block order)."""
        parts = [np.arange(self.offsets[i], self.offsets[i + 1]) for i in blocks]
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(parts)


@dataclass(frozen=True)
class Partition:
    """Balanced split of the ``n`` blocks into ``C`` disjoint groups of size ``s``."""

    groups: tuple[tuple[int, ...], ...]
    owner: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        if not groups:
            raise PartitionError("a partition needs at least one group")
        sizes = {len(g) for g in groups}
        if len(sizes) != 1 or 0 in sizes:
            raise PartitionError("all groups must be nonempty and of equal size")
        n = sum(len(g) for g in groups)
        owner = np.full(n, -1, dtype=np.int64)
        for c, g in enumerate(groups):
            for i in g:
                if not 0 <= i < n:
                    raise PartitionError(f"block {i} outside 0..{n - 1}")
                if owner[i] != -1:
                    raise PartitionError(f"block {i} assigned to two groups")
                owner[i] = c
        owner.setflags(write=False)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "owner", owner)

    @property
    def C(self) -> int:
        return len(self.groups)

    @property
    def s(self) -> int:
        return len(self.groups[0])

    @property
    def n(self) -> int:
        return self.C * self.s


def make_balanced_partition(layout_or_n, C: int, scheme: str = "contiguous") -> Partition:
    """Assign blocks to ``C`` nodes.

    ``contiguous`` gives node ``c`` the blocks ``c*s .. (c+1)*s - 1``;
    ``strided`` gives block ``i`` to node ``i mod C``.
    """
    n = layout_or_n.n if isinstance(layout_or_n, BlockLayout) else int(layout_or_n)
    if C < 1:
        raise PartitionError(f"node count must be positive, got {C}")
    if n % C:
        raise PartitionError(f"{C} nodes do not divide {n} blocks")
    s = n // C
    if scheme == "contiguous":
        groups = [range(c * s, (c + 1) * s) for c in range(C)]
    elif scheme == "strided":
        groups = [range(c, n, C) for c in range(C)]
    else:
        raise ParameterError(f"unknown partition scheme {scheme!r}")
    return Partition(tuple(tuple(g) for g in groups))


@dataclass(frozen=True)
class DistributedSampling:
    per_node: tuple[tuple[int, ...], ...]

    @property
    def tau(self) -> int:
        return len(self.per_node[0])

    @property
    def blocks(self) -> tuple[int, ...]:
        return tuple(i for z in self.per_node for i in z)

    def __len__(self):
        return sum(len(z) for z in self.per_node)


def node_streams(seed: int, C: int) -> list[np.random.Generator]:
    """One independent generator per node, keyed by (master seed, node id)."""
    return [np.random.default_rng([int(seed), c]) for c in range(C)]


def sample_node(group: Sequence[int], tau: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Uniform ``tau``-subset of ``group`` by a partial Fisher-Yates shuffle."""
    pool = list(group)
    s = len(pool)
    if not 1 <= tau <= s:
        raise ParameterError(f"tau must lie in [1, {s}], got {tau}")
    for j in range(tau):
        k = j + int(rng.integers(s - j))
        pool[j], pool[k] = pool[k], pool[j]
    return tuple(sorted(pool[:tau]))


def sample_distributed(partition: Partition, tau: int, rngs) -> DistributedSampling:
    """Draw a (C, tau)-distributed sampling; ``rngs`` holds one generator per node."""
    if not 1 <= tau <= partition.s:
        raise ParameterError(f"tau must lie in [1, {partition.s}], got {tau}")
    if len(rngs) != partition.C:
        raise ParameterError("need exactly one random stream per node")
    return DistributedSampling(
        tuple(sample_node(g, tau, r) for g, r in zip(partition.groups, rngs))
    )


def project_onto_sampling(x, S, layout: BlockLayout) -> np.ndarray:
    """``x`` restricted to the blocks in ``S``, zero elsewhere."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in S:
        sl = layout.block_slice(i)
        out[sl] = x[sl]
    return out


def weighted_norm_squared(x, w, layout: BlockLayout) -> float:
    """sum_i w_i ||x^(i)||_2^2."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    block_sq = np.add.reduceat(x * x, layout.offsets[:-1]) if x.size else np.zeros(0)
    return float(np.dot(w, block_sq))


def check_weights(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or np.any(~(w > 0)):
        raise ParameterError("weights must be a vector of strictly positive reals")
    return w


@dataclass(frozen=True)
class SeparabilityStructure:
    """The collection of block groups J that the terms f_J of f depend on."""

    groups: tuple[frozenset, ...]
    n: int

    def __post_init__(self):
        groups = tuple(frozenset(int(i) for i in J) for J in self.groups)
        if any(not J for J in groups):
            raise ParameterError("every group J must be nonempty")
        for J in groups:
            if min(J) < 0 or max(J) >= self.n:
                raise ParameterError("group references a block outside 0..n-1")
        object.__setattr__(self, "groups", groups)

    @property
    def omega(self) -> int:
        return max((len(J) for J in self.groups), default=1)

    @classmethod
    def fully_separable(cls, n: int) -> "SeparabilityStructure":
        return cls(tuple(frozenset([i]) for i in range(n)), n)


def compute_xi(structure: SeparabilityStructure, partition: Partition) -> int:
    """Largest number of blocks of any group J owned by a single node."""
    if structure.n != partition.n:
        raise ParameterError("structure and partition refer to different block counts")
    owner = partition.owner
    xi = 0
    for J in structure.groups:
        counts = np.bincount(owner[list(J)], minlength=partition.C)
        xi = max(xi, int(counts.max()))
    return max(xi, 1)
