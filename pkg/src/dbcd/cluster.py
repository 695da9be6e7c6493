"""In-process simulation of the residual exchange between C nodes.

Three strategies are modelled:

``ra``   synchronous reduce-all; every copy of g receives the sum of all
         node contributions at the end of the iteration.
``asl``  asynchronous ring. Node c sends the accumulated message
         dG_k^c = dG_{k-1}^{pred(c)} - dg_{k-C}^c + dg_k^c to its successor
         and updates g^c <- g^c + dg_k^c + dG_k^{pred(c)} - dg_{k-C+1}^c.
``ast``  torus: groups of r nodes reduce synchronously into their root and
         the C/r roots run the ring recurrence on the group aggregates.

A message sent at the end of iteration k is consumed at the end of the same
iteration by its receiver, i.e. it is visible in g from iteration k+1 on.
Ring messages only carry residual entries that more than one ring member can
touch; everything else is private to its owner and never leaves it.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation, ParameterError, TopologyError
from .eso import CostModel

STRATEGIES = ("ra", "asl", "ast")
OVERLAPS = ("ps", "fp")
FLOAT_BYTES = 8


@dataclass(frozen=True)
class Topology:
    """Communication layout. ``groups`` are the synchronous units of the ring."""

    kind: str
    C: int
    width: int = 1

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise TopologyError(f"unknown strategy {self.kind!r}")
        if self.C < 1:
            raise TopologyError("need at least one node")
        if self.kind == "asl" and self.width != 1:
            object.__setattr__(self, "width", 1)
        if self.kind == "ra":
            object.__setattr__(self, "width", self.C)
        if self.width < 1 or self.C % self.width:
            raise TopologyError(f"torus width {self.width} does not divide C={self.C}")

    @property
    def n_groups(self) -> int:
        return self.C // self.width

    @property
    def groups(self) -> tuple[tuple[int, ...], ...]:
        r = self.width
        return tuple(tuple(range(q * r, (q + 1) * r)) for q in range(self.n_groups))

    def group_of(self, c: int) -> int:
        return c // self.width

    def root(self, q: int) -> int:
        return q * self.width

    def pred(self, q: int) -> int:
        return (q - 1) % self.n_groups

    def succ(self, q: int) -> int:
        return (q + 1) % self.n_groups


def comm_time(kind: str, C: int, width: int, cost: CostModel) -> float:
    if kind not in STRATEGIES:
        raise TopologyError(f"unknown strategy {kind!r}")
    if C == 1:
        return 0.0  # a lone node sends nothing
    if kind == "ra":
        return cost.t_ra(C)
    if kind == "asl":
        return cost.tp2p
    if kind == "ast":
        return cost.tp2p + cost.t_ra(C) / width
    raise TopologyError(f"unknown strategy {kind!r}")


def accounting(kind: str, m: int, C: int, width: int = 1, cost: CostModel | None = None) -> dict:
    """Cost row of a strategy: per-node memory for g in reals, plus communication time and extra adds."""
    cost = cost or CostModel()
    if kind == "ra":
        memory, adds = 2 * m, 0
    elif kind == "asl":
        memory, adds = (2 + C) * m, 4 * m
    elif kind == "ast":
        if C % width:
            raise TopologyError(f"torus width {width} does not divide C={C}")
        memory, adds = (2 + C // width) * m, 8 * m
    else:
        raise TopologyError(f"unknown strategy {kind!r}")
    return {"memory": memory, "comm_time": comm_time(kind, C, width, cost), "extra_adds": adds}


@dataclass
class VirtualClock:
    cost: CostModel
    tau: int
    comm: float
    overlap: str = "ps"
    iterations: int = 0
    bytes_sent: int = 0

    def __post_init__(self):
        if self.overlap not in OVERLAPS:
            raise ParameterError(f"unknown overlap mode {self.overlap!r}")

    @property
    def iteration_time(self) -> float:
        work = self.tau * self.cost.t1
        if self.overlap == "ps":
            return work + self.comm
        return max(work, self.comm)

    @property
    def elapsed(self) -> float:
        # nodes meet at every iteration boundary, so all share one clock
        return self.iterations * self.iteration_time

    def tick(self, nbytes: int = 0) -> None:
        self.iterations += 1
        self.bytes_sent += nbytes


@dataclass
class NodeState:
    id: int
    blocks: tuple[int, ...]
    g: np.ndarray
    history: deque | None = None
    inbox: np.ndarray | None = None
    bytes_sent: int = 0


def _touch_counts(supports, m):
    counts = np.zeros(m, dtype=np.int64)
    for sup in supports:
        counts[sup] += 1
    return counts


class Cluster:
    """C simulated nodes, each with its own copy of the residual.

    Parameters
    ----------
    topology : Topology
    g0 : ndarray
        Initial residual, copied to every node.
    supports : list of index arrays
        Residual entries each node's blocks can touch.
    blocks : list of tuples, optional
        Owned blocks per node (bookkeeping only).
    """

    def __init__(self, topology: Topology, g0, supports, blocks=None):
        self.topology = topology
        C = topology.C
        if len(supports) != C:
            raise ParameterError("need one residual support per node")
        g0 = np.array(g0, dtype=float)
        self.m = g0.size
        self.k = 0
        blocks = blocks or [()] * C
        self._supports = [np.unique(np.asarray(sup, dtype=np.int64)) for sup in supports]
        node_counts = _touch_counts(self._supports, self.m)
        self.node_shared = np.flatnonzero(node_counts >= 2)

        if topology.kind == "ra":
            self.nodes = [NodeState(c, tuple(blocks[c]), g0.copy()) for c in range(C)]
            self.shared = self.node_shared
            self.private = np.empty(0, dtype=np.int64)
            return

        groups = topology.groups
        group_supports = [np.unique(np.concatenate([self._supports[c] for c in grp]))
                          for grp in groups]
        self.group_support_sizes = [s.size for s in group_supports]
        counts = _touch_counts(group_supports, self.m)
        self.shared = np.flatnonzero(counts >= 2)
        self.private = np.flatnonzero(counts < 2)
        self._exclusive = counts == 1
        R = topology.n_groups
        self.nodes = []
        for q, grp in enumerate(groups):
            g = g0.copy()
            for c in grp:
                root = c == topology.root(q)
                self.nodes.append(NodeState(
                    c, tuple(blocks[c]), g,
                    history=deque(maxlen=R + 1) if root else None,
                    inbox=np.zeros(self.shared.size) if root else None,
                ))

    def residual(self, c: int) -> np.ndarray:
        return self.nodes[c].g

    def view(self, c: int) -> np.ndarray:
        """Boolean mask of entries node ``c`` keeps current (all but other groups' private rows)."""
        mask = np.ones(self.m, dtype=bool)
        if self.topology.kind != "ra":
            q = self.topology.group_of(c)
            own = np.zeros(self.m, dtype=bool)
            for member in self.topology.groups[q]:
                own[self._supports[member]] = True
            mask[self._exclusive & ~own] = False
        return mask

    def exchange(self, deltas) -> int:
        """Apply one iteration's contributions ``deltas[c]``; return bytes sent."""
        if len(deltas) != self.topology.C:
            raise ParameterError("need one contribution per node")
        if self.topology.kind == "ra":
            nbytes = self._exchange_ra(deltas)
        else:
            nbytes = self._exchange_ring(deltas)
        self.k += 1
        return nbytes

    def _exchange_ra(self, deltas) -> int:
        total = np.zeros(self.m)
        for d in deltas:
            total += d
        for node in self.nodes:
            node.g += total
        C = self.topology.C
        rounds = math.ceil(math.log2(C)) if C > 1 else 0
        per_node = rounds * self.node_shared.size * FLOAT_BYTES
        for node in self.nodes:
            node.bytes_sent += per_node
        return per_node * C

    def _exchange_ring(self, deltas) -> int:
        top = self.topology
        R = top.n_groups
        sh = self.shared
        k = self.k
        nbytes = 0
        aggregates = []
        for q, grp in enumerate(top.groups):
            agg = np.zeros(self.m)
            for c in grp:
                agg += deltas[c]
                if c != top.root(q):
                    # member -> root half of the group reduce
                    n = self.group_support_sizes[q] * FLOAT_BYTES
                    self.nodes[c].bytes_sent += n
                    nbytes += n
            aggregates.append(agg)

        outgoing = []
        for q in range(R):
            root = self.nodes[top.root(q)]
            root.history.append(aggregates[q][sh])
            send_old = self._history(root, R, k)
            outgoing.append((root.inbox - send_old) + root.history[-1])

        for q in range(R):
            root = self.nodes[top.root(q)]
            root.inbox = outgoing[top.pred(q)]
            recv_old = self._history(root, R - 1, k)
            g = root.g
            g[sh] = g[sh] + ((root.history[-1] - recv_old) + root.inbox)
            g[self.private] += aggregates[q][self.private]
            n = sh.size * FLOAT_BYTES
            root.bytes_sent += n
            # root -> members half: broadcast of the received message
            root.bytes_sent += (top.width - 1) * n
            nbytes += top.width * n
        return nbytes

    @staticmethod
    def _history(root, lag, k):
        """Own aggregate from iteration k - lag (zero before the start)."""
        if k - lag < 0:
            return 0.0
        if len(root.history) < lag + 1:
            raise InvariantViolation(f"history holds {len(root.history)} entries, need lag {lag}")
        return root.history[-1 - lag]

    def copies_identical(self) -> bool:
        first = self.nodes[0].g
        return all(np.array_equal(n.g, first) for n in self.nodes[1:])
