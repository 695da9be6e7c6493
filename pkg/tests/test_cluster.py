import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import random_supports, replay, run_ring

from dbcd.cluster import FLOAT_BYTES, Cluster, Topology, VirtualClock, accounting, comm_time
from dbcd.eso import CostModel
from dbcd.errors import ParameterError, TopologyError


def test_topology_rules():
    assert Topology("asl", 4, 3).width == 1
    assert Topology("ra", 4).width == 4
    assert Topology("ast", 6, 2).groups == ((0, 1), (2, 3), (4, 5))
    with pytest.raises(TopologyError):
        Topology("ast", 6, 4)
    with pytest.raises(TopologyError):
        Topology("mesh", 2)


def test_ra_examples():
    cl = Cluster(Topology("ra", 2), np.zeros(3), [[0, 1], [1, 2]])
    cl.exchange([np.zeros(3), np.zeros(3)])
    assert all(np.array_equal(n.g, np.zeros(3)) for n in cl.nodes)
    cl.exchange([np.array([1.0, 0, 0]), np.array([0, 1.0, 0])])
    assert all(np.array_equal(n.g, [1.0, 1.0, 0.0]) for n in cl.nodes)
    assert cl.copies_identical()


@given(st.integers(1, 6), st.integers(0, 10**6))
def test_ra_copies_bitwise_identical(C, seed):
    rng = np.random.default_rng(seed)
    cl = Cluster(Topology("ra", C), rng.standard_normal(10), random_supports(rng, C, 10))
    for _ in range(5):
        cl.exchange([rng.standard_normal(10) for _ in range(C)])
        assert cl.copies_identical()


def test_ring_of_one_equals_ra_bitwise():
    rng = np.random.default_rng(9)
    g0 = rng.standard_normal(12)
    a = Cluster(Topology("ra", 1), g0, [np.arange(12)])
    b = Cluster(Topology("asl", 1), g0, [np.arange(12)])
    c = Cluster(Topology("ast", 1, 1), g0, [np.arange(12)])
    for _ in range(50):
        d = rng.standard_normal(12)
        for cl in (a, b, c):
            cl.exchange([d.copy()])
        assert np.array_equal(a.nodes[0].g, b.nodes[0].g)
        assert np.array_equal(a.nodes[0].g, c.nodes[0].g)


@pytest.mark.parametrize("kind,C,width", [
    ("asl", 2, 1), ("asl", 3, 1), ("asl", 4, 1), ("asl", 5, 1),
    ("ast", 4, 2), ("ast", 6, 3), ("ast", 6, 2), ("ast", 4, 4),
])
@pytest.mark.parametrize("seed", range(4))
def test_staleness_replay_oracle(kind, C, width, seed):
    m = int(np.random.default_rng(seed).integers(8, 65))
    for k, cl, g0, hist in run_ring(kind, C, width, m, 3 * C + 4, seed):
        for c in range(C):
            mask = cl.view(c)
            expect = replay(g0, hist, cl.topology, c, k)
            assert np.array_equal(cl.residual(c)[mask], expect[mask])


@pytest.mark.parametrize("kind,C,width", [("asl", 2, 1), ("asl", 3, 1), ("asl", 4, 1), ("ast", 4, 2)])
def test_drain_after_freeze(kind, C, width):
    k0 = 7
    R = C // width
    for k, cl, g0, hist in run_ring(kind, C, width, 30, k0 + C + 2, seed=C, freeze_after=k0):
        truth = g0 + sum(sum(d) for d in hist)
        synced = all(np.array_equal(cl.residual(c)[cl.view(c)], truth[cl.view(c)]) for c in range(C))
        if k >= k0 + C - 1:
            assert synced
        if k >= k0 + R - 1:
            assert synced


def test_ast_full_width_is_synchronous():
    for k, cl, g0, hist in run_ring("ast", 4, 4, 20, 6, seed=3):
        truth = g0 + sum(sum(d) for d in hist)
        assert all(np.array_equal(cl.residual(c), truth) for c in range(4))


def test_private_rows_stay_local():
    # node 0 alone touches rows 0-1, node 1 alone rows 3-4, both touch row 2
    cl = Cluster(Topology("asl", 2), np.zeros(5), [[0, 1, 2], [2, 3, 4]])
    assert list(cl.shared) == [2]
    nbytes = cl.exchange([np.array([1.0, 1, 1, 0, 0]), np.array([0, 0, 1.0, 1, 1])])
    assert nbytes == 2 * FLOAT_BYTES
    assert np.array_equal(cl.residual(0)[:3], [1.0, 1.0, 2.0])
    assert list(cl.view(0)) == [True, True, True, False, False]


def test_ra_byte_count():
    cl = Cluster(Topology("ra", 4), np.zeros(6), [[0, 1], [1, 2], [2, 3], [4, 5]])
    # shared rows 1 and 2, two rounds for four nodes
    assert cl.exchange([np.zeros(6)] * 4) == 4 * 2 * 2 * FLOAT_BYTES


def test_exchange_arity_checked():
    cl = Cluster(Topology("asl", 2), np.zeros(3), [[0], [1]])
    with pytest.raises(ParameterError):
        cl.exchange([np.zeros(3)])


def test_accounting_rows():
    cost = CostModel(tp2p=2.0)
    m, C = 100, 8
    assert accounting("ra", m, C, cost=cost) == {"memory": 200, "comm_time": 6.0, "extra_adds": 0}
    assert accounting("asl", m, C, cost=cost) == {"memory": 1000, "comm_time": 2.0, "extra_adds": 400}
    assert accounting("ast", m, C, 4, cost) == {"memory": 400, "comm_time": 2.0 + 6.0 / 4,
                                                "extra_adds": 800}


@given(st.sampled_from(["ra", "asl", "ast"]), st.sampled_from(["ps", "fp"]),
       st.integers(1, 50), st.integers(0, 300), st.floats(0.01, 10), st.floats(0.01, 10))
def test_clock_closed_form(kind, overlap, tau, K, t1, tp2p):
    cost = CostModel(t1=t1, tp2p=tp2p)
    comm = comm_time(kind, 8, 2 if kind == "ast" else 1, cost)
    clock = VirtualClock(cost, tau, comm, overlap)
    for _ in range(K):
        clock.tick()
    expect = K * (tau * t1 + comm) if overlap == "ps" else K * max(tau * t1, comm)
    assert clock.elapsed == expect
