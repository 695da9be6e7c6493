"""Distributed block coordinate descent driver over the simulated cluster."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .blocks import compute_xi, make_balanced_partition, node_streams, sample_node
from .cluster import OVERLAPS, STRATEGIES, Cluster, Topology, VirtualClock, comm_time
from .errors import DivergenceError, ParameterError, ResidualDriftError
from .eso import ConvergenceBudget, CostModel, compute_beta, eta_beta, strong_convexity_iterations

log = logging.getLogger(__name__)

REPORT_SCHEMA = "dbcd-report/1"
RECORD_FIELDS = ("k", "objective", "gap", "suboptimality", "virtual_time", "wall_time",
                 "bytes_sent", "audited")


@dataclass
class SolverConfig:
    C: int = 1
    tau: int = 1
    strategy: str = "ra"
    torus_width: int = 1
    overlap: str = "ps"
    beta: float | str = "auto"
    max_iterations: int = 1000
    target_accuracy: float = 1e-6
    seed: int = 0
    audit_period: int = 100
    partition_scheme: str = "contiguous"
    cost: CostModel = field(default_factory=CostModel)
    stagnation_window: int = 0
    drift_tolerance: float = 1e-8
    hard_drift_tolerance: float = 1e-4

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ParameterError(f"unknown strategy {self.strategy!r}")
        if self.overlap not in OVERLAPS:
            raise ParameterError(f"unknown overlap mode {self.overlap!r}")
        if self.C < 1 or self.tau < 1:
            raise ParameterError("C and tau must be positive")
        if not self.target_accuracy > 0:
            raise ParameterError("target accuracy must be positive")
        if isinstance(self.beta, str):
            if self.beta not in ("auto", "eta"):
                raise ParameterError(f"beta must be 'auto', 'eta' or a number, got {self.beta!r}")
        elif self.beta < 1:
            raise ParameterError("beta must be at least 1")


@dataclass
class RunReport:
    records: list = field(default_factory=list)
    x: np.ndarray | None = None
    stop_reason: str = ""
    audits: list = field(default_factory=list)
    beta: float = float("nan")
    xi: int = 0
    omega: int = 0
    s: int = 0
    analyzed_regime: bool = True
    predicted_iterations: int | None = None
    config: dict = field(default_factory=dict)
    problem_kind: str = ""

    def metric_stream(self, fields=("k", "objective", "gap")):
        return [tuple(r[f] for f in fields) for r in self.records]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RECORD_FIELDS)
            for r in self.records:
                w.writerow([_fmt(r[f]) for f in RECORD_FIELDS])

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "problem": self.problem_kind,
            "config": self.config,
            "beta": self.beta,
            "xi": self.xi,
            "omega": self.omega,
            "s": self.s,
            "analyzed_regime": self.analyzed_regime,
            "stop_reason": self.stop_reason,
            "iterations": self.records[-1]["k"] if self.records else 0,
            "predicted_iterations": self.predicted_iterations,
            "audits": self.audits,
            "records": self.records,
            "x": [float(v) for v in self.x] if self.x is not None else None,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, default=_json_default)


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return v


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(type(v))


def stop_check(records, kind: str, eps: float, max_iterations: int, f_star=None,
               stagnation_window: int = 0):
    """Return ``(stop, reason)`` for the loop guard."""
    last = records[-1]
    if last["gap"] is not None and last["gap"] <= eps:
        return True, "converged"
    if f_star is not None and last["objective"] - f_star <= eps:
        return True, "converged"
    if kind == "lasso" and stagnation_window and len(records) > stagnation_window:
        before = records[-1 - stagnation_window]["objective"]
        if before - last["objective"] <= 1e-15 * (1 + abs(last["objective"])):
            return True, "stagnation"
    if last["k"] >= max_iterations:
        return True, "budget"
    return False, ""


def resolve_beta(config: SolverConfig, xi: int, s: int) -> float:
    if config.beta == "auto":
        return compute_beta(xi, config.tau, s, config.C)
    if config.beta == "eta":
        return eta_beta(xi / s, config.C, config.tau)
    return float(config.beta)


def solve(problem, config: SolverConfig, budget: ConvergenceBudget | None = None, *,
          x0=None, f_star=None, workers: int = 1, trace=None, audit_hook=None) -> RunReport:
    """Run the distributed method on ``problem`` with the simulated cluster.

    Parameters
    ----------
    problem : LassoProblem or SvmDualProblem
    config : SolverConfig
    budget : ConvergenceBudget, optional
        If given, its epsilon replaces ``config.target_accuracy`` and the
        strongly convex iteration bound is reported.
    x0 : array, optional
        Starting point, zero by default.
    f_star : float, optional
        Known optimal value; enables the ``suboptimality`` column.
    workers : int
        Physical threads used to evaluate the nodes. Results do not depend on it.
    trace : file-like, optional
        Receives per-node CSV rows ``k,node,F,gap_or_residual_error,virtual_time,bytes_sent``.
    audit_hook : callable, optional
        Called as ``audit_hook(k, cluster, x)`` after every exchange (testing aid).
    """
    n = problem.n_blocks
    C, tau = config.C, config.tau
    partition = make_balanced_partition(n, C, config.partition_scheme)
    s = partition.s
    if not 1 <= tau <= s:
        raise ParameterError(f"tau must lie in [1, {s}], got {tau}")
    structure = problem.separability()
    xi = compute_xi(structure, partition)
    beta = resolve_beta(config, xi, s)
    eps = budget.epsilon if budget is not None else config.target_accuracy

    report = RunReport(beta=beta, xi=xi, omega=structure.omega, s=s,
                       analyzed_regime=config.strategy == "ra" or C == 1,
                       config=_config_dict(config), problem_kind=problem.kind)
    if budget is not None:
        report.predicted_iterations = strong_convexity_iterations(budget, n, C, tau, beta)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    g = problem.residual(x)
    supports = [np.concatenate([problem.block_support(i) for i in grp]) if grp else []
                for grp in partition.groups]
    topology = Topology(config.strategy, C, config.torus_width)
    cluster = Cluster(topology, g, supports, partition.groups)
    clock = VirtualClock(config.cost, tau, comm_time(config.strategy, C, topology.width,
                                                     config.cost), config.overlap)
    streams = node_streams(config.seed, C)
    start = time.perf_counter()

    def node_step(c):
        Z = sample_node(partition.groups[c], tau, streams[c])
        gc = cluster.residual(c)
        steps = [problem.block_update(i, x[i], gc, beta) for i in Z]
        dg = np.zeros(problem.residual_dim)
        for i, h in zip(Z, steps):
            if h != 0.0:
                problem.accumulate(dg, i, h)
        return Z, steps, dg

    def record(k, gk, audited):
        F = problem.objective(x, gk)
        if not math.isfinite(F):
            raise DivergenceError(f"objective became {F} at iteration {k}")
        rec = {
            "k": k,
            "objective": F,
            "gap": problem.gap(x, gk),
            "suboptimality": F - f_star if f_star is not None else None,
            "virtual_time": clock.elapsed,
            "wall_time": time.perf_counter() - start,
            "bytes_sent": clock.bytes_sent,
            "audited": audited,
        }
        report.records.append(rec)
        if trace is not None:
            _trace_rows(trace, rec, cluster, g)
        return rec

    if trace is not None:
        trace.write("k,node,F,gap_or_residual_error,virtual_time,bytes_sent\n")
    record(0, g, False)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        k = 0
        while True:
            stop, reason = stop_check(report.records, problem.kind, eps, config.max_iterations,
                                      f_star, config.stagnation_window)
            if stop:
                report.stop_reason = reason
                break
            results = list(pool.map(node_step, range(C))) if pool else [node_step(c) for c in range(C)]
            total = np.zeros(problem.residual_dim)
            deltas = []
            for Z, steps, dg in results:
                for i, h in zip(Z, steps):
                    x[i] += h
                total += dg
                deltas.append(dg)
            g += total
            clock.tick(cluster.exchange(deltas))
            k += 1
            if audit_hook is not None:
                audit_hook(k, cluster, x)
            audited = config.audit_period > 0 and k % config.audit_period == 0
            fresh = _audit(problem, config, cluster, x, g, k, report) if audited else g
            record(k, fresh, audited)
    finally:
        if pool is not None:
            pool.shutdown()
    report.x = x
    return report


def _audit(problem, config, cluster, x, g, k, report):
    fresh = problem.residual(x)
    scale = 1.0 + float(np.abs(fresh).max(initial=0.0))
    drift = float(np.abs(g - fresh).max(initial=0.0)) / scale
    entry = {"k": k, "drift": drift, "replaced": False}
    if config.strategy == "ra":
        node_drift = max(float(np.abs(n.g - fresh).max(initial=0.0)) for n in cluster.nodes) / scale
        entry["node_drift"] = node_drift
        drift = max(drift, node_drift)
    if drift > config.hard_drift_tolerance:
        raise ResidualDriftError(f"residual drift {drift:.3e} at iteration {k}")
    if drift > config.drift_tolerance:
        log.warning("iteration %d: residual drift %.3e, resynchronising", k, drift)
        entry["replaced"] = True
        if config.strategy == "ra":
            for node in cluster.nodes:
                node.g[:] = fresh
        g[:] = fresh
    report.audits.append(entry)
    return fresh


def _trace_rows(fh, rec, cluster, g):
    for c, node in enumerate(cluster.nodes):
        mask = cluster.view(c)
        err = float(np.abs(node.g[mask] - g[mask]).max(initial=0.0))
        fh.write(f"{rec['k']},{c},{rec['objective']:.17g},{err:.17g},"
                 f"{rec['virtual_time']:.17g},{node.bytes_sent}\n")


def _config_dict(config: SolverConfig) -> dict:
    d = asdict(config)
    d["cost"] = asdict(config.cost)
    return d
