"""Command-line entry point: ``dbcd {generate,solve,analyze,verify}``.

Exit codes: 0 success, 1 usage, 2 instance parse error, 3 verification
failure, 4 divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import reports
from .blocks import BlockLayout, make_balanced_partition
from .errors import DBCDError, DivergenceError, InstanceParseError, ResidualDriftError
from .eso import CostModel, expected_theta_squared, theta_pmf_per_node
from .generate import BlockAngularSpec, generate_block_angular, random_lasso, separable_svm
from .instances import read_instance, write_instance
from .solver import SolverConfig, solve
from .verify import (
    IDENTITY_KAPPAS,
    QuadraticTestObjective,
    enumerate_theta_squared,
    identity_configs,
    identity_sides,
    random_structure,
    theta_sum_pmf,
    verify_eso,
)

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_VERIFY, EXIT_DIVERGED = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _beta_arg(text):
    if text in ("auto", "eta"):
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto', 'eta' or a number") from None
    if v < 1:
        raise argparse.ArgumentTypeError("beta must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dbcd", description="Distributed block coordinate descent toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic DBCD-SPARSE instance")
    g.add_argument("--kind", choices=("block-angular", "svm", "random-lasso"),
                   default="block-angular")
    g.add_argument("--out", required=True, type=Path)
    g.add_argument("--C", type=int, default=2)
    g.add_argument("--local-rows", type=int, default=20)
    g.add_argument("--local-cols", type=int, default=10)
    g.add_argument("--global-rows", type=int, default=5)
    g.add_argument("--local-nnz", type=int, default=3)
    g.add_argument("--global-nnz", type=int, default=4)
    g.add_argument("--planted", type=int, default=4)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--large-scale", type=float, default=None,
                   help="use the large reference dimensions shrunk by this factor")
    g.add_argument("--m", type=int, default=100, help="rows (svm / random-lasso)")
    g.add_argument("--n", type=int, default=200, help="columns (random-lasso)")
    g.add_argument("--density", type=float, default=0.05)
    g.add_argument("--lam", type=float, default=1e-3)
    g.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("solve", help="run the solver on an instance file")
    s.add_argument("instance", type=Path)
    s.add_argument("--C", type=int, default=1)
    s.add_argument("--tau", type=int, default=1)
    s.add_argument("--strategy", choices=("ra", "asl", "ast"), default="ra")
    s.add_argument("--torus-width", type=int, default=1)
    s.add_argument("--overlap", choices=("ps", "fp"), default="ps")
    s.add_argument("--beta", type=_beta_arg, default="auto")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iter", type=int, default=1000)
    s.add_argument("--eps", type=float, default=1e-6)
    s.add_argument("--audit-period", type=int, default=100)
    s.add_argument("--partition", choices=("contiguous", "strided"), default="contiguous")
    s.add_argument("--t1", type=float, default=1.0)
    s.add_argument("--t2", type=float, default=1.0)
    s.add_argument("--tp2p", type=float, default=1.0)
    s.add_argument("--f-star", type=float, default=None)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", type=Path, default=None,
                   help="report prefix; writes <out>.csv and <out>.json")
    s.add_argument("--trace", type=Path, default=None)

    a = sub.add_parser("analyze", help="emit analysis tables as CSV")
    a.add_argument("--table1", dest="distribution_cost", action="store_true",
                   help="cost-of-distribution bounds (n, omega, C, tau, beta2, LB, UB)")
    a.add_argument("--speedup", action="store_true")
    a.add_argument("--tau-star", action="store_true")
    a.add_argument("--out-dir", type=Path, default=None)

    v = sub.add_parser("verify", help="run enumeration and ESO checks")
    v.add_argument("--lemma1", dest="identity", action="store_true",
                   help="sampling identity by exhaustive enumeration")
    v.add_argument("--theta", action="store_true")
    v.add_argument("--eso", action="store_true")
    v.add_argument("--all", action="store_true")
    v.add_argument("--n", type=int, default=8)
    v.add_argument("--C", type=int, default=2)
    v.add_argument("--tau", type=int, default=None)
    v.add_argument("--s-max", type=int, default=6)
    v.add_argument("--C-max", type=int, default=3)
    v.add_argument("--configs", type=int, default=50)
    v.add_argument("--seed", type=int, default=0)
    return p


def cmd_generate(args) -> int:
    if args.kind == "block-angular":
        common = dict(C=args.C, local_nnz_per_row=args.local_nnz,
                      global_nnz_per_row=args.global_nnz, planted_nonzeros=args.planted,
                      noise=args.noise, lam=args.lam, seed=args.seed)
        if args.large_scale:
            spec = BlockAngularSpec.large_run_scaled(args.large_scale, **common)
        else:
            spec = BlockAngularSpec(local_rows=args.local_rows, local_cols=args.local_cols,
                                    global_rows=args.global_rows, **common)
        problem, x_star = generate_block_angular(spec)
        write_instance(problem, args.out)
        sidecar = args.out.with_name(args.out.name + ".xstar")
        sidecar.write_text("".join(f"{v:.17g}\n" for v in x_star))
    elif args.kind == "svm":
        write_instance(separable_svm(args.m, lam=args.lam, seed=args.seed), args.out)
    else:
        write_instance(random_lasso(args.m, args.n, args.density, args.lam, args.seed), args.out)
    print(args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    problem = read_instance(args.instance)
    config = SolverConfig(
        C=args.C, tau=args.tau, strategy=args.strategy, torus_width=args.torus_width,
        overlap=args.overlap, beta=args.beta, max_iterations=args.max_iter,
        target_accuracy=args.eps, seed=args.seed, audit_period=args.audit_period,
        partition_scheme=args.partition, cost=CostModel(args.t1, args.t2, args.tp2p),
    )
    trace = open(args.trace, "w") if args.trace else None
    try:
        report = solve(problem, config, f_star=args.f_star, workers=args.workers, trace=trace)
    finally:
        if trace:
            trace.close()
    if args.out:
        report.write_csv(args.out.with_name(args.out.name + ".csv"))
        report.write_json(args.out.with_name(args.out.name + ".json"))
    last = report.records[-1]
    summary = {"stop_reason": report.stop_reason, "iterations": last["k"],
               "objective": last["objective"], "gap": last["gap"], "beta": report.beta,
               "xi": report.xi, "analyzed_regime": report.analyzed_regime}
    print(json.dumps(summary))
    return EXIT_OK


def cmd_analyze(args) -> int:
    wanted = [name for name in ("distribution_cost", "speedup", "tau_star") if getattr(args, name)]
    if not wanted:
        wanted = ["distribution_cost", "speedup", "tau_star"]
    builders = {"distribution_cost": reports.distribution_cost_rows, "speedup": reports.speedup_rows,
                "tau_star": reports.tau_star_rows}
    for name in wanted:
        text = reports.to_csv(builders[name]())
        if args.out_dir:
            args.out_dir.mkdir(parents=True, exist_ok=True)
            (args.out_dir / f"{name}.csv").write_text(text)
        else:
            sys.stdout.write(text)
    return EXIT_OK


def _emit(results, check, ok, **detail):
    results.append(ok)
    print(json.dumps({"check": check, "pass": bool(ok), **detail}))


def run_identity(results, n, C, tau):
    for partition, J, t in identity_configs(n, C, tau):
        xi = len(J) // C
        for name, kappa in IDENTITY_KAPPAS.items():
            lhs, rhs = identity_sides(partition, J, t, kappa)
            ok = abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))
            _emit(results, "sampling_identity", ok, n=n, C=C, tau=t, xi=xi, kappa=name, lhs=lhs, rhs=rhs)


def run_theta(results, s_max, C_max):
    for C in range(1, C_max + 1):
        for s in range(1, s_max + 1):
            for tau in range(1, s + 1):
                for xi in range(1, s + 1):
                    exact = enumerate_theta_squared(xi, tau, s, C)
                    closed = expected_theta_squared(xi, tau, s, C)
                    pmf = theta_sum_pmf(theta_pmf_per_node(xi, tau, s), C)
                    conv = float(np.dot(np.arange(pmf.size) ** 2, pmf))
                    ok = abs(exact - closed) <= 1e-10 and abs(conv - closed) <= 1e-10
                    _emit(results, "theta2", ok, s=s, tau=tau, xi=xi, C=C,
                          enumerated=exact, closed_form=closed)


def run_eso(results, configs, seed):
    rng = np.random.default_rng(seed)
    for t in range(configs):
        C = int(rng.integers(1, 3))
        s = int(rng.integers(2, 8 // C + 1))
        n = C * s
        tau = int(rng.integers(1, s + 1))
        layout = BlockLayout.uniform(n)
        structure = random_structure(rng, n, int(rng.integers(1, 2 * n)), int(rng.integers(1, n + 1)))
        f = QuadraticTestObjective.random(rng, layout, structure)
        partition = make_balanced_partition(n, C, str(rng.choice(["contiguous", "strided"])))
        x, h = rng.standard_normal(n), rng.standard_normal(n)
        rep = verify_eso(f, partition, tau, x, h)
        _emit(results, "eso", rep.holds, n=n, C=C, tau=tau, omega=structure.omega,
              beta=rep.beta, lhs=rep.lhs, rhs=rep.rhs)


def cmd_verify(args) -> int:
    run_all = args.all or not (args.identity or args.theta or args.eso)
    results = []
    if args.identity or run_all:
        run_identity(results, args.n, args.C, args.tau)
    if args.theta or run_all:
        run_theta(results, args.s_max, args.C_max)
    if args.eso or run_all:
        run_eso(results, args.configs, args.seed)
    failed = results.count(False)
    print(json.dumps({"summary": True, "checks": len(results), "failed": failed,
                      "pass": failed == 0}))
    return EXIT_OK if failed == 0 else EXIT_VERIFY


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "analyze": cmd_analyze,
            "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InstanceParseError as exc:
        print(f"dbcd: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DivergenceError, ResidualDriftError) as exc:
        print(f"dbcd: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DBCDError, OSError) as exc:
        print(f"dbcd: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
