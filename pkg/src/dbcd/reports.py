"""Tables emitted by ``dbcd analyze``: cost of distribution, speed-up curves, tau*."""

from __future__ import annotations

import csv
import io
import math

from .eso import cost_of_distribution_bounds, eta_bound, optimal_tau, speedup_factor

# (n, omega, C, tau) reference rows and their expected (beta2, LB, UB) digits
DISTRIBUTION_COST_PARAMS = (
    (10**6, 10**2, 10, 50),
    (10**7, 10**2, 10, 50),
    (10**8, 10**2, 100, 100),
)
DISTRIBUTION_COST_EXPECTED = (
    ("1.049", "1.0000086", "1.4279673"),
    ("1.005", "1.0000009", "1.0446901"),
    ("1.009", "1.0000010", "1.9801990"),
)

SPEEDUP_ETAS = (0.2, 0.1, 0.01, 0.001)
SPEEDUP_CT = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)


def distribution_cost_rows(params=DISTRIBUTION_COST_PARAMS):
    rows = []
    for n, omega, C, tau in params:
        lb, ub, beta2 = cost_of_distribution_bounds(n, omega, C, tau)
        rows.append({"n": n, "omega": omega, "C": C, "tau": tau,
                     "beta2": beta2, "LB": lb, "UB": ub})
    return rows


def speedup_rows(etas=SPEEDUP_ETAS, cts=SPEEDUP_CT, s: int = 100_000):
    """Speed-up Ctau/beta on one node (C = 1) with xi = eta*s, plus its eta lower bound."""
    rows = []
    for eta in etas:
        xi = max(1, round(eta * s))
        for ct in cts:
            if ct > s:
                continue
            rows.append({
                "Ctau": ct,
                "eta": eta,
                "speedup": speedup_factor(xi, ct, s, 1),
                "speedup_lower": 1.0 / eta_bound(xi / s, 1, ct),
            })
    return rows


def tau_star_rows(s_values=(100, 1000, 10000), xis=(1, 10), Cs=(1, 4, 16),
                  r12s=(0.01, 0.1, 1.0, 10.0)):
    rows = []
    for s in s_values:
        for xi in xis:
            if xi > s:
                continue
            for C in Cs:
                for r12 in r12s:
                    t = optimal_tau(s, xi, C, r12)
                    rows.append({"s": s, "xi": xi, "C": C, "r12": r12, "tau_star": t,
                                 "tau_clamped": min(s, max(1, round(t)))})
    return rows


def to_csv(rows) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: format(v, ".17g") if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def matches_printed(value: float, printed: str) -> bool:
    """True when ``printed`` is ``value`` rounded or truncated to the printed decimals."""
    decimals = len(printed.split(".")[1]) if "." in printed else 0
    scale = 10**decimals
    target = round(float(printed) * scale)
    return target in (round(value * scale), math.floor(value * scale + 1e-9))
