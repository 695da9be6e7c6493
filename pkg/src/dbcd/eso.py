"""Step sizes and the sampling law of theta, plus the complexity bounds built on them.

Everything here is a pure function of a handful of counts; the exhaustive and
Monte-Carlo checks of these formulas live in :mod:`dbcd.verify`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .errors import ParameterError, StrongConvexityError


def _check_counts(xi, tau, s, C):
    for name, v in (("xi", xi), ("tau", tau), ("s", s), ("C", C)):
        if int(v) != v or v < 1:
            raise ParameterError(f"{name} must be a positive integer, got {v}")
    if tau > s:
        raise ParameterError(f"tau={tau} exceeds s={s}")
    if xi > s:
        raise ParameterError(f"xi={xi} exceeds s={s}")


def compute_beta(xi: int, tau: int, s: int, C: int) -> float:
    """ESO multiplier for a (C, tau)-distributed sampling.

    beta = 1 + (xi-1)(tau-1)/max(1, s-1) + (C-1) xi tau / s
    """
    _check_counts(xi, tau, s, C)
    return 1.0 + (xi - 1) * (tau - 1) / max(1, s - 1) + (C - 1) * xi * tau / s


def expected_theta_squared(xi: int, tau: int, s: int, C: int) -> float:
    """E[theta^2] where theta = |Z cap J| and |J cap P_c| = xi on every node."""
    _check_counts(xi, tau, s, C)
    mean = xi * tau / s
    return C * mean * (1.0 + (xi - 1) * (tau - 1) / max(1, s - 1)) + C * (C - 1) * mean**2


def theta_pmf_per_node(xi: int, tau: int, s: int) -> np.ndarray:
    """Hypergeometric law of |Z_c cap J| on one node; index k is P(theta_c = k)."""
    _check_counts(xi, tau, s, 1)
    kmax = min(xi, tau)
    k = np.arange(kmax + 1)
    pmf = comb(xi, k, exact=False) * comb(s - xi, tau - k, exact=False) / comb(s, tau, exact=False)
    return pmf


@dataclass(frozen=True)
class EsoParameters:
    beta: float
    w: np.ndarray
    C: int
    tau: int
    s: int
    xi: int
    omega: int

    @property
    def eta(self) -> float:
        return self.xi / self.s

    @classmethod
    def from_structure(cls, w, C, tau, s, xi, omega):
        return cls(compute_beta(xi, tau, s, C), np.asarray(w, dtype=float), C, tau, s, xi, omega)


@dataclass(frozen=True)
class ConvergenceBudget:
    mu_f: float
    mu_omega: float
    epsilon: float
    rho: float
    initial_gap: float
    initial_distance: float = 0.0

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ParameterError(f"rho must lie in (0, 1), got {self.rho}")
        if self.epsilon <= 0:
            raise ParameterError("epsilon must be positive")
        if self.mu_f < 0 or self.mu_omega < 0:
            raise ParameterError("strong convexity parameters are nonnegative")


@dataclass(frozen=True)
class CostModel:
    """Virtual costs: one block update, one residual exchange, one p2p message."""

    t1: float = 1.0
    t2: float = 1.0
    tp2p: float = 1.0

    def __post_init__(self):
        if min(self.t1, self.t2, self.tp2p) <= 0:
            raise ParameterError("all cost-model times must be strictly positive")

    @property
    def r12(self) -> float:
        return self.t1 / self.t2

    def t_ra(self, C: int) -> float:
        """Reduce-all time, ceil(log2 C) point-to-point rounds."""
        return math.ceil(math.log2(C)) * self.tp2p if C > 1 else 0.0


def convex_rate_bound(k, n, C, tau, beta, initial_distance, initial_gap) -> float:
    """Expected-suboptimality bound after ``k`` iterations for convex F."""
    return n / (n + C * tau * k) * (beta / 2 * initial_distance + initial_gap)


def iteration_bound(n, C, tau, beta, mu_f, mu_omega, ratio) -> float:
    """Real-valued right-hand side of the strongly convex iteration bound.

    ``ratio`` is (F(x0) - F*) / (epsilon * rho).
    """
    return n / (C * tau) * (beta + mu_omega) / (mu_f + mu_omega) * math.log(ratio)


def strong_convexity_iterations(budget: ConvergenceBudget, n, C, tau, beta) -> int:
    """Iterations sufficient for P(F(x_K) - F* <= eps) >= 1 - rho."""
    if budget.mu_f + budget.mu_omega <= 0:
        raise StrongConvexityError("mu_f + mu_omega must be positive")
    if budget.epsilon >= budget.initial_gap:
        raise ParameterError("epsilon must be smaller than the initial gap")
    value = iteration_bound(
        n, C, tau, beta, budget.mu_f, budget.mu_omega,
        budget.initial_gap / (budget.epsilon * budget.rho),
    )
    # guard against ceil() jumping on a last-bit rounding error
    return max(0, math.ceil(value * (1 - 1e-12)))


def speedup_factor(xi, tau, s, C) -> float:
    """C tau / beta: how many serial iterations one distributed iteration is worth."""
    return C * tau / compute_beta(xi, tau, s, C)


def eta_bound(eta: float, C: int, tau: int) -> float:
    """Upper bound on beta / (C tau) in terms of eta = xi / s alone (valid for s >= 2)."""
    ct = C * tau
    return 1.0 / ct + eta * (1.0 - 1.0 / ct)


def eta_beta(eta: float, C: int, tau: int) -> float:
    """The beta surrogate C tau * eta_bound, never smaller than the exact beta."""
    return 1.0 + eta * (C * tau - 1)


def cost_of_distribution_bounds(n, omega, C, tau):
    """Bounds LB <= beta1/beta2 <= UB comparing C nodes against one node doing C tau.

    Returns ``(LB, UB, beta2)``.
    """
    for name, v in (("n", n), ("omega", omega), ("C", C), ("tau", tau)):
        if v < 1:
            raise ParameterError(f"{name} must be positive")
    if n % C:
        raise ParameterError(f"C={C} does not divide n={n}")
    s = n // C
    if s < 2:
        raise ParameterError("cost-of-distribution bounds need s = n/C >= 2")
    if omega > n or tau > s:
        raise ParameterError("need omega <= n and tau <= s")
    beta2 = 1 + (omega - 1) * (C * tau - 1) / (n - 1)
    lb = (1 + (omega - C) * (tau - 1) / (n - C) + (C - 1) * omega * tau / n) / beta2
    ub = (1 + (omega - 1) * (C * tau - C) / (n - C) + (C - 1) * omega * C * tau / n) / beta2
    return lb, ub, beta2


def optimal_tau(s, xi, C, r12) -> float:
    """Minimiser of (s/(xi C) + tau)(r12 + 1/tau) over tau > 0."""
    if min(s, xi, C, r12) <= 0:
        raise ParameterError("optimal_tau needs positive inputs")
    return math.sqrt(s / (r12 * xi * C))


def runtime_model(tau, s, xi, C, r12) -> float:
    """Total-runtime proxy whose minimiser is :func:`optimal_tau` (up to constants)."""
    return (s / (xi * C) + tau) * (r12 + 1.0 / tau)
