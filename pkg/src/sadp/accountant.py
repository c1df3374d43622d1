"""Renyi-DP accountant for the subsampled Gaussian mechanism.

Per-step cost is computed from the integer-order moment sum of the
subsampled Gaussian, composed linearly over charged iterations, and
converted to (epsilon, delta)-DP by minimizing over a grid of integer
orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

DEFAULT_ALPHA_GRID = tuple(range(2, 65))


class InvalidParameterError(ValueError):
    """A privacy parameter is outside its valid range."""


class BudgetInfeasibleError(ValueError):
    """The epsilon budget is below the zero-iteration floor."""


def _check_q_sigma(q: float, sigma: float) -> None:
    if not 0.0 <= q <= 1.0:
        raise InvalidParameterError(f"sampling rate q={q} must be in [0, 1]")
    if sigma <= 0.0:
        raise InvalidParameterError(f"noise multiplier sigma={sigma} must be > 0")


@dataclass(frozen=True)
class AccountantState:
    """Everything needed to answer "what is epsilon now?"."""

    q: float
    sigma: float
    delta: float
    tau: int = 0
    alpha_grid: Sequence[int] = DEFAULT_ALPHA_GRID

    def __post_init__(self):
        _check_q_sigma(self.q, self.sigma)
        if self.q == 0.0:
            raise InvalidParameterError("sampling rate q must be positive")
        if not 0.0 < self.delta < 1.0:
            raise InvalidParameterError(f"delta={self.delta} must be in (0, 1)")
        if self.tau < 0:
            raise InvalidParameterError(f"tau={self.tau} must be >= 0")
        if not self.alpha_grid or any(
            a < 2 or a != int(a) for a in self.alpha_grid
        ):
            raise InvalidParameterError("alpha grid must be integers >= 2")

    def with_tau(self, tau: int) -> "AccountantState":
        return AccountantState(self.q, self.sigma, self.delta, tau, self.alpha_grid)


@dataclass(frozen=True)
class PrivacySpend:
    epsilon: float
    delta: float
    best_alpha: int


def rdp_per_step(q: float, sigma: float, alpha: int) -> float:
    """Per-step RDP epsilon of the subsampled Gaussian at integer order alpha.

    Evaluates log of the moment sum

        sum_{k=0}^{alpha} C(alpha,k) (1-q)^(alpha-k) q^k exp((k^2-k)/(2 sigma^2))

    entirely in the log domain (log-gamma binomials + log-sum-exp), so the
    result stays finite for large alpha and small sigma.
    """
    _check_q_sigma(q, sigma)
    if alpha < 2 or alpha != int(alpha):
        raise InvalidParameterError(f"alpha={alpha} must be an integer >= 2")
    alpha = int(alpha)
    if q == 0.0:
        return 0.0

    k = np.arange(alpha + 1)
    log_binom = gammaln(alpha + 1) - gammaln(k + 1) - gammaln(alpha - k + 1)
    log_q = math.log(q) if q < 1.0 else 0.0
    log_1mq = math.log1p(-q) if q < 1.0 else -math.inf
    # 0 * -inf would poison the k=alpha (resp. k=0) term; mask explicitly
    with np.errstate(invalid="ignore"):
        terms = (
            log_binom
            + np.where(k == alpha, 0.0, (alpha - k) * log_1mq)
            + np.where(k == 0, 0.0, k * log_q)
            + (k * k - k) / (2.0 * sigma * sigma)
        )
    log_a = float(logsumexp(terms))
    return max(log_a / (alpha - 1), 0.0)


def compose(per_step_rdp: float, tau: int) -> float:
    """RDP composes additively: tau identical steps cost tau times one."""
    if per_step_rdp < 0 or tau < 0:
        raise InvalidParameterError("per-step RDP and tau must be nonnegative")
    return tau * per_step_rdp


def rdp_to_dp(alpha: int, rdp_eps: float, delta: float) -> float:
    """Standard conversion: eps_DP = eps_RDP + log(1/delta)/(alpha-1)."""
    if not 0.0 < delta < 1.0:
        raise InvalidParameterError(f"delta={delta} must be in (0, 1)")
    return rdp_eps + math.log(1.0 / delta) / (alpha - 1)


def rdp_to_dp_tight(alpha: int, rdp_eps: float, delta: float) -> float:
    """Tighter conversion, clamped below at 0.

    Off by default in the training configs; the standard conversion is what
    published accuracy/budget tables assume.
    """
    if not 0.0 < delta < 1.0:
        raise InvalidParameterError(f"delta={delta} must be in (0, 1)")
    eps = (
        rdp_eps
        + math.log((alpha - 1) / alpha)
        - (math.log(delta) + math.log(alpha)) / (alpha - 1)
    )
    return max(eps, 0.0)


def spend(state: AccountantState, tight_conversion: bool = False) -> PrivacySpend:
    """Total (epsilon, delta) after state.tau charged iterations.

    Minimizes over the order grid; ties break toward the smallest order.
    """
    convert = rdp_to_dp_tight if tight_conversion else rdp_to_dp
    best_eps = math.inf
    best_alpha = None
    for alpha in state.alpha_grid:
        total = compose(rdp_per_step(state.q, state.sigma, alpha), state.tau)
        eps = convert(alpha, total, state.delta)
        if eps < best_eps:
            best_eps = eps
            best_alpha = alpha
    return PrivacySpend(epsilon=best_eps, delta=state.delta, best_alpha=best_alpha)


def max_steps_within(
    state: AccountantState, eps_budget: float, tight_conversion: bool = False
) -> int:
    """Largest tau whose spend stays within eps_budget.

    Exponential growth then bisection; valid because spend is nondecreasing
    in tau.
    """

    def eps(tau: int) -> float:
        return spend(state.with_tau(tau), tight_conversion).epsilon

    if eps(0) > eps_budget:
        raise BudgetInfeasibleError(
            f"budget {eps_budget} is below the tau=0 floor {eps(0)}"
        )
    hi = 1
    while eps(hi) <= eps_budget:
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if eps(mid) <= eps_budget:
            lo = mid
        else:
            hi = mid
    return lo
