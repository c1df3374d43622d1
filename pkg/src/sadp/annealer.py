"""Annealed acceptance of candidate model updates.

The screening loop accepts an update with probability 1 when the evaluation
loss improves, and with probability exp(-delta_e * Q) otherwise, where the
temperature Q grows with the number of accepted updates. A cap on
consecutive rejections forces an acceptance before the chain can stall.

A classic geometric-cooling annealer over black-box objectives is included
as a reference loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np


class NonFiniteInputError(ValueError):
    pass


@dataclass(frozen=True)
class AnnealerState:
    """Bookkeeping for the acceptance chain.

    t counts all iterations, tau accepted ones, mu consecutive rejections.
    Q is Q0 * tau after every completed iteration (Q0 before the first).
    """

    t: int = 0
    tau: int = 0
    mu: int = 0
    Q: float = 0.0
    Q0: float = 10.0
    mu0: int = 10
    energy: float = math.inf
    clamp_tau_floor: bool = False

    @classmethod
    def initial(
        cls,
        Q0: float,
        mu0: int,
        energy: float = math.inf,
        clamp_tau_floor: bool = False,
    ) -> "AnnealerState":
        if Q0 <= 0:
            raise ValueError("Q0 must be > 0")
        if mu0 < 1:
            raise ValueError("mu0 must be >= 1")
        return cls(
            t=0, tau=0, mu=0, Q=Q0, Q0=Q0, mu0=mu0,
            energy=energy, clamp_tau_floor=clamp_tau_floor,
        )


@dataclass(frozen=True)
class Decision:
    accepted: bool
    forced: bool
    probability: float


def acceptance_probability(delta_e: float, Q: float) -> float:
    """1 when the move improves, exp(-delta_e * Q) otherwise.

    The temperature multiplies the energy change: large Q means cold, so
    the chain hardens as acceptances accumulate.
    """
    if not math.isfinite(delta_e):
        raise NonFiniteInputError(f"delta_e={delta_e} is not finite")
    if Q < 0:
        raise ValueError("Q must be >= 0")
    if delta_e <= 0:
        return 1.0
    return min(math.exp(-delta_e * Q), 1.0)


def decide(
    delta_e: float, state: AnnealerState, rng: np.random.Generator
) -> Decision:
    """Accept or reject one candidate.

    Exactly one uniform is drawn per call, including on the forced path, so
    RNG streams stay aligned across configurations. A NaN energy change is
    rejected outright unless the rejection cap forces acceptance.
    """
    u = float(rng.uniform())
    if state.mu >= state.mu0:
        return Decision(accepted=True, forced=True, probability=1.0)
    if not math.isfinite(delta_e):
        # a numerically broken update is never accepted voluntarily
        return Decision(accepted=False, forced=False, probability=0.0)
    p = acceptance_probability(delta_e, state.Q)
    return Decision(accepted=u <= p, forced=False, probability=p)


def advance(
    state: AnnealerState, decision: Decision, new_energy: float
) -> AnnealerState:
    """Fold one decision into the state.

    On accept: tau+1, mu reset, energy replaced. On reject: mu+1, energy
    kept. Either way t advances and Q is recomputed as Q0 * tau (with an
    opt-in floor of 1 on tau, for runs that want to avoid the Q=0
    accept-everything regime after an early rejection).
    """
    if decision.accepted:
        tau, mu, energy = state.tau + 1, 0, new_energy
    else:
        tau, mu, energy = state.tau, state.mu + 1, state.energy
    effective_tau = max(tau, 1) if state.clamp_tau_floor else tau
    return replace(
        state, t=state.t + 1, tau=tau, mu=mu,
        Q=state.Q0 * effective_tau, energy=energy,
    )


def run_classic_sa(
    objective: Callable[[float], float],
    neighbor: Callable[[object, np.random.Generator], object],
    x0,
    T0: float,
    cool: float,
    n: int,
    rng: np.random.Generator,
):
    """Reference geometric-cooling annealer.

    Acceptance test is random(0,1) < exp(-delta_f / T) for every move, so
    improving moves (delta_f <= 0) are always taken. T is multiplied by
    `cool` each iteration.
    """
    if T0 <= 0:
        raise ValueError("T0 must be > 0")
    if not 0.0 < cool < 1.0:
        raise ValueError("cool must be in (0, 1)")
    if n < 1:
        raise ValueError("n must be >= 1")
    s = x0
    f_s = objective(s)
    T = T0
    for _ in range(n):
        cand = neighbor(s, rng)
        delta_f = objective(cand) - f_s
        prob = math.exp(min(-delta_f / T, 50.0))
        if rng.uniform() < prob:
            s = cand
            f_s = objective(s)
        T = cool * T
    return s
