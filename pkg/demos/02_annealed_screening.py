"""Demonstrate the annealed acceptance rule that screens candidate updates.

A candidate that lowers the evaluation loss is always kept. A candidate that
raises it by delta_E survives with probability exp(-delta_E * Q), where the
temperature Q = Q0 * tau stiffens as more updates are accepted. After mu0
consecutive rejections the next candidate is forced through so the chain
cannot stall.

Run: python demos/02_annealed_screening.py
"""

import numpy as np

from sadp.annealer import AnnealerState, acceptance_probability, advance, decide

rng = np.random.default_rng(0)
state = AnnealerState.initial(Q0=5.0, mu0=4, energy=1.0)

print("t   tau  mu  Q      delta_E   P        accepted forced")
for t in range(25):
    delta_e = float(rng.normal(scale=0.05))
    d = decide(delta_e, state, rng)
    state = advance(state, d, state.energy + delta_e if d.accepted else state.energy)
    print(
        f"{state.t:<3d} {state.tau:<4d} {state.mu:<3d} {state.Q:<6.1f}"
        f" {delta_e:+.4f}  {d.probability:.5f}  {str(d.accepted):<8s} {d.forced}"
    )

print("\nAcceptance probability for a worsening move shrinks as tau grows:")
for tau in (1, 5, 20, 100):
    p = acceptance_probability(0.05, 5.0 * tau)
    print(f"  tau = {tau:3d}: P(accept delta_E=0.05) = {p:.5f}")
