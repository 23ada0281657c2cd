"""Phase structure of the game: predictability and susceptibility vs density.

Solves the closed-form stationary theory on a grid of speculator densities,
locates the critical density, and checks the predicted predictability
against the running game.  The measured per-pattern predictability matches
P times the per-speculator expression from the solver, which is the
normalization used everywhere in this package.
"""

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from mgimpact import replica
from mgimpact.engine import GameConfig, new_game, relax_to_stationary, \
    measure_predictability

from pathlib import Path
OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

N_P = 1.0
ns_star = replica.critical_ns(N_P)
print(f"critical speculator density ns* = {ns_star:.6f}  (np = {N_P})")

# theory on a dense grid below the transition
ns_grid = np.linspace(0.05, ns_star * 0.999, 200)
solutions = [replica.solve(ns, N_P) for ns in ns_grid]
chi = np.array([s.chi for s in solutions])
h_density = np.array([s.h_per_ns for s in solutions])

# measured predictability at a few densities (small game, seed-averaged)
P = 64
measure_ns = [0.5, 1.0, 2.0, 3.0, 5.0]
measured = []
for ns in measure_ns:
    vals = []
    for stream in range(10):
        cfg = GameConfig(P=P, n_s=ns, n_p=N_P, seed=1, stream=stream)
        state = new_game(cfg)
        relax_to_stationary(state, cfg.burn_in)
        vals.append(measure_predictability(state, 400 * P) / P)
    measured.append(np.mean(vals))
    theory = replica.solve(ns, N_P).h_per_ns if ns < ns_star else 0.0
    print(f"ns={ns}: measured H/P = {measured[-1]:.4f}   theory = {theory:.4f}")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.plot(ns_grid, h_density, label="theory")
ax1.plot(measure_ns, measured, "o", label=f"simulation (P={P})")
ax1.axvline(ns_star, ls="--", c="gray", label="critical density")
ax1.set_xlabel("speculators per pattern $n_s$")
ax1.set_ylabel("predictability per pattern $H/P$")
ax1.legend()
ax2.semilogy(ns_grid, chi)
ax2.axvline(ns_star, ls="--", c="gray")
ax2.set_xlabel("$n_s$")
ax2.set_ylabel(r"susceptibility $\chi$")
fig.tight_layout()
fig.savefig(OUT / "phase_and_theory.png", dpi=130)
print(f"wrote {OUT / 'phase_and_theory.png'}")
