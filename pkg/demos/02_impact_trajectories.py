"""Impact of one meta-order in the two phases of the market.

Runs the same buy program (h = 1 for T = 5P steps) in a predictable market
(n_s = 1) and in an unpredictable one (n_s = 5).  In the first case the
impact keeps growing during execution and relaxes to a nonzero permanent
level; in the second it saturates quickly and relaxes back to zero.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mgimpact.engine import GameConfig
from mgimpact.ensemble import EnsembleConfig, run_ensemble
from mgimpact.metaorder import MetaOrderSpec

from pathlib import Path
OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

P = 64
T = 5 * P
REALIZATIONS = 300

fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=False)
for ax, n_s in zip(axes, (1.0, 5.0)):
    cfg = EnsembleConfig(
        game=GameConfig(P=P, n_s=n_s, n_p=1.0, seed=7),
        metaorder=MetaOrderSpec(h=1.0, T=T),
        realizations=REALIZATIONS,
        workers=4,
    )
    res = run_ensemble(cfg)
    t = np.arange(len(res.mean_delta))
    ax.fill_between(t / T, res.mean_delta - res.stderr_delta,
                    res.mean_delta + res.stderr_delta, alpha=0.3)
    ax.plot(t / T, res.mean_delta)
    ax.axvline(1.0, ls="--", c="gray")
    ax.set_title(f"$n_s={n_s:g}$")
    ax.set_xlabel("$t/T$")
    ax.set_ylabel(r"impact $\Delta(t)$")
    perm = "n/a" if res.permanent is None else f"{res.permanent[0]:.3f} ± {res.permanent[1]:.3f}"
    print(f"n_s={n_s}: slope={res.slope[0]:.4f}±{res.slope[1]:.4f}  "
          f"permanent impact={perm}")

fig.tight_layout()
fig.savefig(OUT / "impact_trajectories.png", dpi=130)
print(f"wrote {OUT / 'impact_trajectories.png'}")
