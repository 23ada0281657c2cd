"""Grand-canonical minority game with meta-order injection.

A market of adaptive speculators and deterministic producers reacting to a
public information pattern.  The package simulates single realizations,
injects persistent buy/sell programs (meta-orders), measures the resulting
price-impact trajectory over large ensembles, and cross-checks every
measurement against the closed-form stationary-state theory.
"""

from . import engine, ensemble, metaorder, replica
from .engine import GameConfig, GameState, new_game, step
from .ensemble import EnsembleConfig, EnsembleResult, collapse_metric, run_ensemble, sweep
from .metaorder import ImpactTrajectory, MetaOrderSpec
from .replica import ReplicaSolution, critical_ns, solve

__version__ = "0.1.0"

__all__ = [
    "GameConfig", "GameState", "new_game", "step",
    "MetaOrderSpec", "ImpactTrajectory",
    "ReplicaSolution", "solve", "critical_ns",
    "EnsembleConfig", "EnsembleResult", "run_ensemble", "sweep", "collapse_metric",
    "engine", "metaorder", "replica", "ensemble",
    "__version__",
]
