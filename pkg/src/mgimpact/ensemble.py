"""Ensembles of independent realizations and their aggregated statistics.

Each realization draws fresh strategies from its own generator stream
(master seed, stream offset + index), relaxes, measures its baseline, runs
the meta-order, and hands back its trajectory.  Aggregation is an ordered
reduce over realization index with online (Welford) moments, so results are
bit-identical for a fixed configuration regardless of worker count.  Scalar
estimators run on the ensemble-mean trajectory, with leave-one-out
(jackknife) standard errors built from per-realization components.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import metaorder
from .engine import GameConfig, new_game, relax_to_stationary
from .errors import ConfigurationError, MeasurementError, NotSaturatedError
from .metaorder import MetaOrderSpec


@dataclass(frozen=True)
class EnsembleConfig:
    """One ensemble: a game, an order schedule, and measurement windows.

    Optional windows resolve to defaults derived from the schedule: t_max to
    6*T (execution plus relaxation), the baseline window to 100*T (and never
    below 100*P), burn-in to the game default.  The tail window for the
    permanent impact is the last T steps; the slope fit window is the second
    half of the execution.
    """
    game: GameConfig
    metaorder: MetaOrderSpec
    realizations: int
    t_max: int | None = None
    baseline_window: int | None = None
    burn_in: int | None = None
    workers: int = 1
    stream_offset: int = 0
    keep_trajectories: bool = False

    def __post_init__(self):
        if self.realizations < 2:
            raise ConfigurationError("need at least 2 realizations")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.resolved_t_max <= self.metaorder.T:
            raise ConfigurationError("t_max must exceed the order duration T")

    @property
    def resolved_t_max(self) -> int:
        return self.t_max if self.t_max is not None else 6 * self.metaorder.T

    @property
    def resolved_baseline_window(self) -> int:
        if self.baseline_window is not None:
            return self.baseline_window
        return max(100 * self.metaorder.T, 100 * self.game.P)

    @property
    def resolved_burn_in(self) -> int:
        return self.burn_in if self.burn_in is not None else self.game.burn_in

    @property
    def tail_window(self) -> tuple[int, int]:
        return (self.resolved_t_max - self.metaorder.T, self.resolved_t_max)

    @property
    def fit_window(self) -> tuple[int, int]:
        return (self.metaorder.T // 2, self.metaorder.T)


@dataclass
class EnsembleResult:
    """Aggregated trajectories and scalar summaries of one ensemble.

    Scalar summaries are (value, stderr) pairs; the permanent impact and the
    cost ratio may instead be None with the reason recorded, e.g. for an
    unperturbed ensemble whose final impact is consistent with zero.
    """
    config: EnsembleConfig
    realizations_used: int
    mean_delta: np.ndarray
    stderr_delta: np.ndarray
    mean_excess: np.ndarray
    stderr_excess: np.ndarray
    slope: tuple[float, float]
    jump: tuple[float, float]
    drop: tuple[float, float]
    mid_excess: tuple[float, float]
    relaxed_excess: tuple[float, float]
    permanent: tuple[float, float] | None = None
    permanent_error: str | None = None
    cost_ratio: tuple[float, float] | None = None
    cost_ratio_error: str | None = None
    per_realization: dict = field(default_factory=dict, repr=False)
    trajectories: np.ndarray | None = field(default=None, repr=False)
    wall_time_s: float = 0.0


class RunningMoments:
    """Online mean and variance of fixed-shape vectors (Welford update)."""

    def __init__(self, shape):
        self.n = 0
        self.mean = np.zeros(shape)
        self._m2 = np.zeros(shape)

    def update(self, x):
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self._m2 += delta * (x - self.mean)

    @property
    def variance(self):
        return self._m2 / (self.n - 1) if self.n > 1 else np.zeros_like(self._m2)

    @property
    def stderr(self):
        return np.sqrt(self.variance / self.n) if self.n > 1 else np.zeros_like(self._m2)


def jackknife_ratio(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """Value and jackknife stderr of mean(num)/mean(den) over realizations."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    n = len(num)
    s_num, s_den = num.sum(), den.sum()
    theta = s_num / s_den
    loo = (s_num - num) / (s_den - den)
    return theta, float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def _mean_and_sem(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(len(values)))


def _run_one(config: EnsembleConfig, index: int):
    game_cfg = dataclasses.replace(config.game, stream=config.stream_offset + index)
    state = new_game(game_cfg)
    relax_to_stationary(state, config.resolved_burn_in)
    baseline = metaorder.measure_baseline(state, config.resolved_baseline_window)
    return metaorder.run_with_metaorder(state, config.metaorder,
                                        config.resolved_t_max, baseline)


def run_ensemble(config: EnsembleConfig) -> EnsembleResult:
    """Run all realizations and aggregate; see module docstring for policy."""
    t0 = time.perf_counter()
    T = config.metaorder.T
    t_max = config.resolved_t_max
    tail_a, tail_b = config.tail_window
    fit_a, fit_b = config.fit_window
    fit_t_over_p = np.arange(fit_a, fit_b + 1, dtype=float) / config.game.P
    tail_t = np.arange(tail_a, tail_b + 1, dtype=float)

    delta_mom = RunningMoments(t_max + 1)
    excess_mom = RunningMoments(t_max)
    per = {key: np.empty(config.realizations) for key in
           ("tail_mean", "tail_slope", "slope", "bar_delta", "delta_T",
            "mid_excess", "relaxed_excess", "jump", "drop")}
    kept = np.empty((config.realizations, t_max + 1)) if config.keep_trajectories else None

    def fold(index, traj):
        delta_mom.update(traj.delta)
        excess_mom.update(traj.excess)
        per["tail_mean"][index] = traj.delta[tail_a:tail_b + 1].mean()
        per["tail_slope"][index] = metaorder._fit_slope(
            traj.delta[tail_a:tail_b + 1], tail_t)[0]
        per["slope"][index] = metaorder._fit_slope(
            traj.delta[fit_a:fit_b + 1], fit_t_over_p)[0]
        per["bar_delta"][index] = traj.delta[1:T + 1].mean()
        per["delta_T"][index] = traj.delta[T]
        per["mid_excess"][index] = traj.excess[T // 2:T].mean()
        # the level the excess demand relaxes to during execution: last
        # quarter only, since the absorption transient can outlast T/2
        per["relaxed_excess"][index] = traj.excess[3 * T // 4:T].mean()
        per["jump"][index] = traj.excess[0]
        per["drop"][index] = traj.excess[T] - traj.excess[T - 1]
        if kept is not None:
            kept[index] = traj.delta

    def guarded(index):
        try:
            return _run_one(config, index)
        except Exception as exc:
            raise RuntimeError(f"realization {index} failed: {exc}") from exc

    if config.workers == 1:
        for r in range(config.realizations):
            fold(r, guarded(r))
    else:
        # bounded pipeline, consumed strictly in index order
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            pending = deque()
            next_submit = 0
            for r in range(config.realizations):
                while next_submit < config.realizations and len(pending) < 4 * config.workers:
                    pending.append(pool.submit(guarded, next_submit))
                    next_submit += 1
                fold(r, pending.popleft().result())

    result = EnsembleResult(
        config=config,
        realizations_used=delta_mom.n,
        mean_delta=delta_mom.mean,
        stderr_delta=delta_mom.stderr,
        mean_excess=excess_mom.mean,
        stderr_excess=excess_mom.stderr,
        slope=_mean_and_sem(per["slope"]),
        jump=_mean_and_sem(per["jump"]),
        drop=_mean_and_sem(per["drop"]),
        mid_excess=_mean_and_sem(per["mid_excess"]),
        relaxed_excess=_mean_and_sem(per["relaxed_excess"]),
        per_realization=per,
        trajectories=kept,
    )
    tail_slope_se = _mean_and_sem(per["tail_slope"])[1]
    try:
        result.permanent = metaorder.permanent_impact(
            result.mean_delta, result.stderr_delta, (tail_a, tail_b),
            slope_se=tail_slope_se)
        # ensemble tail error: SEM of per-realization tail means
        result.permanent = (result.permanent[0], _mean_and_sem(per["tail_mean"])[1])
    except NotSaturatedError as exc:
        result.permanent_error = str(exc)
    try:
        metaorder.execution_cost_ratio(result.mean_delta, result.stderr_delta, T)
        result.cost_ratio = jackknife_ratio(per["bar_delta"], per["delta_T"])
    except MeasurementError as exc:
        result.cost_ratio_error = str(exc)
    result.wall_time_s = time.perf_counter() - t0
    return result


_SWEEP_AXES = ("h", "n_s", "T", "P")


def sweep(base: EnsembleConfig, axis: str, values) -> list[tuple[float, EnsembleResult]]:
    """Independent ensembles along one parameter axis.

    Each value gets its own non-overlapping block of generator streams, so a
    sweep is reproducible as a whole and each point individually.
    """
    if axis not in _SWEEP_AXES:
        raise ConfigurationError(f"unknown sweep axis {axis!r}; use one of {_SWEEP_AXES}")
    out = []
    for idx, value in enumerate(values):
        offset = base.stream_offset + idx * base.realizations
        if axis == "h":
            cfg = dataclasses.replace(
                base, metaorder=dataclasses.replace(base.metaorder, h=value),
                stream_offset=offset)
        elif axis == "T":
            cfg = dataclasses.replace(
                base, metaorder=dataclasses.replace(base.metaorder, T=int(value)),
                stream_offset=offset)
        elif axis == "n_s":
            cfg = dataclasses.replace(
                base, game=dataclasses.replace(base.game, n_s=value),
                stream_offset=offset)
        else:
            cfg = dataclasses.replace(
                base, game=dataclasses.replace(base.game, P=int(value)),
                stream_offset=offset)
        out.append((value, run_ensemble(cfg)))
    return out


def collapse_metric(results: list[EnsembleResult]) -> float:
    """Worst normalized spread of the order-size-rescaled impact curves.

    For each time step and each pair of ensembles, the difference of
    delta/h is compared against the combined standard error; the metric is
    the maximum such ratio.  Values of about 3 or below mean the rescaled
    curves collapse within noise, i.e. the impact is linear in h.
    """
    if len(results) < 2:
        raise ConfigurationError("need at least two ensembles to test a collapse")
    T = results[0].config.metaorder.T
    P = results[0].config.game.P
    n = len(results[0].mean_delta)
    for res in results[1:]:
        if (res.config.metaorder.T != T or res.config.game.P != P
                or len(res.mean_delta) != n):
            raise ConfigurationError("ensembles must share T, P and the time grid")
    worst = 0.0
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            hi, hj = results[i].config.metaorder.h, results[j].config.metaorder.h
            diff = np.abs(results[i].mean_delta / hi - results[j].mean_delta / hj)
            comb = np.sqrt((results[i].stderr_delta / hi) ** 2
                           + (results[j].stderr_delta / hj) ** 2)
            with np.errstate(divide="ignore", invalid="ignore"):
                z = np.where(diff == 0.0, 0.0, diff / comb)
            worst = max(worst, float(np.max(z[1:])))
    return worst


# --- persistence ---------------------------------------------------------------

def config_as_dict(config: EnsembleConfig) -> dict:
    return {
        "game": dataclasses.asdict(config.game),
        "metaorder": dataclasses.asdict(config.metaorder),
        "realizations": config.realizations,
        "t_max": config.resolved_t_max,
        "baseline_window": config.resolved_baseline_window,
        "burn_in": config.resolved_burn_in,
        "stream_offset": config.stream_offset,
    }


def config_hash(config: EnsembleConfig) -> str:
    blob = json.dumps(config_as_dict(config), sort_keys=True).encode()
    return hashlib.sha1(blob).hexdigest()


def save_result(result: EnsembleResult, out_dir, name: str = "ensemble") -> dict:
    """Write impact/excess/scalars CSVs plus a JSON manifest; returns the manifest."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    T = cfg.metaorder.T

    impact_path = out / f"{name}_impact.csv"
    metaorder.write_trajectory_csv(impact_path, result.mean_delta,
                                   result.stderr_delta, T, result.realizations_used)

    excess_path = out / f"{name}_excess.csv"
    with open(excess_path, "w") as fh:
        fh.write("t,excess_mean,excess_stderr\n")
        for t in range(len(result.mean_excess)):
            fh.write(f"{t},{result.mean_excess[t]:.10g},{result.stderr_excess[t]:.10g}\n")

    scalars_path = out / f"{name}_scalars.csv"
    with open(scalars_path, "w") as fh:
        fh.write("name,value,stderr,note\n")
        rows = [("slope", result.slope, ""), ("jump", result.jump, ""),
                ("drop", result.drop, ""), ("mid_excess", result.mid_excess, ""),
                ("relaxed_excess", result.relaxed_excess, "")]
        rows.append(("permanent_impact", result.permanent,
                     result.permanent_error or ""))
        rows.append(("cost_ratio", result.cost_ratio, result.cost_ratio_error or ""))
        for label, pair, note in rows:
            if pair is None:
                fh.write(f"{label},,,{note}\n")
            else:
                fh.write(f"{label},{pair[0]:.10g},{pair[1]:.10g},{note}\n")

    manifest = {
        "name": name,
        "config": config_as_dict(result.config),
        "config_sha1": config_hash(result.config),
        "seed": cfg.game.seed,
        "realizations_used": result.realizations_used,
        "wall_time_s": result.wall_time_s,
        "files": [impact_path.name, excess_path.name, scalars_path.name],
    }
    with open(out / f"{name}_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
