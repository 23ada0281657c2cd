"""Meta-order injection and impact measurement on a single realization.

A meta-order adds a constant external demand h to the aggregate for T
consecutive steps (a child order per step, total size h*T).  The log-price
moves by A(t)/P per step, so the impact trajectory is the running sum of the
baseline-corrected aggregate divided by P.  This module also provides the
scalar estimators applied to ensemble-averaged trajectories (permanent
impact, saturation slope, execution-cost ratio) and the recovery of the
response kernel's regular part from the step response.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from .engine import GameState, advance
from .errors import (ConfigurationError, MeasurementError, NotSaturatedError,
                     UndefinedRatioError)


@dataclass(frozen=True)
class MetaOrderSpec:
    """Perturbation schedule: size h per step for T steps, starting at `start`.

    start counts unperturbed steps run after the baseline measurement before
    the order begins.  h may take either sign; magnitudes approaching sqrt(P)
    leave the linear-response regime (warned at run time, not rejected).
    """
    h: float
    T: int
    start: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise ConfigurationError(f"T must be >= 1, got {self.T}")
        if self.start < 0:
            raise ConfigurationError("start must be >= 0")


@dataclass
class ImpactTrajectory:
    """Impact curve of one realization.

    delta[t] is the cumulative baseline-corrected log-price change after t
    steps (delta[0] == 0, length t_max + 1); excess[t] is the per-step
    baseline-corrected aggregate (length t_max).
    """
    delta: np.ndarray
    excess: np.ndarray
    baseline_mean_A: float
    t_max: int
    P: int
    T: int
    h: float


def measure_baseline(state: GameState, window: int) -> float:
    """Time-average of the unperturbed aggregate of this realization.

    The per-realization mean is finite in the predictable phase and must be
    subtracted from the perturbed run; the window therefore has to be long
    compared with the impact observation itself.
    """
    if window < 100 * state.P:
        raise MeasurementError(
            f"baseline window {window} too small: need >= 100*P = {100 * state.P}")
    out_a, _, _ = advance(state, window)
    return float(out_a.mean())


def run_with_metaorder(state: GameState, spec: MetaOrderSpec, t_max: int,
                       baseline: float) -> ImpactTrajectory:
    """Execute the meta-order and record the impact out to t_max steps.

    The external demand is h for steps 0 <= t < T and zero afterwards; score
    updates see the perturbed aggregate throughout, so speculators adapt to
    the order both while it runs and while it unwinds.
    """
    if t_max <= spec.T:
        raise ConfigurationError(f"t_max ({t_max}) must exceed T ({spec.T})")
    if abs(spec.h) > 0.5 * math.sqrt(state.P):
        warnings.warn(
            f"|h| = {abs(spec.h)} is not small against sqrt(P) = "
            f"{math.sqrt(state.P):.1f}; linear response may not apply",
            stacklevel=2)
    if spec.start > 0:
        advance(state, spec.start)
    external = np.zeros(t_max)
    external[:spec.T] = spec.h
    out_a, _, _ = advance(state, t_max, external)
    excess = out_a - baseline
    delta = np.concatenate(([0.0], np.cumsum(excess) / state.P))
    return ImpactTrajectory(delta=delta, excess=excess, baseline_mean_A=baseline,
                            t_max=t_max, P=state.P, T=spec.T, h=spec.h)


# --- scalar estimators on ensemble-averaged trajectories ---------------------

def _fit_slope(y: np.ndarray, x: np.ndarray):
    """Least-squares slope with its residual-based standard error."""
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    slope = float(np.dot(xc, y)) / sxx
    resid = y - y.mean() - slope * xc
    dof = max(len(y) - 2, 1)
    se = math.sqrt(float(np.dot(resid, resid)) / dof / sxx)
    return slope, se


def permanent_impact(delta_mean: np.ndarray, delta_stderr: np.ndarray,
                     tail_window: tuple[int, int],
                     slope_se: float | None = None):
    """Long-time impact level: mean of delta over a flat tail window.

    Returns (value, stderr).  The window must show no significant trend: if
    the fitted tail slope exceeds twice its standard error the trajectory has
    not saturated and NotSaturatedError is raised.  slope_se overrides the
    residual-based slope error when a better (ensemble) estimate exists.
    """
    a, b = tail_window
    if not 0 <= a < b < len(delta_mean):
        raise ValueError(f"bad tail window {tail_window}")
    seg = delta_mean[a:b + 1]
    t = np.arange(a, b + 1, dtype=float)
    slope, se_fit = _fit_slope(seg, t)
    se_slope = slope_se if slope_se is not None else se_fit
    if abs(slope) > 2.0 * se_slope:
        raise NotSaturatedError(
            f"tail slope {slope:.3e} exceeds 2 x stderr {se_slope:.3e}; "
            "extend t_max or move the window later")
    value = float(seg.mean())
    # tail points are strongly correlated across the ensemble: averaging over
    # the window does not shrink the ensemble error, so keep the mean stderr
    stderr = float(delta_stderr[a:b + 1].mean())
    return value, stderr


def saturation_slope(delta_mean: np.ndarray, fit_window: tuple[int, int],
                     P: int) -> float:
    """Slope of the impact versus t/P over the window of linear growth.

    In the stationary perturbed regime this equals the mean aggregate shift
    caused by the order.
    """
    a, b = fit_window
    if not 0 <= a < b < len(delta_mean):
        raise ValueError(f"bad fit window {fit_window}")
    if b - a + 1 < 10:
        raise MeasurementError("fit window must contain at least 10 samples")
    t_over_p = np.arange(a, b + 1, dtype=float) / P
    slope, _ = _fit_slope(delta_mean[a:b + 1], t_over_p)
    return slope


def execution_cost_ratio(delta_mean: np.ndarray, delta_stderr: np.ndarray,
                         T: int) -> float:
    """Mean impact paid during execution relative to the final impact.

    1/2 signals linear impact growth; above 1/2 concave, below convex.
    """
    if T >= len(delta_mean):
        raise ValueError("trajectory shorter than T")
    denom = float(delta_mean[T])
    if abs(denom) < 3.0 * float(delta_stderr[T]):
        raise UndefinedRatioError(
            f"delta(T) = {denom:.3g} is within 3 stderr ({delta_stderr[T]:.3g}) of zero")
    return float(delta_mean[1:T + 1].mean()) / denom


# --- response-kernel recovery -------------------------------------------------

@dataclass
class KernelEstimate:
    """Regular part of the response kernel sampled on a lag grid.

    tau is in units of P steps; kr integrates to ~1 when the step response is
    clean.  chi is inferred from the ratio of the initial jump to the
    saturation level of the response.
    """
    tau: np.ndarray
    kr: np.ndarray
    kr0: float
    chi: float


def estimate_kernel(mean_excess: np.ndarray, spec: MetaOrderSpec, P: int,
                    smoothing: int = 1) -> KernelEstimate:
    """Recover the kernel's regular part from the ensemble-mean step response.

    During execution the mean excess demand falls from h towards its
    saturation value as the agents absorb the order; the regular kernel is
    proportional to minus the time derivative of that fall.  The response is
    boxcar-smoothed over `smoothing` steps before differentiating.
    """
    if smoothing < 1:
        raise ValueError("smoothing must be >= 1")
    if spec.T > len(mean_excess):
        raise ValueError("mean_excess shorter than the execution window")
    h = spec.h
    if h == 0.0:
        raise ValueError("kernel recovery needs a nonzero order size")
    response = np.asarray(mean_excess[:spec.T], dtype=float)
    smooth = uniform_filter1d(response, size=smoothing, mode="nearest")

    tail = max(spec.T // 5, smoothing, 1)
    saturation = float(smooth[-tail:].mean())
    adaptation = h - saturation            # h * chi / (1 + chi)
    if adaptation == 0.0:
        tau = np.arange(spec.T, dtype=float) / P
        return KernelEstimate(tau=tau, kr=np.zeros(spec.T), kr0=0.0, chi=0.0)
    chi = math.inf if saturation <= 0.0 else h / saturation - 1.0

    tau = np.arange(spec.T, dtype=float) / P
    kr = -np.gradient(smooth, tau) / adaptation

    rises = np.diff(smooth)
    if rises.size and rises.max() > 0.05 * abs(adaptation):
        warnings.warn("step response is non-monotone beyond the noise scale; "
                      "kernel estimate may be unreliable", stacklevel=2)

    n_head = max(3, smoothing)
    head_slope, _ = _fit_slope(kr[:n_head], tau[:n_head])
    kr0 = float(kr[0] + head_slope * (0.0 - tau[0]))
    return KernelEstimate(tau=tau, kr=kr, kr0=kr0, chi=float(chi))


# --- trajectory export --------------------------------------------------------

def trajectory_csv_rows(delta_mean: np.ndarray, delta_stderr: np.ndarray,
                        T: int, n_realizations: int):
    """Yield impact CSV rows (t, t_over_T, delta_mean, delta_stderr, n_realizations)."""
    yield "t,t_over_T,delta_mean,delta_stderr,n_realizations"
    for t in range(len(delta_mean)):
        yield (f"{t},{t / T:.10g},{delta_mean[t]:.10g},"
               f"{delta_stderr[t]:.10g},{n_realizations}")


def write_trajectory_csv(path, delta_mean, delta_stderr, T, n_realizations):
    with open(path, "w") as fh:
        for row in trajectory_csv_rows(delta_mean, delta_stderr, T, n_realizations):
            fh.write(row + "\n")
