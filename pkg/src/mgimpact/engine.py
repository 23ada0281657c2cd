"""Single-realization engine for the grand-canonical minority game.

The market has P information patterns.  Producers trade their fixed strategy
unconditionally; speculators keep a score per agent and trade only while the
score is nonnegative.  Each step draws a pattern uniformly, forms the excess
demand A(t) from producers, active speculators and an optional external
demand, then updates every score by -a_i * A(t).

Randomness comes from a counter-based generator keyed by (seed, stream), so
realization r of an ensemble can use stream r and reproduce bit-for-bit under
any execution order.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._kernels import advance_steps
from .errors import ConfigurationError, MeasurementError

SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class GameConfig:
    """Sizes and densities of one game realization.

    n_s and n_p are speculators and producers per pattern; the integer agent
    counts are rounded from n_s * P and n_p * P.  burn_in_steps defaults to
    200 * P, long enough for the activity statistics to reach their plateau
    (characteristic times grow linearly with P).
    """
    P: int
    n_s: float
    n_p: float
    seed: int = 0
    stream: int = 0
    burn_in_steps: int | None = None

    def __post_init__(self):
        if self.P < 2:
            raise ConfigurationError(f"P must be >= 2, got {self.P}")
        if self.n_s <= 0 or self.n_p <= 0:
            raise ConfigurationError("agent densities must be positive")
        if self.N_s < 1 or self.N_p < 1:
            raise ConfigurationError("derived agent counts must be >= 1")
        if self.burn_in < 1:
            raise ConfigurationError("burn_in_steps must be >= 1")
        if not 0 <= self.seed < 2**64 or not 0 <= self.stream < 2**64:
            raise ConfigurationError("seed and stream must fit in 64 bits")

    @property
    def N_s(self) -> int:
        return int(round(self.n_s * self.P))

    @property
    def N_p(self) -> int:
        return int(round(self.n_p * self.P))

    @property
    def burn_in(self) -> int:
        return self.burn_in_steps if self.burn_in_steps is not None else 200 * self.P


@dataclass
class StrategyBook:
    """Quenched strategies: one +/-1 row per speculator, producers pre-summed."""
    speculator_strategies: np.ndarray    # (N_s, P) int8
    producer_aggregate: np.ndarray       # (P,) int64
    n_producers: int
    # transposed copy so the per-step score update reads one contiguous row
    by_pattern: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.by_pattern = np.ascontiguousarray(self.speculator_strategies.T)


@dataclass
class GameState:
    """Mutable state of one realization; owned by a single worker at a time."""
    book: StrategyBook
    scores: np.ndarray                   # (N_s,) float64
    active: np.ndarray                   # (N_s,) bool
    per_mu_active_sum: np.ndarray        # (P,) int64
    t: int
    rng: np.random.Generator

    @property
    def P(self) -> int:
        return self.book.producer_aggregate.shape[0]

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.active))


class StepRecord(NamedTuple):
    mu: int
    A: float
    n_active: int


class ConditionalMeans(NamedTuple):
    """Per-pattern sample means of A; counts == 0 marks never-visited patterns."""
    means: np.ndarray
    counts: np.ndarray


def _make_rng(seed: int, stream: int) -> np.random.Generator:
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def new_game(config: GameConfig) -> GameState:
    """Draw fresh strategies and return the zero-score initial state.

    All scores start at zero, so every speculator is initially active.  The
    same (config.seed, config.stream) always yields bit-identical state.
    """
    rng = _make_rng(config.seed, config.stream)
    spec = (rng.integers(0, 2, size=(config.N_s, config.P), dtype=np.int8) * 2 - 1)
    prod = (rng.integers(0, 2, size=(config.N_p, config.P), dtype=np.int8) * 2 - 1)
    book = StrategyBook(
        speculator_strategies=spec.astype(np.int8),
        producer_aggregate=prod.sum(axis=0, dtype=np.int64),
        n_producers=config.N_p,
    )
    return GameState(
        book=book,
        scores=np.zeros(config.N_s),
        active=np.ones(config.N_s, dtype=np.bool_),
        per_mu_active_sum=spec.sum(axis=0, dtype=np.int64),
        t=0,
        rng=rng,
    )


def advance(state: GameState, n_steps: int, external: np.ndarray | None = None):
    """Run n_steps, returning (A, n_active, mu) per step.

    ``external`` adds a per-step demand to the aggregate; the score updates
    see the full perturbed aggregate, which is what lets speculators adapt
    to it.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    mu_seq = state.rng.integers(0, state.P, size=n_steps)
    if external is None:
        ext_seq = np.zeros(n_steps)
    else:
        ext_seq = np.ascontiguousarray(external, dtype=np.float64)
        if ext_seq.shape != (n_steps,):
            raise ValueError("external demand must have one entry per step")
    out_a = np.empty(n_steps)
    out_nact = np.empty(n_steps, dtype=np.int64)
    advance_steps(state.book.speculator_strategies, state.book.by_pattern,
                  state.book.producer_aggregate, state.scores, state.active,
                  state.per_mu_active_sum, mu_seq, ext_seq, out_a, out_nact)
    state.t += n_steps
    return out_a, out_nact, mu_seq


def step(state: GameState, external_demand: float = 0.0) -> StepRecord:
    """Advance a single step; equivalent to advance(state, 1)."""
    out_a, out_nact, mu_seq = advance(state, 1, np.array([external_demand]))
    return StepRecord(mu=int(mu_seq[0]), A=float(out_a[0]), n_active=int(out_nact[0]))


def relax_to_stationary(state: GameState, steps: int) -> None:
    """Run the unperturbed game, discarding records."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    advance(state, steps)


def recompute_active_sums(state: GameState) -> np.ndarray:
    """Brute-force recomputation of the per-pattern active sums (test oracle)."""
    return state.book.speculator_strategies[state.active].sum(axis=0, dtype=np.int64)


def conditional_mean_A(state: GameState, window: int) -> ConditionalMeans:
    """Per-pattern sample mean of A over `window` unperturbed steps."""
    if window < 10 * state.P:
        raise MeasurementError(
            f"window {window} too small: need >= 10*P = {10 * state.P} so every "
            "pattern is visited many times in expectation")
    out_a, _, mu_seq = advance(state, window)
    sums = np.zeros(state.P)
    counts = np.zeros(state.P, dtype=np.int64)
    np.add.at(sums, mu_seq, out_a)
    np.add.at(counts, mu_seq, 1)
    means = np.divide(sums, counts, out=np.zeros(state.P), where=counts > 0)
    return ConditionalMeans(means=means, counts=counts)


def predictability_from_samples(mu_seq: np.ndarray, a_seq: np.ndarray, P: int,
                                corrected: bool = True) -> float:
    """Predictability estimate from a recorded (pattern, A) sample stream.

    The naive estimator (1/P) * sum of squared conditional means carries a
    positive O(P/window) bias from sampling noise.  The corrected estimator
    splits the stream into halves and averages the product of the two
    half-window conditional means, which is unbiased under stationarity;
    since predictability is a mean square, the result is clipped at zero.
    Patterns missing from a half contribute zero.
    """
    mu_seq = np.asarray(mu_seq)
    a_seq = np.asarray(a_seq, dtype=float)
    if mu_seq.shape != a_seq.shape or mu_seq.ndim != 1 or mu_seq.size < 2:
        raise ValueError("need matching 1-d sample arrays with >= 2 entries")

    def per_pattern_mean(mu, a):
        s = np.zeros(P)
        c = np.zeros(P, dtype=np.int64)
        np.add.at(s, mu, a)
        np.add.at(c, mu, 1)
        return np.divide(s, c, out=np.zeros(P), where=c > 0)

    if not corrected:
        m = per_pattern_mean(mu_seq, a_seq)
        return float(np.mean(m * m))
    half = mu_seq.size // 2
    m1 = per_pattern_mean(mu_seq[:half], a_seq[:half])
    m2 = per_pattern_mean(mu_seq[half:], a_seq[half:])
    return max(0.0, float(np.mean(m1 * m2)))


def measure_predictability(state: GameState, window: int) -> float:
    """Bias-corrected predictability of the running game over `window` steps."""
    if window < 10 * state.P:
        raise MeasurementError(
            f"window {window} too small: need >= 10*P = {10 * state.P}")
    out_a, _, mu_seq = advance(state, window)
    return predictability_from_samples(mu_seq, out_a, state.P, corrected=True)


# --- state snapshots ---------------------------------------------------------

def _encode_array(a: np.ndarray) -> dict:
    return {"dtype": str(a.dtype), "shape": list(a.shape),
            "data": base64.b64encode(np.ascontiguousarray(a).tobytes()).decode("ascii")}


def _decode_array(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype=np.dtype(d["dtype"])).reshape(d["shape"]).copy()


def save_state(state: GameState) -> str:
    """Serialize the full state (strategies, scores, flags, rng) to JSON."""
    rng_state = state.rng.bit_generator.state
    blob = {
        "version": SNAPSHOT_VERSION,
        "t": state.t,
        "n_producers": state.book.n_producers,
        "speculator_strategies": _encode_array(state.book.speculator_strategies),
        "producer_aggregate": _encode_array(state.book.producer_aggregate),
        "scores": _encode_array(state.scores),
        "active": _encode_array(state.active),
        "per_mu_active_sum": _encode_array(state.per_mu_active_sum),
        "rng": {
            "bit_generator": rng_state["bit_generator"],
            "state": {"counter": [int(x) for x in rng_state["state"]["counter"]],
                      "key": [int(x) for x in rng_state["state"]["key"]]},
            "buffer": [int(x) for x in rng_state["buffer"]],
            "buffer_pos": int(rng_state["buffer_pos"]),
            "has_uint32": int(rng_state["has_uint32"]),
            "uinteger": int(rng_state["uinteger"]),
        },
    }
    return json.dumps(blob)


def load_state(blob: str) -> GameState:
    """Rebuild a GameState from save_state output."""
    d = json.loads(blob)
    if d.get("version") != SNAPSHOT_VERSION:
        raise ConfigurationError(f"unsupported snapshot version {d.get('version')}")
    book = StrategyBook(
        speculator_strategies=_decode_array(d["speculator_strategies"]),
        producer_aggregate=_decode_array(d["producer_aggregate"]),
        n_producers=d["n_producers"],
    )
    rng = np.random.Generator(np.random.Philox())
    rng.bit_generator.state = {
        "bit_generator": d["rng"]["bit_generator"],
        "state": {"counter": np.array(d["rng"]["state"]["counter"], dtype=np.uint64),
                  "key": np.array(d["rng"]["state"]["key"], dtype=np.uint64)},
        "buffer": np.array(d["rng"]["buffer"], dtype=np.uint64),
        "buffer_pos": d["rng"]["buffer_pos"],
        "has_uint32": d["rng"]["has_uint32"],
        "uinteger": d["rng"]["uinteger"],
    }
    return GameState(
        book=book,
        scores=_decode_array(d["scores"]),
        active=_decode_array(d["active"]),
        per_mu_active_sum=_decode_array(d["per_mu_active_sum"]),
        t=d["t"],
        rng=rng,
    )
