"""Compiled inner loop of the game engine.

One function advances the state through a pre-drawn sequence of information
patterns.  Score updates are O(N_s) per step; the per-pattern active sums are
maintained incrementally and touched only when an agent's activity flag flips
(O(P) per flipped agent), which is what makes long runs affordable.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def advance_steps(strat_sp, strat_mu, prod_agg, scores, active, per_mu_sum,
                  mu_seq, ext_seq, out_a, out_nact):
    """Advance through len(mu_seq) steps, recording A(t) and the active count.

    strat_sp   -- (N_s, P) int8, one strategy row per speculator
    strat_mu   -- (P, N_s) int8, same table transposed for contiguous reads
    prod_agg   -- (P,) int64 producer aggregate per pattern
    scores, active, per_mu_sum -- mutable state arrays, updated in place
    ext_seq    -- (n,) float64 external demand added to each step's aggregate
    """
    n = mu_seq.shape[0]
    n_spec = scores.shape[0]
    n_pat = prod_agg.shape[0]
    nact = 0
    for i in range(n_spec):
        if active[i]:
            nact += 1
    for k in range(n):
        mu = mu_seq[k]
        a_tot = prod_agg[mu] + per_mu_sum[mu] + ext_seq[k]
        out_a[k] = a_tot
        out_nact[k] = nact
        row = strat_mu[mu]
        for i in range(n_spec):
            scores[i] -= row[i] * a_tot
            now_active = scores[i] >= 0.0
            if now_active != active[i]:
                active[i] = now_active
                sign = 1 if now_active else -1
                nact += sign
                srow = strat_sp[i]
                for m in range(n_pat):
                    per_mu_sum[m] += sign * srow[m]
