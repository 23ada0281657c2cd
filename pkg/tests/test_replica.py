"""Tests for the closed-form theory module.

High-precision reference values below were generated once with mpmath at 40
significant digits and frozen here; the code under test must reproduce them
with double-precision special functions.
"""

import math

import numpy as np
import pytest

from mgimpact import replica
from mgimpact.errors import SymmetricPhaseError, UndefinedRatioError

SQRT2 = math.sqrt(2.0)

# mpmath (mp.dps = 40) evaluations of the three-term overlap expression
OVERLAP_REFERENCE = {
    0.25: 0.4339224180324590358479,
    0.5: 0.3702567302934403553638,
    1.0: 0.2580292754808566502022,
    2.0: 0.1150671157045403794249,
    5.0: 0.01999997784160605716661,
    1e-3: 0.4997340385063285273919,
    5e-4: 0.4998670192431907080216,
}

# mpmath erf/erfc, used to confirm the stdlib special functions at 1e-15
ERF_REFERENCE = {
    0.1: (0.1124629160182848922033, 0.8875370839817151077967),
    0.5: (0.5204998778130465376827, 0.4795001221869534623173),
    1.0: (0.8427007929497148693412, 0.1572992070502851306588),
    2.0: (0.9953222650189527341621, 0.004677734981047265837931),
    3.0: (0.9999779095030014145586, 0.00002209049699858544137278),
}


def test_erf_stdlib_matches_high_precision_reference():
    for x, (e, ec) in ERF_REFERENCE.items():
        assert math.erf(x) == pytest.approx(e, abs=1e-15)
        assert math.erfc(x) == pytest.approx(ec, abs=1e-15)


class TestSelfOverlap:
    def test_reference_values(self):
        for zeta, ref in OVERLAP_REFERENCE.items():
            assert replica.self_overlap(zeta) == pytest.approx(ref, abs=1e-13)

    def test_limit_at_zero_is_half(self):
        assert replica.self_overlap(1e-10) == pytest.approx(0.5, abs=1e-9)

    def test_limit_at_infinity_is_zero(self):
        # tail behaves like 1/(2 zeta^2)
        assert replica.self_overlap(50.0) == pytest.approx(1.0 / (2 * 50.0**2), rel=1e-3)
        assert replica.self_overlap(1e8) == pytest.approx(0.0, abs=1e-15)

    def test_series_closed_form_switchover_continuous(self):
        # both branches evaluated just around the cutoff agree to 1e-10
        for zeta in [0.9e-3, 0.999e-3, 1.001e-3, 1.1e-3]:
            closed = (-math.exp(-zeta**2 / 2) / (math.sqrt(2 * math.pi) * zeta)
                      + math.erf(zeta / SQRT2) / (2 * zeta**2)
                      + math.erfc(zeta / SQRT2) / 2)
            assert replica.self_overlap(zeta) == pytest.approx(closed, abs=1e-10)

    def test_strictly_decreasing_with_range(self):
        grid = np.logspace(-4, 2, 2000)
        vals = np.array([replica.self_overlap(z) for z in grid])
        assert np.all(np.diff(vals) < 0)
        assert np.all(vals > 0.0)
        assert np.all(vals < 0.5)

    def test_rejects_nonpositive_argument(self):
        with pytest.raises(ValueError):
            replica.self_overlap(0.0)
        with pytest.raises(ValueError):
            replica.self_overlap(-1.0)


def _scan_bisect_oracle(n_s, n_p, lo=1e-6, hi=1e3, n_scan=20000):
    """Independent root finder: log-grid sign scan followed by plain bisection."""
    grid = np.logspace(math.log10(lo), math.log10(hi), n_scan)
    res = np.array([replica._saddle_residual(z, n_s, n_p) for z in grid])
    (idx,) = np.nonzero(np.diff(np.sign(res)) != 0)
    assert len(idx) == 1, "expected exactly one sign change"
    a, b = grid[idx[0]], grid[idx[0] + 1]
    for _ in range(200):
        m = 0.5 * (a + b)
        if replica._saddle_residual(m, n_s, n_p) < 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


class TestSolveZeta:
    def test_small_ns_limit(self):
        # with vanishing speculator density the equation reduces to 1/zeta^2 = n_p
        assert replica.solve_zeta(1e-9, 1.0) == pytest.approx(1.0, abs=1e-6)

    def test_residual_below_tolerance(self):
        zeta = replica.solve_zeta(1.0, 1.0)
        assert abs(replica._saddle_residual(zeta, 1.0, 1.0)) < 1e-12

    def test_against_scan_bisect_oracle(self):
        for n_s in [0.5, 1.0, 2.0, 4.0]:
            zeta = replica.solve_zeta(n_s, 1.0)
            oracle = _scan_bisect_oracle(n_s, 1.0)
            assert zeta == pytest.approx(oracle, rel=1e-10)

    def test_root_unique_on_log_grid(self):
        for n_s in [0.5, 1.0, 2.0, 4.0]:
            grid = np.logspace(-6, 3, 5000)
            res = np.array([replica._saddle_residual(z, n_s, 1.0) for z in grid])
            assert np.count_nonzero(np.diff(np.sign(res)) != 0) == 1

    def test_stable_under_bracket_perturbation(self):
        from scipy.optimize import brentq
        zeta = replica.solve_zeta(1.0, 1.0)
        for lo, hi in [(0.5 * zeta, 2.0 * zeta), (0.9 * zeta, 1.5 * zeta)]:
            alt = brentq(replica._saddle_residual, lo, hi, args=(1.0, 1.0),
                         xtol=1e-15, rtol=8.9e-16)
            assert alt == pytest.approx(zeta, rel=1e-13)

    def test_symmetric_phase_refused(self):
        with pytest.raises(SymmetricPhaseError):
            replica.solve_zeta(5.0, 1.0)


class TestSusceptibility:
    def test_vanishes_with_ns(self):
        zeta = replica.solve_zeta(1e-6, 1.0)
        assert replica.susceptibility(zeta, 1e-6) == pytest.approx(0.0, abs=1e-5)

    def test_diverges_at_boundary(self):
        # (n_s/2)*erf(zeta/sqrt2) >= 1 has no finite susceptibility
        zeta = 1.0
        n_s = 2.0 / math.erf(zeta / SQRT2)
        assert replica.susceptibility(zeta, n_s * (1.0 + 1e-9)) == math.inf
        assert replica.susceptibility(zeta, n_s * 1.01) == math.inf

    def test_closure_identity(self):
        # (1+chi) * (1 - (n_s/2) erf(zeta/sqrt2)) = 1 at every solved point
        for n_s in [0.25, 0.5, 1.0, 2.0, 3.0, 4.0]:
            zeta = replica.solve_zeta(n_s, 1.0)
            chi = replica.susceptibility(zeta, n_s)
            lhs = (1.0 + chi) * (1.0 - 0.5 * n_s * math.erf(zeta / SQRT2))
            assert lhs == pytest.approx(1.0, abs=1e-12)


class TestSolveBundle:
    def test_predictability_formulas_agree(self):
        # product form and rho-squared form are one identity apart
        for n_s in [0.5, 1.0, 2.0, 3.0]:
            sol = replica.solve(n_s, 1.0)
            alt = (sol.n_p + sol.overlap * sol.n_s) / (1.0 + sol.chi) ** 2
            assert sol.h_per_ns == pytest.approx(alt, abs=1e-12)

    def test_rho_is_inverse_response(self):
        sol = replica.solve(1.0, 1.0)
        assert sol.rho * (1.0 + sol.chi) == pytest.approx(1.0, abs=1e-15)

    def test_predictability_and_chi_at_phase_boundary(self):
        n_s_star = replica.critical_ns(1.0)
        h_prev = math.inf
        chi_prev = 0.0
        for eps in [1e-1, 1e-2, 1e-3, 1e-4]:
            sol = replica.solve(n_s_star * (1.0 - eps), 1.0)
            assert sol.h_per_ns < h_prev
            assert sol.chi > chi_prev
            h_prev, chi_prev = sol.h_per_ns, sol.chi
        assert h_prev < 1e-6
        assert chi_prev > 1e2


class TestCriticalNs:
    def test_matches_reported_value(self):
        assert replica.critical_ns(1.0) == pytest.approx(4.15, abs=0.01)

    def test_monotone_in_producer_density(self):
        vals = [replica.critical_ns(n_p) for n_p in (0.5, 1.0, 2.0)]
        assert vals[0] < vals[1] < vals[2]

    def test_susceptibility_infinite_at_returned_point(self):
        n_p = 1.0
        n_s_star = replica.critical_ns(n_p)
        zeta_c = brentq_zeta_at_boundary(n_s_star)
        assert replica.susceptibility(zeta_c, n_s_star) == math.inf


def brentq_zeta_at_boundary(n_s_star):
    # invert erf(zeta/sqrt2) = 2/n_s_star
    from scipy.special import erfinv
    return float(erfinv(2.0 / n_s_star)) * SQRT2


class TestMetaOrderPredictions:
    def test_saturation_shift_limits(self):
        assert replica.saturation_shift(1.5, 0.0) == 1.5
        assert replica.saturation_shift(1.5, math.inf) == 0.0

    def test_permanent_impact_arithmetic(self):
        assert replica.permanent_impact_theory(1.0, 100, 100, 0.0) == pytest.approx(1.0)
        chi = replica.solve(1.0, 1.0).chi
        assert replica.permanent_impact_theory(1.0, 5 * 128, 128, chi) == \
            pytest.approx(5.0 / (1.0 + chi))


# --- kernel moments and execution cost -------------------------------------

def _exp_kernel(tau_r, tau_max=60.0, n=60001):
    tau = np.linspace(0.0, tau_max, n)
    return tau, np.exp(-tau / tau_r) / tau_r


class TestKappaMoments:
    def test_pure_delta(self):
        tau = np.linspace(0.0, 10.0, 101)
        kr = np.zeros_like(tau)
        P, T = 128, 640
        assert replica.kappa_moments(tau, kr, 0.0, T, P, 0) == pytest.approx(P / T)
        assert replica.kappa_moments(tau, kr, 0.0, T, P, 1) == 0.0
        assert replica.kappa_moments(tau, kr, 0.0, T, P, 2) == 0.0

    def test_uniform_kernel_symbolic(self):
        # K_r = 1 on [0,1], T = P: integral of x^m is 1/(m+1)
        tau = np.linspace(0.0, 1.0, 20001)
        kr = np.ones_like(tau)
        chi = 0.7
        P = T = 128
        assert replica.kappa_moments(tau, kr, chi, T, P, 0) == \
            pytest.approx((1 + chi) - chi, abs=1e-6)
        assert replica.kappa_moments(tau, kr, chi, T, P, 1) == \
            pytest.approx(-chi / 2.0, abs=1e-6)
        assert replica.kappa_moments(tau, kr, chi, T, P, 2) == \
            pytest.approx(-chi / 3.0, abs=1e-6)

    def test_long_order_scaling(self):
        # for T >> P*tau_r the m-th moment scales like (tau_r P/T)^(m+1)/tau_r
        tau, kr = _exp_kernel(tau_r=0.5)
        chi, P = 1.0, 128
        for m in (1, 2):
            k_a = replica.kappa_moments(tau, kr, chi, 40 * P, P, m)
            k_b = replica.kappa_moments(tau, kr, chi, 80 * P, P, m)
            assert k_a / k_b == pytest.approx(2.0 ** (m + 1), rel=0.05)

    def test_rejects_bad_moment_order(self):
        tau = np.linspace(0.0, 1.0, 11)
        with pytest.raises(ValueError):
            replica.kappa_moments(tau, np.zeros_like(tau), 0.0, 128, 128, 3)


def _direct_ratio_oracle(tau_r, chi, t_tilde, n=200001):
    """Execution-cost ratio by direct quadrature of the step-response trajectory.

    Independent of the moment formula: builds the mean excess-demand curve for
    an exponential regular kernel, integrates it twice, and takes the ratio.
    """
    tau = np.linspace(0.0, t_tilde, n)
    cum_kr = 1.0 - np.exp(-tau / tau_r)
    excess = 1.0 - (chi / (1.0 + chi)) * cum_kr
    delta = np.concatenate(([0.0], np.cumsum(0.5 * (excess[1:] + excess[:-1]) * np.diff(tau))))
    mean_delta = np.trapezoid(delta, tau) / t_tilde
    return mean_delta / delta[-1], delta[-1]


class TestCostRatio:
    def test_pure_delta_is_exactly_half(self):
        P, T = 128, 640
        k0 = (1.0 + 0.0) * P / T
        assert replica.cost_ratio_from_moments(k0, 0.0, 0.0) == pytest.approx(0.5, abs=1e-12)

    def test_equal_first_and_second_moment_gives_half(self):
        assert replica.cost_ratio_from_moments(3.0, 1.2, 1.2) == pytest.approx(0.5)

    def test_exponential_kernel_vs_direct_integration(self):
        tau_r, chi, P = 1.0, 1.5, 128
        tau, kr = _exp_kernel(tau_r)
        for T in (128, 640, 1280):
            kappas = [replica.kappa_moments(tau, kr, chi, T, P, m) for m in (0, 1, 2)]
            via_moments = replica.cost_ratio_from_moments(*kappas)
            direct, delta_T = _direct_ratio_oracle(tau_r, chi, T / P)
            assert via_moments == pytest.approx(direct, abs=1e-6)
            # intermediate identity: Delta(T) = h*Ttilde^2*(kappa0-kappa1)/(1+chi)
            t_tilde = T / P
            assert delta_T == pytest.approx(
                t_tilde**2 * (kappas[0] - kappas[1]) / (1.0 + chi), abs=1e-6)

    def test_regular_mass_raises_ratio_above_half(self):
        tau, kr = _exp_kernel(1.0)
        P, T = 128, 128
        prev = 0.5
        for chi in (0.5, 1.0, 2.0):
            kappas = [replica.kappa_moments(tau, kr, chi, T, P, m) for m in (0, 1, 2)]
            ratio = replica.cost_ratio_from_moments(*kappas)
            assert ratio > prev
            prev = ratio

    def test_undefined_ratio_raises(self):
        with pytest.raises(UndefinedRatioError):
            replica.cost_ratio_from_moments(1.0, 1.0, 0.3)


class TestShortOrderRatio:
    def test_chi_zero_is_half(self):
        assert replica.cost_ratio_short_order(64, 128, 0.0, 1.0) == 0.5

    def test_matches_moment_formula_to_second_order(self):
        tau_r, chi, P = 1.0, 1.5, 128
        tau, kr = _exp_kernel(tau_r)
        for T in (P // 10, P // 5):
            kappas = [replica.kappa_moments(tau, kr, chi, T, P, m) for m in (0, 1, 2)]
            full = replica.cost_ratio_from_moments(*kappas)
            approx = replica.cost_ratio_short_order(T, P, chi, kr[0])
            assert abs(full - approx) < 1.0 * (T / P) ** 2

    def test_above_half_for_positive_chi_and_kernel(self):
        assert replica.cost_ratio_short_order(64, 128, 1.0, 2.0) > 0.5


class TestConcavityExponent:
    def test_linear_impact(self):
        assert replica.concavity_exponent(0.5) == pytest.approx(1.0)

    def test_square_root_impact(self):
        assert replica.concavity_exponent(2.0 / 3.0) == pytest.approx(0.5)

    def test_empirical_band(self):
        assert replica.concavity_exponent(0.6) == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            replica.concavity_exponent(1.0)
        with pytest.raises(ValueError):
            replica.concavity_exponent(0.0)
