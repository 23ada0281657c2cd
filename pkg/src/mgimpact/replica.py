"""Closed-form stationary-state theory for the game and the meta-order response.

Everything here is a pure function of the control densities (speculators and
producers per pattern).  The saddle-point system is reduced to one
transcendental equation in the variable ``zeta``; once ``zeta`` is known, the
susceptibility ``chi``, the activity overlap, and the predictability density
follow in closed form, as do the meta-order predictions (saturation shift,
permanent impact, execution-cost ratio from kernel moments).

Conventions: ``n_s`` and ``n_p`` are speculators and producers per pattern,
``chi`` is the integrated response of agent activity to strategy
perturbations, and ``rho = 1/(1+chi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import SymmetricPhaseError, UndefinedRatioError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Below this point the three-term closed form of `self_overlap` loses ~6
# digits to cancellation; the Taylor series is exact to ~1e-21 there.
_SERIES_CUTOFF = 1e-3


def self_overlap(zeta: float) -> float:
    """Stationary mean-squared activity per speculator, as a function of zeta.

    Continuous and strictly decreasing on (0, inf), with limits 1/2 at 0+
    and 0 at infinity.
    """
    if zeta <= 0.0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    if zeta < _SERIES_CUTOFF:
        return 0.5 - 2.0 * zeta / (3.0 * _SQRT2PI) + zeta**3 / (15.0 * _SQRT2PI) \
            - zeta**5 / (140.0 * _SQRT2PI)
    return (-math.exp(-zeta * zeta / 2.0) / (_SQRT2PI * zeta)
            + math.erf(zeta / _SQRT2) / (2.0 * zeta * zeta)
            + math.erfc(zeta / _SQRT2) / 2.0)


def _saddle_residual(zeta: float, n_s: float, n_p: float) -> float:
    return n_s * self_overlap(zeta) - 1.0 / (zeta * zeta) + n_p


def solve_zeta(n_s: float, n_p: float) -> float:
    """Solve the reduced saddle-point equation for zeta.

    Only valid below the critical speculator density; beyond it the
    susceptibility has no finite value and SymmetricPhaseError is raised.
    """
    if n_s <= 0.0 or n_p <= 0.0:
        raise ValueError("densities must be positive")
    # residual goes to -inf as zeta -> 0+ and to n_p > 0 as zeta -> inf
    zeta = brentq(_saddle_residual, 1e-8, 1e8, args=(n_s, n_p),
                  xtol=1e-15, rtol=8.9e-16, maxiter=200)
    resid = _saddle_residual(zeta, n_s, n_p)
    if abs(resid) > 1e-12 * max(1.0, n_p):
        raise ArithmeticError(f"saddle solve did not converge: residual {resid:.3e}")
    if 2.0 - n_s * math.erf(zeta / _SQRT2) <= 0.0:
        raise SymmetricPhaseError(
            f"n_s={n_s} is at or beyond the critical density for n_p={n_p}; "
            "no finite-susceptibility solution")
    return zeta


def susceptibility(zeta: float, n_s: float) -> float:
    """Integrated response of agent activity; +inf at and beyond criticality."""
    if zeta <= 0.0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    num = n_s * math.erf(zeta / _SQRT2)
    den = 2.0 - num
    if den <= 0.0:
        return math.inf
    return num / den


@dataclass(frozen=True)
class ReplicaSolution:
    """Bundle of stationary-state observables at one point (n_s, n_p).

    overlap    -- mean-squared stationary activity per speculator, in [0, 1/2]
    chi        -- susceptibility (finite in the predictable phase)
    rho        -- 1/(1+chi)
    field_var  -- variance of the effective local field at the saddle
    h_per_ns   -- predictability density; zero at and beyond criticality
    """
    n_s: float
    n_p: float
    zeta: float
    chi: float
    overlap: float
    rho: float
    field_var: float
    h_per_ns: float

    def as_dict(self) -> dict:
        return {"ns": self.n_s, "np": self.n_p, "zeta": self.zeta,
                "chi": self.chi, "G": self.overlap, "rho": self.rho,
                "R": self.field_var, "H_per_Ns": self.h_per_ns}


def solve(n_s: float, n_p: float) -> ReplicaSolution:
    """Solve the full saddle-point system in the predictable phase."""
    zeta = solve_zeta(n_s, n_p)
    chi = susceptibility(zeta, n_s)
    G = self_overlap(zeta)
    rho = 1.0 / (1.0 + chi)
    R = (n_p / n_s + G) / (1.0 + chi) ** 2
    h_per_ns = (n_p + n_s * G) * (1.0 - 0.5 * n_s * math.erf(zeta / _SQRT2)) ** 2
    return ReplicaSolution(n_s=n_s, n_p=n_p, zeta=zeta, chi=chi, overlap=G,
                           rho=rho, field_var=R, h_per_ns=h_per_ns)


def _critical_residual(zeta: float, n_p: float) -> float:
    # substitute n_s = 2/erf(zeta/sqrt2) (diverging chi) into the saddle equation
    n_s = 2.0 / math.erf(zeta / _SQRT2)
    return n_s * self_overlap(zeta) - 1.0 / (zeta * zeta) + n_p


def critical_ns(n_p: float) -> float:
    """Critical speculator density above which the market becomes unpredictable."""
    if n_p <= 0.0:
        raise ValueError("n_p must be positive")
    zeta_c = brentq(_critical_residual, 1e-6, 50.0, args=(n_p,),
                    xtol=1e-15, rtol=8.9e-16, maxiter=200)
    n_s_star = 2.0 / math.erf(zeta_c / _SQRT2)
    r1 = 0.5 * n_s_star * math.erf(zeta_c / _SQRT2) - 1.0
    r2 = _saddle_residual(zeta_c, n_s_star, n_p)
    if abs(r1) > 1e-10 or abs(r2) > 1e-10:
        raise ArithmeticError(
            f"critical-point solve residuals too large: {r1:.3e}, {r2:.3e}")
    return n_s_star


def saturation_shift(h: float, chi: float) -> float:
    """Stationary shift of the mean excess demand under a persistent order h."""
    if chi < 0.0:
        raise ValueError("chi must be nonnegative")
    return h / (1.0 + chi)


def permanent_impact_theory(h: float, T: int, P: int, chi: float) -> float:
    """Predicted permanent log-price impact of an order of size h*T."""
    if chi < 0.0:
        raise ValueError("chi must be nonnegative")
    return h * T / (P * (1.0 + chi))


def kappa_moments(tau: np.ndarray, kr: np.ndarray, chi: float,
                  T: int, P: int, m: int) -> float:
    """m-th moment of the full response kernel over one execution window.

    The kernel is the singular weight (1+chi) at lag zero minus chi times the
    regular part ``kr`` sampled on the lag grid ``tau`` (lags in units of P
    steps).  The singular part contributes only to m = 0.  The regular part
    is integrated by the trapezoid rule on the empirical grid; lags beyond
    the grid are treated as fully decayed.
    """
    if m not in (0, 1, 2):
        raise ValueError(f"moment order must be 0, 1 or 2, got {m}")
    tau = np.asarray(tau, dtype=float)
    kr = np.asarray(kr, dtype=float)
    if tau.ndim != 1 or tau.shape != kr.shape or tau.size < 2:
        raise ValueError("tau and kr must be matching 1-d grids with >= 2 points")
    t_tilde = T / P
    x = tau[tau < t_tilde] / t_tilde
    x = np.append(x, 1.0)
    kr_at = np.interp(x * t_tilde, tau, kr, right=0.0)
    integral = np.trapezoid(x**m * kr_at, x)
    singular = (1.0 + chi) * (P / T) if m == 0 else 0.0
    return singular - chi * integral


def cost_ratio_from_moments(kappa0: float, kappa1: float, kappa2: float) -> float:
    """Execution-cost ratio (mean impact during execution over final impact)."""
    den = kappa0 - kappa1
    if den == 0.0 or not math.isfinite(den):
        raise UndefinedRatioError("kappa0 == kappa1: ratio undefined")
    return 1.0 - 0.5 * (kappa0 - kappa2) / den


def cost_ratio_short_order(T: int, P: int, chi: float, kr0: float) -> float:
    """Leading small-duration approximation of the execution-cost ratio."""
    return 0.5 + (T / (12.0 * P)) * (chi / (1.0 + chi)) * kr0


def concavity_exponent(ratio: float) -> float:
    """Effective impact exponent alpha for which the cost ratio is 1/(1+alpha)."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    return 1.0 / ratio - 1.0
