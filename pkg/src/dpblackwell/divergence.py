"""Divergences, dominance verdicts and metric structure between mechanisms.

The central quantity is the one-sided divergence between two mechanisms:
the smallest shift kappa >= 0 such that translating the first trade-off
curve by (-kappa, -kappa) moves it below the second everywhere.  It equals
max_pi(R_min(pi) - R~_min(pi)) over the Bayes error curves, which is how it
is computed here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .curves import (
    DEFAULT_GRID_SIZE,
    BayesErrorCurve,
    TradeoffCurve,
    bayes_error_at,
    tv_and_advantage,
)
from .exceptions import CurveValidationError, NoFixedPoint

# slack for exact piecewise-linear checks; covers arithmetic roundoff only
_FP_TOL = 1e-12


def delta_divergence(
    f: TradeoffCurve, g: TradeoffCurve, grid_size: int = DEFAULT_GRID_SIZE
) -> float:
    """One-sided divergence max_pi(R_f(pi) - R_g(pi)), clamped at zero."""
    if grid_size < 3:
        raise ValueError("grid_size must be >= 3")
    pis = np.linspace(0.0, 1.0, grid_size)
    gap = bayes_error_at(f, pis) - bayes_error_at(g, pis)
    return float(max(0.0, gap.max()))


def delta_from_bayes_curves(rf: BayesErrorCurve, rg: BayesErrorCurve) -> float:
    """One-sided divergence from two Bayes error curves on a shared grid."""
    if rf.grid_size != rg.grid_size or np.any(rf.pis != rg.pis):
        raise ValueError("Bayes error curves must share the same prior grid")
    return float(max(0.0, np.max(rf.risks - rg.risks)))


def symmetrised_delta(
    f: TradeoffCurve, g: TradeoffCurve, grid_size: int = DEFAULT_GRID_SIZE
) -> float:
    """Sup-norm distance between the Bayes error curves (a metric)."""
    if grid_size < 3:
        raise ValueError("grid_size must be >= 3")
    pis = np.linspace(0.0, 1.0, grid_size)
    gap = bayes_error_at(f, pis) - bayes_error_at(g, pis)
    return float(np.max(np.abs(gap)))


@dataclass(frozen=True)
class DominanceVerdict:
    """Both one-sided divergences plus derived summary fields."""

    delta_ab: float
    delta_ba: float
    symmetric: float
    universal: bool
    tolerance: float
    grid_size: int

    def to_json_obj(self) -> dict:
        return {
            "delta_ab": self.delta_ab,
            "delta_ba": self.delta_ba,
            "symmetric": self.symmetric,
            "universal": self.universal,
            "tolerance": self.tolerance,
            "grid_size": self.grid_size,
        }


def dominance_verdict(
    f: TradeoffCurve, g: TradeoffCurve, grid_size: int = DEFAULT_GRID_SIZE
) -> DominanceVerdict:
    """Full two-sided comparison of the curves at the given grid resolution."""
    pis = np.linspace(0.0, 1.0, grid_size)
    gap = bayes_error_at(f, pis) - bayes_error_at(g, pis)
    d_ab = float(max(0.0, gap.max()))
    d_ba = float(max(0.0, -gap.min()))
    tolerance = 1.0 / (grid_size - 1)
    return DominanceVerdict(
        delta_ab=d_ab,
        delta_ba=d_ba,
        symmetric=max(d_ab, d_ba),
        universal=bool(min(d_ab, d_ba) <= tolerance),
        tolerance=tolerance,
        grid_size=grid_size,
    )


# ---------------------------------------------------------------------------
# approximate dominance clause checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClauseCheck:
    """Outcome of the three equivalent approximate-dominance criteria."""

    tradeoff_clause: bool
    profile_clause: bool
    bayes_clause: bool

    @property
    def all_hold(self) -> bool:
        return self.tradeoff_clause and self.profile_clause and self.bayes_clause

    @property
    def agree(self) -> bool:
        return self.tradeoff_clause == self.profile_clause == self.bayes_clause


def _conjugate_at(f: TradeoffCurve, ts: np.ndarray) -> np.ndarray:
    """f*(-t) = max_alpha(-t*alpha - f(alpha)), exact on the node set."""
    k = np.searchsorted(f.slopes, -ts, side="left")
    return -ts * f.alphas[k] - f.betas[k]


def _bayes_breakpoints(f: TradeoffCurve) -> np.ndarray:
    # R_min is piecewise linear in pi with kinks where the optimal node
    # switches, i.e. at pi = s / (s - 1) for each segment slope s <= 0
    s = f.slopes
    return s / (s - 1.0)


def check_approx_dominance(f: TradeoffCurve, g: TradeoffCurve, d: float) -> ClauseCheck:
    """Evaluate the three equivalent shifted-dominance criteria at shift d.

    All three checks are exact for the piecewise-linear curves: suprema are
    taken over the full breakpoint sets rather than a sampling grid.

    1. f(alpha + d) - d <= g(alpha) for all alpha in [0, 1];
    2. delta_f(eps) + d*(1 + e^eps) >= delta_g(eps) for all real eps;
    3. R_f(pi) - R_g(pi) <= d for all pi in [0, 1].
    """
    if not (0.0 <= d <= 1.0):
        raise ValueError("shift d must lie in [0, 1]")

    # clause 1: breakpoints of alpha -> f(alpha + d) - g(alpha)
    alphas = np.concatenate([g.alphas, f.alphas - d, [0.0, 1.0]])
    alphas = np.unique(np.clip(alphas, 0.0, 1.0))
    viol1 = np.max(f(alphas + d) - d - g(alphas))
    clause1 = bool(viol1 <= _FP_TOL)

    # clause 2: h(t) = f*(-t) - g*(-t) + d*(1 + t) >= 0 for all t > 0;
    # h is piecewise linear in t with kinks at the segment slopes
    ts = np.unique(np.concatenate([-f.slopes, -g.slopes]))
    ts = ts[ts > 0.0]
    sentinel = 10.0 * ts[-1] + 10.0 if ts.size else 10.0
    ts = np.append(ts, sentinel)
    h = _conjugate_at(f, ts) - _conjugate_at(g, ts) + d * (1.0 + ts)
    clause2 = bool(h.min() >= -_FP_TOL)

    # clause 3: sup over the union of both curves' Bayes kinks
    pis = np.concatenate([_bayes_breakpoints(f), _bayes_breakpoints(g), [0.0, 0.5, 1.0]])
    pis = np.unique(np.clip(pis, 0.0, 1.0))
    viol3 = np.max(bayes_error_at(f, pis) - bayes_error_at(g, pis))
    clause3 = bool(viol3 <= d + _FP_TOL)

    return ClauseCheck(clause1, clause2, clause3)


# ---------------------------------------------------------------------------
# extremal comparisons
# ---------------------------------------------------------------------------


def divergence_from_perfect_privacy(f: TradeoffCurve) -> float:
    """Divergence of the perfectly private reference to ``f``; equals half
    the total variation distance (half the advantage, half delta(0))."""
    return 0.5 * tv_and_advantage(f)


def divergence_to_blatant_nonprivacy(f: TradeoffCurve, tol: float = 1e-10) -> float:
    """Divergence of ``f`` to the blatantly non-private reference.

    Equals the fixed point alpha* = f(alpha*), found by bisection on the
    increasing function alpha - f(alpha), and also equals the minimax Bayes
    error for symmetric curves.
    """
    lo, hi = 0.0, 1.0
    h_lo = lo - f(lo)
    if h_lo > tol:
        raise NoFixedPoint("curve has no crossing of alpha = f(alpha)")
    if h_lo >= 0.0:
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid - f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# hyper-prior weighted divergence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HyperPrior:
    """A defender's distribution over the adversary's prior pi."""

    kind: str
    density: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def uniform(cls) -> "HyperPrior":
        return cls("uniform", lambda pis: np.ones_like(pis))

    @classmethod
    def jeffreys(cls) -> "HyperPrior":
        """Beta(1/2, 1/2): an uninformative choice, diverging at the ends."""
        return cls("jeffreys", lambda pis: 1.0 / (np.pi * np.sqrt(pis * (1.0 - pis))))

    @classmethod
    def uquadratic(cls) -> "HyperPrior":
        """U-quadratic on [0, 1]: mass concentrated near informed priors."""
        return cls("uquadratic", lambda pis: 12.0 * (pis - 0.5) ** 2)

    @classmethod
    def tabulated(cls, density: Callable, mass_tol: float = 1e-6) -> "HyperPrior":
        total, _ = quad(lambda x: float(density(np.asarray(x))), 0.0, 1.0, limit=200)
        if abs(total - 1.0) > mass_tol:
            raise CurveValidationError(
                f"tabulated hyper-prior integrates to {total:.8f}, not 1"
            )
        return cls("tabulated", density)

    @classmethod
    def by_name(cls, name: str) -> "HyperPrior":
        try:
            return {"uniform": cls.uniform, "jeffreys": cls.jeffreys, "uquadratic": cls.uquadratic}[
                name.lower()
            ]()
        except KeyError:
            raise ValueError(f"unknown hyper-prior {name!r}") from None


def weighted_delta_divergence(
    f: TradeoffCurve,
    g: TradeoffCurve,
    prior: HyperPrior,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> float:
    """max_pi Psi(pi) * (R_f(pi) - R_g(pi)), clamped at zero.

    The prior grid is open (half-step offset): densities such as Jeffreys
    diverge at the endpoints while the Bayes gap vanishes there, and the
    weighted product extends continuously to zero.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be >= 3")
    pis = (np.arange(grid_size) + 0.5) / grid_size
    weights = prior.density(pis)
    if np.any(weights < 0.0):
        raise ValueError("hyper-prior density must be non-negative")
    gap = bayes_error_at(f, pis) - bayes_error_at(g, pis)
    return float(max(0.0, np.max(weights * gap)))


# ---------------------------------------------------------------------------
# Levy distance between the induced CDFs
# ---------------------------------------------------------------------------


def levy_distance(f: TradeoffCurve, g: TradeoffCurve, tol: float = 1e-9) -> float:
    """Levy distance between the CDFs x -> f(1 - x) and x -> g(1 - x).

    Computed by bisection on the shift lambda with the sandwich test
    F(x - lambda) - lambda <= G(x) <= F(x + lambda) + lambda, evaluated
    exactly on the breakpoint set of the piecewise-linear CDFs.  Agrees
    with the symmetrised divergence.
    """

    def cdf_f(x):
        return f(1.0 - np.asarray(x))

    def cdf_g(x):
        return g(1.0 - np.asarray(x))

    def sandwich_holds(lam: float) -> bool:
        knots = np.concatenate(
            [
                1.0 - g.alphas,
                1.0 - f.alphas + lam,
                1.0 - f.alphas - lam,
                np.array([0.0, 1.0, lam, -lam, 1.0 - lam, 1.0 + lam]),
            ]
        )
        # jump points of the extended CDFs need a two-sided look
        knots = np.unique(np.concatenate([knots, knots - 1e-12, knots + 1e-12]))
        gx = cdf_g(knots)
        if np.any(cdf_f(knots - lam) - lam > gx + _FP_TOL):
            return False
        if np.any(gx > cdf_f(knots + lam) + lam + _FP_TOL):
            return False
        return True

    lo, hi = 0.0, 1.0
    if sandwich_holds(0.0):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sandwich_holds(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
