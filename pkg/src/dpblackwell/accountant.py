"""Numerical composition accounting for subsampled Gaussian mechanisms.

Mechanisms are represented by discretised privacy loss distributions (PLDs)
on an integer-indexed uniform loss grid.  A ``DiscretePLD`` stores the
distribution of log(upper/lower) under the upper distribution of one
adjacency direction; the same atoms re-weighted by e^(-loss) give the dual
view under the lower distribution, so one array per direction carries both
one-sided loss laws.

Self-composition convolves the loss grid by repeated squaring, so millions
of steps cost ~log2(steps) FFT convolutions.  With pessimistic (ceiling)
rounding every reported delta upper-bounds the true value; truncated
probability mass is tracked and added to delta, keeping the bound certified.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import ndtr, ndtri

from .curves import (
    DEFAULT_GRID_SIZE,
    BayesErrorCurve,
    PrivacyProfile,
    TradeoffCurve,
    tradeoff_from_profile,
)
from .divergence import delta_from_bayes_curves
from .exceptions import AccumulatedErrorExceeded, BracketFailure, WindowTooSmall

DEFAULT_GRID_SPACING = 1e-3
DEFAULT_TAIL_MASS = 1e-12
_TRIM_MASS = 1e-15

PESSIMISTIC = "pessimistic"
MIDPOINT = "midpoint"


@dataclass(frozen=True, eq=False)
class DiscretePLD:
    """Privacy loss distribution on the uniform grid {k * spacing}.

    ``masses[i]`` is the upper-distribution probability of loss value
    ``(origin + i) * spacing``.  ``truncation_mass`` is the probability
    dropped outside the grid window; pessimistic evaluation treats it as
    sitting at loss +infinity.
    """

    origin: int
    spacing: float
    masses: np.ndarray
    truncation_mass: float
    rounding: str

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float)
        if masses.ndim != 1 or masses.size == 0:
            raise ValueError("masses must be a non-empty 1-D array")
        if self.spacing <= 0.0:
            raise ValueError("spacing must be positive")
        if self.rounding not in (PESSIMISTIC, MIDPOINT):
            raise ValueError(f"unknown rounding mode {self.rounding!r}")
        masses.flags.writeable = False
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "origin", int(self.origin))
        object.__setattr__(self, "truncation_mass", float(self.truncation_mass))

    @property
    def loss_grid(self) -> np.ndarray:
        return (self.origin + np.arange(self.masses.size)) * self.spacing

    @property
    def pessimistic(self) -> bool:
        return self.rounding == PESSIMISTIC

    def lower_masses(self) -> np.ndarray:
        """The same atoms weighted by the lower distribution, m * e^(-loss)."""
        with np.errstate(divide="ignore"):
            logs = np.where(self.masses > 0.0, np.log(self.masses), -np.inf)
        # a single cell's lower mass cannot exceed 1; the cap guards against
        # residual convolution noise at deeply negative losses
        return np.exp(np.minimum(logs - self.loss_grid, 0.0))


class PldPair(NamedTuple):
    """The two adjacency directions of one mechanism."""

    add: DiscretePLD
    remove: DiscretePLD


# ---------------------------------------------------------------------------
# subsampled Gaussian discretisation
# ---------------------------------------------------------------------------


def _mixture_loss(x: np.ndarray, sigma: float, p: float) -> np.ndarray:
    # log(Q/P)(x) for P = N(0, sigma^2), Q = (1-p) P + p N(1, sigma^2)
    expo = (2.0 * x - 1.0) / (2.0 * sigma * sigma)
    return np.logaddexp(np.log1p(-p) if p < 1.0 else -np.inf, np.log(p) + expo)


def _x_of_loss(c: np.ndarray, sigma: float, p: float) -> np.ndarray:
    # inverse of _mixture_loss; arguments must exceed log(1-p)
    arg = np.expm1(c) + p  # = e^c - (1 - p), cancellation-free
    return 0.5 + sigma * sigma * (np.log(arg) - math.log(p))


def _loss_cdf_remove(c: np.ndarray, sigma: float, p: float) -> np.ndarray:
    # CDF of the loss under the mixture Q (upper = Q, lower = P)
    c = np.asarray(c, dtype=float)
    out = np.zeros_like(c)
    ok = np.expm1(c) + p > 0.0
    x = _x_of_loss(c[ok], sigma, p)
    out[ok] = (1.0 - p) * ndtr(x / sigma) + p * ndtr((x - 1.0) / sigma)
    return out


def _loss_cdf_add(c: np.ndarray, sigma: float, p: float) -> np.ndarray:
    # CDF of the loss -log(Q/P)(x) under the Gaussian P (upper = P, lower = Q)
    c = np.asarray(c, dtype=float)
    out = np.ones_like(c)
    ok = np.expm1(-c) + p > 0.0
    x = _x_of_loss(-c[ok], sigma, p)
    out[ok] = 1.0 - ndtr(x / sigma)
    return out


def _delta_remove(eps: np.ndarray, sigma: float, p: float) -> np.ndarray:
    # hockey-stick of order e^eps of the mixture Q to the Gaussian P
    eps = np.asarray(eps, dtype=float)
    out = 1.0 - np.exp(np.clip(eps, None, 0.0))
    ok = np.expm1(eps) + p > 0.0
    x = _x_of_loss(eps[ok], sigma, p)
    surv_p = ndtr(-x / sigma)
    surv_q = (1.0 - p) * surv_p + p * ndtr(-(x - 1.0) / sigma)
    out[ok] = surv_q - np.exp(eps[ok]) * surv_p
    return np.clip(out, 0.0, 1.0)


def _delta_add(eps: np.ndarray, sigma: float, p: float) -> np.ndarray:
    # hockey-stick of order e^eps of the Gaussian P to the mixture Q
    eps = np.asarray(eps, dtype=float)
    out = np.zeros_like(eps)
    ok = np.expm1(-eps) + p > 0.0
    x = _x_of_loss(-eps[ok], sigma, p)
    cdf_p = ndtr(x / sigma)
    cdf_q = (1.0 - p) * cdf_p + p * ndtr((x - 1.0) / sigma)
    out[ok] = cdf_p - np.exp(eps[ok]) * cdf_q
    return np.clip(out, 0.0, 1.0)


def _connect_dots(delta_fn, c_lo: float, c_hi: float, spacing: float) -> DiscretePLD:
    """Pessimistic discretisation that matches delta exactly on the grid.

    Atoms on the epsilon grid are recovered from second differences of the
    true hockey-stick curve, so the discrete pair's divergence equals the
    mechanism's at every grid point and upper-bounds it in between.  Unlike
    cell rounding, the loss mean is preserved to O(spacing^2), which keeps
    the bias of N-fold composition at O(N * spacing^2).
    """
    k_lo = math.floor(c_lo / spacing)
    k_hi = math.ceil(c_hi / spacing)
    n = k_hi - k_lo + 1
    if n > 200_000_000:
        raise WindowTooSmall(f"loss window needs {n} grid points; refusing")
    eps = (k_lo + np.arange(n)) * spacing
    deltas = delta_fn(eps)
    padded = np.concatenate([deltas, [0.0]])
    decay = math.exp(-spacing)
    # mass at eps_k from the second difference of delta around k
    masses = (padded[:-2] - (1.0 + decay) * padded[1:-1] + decay * padded[2:]) / (1.0 - decay)
    masses = np.clip(masses, 0.0, None)
    # residual low-loss mass sits at the bottom grid point (an up-rounding)
    bottom = max(0.0, 1.0 - float(masses.sum()) - float(deltas[-1]))
    masses = np.concatenate([[bottom], masses])
    truncation = float(deltas[-1])
    # exact unit mass; stencil roundoff otherwise compounds over compositions
    masses *= (1.0 - truncation) / masses.sum()
    return DiscretePLD(k_lo, spacing, masses, truncation, PESSIMISTIC)


def _discretise_cells(loss_cdf, c_lo: float, c_hi: float, spacing: float) -> DiscretePLD:
    # midpoint rounding of cell masses; diagnostics only, not one-sided
    k_lo = round(c_lo / spacing)
    k_hi = round(c_hi / spacing)
    n = k_hi - k_lo + 1
    if n > 200_000_000:
        raise WindowTooSmall(f"loss window needs {n} grid points; refusing")
    edges = (k_lo + 0.5 + np.arange(n)) * spacing
    cdf = loss_cdf(edges)
    masses = np.clip(np.diff(np.concatenate([[0.0], cdf])), 0.0, None)
    truncation = max(0.0, 1.0 - cdf[-1])
    masses *= (1.0 - truncation) / masses.sum()
    return DiscretePLD(k_lo, spacing, masses, truncation, MIDPOINT)


def sgm_pld(
    sigma: float,
    p: float,
    grid_spacing: float = DEFAULT_GRID_SPACING,
    *,
    rounding: str = PESSIMISTIC,
    tail_mass: float = DEFAULT_TAIL_MASS,
    window: Optional[Tuple[float, float]] = None,
) -> PldPair:
    """Discretised single-step PLD pair of the Poisson-subsampled Gaussian.

    The dominating pair is P = N(0, sigma^2) against the mixture
    Q = (1-p) N(0, sigma^2) + p N(1, sigma^2); both adjacency directions
    are discretised.

    Args:
      sigma: noise multiplier, > 0.
      p: sampling rate in (0, 1]; p = 1 gives the plain Gaussian pair.
      grid_spacing: loss grid step h.
      rounding: 'pessimistic' builds grid atoms whose hockey-stick curve
        matches the true one at every grid epsilon and upper-bounds it in
        between (certified, composition-stable); 'midpoint' rounds cell
        masses to the nearest grid point (diagnostics only).
      tail_mass: target bound for the out-of-window mass per direction.
      window: optional explicit (loss_lo, loss_hi); raises WindowTooSmall
        if it cannot achieve ``tail_mass`` truncation.

    Returns:
      PldPair with truncation_mass below ``tail_mass`` for the default window.
    """
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise ValueError("sigma must be finite and > 0")
    if not (0.0 < p <= 1.0):
        raise ValueError("sampling rate p must lie in (0, 1]")
    if grid_spacing <= 0.0:
        raise ValueError("grid_spacing must be positive")

    if window is None:
        # quantile window on the outcome axis covers both mixture components
        k_std = float(-ndtri(tail_mass / 4.0))
        x_lo, x_hi = -k_std * sigma, 1.0 + k_std * sigma
        lo_rem = float(_mixture_loss(np.asarray(x_lo), sigma, p))
        hi_rem = float(_mixture_loss(np.asarray(x_hi), sigma, p))
        windows = {"remove": (lo_rem, hi_rem), "add": (-hi_rem, -lo_rem)}
    else:
        lo, hi = float(window[0]), float(window[1])
        if not lo < hi:
            raise WindowTooSmall("window must satisfy lo < hi")
        windows = {"remove": (lo, hi), "add": (lo, hi)}

    builders = {
        "remove": (_delta_remove, _loss_cdf_remove),
        "add": (_delta_add, _loss_cdf_add),
    }
    plds = {}
    for name, (delta_fn, cdf_fn) in builders.items():
        c_lo, c_hi = windows[name]
        if rounding == PESSIMISTIC:
            pld = _connect_dots(
                lambda eps: delta_fn(eps, sigma, p), c_lo, c_hi, grid_spacing
            )
        else:
            pld = _discretise_cells(
                lambda c: cdf_fn(c, sigma, p), c_lo, c_hi, grid_spacing
            )
        if window is not None and pld.truncation_mass > tail_mass:
            raise WindowTooSmall(
                f"window {window} leaves truncation mass {pld.truncation_mass:.3g} "
                f"> target {tail_mass:.3g} in the {name} direction"
            )
        plds[name] = pld
    return PldPair(add=plds["add"], remove=plds["remove"])


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------


def _trim(pld: DiscretePLD, trim_mass: float) -> DiscretePLD:
    cum = np.cumsum(pld.masses)
    total = cum[-1]
    lo = int(np.searchsorted(cum, trim_mass))
    hi = int(np.searchsorted(cum, total - trim_mass, side="right")) + 1
    hi = min(hi, pld.masses.size)
    if lo >= hi:
        lo, hi = 0, pld.masses.size
    dropped = total - float(np.sum(pld.masses[lo:hi]))
    return DiscretePLD(
        pld.origin + lo,
        pld.spacing,
        pld.masses[lo:hi].copy(),
        min(1.0, pld.truncation_mass + max(0.0, dropped)),
        pld.rounding,
    )


def _convolve(a: DiscretePLD, b: DiscretePLD, trim_mass: float) -> DiscretePLD:
    if a.spacing != b.spacing:
        raise ValueError("cannot convolve PLDs with different grid spacings")
    if a.rounding != b.rounding:
        raise ValueError("cannot convolve PLDs with different rounding modes")
    masses = fftconvolve(a.masses, b.masses)
    np.clip(masses, 0.0, None, out=masses)
    # zero the FFT noise floor; the dropped mass joins the truncation account
    # so pessimistic evaluation stays an upper bound
    noise = masses < masses.max() * 1e-13
    dropped = float(masses[noise].sum())
    masses[noise] = 0.0
    trunc = min(1.0, a.truncation_mass + b.truncation_mass + dropped)
    # clip/threshold noise otherwise drifts the total away from unit mass
    masses *= (1.0 - trunc) / masses.sum()
    out = DiscretePLD(a.origin + b.origin, a.spacing, masses, trunc, a.rounding)
    return _trim(out, trim_mass)


def self_compose(
    pld: DiscretePLD,
    steps: int,
    *,
    error_budget: float = 1e-6,
    trim_mass: float = _TRIM_MASS,
) -> DiscretePLD:
    """PLD of the ``steps``-fold self-composition via repeated squaring.

    Tails below ``trim_mass`` cumulative probability are dropped after each
    convolution and accounted in ``truncation_mass``.  Raises
    AccumulatedErrorExceeded if the tracked mass exceeds ``error_budget``.
    """
    if steps < 1 or steps != int(steps):
        raise ValueError("steps must be an integer >= 1")
    steps = int(steps)
    result: Optional[DiscretePLD] = None
    power = pld
    s = steps
    while True:
        if s & 1:
            result = power if result is None else _convolve(result, power, trim_mass)
        s >>= 1
        if not s:
            break
        power = _convolve(power, power, trim_mass)
    assert result is not None
    if result.truncation_mass > error_budget:
        raise AccumulatedErrorExceeded(
            f"truncation mass {result.truncation_mass:.3g} exceeds budget {error_budget:.3g}"
        )
    return result


def compose_pair(pair: PldPair, steps: int, **kwargs) -> PldPair:
    return PldPair(
        add=self_compose(pair.add, steps, **kwargs),
        remove=self_compose(pair.remove, steps, **kwargs),
    )


# ---------------------------------------------------------------------------
# hockey-stick evaluation
# ---------------------------------------------------------------------------


class _PldEvaluator:
    """Cached suffix/prefix sums for fast delta queries on one PLD."""

    def __init__(self, pld: DiscretePLD):
        self.pld = pld
        self.losses = pld.loss_grid
        m = pld.masses
        lower = pld.lower_masses()
        self.suffix_m = np.concatenate([np.cumsum(m[::-1])[::-1], [0.0]])
        self.suffix_l = np.concatenate([np.cumsum(lower[::-1])[::-1], [0.0]])
        self.prefix_m = np.concatenate([[0.0], np.cumsum(m)])
        self.prefix_l = np.concatenate([[0.0], np.cumsum(lower)])
        self.ghost = max(0.0, 1.0 - float(self.prefix_l[-1]))
        # total lower mass including the off-grid remainder; may exceed 1 by
        # accumulated roundoff of the implied per-cell weights
        self.lower_total = float(self.prefix_l[-1]) + self.ghost

    def delta(self, eps) -> np.ndarray:
        """H_{e^eps}(upper || lower): sum over losses above eps of
        (upper - e^eps * lower) mass, plus truncation when pessimistic."""
        eps = np.asarray(eps, dtype=float)
        idx = np.searchsorted(self.losses, eps, side="right")
        out = self.suffix_m[idx] - np.exp(np.clip(eps, None, 700.0)) * self.suffix_l[idx]
        if self.pld.pessimistic:
            out = out + self.pld.truncation_mass
        return np.clip(out, 0.0, 1.0)

    def delta_reverse(self, eps) -> np.ndarray:
        """H_{e^eps}(lower || upper) from the same atoms.

        Lower-distribution mass not represented on the grid (the deficit
        1 - sum(lower)) sits where the upper has none and contributes in
        full; the truncated upper mass carries no lower weight, so it does
        not enter this direction.
        """
        eps = np.asarray(eps, dtype=float)
        idx = np.searchsorted(self.losses, -eps, side="left")
        out = self.prefix_l[idx] - np.exp(np.clip(eps, None, 700.0)) * self.prefix_m[idx]
        out = out + self.ghost
        return np.clip(out, 0.0, None)


def delta_at(pld: DiscretePLD, eps) -> np.ndarray:
    """Hockey-stick divergence of the PLD's upper to lower distribution."""
    return _PldEvaluator(pld).delta(eps)


def profile_from_pld(pld_pair: PldPair, eps_grid) -> PrivacyProfile:
    """Privacy profile delta(eps), the pointwise max over both adjacency
    directions; with pessimistic rounding a certified upper bound."""
    eps_grid = np.asarray(eps_grid, dtype=float)
    deltas = np.maximum(
        _PldEvaluator(pld_pair.add).delta(eps_grid),
        _PldEvaluator(pld_pair.remove).delta(eps_grid),
    )
    return PrivacyProfile(eps_grid, deltas, truncated=bool(deltas[-1] > 1e-9))


def bayes_curve_from_plds(pld_pair: PldPair, grid_size: int = DEFAULT_GRID_SIZE) -> BayesErrorCurve:
    """Minimum Bayes error curve of the (symmetrised) composed mechanism.

    Uses the identity R(pi) = (pi*U + (1-pi)*L - pi*H_g(u||l)
    - (1-pi)*H_{1/g}(l||u)) / 2 with g = (1-pi)/pi and U, L the total upper
    and lower masses, evaluated per direction, then symmetrised by taking
    the minimum over both directions and both prior orientations.  Each term
    is the exact Bayes error of a discrete pair, hence concave; the minimum
    of concave functions stays concave.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be >= 3")
    pis = np.linspace(0.0, 1.0, grid_size)
    inner = pis[1:-1]
    eps = np.log((1.0 - inner) / inner)
    candidates = []
    for pld in pld_pair:
        ev = _PldEvaluator(pld)
        r = 0.5 * (
            inner
            + (1.0 - inner) * ev.lower_total
            - inner * ev.delta(eps)
            - (1.0 - inner) * ev.delta_reverse(-eps)
        )
        candidates.append(r)
        candidates.append(r[::-1])
    risks = np.zeros_like(pis)
    risks[1:-1] = np.minimum.reduce(candidates)
    np.clip(risks, 0.0, np.minimum(pis, 1.0 - pis), out=risks)
    return BayesErrorCurve(pis, risks)


# ---------------------------------------------------------------------------
# spec-level conveniences
# ---------------------------------------------------------------------------


def _composed_pair(spec, grid_spacing: float, tail_mass: float = DEFAULT_TAIL_MASS) -> PldPair:
    pair = sgm_pld(spec.sigma, spec.p, grid_spacing, tail_mass=tail_mass)
    return compose_pair(pair, spec.steps)


def composed_bayes_curve(
    spec,
    grid_size: int = DEFAULT_GRID_SIZE,
    grid_spacing: float = DEFAULT_GRID_SPACING,
) -> BayesErrorCurve:
    """Bayes error curve of a composed subsampled Gaussian spec, computed
    directly from the PLD pair without a trade-off curve intermediate."""
    return bayes_curve_from_plds(_composed_pair(spec, grid_spacing), grid_size)


def _auto_eps_grid(pair: PldPair, n_eps: int = 4001) -> np.ndarray:
    evaluators = [_PldEvaluator(p) for p in pair]
    floor = max(1e-10, 2.0 * max(p.truncation_mass for p in pair))
    eps_hi = 1.0
    while eps_hi < 300.0:
        if max(float(ev.delta(eps_hi)) for ev in evaluators) <= floor:
            break
        eps_hi *= 2.0
    return np.linspace(0.0, min(eps_hi, 300.0), n_eps)


def composed_tradeoff(
    spec,
    grid_size: int = DEFAULT_GRID_SIZE,
    grid_spacing: float = DEFAULT_GRID_SPACING,
) -> TradeoffCurve:
    """Trade-off curve of a composed subsampled Gaussian spec.

    Chains single-step discretisation, repeated-squaring composition, the
    pessimistic profile, and the profile-to-tradeoff conversion.  The
    resulting curve understates privacy (lower-bounds the true trade-off).
    """
    pair = _composed_pair(spec, grid_spacing)
    profile = profile_from_pld(pair, _auto_eps_grid(pair))
    return tradeoff_from_profile(profile, grid_size, allow_truncated=True)


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationResult:
    """Noise multiplier meeting an (epsilon, delta) target."""

    sigma: float
    achieved_epsilon: float
    abs_error: float
    degenerate: bool = False

    def to_json_obj(self) -> dict:
        return {
            "sigma": self.sigma,
            "achieved_epsilon": self.achieved_epsilon,
            "abs_error": self.abs_error,
            "degenerate": self.degenerate,
        }


def _delta_at_eps_for_sigma(sigma, p, steps, eps, grid_spacing) -> float:
    pair = compose_pair(sgm_pld(sigma, p, grid_spacing), steps)
    return max(
        float(_PldEvaluator(pair.add).delta(eps)),
        float(_PldEvaluator(pair.remove).delta(eps)),
    )


def _epsilon_at_delta(pair: PldPair, target_delta: float, lo=-30.0, hi=300.0) -> float:
    evaluators = [_PldEvaluator(p) for p in pair]

    def delta_of(eps: float) -> float:
        return max(float(ev.delta(eps)) for ev in evaluators)

    if delta_of(lo) < target_delta:
        return lo
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if delta_of(mid) > target_delta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def calibrate_sigma(
    target_eps: float,
    target_delta: float,
    p: float,
    steps: int,
    *,
    grid_spacing: float = DEFAULT_GRID_SPACING,
    bracket: Tuple[float, float] = (0.3, 64.0),
    iterations: int = 60,
) -> CalibrationResult:
    """Smallest noise multiplier meeting the (target_eps, target_delta)
    guarantee after ``steps``-fold composition at sampling rate ``p``.

    Bisects sigma against the accountant's delta at target_eps (decreasing
    in sigma), then reports the achieved epsilon at target_delta and its
    absolute error.  Raises BracketFailure when no sigma in the bracket
    attains the target.
    """
    if not (0.0 < target_delta):
        raise ValueError("target_delta must be positive")
    if target_delta >= 1.0:
        return CalibrationResult(
            sigma=bracket[0], achieved_epsilon=math.nan, abs_error=math.nan, degenerate=True
        )

    lo, hi = bracket

    def delta_of(sigma: float) -> float:
        return _delta_at_eps_for_sigma(sigma, p, steps, target_eps, grid_spacing)

    if delta_of(lo) < target_delta:
        raise BracketFailure(
            f"even sigma = {lo} is more private than ({target_eps}, {target_delta})"
        )
    if delta_of(hi) > target_delta:
        raise BracketFailure(
            f"sigma = {hi} still exceeds delta target {target_delta} at eps = {target_eps}"
        )
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if delta_of(mid) > target_delta:
            lo = mid
        else:
            hi = mid
    sigma = hi  # the side certified to meet the target
    pair = compose_pair(sgm_pld(sigma, p, grid_spacing), steps)
    achieved = _epsilon_at_delta(pair, target_delta)
    return CalibrationResult(
        sigma=sigma, achieved_epsilon=achieved, abs_error=abs(achieved - target_eps)
    )


# ---------------------------------------------------------------------------
# parameter sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    """A lattice of (sampling rate, steps) cells, each calibrated to the
    same (epsilon, delta) target and compared against a base mechanism."""

    base_sigma: float
    base_p: float
    base_steps: int
    target_eps: float
    target_delta: float
    p_range: Tuple[float, ...]
    steps_range: Tuple[int, ...]
    output_path: Optional[str] = None

    def __post_init__(self):
        if not self.p_range or not self.steps_range:
            raise ValueError("p_range and steps_range must be non-empty")
        for p in self.p_range:
            if not (0.0 < p <= 1.0):
                raise ValueError(f"sampling rate {p} outside (0, 1]")
        for n in self.steps_range:
            if n < 1:
                raise ValueError(f"steps {n} must be >= 1")


def _sweep_cell(payload) -> dict:
    (p, steps, target_eps, target_delta, grid_spacing, grid_size, base_risks) = payload
    row = {"p": p, "steps": steps}
    try:
        cal = calibrate_sigma(
            target_eps, target_delta, p, steps, grid_spacing=grid_spacing
        )
        pair = compose_pair(sgm_pld(cal.sigma, p, grid_spacing), steps)
        target_curve = bayes_curve_from_plds(pair, grid_size)
        gap = base_risks - target_curve.risks
        row.update(
            sigma=cal.sigma,
            delta_ab=float(max(0.0, gap.max())),
            delta_ba=float(max(0.0, -gap.min())),
            eps_error=cal.abs_error,
            status="ok",
        )
    except Exception as exc:  # per-row failures recorded, sweep continues
        row.update(
            sigma=math.nan,
            delta_ab=math.nan,
            delta_ba=math.nan,
            eps_error=math.nan,
            status=f"error: {exc}",
        )
    return row


def max_workers(n_tasks: int) -> int:
    cap = os.environ.get("DPB_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(limit, n_tasks))


def run_sweep(
    config: SweepConfig,
    *,
    grid_size: int = DEFAULT_GRID_SIZE,
    grid_spacing: float = DEFAULT_GRID_SPACING,
    workers: Optional[int] = None,
) -> List[dict]:
    """Calibrate every lattice cell and compare it to the base mechanism.

    Returns one row dict per (p, steps) cell, sorted by (p, steps);
    delta_ab is the divergence of the base to the cell's mechanism.  Cells
    run in parallel processes, capped by DPB_THREADS.
    """
    from .mechanisms import MechanismSpec

    base_spec = MechanismSpec.sgm(config.base_sigma, config.base_p, config.base_steps)
    base_curve = composed_bayes_curve(base_spec, grid_size, grid_spacing)
    payloads = [
        (p, steps, config.target_eps, config.target_delta, grid_spacing, grid_size, base_curve.risks)
        for p in config.p_range
        for steps in config.steps_range
    ]
    n_workers = workers if workers is not None else max_workers(len(payloads))
    if n_workers <= 1:
        rows = [_sweep_cell(payload) for payload in payloads]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(_sweep_cell, payloads))
    rows.sort(key=lambda row: (row["p"], row["steps"]))
    return rows


def geometric_range(lo: float, hi: float, count: int) -> Tuple[float, ...]:
    """Log-spaced lattice axis used by the sweep defaults."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if count == 1:
        return (lo,)
    return tuple(float(v) for v in np.geomspace(lo, hi, count))
