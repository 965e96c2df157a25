"""Lossless mechanism representations and the conversions between them.

Three equivalent views of a mechanism's guarantee are supported:

* ``TradeoffCurve``      alpha -> f(alpha), the Type-II error of the most
  powerful test at Type-I level alpha;
* ``BayesErrorCurve``    pi -> R_min(pi), the minimum Bayes error of an
  adversary with prior pi;
* ``PrivacyProfile``     epsilon -> delta(epsilon).

All three are stored as discretised grids.  Conversions are exact for the
piecewise-linear interpolant of the stored grid; the grid resolution is the
only source of error.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .exceptions import CurveValidationError, TruncationError

DEFAULT_GRID_SIZE = 10_001

# Structural violations below REPAIR_TOL are treated as floating-point noise
# and repaired; anything larger is rejected.
REPAIR_TOL = 1e-9

_CSV_SIG_DIGITS = 9


def _validated_grid(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise CurveValidationError(f"{name} must be a 1-D grid with >= 2 nodes")
    if not np.all(np.isfinite(arr)):
        raise CurveValidationError(f"{name} contains non-finite values")
    return arr


def _strictly_increasing(arr: np.ndarray, name: str) -> None:
    if np.any(np.diff(arr) <= 0):
        raise CurveValidationError(f"{name} must be strictly increasing")


def _snap_unit_endpoints(arr: np.ndarray, name: str) -> np.ndarray:
    if abs(arr[0]) > REPAIR_TOL or abs(arr[-1] - 1.0) > REPAIR_TOL:
        raise CurveValidationError(f"{name} must span [0, 1] including endpoints")
    arr = arr.copy()
    arr[0], arr[-1] = 0.0, 1.0
    return arr


def _lower_convex_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Values of the lower convex hull of (x, y) back on the x nodes."""
    hx = [x[0]]
    hy = [y[0]]
    for xi, yi in zip(x[1:], y[1:]):
        while len(hx) >= 2 and (hy[-1] - hy[-2]) * (xi - hx[-1]) >= (yi - hy[-1]) * (
            hx[-1] - hx[-2]
        ):
            hx.pop()
            hy.pop()
        hx.append(xi)
        hy.append(yi)
    return np.interp(x, hx, hy)


def _upper_concave_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return -_lower_convex_hull(x, -np.asarray(y))


def _freeze(obj, **fields) -> None:
    for key, val in fields.items():
        if isinstance(val, np.ndarray):
            val.flags.writeable = False
        object.__setattr__(obj, key, val)


def _format_float(x: float, sig: int = _CSV_SIG_DIGITS) -> str:
    return f"{x:.{sig}g}"


def _write_csv(path, header: str, col_a, col_b) -> None:
    lines = [header]
    lines += [f"{_format_float(a)},{_format_float(b)}" for a, b in zip(col_a, col_b)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_csv(path, header: str):
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not text or text[0].strip() != header:
        raise CurveValidationError(f"expected CSV header {header!r} in {path}")
    rows = [line.split(",") for line in text[1:] if line.strip()]
    data = np.array([[float(a), float(b)] for a, b in rows])
    return data[:, 0], data[:, 1]


@dataclass(frozen=True, eq=False)
class TradeoffCurve:
    """Discretised symmetric trade-off function alpha -> f(alpha).

    Invariants: ``betas`` is non-increasing and convex in ``alphas``,
    ``betas[-1] = 0`` at alpha = 1.  Evaluation is the piecewise-linear
    interpolant, extended to the real line with f(x) = 1 for x < 0 and
    f(x) = 0 for x > 1.  Note the extension keeps f(x) = 1 left of zero
    even for curves with f(0) < 1, which makes f discontinuous at 0 for
    such (composed) mechanisms.
    """

    alphas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        alphas = _validated_grid(self.alphas, "alphas")
        betas = _validated_grid(self.betas, "betas")
        if alphas.shape != betas.shape:
            raise CurveValidationError("alphas and betas must have equal length")
        _strictly_increasing(alphas, "alphas")
        alphas = _snap_unit_endpoints(alphas, "alphas")
        if betas.min() < -REPAIR_TOL or betas.max() > 1.0 + REPAIR_TOL:
            raise CurveValidationError("betas must lie in [0, 1]")
        betas = np.clip(betas, 0.0, 1.0)
        if betas[-1] > REPAIR_TOL:
            raise CurveValidationError("trade-off curve must end at f(1) = 0")
        betas[-1] = 0.0
        rises = np.diff(betas)
        if rises.max(initial=0.0) > REPAIR_TOL:
            raise CurveValidationError("betas must be non-increasing in alpha")
        betas = np.minimum.accumulate(betas)
        slopes = np.diff(betas) / np.diff(alphas)
        gaps = np.diff(alphas)
        # second differences scaled to the local spacing
        d2 = np.diff(slopes) * 0.5 * (gaps[:-1] + gaps[1:])
        if d2.size and d2.min() < -REPAIR_TOL:
            raise CurveValidationError("trade-off curve must be convex")
        if d2.size and np.any(np.diff(slopes) < 0):
            betas = _lower_convex_hull(alphas, betas)
        _freeze(self, alphas=alphas, betas=betas)

    @cached_property
    def slopes(self) -> np.ndarray:
        """Per-segment slopes; non-decreasing (all <= 0) by convexity."""
        return np.diff(self.betas) / np.diff(self.alphas)

    @property
    def grid_size(self) -> int:
        return self.alphas.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(np.clip(x, 0.0, 1.0), self.alphas, self.betas)
        out = np.where(x < 0.0, 1.0, out)
        out = np.where(x > 1.0, 0.0, out)
        return out if out.ndim else float(out)

    def to_csv(self, path) -> None:
        _write_csv(path, "alpha,beta", self.alphas, self.betas)

    @classmethod
    def from_csv(cls, path) -> "TradeoffCurve":
        alphas, betas = _read_csv(path, "alpha,beta")
        return cls(alphas, betas)

    def to_json_obj(self) -> dict:
        return {
            "kind": "tradeoff_curve",
            "grid_size": int(self.grid_size),
            "alpha": [float(a) for a in self.alphas],
            "beta": [float(b) for b in self.betas],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TradeoffCurve":
        if obj.get("kind") != "tradeoff_curve":
            raise CurveValidationError("not a tradeoff_curve JSON envelope")
        return cls(np.asarray(obj["alpha"]), np.asarray(obj["beta"]))


@dataclass(frozen=True, eq=False)
class BayesErrorCurve:
    """Discretised minimum Bayes error pi -> R_min(pi).

    Concave, zero at both endpoints, capped by min(pi, 1 - pi).
    """

    pis: np.ndarray
    risks: np.ndarray

    def __post_init__(self):
        pis = _validated_grid(self.pis, "pis")
        risks = _validated_grid(self.risks, "risks")
        if pis.shape != risks.shape:
            raise CurveValidationError("pis and risks must have equal length")
        _strictly_increasing(pis, "pis")
        pis = _snap_unit_endpoints(pis, "pis")
        cap = np.minimum(pis, 1.0 - pis)
        if risks.min() < -REPAIR_TOL or np.max(risks - cap) > REPAIR_TOL:
            raise CurveValidationError("risks must satisfy 0 <= R(pi) <= min(pi, 1-pi)")
        risks = np.clip(risks, 0.0, cap)
        slopes = np.diff(risks) / np.diff(pis)
        gaps = np.diff(pis)
        d2 = np.diff(slopes) * 0.5 * (gaps[:-1] + gaps[1:])
        if d2.size and d2.max() > REPAIR_TOL:
            raise CurveValidationError("Bayes error curve must be concave")
        if d2.size and np.any(np.diff(slopes) > 0):
            risks = np.clip(_upper_concave_hull(pis, risks), 0.0, cap)
        _freeze(self, pis=pis, risks=risks)

    @property
    def grid_size(self) -> int:
        return self.pis.size

    def __call__(self, pi):
        pi = np.asarray(pi, dtype=float)
        out = np.interp(np.clip(pi, 0.0, 1.0), self.pis, self.risks)
        return out if out.ndim else float(out)

    def to_csv(self, path) -> None:
        _write_csv(path, "pi,rmin", self.pis, self.risks)

    @classmethod
    def from_csv(cls, path) -> "BayesErrorCurve":
        pis, risks = _read_csv(path, "pi,rmin")
        return cls(pis, risks)

    def to_json_obj(self) -> dict:
        return {
            "kind": "bayes_error_curve",
            "grid_size": int(self.grid_size),
            "pi": [float(p) for p in self.pis],
            "rmin": [float(r) for r in self.risks],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "BayesErrorCurve":
        if obj.get("kind") != "bayes_error_curve":
            raise CurveValidationError("not a bayes_error_curve JSON envelope")
        return cls(np.asarray(obj["pi"]), np.asarray(obj["rmin"]))


@dataclass(frozen=True, eq=False)
class PrivacyProfile:
    """Discretised privacy profile epsilon -> delta(epsilon).

    ``deltas`` is non-increasing in epsilon and convex as a function of
    e^epsilon.  ``truncated`` marks profiles whose producer knows the
    epsilon window clips the tail (delta at the last node is not ~0).
    """

    epsilons: np.ndarray
    deltas: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        eps = _validated_grid(self.epsilons, "epsilons")
        deltas = _validated_grid(self.deltas, "deltas")
        if eps.shape != deltas.shape:
            raise CurveValidationError("epsilons and deltas must have equal length")
        _strictly_increasing(eps, "epsilons")
        if deltas.min() < -REPAIR_TOL or deltas.max() > 1.0 + REPAIR_TOL:
            raise CurveValidationError("deltas must lie in [0, 1]")
        deltas = np.clip(deltas, 0.0, 1.0)
        if np.diff(deltas).max(initial=0.0) > REPAIR_TOL:
            raise CurveValidationError("deltas must be non-increasing in epsilon")
        deltas = np.minimum.accumulate(deltas)
        # convexity in the t = e^eps coordinate; slopes there lie in [-1, 0]
        t = np.exp(np.clip(eps, None, 700.0))
        slopes = np.diff(deltas) / np.diff(t)
        if slopes.size > 1 and np.diff(slopes).min() < -REPAIR_TOL:
            raise CurveValidationError("deltas must be convex in e^epsilon")
        if slopes.size > 1 and np.any(np.diff(slopes) < 0):
            deltas = np.clip(_lower_convex_hull(t, deltas), 0.0, 1.0)
        _freeze(self, epsilons=eps, deltas=deltas, truncated=bool(self.truncated))

    @property
    def grid_size(self) -> int:
        return self.epsilons.size

    def __call__(self, eps):
        eps = np.asarray(eps, dtype=float)
        out = np.interp(eps, self.epsilons, self.deltas)
        return out if out.ndim else float(out)

    def to_csv(self, path) -> None:
        _write_csv(path, "epsilon,delta", self.epsilons, self.deltas)

    @classmethod
    def from_csv(cls, path) -> "PrivacyProfile":
        eps, deltas = _read_csv(path, "epsilon,delta")
        return cls(eps, deltas)

    def to_json_obj(self) -> dict:
        return {
            "kind": "privacy_profile",
            "grid_size": int(self.grid_size),
            "truncated": bool(self.truncated),
            "epsilon": [float(e) for e in self.epsilons],
            "delta": [float(d) for d in self.deltas],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PrivacyProfile":
        if obj.get("kind") != "privacy_profile":
            raise CurveValidationError("not a privacy_profile JSON envelope")
        return cls(
            np.asarray(obj["epsilon"]),
            np.asarray(obj["delta"]),
            truncated=bool(obj.get("truncated", False)),
        )


def save_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj.to_json_obj(), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# trade-off <-> Bayes error
# ---------------------------------------------------------------------------


def bayes_error_at(f: TradeoffCurve, pi):
    """Minimum Bayes error min_alpha(pi*alpha + (1-pi)*f(alpha)) at prior pi.

    Exact for the piecewise-linear curve: the objective is piecewise linear
    in alpha, so the minimiser sits on the node where the segment slope
    pi + (1-pi)*s changes sign, located by bisecting the sorted slopes.
    """
    pi_arr = np.asarray(pi, dtype=float)
    if np.any(pi_arr < 0.0) or np.any(pi_arr > 1.0):
        raise ValueError("pi must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        thresholds = np.where(pi_arr < 1.0, -pi_arr / (1.0 - pi_arr), -np.inf)
    k = np.searchsorted(f.slopes, thresholds, side="left")
    out = pi_arr * f.alphas[k] + (1.0 - pi_arr) * f.betas[k]
    return out if out.ndim else float(out)


def bayes_error_curve(f: TradeoffCurve, grid_size: int = DEFAULT_GRID_SIZE) -> BayesErrorCurve:
    """Bayes error curve of ``f`` on a uniform prior grid."""
    if grid_size < 3:
        raise ValueError("grid_size must be >= 3")
    pis = np.linspace(0.0, 1.0, grid_size)
    return BayesErrorCurve(pis, bayes_error_at(f, pis))


def tradeoff_from_bayes(r: BayesErrorCurve, grid_size: int = DEFAULT_GRID_SIZE) -> TradeoffCurve:
    """Reconstruct the trade-off curve as the upper envelope of the lines
    alpha -> (R(pi) - pi*alpha) / (1 - pi) over the prior grid (pi < 1)."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    keep = r.pis < 1.0 - 1e-12
    denom = 1.0 - r.pis[keep]
    line_slopes = -r.pis[keep] / denom
    line_icepts = r.risks[keep] / denom
    alphas = np.linspace(0.0, 1.0, grid_size)
    betas = np.empty_like(alphas)
    # by concavity of R the best line index is unimodal at fixed alpha and
    # non-increasing in alpha, so sweep alpha downward with a forward
    # pointer; the tiny slack steps across roundoff dips near the peak
    j = 0
    m = line_slopes.size
    for i in range(alphas.size - 1, -1, -1):
        a = alphas[i]
        val = line_icepts[j] + line_slopes[j] * a
        while j + 1 < m:
            nxt = line_icepts[j + 1] + line_slopes[j + 1] * a
            if nxt >= val - 1e-15:
                j += 1
                val = max(val, nxt)
            else:
                break
        betas[i] = val
    return TradeoffCurve(alphas, np.clip(betas, 0.0, 1.0))


# ---------------------------------------------------------------------------
# trade-off <-> privacy profile
# ---------------------------------------------------------------------------


def default_eps_grid(f: TradeoffCurve, n_eps: int = 4001) -> np.ndarray:
    """Epsilon window [0, log(max |slope|)] that exhausts the curve's grid.

    Beyond log of the steepest segment the discretised delta is exactly zero.
    Tails of the underlying true mechanism at larger epsilon live below the
    alpha-grid resolution and are not representable.
    """
    steepest = max(float(-f.slopes[0]), 1.0)
    eps_max = min(np.log(steepest) + 0.1, 80.0)
    eps_max = max(eps_max, 1.0)
    return np.linspace(0.0, eps_max, n_eps)


def profile_from_tradeoff(f: TradeoffCurve, eps_grid=None) -> PrivacyProfile:
    """Privacy profile delta(eps) = sup_alpha(1 - f(alpha) - e^eps * alpha)."""
    if eps_grid is None:
        eps_grid = default_eps_grid(f)
    eps_grid = np.asarray(eps_grid, dtype=float)
    if not np.all(np.isfinite(eps_grid)):
        raise ValueError("eps_grid must be finite")
    ts = np.exp(np.clip(eps_grid, None, 700.0))
    order = np.argsort(eps_grid)
    alphas, betas = f.alphas, f.betas
    deltas = np.empty_like(eps_grid)
    # active node index decreases as t grows (the sup moves toward alpha=0)
    j = int(np.argmax(1.0 - betas - ts[order[0]] * alphas))
    for idx in order:
        t = ts[idx]
        val = 1.0 - betas[j] - t * alphas[j]
        while j > 0:
            nxt = 1.0 - betas[j - 1] - t * alphas[j - 1]
            if nxt >= val - 1e-15:
                j -= 1
                val = max(val, nxt)
            else:
                break
        deltas[idx] = val
    return PrivacyProfile(eps_grid, np.clip(deltas, 0.0, 1.0))


def tradeoff_from_profile(
    profile: PrivacyProfile,
    grid_size: int = DEFAULT_GRID_SIZE,
    allow_truncated: bool = False,
) -> TradeoffCurve:
    """Trade-off curve supported by every (eps, delta) constraint in the profile.

    f(alpha) = sup_eps max{0, 1 - delta - e^eps * alpha, e^-eps * (1 - delta - alpha)};
    the second branch supplies the negative-epsilon constraints of a
    symmetric mechanism.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    if profile.deltas[-1] >= 1e-9 and not (profile.truncated or allow_truncated):
        raise TruncationError(
            "profile window ends at delta "
            f"{profile.deltas[-1]:.3g} >= 1e-9; supremum may be clipped"
        )
    eps = np.clip(profile.epsilons, -700.0, 700.0)
    t = np.exp(eps)
    inv_t = np.exp(-eps)
    one_minus_delta = 1.0 - profile.deltas
    line_slopes = np.concatenate([-t, -inv_t])
    line_icepts = np.concatenate([one_minus_delta, one_minus_delta * inv_t])
    alphas = np.linspace(0.0, 1.0, grid_size)
    betas = np.zeros_like(alphas)
    chunk = 256
    for lo in range(0, alphas.size, chunk):
        block = alphas[lo : lo + chunk, None]
        vals = line_icepts[None, :] + line_slopes[None, :] * block
        betas[lo : lo + chunk] = vals.max(axis=1)
    return TradeoffCurve(alphas, np.clip(betas, 0.0, 1.0))


# ---------------------------------------------------------------------------
# other constructors / functionals
# ---------------------------------------------------------------------------


def tradeoff_from_plrv_cdfs(
    f_x_cdf: Callable[[float], float],
    f_y_cdf: Callable[[float], float],
    alpha,
    f_x_quantile: Optional[Callable[[float], float]] = None,
):
    """Trade-off value f(alpha) = F_Y(F_X^{-1}(1 - alpha)) of the most
    powerful test, from the CDFs of the two privacy loss random variables.

    X is the loss under the null distribution, Y under the alternative; the
    pair must be mutually absolutely continuous.  If no quantile function is
    supplied, F_X is inverted by bisection on an expanding bracket.
    """
    alpha_arr = np.atleast_1d(np.asarray(alpha, dtype=float))
    if np.any(alpha_arr < 0.0) or np.any(alpha_arr > 1.0):
        raise ValueError("alpha must lie in [0, 1]")

    def invert(q: float) -> float:
        if f_x_quantile is not None:
            return float(f_x_quantile(q))
        lo, hi = -1.0, 1.0
        while f_x_cdf(lo) > q and lo > -1e12:
            lo *= 2.0
        while f_x_cdf(hi) < q and hi < 1e12:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if f_x_cdf(mid) < q:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    out = np.empty_like(alpha_arr)
    for i, a in enumerate(alpha_arr):
        if a <= 0.0:
            out[i] = 1.0
        elif a >= 1.0:
            out[i] = 0.0
        else:
            out[i] = float(f_y_cdf(invert(1.0 - a)))
    out = np.clip(out, 0.0, 1.0)
    return out if np.ndim(alpha) else float(out[0])


def tv_and_advantage(f: TradeoffCurve) -> float:
    """Total variation distance of the underlying pair, max(1 - alpha - f(alpha)).

    Equals the membership-inference advantage and delta(0).
    """
    return float(np.max(1.0 - f.alphas - f.betas))
