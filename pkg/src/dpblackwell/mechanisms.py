"""Mechanism catalog: specs and analytic trade-off curves.

Closed-form trade-off functions are provided for the Gaussian and Laplace
mechanisms (parameterised by the sensitivity-to-scale ratio ``mu``), the two
extremal reference mechanisms, and tabulated curves.  Subsampled Gaussian
mechanisms are dispatched to the composition accountant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import laplace

from .curves import DEFAULT_GRID_SIZE, TradeoffCurve
from .exceptions import SpecParseError


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    SUBSAMPLED_GAUSSIAN = "sgm"
    PERFECTLY_PRIVATE = "pp"
    BLATANTLY_NON_PRIVATE = "bnp"
    TABULATED = "tabulated"


def _check_alpha(alpha) -> np.ndarray:
    arr = np.asarray(alpha, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise ValueError("alpha must lie in [0, 1]")
    return arr


def gaussian_tradeoff(mu: float, alpha):
    """Gaussian mechanism trade-off Phi(Phi^-1(1 - alpha) - mu)."""
    if not (math.isfinite(mu) and mu >= 0.0):
        raise ValueError("mu must be finite and >= 0")
    arr = _check_alpha(alpha)
    # -ndtri(alpha) = Phi^-1(1 - alpha), accurate for small alpha
    with np.errstate(invalid="ignore"):
        out = ndtr(-ndtri(arr) - mu)
    out = np.where(arr <= 0.0, 1.0, out)
    out = np.where(arr >= 1.0, 0.0, out)
    return out if out.ndim else float(out)


def laplace_tradeoff(mu: float, alpha):
    """Laplace mechanism trade-off F(F^-1(1 - alpha) - mu), unit scale."""
    if not (math.isfinite(mu) and mu >= 0.0):
        raise ValueError("mu must be finite and >= 0")
    arr = _check_alpha(alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = laplace.cdf(laplace.isf(arr) - mu)
    out = np.where(arr <= 0.0, 1.0, out)
    out = np.where(arr >= 1.0, 0.0, out)
    return out if out.ndim else float(out)


def extremal_tradeoff(which: str, alpha):
    """Trade-off of the extremal mechanisms: 'PP' -> 1 - alpha, 'BNP' -> 0."""
    arr = _check_alpha(alpha)
    key = str(which).lower()
    if key in ("pp", "perfectly_private"):
        out = 1.0 - arr
    elif key in ("bnp", "blatantly_non_private"):
        out = np.zeros_like(arr)
    else:
        raise ValueError(f"unknown extremal mechanism {which!r}")
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class MechanismSpec:
    """Declarative mechanism description from which curves are derived."""

    family: Family
    mu: Optional[float] = None
    sigma: Optional[float] = None
    p: Optional[float] = None
    steps: Optional[int] = None
    grid: Optional[TradeoffCurve] = None

    def __post_init__(self):
        fam = self.family
        if fam in (Family.GAUSSIAN, Family.LAPLACE):
            if self.mu is None or not math.isfinite(self.mu) or self.mu < 0.0:
                raise SpecParseError(f"{fam.value} requires finite mu >= 0")
        elif fam is Family.SUBSAMPLED_GAUSSIAN:
            if self.sigma is None or not math.isfinite(self.sigma) or self.sigma <= 0.0:
                raise SpecParseError("sgm requires finite sigma > 0")
            if self.p is None or not (0.0 < self.p <= 1.0):
                raise SpecParseError("sgm requires sampling rate p in (0, 1]")
            if self.steps is None or self.steps < 1 or self.steps != int(self.steps):
                raise SpecParseError("sgm requires integer steps >= 1")
            object.__setattr__(self, "steps", int(self.steps))
        elif fam is Family.TABULATED:
            if self.grid is None:
                raise SpecParseError("tabulated spec requires a grid")

    @classmethod
    def gaussian(cls, mu: float) -> "MechanismSpec":
        return cls(Family.GAUSSIAN, mu=float(mu))

    @classmethod
    def laplace(cls, mu: float) -> "MechanismSpec":
        return cls(Family.LAPLACE, mu=float(mu))

    @classmethod
    def sgm(cls, sigma: float, p: float, steps: int) -> "MechanismSpec":
        return cls(Family.SUBSAMPLED_GAUSSIAN, sigma=float(sigma), p=float(p), steps=int(steps))

    @classmethod
    def perfectly_private(cls) -> "MechanismSpec":
        return cls(Family.PERFECTLY_PRIVATE)

    @classmethod
    def blatantly_non_private(cls) -> "MechanismSpec":
        return cls(Family.BLATANTLY_NON_PRIVATE)

    @classmethod
    def tabulated(cls, grid: TradeoffCurve) -> "MechanismSpec":
        return cls(Family.TABULATED, grid=grid)

    def spec_string(self) -> str:
        if self.family is Family.GAUSSIAN:
            return f"gaussian:mu={self.mu:g}"
        if self.family is Family.LAPLACE:
            return f"laplace:mu={self.mu:g}"
        if self.family is Family.SUBSAMPLED_GAUSSIAN:
            return f"sgm:sigma={self.sigma:g},p={self.p:g},steps={self.steps}"
        if self.family is Family.TABULATED:
            return "tabulated"
        return self.family.value


_FAMILY_ALIASES = {
    "gaussian": Family.GAUSSIAN,
    "gauss": Family.GAUSSIAN,
    "laplace": Family.LAPLACE,
    "lap": Family.LAPLACE,
    "sgm": Family.SUBSAMPLED_GAUSSIAN,
    "subsampled_gaussian": Family.SUBSAMPLED_GAUSSIAN,
    "pp": Family.PERFECTLY_PRIVATE,
    "perfectly_private": Family.PERFECTLY_PRIVATE,
    "bnp": Family.BLATANTLY_NON_PRIVATE,
    "blatantly_non_private": Family.BLATANTLY_NON_PRIVATE,
    "tabulated": Family.TABULATED,
}


def parse_mechanism(text: str) -> MechanismSpec:
    """Parse the key=value mini-language, e.g. ``gaussian:mu=1.0`` or
    ``sgm:sigma=2.0,p=0.0009,steps=1400000``."""
    head, _, tail = text.strip().partition(":")
    family = _FAMILY_ALIASES.get(head.lower())
    if family is None:
        raise SpecParseError(f"unknown mechanism family {head!r}")
    params = {}
    if tail:
        for item in tail.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise SpecParseError(f"malformed parameter {item!r}")
            params[key.strip().lower()] = value.strip()
    try:
        if family is Family.GAUSSIAN or family is Family.LAPLACE:
            spec = MechanismSpec(family, mu=float(params.pop("mu")))
        elif family is Family.SUBSAMPLED_GAUSSIAN:
            spec = MechanismSpec.sgm(
                sigma=float(params.pop("sigma")),
                p=float(params.pop("p")),
                steps=int(params.pop("steps")),
            )
        elif family is Family.TABULATED:
            path = params.pop("file", None)
            if path is None:
                raise SpecParseError("tabulated spec needs file=<curve.csv>")
            spec = MechanismSpec.tabulated(TradeoffCurve.from_csv(path))
        else:
            spec = MechanismSpec(family)
    except KeyError as exc:
        raise SpecParseError(f"missing parameter {exc} for {family.value}") from exc
    except SpecParseError:
        raise
    except (TypeError, ValueError) as exc:
        raise SpecParseError(f"invalid parameters for {family.value}: {exc}") from exc
    if params:
        raise SpecParseError(f"unexpected parameters {sorted(params)} for {family.value}")
    return spec


def tradeoff_curve(
    spec: MechanismSpec,
    grid_size: int = DEFAULT_GRID_SIZE,
    grid_spacing: float = 1e-3,
) -> TradeoffCurve:
    """Trade-off curve of ``spec`` on a uniform alpha grid.

    Analytic families are sampled directly; subsampled Gaussian specs go
    through the composition accountant (``grid_spacing`` is its loss grid
    step); tabulated specs pass their stored grid through unchanged.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    alphas = np.linspace(0.0, 1.0, grid_size)
    fam = spec.family
    if fam is Family.GAUSSIAN:
        return TradeoffCurve(alphas, gaussian_tradeoff(spec.mu, alphas))
    if fam is Family.LAPLACE:
        return TradeoffCurve(alphas, laplace_tradeoff(spec.mu, alphas))
    if fam is Family.PERFECTLY_PRIVATE:
        return TradeoffCurve(alphas, 1.0 - alphas)
    if fam is Family.BLATANTLY_NON_PRIVATE:
        return TradeoffCurve(alphas, np.zeros_like(alphas))
    if fam is Family.TABULATED:
        return spec.grid
    if fam is Family.SUBSAMPLED_GAUSSIAN:
        from .accountant import composed_tradeoff

        return composed_tradeoff(spec, grid_size=grid_size, grid_spacing=grid_spacing)
    raise SpecParseError(f"no curve constructor for family {fam!r}")
