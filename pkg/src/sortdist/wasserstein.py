"""Exact Wasserstein-1 distance between atomic measures and its dual side.

Everything here is breakpoint arithmetic on step CDFs; no quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AtomicMeasure
from .errors import InvalidWitnessError, MassMismatchError

__all__ = ["LipschitzWitness", "w1", "dual_value", "optimal_witness"]

_MASS_TOL = 1e-10
_SLOPE_TOL = 1e-12


@dataclass(frozen=True)
class LipschitzWitness:
    """Piecewise-linear test function with every slope in [-1, 1].

    Defined on [0, inf): value_at_zero at x = 0, slope slopes[i] on
    [breakpoints[i], breakpoints[i+1]) and slopes[-1] beyond the last
    breakpoint.  breakpoints[0] must be 0.
    """

    breakpoints: np.ndarray
    slopes: np.ndarray
    value_at_zero: float = 0.0

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        sl = np.asarray(self.slopes, dtype=float)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)
        if bp.ndim != 1 or sl.ndim != 1 or bp.size != sl.size or bp.size == 0:
            raise InvalidWitnessError("need equally many breakpoints and slopes")
        if bp[0] != 0.0 or np.any(np.diff(bp) <= 0):
            raise InvalidWitnessError("breakpoints must start at 0 and increase")
        if np.any(np.abs(sl) > 1.0 + _SLOPE_TOL):
            raise InvalidWitnessError("slope exceeds 1 in absolute value")

    def __call__(self, x) -> np.ndarray | float:
        xx = np.asarray(x, dtype=float)
        vals = self.value_at_zero + np.zeros_like(xx)
        seg_end = np.append(self.breakpoints[1:], np.inf)
        cum = self.value_at_zero
        for lo, hi, s in zip(self.breakpoints, seg_end, self.slopes):
            vals = np.where(xx >= lo, cum + s * (np.minimum(xx, hi) - lo), vals)
            if np.isfinite(hi):
                cum += s * (hi - lo)
        return float(vals) if np.isscalar(x) else vals

    @staticmethod
    def constant(value: float = 0.0) -> "LipschitzWitness":
        return LipschitzWitness(np.array([0.0]), np.array([0.0]), value)


def _merged_cdfs(mu: AtomicMeasure, nu: AtomicMeasure):
    """Common sorted breakpoints with both CDFs evaluated there."""
    bp = np.union1d(mu.locations, nu.locations)
    cum_mu = np.concatenate([[0.0], np.cumsum(mu.weights)])
    cum_nu = np.concatenate([[0.0], np.cumsum(nu.weights)])
    f_mu = cum_mu[np.searchsorted(mu.locations, bp, side="right")]
    f_nu = cum_nu[np.searchsorted(nu.locations, bp, side="right")]
    return bp, f_mu, f_nu


def w1(mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    """Integral of |F_mu - F_nu| over the line, exact on the merged breakpoints."""
    if abs(mu.total_mass - nu.total_mass) > _MASS_TOL:
        raise MassMismatchError(
            f"total masses differ: {mu.total_mass!r} vs {nu.total_mass!r}"
        )
    if mu.locations.size == 0 or nu.locations.size == 0:
        return 0.0
    bp, f_mu, f_nu = _merged_cdfs(mu, nu)
    gaps = np.diff(bp)
    return float(np.abs(f_mu - f_nu)[:-1] @ gaps)


def dual_value(f: LipschitzWitness, mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    """E_mu[f] - E_nu[f]; never exceeds w1(mu, nu) for equal-mass measures."""
    if abs(mu.total_mass - nu.total_mass) > _MASS_TOL:
        raise MassMismatchError("dual pairing requires equal total masses")
    return float(f(mu.locations) @ mu.weights - f(nu.locations) @ nu.weights)


def optimal_witness(mu: AtomicMeasure, nu: AtomicMeasure) -> LipschitzWitness:
    """A maximizing witness: slope sign(F_nu - F_mu) between breakpoints."""
    if abs(mu.total_mass - nu.total_mass) > _MASS_TOL:
        raise MassMismatchError("witness construction requires equal total masses")
    if mu.locations.size == 0 or nu.locations.size == 0:
        return LipschitzWitness.constant(0.0)
    bp, f_mu, f_nu = _merged_cdfs(mu, nu)
    starts = bp
    slopes = np.sign(f_nu - f_mu)
    if starts[0] > 0.0:
        starts = np.concatenate([[0.0], starts])
        slopes = np.concatenate([[0.0], slopes])
    slopes[-1] = 0.0  # CDFs agree beyond the last atom
    return LipschitzWitness(starts, slopes, 0.0)
