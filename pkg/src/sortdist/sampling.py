"""Deterministic sampling on counter-based substreams.

Every trial gets its own jumped Philox substream, so parallel trials never
share state and reruns are bit-identical.  Poisson draws use CDF inversion
below rate 30 and transformed rejection above; both consume uniforms from
the substream in a fixed order.
"""

from __future__ import annotations

import math

import numpy as np

from .core import AtomicMeasure, DiscreteDistribution, Histogram, poisson_pmf
from .errors import DomainError

__all__ = [
    "substream",
    "poisson_draw",
    "sample_iid",
    "sample_poissonized",
    "empirical_measure",
]

_PTRS_SWITCH = 30.0


def substream(seed: int, trial: int = 0) -> np.random.Generator:
    """Independent generator for one trial of one experiment."""
    bitgen = np.random.Philox(key=np.uint64(seed & (2**64 - 1)))
    if trial:
        bitgen = bitgen.jumped(trial)
    return np.random.Generator(bitgen)


def _poisson_inversion_table(lam: float) -> np.ndarray:
    hi = int(lam + 40.0 * math.sqrt(lam + 1.0) + 30.0)
    return np.cumsum(poisson_pmf(lam, np.arange(hi + 1)))


def _poisson_ptrs(gen: np.random.Generator, lam: float) -> int:
    """Transformed-rejection sampler for large rates (~1.1 uniform pairs per draw)."""
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = gen.random() - 0.5
        v = gen.random()
        us = 0.5 - abs(u)
        k = int(math.floor((2.0 * a / us + b) * u + lam + 0.43))
        if us >= 0.07 and v <= vr:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        if math.log(v * inv_alpha / (a / (us * us) + b)) <= k * loglam - lam - math.lgamma(k + 1.0):
            return k


def poisson_draw(gen: np.random.Generator, lam: float) -> int:
    if lam < 0:
        raise DomainError("rate must be >= 0")
    if lam == 0.0:
        return 0
    if lam < _PTRS_SWITCH:
        table = _poisson_inversion_table(lam)
        return int(np.searchsorted(table, gen.random(), side="right"))
    return _poisson_ptrs(gen, lam)


def sample_poissonized(p: DiscreteDistribution, n: int, gen: np.random.Generator) -> Histogram:
    """Independent Poisson(n p_j) counts per symbol.

    Small rates share one block of uniforms inverted against per-rate CDF
    tables; large rates consume the stream afterwards in symbol order.
    """
    lam = n * p.masses
    counts = np.zeros(p.k, dtype=np.int64)
    u = gen.random(p.k)
    small = (lam > 0) & (lam < _PTRS_SWITCH)
    for rate in np.unique(lam[small]):
        sel = lam == rate
        table = _poisson_inversion_table(float(rate))
        counts[sel] = np.searchsorted(table, u[sel], side="right")
    for j in np.nonzero(lam >= _PTRS_SWITCH)[0]:
        counts[j] = _poisson_ptrs(gen, float(lam[j]))
    return Histogram(counts)


def sample_iid(p: DiscreteDistribution, n: int, gen: np.random.Generator) -> Histogram:
    """Multinomial counts of n i.i.d. draws, by CDF inversion per draw."""
    cdf = np.cumsum(p.masses)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, gen.random(n), side="right")
    return Histogram(np.bincount(idx, minlength=p.k).astype(np.int64))


def empirical_measure(h: Histogram, k: int, n: int | None = None) -> AtomicMeasure:
    """The atom multiset of the plug-in frequencies h_j / n.

    Pass the nominal n explicitly under Poissonized sampling, where the
    realized total differs from the rate; locations may then exceed 1.
    """
    n = h.n if n is None else n
    if n == 0:
        return AtomicMeasure.dirac(0.0, 1.0)
    if k < h.k:
        raise DomainError("k smaller than the histogram support")
    locs = np.concatenate([h.counts / n, np.zeros(k - h.k)])
    return AtomicMeasure(locs, np.full(k, 1.0 / k))
