"""Brute-force ground truth: W, S_t, the moment-density parameter and lower-bound hit probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .core import TooLarge, UnsupportedExponent, WeightedInstance, ZeroTotalWeight

if TYPE_CHECKING:
    from .instances import LowerBoundPair

BRUTEFORCE_MAX_N = 20


def _weights(inst) -> np.ndarray:
    if isinstance(inst, WeightedInstance):
        return np.asarray(inst.weights, dtype=np.float64)
    return np.asarray(inst, dtype=np.float64)


def power_sum(weights, t: float) -> float:
    """Correctly rounded sum of w**t, with 0**t = 0."""
    w = np.asarray(weights, dtype=np.float64)
    w = w[w > 0]
    return math.fsum(np.power(w, t).tolist())


def exact_moment(inst, t: float) -> float:
    """S_t of ``inst``; t = 1 gives the total weight W."""
    if not t > 0:
        raise UnsupportedExponent(f"t must be > 0, got {t!r}")
    return power_sum(_weights(inst), t)


def total_weight(inst) -> float:
    return power_sum(_weights(inst), 1.0)


@dataclass(frozen=True)
class DensityReport:
    rho: float
    argmax_element: int | None = None
    argmax_subset: tuple[int, ...] | None = None


def moment_density_closed(inst, t: float) -> DensityReport:
    """Moment density for t > 1 via the best singleton.

    For a subset L, sum_L w^t / sum_L w is the w-weighted average of
    w^(t-1) over L. An average never exceeds its largest term, and w^(t-1)
    increases with w when t > 1, so the maximising subset is the singleton
    holding the largest weight. Elements of weight 0 are skipped, since a
    subset needs positive total weight for the ratio to be defined.
    """
    if not t > 1:
        raise UnsupportedExponent("closed-form density needs t > 1; use moment_density_bruteforce")
    w = _weights(inst)
    if not np.any(w > 0):
        raise ZeroTotalWeight("density is undefined when all weights are zero")
    top = int(np.argmax(w))
    rho = w[top] ** (t - 1) * total_weight(w) / exact_moment(w, t)
    return DensityReport(rho=float(rho), argmax_element=top)


def moment_density_bruteforce(inst, t: float) -> DensityReport:
    """Exhaustive max over every subset with positive total weight (n <= 20)."""
    w = _weights(inst)
    n = w.size
    if n > BRUTEFORCE_MAX_N:
        raise TooLarge(f"brute force enumerates 2^n subsets; n={n} exceeds {BRUTEFORCE_MAX_N}")
    if not t > 0:
        raise UnsupportedExponent(f"t must be > 0, got {t!r}")
    if not np.any(w > 0):
        raise ZeroTotalWeight("density is undefined when all weights are zero")
    wt = np.where(w > 0, np.power(w, t), 0.0)
    sums = np.zeros(1 << n)
    sums_t = np.zeros(1 << n)
    for i in range(n):
        # masks in [2^i, 2^(i+1)) are the earlier masks plus element i
        lo, hi = 1 << i, 1 << (i + 1)
        sums[lo:hi] = sums[:lo] + w[i]
        sums_t[lo:hi] = sums_t[:lo] + wt[i]
    valid = sums > 0
    ratio = np.full(sums.shape, -np.inf)
    ratio[valid] = sums_t[valid] / sums[valid]
    best = int(np.argmax(ratio))
    rho = ratio[best] * total_weight(w) / exact_moment(w, t)
    subset = tuple(i for i in range(n) if best >> i & 1)
    return DensityReport(rho=float(rho), argmax_subset=subset)


def variance_ratio(inst, t: float) -> float:
    """W * sum w^(2t-1) / S_t^2, the normalised second moment of the inner estimator."""
    w = _weights(inst)
    return total_weight(w) * power_sum(w, 2 * t - 1) / exact_moment(w, t) ** 2


@dataclass(frozen=True)
class HitProbability:
    """Per-draw chance of touching the heavy class, measured and closed-form."""

    p_proportional: float
    p_uniform: float
    closed_form_proportional: float
    closed_form_uniform: float


def closed_form_hit_probability(family: str, n: int, t: float, eps: float) -> tuple[float, float]:
    """Hit probabilities of the idealised (non-integer) constructions."""
    if family == "lb-prop":
        e = eps ** ((2 * t - 1) / (t - 1))
        return 1.0 / (1.0 + n ** (1 - 1 / t) / eps**2), 1.0 / (1.0 + n / e)
    if family == "lb-density":
        e = (3 * eps) ** ((2 * t - 1) / (t - 1))
        return 1.0 / (1.0 + n ** (1 - 1 / t) / (9 * eps**2)), 1.0 / (1.0 + n / e)
    if family == "lb-smallt":
        small = eps ** (1 / t)
        return small / (small + (n - 1)), (n - 1) / n
    raise ValueError(f"unknown family {family!r}")


def lb_hit_probability(pair: LowerBoundPair, variant: str = "heavy") -> HitProbability:
    """Exact hit probabilities of the heavy class, measured on the generated weights.

    ``variant`` picks which instance of the pair is queried.
    """
    inst = pair.heavy if variant == "heavy" else pair.light
    if variant not in ("heavy", "light"):
        raise ValueError("variant must be 'heavy' or 'light'")
    w = _weights(inst)
    idx = np.asarray(pair.heavy_indices, dtype=np.int64)
    heavy_mass = math.fsum(w[idx].tolist())
    p_prop = heavy_mass / total_weight(w) if heavy_mass > 0 else 0.0
    p_unif = int(np.count_nonzero(w[idx] > 0)) / w.size
    cf_prop, cf_unif = closed_form_hit_probability(pair.family, pair.n, pair.t, pair.eps)
    return HitProbability(p_prop, p_unif, cf_prop, cf_unif)
