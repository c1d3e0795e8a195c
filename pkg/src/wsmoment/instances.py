"""Lower-bound instance pairs and synthetic benchmark families.

The idealised lower-bound constructions call for a fractional number of
heavy elements. The generators round the counts and then re-solve the
heavy weight so that the moment gap between the two instances is exact;
what the rounding does to hit probabilities is reported by
:func:`wsmoment.exact.lb_hit_probability`, not hidden.

Heavy elements are placed last unless a shuffle seed is given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DegenerateParameters,
    InvalidFamilyParams,
    InvalidParams,
    UnsupportedExponent,
    WeightedInstance,
)


@dataclass(frozen=True)
class PairAnalysis:
    gap_ratio: float
    n1: int
    n2: int
    d1: float
    d2: float
    raw_n2: float | None = None
    rho_light: float | None = None
    rho_heavy: float | None = None


@dataclass(frozen=True)
class LowerBoundPair:
    light: WeightedInstance
    heavy: WeightedInstance
    family: str
    n: int
    t: float
    eps: float
    analysis: PairAnalysis
    heavy_indices: tuple[int, ...]


def _check_eps(eps: float, upper: float = 1.0) -> None:
    if not 0 < eps < upper:
        raise InvalidParams(f"eps must lie in (0, {upper:g}), got {eps!r}")


def _permute(pair_weights, heavy_idx, seed):
    if seed is None:
        return pair_weights, heavy_idx
    perm = np.random.default_rng(seed).permutation(len(pair_weights[0]))
    # new position j holds old element perm[j]
    inverse = np.argsort(perm)
    moved = [tuple(np.asarray(w)[perm].tolist()) for w in pair_weights]
    return moved, tuple(sorted(int(inverse[i]) for i in heavy_idx))


def gen_lb_proportional(n: int, t: float, eps: float, shuffle_seed: int | None = None) -> LowerBoundPair:
    """Pair whose moments differ by exactly (1 + eps), t > 1.

    Light: n1 elements of weight d1 plus n2 zeros. Heavy: the n2 zeros become
    d2 with n2 * d2^t = eps * n1 * d1^t.
    """
    if not t > 1:
        raise UnsupportedExponent("the proportional lower-bound family needs t > 1")
    if n < 2:
        raise InvalidParams("n must be >= 2")
    _check_eps(eps)
    e = eps ** ((2 * t - 1) / (t - 1))
    d1 = n ** (1 - 1 / t) * eps ** (1 / (t - 1))
    raw_n2 = n * e / (n + e)
    n2 = max(1, round(raw_n2))
    if n2 >= n:
        raise DegenerateParameters(f"rounded heavy count {n2} leaves no light elements (n={n})")
    n1 = n - n2
    d2 = (eps * n1 * d1**t / n2) ** (1 / t)
    light = [d1] * n1 + [0.0] * n2
    heavy = [d1] * n1 + [d2] * n2
    heavy_idx = tuple(range(n1, n))
    (light, heavy), heavy_idx = _permute((light, heavy), heavy_idx, shuffle_seed)
    return LowerBoundPair(
        light=WeightedInstance(tuple(light), label=f"lb-prop-light n={n} t={t:g} eps={eps:g}"),
        heavy=WeightedInstance(tuple(heavy), label=f"lb-prop-heavy n={n} t={t:g} eps={eps:g}"),
        family="lb-prop", n=n, t=t, eps=eps,
        analysis=PairAnalysis(gap_ratio=1 + eps, n1=n1, n2=n2, d1=d1, d2=d2, raw_n2=raw_n2),
        heavy_indices=heavy_idx,
    )


def density_closed_forms(n: int, t: float, eps: float) -> tuple[float, float]:
    """Moment densities of the idealised density-family pair (heavy, light)."""
    base = n ** (1 - 1 / t)
    return (base + 9 * eps**2) / (3 * eps + 9 * eps**2), (base + 3 * eps**2) / (3 * eps + 3 * eps**2)


def gen_lb_density(n: int, t: float, eps: float, shuffle_seed: int | None = None) -> LowerBoundPair:
    """Pair with moment densities within a constant factor and gap (1+3eps)/(1+eps).

    Heavy: n1 elements of weight d1 and n2 of weight d2. Light: the same n1,
    then n2/3 of weight d2 and 2*n2/3 zeros. n2 is a multiple of 3.
    """
    if not t > 1:
        raise UnsupportedExponent("the density lower-bound family needs t > 1")
    _check_eps(eps, 1 / 3)
    e = (3 * eps) ** ((2 * t - 1) / (t - 1))
    d1 = n ** (1 - 1 / t) * (3 * eps) ** (1 / (t - 1))
    raw_n2 = n * e / (n + e)
    n2 = max(3, 3 * round(raw_n2 / 3))
    n1 = n - n2
    if n1 < n2:
        raise DegenerateParameters(f"n={n} too small: {n2} heavy elements would outnumber {n1} light ones")
    d2 = (3 * eps * n1 * d1**t / n2) ** (1 / t)
    third = n2 // 3
    heavy = [d1] * n1 + [d2] * n2
    light = [d1] * n1 + [d2] * third + [0.0] * (n2 - third)
    heavy_idx = tuple(range(n1, n))
    (light, heavy), heavy_idx = _permute((light, heavy), heavy_idx, shuffle_seed)
    rho_h, rho_l = density_closed_forms(n, t, eps)
    return LowerBoundPair(
        light=WeightedInstance(tuple(light), label=f"lb-density-light n={n} t={t:g} eps={eps:g}"),
        heavy=WeightedInstance(tuple(heavy), label=f"lb-density-heavy n={n} t={t:g} eps={eps:g}"),
        family="lb-density", n=n, t=t, eps=eps,
        analysis=PairAnalysis(gap_ratio=(1 + 3 * eps) / (1 + eps), n1=n1, n2=n2, d1=d1, d2=d2,
                              raw_n2=raw_n2, rho_light=rho_l, rho_heavy=rho_h),
        heavy_indices=heavy_idx,
    )


def gen_lb_small_t(n: int, t: float, eps: float, shuffle_seed: int | None = None) -> LowerBoundPair:
    """Pair for t <= 1/2: one element of weight n-1, then n-1 zeros or n-1 tiny weights."""
    if not 0 < t <= 0.5:
        raise UnsupportedExponent("the small-t lower-bound family needs 0 < t <= 1/2")
    if n < 2:
        raise InvalidParams("n must be >= 2")
    _check_eps(eps)
    big = float(n - 1)
    tiny = eps ** (1 / t) / (n - 1)
    light = [big] + [0.0] * (n - 1)
    heavy = [big] + [tiny] * (n - 1)
    heavy_idx = tuple(range(1, n))
    (light, heavy), heavy_idx = _permute((light, heavy), heavy_idx, shuffle_seed)
    return LowerBoundPair(
        light=WeightedInstance(tuple(light), label=f"lb-smallt-light n={n} t={t:g} eps={eps:g}"),
        heavy=WeightedInstance(tuple(heavy), label=f"lb-smallt-heavy n={n} t={t:g} eps={eps:g}"),
        family="lb-smallt", n=n, t=t, eps=eps,
        analysis=PairAnalysis(gap_ratio=1 + eps * (n - 1) ** (1 - 2 * t), n1=1, n2=n - 1, d1=big, d2=tiny),
        heavy_indices=heavy_idx,
    )


LB_GENERATORS = {
    "lb-prop": gen_lb_proportional,
    "lb-density": gen_lb_density,
    "lb-smallt": gen_lb_small_t,
}


@dataclass(frozen=True)
class Uniform:
    c: float = 1.0


@dataclass(frozen=True)
class PowerLaw:
    alpha: float = 2.0


@dataclass(frozen=True)
class FewHeavy:
    k: int = 1
    ratio: float = 100.0


def gen_synthetic(n: int, family, seed: int = 0) -> WeightedInstance:
    """Benchmark instance; ``seed`` only shuffles element order."""
    if n < 1:
        raise InvalidFamilyParams("n must be >= 1")
    if isinstance(family, Uniform):
        if not family.c > 0:
            raise InvalidFamilyParams("Uniform needs c > 0")
        weights = np.full(n, float(family.c))
        label = f"uniform(c={family.c:g})"
    elif isinstance(family, PowerLaw):
        if not family.alpha > 1:
            raise InvalidFamilyParams("PowerLaw needs alpha > 1")
        # (i+1)^-alpha already peaks at 1 for i = 0
        weights = np.arange(1, n + 1, dtype=np.float64) ** -float(family.alpha)
        label = f"powerlaw(alpha={family.alpha:g})"
    elif isinstance(family, FewHeavy):
        if not (1 <= family.k <= n and family.ratio > 1):
            raise InvalidFamilyParams("FewHeavy needs 1 <= k <= n and ratio > 1")
        weights = np.ones(n)
        weights[: family.k] = float(family.ratio)
        label = f"fewheavy(k={family.k},ratio={family.ratio:g})"
    else:
        raise InvalidFamilyParams(f"unknown family {family!r}")
    weights = np.random.default_rng(seed).permutation(weights)
    return WeightedInstance(tuple(weights.tolist()), label=label)
