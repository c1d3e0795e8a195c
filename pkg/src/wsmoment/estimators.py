"""Sum and moment estimation from proportional samples.

The moment estimator is a median of means: get an estimate W_hat of the
total weight, then for each of ``outer`` batches average
``W_hat * w(a)^(t-1)`` over ``inner`` proportional draws, and return the
median of the batch means. ``W_hat * w^(t-1)`` equals ``w^t / (w / W_hat)``;
the first form skips a division.

All logarithms are natural and every count is rounded up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BudgetBreakdown,
    ConstantProfile,
    EstimateReport,
    EstimatorParams,
    InvalidParams,
    MomentError,
    NoCollision,
    UnsupportedExponent,
)
from .oracles import OracleHandle, SampleKind


def _ceil(x: float) -> int:
    # a formula that is integral in exact arithmetic, like 48*100/0.1**2, may land a ulp above
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def _check_exponent(t: float) -> None:
    if t <= 0.5:
        raise UnsupportedExponent("t<=1/2 has no sublinear estimator")


def sum_stage_budget(n: int, eps1: float, delta: float, scale: ConstantProfile) -> tuple[int, int]:
    """(samples, batches) of the sum stage."""
    log_term = math.log(2 / delta)
    m = _ceil(scale.sum_c * math.sqrt(n) * log_term / eps1)
    batches = _ceil(scale.outer_c * log_term)
    return m, max(1, min(batches, m // 2))


def required_budget(t: float, n: int, params: EstimatorParams) -> BudgetBreakdown:
    """Proportional-sample budget of :func:`estimate_moment` for an instance of size ``n``."""
    _check_exponent(t)
    if n < 1:
        raise InvalidParams("n must be >= 1")
    scale = params.scale
    m, batches = sum_stage_budget(n, params.eps1, params.delta, scale)
    if t == 1:
        return BudgetBreakdown(sum_stage=m, inner=0, outer=0, sum_batches=batches)
    power = 1 - 1 / t if t > 1 else 1 / t - 1
    inner = _ceil(scale.inner_c * n**power / params.eps**2)
    outer = _ceil(scale.outer_c * math.log(2 / params.delta))
    return BudgetBreakdown(sum_stage=m, inner=inner, outer=outer, sum_batches=batches)


@dataclass(frozen=True)
class SumEstimate:
    w_hat: float
    samples: int
    batches: int
    batch_estimates: tuple[float, ...] = ()


def collision_estimate(indices: np.ndarray, weights: np.ndarray) -> float:
    """C(m,2) / sum over colliding pairs i<j of 1/w(a_i).

    Under proportional sampling each pair collides on a with probability
    (w(a)/W)^2, so the denominator has expectation C(m,2)/W.
    """
    m = indices.size
    _, first, counts = np.unique(indices, return_index=True, return_counts=True)
    pairs = counts * (counts - 1) / 2
    z = float(np.sum(pairs / weights[first]))
    if z == 0.0:
        raise NoCollision(f"no colliding pair among {m} draws; the sum-stage budget is too small")
    return m * (m - 1) / 2 / z


def _split(total: int, parts: int) -> list[int]:
    q, r = divmod(total, parts)
    return [q + 1] * r + [q] * (parts - r)


def estimate_sum(handle: OracleHandle, eps1: float, delta: float, scale: ConstantProfile,
                 n: int | None = None, samples: int | None = None,
                 batches: int | None = None) -> SumEstimate:
    """Collision-based estimate of W, amplified by a median over batches.

    ``samples``/``batches`` override the budget; by default it is
    ceil(sum_c * sqrt(n) * ln(2/delta) / eps1) draws split nearly evenly into
    ceil(outer_c * ln(2/delta)) batches.
    """
    n = handle.n if n is None else n
    default_m, default_b = sum_stage_budget(n, eps1, delta, scale)
    m = default_m if samples is None else samples
    b = (default_b if samples is None else max(1, min(default_b, m // 2))) if batches is None else batches
    if b < 1 or m < 2 * b:
        raise InvalidParams(f"{m} samples cannot fill {b} batches of at least 2 draws")
    before = handle.ledger.proportional_count
    estimates = []
    for size in _split(m, b):
        idx, w = handle.draw_many(SampleKind.PROPORTIONAL, size)
        estimates.append(collision_estimate(idx, w))
    used = handle.ledger.proportional_count - before
    return SumEstimate(w_hat=float(np.median(estimates)), samples=used, batches=b,
                       batch_estimates=tuple(estimates))


def batch_mean(w_hat: float, weights: np.ndarray, t: float) -> float:
    if np.any(weights <= 0):
        raise MomentError("proportional oracle returned a non-positive weight")
    return w_hat * float(np.sum(np.power(weights, t - 1))) / weights.size


def estimate_moment(handle: OracleHandle, params: EstimatorParams, n: int | None = None,
                    budget: BudgetBreakdown | None = None,
                    w_hat: float | None = None) -> EstimateReport:
    """(eps, delta)-estimate of S_t for t > 1/2.

    ``budget`` overrides the computed one. Passing ``w_hat`` skips the sum
    stage and uses the given value instead (with the exact W this makes each
    draw an unbiased estimate of S_t); the report's budget then has
    ``sum_stage == 0``.
    """
    t = params.t
    _check_exponent(t)
    n = handle.n if n is None else n
    if budget is None:
        budget = required_budget(t, n, params)
    if w_hat is not None:
        budget = BudgetBreakdown(sum_stage=0, inner=budget.inner, outer=budget.outer)
    if t != 1 and (budget.inner < 1 or budget.outer < 1):
        raise InvalidParams("inner and outer budgets must be >= 1 for t != 1")
    start_p, start_u = handle.queries_used()

    if w_hat is None:
        est = estimate_sum(handle, params.eps1, params.delta, params.scale, n=n,
                           samples=budget.sum_stage, batches=budget.sum_batches)
        w_hat = est.w_hat
    if t == 1:
        value = w_hat
    else:
        means = []
        for _ in range(budget.outer):
            _, w = handle.draw_many(SampleKind.PROPORTIONAL, budget.inner)
            means.append(batch_mean(w_hat, w, t))
        value = float(np.median(means))

    end_p, end_u = handle.queries_used()
    return EstimateReport(value=value, samples_proportional=end_p - start_p,
                          samples_uniform=end_u - start_u, budget=budget, w_hat=w_hat)


def inner_expectation(handle: OracleHandle, t: float, w_hat: float) -> float:
    """E[w_hat * w(a)^(t-1)] under the handle's sampler, by enumerating its draw probabilities.

    With ``w_hat`` equal to the true total weight this is S_t.
    """
    probs = handle.sampler.probabilities()
    w = np.asarray(handle.instance.weights)
    keep = probs > 0
    return math.fsum((probs[keep] * w_hat * np.power(w[keep], t - 1)).tolist())
