"""Repeated estimator trials, distinguishability experiments and CSV output."""

from __future__ import annotations

import csv
import math
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import BudgetBreakdown, EstimatorParams, InvalidParams, MomentError, WeightedInstance
from .estimators import estimate_moment, required_budget
from .exact import exact_moment, lb_hit_probability
from .instances import LowerBoundPair
from .oracles import OracleHandle, SampleKind, derive_seed

TRIAL_COLUMNS = (
    "family", "n", "t", "eps", "delta", "profile", "trials", "successes", "success_rate",
    "mean_rel_err", "max_rel_err", "samples_sum_stage", "samples_inner", "samples_outer",
    "samples_total", "wall_time_ns",
)
DISTINGUISH_COLUMNS = (
    "family", "n", "t", "eps", "budget", "trials", "variant", "exact_hit_p",
    "predicted_hit_rate", "empirical_hit_rate",
)


@dataclass(frozen=True)
class TrialStats:
    family: str
    n: int
    t: float
    eps: float
    delta: float
    profile: str
    trials: int
    successes: int
    success_rate: float
    mean_rel_error: float
    max_rel_error: float
    samples_per_trial: BudgetBreakdown
    wall_time_ns: int
    failures: dict[str, int] = field(default_factory=dict)


def _one_trial(inst, params, seed, truth):
    handle = OracleHandle(inst, seed)
    try:
        report = estimate_moment(handle, params, n=inst.n)
    except MomentError as exc:
        return None, type(exc).__name__
    return abs(report.value - truth) / truth, None


def run_trials(inst: WeightedInstance, params: EstimatorParams, trials: int, master_seed: int,
               workers: int = 1, measure_time: bool = True) -> TrialStats:
    """Run ``trials`` independent estimates and score them against the exact S_t.

    A trial succeeds when ``|value - S_t| <= eps * S_t``. Estimator errors
    count as failures and are tallied by error name. With
    ``measure_time=False`` the wall time is reported as 0, which keeps
    output byte-reproducible.
    """
    if trials < 1:
        raise InvalidParams("trials must be >= 1")
    budget = required_budget(params.t, inst.n, params)
    truth = exact_moment(inst, params.t)
    seeds = [derive_seed(master_seed, i) for i in range(trials)]

    start = time.perf_counter_ns()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: _one_trial(inst, params, s, truth), seeds))
    else:
        results = [_one_trial(inst, params, s, truth) for s in seeds]
    elapsed = time.perf_counter_ns() - start if measure_time else 0

    errors = [r for r, _ in results if r is not None]
    failures = Counter(reason for _, reason in results if reason is not None)
    successes = sum(1 for r in errors if r <= params.eps)
    return TrialStats(
        family=inst.label or "custom", n=inst.n, t=params.t, eps=params.eps, delta=params.delta,
        profile=params.scale.name, trials=trials, successes=successes,
        success_rate=successes / trials,
        mean_rel_error=math.fsum(errors) / len(errors) if errors else math.nan,
        max_rel_error=max(errors) if errors else math.nan,
        samples_per_trial=budget, wall_time_ns=elapsed, failures=dict(sorted(failures.items())),
    )


@dataclass(frozen=True)
class DistinguishRow:
    variant: str
    exact_hit_p: float
    predicted_hit_rate: float
    empirical_hit_rate: float
    hits: int


@dataclass(frozen=True)
class DistinguishabilityReport:
    family: str
    n: int
    t: float
    eps: float
    budget: int
    trials: int
    rows: tuple[DistinguishRow, ...]


def distinguishability_report(pair: LowerBoundPair, budget: int, trials: int,
                              master_seed: int) -> DistinguishabilityReport:
    """How often ``budget`` proportional draws touch the heavy class, per instance of the pair.

    The prediction is 1 - (1 - p)^budget with p the exact per-draw hit
    probability on the generated weights.
    """
    if budget < 1:
        raise InvalidParams("budget must be >= 1")
    if trials < 1:
        raise InvalidParams("trials must be >= 1")
    heavy_mask = np.zeros(pair.n, dtype=bool)
    heavy_mask[list(pair.heavy_indices)] = True
    rows = []
    for variant, inst in (("light", pair.light), ("heavy", pair.heavy)):
        p = lb_hit_probability(pair, variant).p_proportional
        hits = 0
        for i in range(trials):
            handle = OracleHandle(inst, derive_seed(master_seed, i))
            idx, _ = handle.draw_many(SampleKind.PROPORTIONAL, budget)
            hits += bool(heavy_mask[idx].any())
        rows.append(DistinguishRow(variant=variant, exact_hit_p=p,
                                   predicted_hit_rate=-math.expm1(budget * math.log1p(-p)),
                                   empirical_hit_rate=hits / trials, hits=hits))
    return DistinguishabilityReport(family=pair.family, n=pair.n, t=pair.t, eps=pair.eps,
                                    budget=budget, trials=trials, rows=tuple(rows))


def _cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _trial_row(s: TrialStats) -> list:
    b = s.samples_per_trial
    return [s.family, s.n, float(s.t), float(s.eps), float(s.delta), s.profile, s.trials,
            s.successes, s.success_rate, s.mean_rel_error, s.max_rel_error,
            b.sum_stage, b.inner, b.outer, b.total, s.wall_time_ns]


def _distinguish_rows(r: DistinguishabilityReport) -> list[list]:
    return [[r.family, r.n, float(r.t), float(r.eps), r.budget, r.trials, row.variant,
             row.exact_hit_p, row.predicted_hit_rate, row.empirical_hit_rate] for row in r.rows]


def write_report(stats_or_report, path) -> None:
    """Write TrialStats (one or many) or a DistinguishabilityReport as CSV.

    The header is always written; floats carry 17 significant digits.
    OSError from the filesystem propagates unchanged.
    """
    items = stats_or_report
    if isinstance(items, (TrialStats, DistinguishabilityReport)):
        items = [items]
    items = list(items)
    if items and all(isinstance(x, DistinguishabilityReport) for x in items):
        header, rows = DISTINGUISH_COLUMNS, [row for r in items for row in _distinguish_rows(r)]
    elif all(isinstance(x, TrialStats) for x in items):
        header, rows = TRIAL_COLUMNS, [_trial_row(s) for s in items]
    else:
        raise TypeError("write_report takes TrialStats or DistinguishabilityReport values, not a mix")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_cell(v) for v in row] for row in rows)


def sweep(points: Iterable[tuple[WeightedInstance, EstimatorParams, int]], master_seed: int,
          workers: int = 1, measure_time: bool = True) -> list[TrialStats]:
    """run_trials over ``(instance, params, trials)`` grid points, each point with its own derived seed."""
    return [run_trials(inst, params, trials, derive_seed(master_seed, i), workers=workers,
                       measure_time=measure_time)
            for i, (inst, params, trials) in enumerate(points)]
