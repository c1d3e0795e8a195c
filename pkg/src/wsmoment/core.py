"""Domain types shared across the package, plus instance validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence


class MomentError(Exception):
    """Base class for every error raised by this package."""


class InvalidWeight(MomentError, ValueError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"weight at index {index} is {value!r}; weights must be finite and >= 0")


class EmptyInstance(MomentError, ValueError):
    pass


class InvalidParams(MomentError, ValueError):
    pass


class ZeroTotalWeight(MomentError, ValueError):
    pass


class UnsupportedExponent(MomentError, ValueError):
    pass


class NoCollision(MomentError):
    """A sum-estimation batch saw no colliding pair; the budget is too small."""


class TooLarge(MomentError, ValueError):
    pass


class DegenerateParameters(MomentError, ValueError):
    pass


class InvalidFamilyParams(MomentError, ValueError):
    pass


def validate_instance(weights: Sequence[float]) -> None:
    """Raise unless ``weights`` is a non-empty sequence of finite, non-negative reals."""
    if len(weights) == 0:
        raise EmptyInstance("instance has no elements")
    for i, w in enumerate(weights):
        w = float(w)
        if not math.isfinite(w) or w < 0:
            raise InvalidWeight(i, w)


@dataclass(frozen=True)
class WeightedInstance:
    """The weighted set being estimated. Element ids are 0-based indices into ``weights``."""

    weights: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        validate_instance(weights)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return len(self.weights)

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class ConstantProfile:
    """Multiplicative constants of the estimator budgets."""

    sum_c: float = 480.0
    inner_c: float = 48.0
    outer_c: float = 48.0
    name: str = "paper"

    def __post_init__(self):
        for attr in ("sum_c", "inner_c", "outer_c"):
            value = getattr(self, attr)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParams(f"{attr} must be a positive real, got {value!r}")


PAPER_PROFILE = ConstantProfile()
TEST_PROFILE = ConstantProfile(sum_c=10.0, inner_c=3.0, outer_c=9.0, name="test")
PROFILES = {"paper": PAPER_PROFILE, "test": TEST_PROFILE}


@dataclass(frozen=True)
class EstimatorParams:
    t: float
    eps: float
    delta: float
    eps1: float | None = None
    scale: ConstantProfile = PAPER_PROFILE
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.t) and self.t > 0):
            raise InvalidParams(f"t must be > 0, got {self.t!r}")
        for name in ("eps", "delta"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise InvalidParams(f"{name} must lie in (0, 1), got {value!r}")
        if self.eps1 is None:
            object.__setattr__(self, "eps1", self.eps / 2)
        if not 0 < self.eps1 < 1:
            raise InvalidParams(f"eps1 must lie in (0, 1), got {self.eps1!r}")
        # the Chebyshev step needs eps - eps1 > 0
        if self.eps1 >= self.eps:
            raise InvalidParams(f"eps1 ({self.eps1}) must be smaller than eps ({self.eps})")
        if not 0 <= self.seed < 2**64:
            raise InvalidParams("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class BudgetBreakdown:
    """Proportional-sample budget of one estimator run: ``total = sum_stage + inner * outer``."""

    sum_stage: int
    inner: int
    outer: int
    sum_batches: int = 1
    total: int = field(init=False)

    def __post_init__(self):
        for name in ("sum_stage", "inner", "outer", "sum_batches"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be >= 0")
        object.__setattr__(self, "total", self.sum_stage + self.inner * self.outer)


@dataclass(frozen=True)
class EstimateReport:
    value: float
    samples_proportional: int
    samples_uniform: int
    budget: BudgetBreakdown
    w_hat: float | None = None
