"""Simulated sampling oracles with seeded randomness and exact query accounting.

A handle exposes both proportional and uniform draws (the hybrid model) and
counts every draw in its ledger. Building the sampler is O(n) and is not
counted; only draws are.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import InvalidParams, WeightedInstance, ZeroTotalWeight


class SampleKind(enum.Enum):
    PROPORTIONAL = "proportional"
    UNIFORM = "uniform"


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit seed for trial ``index``, independent of scheduling order."""
    state = np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1, np.uint64)
    return int(state[0])


class AliasTable:
    """Vose alias table over the positive entries of ``weights``.

    Zero weights are left out of the table entirely, so they can never be
    returned, whatever rounding happens during construction.
    """

    n_streams = 1

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=np.float64)
        support = np.flatnonzero(weights > 0)
        if support.size == 0:
            raise ZeroTotalWeight("all weights are zero; proportional sampling is undefined")
        self.size = int(weights.size)
        self.support = support
        self.total_weight = math.fsum(weights[support].tolist())

        k = support.size
        scaled = weights[support] * (k / self.total_weight)
        prob = np.ones(k)
        alias = np.arange(k)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            if scaled[g] < 1.0:
                small.append(g)
            else:
                large.append(g)
        # leftovers are 1 up to rounding; they keep prob 1 and alias to themselves
        self.prob = prob
        self.alias = alias
        self.prob.setflags(write=False)
        self.alias.setflags(write=False)

    def sample(self, streams, size: int) -> np.ndarray:
        rng = streams[0]
        k = self.support.size
        slot = rng.integers(0, k, size=size)
        coin = rng.random(size)
        picked = np.where(coin < self.prob[slot], slot, self.alias[slot])
        return self.support[picked]

    def probabilities(self) -> np.ndarray:
        """Exact per-element draw probability implied by the table."""
        k = self.support.size
        mass = np.zeros(k)
        for i in range(k):
            mass[i] += self.prob[i]
            mass[self.alias[i]] += 1.0 - self.prob[i]
        out = np.zeros(self.size)
        out[self.support] = mass / k
        return out


class CoupledSampler:
    """Proportional sampler split into a base part and an extra class.

    Each draw first decides, on its own stream, whether to land in the extra
    class (probability ``W_extra / W``); otherwise it draws from the base
    alias table on a second stream. Two samplers that share the base weights
    and seed therefore emit identical draws until the extra class is hit.
    """

    n_streams = 3

    def __init__(self, weights, extra_indices):
        weights = np.asarray(weights, dtype=np.float64)
        extra = np.zeros(weights.size, dtype=bool)
        extra[np.asarray(extra_indices, dtype=np.int64)] = True
        base_w = np.where(extra, 0.0, weights)
        extra_w = np.where(extra, weights, 0.0)
        self.size = int(weights.size)
        self.base = AliasTable(base_w)
        extra_total = math.fsum(extra_w.tolist())
        self.extra = AliasTable(extra_w) if extra_total > 0 else None
        self.total_weight = math.fsum(weights[weights > 0].tolist())
        self.extra_prob = extra_total / self.total_weight

    def sample(self, streams, size: int) -> np.ndarray:
        coin = streams[0].random(size)
        out = self.base.sample(streams[1:2], size)
        if self.extra is not None:
            hit = coin < self.extra_prob
            n_hit = int(hit.sum())
            if n_hit:
                out[hit] = self.extra.sample(streams[2:3], n_hit)
        return out

    def probabilities(self) -> np.ndarray:
        out = (1.0 - self.extra_prob) * self.base.probabilities()
        if self.extra is not None:
            out += self.extra_prob * self.extra.probabilities()
        return out


@dataclass
class QueryLedger:
    proportional_count: int = 0
    uniform_count: int = 0


class OracleHandle:
    """One trial's view of an instance: sampler, RNG state and query ledger.

    Not safe to share across threads; build one handle per trial.
    """

    def __init__(self, instance: WeightedInstance, seed: int, sampler=None):
        if not 0 <= seed < 2**64:
            raise InvalidParams("seed must be a 64-bit unsigned integer")
        self.instance = instance
        self.seed = seed
        self._weights = np.asarray(instance.weights, dtype=np.float64)
        self.sampler = sampler if sampler is not None else AliasTable(self._weights)
        if self.sampler.size != instance.n:
            raise InvalidParams("sampler size does not match instance size")
        children = np.random.SeedSequence(seed).spawn(self.sampler.n_streams + 1)
        self._uniform_rng = np.random.Generator(np.random.PCG64(children[0]))
        self._streams = [np.random.Generator(np.random.PCG64(c)) for c in children[1:]]
        self.ledger = QueryLedger()

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def total_weight(self) -> float:
        return self.sampler.total_weight

    def draw_many(self, kind: SampleKind, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``size`` samples of ``kind``; returns (indices, weights)."""
        if size < 0:
            raise InvalidParams("size must be >= 0")
        kind = SampleKind(kind)
        if kind is SampleKind.PROPORTIONAL:
            idx = self.sampler.sample(self._streams, size)
            self.ledger.proportional_count += size
        else:
            idx = self._uniform_rng.integers(0, self.n, size=size)
            self.ledger.uniform_count += size
        return idx, self._weights[idx]

    def draw(self, kind: SampleKind = SampleKind.PROPORTIONAL) -> tuple[int, float]:
        idx, w = self.draw_many(kind, 1)
        return int(idx[0]), float(w[0])

    def queries_used(self) -> tuple[int, int]:
        return self.ledger.proportional_count, self.ledger.uniform_count


def build_oracle(instance: WeightedInstance, seed: int) -> OracleHandle:
    """Alias-table oracle over ``instance``; raises ZeroTotalWeight if all weights are 0."""
    return OracleHandle(instance, seed)


def build_coupled_oracles(light: WeightedInstance, heavy: WeightedInstance,
                          heavy_indices, seed: int) -> tuple[OracleHandle, OracleHandle]:
    """Two handles whose proportional draws coincide until a heavy element is drawn.

    ``light`` and ``heavy`` must agree everywhere outside ``heavy_indices``,
    and ``light`` must be zero on them.
    """
    lw = np.asarray(light.weights)
    hw = np.asarray(heavy.weights)
    if lw.shape != hw.shape:
        raise InvalidParams("coupled instances must have the same size")
    mask = np.zeros(lw.size, dtype=bool)
    mask[np.asarray(heavy_indices, dtype=np.int64)] = True
    if np.any(lw[mask] != 0) or np.any(lw[~mask] != hw[~mask]):
        raise InvalidParams("instances differ outside the heavy class")
    return (OracleHandle(light, seed, CoupledSampler(lw, heavy_indices)),
            OracleHandle(heavy, seed, CoupledSampler(hw, heavy_indices)))
