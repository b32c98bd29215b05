"""Bob-side strategies.

A Bob strategy is any object with ``name`` and ``next_partition(state)``.
Strategies may additionally set ``memo_kind`` to tell the oracle how results
can be cached:

* ``"rank"`` -- the partition depends only on the sorted position multiset
  and labels coins by rank (``rank_sides`` must be provided); states that
  agree up to relabelling coins are interchangeable.
* ``"round"`` -- the partition depends only on the round number, so states
  with identical by-coin positions are interchangeable.
* ``None`` -- no caching is allowed.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, PartitionMismatch, ScriptExhausted
from .game import GameState, GameTrace, Partition


def sw_rank_sides(K: int) -> np.ndarray:
    """Label of each 0-based rank under SW: odd 1-based ranks get side 0."""
    return np.arange(K, dtype=np.uint8) % 2


def sw_partition(state: GameState) -> Partition:
    """Spencer-Winkler split: odd ranks on side 0, even ranks on side 1."""
    side = np.empty(state.K, dtype=np.uint8)
    side[state.rank.order] = sw_rank_sides(state.K)
    return Partition(side)


class SWBob:
    name = "sw"
    memo_kind = "rank"

    def next_partition(self, state: GameState) -> Partition:
        return sw_partition(state)

    @staticmethod
    def rank_sides(posc: Sequence[int]) -> np.ndarray:
        return sw_rank_sides(len(posc))


class ScriptedBob:
    """Replays a fixed partition sequence, one per round."""

    memo_kind = "round"

    def __init__(self, partitions: Sequence[Partition], name: str = "script"):
        self.partitions = tuple(partitions)
        self.name = name

    def next_partition(self, state: GameState) -> Partition:
        if state.t >= len(self.partitions):
            raise ScriptExhausted(f"script has {len(self.partitions)} partitions, asked for round {state.t + 1}")
        p = self.partitions[state.t]
        if len(p) != state.K:
            raise PartitionMismatch(f"scripted partition for round {state.t + 1} has {len(p)} labels")
        return p

    @classmethod
    def from_trace(cls, trace: GameTrace) -> "ScriptedBob":
        return cls([trace.partition(t) for t in range(trace.n)])

    @classmethod
    def from_jsonl(cls, path) -> "ScriptedBob":
        with open(path) as fp:
            trace = GameTrace.read_jsonl(fp, strict=False)
        return cls.from_trace(trace)


class RandomBob:
    """Independent fair coin per coin per round.

    Round ``t`` draws from a generator seeded with ``(seed, t)``, so the
    strategy holds no mutable state and can be shared between games.
    """

    memo_kind = None

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.name = f"random:{self.seed}"

    def next_partition(self, state: GameState) -> Partition:
        rng = np.random.default_rng([self.seed, state.t])
        return Partition(rng.integers(0, 2, size=state.K, dtype=np.uint8))


def scripted_bob(partitions: Sequence[Partition]) -> ScriptedBob:
    return ScriptedBob(partitions)


def random_bob(seed: int) -> RandomBob:
    return RandomBob(seed)


def bob_from_name(name: str):
    """Build a strategy from its CLI name: ``sw``, ``random:<seed>``, ``script:<path>``."""
    kind, _, arg = name.partition(":")
    if kind == "sw" and not arg:
        return SWBob()
    if kind == "random":
        try:
            return RandomBob(int(arg))
        except ValueError:
            raise ConfigError(f"bad seed in bob name {name!r}") from None
    if kind == "script" and arg:
        if not Path(arg).exists():
            raise ConfigError(f"script file not found: {arg}")
        return ScriptedBob.from_jsonl(arg)
    raise ConfigError(f"unknown bob strategy {name!r}")
