"""Deterministic state machine for the (ell, r; K, n) coin game.

Coins are identified by ids ``0..K-1``.  A coin's position is the number of
corruptions its message hypothesis would need so far.  Ranks are reported
1-based everywhere outside this module's internal arrays; ties in position
are ordered by ascending coin id.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    ConfigError,
    GameFinished,
    GameNotFinished,
    PartitionMismatch,
    TraceError,
)

MAX_ROUNDS = 2**40


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_fraction(r) -> Fraction:
    """Parse a radius given as Fraction, int, float or a string like ``"31/67"``.

    Floats go through their shortest repr so that ``0.3`` means 3/10.
    """
    if isinstance(r, Fraction):
        f = r
    elif isinstance(r, float):
        f = Fraction(repr(r))
    elif isinstance(r, (int, str)):
        try:
            f = Fraction(r)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"cannot parse radius {r!r}") from exc
    else:
        raise ConfigError(f"cannot parse radius {r!r}")
    if not 0 <= f <= 1:
        raise ConfigError(f"radius must lie in [0, 1], got {f}")
    return f


def board_threshold(n: int, r) -> int:
    """Largest position that still counts as on the board: floor(r * n)."""
    return math.floor(as_fraction(r) * n)


@dataclass(frozen=True)
class GameConfig:
    K: int
    n: int

    def __post_init__(self):
        if not isinstance(self.K, (int, np.integer)) or self.K < 2:
            raise ConfigError(f"K must be an integer >= 2, got {self.K!r}")
        if not isinstance(self.n, (int, np.integer)) or not 1 <= self.n <= MAX_ROUNDS:
            raise ConfigError(f"n must be an integer in [1, 2^40], got {self.n!r}")


@dataclass(frozen=True, eq=False)
class RankView:
    """Coins sorted ascending by (position, id).

    ``order[i]`` is the coin of 0-based rank ``i`` and ``posc[i]`` its position.
    """

    order: np.ndarray
    posc: np.ndarray

    def coin(self, i: int) -> int:
        """Coin with the i-th smallest position, i is 1-based."""
        return int(self.order[i - 1])

    @cached_property
    def rank_of(self) -> np.ndarray:
        """0-based rank of every coin id."""
        r = np.empty_like(self.order)
        r[self.order] = np.arange(len(self.order))
        return _frozen(r)


def rank_view(state: "GameState") -> RankView:
    return state.rank


@dataclass(frozen=True, eq=False)
class GameState:
    config: GameConfig
    t: int
    pos: np.ndarray

    @classmethod
    def initial(cls, config: GameConfig) -> "GameState":
        return cls(config, 0, _frozen(np.zeros(config.K, dtype=np.int64)))

    @classmethod
    def from_positions(cls, config: GameConfig, t: int, pos: Iterable[int]) -> "GameState":
        arr = np.array(list(pos), dtype=np.int64)
        if arr.shape != (config.K,):
            raise ConfigError(f"expected {config.K} positions, got {arr.shape}")
        if not 0 <= t <= config.n:
            raise ConfigError(f"t={t} outside [0, {config.n}]")
        if arr.min() < 0 or arr.max() > t:
            raise ConfigError("positions must lie in [0, t]")
        return cls(config, t, _frozen(arr))

    @property
    def K(self) -> int:
        return self.config.K

    @property
    def finished(self) -> bool:
        return self.t >= self.config.n

    @cached_property
    def rank(self) -> RankView:
        order = np.argsort(self.pos, kind="stable")
        return RankView(_frozen(order), _frozen(self.pos[order]))

    def posc(self, i: int) -> int:
        """Position of the rank-i coin (1-based)."""
        return int(self.rank.posc[i - 1])

    def __eq__(self, other):
        if not isinstance(other, GameState):
            return NotImplemented
        return (
            self.config == other.config
            and self.t == other.t
            and np.array_equal(self.pos, other.pos)
        )

    def __repr__(self):
        return f"GameState(K={self.K}, n={self.config.n}, t={self.t}, pos={self.pos.tolist()})"


@dataclass(frozen=True, eq=False)
class Partition:
    """Bob's split of the coins; ``side[x]`` is the label (0 or 1) of coin x."""

    side: np.ndarray

    def __post_init__(self):
        side = np.asarray(self.side, dtype=np.uint8)
        if side.ndim != 1 or (side > 1).any():
            raise ConfigError("partition labels must be a flat 0/1 array")
        if side.flags.writeable:
            side = side.copy()
            side.setflags(write=False)
        object.__setattr__(self, "side", side)

    @classmethod
    def from_sets(cls, K: int, side0: Iterable[int]) -> "Partition":
        side = np.ones(K, dtype=np.uint8)
        side[list(side0)] = 0
        return cls(side)

    def members(self, label: int) -> list[int]:
        return np.flatnonzero(self.side == label).tolist()

    def size(self, label: int) -> int:
        ones = int(self.side.sum())
        return ones if label else len(self.side) - ones

    def __len__(self):
        return len(self.side)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.side, other.side)

    def __repr__(self):
        return f"Partition(side0={self.members(0)}, side1={self.members(1)})"


def apply_round(state: GameState, p: Partition, choice: int) -> GameState:
    """Advance one round: every coin on side ``choice`` moves up by one."""
    if state.t >= state.config.n:
        raise GameFinished(f"all {state.config.n} rounds already played")
    if len(p.side) != state.K:
        raise PartitionMismatch(f"partition has {len(p.side)} labels, game has K={state.K}")
    if choice not in (0, 1):
        raise ConfigError(f"choice must be 0 or 1, got {choice!r}")
    pos = state.pos + (p.side == choice)
    return GameState(state.config, state.t + 1, _frozen(pos))


class Winner(str, enum.Enum):
    EVE = "eve"
    BOB = "bob"


def surviving_list(state: GameState, r) -> list[int]:
    """Coins with position <= floor(r*n), ordered by (position, id)."""
    limit = board_threshold(state.config.n, r)
    order = state.rank.order
    return [int(x) for x in order[state.rank.posc <= limit]]


def evaluate(state: GameState, ell: int, r) -> Winner:
    if state.t < state.config.n:
        raise GameNotFinished(f"game at t={state.t} of n={state.config.n}")
    return Winner.EVE if len(surviving_list(state, r)) >= ell + 1 else Winner.BOB


def _position_dtype(n: int):
    return np.min_scalar_type(n) if n < 2**31 else np.int64


@dataclass(frozen=True, eq=False)
class GameTrace:
    """Complete record of a game.

    ``sides[t]`` and ``choices[t]`` describe round ``t+1``; ``positions[t]``
    is the by-coin snapshot after ``t`` rounds, so it has ``n+1`` rows.
    """

    config: GameConfig
    sides: np.ndarray
    choices: np.ndarray
    positions: np.ndarray
    posc: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.posc is None:
            object.__setattr__(self, "posc", _frozen(np.sort(self.positions, axis=1)))

    @property
    def n(self) -> int:
        return len(self.choices)

    def state(self, t: int) -> GameState:
        return GameState(self.config, t, _frozen(self.positions[t].astype(np.int64)))

    @property
    def final(self) -> GameState:
        return self.state(self.n)

    def partition(self, t: int) -> Partition:
        return Partition(self.sides[t])

    @property
    def rounds(self) -> list[tuple[Partition, int]]:
        return [(self.partition(t), int(self.choices[t])) for t in range(self.n)]

    def records(self) -> Iterator[dict]:
        yield {"K": self.config.K, "n": self.config.n}
        for t in range(self.n):
            yield {
                "t": t + 1,
                "choice": int(self.choices[t]),
                "side": self.sides[t].tolist(),
                "posc": self.posc[t + 1].tolist(),
            }

    def write_jsonl(self, fp: IO[str]) -> None:
        for rec in self.records():
            fp.write(json.dumps(rec, separators=(",", ":")))
            fp.write("\n")

    @classmethod
    def from_records(cls, records: Iterable[dict], strict: bool = True) -> "GameTrace":
        """Rebuild a trace by replaying sides/choices.

        With ``strict`` a recorded ``posc`` that disagrees with the replay
        raises; otherwise the recorded values are kept as the trace's posc so
        monitors see exactly what was written.
        """
        it = iter(records)
        try:
            header = next(it)
            config = GameConfig(int(header["K"]), int(header["n"]))
        except (StopIteration, KeyError, TypeError) as exc:
            raise TraceError("missing or malformed header line") from exc
        builder = TraceBuilder(GameState.initial(config))
        recorded = [np.zeros(config.K, dtype=np.int64)]
        for expect_t, rec in enumerate(it, start=1):
            try:
                if int(rec["t"]) != expect_t:
                    raise TraceError(f"round record out of order: t={rec['t']}, expected {expect_t}")
                p = Partition(np.asarray(rec["side"], dtype=np.int64))
                builder.step(p, int(rec["choice"]))
                recorded.append(np.asarray(rec["posc"], dtype=np.int64))
            except (KeyError, TypeError, ConfigError, PartitionMismatch, GameFinished) as exc:
                raise TraceError(f"bad record at round {expect_t}: {exc}") from exc
        if builder.state.t != config.n:
            raise TraceError(f"trace has {builder.state.t} rounds, header says n={config.n}")
        trace = builder.finish()
        rec_posc = np.array(recorded)
        if rec_posc.shape != trace.posc.shape:
            raise TraceError("posc rows have the wrong length")
        if not np.array_equal(rec_posc, trace.posc):
            if strict:
                bad = int(np.flatnonzero((rec_posc != trace.posc).any(axis=1))[0])
                raise TraceError(f"recorded posc disagrees with replay at t={bad}")
            trace = GameTrace(config, trace.sides, trace.choices, trace.positions, _frozen(rec_posc))
        return trace

    @classmethod
    def read_jsonl(cls, fp: IO[str], strict: bool = True) -> "GameTrace":
        def lines():
            for lineno, line in enumerate(fp, start=1):
                if line.strip():
                    try:
                        yield json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise TraceError(f"line {lineno}: {exc}") from exc

        return cls.from_records(lines(), strict=strict)


class TraceBuilder:
    """Accumulates rounds into preallocated arrays."""

    def __init__(self, state: GameState):
        cfg = state.config
        self.state = state
        self._t0 = state.t
        rows = cfg.n - state.t
        dt = _position_dtype(cfg.n)
        self._sides = np.empty((rows, cfg.K), dtype=np.uint8)
        self._choices = np.empty(rows, dtype=np.uint8)
        self._pos = np.empty((rows + 1, cfg.K), dtype=dt)
        self._posc = np.empty((rows + 1, cfg.K), dtype=dt)
        self._pos[0] = state.pos
        self._posc[0] = state.rank.posc

    def step(self, p: Partition, choice: int) -> GameState:
        self.state = apply_round(self.state, p, choice)
        j = self.state.t - self._t0
        self._sides[j - 1] = p.side
        self._choices[j - 1] = choice
        self._pos[j] = self.state.pos
        self._posc[j] = self.state.rank.posc
        return self.state

    def finish(self) -> GameTrace:
        j = self.state.t - self._t0
        if self._t0 != 0:
            raise TraceError("traces must start from the initial state")
        return GameTrace(
            self.state.config,
            _frozen(self._sides[:j]),
            _frozen(self._choices[:j]),
            _frozen(self._pos[: j + 1]),
            _frozen(self._posc[: j + 1]),
        )


def play(config: GameConfig, bob, eve, rounds: int | None = None) -> GameTrace:
    """Run ``bob`` against ``eve`` from the initial state.

    ``bob.next_partition(state)`` and ``eve.choose(state, partition)`` are the
    only methods used.  ``rounds`` truncates the game (trace covers t <= rounds).
    """
    builder = TraceBuilder(GameState.initial(config))
    for _ in range(config.n if rounds is None else rounds):
        state = builder.state
        p = bob.next_partition(state)
        builder.step(p, eve.choose(state, p))
    return builder.finish()


def replay(config: GameConfig, partitions: Sequence[Partition], choices: Sequence[int]) -> GameTrace:
    builder = TraceBuilder(GameState.initial(config))
    for p, c in zip(partitions, choices, strict=True):
        builder.step(p, int(c))
    return builder.finish()
