"""Eve-side (adversary) strategies.

An Eve strategy has ``name`` and ``choose(state, partition) -> 0 | 1``; the
returned label is the side whose coins move up.  Strategies that keep
per-game state (the threshold adversaries, the attack schedule) must not be
shared between games; build a fresh one per game.

Several strategies can play on a *sub-game*: a subset of coin ids given as
``coins``.  Ranks are then taken among those coins only, and side sizes
count only those coins, while the returned label still refers to Bob's full
partition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bob import sw_partition
from .errors import BadQ, ConfigError, NotSWPartition, TooFewCoins, WrongK
from .game import GameState, Partition


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _sub_rank(state: GameState, coins: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    if coins is None:
        return state.rank.order, state.rank.posc
    pos = state.pos[coins]
    idx = np.argsort(pos, kind="stable")
    return coins[idx], pos[idx]


def _side_sizes(p: Partition, coins: np.ndarray | None) -> tuple[int, int]:
    side = p.side if coins is None else p.side[coins]
    ones = int(side.sum())
    return len(side) - ones, ones


def greedy_min_set(state: GameState, p: Partition, coins=None) -> int:
    """Side with fewer coins; equal sizes pick side 0."""
    n0, n1 = _side_sizes(p, None if coins is None else np.asarray(coins))
    return 0 if n0 <= n1 else 1


def halving_opener(state: GameState, p: Partition, coins=None) -> int:
    """Move the side holding fewer position-0 coins, keeping the most at 0."""
    side = p.side if coins is None else p.side[np.asarray(coins)]
    pos = state.pos if coins is None else state.pos[np.asarray(coins)]
    zeros = pos == 0
    z1 = int((zeros & (side == 1)).sum())
    z0 = int(zeros.sum()) - z1
    return 0 if z0 <= z1 else 1


@dataclass(frozen=True)
class ThetaBound:
    ell: int
    n: int
    m: int
    sigma_m: int
    theta: int


def compute_theta(ell: int, n: int, m: int, positions: Sequence[int]) -> ThetaBound:
    """Target ceil(((2^ell - 1)(n - m) + sum of positions) / (2^(ell+1) - 1))."""
    if ell < 1:
        raise ConfigError(f"ell must be >= 1, got {ell}")
    K = 2 ** (ell + 1) - 1
    positions = [int(x) for x in positions]
    if len(positions) != K:
        raise WrongK(f"ell={ell} needs {K} coins, got {len(positions)}")
    if not 0 <= m <= n:
        raise ConfigError(f"need 0 <= m <= n, got m={m}, n={n}")
    sigma = sum(positions)
    return ThetaBound(ell, n, m, sigma, _ceil_div((2**ell - 1) * (n - m) + sigma, K))


@dataclass
class AdversaryLog:
    """Bookkeeping shared by a threshold adversary and all its sub-adversaries."""

    attaches: list[dict] = field(default_factory=list)
    switches: list[dict] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    @property
    def nesting_violations(self) -> list[dict]:
        return [s for s in self.switches if s["theta_child"] > s["theta"]]


class GreedyEve:
    name = "greedy"

    def choose(self, state: GameState, p: Partition) -> int:
        return greedy_min_set(state, p)

    def snapshot(self):
        return ()


class RandomEve:
    """Fair coin per round from a generator seeded with ``(seed, t)``."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.name = f"random:{self.seed}"

    def choose(self, state: GameState, p: Partition) -> int:
        return int(np.random.default_rng([self.seed, state.t]).integers(0, 2))

    def snapshot(self):
        return ()


class ScriptedEve:
    """Plays a fixed choice sequence indexed by round."""

    def __init__(self, choices: Sequence[int], name: str = "script"):
        self.choices = tuple(int(c) for c in choices)
        self.name = name

    def choose(self, state: GameState, p: Partition) -> int:
        return self.choices[state.t]

    def snapshot(self):
        return ()


class BaseCaseAdversary:
    """Three-coin adversary keeping the second coin at or below theta.

    theta = max(ceil((n - m + posc_m(1) + posc_m(2) + posc_m(3)) / 3), posc_m(2))
    is fixed at the first call (round m).  Greedy until the rank-2 coin
    reaches theta, then always the side without the current rank-2 coin.
    """

    def __init__(self, n: int | None = None, coins=None, log: AdversaryLog | None = None):
        self.n = n
        self.coins = None if coins is None else np.asarray(coins, dtype=np.int64)
        self.log = log if log is not None else AdversaryLog()
        self.name = f"base:{n}" if n is not None else "base"
        self.m = None
        self.theta = None
        self.switched = False

    def _attach(self, state: GameState) -> None:
        k = state.K if self.coins is None else len(self.coins)
        if k != 3:
            raise WrongK(f"base-case adversary needs 3 coins, got {k}")
        if self.n is None:
            self.n = state.config.n
        elif self.n != state.config.n:
            raise ConfigError(f"adversary built for n={self.n}, game has n={state.config.n}")
        _, posc = _sub_rank(state, self.coins)
        self.m = state.t
        self.theta = max(_ceil_div(self.n - self.m + int(posc.sum()), 3), int(posc[1]))
        self.log.attaches.append({"ell": 1, "m": self.m, "theta": self.theta})

    def choose(self, state: GameState, p: Partition) -> int:
        if self.m is None:
            self._attach(state)
        order, posc = _sub_rank(state, self.coins)
        if not self.switched and posc[1] >= self.theta:
            self.switched = True
        if self.switched:
            return 1 - int(p.side[order[1]])
        return greedy_min_set(state, p, self.coins)

    def snapshot(self):
        return (self.m, self.theta, self.switched)


class RecursiveAdversary:
    """Adversary on 2^(ell+1) - 1 coins keeping ell+1 of them at or below theta_ell.

    Greedy while posc(1) > theta_ell + t - n.  At the first round T where that
    fails, the rank-1 coin can no longer pass theta_ell; Eve drops it, drops
    ranks 2^ell + 1 .. 2^(ell+1) - 1, and hands the ranks 2 .. 2^ell to an
    (ell-1)-adversary attached at T.
    """

    def __init__(self, ell: int, n: int | None = None, coins=None, log: AdversaryLog | None = None):
        if ell < 2:
            raise ConfigError("RecursiveAdversary needs ell >= 2; use recursive_adversary()")
        self.ell = ell
        self.n = n
        self.coins = None if coins is None else np.asarray(coins, dtype=np.int64)
        self.log = log if log is not None else AdversaryLog()
        self.name = f"recursive:{ell}"
        self.m = None
        self.theta = None
        self.fallback = False
        self.child = None

    def _attach(self, state: GameState) -> None:
        need = 2 ** (self.ell + 1) - 1
        k = state.K if self.coins is None else len(self.coins)
        if k != need:
            raise WrongK(f"ell={self.ell} needs {need} coins, got {k}")
        if self.n is None:
            self.n = state.config.n
        elif self.n != state.config.n:
            raise ConfigError(f"adversary built for n={self.n}, game has n={state.config.n}")
        _, posc = _sub_rank(state, self.coins)
        self.m = state.t
        self.theta = compute_theta(self.ell, self.n, self.m, posc).theta
        self.log.attaches.append({"ell": self.ell, "m": self.m, "theta": self.theta})
        if posc[0] < self.theta + self.m - self.n:
            self.fallback = True
            self.log.violations.append(
                f"precondition failed at m={self.m}: posc(1)={int(posc[0])} < "
                f"theta+m-n={self.theta + self.m - self.n}; falling back to greedy"
            )

    def choose(self, state: GameState, p: Partition) -> int:
        if self.m is None:
            self._attach(state)
        if self.child is not None:
            return self.child.choose(state, p)
        if self.fallback:
            return greedy_min_set(state, p, self.coins)
        order, posc = _sub_rank(state, self.coins)
        t = state.t
        if posc[0] > self.theta + t - self.n:
            return greedy_min_set(state, p, self.coins)
        if posc[0] != self.theta + t - self.n:
            self.log.violations.append(
                f"ell={self.ell}: exit identity failed at T={t}: posc(1)={int(posc[0])}, "
                f"theta+T-n={self.theta + t - self.n}"
            )
        half = 2**self.ell
        sub = order[1:half]
        theta_child = compute_theta(self.ell - 1, self.n, t, posc[1:half]).theta
        self.log.switches.append(
            {"ell": self.ell, "T": t, "theta": self.theta, "theta_child": theta_child}
        )
        if theta_child > self.theta:
            self.log.violations.append(
                f"ell={self.ell}: nesting failed at T={t}: theta'={theta_child} > theta={self.theta}"
            )
        self.child = recursive_adversary(self.ell - 1, self.n, coins=sub, log=self.log)
        return self.child.choose(state, p)

    def snapshot(self):
        child = None if self.child is None else (tuple(self.child.coins), self.child.snapshot())
        return (self.m, self.theta, self.fallback, child)


def base_case_adversary(n: int | None = None, coins=None, log: AdversaryLog | None = None) -> BaseCaseAdversary:
    return BaseCaseAdversary(n, coins=coins, log=log)


def recursive_adversary(ell: int, n: int | None = None, coins=None, log: AdversaryLog | None = None):
    """Threshold adversary for list size ``ell``; ell = 1 is the base case."""
    if ell == 1:
        return BaseCaseAdversary(n, coins=coins, log=log)
    return RecursiveAdversary(ell, n, coins=coins, log=log)


def opener_rounds(K: int, ell: int) -> int:
    """Largest s with (2^(ell+1) - 1) * 2^s <= K.

    Each halving round keeps at least half of the zero coins, so after s rounds
    at least 2^(ell+1) - 1 coins are still at position 0.
    """
    need = 2 ** (ell + 1) - 1
    if K < need:
        raise TooFewCoins(f"ell={ell} needs K >= {need}, got {K}")
    s = 0
    while need * 2 ** (s + 1) <= K:
        s += 1
    return s


class FullUpperBoundAdversary:
    """Halving opener followed by the threshold adversary on surviving zeros."""

    def __init__(self, ell: int, n: int | None = None, K: int | None = None):
        if ell < 1:
            raise ConfigError(f"ell must be >= 1, got {ell}")
        self.ell = ell
        self.n = n
        self.K = K
        if K is not None:
            opener_rounds(K, ell)
        self.name = f"upperbound:{ell}"
        self.log = AdversaryLog()
        self.start = None
        self.s = None
        self.sub = None

    def choose(self, state: GameState, p: Partition) -> int:
        if self.start is None:
            if self.K is not None and self.K != state.K:
                raise ConfigError(f"adversary built for K={self.K}, game has K={state.K}")
            self.start = state.t
            self.s = opener_rounds(state.K, self.ell)
        if state.t < self.start + self.s:
            return halving_opener(state, p)
        if self.sub is None:
            need = 2 ** (self.ell + 1) - 1
            zeros = np.flatnonzero(state.pos == 0)
            if len(zeros) >= need:
                coins = zeros[:need]
            else:
                coins = np.sort(state.rank.order[:need])
                self.log.violations.append(
                    f"only {len(zeros)} coins at 0 after the opener; using the {need} lowest"
                )
            self.sub = recursive_adversary(self.ell, self.n, coins=coins, log=self.log)
        return self.sub.choose(state, p)


def full_upper_bound_adversary(ell: int, n: int | None = None, K: int | None = None) -> FullUpperBoundAdversary:
    return FullUpperBoundAdversary(ell, n, K)


PHASES = ((32, "even"), (16, "odd"), (8, "even"), (4, "odd"), (4, "even"), (3, "odd"))
PARITY_SIDE = {"odd": 0, "even": 1}


@dataclass(frozen=True)
class AttackSchedule:
    q: int

    def __post_init__(self):
        if not isinstance(self.q, (int, np.integer)) or self.q <= 0 or self.q % 2:
            raise BadQ(f"q must be a positive even integer, got {self.q!r}")

    @property
    def n(self) -> int:
        return 67 * self.q

    @property
    def phases(self) -> list[tuple[int, str]]:
        return [(k * self.q, parity) for k, parity in PHASES]

    @property
    def boundaries(self) -> list[int]:
        """Round counts at which each phase ends."""
        out, acc = [], 0
        for length, _ in self.phases:
            acc += length
            out.append(acc)
        return out

    def parity(self, t: int) -> str:
        """Parity class moved in the round after ``t`` completed rounds."""
        for end, (_, parity) in zip(self.boundaries, self.phases):
            if t < end:
                return parity
        raise ConfigError(f"round index {t} is past the schedule (n={self.n})")


class SWAttack:
    """Six-phase parity schedule against the Spencer-Winkler Bob.

    ``offset`` shifts the schedule to start after ``offset`` rounds; the game
    length check (n == 67q) only applies when ``offset`` is 0 and ``strict``.
    """

    def __init__(self, q: int, offset: int = 0, strict: bool = True):
        self.schedule = AttackSchedule(q)
        self.offset = offset
        self.strict = strict
        self.name = f"swattack:{q}"

    def choose(self, state: GameState, p: Partition) -> int:
        if self.strict and self.offset == 0 and state.config.n != self.schedule.n:
            raise BadQ(f"schedule needs n = 67q = {self.schedule.n}, game has n={state.config.n}")
        if p != sw_partition(state):
            raise NotSWPartition(f"round {state.t + 1}: partition is not the rank-parity split")
        return PARITY_SIDE[self.schedule.parity(state.t - self.offset)]

    def snapshot(self):
        return ()


def sw_attack_schedule(q: int) -> SWAttack:
    return SWAttack(q)


class Sequenced:
    """Hands each round to the last stage whose start round has been reached."""

    def __init__(self, stages: Sequence[tuple[int, object]], name: str = "sequenced"):
        self.stages = sorted(stages, key=lambda s: s[0])
        if not self.stages or self.stages[0][0] != 0:
            raise ConfigError("first stage must start at round 0")
        self.name = name

    def choose(self, state: GameState, p: Partition) -> int:
        current = self.stages[0][1]
        for start, eve in self.stages:
            if state.t >= start:
                current = eve
        return current.choose(state, p)


def embedded_attack(q: int, n: int, offset: int = 0, before=None, after=None) -> Sequenced:
    """SW attack with q placed at ``offset`` inside an n-round game.

    Rounds outside the schedule are played by ``before``/``after`` (greedy by
    default).
    """
    if offset < 0 or offset + 67 * q > n:
        raise ConfigError(f"schedule of {67 * q} rounds at offset {offset} does not fit n={n}")
    stages = [(0, before or GreedyEve())] if offset else []
    stages.append((offset, SWAttack(q, offset=offset, strict=False)))
    if offset + 67 * q < n:
        stages.append((offset + 67 * q, after or GreedyEve()))
    return Sequenced(stages, name=f"swembed:{q}@{offset}")


def eve_from_name(name: str, n: int | None = None, K: int | None = None):
    """Build a fresh strategy from its CLI name.

    Names: ``greedy``, ``random:<seed>``, ``base:<n>``, ``recursive:<ell>``,
    ``upperbound:<ell>``, ``swattack:<q>``.
    """
    kind, _, arg = name.partition(":")

    def num() -> int:
        try:
            return int(arg)
        except ValueError:
            raise ConfigError(f"bad argument in eve name {name!r}") from None

    if kind == "greedy" and not arg:
        return GreedyEve()
    if kind == "random":
        return RandomEve(num())
    if kind == "base":
        return BaseCaseAdversary(num() if arg else n)
    if kind == "recursive":
        return recursive_adversary(num(), n)
    if kind == "upperbound":
        return FullUpperBoundAdversary(num(), n, K)
    if kind == "swattack":
        return SWAttack(num())
    raise ConfigError(f"unknown eve strategy {name!r}")
