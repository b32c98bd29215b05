"""Brute-force ground truth for small coin games.

``enumerate_eve`` optimizes posc_n(i) over every Eve choice sequence against
a fixed Bob; ``enumerate_bob`` does the same over every labelled Bob
partition sequence against a fixed Eve; ``full_minimax`` solves the game
with both players free.  Witnesses are the lexicographically smallest
optimal choice sequences.
"""
from __future__ import annotations

import copy
import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, MemoUnsound, TooLarge
from .eve import ScriptedEve
from .game import GameConfig, GameState, GameTrace, Partition, TraceBuilder, apply_round, play

NAIVE_MAX_ROUNDS = 26
SPLIT_DEPTH = 3
MINIMAX_MAX_K = 5
MINIMAX_MAX_N = 12
BOB_SEARCH_MAX_K = 8


@dataclass(frozen=True)
class CanonicalState:
    remaining: int
    multiset: tuple[int, ...]


@dataclass
class OracleResult:
    objective: int
    direction: str
    value: int
    optimal_trace: GameTrace
    witness_path: list = field(default_factory=list)
    nodes_expanded: int = 0

    def to_json(self) -> dict:
        return {
            "K": self.optimal_trace.config.K,
            "n": self.optimal_trace.config.n,
            "posc_index": self.objective,
            "direction": self.direction,
            "value": self.value,
            "nodes_expanded": self.nodes_expanded,
            "witness_path": self.witness_path,
        }


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("COINFEED_THREADS", "1")))
    except ValueError:
        return 1


def _better(direction: str):
    return (lambda a, b: a < b) if direction == "min" else (lambda a, b: a > b)


class _ConcreteSearch:
    """Search over by-coin states, asking Bob for every partition."""

    def __init__(self, bob, n: int, i: int, direction: str, memo: bool):
        self.bob = bob
        self.n = n
        self.i = i
        self.better = _better(direction)
        self.memo = {} if memo else None
        self.nodes = 0

    def root_children(self, state: GameState):
        p = self.bob.next_partition(state)
        return [apply_round(state, p, c) for c in (0, 1)]

    def solve(self, state: GameState) -> tuple[int, tuple[int, ...]]:
        self.nodes += 1
        if state.t == self.n:
            return state.posc(self.i), ()
        if self.memo is not None:
            key = (state.t, state.pos.tobytes())
            hit = self.memo.get(key)
            if hit is not None:
                return hit
        best = None
        for c, child in enumerate(self.root_children(state)):
            v, path = self.solve(child)
            if best is None or self.better(v, best[0]):
                best = (v, (c,) + path)
        if self.memo is not None:
            self.memo[key] = best
        return best


class _RankSearch:
    """Memoized search over sorted position multisets for rank-labelling Bobs."""

    def __init__(self, bob, n: int, i: int, direction: str):
        self.bob = bob
        self.n = n
        self.i = i
        self.better = _better(direction)
        self.memo: dict[CanonicalState, tuple[int, int]] = {}
        self.nodes = 0

    def children(self, posc: tuple[int, ...]):
        sides = self.bob.rank_sides(posc)
        out = []
        for c in (0, 1):
            nxt = [p + (int(s) == c) for p, s in zip(posc, sides)]
            nxt.sort()
            out.append(tuple(nxt))
        return out

    def value(self, posc: tuple[int, ...], remaining: int) -> int:
        self.nodes += 1
        if remaining == 0:
            return posc[self.i - 1]
        key = CanonicalState(remaining, posc)
        hit = self.memo.get(key)
        if hit is not None:
            return hit[0]
        best = None
        for c, child in enumerate(self.children(posc)):
            v = self.value(child, remaining - 1)
            if best is None or self.better(v, best[0]):
                best = (v, c)
        self.memo[key] = best
        return best[0]

    def path(self, posc: tuple[int, ...], remaining: int) -> tuple[int, ...]:
        out = []
        while remaining:
            _, c = self.memo[CanonicalState(remaining, posc)]
            out.append(c)
            posc = self.children(posc)[c]
            remaining -= 1
        return tuple(out)

    def solve(self, posc: tuple[int, ...], remaining: int) -> tuple[int, tuple[int, ...]]:
        v = self.value(posc, remaining)
        return v, self.path(posc, remaining)


def enumerate_eve(
    bob,
    K: int,
    n: int,
    i: int,
    direction: str = "min",
    memo: bool = False,
    threads: int | None = None,
) -> OracleResult:
    """Exact optimum of posc_n(i) over all 2^n Eve choice sequences.

    The tree is always split into the same 2^SPLIT_DEPTH prefix subtrees, each
    with its own memo table, so values, witnesses and node counts do not
    depend on ``threads``.
    """
    config = GameConfig(K, n)
    if not 1 <= i <= K:
        raise ConfigError(f"posc index must be in [1, {K}], got {i}")
    if direction not in ("min", "max"):
        raise ConfigError(f"direction must be 'min' or 'max', got {direction!r}")
    kind = getattr(bob, "memo_kind", None)
    if memo and kind is None:
        raise MemoUnsound(f"bob strategy {getattr(bob, 'name', bob)!r} does not declare memoizable structure")
    if not memo and n > NAIVE_MAX_ROUNDS:
        raise TooLarge(f"naive enumeration limited to n <= {NAIVE_MAX_ROUNDS}, got {n}")

    depth = min(SPLIT_DEPTH, n)
    prefixes = list(itertools.product((0, 1), repeat=depth))
    rank_mode = memo and kind == "rank"
    prefix_nodes = 2**depth - 1

    def run(prefix):
        if rank_mode:
            search = _RankSearch(bob, n, i, direction)
            posc = (0,) * K
            for c in prefix:
                posc = search.children(posc)[c]
            v, path = search.solve(posc, n - depth)
        else:
            search = _ConcreteSearch(bob, n, i, direction, memo)
            state = GameState.initial(config)
            for c in prefix:
                state = search.root_children(state)[c]
            v, path = search.solve(state)
        return v, tuple(prefix) + path, search.nodes

    threads = default_threads() if threads is None else max(1, threads)
    if threads == 1:
        results = [run(p) for p in prefixes]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, prefixes))

    better = _better(direction)
    best = None
    for v, path, _ in results:
        if best is None or better(v, best[0]):
            best = (v, path)
    nodes = prefix_nodes + sum(r[2] for r in results)
    value, path = best
    trace = play(config, bob, ScriptedEve(path))
    if int(trace.posc[-1][i - 1]) != value:
        raise AssertionError(f"witness replay gives {trace.posc[-1][i - 1]}, oracle value {value}")
    return OracleResult(i, direction, value, trace, list(path), nodes)


def verify_memo_soundness(bob, K: int, n: int, i: int) -> bool:
    """True iff memoized and naive enumeration agree in both directions."""
    for direction in ("min", "max"):
        a = enumerate_eve(bob, K, n, i, direction, memo=True)
        b = enumerate_eve(bob, K, n, i, direction, memo=False)
        if a.value != b.value or a.witness_path != b.witness_path:
            return False
    return True


def enumerate_bob(eve, K: int, n: int, i: int, direction: str = "max") -> OracleResult:
    """Optimum of posc_n(i) over every labelled Bob partition sequence.

    ``eve`` is a fresh strategy instance; it is deep-copied at every branch
    and must expose ``snapshot()`` covering all of its internal state, which
    is part of the memo key.
    """
    if K > BOB_SEARCH_MAX_K:
        raise TooLarge(f"Bob search limited to K <= {BOB_SEARCH_MAX_K}")
    if direction not in ("min", "max"):
        raise ConfigError(f"direction must be 'min' or 'max', got {direction!r}")
    config = GameConfig(K, n)
    better = _better(direction)
    partitions = [Partition(np.array(bits, dtype=np.uint8)) for bits in itertools.product((0, 1), repeat=K)]
    memo: dict = {}
    nodes = 0

    def solve(state: GameState, strategy) -> tuple[int, tuple]:
        nonlocal nodes
        nodes += 1
        if state.t == n:
            return state.posc(i), ()
        key = (state.t, state.pos.tobytes(), strategy.snapshot())
        hit = memo.get(key)
        if hit is not None:
            return hit
        best = None
        for j, p in enumerate(partitions):
            e = copy.deepcopy(strategy)
            c = e.choose(state, p)
            v, path = solve(apply_round(state, p, c), e)
            if best is None or better(v, best[0]):
                best = (v, ((j, c),) + path)
        memo[key] = best
        return best

    value, path = solve(GameState.initial(config), copy.deepcopy(eve))
    builder = TraceBuilder(GameState.initial(config))
    for j, c in path:
        builder.step(partitions[j], c)
    trace = builder.finish()
    witness = [{"side": partitions[j].side.tolist(), "choice": c} for j, c in path]
    return OracleResult(i, f"bob-{direction}", value, trace, witness, nodes)


def _groups(posc: tuple[int, ...]) -> list[tuple[int, int]]:
    return [(v, len(list(g))) for v, g in itertools.groupby(posc)]


def _canonical_partitions(posc: tuple[int, ...]):
    """Per-group side-0 counts, one representative per unordered partition."""
    groups = _groups(posc)
    sizes = [g for _, g in groups]
    for a in itertools.product(*[range(g + 1) for g in sizes]):
        comp = tuple(g - x for g, x in zip(sizes, a))
        if comp < a:
            continue
        yield groups, a, comp


def _move(groups, moved) -> tuple[int, ...]:
    out = []
    for (v, g), m in zip(groups, moved):
        out.extend([v] * (g - m))
        out.extend([v + 1] * m)
    out.sort()
    return tuple(out)


def full_minimax(K: int, n: int, i: int, canonical: bool = True) -> OracleResult:
    """Game value of posc_n(i): Bob partitions to maximize, Eve picks a side to minimize.

    With ``canonical`` Bob's moves are explored once per partition class up
    to permuting equal-position coins and swapping side labels; otherwise all
    2^K labelled partitions are tried on by-coin states (a slow cross-check).
    """
    if K > MINIMAX_MAX_K or n > MINIMAX_MAX_N:
        raise TooLarge(f"full minimax limited to K <= {MINIMAX_MAX_K}, n <= {MINIMAX_MAX_N}")
    config = GameConfig(K, n)
    if not 1 <= i <= K:
        raise ConfigError(f"posc index must be in [1, {K}], got {i}")
    memo: dict = {}
    nodes = 0

    if canonical:
        def value(posc: tuple[int, ...], remaining: int) -> int:
            nonlocal nodes
            nodes += 1
            if remaining == 0:
                return posc[i - 1]
            key = CanonicalState(remaining, posc)
            if key in memo:
                return memo[key][0]
            best = None
            for groups, a, comp in _canonical_partitions(posc):
                reply = None
                for c, moved in enumerate((a, comp)):
                    v = value(_move(groups, moved), remaining - 1)
                    if reply is None or v < reply[0]:
                        reply = (v, c)
                if best is None or reply[0] > best[0]:
                    best = (reply[0], a, reply[1])
            memo[key] = best
            return best[0]

        result = value((0,) * K, n)
        builder = TraceBuilder(GameState.initial(config))
        posc, remaining = (0,) * K, n
        while remaining:
            _, a, c = memo[CanonicalState(remaining, posc)]
            state = builder.state
            side = np.ones(K, dtype=np.uint8)
            start = 0
            for (_, g), x in zip(_groups(posc), a):
                side[state.rank.order[start : start + x]] = 0
                start += g
            builder.step(Partition(side), c)
            posc, remaining = tuple(builder.state.rank.posc.tolist()), remaining - 1
        trace = builder.finish()
    else:
        partitions = [Partition(np.array(b, dtype=np.uint8)) for b in itertools.product((0, 1), repeat=K)]

        def solve(state: GameState) -> tuple[int, tuple]:
            nonlocal nodes
            nodes += 1
            if state.t == n:
                return state.posc(i), ()
            key = (state.t, state.pos.tobytes())
            if key in memo:
                return memo[key]
            best = None
            for j, p in enumerate(partitions):
                reply = None
                for c in (0, 1):
                    v, path = solve(apply_round(state, p, c))
                    if reply is None or v < reply[0]:
                        reply = (v, ((j, c),) + path)
                if best is None or reply[0] > best[0]:
                    best = reply
            memo[key] = best
            return best

        result, path = solve(GameState.initial(config))
        builder = TraceBuilder(GameState.initial(config))
        for j, c in path:
            builder.step(partitions[j], c)
        trace = builder.finish()

    if int(trace.posc[-1][i - 1]) != result:
        raise AssertionError("principal variation does not attain the game value")
    witness = [{"side": trace.sides[t].tolist(), "choice": int(trace.choices[t])} for t in range(n)]
    return OracleResult(i, "minimax", result, trace, witness, nodes)
