"""Feedback error-correcting code on top of the coin game.

Alice holds ``x`` in ``[0, 2^k)``.  Each round Bob proposes a partition,
Alice sends the label of the side holding ``x``, the channel may flip it,
and Bob moves every coin on the side opposite to the received bit.  Alice
sees the received bit (noiseless feedback), so both ends hold the same
game state and ``pos(x)`` counts the flips exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BudgetExceeded, CoinGameError, ConfigError, GameNotFinished
from .game import (
    GameConfig,
    GameState,
    GameTrace,
    Partition,
    TraceBuilder,
    apply_round,
    as_fraction,
    board_threshold,
    surviving_list,
)

MAX_K_BITS = 24


class ListDecodingFailure(CoinGameError):
    """More than ``ell`` coins survived; ``survivors`` holds all of them."""

    def __init__(self, survivors: list[int], ell: int):
        super().__init__(f"{len(survivors)} survivors exceed list size {ell}")
        self.survivors = survivors
        self.ell = ell


@dataclass(frozen=True)
class Message:
    k: int
    x: int

    def __post_init__(self):
        if not 1 <= self.k <= MAX_K_BITS:
            raise ConfigError(f"k must lie in [1, {MAX_K_BITS}], got {self.k}")
        if not 0 <= self.x < 2**self.k:
            raise ConfigError(f"x={self.x} does not fit in {self.k} bits")


def alice_bit(state: GameState, p: Partition, x: int) -> int:
    return int(p.side[x])


def bob_update(state: GameState, p: Partition, received_bit: int) -> GameState:
    """Move the coins that would have sent the other bit."""
    return apply_round(state, p, 1 - received_bit)


@dataclass(frozen=True)
class RoundView:
    """What the channel adversary sees before deciding on a flip."""

    t: int
    sent: int
    received: tuple[int, ...]
    state: GameState
    partition: Partition


class ChannelAdversary:
    """Flip policy with a hard budget of floor(r * n) flips."""

    def __init__(self, r, decide: Callable[[RoundView], bool], name: str = "custom"):
        self.r = as_fraction(r)
        self.decide = decide
        self.name = name

    def budget(self, n: int) -> int:
        return board_threshold(n, self.r)


def honest(r) -> ChannelAdversary:
    return ChannelAdversary(r, lambda v: False, "none")


def flip_every_round(r) -> ChannelAdversary:
    return ChannelAdversary(r, lambda v: True, "all")


def random_flips(r, seed: int, prob: float = 0.5, respect_budget: bool = True) -> ChannelAdversary:
    """Flip each round with probability ``prob`` (seeded by ``(seed, t)``).

    With ``respect_budget`` the adversary stops flipping once the budget is
    spent instead of tripping the budget check.
    """
    state = {"used": 0}

    def decide(v: RoundView) -> bool:
        if v.t == 0:
            state["used"] = 0
        flip = bool(np.random.default_rng([seed, v.t]).random() < prob)
        if flip and respect_budget and state["used"] >= board_threshold(v.state.config.n, r):
            return False
        state["used"] += flip
        return flip

    return ChannelAdversary(r, decide, f"random:{seed}")


def eve_replay(r, eve) -> ChannelAdversary:
    """Corrupt exactly so that Bob moves Eve's chosen side.

    Bob moves the side opposite the received bit, so Eve's side ``c`` moves
    iff the received bit is ``1 - c``; the sent bit is the side of x, hence a
    flip happens iff x lies on the side Eve chose.
    """

    def decide(v: RoundView) -> bool:
        return v.sent == eve.choose(v.state, v.partition)

    return ChannelAdversary(r, decide, f"eve:{getattr(eve, 'name', 'custom')}")


@dataclass
class SessionResult:
    k: int
    n: int
    x: int
    sent: list[int]
    received: list[int]
    flips: int
    budget: int
    final_state: GameState
    decoded: list[int]
    ell: int | None = None
    list_ok: bool | None = None
    flip_rounds: list[int] = field(default_factory=list)
    trace: GameTrace | None = None

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "x": self.x,
            "sent": "".join(map(str, self.sent)),
            "received": "".join(map(str, self.received)),
            "flips": self.flips,
            "budget": self.budget,
            "pos_x": int(self.final_state.pos[self.x]),
            "final_posc": self.final_state.rank.posc[:8].tolist(),
            "decoded": self.decoded,
            "survivors": len(self.decoded),
            "ell": self.ell,
            "list_ok": self.list_ok,
        }


def decode_list(state: GameState, ell: int, r) -> list[int]:
    """Survivors at radius r, or ListDecodingFailure if there are more than ell."""
    if state.t < state.config.n:
        raise GameNotFinished(f"game at t={state.t} of n={state.config.n}")
    survivors = surviving_list(state, r)
    if len(survivors) > ell:
        raise ListDecodingFailure(survivors, ell)
    return survivors


def run_session(
    k: int, n: int, bob, adversary: ChannelAdversary, x: int, ell: int | None = None, keep_trace: bool = False
) -> SessionResult:
    """Play one transmission of ``x`` over n rounds.

    With ``keep_trace`` the underlying coin game is recorded with Eve's
    choice taken as the side Bob moved.
    """
    msg = Message(k, x)
    config = GameConfig(2**msg.k, n)
    budget = adversary.budget(n)
    state = GameState.initial(config)
    builder = TraceBuilder(state) if keep_trace else None
    sent, received, flip_rounds = [], [], []
    for t in range(n):
        p = bob.next_partition(state)
        b = alice_bit(state, p, x)
        flip = bool(adversary.decide(RoundView(t, b, tuple(received), state, p)))
        if flip:
            if len(flip_rounds) == budget:
                raise BudgetExceeded(f"flip #{budget + 1} attempted in round {t + 1}; budget is {budget}")
            flip_rounds.append(t)
        rb = b ^ flip
        sent.append(b)
        received.append(rb)
        state = builder.step(p, 1 - rb) if builder else bob_update(state, p, rb)
    if int(state.pos[x]) != len(flip_rounds):
        raise AssertionError(f"pos_n(x)={int(state.pos[x])} but {len(flip_rounds)} flips")
    decoded = surviving_list(state, adversary.r)
    list_ok = None if ell is None else len(decoded) <= ell
    trace = builder.finish() if builder else None
    return SessionResult(
        k, n, x, sent, received, len(flip_rounds), budget, state, decoded, ell, list_ok, flip_rounds, trace
    )


def adversary_from_name(name: str, r, n: int | None = None, K: int | None = None) -> ChannelAdversary:
    """CLI names: ``none``, ``all``, ``random:<seed>``, or any Eve name (replayed)."""
    from .eve import eve_from_name

    kind, _, arg = name.partition(":")
    if name == "none":
        return honest(r)
    if name == "all":
        return flip_every_round(r)
    if kind == "random":
        try:
            return random_flips(r, int(arg))
        except ValueError:
            raise ConfigError(f"bad seed in adversary {name!r}") from None
    return eve_replay(r, eve_from_name(name, n=n, K=K))
