import io
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coinfeed.bob import RandomBob, SWBob
from coinfeed.errors import ConfigError, GameFinished, GameNotFinished, PartitionMismatch, TraceError
from coinfeed.eve import GreedyEve, RandomEve
from coinfeed.game import (
    GameConfig,
    GameState,
    GameTrace,
    Partition,
    Winner,
    apply_round,
    as_fraction,
    board_threshold,
    evaluate,
    play,
    rank_view,
    replay,
    surviving_list,
)


def state(pos, n=None, t=None):
    pos = list(pos)
    t = max(pos) if t is None else t
    n = max(t, 1) if n is None else n
    return GameState.from_positions(GameConfig(len(pos), n), t, pos)


class TestConfig:
    @pytest.mark.parametrize("K,n", [(1, 5), (0, 5), (3, 0), (3, 2**41)])
    def test_rejects(self, K, n):
        with pytest.raises(ConfigError):
            GameConfig(K, n)

    def test_initial_is_zero(self):
        s = GameState.initial(GameConfig(5, 3))
        assert s.t == 0 and s.pos.tolist() == [0] * 5

    def test_positions_bounded_by_t(self):
        with pytest.raises(ConfigError):
            GameState.from_positions(GameConfig(3, 5), 1, [0, 2, 0])

    def test_state_is_read_only(self):
        s = GameState.initial(GameConfig(3, 3))
        with pytest.raises(ValueError):
            s.pos[0] = 4


class TestApplyRound:
    def test_single_coin_side(self):
        s = GameState.initial(GameConfig(3, 5))
        p = Partition.from_sets(3, [0])
        assert apply_round(s, p, 0).pos.tolist() == [1, 0, 0]

    def test_conservation_example(self):
        s = state([2, 0, 1, 0], n=5)
        p = Partition.from_sets(4, [1, 2])
        for c in (0, 1):
            assert apply_round(s, p, c).pos.sum() == s.pos.sum() + p.size(c)

    def test_empty_side(self):
        s = state([1, 1, 1], n=3)
        p = Partition(np.ones(3, dtype=np.uint8))
        nxt = apply_round(s, p, 0)
        assert nxt.pos.tolist() == [1, 1, 1] and nxt.t == 2

    def test_input_not_mutated(self):
        s = GameState.initial(GameConfig(3, 2))
        apply_round(s, Partition.from_sets(3, [0]), 0)
        assert s.pos.tolist() == [0, 0, 0] and s.t == 0

    def test_finished(self):
        s = state([1, 0], n=1, t=1)
        with pytest.raises(GameFinished):
            apply_round(s, Partition.from_sets(2, [0]), 0)

    def test_length_mismatch(self):
        with pytest.raises(PartitionMismatch):
            apply_round(GameState.initial(GameConfig(3, 2)), Partition.from_sets(4, [0]), 0)

    def test_bad_choice(self):
        with pytest.raises(ConfigError):
            apply_round(GameState.initial(GameConfig(3, 2)), Partition.from_sets(3, [0]), 2)


class TestRankView:
    @pytest.mark.parametrize(
        "pos,order,posc",
        [
            ([0, 0, 1], [0, 1, 2], [0, 0, 1]),
            ([2, 0, 1], [1, 2, 0], [0, 1, 2]),
            ([5, 5, 5, 5], [0, 1, 2, 3], [5, 5, 5, 5]),
        ],
    )
    def test_examples(self, pos, order, posc):
        rv = rank_view(state(pos))
        assert rv.order.tolist() == order and rv.posc.tolist() == posc

    def test_one_based_accessors(self):
        s = state([2, 0, 1])
        assert s.rank.coin(1) == 1 and s.posc(3) == 2
        assert s.rank.rank_of.tolist() == [2, 0, 1]

    @given(st.lists(st.integers(0, 20), min_size=2, max_size=40))
    def test_sorted_permutation_with_id_ties(self, pos):
        rv = rank_view(state(pos))
        assert sorted(rv.order.tolist()) == list(range(len(pos)))
        keys = [(pos[c], c) for c in rv.order]
        assert keys == sorted(keys)
        assert rv.posc.tolist() == sorted(pos)


class TestEvaluate:
    @pytest.mark.parametrize(
        "n,r,pos,ell,winner",
        [
            (10, 0.3, [3, 3, 7], 1, Winner.EVE),
            (10, 0.3, [3, 4, 7], 1, Winner.BOB),
            (7, Fraction(3, 7), [3, 3, 3, 7, 7], 2, Winner.EVE),
        ],
    )
    def test_examples(self, n, r, pos, ell, winner):
        assert evaluate(state(pos, n=n, t=n), ell, r) is winner

    def test_not_finished(self):
        with pytest.raises(GameNotFinished):
            evaluate(state([0, 0], n=3, t=1), 1, 0.5)

    def test_surviving_examples(self):
        assert surviving_list(state([0, 4, 3], n=10, t=10), 0.3) == [0, 2]
        assert surviving_list(state([0, 2, 0, 1], n=4, t=4), 0) == [0, 2]
        assert surviving_list(state([4, 2, 3], n=4, t=4), 1) == [1, 2, 0]

    def test_threshold_is_floored(self):
        assert board_threshold(10, "0.35") == 3
        assert board_threshold(1340, "31/67") == 620
        assert as_fraction(0.3) == Fraction(3, 10)

    @pytest.mark.parametrize("bad", ["1.5", "-1/3", "x", None])
    def test_bad_radius(self, bad):
        with pytest.raises(ConfigError):
            as_fraction(bad)


@st.composite
def games(draw, max_k=12, max_n=30):
    K = draw(st.integers(2, max_k))
    n = draw(st.integers(1, max_n))
    sides = draw(st.lists(st.lists(st.integers(0, 1), min_size=K, max_size=K), min_size=n, max_size=n))
    choices = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    return K, n, [Partition(np.array(s, dtype=np.uint8)) for s in sides], choices


class TestTraceProperties:
    @given(games())
    def test_conservation_and_step(self, game):
        K, n, parts, choices = game
        tr = replay(GameConfig(K, n), parts, choices)
        for t in range(n):
            moved = tr.positions[t + 1].astype(int) - tr.positions[t]
            assert moved.tolist() == (parts[t].side == choices[t]).astype(int).tolist()
            d = tr.posc[t + 1].astype(int) - tr.posc[t]
            assert set(d.tolist()) <= {0, 1}
        assert tr.positions[0].sum() == 0

    @given(games(max_k=6, max_n=12))
    def test_elapsed_bound(self, game):
        K, n, parts, choices = game
        P = replay(GameConfig(K, n), parts, choices).posc.astype(int)
        for t in range(n + 1):
            for tp in range(t, n + 1):
                assert (P[tp] - P[t] <= tp - t).all()

    @given(games(max_k=8, max_n=10))
    def test_jsonl_round_trip(self, game):
        K, n, parts, choices = game
        tr = replay(GameConfig(K, n), parts, choices)
        buf = io.StringIO()
        tr.write_jsonl(buf)
        back = GameTrace.read_jsonl(io.StringIO(buf.getvalue()))
        assert np.array_equal(back.positions, tr.positions)
        assert np.array_equal(back.choices, tr.choices)
        assert np.array_equal(back.sides, tr.sides)


class TestTraceFormat:
    def trace(self):
        return play(GameConfig(4, 3), SWBob(), GreedyEve())

    def test_records(self):
        lines = io.StringIO()
        self.trace().write_jsonl(lines)
        rows = [json.loads(x) for x in lines.getvalue().splitlines()]
        assert rows[0] == {"K": 4, "n": 3}
        assert [r["t"] for r in rows[1:]] == [1, 2, 3]
        assert set(rows[1]) == {"t", "choice", "side", "posc"}
        assert rows[1]["side"] == [0, 1, 0, 1] and rows[1]["posc"] == [0, 0, 1, 1]

    def test_state_snapshots(self):
        tr = self.trace()
        assert tr.state(0) == GameState.initial(GameConfig(4, 3))
        assert tr.final.t == 3 and tr.rounds[0][0] == tr.partition(0)

    def test_tampered_posc_rejected(self):
        buf = io.StringIO()
        self.trace().write_jsonl(buf)
        rows = [json.loads(x) for x in buf.getvalue().splitlines()]
        rows[2]["posc"] = [0, 0, 0, 3]
        text = "\n".join(json.dumps(r) for r in rows)
        with pytest.raises(TraceError):
            GameTrace.read_jsonl(io.StringIO(text))
        loose = GameTrace.read_jsonl(io.StringIO(text), strict=False)
        assert loose.posc[2].tolist() == [0, 0, 0, 3]

    @pytest.mark.parametrize("text", ["", "not json", '{"K": 3, "n": 2}\n{"t": 2, "choice": 0, "side": [0,1,1]}'])
    def test_malformed(self, text):
        with pytest.raises(TraceError):
            GameTrace.read_jsonl(io.StringIO(text))

    def test_play_is_deterministic(self):
        a = play(GameConfig(9, 40), RandomBob(3), RandomEve(4))
        b = play(GameConfig(9, 40), RandomBob(3), RandomEve(4))
        assert np.array_equal(a.positions, b.positions)
