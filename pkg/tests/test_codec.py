import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coinfeed.bob import RandomBob, SWBob
from coinfeed.codec import (
    ListDecodingFailure,
    Message,
    adversary_from_name,
    alice_bit,
    bob_update,
    decode_list,
    eve_replay,
    flip_every_round,
    honest,
    random_flips,
    run_session,
)
from coinfeed.errors import BudgetExceeded, ConfigError, GameNotFinished
from coinfeed.eve import GreedyEve, ScriptedEve, SWAttack
from coinfeed.game import GameConfig, GameState, play, surviving_list
from coinfeed.oracle import enumerate_eve


class TestAlice:
    def test_bits(self):
        s = GameState.initial(GameConfig(4, 3))
        p = SWBob().next_partition(s)
        assert alice_bit(s, p, 0) == 0 and alice_bit(s, p, 1) == 1

    def test_update_moves_other_side(self):
        s = GameState.initial(GameConfig(4, 3))
        p = SWBob().next_partition(s)
        nxt = bob_update(s, p, alice_bit(s, p, 2))
        assert nxt.pos[2] == 0 and nxt.pos.sum() == 2
        flipped = bob_update(s, p, 1 - alice_bit(s, p, 2))
        assert flipped.pos[2] == 1

    @pytest.mark.parametrize("k,x", [(0, 0), (25, 0), (3, 8), (3, -1)])
    def test_message_guard(self, k, x):
        with pytest.raises(ConfigError):
            Message(k, x)


class TestSession:
    def test_honest(self):
        res = run_session(2, 3, SWBob(), honest(0), 1)
        assert res.flips == 0 and res.final_state.pos[1] == 0 and 1 in res.decoded

    def test_every_round(self):
        res = run_session(2, 3, SWBob(), flip_every_round(1), 3)
        assert res.flips == 3 and res.final_state.pos[3] == 3
        assert res.received == [1 - b for b in res.sent]

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            run_session(2, 3, SWBob(), flip_every_round("1/3"), 0)

    def test_random_respects_budget(self):
        res = run_session(5, 90, RandomBob(3), random_flips("1/3", 4, prob=0.9), 17)
        assert res.flips == res.budget == 30

    @given(
        st.integers(1, 8), st.integers(1, 60), st.integers(0, 10**6), st.sampled_from(["sw", "random"]),
        st.floats(0, 1), st.sampled_from(["1/4", "1/3", "1/2", "3/7", "1"]),
    )
    def test_corruption_identity_and_completeness(self, k, n, seed, bob, prob, r):
        x = seed % 2**k
        b = SWBob() if bob == "sw" else RandomBob(seed)
        res = run_session(k, n, b, random_flips(r, seed, prob=prob), x)
        assert res.final_state.pos[x] == res.flips == len(res.flip_rounds)
        assert x in res.decoded
        # decoded list is ordered by (position, id)
        assert [(res.final_state.pos[c], c) for c in res.decoded] == sorted((res.final_state.pos[c], c) for c in res.decoded)

    @given(st.integers(2, 6), st.integers(1, 40), st.integers(0, 10**6))
    def test_eve_replay_equals_coin_game(self, k, n, seed):
        rng = np.random.default_rng(seed)
        choices = rng.integers(0, 2, size=n).tolist()
        bare = play(GameConfig(2**k, n), SWBob(), ScriptedEve(choices))
        x = int(rng.integers(2**k))
        res = run_session(k, n, SWBob(), eve_replay(1, ScriptedEve(choices)), x, keep_trace=True)
        assert np.array_equal(res.final_state.pos, bare.final.pos)
        assert np.array_equal(res.trace.positions, bare.positions)

    def test_oracle_witness_replay(self):
        orc = enumerate_eve(SWBob(), 8, 21, 3, memo=True)
        survivors = surviving_list(orc.optimal_trace.final, "3/7")
        for x in survivors:
            res = run_session(3, 21, SWBob(), eve_replay("3/7", ScriptedEve(orc.witness_path)), x)
            assert len(res.decoded) <= len(survivors)

    def test_swattack_list_failure(self):
        dry = play(GameConfig(2**14, 1340), SWBob(), SWAttack(20))
        x = surviving_list(dry.final, "31/67")[0]
        res = run_session(14, 1340, SWBob(), eve_replay("31/67", SWAttack(20)), x, ell=3)
        assert res.list_ok is False and len(res.decoded) >= 4
        with pytest.raises(ListDecodingFailure) as info:
            decode_list(res.final_state, 3, "31/67")
        assert info.value.survivors == res.decoded


class TestDecode:
    def state(self, pos, n):
        return GameState.from_positions(GameConfig(len(pos), n), n, pos)

    def test_single(self):
        assert decode_list(self.state([0, 5, 5], 6), 2, "1/3") == [0]

    def test_failure_carries_all(self):
        with pytest.raises(ListDecodingFailure) as info:
            decode_list(self.state([1, 0, 2, 5], 6), 2, "1/3")
        assert info.value.survivors == [1, 0, 2]

    def test_not_finished(self):
        s = GameState.from_positions(GameConfig(3, 6), 2, [0, 0, 1])
        with pytest.raises(GameNotFinished):
            decode_list(s, 2, "1/3")


class TestNames:
    def test_names(self):
        assert adversary_from_name("none", "1/3").name == "none"
        assert adversary_from_name("all", "1/3").name == "all"
        assert adversary_from_name("random:3", "1/3").name == "random:3"
        assert adversary_from_name("greedy", "1/3").name == "eve:greedy"
        with pytest.raises(ConfigError):
            adversary_from_name("random:x", "1/3")

    def test_greedy_replay_needs_a_survivor(self):
        dry = play(GameConfig(16, 30), SWBob(), GreedyEve())
        x = surviving_list(dry.final, "1/2")[0]
        res = run_session(4, 30, SWBob(), eve_replay("1/2", GreedyEve()), x)
        assert res.final_state.pos[x] == res.flips
        loser = int(np.argmax(dry.final.pos))
        with pytest.raises(BudgetExceeded):
            run_session(4, 30, SWBob(), eve_replay("1/2", GreedyEve()), loser)
