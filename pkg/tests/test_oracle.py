import json
import math

import numpy as np
import pytest

from coinfeed.bob import RandomBob, ScriptedBob, SWBob
from coinfeed.errors import ConfigError, MemoUnsound, TooLarge
from coinfeed.eve import BaseCaseAdversary, ScriptedEve
from coinfeed.game import GameConfig, play
from coinfeed.oracle import enumerate_bob, enumerate_eve, full_minimax, verify_memo_soundness
from coinfeed.swfast import choice_sequence, sw_exhaustive


def brute(K, n, i, direction="min"):
    """Independent answer: vectorized posc histories of every sequence."""
    final = sw_exhaustive(K, n)[:, -1, i - 1]
    b = int(np.argmin(final) if direction == "min" else np.argmax(final))
    return int(final[b]), choice_sequence(b, n)


class TestEnumerateEve:
    def test_two_coins_one_round(self):
        assert enumerate_eve(SWBob(), 2, 1, 2).value == 1

    @pytest.mark.parametrize("K,n,i", [(4, 10, 2), (4, 7, 3), (6, 8, 4), (8, 9, 3)])
    @pytest.mark.parametrize("direction", ["min", "max"])
    def test_matches_brute_force(self, K, n, i, direction):
        value, path = brute(K, n, i, direction)
        for memo in (False, True):
            res = enumerate_eve(SWBob(), K, n, i, direction, memo=memo)
            assert res.value == value
            # lexicographically smallest optimal sequence == smallest row index
            assert res.witness_path == path

    def test_witness_attains_value(self):
        res = enumerate_eve(SWBob(), 8, 14, 3, memo=True)
        tr = play(GameConfig(8, 14), SWBob(), ScriptedEve(res.witness_path))
        assert tr.final.posc(3) == res.value
        assert np.array_equal(tr.positions, res.optimal_trace.positions)

    def test_k8_n21_fixture(self):
        assert enumerate_eve(SWBob(), 8, 21, 3, memo=True).value == 8

    def test_thread_count_does_not_matter(self):
        one = enumerate_eve(SWBob(), 8, 14, 3, memo=True, threads=1).to_json()
        many = enumerate_eve(SWBob(), 8, 14, 3, memo=True, threads=4).to_json()
        assert json.dumps(one) == json.dumps(many)

    def test_random_bob_naive(self):
        res = enumerate_eve(RandomBob(3), 5, 8, 2)
        tr = play(GameConfig(5, 8), RandomBob(3), ScriptedEve(res.witness_path))
        assert tr.final.posc(2) == res.value

    def test_guards(self):
        with pytest.raises(TooLarge):
            enumerate_eve(SWBob(), 4, 27, 2)
        with pytest.raises(MemoUnsound):
            enumerate_eve(RandomBob(1), 4, 6, 2, memo=True)
        with pytest.raises(ConfigError):
            enumerate_eve(SWBob(), 4, 6, 5)
        with pytest.raises(ConfigError):
            enumerate_eve(SWBob(), 4, 6, 2, direction="up")

    def test_unique_decoding_trend(self):
        # min posc_n(2) >= floor(n/3) - c; c = 0 observed on these sizes
        for K in (4, 8):
            for n in (6, 12, 18, 24):
                assert enumerate_eve(SWBob(), K, n, 2, memo=True).value >= n // 3


class TestMemoSoundness:
    def test_sw(self):
        assert verify_memo_soundness(SWBob(), 4, 8, 2)

    def test_scripted_from_sw_trace(self):
        tr = play(GameConfig(4, 8), SWBob(), ScriptedEve([0, 1, 1, 0, 1, 0, 0, 1]))
        assert verify_memo_soundness(ScriptedBob.from_trace(tr), 4, 8, 2)

    def test_random_is_refused(self):
        with pytest.raises(MemoUnsound):
            verify_memo_soundness(RandomBob(5), 4, 6, 2)


class TestMinimax:
    @pytest.mark.parametrize("n,value", [(1, 0), (3, 1)])
    def test_examples(self, n, value):
        assert full_minimax(3, n, 2).value == value

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_canonical_matches_labelled(self, n):
        assert full_minimax(3, n, 2).value == full_minimax(3, n, 2, canonical=False).value

    @pytest.mark.parametrize("n", [6, 9])
    def test_upper_bound(self, n):
        assert full_minimax(3, n, 2).value <= math.ceil(n / 3)

    def test_guard(self):
        with pytest.raises(TooLarge):
            full_minimax(6, 4, 2)
        with pytest.raises(TooLarge):
            full_minimax(3, 13, 2)

    def test_bob_search_against_base_case(self):
        assert enumerate_bob(BaseCaseAdversary(6), 3, 6, 2).value <= 2
