import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coinfeed.bob import RandomBob, SWBob
from coinfeed.errors import BadQ, ConfigError, NotSWPartition, TooFewCoins, WrongK
from coinfeed.eve import (
    AttackSchedule,
    BaseCaseAdversary,
    FullUpperBoundAdversary,
    GreedyEve,
    RandomEve,
    RecursiveAdversary,
    SWAttack,
    base_case_adversary,
    compute_theta,
    embedded_attack,
    eve_from_name,
    full_upper_bound_adversary,
    greedy_min_set,
    halving_opener,
    opener_rounds,
    recursive_adversary,
    sw_attack_schedule,
)
from coinfeed.game import GameConfig, GameState, Partition, apply_round, play
from coinfeed.oracle import enumerate_bob


def zeros(K, n=10):
    return GameState.initial(GameConfig(K, n))


class TestGreedy:
    def test_smaller_side(self):
        assert greedy_min_set(zeros(3), Partition.from_sets(3, [0])) == 0
        assert greedy_min_set(zeros(3), Partition.from_sets(3, [0, 1])) == 1

    def test_tie_goes_to_zero(self):
        assert greedy_min_set(zeros(6), Partition.from_sets(6, [0, 1, 2])) == 0

    def test_empty_side(self):
        assert greedy_min_set(zeros(4), Partition.from_sets(4, [])) == 0
        assert greedy_min_set(zeros(4), Partition.from_sets(4, range(4))) == 1

    def test_sub_game_counts_only_its_coins(self):
        p = Partition.from_sets(6, [0, 1, 2, 3])
        assert greedy_min_set(zeros(6), p, coins=[3, 4, 5]) == 0


class TestTheta:
    @pytest.mark.parametrize("ell,n,theta", [(1, 12, 4), (2, 14, 6), (3, 15, 7)])
    def test_zero_start(self, ell, n, theta):
        assert compute_theta(ell, n, 0, [0] * (2 ** (ell + 1) - 1)).theta == theta

    def test_exact_ceiling(self):
        tb = compute_theta(2, 10**12 + 1, 1, [0, 0, 0, 0, 0, 0, 1])
        assert tb.theta == -(-(3 * 10**12 + 1) // 7) and tb.sigma_m == 1

    def test_wrong_k(self):
        with pytest.raises(WrongK):
            compute_theta(2, 10, 0, [0] * 6)


class TestBaseCase:
    def test_theta_and_guarantee_n12(self):
        for bob in [SWBob(), RandomBob(1), RandomBob(2), RandomBob(3)]:
            adv = base_case_adversary(12)
            tr = play(GameConfig(3, 12), bob, adv)
            assert adv.theta == 4 and tr.final.posc(2) <= 4

    def test_exhaustive_bob_n3(self):
        assert enumerate_bob(BaseCaseAdversary(3), 3, 3, 2).value == 1

    def test_attach_with_no_rounds_left(self):
        s = GameState.from_positions(GameConfig(3, 18), 18, [0, 9, 9])
        adv = BaseCaseAdversary(18)
        adv.choose(s, Partition.from_sets(3, [0]))
        assert adv.theta == 9 and s.posc(2) == 9

    def test_mid_game_attach_bound(self):
        cfg = GameConfig(3, 30)
        for seed in range(6):
            pre = play(cfg, RandomBob(seed), RandomEve(seed), rounds=10).final
            adv = BaseCaseAdversary(30)
            s = pre
            bob = RandomBob(100 + seed)
            while s.t < cfg.n:
                p = bob.next_partition(s)
                s = apply_round(s, p, adv.choose(s, p))
            P = sorted(pre.pos.tolist())
            assert s.posc(2) <= max(-(-(20 + sum(P)) // 3), P[1])

    def test_wrong_k(self):
        with pytest.raises(WrongK):
            play(GameConfig(4, 3), SWBob(), BaseCaseAdversary())


class TestRecursive:
    def test_ell1_is_base_case(self):
        assert isinstance(recursive_adversary(1, 10), BaseCaseAdversary)

    def test_ell2_vs_sw(self):
        adv = recursive_adversary(2, 700)
        tr = play(GameConfig(7, 700), SWBob(), adv)
        assert adv.theta == 300 and tr.final.posc(3) <= 300
        assert not adv.log.violations and adv.log.switches

    def test_ell3_vs_random(self):
        adv = recursive_adversary(3, 1500)
        tr = play(GameConfig(15, 1500), RandomBob(1), adv)
        assert adv.theta == 700 and tr.final.posc(4) <= 700
        assert not adv.log.violations and not adv.log.nesting_violations

    def test_exit_identity_recorded(self):
        adv = recursive_adversary(2, 140)
        tr = play(GameConfig(7, 140), RandomBob(4), adv)
        sw = adv.log.switches[0]
        assert tr.state(sw["T"]).posc(1) == sw["theta"] + sw["T"] - 140
        assert sw["theta_child"] <= sw["theta"]

    def test_precondition_failure_falls_back(self):
        s = GameState.from_positions(GameConfig(7, 20), 10, [0, 10, 10, 10, 10, 10, 10])
        adv = RecursiveAdversary(2, 20)
        assert adv.choose(s, Partition.from_sets(7, [0])) in (0, 1)
        assert adv.fallback and adv.log.violations

    def test_wrong_k(self):
        with pytest.raises(WrongK):
            play(GameConfig(8, 5), SWBob(), recursive_adversary(2))


class TestOpener:
    def test_keeps_most_zeros(self):
        p = Partition.from_sets(8, [0, 1, 2, 3, 4])
        assert halving_opener(zeros(8), p) == 1

    def test_tie(self):
        assert halving_opener(zeros(8), Partition.from_sets(8, [0, 1, 2, 3])) == 0

    @pytest.mark.parametrize("ell", [1, 2, 3])
    def test_three_rounds_at_eight_times(self, ell):
        assert opener_rounds(8 * (2 ** (ell + 1) - 1), ell) == 3

    @given(st.integers(1, 3), st.integers(0, 200), st.integers(0, 10**6))
    def test_enough_zeros_survive(self, ell, extra, seed):
        need = 2 ** (ell + 1) - 1
        K = need + extra
        s = opener_rounds(K, ell)
        assert need * 2**s <= K < need * 2 ** (s + 1)
        if s:
            tr = play(GameConfig(K, s), RandomBob(seed), FullUpperBoundAdversary(ell, K=K))
            assert int((tr.final.pos == 0).sum()) >= need

    def test_too_few(self):
        with pytest.raises(TooFewCoins):
            full_upper_bound_adversary(2, 100, 6)

    def test_small_upper_bound(self):
        adv = full_upper_bound_adversary(1, 120, 24)
        tr = play(GameConfig(24, 120), SWBob(), adv)
        assert tr.final.posc(2) <= 40 and not adv.log.violations


class TestAttack:
    def test_schedule(self):
        sched = AttackSchedule(2)
        assert sched.n == 134 and sched.boundaries[-1] == 134
        assert [p for _, p in sched.phases] == ["even", "odd", "even", "odd", "even", "odd"]
        assert sched.parity(0) == "even" and sched.parity(64) == "odd"

    def test_round_labels(self):
        atk = sw_attack_schedule(2)
        s = zeros(8, 134)
        assert atk.choose(s, SWBob().next_partition(s)) == 1
        s64 = GameState.from_positions(GameConfig(8, 134), 64, [0, 32, 32, 32, 32, 32, 32, 32])
        assert atk.choose(s64, SWBob().next_partition(s64)) == 0

    @pytest.mark.parametrize("q", [0, 3, -2])
    def test_bad_q(self, q):
        with pytest.raises(BadQ):
            AttackSchedule(q)

    def test_wrong_n(self):
        with pytest.raises(BadQ):
            play(GameConfig(8, 100), SWBob(), SWAttack(2))

    def test_rejects_non_sw(self):
        with pytest.raises(NotSWPartition):
            play(GameConfig(8, 134), RandomBob(0), SWAttack(2))

    def test_rank1_frozen_in_even_phases(self):
        sched = AttackSchedule(2)
        tr = play(GameConfig(256, 134), SWBob(), SWAttack(2))
        P = tr.posc
        for t in range(134):
            if sched.parity(t) == "even":
                assert P[t + 1, 0] == P[t, 0]

    def test_embedded(self):
        eve = embedded_attack(2, 200, offset=30)
        tr = play(GameConfig(16, 200), SWBob(), eve)
        assert tr.n == 200
        with pytest.raises(ConfigError):
            embedded_attack(2, 100, offset=0)


class TestNames:
    @pytest.mark.parametrize(
        "name,cls",
        [("greedy", GreedyEve), ("random:3", RandomEve), ("base:12", BaseCaseAdversary),
         ("recursive:2", RecursiveAdversary), ("upperbound:1", FullUpperBoundAdversary), ("swattack:2", SWAttack)],
    )
    def test_known(self, name, cls):
        assert isinstance(eve_from_name(name, n=12, K=24), cls)

    @pytest.mark.parametrize("name", ["greedyx", "random:z", "swattack:3", "nope"])
    def test_unknown(self, name):
        with pytest.raises(ConfigError):
            eve_from_name(name)

    def test_random_eve_deterministic(self):
        a = play(GameConfig(5, 30), SWBob(), RandomEve(9))
        b = play(GameConfig(5, 30), SWBob(), RandomEve(9))
        assert np.array_equal(a.choices, b.choices)
