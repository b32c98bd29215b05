"""Quadruple coin game: index map phi, its pairing checks, and the potential psi.

A quadruple is a 4-subset of coins with members ordered by (position, id);
its position counts the lowest member with weight 1/2.  Because that order
is the rank order, quadruples are handled as ascending 1-based rank tuples
``(i1, i2, i3, i4)``.  Half-integer quantities are stored doubled so they
stay exact integers.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, NotSlowTuple
from .monitors import ABS_TOL, REL_TOL, Violation, posc_of

PSI_WINDOW = 16


def _moved(i: int, moved_parity: str) -> bool:
    if moved_parity not in ("even", "odd"):
        raise ConfigError(f"moved parity must be 'even' or 'odd', got {moved_parity!r}")
    return (i % 2 == 0) == (moved_parity == "even")


def movement(tup, moved_parity: str, weighted: bool = False) -> float:
    """Movement of a rank tuple when the ``moved_parity`` ranks move.

    Unweighted counts moved members; ``weighted`` gives the lowest member
    weight 1/2 as in the quadruple position.
    """
    total = 0.0
    for k, i in enumerate(tup):
        if _moved(i, moved_parity):
            total += 0.5 if (weighted and k == 0) else 1.0
    return total


def phi_bijection(tup, moved_parity: str) -> tuple[int, int, int, int]:
    """Image of a slow tuple (at most one index of the moved parity)."""
    i1, i2, i3, i4 = tup
    if not i1 < i2 < i3 < i4:
        raise ConfigError(f"tuple must be strictly ascending: {tup}")
    moved = [_moved(i, moved_parity) for i in tup]
    if sum(moved) >= 2:
        raise NotSlowTuple(f"{tup} has {sum(moved)} indices of the moved parity")
    if not any(moved):
        return (i1, i2 - 1, i3 - 1, i4 - 1)
    if moved[3]:
        return (i1, i2, i3 - 1, i4)
    if moved[2]:
        return (i1, i2 - 1, i3, i4)
    # i2 or i1 moved
    return (i1, i2, i3, i4 - 1)


def phi_inverse(tup, moved_parity: str) -> tuple[int, int, int, int]:
    """Preimage of a tuple in the image of :func:`phi_bijection`.

    The five images have distinct moved-parity patterns, which pick the case.
    """
    j1, j2, j3, j4 = tup
    pattern = tuple(_moved(j, moved_parity) for j in tup)
    if pattern == (False, True, True, True):
        return (j1, j2 + 1, j3 + 1, j4 + 1)
    if pattern == (False, False, True, True):
        return (j1, j2, j3 + 1, j4)
    if pattern == (False, True, True, False):
        return (j1, j2 + 1, j3, j4)
    if pattern == (False, True, False, True):
        return (j1, j2, j3, j4 + 1)
    if pattern == (True, False, False, True):
        return (j1, j2, j3, j4 + 1)
    raise ConfigError(f"{tup} is not in the image of phi for moved parity {moved_parity}")


@dataclass
class PhiReport:
    K: int
    moved_parity: str
    weighted: bool
    injective: bool = True
    involution: bool = True
    pair_sum: bool = True
    poset: bool = True
    inverse_ok: bool = True
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.injective and self.involution and self.pair_sum and self.poset and self.inverse_ok


def check_phi_claim(K: int, moved_parity: str, weighted: bool = False) -> PhiReport:
    """Exhaustively check the pairing of all C(K, 4) rank tuples.

    Slow tuples are paired with their phi image; every tuple left over is
    paired with itself.  Checks: (a) phi is injective on slow tuples with
    valid images disjoint from the slow set, (b) the pairing is an involution,
    (c) paired movements sum to at least 3, (d) a slow tuple's partner is
    strictly below it coordinatewise.  ``inverse_ok`` confirms the explicit
    inverse table undoes phi.
    """
    if not 4 <= K <= 20:
        raise ConfigError(f"K must lie in [4, 20], got {K}")
    rep = PhiReport(K, moved_parity, weighted)
    tuples = list(itertools.combinations(range(1, K + 1), 4))
    universe = set(tuples)
    u = {tp: movement(tp, moved_parity, weighted) for tp in tuples}
    slow = [tp for tp in tuples if sum(_moved(i, moved_parity) for i in tp) <= 1]
    slow_set = set(slow)

    image = {}
    for tp in slow:
        img = phi_bijection(tp, moved_parity)
        if img not in universe:
            rep.injective = False
            rep.failures.append(f"phi{tp} = {img} is not an ascending tuple in [{K}]")
            continue
        if img in slow_set:
            rep.injective = False
            rep.failures.append(f"phi{tp} = {img} is itself slow")
        if img in image:
            rep.injective = False
            rep.failures.append(f"phi{tp} = phi{image[img]} = {img}")
        image[img] = tp
        if phi_inverse(img, moved_parity) != tp:
            rep.inverse_ok = False
            rep.failures.append(f"inverse table maps {img} to {phi_inverse(img, moved_parity)}, not {tp}")

    partner = {tp: tp for tp in tuples}
    for img, tp in image.items():
        partner[tp] = img
        partner[img] = tp

    for tp in tuples:
        if partner[partner[tp]] != tp:
            rep.involution = False
            rep.failures.append(f"pairing is not an involution at {tp}")
        if u[tp] + u[partner[tp]] < 3:
            rep.pair_sum = False
            rep.failures.append(f"u{tp} + u{partner[tp]} = {u[tp] + u[partner[tp]]} < 3")
        if u[tp] < 1.5:
            j = partner[tp]
            if j == tp or any(a > b for a, b in zip(j, tp)):
                rep.poset = False
                rep.failures.append(f"partner {j} of slow tuple {tp} is not strictly below it")
    return rep


@dataclass
class RoundDelta:
    """Movement during round t+1 of the coins ranked at time t."""

    t: int
    u: np.ndarray  # u[i-1] = 1 iff the rank-i coin moved
    tuples: np.ndarray  # (C, 4) 1-based rank tuples in lexicographic order
    uq: np.ndarray  # unweighted movement per tuple


def round_delta(trace, t: int) -> RoundDelta:
    order = trace.state(t).rank.order
    u = (trace.sides[t][order] == trace.choices[t]).astype(np.int64)
    combos = np.array(list(itertools.combinations(range(len(u)), 4)), dtype=np.int64)
    return RoundDelta(t, u, combos + 1, u[combos].sum(axis=1))


@dataclass
class PotentialState:
    t: int
    tuples: np.ndarray  # (C, 4) 1-based rank tuples
    members: np.ndarray  # (C, 4) coin ids ordered by (position, id)
    posq2: np.ndarray  # twice the quadruple position
    d2: np.ndarray  # twice the deficit max(0, 3t/2 - posq)
    w: np.ndarray
    psi: float


def _combos(W: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(W), 4)), dtype=np.int64)


def _weights(P: np.ndarray, combos: np.ndarray, epsilon: float):
    """Doubled positions, doubled deficits and weights; P is (n+1, W)."""
    t = np.arange(P.shape[0])[:, None]
    posq2 = P[:, combos[:, 0]] + 2 * (P[:, combos[:, 1]] + P[:, combos[:, 2]] + P[:, combos[:, 3]])
    d2 = np.maximum(0, 3 * t - posq2)
    w = (1.0 + epsilon) ** (d2 / 6.0)
    return posq2, d2, w


def potential_state(trace, t: int, epsilon: float) -> PotentialState:
    rank = trace.state(t).rank
    K = len(rank.order)
    if K > PSI_WINDOW:
        raise ConfigError(f"full quadruple enumeration needs K <= {PSI_WINDOW}")
    combos = _combos(K)
    P = rank.posc.astype(np.int64)
    posq2 = P[combos[:, 0]] + 2 * P[combos[:, 1:]].sum(axis=1)
    d2 = np.maximum(0, 3 * t - posq2)
    w = (1.0 + epsilon) ** (d2 / 6.0)
    return PotentialState(t, combos + 1, rank.order[combos], posq2, d2, w, math.fsum(w.tolist()))


def psi_series(trace, epsilon: float, window: int = PSI_WINDOW) -> np.ndarray:
    """psi(t) for every t, over 4-subsets of the lowest ``min(K, window)`` ranks."""
    P = posc_of(trace)
    if len(P) != 1:
        raise ValueError("psi is computed one trace at a time")
    P = P[0][:, :window]
    _, _, w = _weights(P, _combos(P.shape[1]), epsilon)
    return np.array([math.fsum(row) for row in w.tolist()])


@dataclass
class PsiReport:
    psi: np.ndarray
    C: int
    slack: np.ndarray  # per round: rhs - lhs of the one-step inequality
    violations: list[Violation]
    solved_violations: list[Violation]

    @property
    def passed(self) -> bool:
        return not self.violations and not self.solved_violations


def check_psi_recurrence(trace, epsilon: float, window: int = PSI_WINDOW) -> PsiReport:
    """psi(t+1) <= e^{eps^2/2} psi(t) + eps C/2 and psi(t) <= e^{t eps^2/2} C (1 + 1/eps).

    ``C`` is C(W, 4) for the window W actually used; psi(0) = C.
    """
    if not 0 < epsilon < 1:
        raise ConfigError(f"epsilon must lie in (0, 1), got {epsilon}")
    psi = psi_series(trace, epsilon, window)
    W = min(posc_of(trace).shape[2], window)
    C = math.comb(W, 4)
    growth = math.exp(epsilon**2 / 2)
    rhs = growth * psi[:-1] + epsilon * C / 2
    lhs = psi[1:]
    viol = [
        Violation("psi_step", int(t) + 1, None, float(lhs[t]), float(rhs[t]))
        for t in np.flatnonzero(lhs > rhs * (1 + REL_TOL) + ABS_TOL)
    ]
    t = np.arange(len(psi))
    solved = np.exp(t * epsilon**2 / 2) * C * (1 + 1 / epsilon)
    solved_viol = [
        Violation("psi_solved", int(s), None, float(psi[s]), float(solved[s]))
        for s in np.flatnonzero(psi > solved * (1 + REL_TOL) + ABS_TOL)
    ]
    return PsiReport(psi, C, rhs - lhs, viol, solved_viol)
