"""Per-round monitors over posc histories.

Every monitor accepts a :class:`~coinfeed.game.GameTrace`, a posc array of
shape (n+1, K), or a batch of shape (B, n+1, K) such as the output of
:func:`coinfeed.swfast.sw_exhaustive`.  They return lists of
:class:`Violation`; an empty list means the property held everywhere.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

# Relative/absolute tolerance for every floating comparison in the analysis package.
REL_TOL = 1e-9
ABS_TOL = 1e-12


@dataclass(frozen=True)
class Violation:
    monitor: str
    round: int
    index: int | None
    lhs: float
    rhs: float
    trace: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = False
        return d


def posc_of(trace) -> np.ndarray:
    """Posc history as int64, shape (B, n+1, K) with B=1 for a single trace."""
    arr = np.asarray(getattr(trace, "posc", trace), dtype=np.int64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError(f"expected a posc history of shape (n+1, K) or (B, n+1, K), got {arr.shape}")
    return arr


def _trace_id(batch: int, b: int) -> int | None:
    return b if batch > 1 else None


def monitor_posc_step(trace) -> list[Violation]:
    """posc_{t+1}(i) - posc_t(i) must be 0 or 1 for every round and rank."""
    P = posc_of(trace)
    d = np.diff(P, axis=1)
    out = []
    for b, t, i in np.argwhere((d < 0) | (d > 1)):
        out.append(Violation("posc_step", int(t), int(i) + 1, int(d[b, t, i]), 1, _trace_id(len(P), int(b))))
    return out


def monitor_elapsed(trace) -> list[Violation]:
    """posc_{t'}(i) - posc_t(i) <= t' - t for every t <= t'.

    Checked against the minimum of posc_t(i) - t over all earlier t, so the
    pairwise statement is covered without assuming the one-step claim.
    """
    P = posc_of(trace)
    steps = np.arange(P.shape[1])[None, :, None]
    g = P - steps
    earlier_min = np.minimum.accumulate(g, axis=1)
    bad = g[:, 1:, :] > earlier_min[:, :-1, :]
    out = []
    for b, tp, i in np.argwhere(bad):
        tp = int(tp) + 1
        t = int(np.argmin(g[b, :tp, i]))
        out.append(
            Violation("elapsed", tp, int(i) + 1, int(P[b, tp, i] - P[b, t, i]), tp - t, _trace_id(len(P), int(b)))
        )
    return out


def monitor_gap(trace) -> list[Violation]:
    """posc(2) - posc(1) + 1 >= posc(4) - posc(3) at every round (needs K >= 4)."""
    P = posc_of(trace)
    if P.shape[2] < 4:
        raise ValueError("gap monitor needs at least 4 coins")
    lhs = P[:, :, 1] - P[:, :, 0] + 1
    rhs = P[:, :, 3] - P[:, :, 2]
    return [
        Violation("gap", int(t), None, int(lhs[b, t]), int(rhs[b, t]), _trace_id(len(P), int(b)))
        for b, t in np.argwhere(lhs < rhs)
    ]


@dataclass
class QuadrupleBoundReport:
    slack: np.ndarray  # (B, n+1): 1/2 posc(1) + posc(2) + posc(3) + posc(4) - 3t/2
    min_slack: Fraction
    argmin: tuple[int, int]
    threshold: float
    passed: bool
    violations: list[Violation]


def check_quadruple_bound(trace, epsilon: float) -> QuadrupleBoundReport:
    """Lower bound 1/2 posc(1) + posc(2) + posc(3) + posc(4) >= 3t/2 - 5 eps n.

    Slack is computed exactly in halves; ``n`` is the number of rounds in the
    trace.
    """
    P = posc_of(trace)
    n = P.shape[1] - 1
    t = np.arange(n + 1)[None, :]
    twice = P[:, :, 0] + 2 * (P[:, :, 1] + P[:, :, 2] + P[:, :, 3]) - 3 * t
    b, tm = np.unravel_index(int(np.argmin(twice)), twice.shape)
    threshold = -5 * epsilon * n
    bad = twice / 2 < threshold - ABS_TOL
    violations = [
        Violation("quadruple_bound", int(tt), None, float(twice[bb, tt]) / 2, threshold, _trace_id(len(P), int(bb)))
        for bb, tt in np.argwhere(bad)
    ]
    return QuadrupleBoundReport(
        slack=twice / 2,
        min_slack=Fraction(int(twice[b, tm]), 2),
        argmin=(int(b), int(tm)),
        threshold=threshold,
        passed=not violations,
        violations=violations,
    )


def monitor_no_catchup(trace, choices, indices=None) -> list[Violation]:
    """Over any run of rounds in which rank i+1's parity class is never moved,
    posc_{t'}(i+1) <= max(posc_t(i+1), posc_t(i) + t' - t).

    ``choices`` are the SW side labels per round (0 = odd ranks, 1 = even).
    Only maximal constant-choice runs are examined; every sub-interval of a
    run is checked.  ``indices`` are the 1-based i values (default 1..8).
    """
    P = posc_of(trace)
    if len(P) != 1:
        raise ValueError("no-catchup monitor takes a single trace")
    P = P[0]
    choices = np.asarray(choices)
    K = P.shape[1]
    indices = range(1, min(K - 1, 8) + 1) if indices is None else indices
    out = []
    start = 0
    n = len(choices)
    while start < n:
        end = start
        while end < n and choices[end] == choices[start]:
            end += 1
        moved_parity = int(choices[start])  # 0: odd ranks move, 1: even ranks move
        seg = P[start : end + 1]
        span = np.arange(len(seg))
        elapsed = span[None, :] - span[:, None]
        upper = elapsed >= 0
        for i in indices:
            if (i + 1) % 2 == (0 if moved_parity == 1 else 1):
                continue
            bound = np.maximum(seg[:, i][:, None], seg[:, i - 1][:, None] + elapsed)
            bad = upper & (seg[:, i][None, :] > bound)
            for a, c in np.argwhere(bad):
                out.append(Violation("no_catchup", start + int(c), i + 1, int(seg[c, i]), int(bound[a, c])))
        start = end
    return out
