"""Checks for the six-phase attack on the SW strategy."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import BadQ
from ..game import as_fraction
from .monitors import Violation, monitor_elapsed, monitor_no_catchup, posc_of

# (m / q, parity moved in the phase ending at or containing m, bounds on posc_m(1..5) in units of q)
MILESTONES = (
    (32, "even", (0, 16, 16, 16, 16)),
    (48, "odd", (16, 16, 24, 24, 24)),
    (56, "even", (16, 24, 24, 28, 28)),
    (60, "odd", (20, 24, 28, 28, 30)),
    (62, "even", (20, 26, 28, 30, 30)),
    (64, "even", (20, 28, 28, 31, 31)),
    (67, "odd", (23, 28, 31, 31, Fraction(67, 2))),
)


@dataclass(frozen=True)
class MilestoneTable:
    q: int
    slack: int

    @property
    def rows(self) -> list[tuple[int, str, tuple]]:
        return [(m * self.q, parity, tuple(b * self.q for b in bounds)) for m, parity, bounds in MILESTONES]


def eps_slack(epsilon, q: int) -> tuple[int, bool]:
    """ceil(eps * q) and whether eps * q was already an integer."""
    exact = as_fraction(epsilon) * q
    return math.ceil(exact), exact.denominator == 1


@dataclass
class MilestoneReport:
    q: int
    epsilon: float
    slack: int
    slack_exact: bool
    rows: list[dict] = field(default_factory=list)
    final_posc4: int = 0
    final_bound: Fraction = Fraction(0)
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.rows) and self.final_posc4 < self.final_bound

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "epsilon": self.epsilon,
            "slack": self.slack,
            "slack_exact": self.slack_exact,
            "rows": self.rows,
            "final_posc4": self.final_posc4,
            "final_bound": float(self.final_bound),
            "warnings": self.warnings,
            "pass": self.passed,
        }


def _check_q(P: np.ndarray, q: int) -> None:
    if q <= 0 or q % 2:
        raise BadQ(f"q must be a positive even integer, got {q}")
    if P.shape[0] - 1 != 67 * q:
        raise BadQ(f"trace has {P.shape[0] - 1} rounds, expected 67q = {67 * q}")


def attack_table_check(trace, q: int, epsilon) -> MilestoneReport:
    """Compare posc_m(1..5) with the milestone bounds plus ceil(eps q)."""
    P = posc_of(trace)[0]
    _check_q(P, q)
    K = P.shape[1]
    slack, exact = eps_slack(epsilon, q)
    rep = MilestoneReport(q, float(epsilon), slack, exact)
    if not exact:
        rep.warnings.append(f"eps*q = {float(as_fraction(epsilon) * q)} is not an integer; using {slack}")
    if K < 1000 / float(epsilon):
        msg = f"K={K} is below 1000/eps = {1000 / float(epsilon):.0f}; bounds are not guaranteed"
        rep.warnings.append(msg)
        warnings.warn(msg, stacklevel=2)
    for m, parity, bounds in MilestoneTable(q, slack).rows:
        for i, b in enumerate(bounds, start=1):
            value = int(P[m, i - 1])
            rep.rows.append(
                {"m": m, "parity": parity, "index": i, "value": value, "bound": float(b + slack), "pass": value <= b + slack}
            )
    n = 67 * q
    rep.final_posc4 = int(P[n, 3])
    rep.final_bound = (Fraction(31, 67) + as_fraction(epsilon)) * n
    return rep


@dataclass
class ClaimReport:
    violations: list[Violation]
    checked: dict[str, int]

    @property
    def passed(self) -> bool:
        return not self.violations


def monitor_claim_suite(trace, q: int, epsilon, choices=None) -> ClaimReport:
    """Sixth-coin bound, elapsed-rounds bound, no-catchup and the two-step clubsuit bound.

    ``choices`` defaults to ``trace.choices``; pass them explicitly when
    ``trace`` is a bare posc array.
    """
    P = posc_of(trace)[0]
    _check_q(P, q)
    slack, _ = eps_slack(epsilon, q)
    n = P.shape[0] - 1
    checked = {}
    out: list[Violation] = []

    if P.shape[1] >= 6:
        m = np.arange(n + 1)
        # posc_m(6) < m/2 + slack, compared doubled
        bad = 2 * P[:, 5] >= m + 2 * slack
        out += [Violation("posc6", int(t), 6, int(P[t, 5]), t / 2 + slack) for t in np.flatnonzero(bad)]
        checked["posc6"] = n + 1

    out += monitor_elapsed(P)
    checked["elapsed"] = (n + 1) * P.shape[1]

    choices = getattr(trace, "choices", None) if choices is None else choices
    if choices is None:
        raise ValueError("no-catchup needs the per-round choices")
    out += monitor_no_catchup(P, choices)
    checked["no_catchup_runs"] = int(1 + np.count_nonzero(np.diff(np.asarray(choices))))

    base = 62 * q
    for d in range(0, 2 * q + 1, 2):
        bound = 30 * q + d // 2 + slack
        if P[base + d, 4] > bound:
            out.append(Violation("clubsuit", base + d, 5, int(P[base + d, 4]), bound))
    checked["clubsuit"] = q + 1
    return ClaimReport(out, checked)
