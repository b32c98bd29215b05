"""Spencer-Winkler runs tracked on sorted positions only.

Under SW the next sorted position vector depends only on the current sorted
vector and Eve's choice (``choice`` 0 moves 1-based odd ranks, 1 moves even
ranks), independently of coin identities and tie order.  These helpers use
that to simulate many rounds or many games at once; they are checked against
the by-coin engine in the tests.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import TooLarge

EXHAUSTIVE_LIMIT = 2**20


def sw_step(posc: Sequence[int], choice: int) -> tuple[int, ...]:
    nxt = list(posc)
    for j in range(choice, len(nxt), 2):
        nxt[j] += 1
    nxt.sort()
    return tuple(nxt)


def sw_posc_run(K: int, choices: Sequence[int], dtype=np.int64) -> np.ndarray:
    """Posc rows (n+1, K) for a fixed choice sequence."""
    choices = np.asarray(choices, dtype=np.int64)
    out = np.empty((len(choices) + 1, K), dtype=dtype)
    row = np.zeros(K, dtype=dtype)
    out[0] = row
    for t, c in enumerate(choices):
        row[c::2] += 1
        row.sort()
        out[t + 1] = row
    return out


def sw_exhaustive(K: int, n: int) -> np.ndarray:
    """Posc histories for every Eve choice sequence of length n.

    Returns shape (2^n, n+1, K).  Row b corresponds to the choice sequence
    whose binary expansion (first round most significant) is b.
    """
    if 2**n > EXHAUSTIVE_LIMIT:
        raise TooLarge(f"2^{n} sequences exceeds the limit {EXHAUSTIVE_LIMIT}")
    hist = np.zeros((1, 1, K), dtype=np.int16 if n < 2**15 else np.int64)
    for _ in range(n):
        last = hist[:, -1, :]
        kids = []
        for c in (0, 1):
            child = last.copy()
            child[:, c::2] += 1
            child.sort(axis=1)
            kids.append(child)
        step = np.stack(kids, axis=1).reshape(-1, K)
        hist = np.concatenate([np.repeat(hist, 2, axis=0), step[:, None, :]], axis=1)
    return hist


def choice_sequence(index: int, n: int) -> list[int]:
    """Choice sequence of row ``index`` in :func:`sw_exhaustive` output."""
    return [(index >> (n - 1 - t)) & 1 for t in range(n)]
