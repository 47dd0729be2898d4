"""Bowles Bell functional: three CHSH blocks on an inner link (X2, X1)."""

from __future__ import annotations

import itertools

import numpy as np

from .network import LOWER_SETTINGS, Behavior

UPPER_BINARY_SETTINGS = tuple(range(1, 7))

#: (sign, lower setting x2, upper setting x1) for the twelve terms
BOWLES_TERMS = (
    (+1, 1, 1), (+1, 1, 2), (+1, 2, 1), (-1, 2, 2),
    (+1, 1, 3), (+1, 1, 4), (-1, 3, 3), (+1, 3, 4),
    (+1, 2, 5), (+1, 2, 6), (-1, 3, 5), (+1, 3, 6),
)
QUANTUM_MAXIMUM = 6 * np.sqrt(2)
LOCAL_BOUND = 6


class CorrelatorTable:
    """``E[x2, x1]`` for x2 in 1..3 and x1 in 1..6."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (len(LOWER_SETTINGS), len(UPPER_BINARY_SETTINGS)):
            raise ValueError(f"correlator table must be 3x6, got {values.shape}")
        if np.max(np.abs(values)) > 1 + 1e-9:
            raise ValueError("correlators must lie in [-1, 1]")
        self.values = values

    def __getitem__(self, key: tuple[int, int]) -> float:
        x2, x1 = key
        if x2 not in LOWER_SETTINGS or x1 not in UPPER_BINARY_SETTINGS:
            raise KeyError(f"setting pair {key} out of range")
        return float(self.values[x2 - 1, x1 - 1])

    def __repr__(self):
        return f"CorrelatorTable({self.values.tolist()})"


def correlators(b: Behavior, upper, lower, reference: dict | None = None) -> CorrelatorTable:
    """Two-site correlators of the link (``lower``, ``upper``); other sites are marginalized."""
    pair = b.marginal([lower, upper], reference=reference)
    table = np.zeros((3, 6))
    for i, x2 in enumerate(LOWER_SETTINGS):
        for j, x1 in enumerate(UPPER_BINARY_SETTINGS):
            si, sj = pair.setting_index(0, x2), pair.setting_index(1, x1)
            if pair.outcome_counts[0][si] != 2 or pair.outcome_counts[1][sj] != 2:
                raise ValueError(f"settings ({x2}, {x1}) are not binary")
            p = pair.table[si, sj, :2, :2]
            table[i, j] = p[0, 0] - p[0, 1] - p[1, 0] + p[1, 1]
    return CorrelatorTable(table)


def bowles_score(E: CorrelatorTable) -> float:
    return float(sum(sign * E[x2, x1] for sign, x2, x1 in BOWLES_TERMS))


def link_scores(b: Behavior) -> dict[str, float]:
    """Score of every party's inner link, keyed by party letter."""
    parties = sorted({name[0] for name in b.site_names})
    return {p: bowles_score(correlators(b, f"{p}1", f"{p}2")) for p in parties}


def deterministic_score(lower: tuple[int, ...], upper: tuple[int, ...]) -> int:
    """Score of the local strategy that outputs ``lower[x2-1]``, ``upper[x1-1]`` (values +-1)."""
    return sum(sign * lower[x2 - 1] * upper[x1 - 1] for sign, x2, x1 in BOWLES_TERMS)


def classical_bound_bruteforce() -> tuple[int, tuple[tuple[int, ...], tuple[int, ...]]]:
    """Maximum over all 2^3 * 2^6 deterministic strategies and one maximizer."""
    best, arg = None, None
    for lower in itertools.product((1, -1), repeat=3):
        for upper in itertools.product((1, -1), repeat=6):
            s = deterministic_score(lower, upper)
            if best is None or s > best:
                best, arg = s, (lower, upper)
    return best, arg
