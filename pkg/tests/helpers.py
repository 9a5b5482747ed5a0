"""Synthetic rate tables for solver tests."""

import itertools

from irsplace.placement import RateTable


def random_table(rng, xi, M, s_max, integer=False):
    """Random table with random per-ASA feasibility; ``integer`` rates provoke ties."""
    entries = {}
    for u in range(xi):
        direct = float(rng.integers(0, 5)) if integer else float(rng.uniform(0, 10))
        entries[(u, ())] = direct
        feas = [m for m in range(M) if rng.random() < 0.7]
        for k in range(1, min(s_max, len(feas)) + 1):
            for mu in itertools.combinations(feas, k):
                # mostly gains, occasionally a loss so direct service has to win
                delta = float(rng.integers(-1, 6)) if integer else float(rng.uniform(-1, 8))
                entries[(u, mu)] = direct + delta
    return RateTable(xi, M, s_max, entries)
