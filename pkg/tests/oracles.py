"""Slow, independent reference implementations used only by the tests."""

from functools import lru_cache


def naive_has_tandem(v, min_unit_len=1):
    """Triple loop: any i, unit length L with v[i:i+L] == v[i+L:i+2L]."""
    n = len(v)
    for i in range(n):
        for L in range(min_unit_len, n):
            if i + 2 * L > n:
                break
            if all(v[i + k] == v[i + L + k] for k in range(L)):
                return True
    return False


def naive_tandem_finding(v, min_unit_len=1, min_reps=2):
    """Canonical (start, unit, reps) by exhaustive enumeration, or None."""
    n = len(v)
    best = None
    for start in range(n):
        for L in range(min_unit_len, n + 1):
            unit = tuple(v[start:start + L])
            if len(unit) < L:
                break
            reps = 0
            while tuple(v[start + reps * L:start + (reps + 1) * L]) == unit:
                reps += 1
            if reps >= min_reps:
                key = (start, L, -reps)
                if best is None or key < best[0]:
                    best = (key, (start, unit, reps))
    return None if best is None else best[1]


def max_disjoint_occurrences(v, start, L):
    """Most pairwise-disjoint copies of v[start:start+L] in v[start:], the first at start.

    Dynamic programme over positions, independent of any greedy argument.
    """
    unit = tuple(v[start:start + L])
    n = len(v)

    @lru_cache(maxsize=None)
    def best(pos):
        if pos + L > n:
            return 0
        skip = best(pos + 1)
        take = 1 + best(pos + L) if tuple(v[pos:pos + L]) == unit else 0
        return max(skip, take)

    return 1 + best(start + L)


def naive_recurrent_finding(v, min_unit_len=1, min_reps=2):
    n = len(v)
    for start in range(n):
        for L in range(min_unit_len, n - start + 1):
            reps = max_disjoint_occurrences(v, start, L)
            if reps >= min_reps:
                return (start, tuple(v[start:start + L]), reps)
    return None
