"""Independent reference computations used to freeze or cross-check expected values.

Nothing here imports the code under test.
"""

from functools import lru_cache

MARKERS = {"", "?", "na", "nan", "null"}


def levenshtein_recursive(a, b):
    """Textbook recursion over prefixes (memoised); no rolling rows, no swapping."""

    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(
            d(i - 1, j) + 1,
            d(i, j - 1) + 1,
            d(i - 1, j - 1) + (0 if a[i - 1] == b[j - 1] else 1),
        )

    return d(len(a), len(b))


def score_by_counting(rows):
    """(nan_fraction, regularity, modal width, n_rows) by explicit cell enumeration."""
    n = len(rows)
    wmax = 0
    for r in rows:
        if len(r) > wmax:
            wmax = len(r)
    missing = 0
    for r in rows:
        for k in range(wmax):
            if k >= len(r):
                missing += 1
            elif r[k].strip().lower() in MARKERS:
                missing += 1
    best_w, best_count = None, -1
    for w in range(wmax, -1, -1):  # descending, so equal counts keep the wider width
        count = sum(1 for r in rows if len(r) == w)
        if count > best_count:
            best_w, best_count = w, count
    return missing / (n * wmax), best_count / n, best_w, n
