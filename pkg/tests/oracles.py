"""Slow, independent reference implementations used as test oracles.

Everything works on preference orders (lists of candidates, best first) with
exact integer/fraction arithmetic and plain loops, sharing no code with the
package.
"""

from fractions import Fraction
from itertools import combinations


def orders_from_utilities(u):
    """Best-first candidate lists; utility ties go to the lower index."""
    out = []
    for row in u:
        out.append(sorted(range(len(row)), key=lambda j: (-row[j], j)))
    return out


def orders_from_ranks(ranks):
    return [sorted(range(len(row)), key=lambda j: row[j]) for row in ranks]


def _first_max(scores):
    best = max(scores)
    return scores.index(best)


def plurality(orders, m):
    scores = [0] * m
    for o in orders:
        scores[o[0]] += 1
    return _first_max(scores)


def borda(orders, m):
    scores = [Fraction(0)] * m
    for o in orders:
        for pos, c in enumerate(o):
            scores[c] += 1 - Fraction(pos + 1, m)
    return _first_max(scores)


def prefers(order, a, b):
    return order.index(a) < order.index(b)


def head_to_head(orders, a, b):
    return sum(1 for o in orders if prefers(o, a, b))


def copeland(orders, m):
    scores = []
    for a in range(m):
        s = Fraction(0)
        for b in range(m):
            if a == b:
                continue
            ab, ba = head_to_head(orders, a, b), head_to_head(orders, b, a)
            s += 1 if ab > ba else (Fraction(1, 2) if ab == ba else 0)
        scores.append(s)
    return _first_max(scores)


def maximin(orders, m):
    if m == 1:
        return 0
    scores = [min(head_to_head(orders, a, b) for b in range(m) if b != a) for a in range(m)]
    return _first_max(scores)


def stv(orders, m):
    remaining = list(range(m))
    n = len(orders)
    while True:
        tally = {c: 0 for c in remaining}
        for o in orders:
            for c in o:
                if c in tally:
                    tally[c] += 1
                    break
        best = max(tally.values())
        leader = min(c for c in remaining if tally[c] == best)
        if 2 * best > n or len(remaining) == 1:
            return leader
        worst = min(tally.values())
        remaining.remove(min(c for c in remaining if tally[c] == worst))


ORACLES = {"plurality": plurality, "borda": borda, "copeland": copeland, "maximin": maximin, "stv": stv}


def beats(orders, a, b):
    return head_to_head(orders, a, b) > head_to_head(orders, b, a)


def condorcet(orders, m):
    for a in range(m):
        if all(beats(orders, a, b) for b in range(m) if b != a):
            return a
    return None


def smith(orders, m):
    """Smallest non-empty subset whose members strictly beat every outsider."""
    for size in range(1, m + 1):
        for subset in combinations(range(m), size):
            outside = [b for b in range(m) if b not in subset]
            if all(beats(orders, a, b) for a in subset for b in outside):
                return frozenset(subset)
    raise AssertionError("unreachable: the full set always dominates")


def cube_mean_distance():
    """Closed-form mean distance between two uniform points of the unit cube."""
    import math

    r2, r3 = math.sqrt(2.0), math.sqrt(3.0)
    return (4 + 17 * r2 - 6 * r3 - 7 * math.pi) / 105 + math.log(1 + r2) / 5 + 2 * math.log(2 + r3) / 5


# frozen value of the expression above
CUBE_MEAN_DISTANCE = 0.6617071822671763


def welfare_of(u, kind, j):
    col = [row[j] for row in u]
    if kind == "utilitarian":
        return sum(col)
    if kind == "rawlsian":
        return min(col)
    prod = 1.0
    for v in col:
        prod *= v
    return prod
