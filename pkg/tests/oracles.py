"""Independent brute-force references used to freeze expected values.

Nothing here imports the library: each oracle recomputes its answer from
first principles (integer lattice points, raw Python sets, factorials).
"""

import itertools
from fractions import Fraction
from math import factorial, prod


def multiplicity_points(m_blocks, n_blocks):
    """All integer matrices c >= 0 with sum_j c[i][j] * n_j <= m_i, as flat row-major tuples."""
    per_row = []
    for cap in m_blocks:
        rows = [
            row
            for row in itertools.product(*(range(cap // n + 1) for n in n_blocks))
            if sum(c * n for c, n in zip(row, n_blocks)) <= cap
        ]
        per_row.append(rows)
    return [tuple(c for row in rows for c in row) for rows in itertools.product(*per_row)]


def lattice_add(x, y, m_blocks, n_blocks):
    """Entrywise sum when each block's rank stays within capacity, else None."""
    s = tuple(a + b for a, b in zip(x, y))
    k = len(n_blocks)
    for i, cap in enumerate(m_blocks):
        if sum(c * n for c, n in zip(s[i * k:(i + 1) * k], n_blocks)) > cap:
            return None
    return s


def hom_count(rank, n_blocks):
    """Number of ordered-copy decompositions of ``rank`` labels in one block.

    Choosing c_j copies of size m_j: rank! ways to lay the labels out in
    order, divided by the c_j! orderings of identical-size copies.
    """
    total = 0
    for counts in itertools.product(*(range(rank // m + 1) for m in n_blocks)):
        if sum(c * m for c, m in zip(counts, n_blocks)) == rank:
            total += factorial(rank) // prod(factorial(c) for c in counts)
    return total


def poset_bounds(elements, leq, subset):
    lower = [z for z in elements if all(leq(z, s) for s in subset)]
    upper = [z for z in elements if all(leq(s, z) for s in subset)]
    glb = [z for z in lower if all(leq(w, z) for w in lower)]
    lub = [z for z in upper if all(leq(z, w) for w in upper)]
    return lower, upper, glb, lub


def entrywise_leq(x, y):
    return all(a <= b for a, b in zip(x, y))


def dyadic_window(k, cap=Fraction(1)):
    step = Fraction(1, 2**k)
    return [i * step for i in range(int(cap / step) + 1)]
