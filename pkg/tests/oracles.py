"""Independent reference implementations used only by the tests.

Nothing here shares code with the package's determinant engine.
"""
from fractions import Fraction
from itertools import combinations, permutations


def leibniz_det(matrix):
    """Determinant by the permutation expansion, over Fractions."""
    size = len(matrix)
    total = Fraction(0)
    for perm in permutations(range(size)):
        inversions = sum(1 for i in range(size) for j in range(i + 1, size) if perm[i] > perm[j])
        term = Fraction(-1 if inversions % 2 else 1)
        for row, col in enumerate(perm):
            term *= Fraction(matrix[row][col])
        total += term
    return total


def orientation_oracle(points):
    det = leibniz_det([[Fraction(c) for c in p] + [Fraction(1)] for p in points])
    return (det > 0) - (det < 0)


def hyperplane_through(points):
    """Return (w, c) with w . p = c for every p, or None if not unique.

    Solves the homogeneous system [p | -1] (w, c) = 0 by Gauss-Jordan
    elimination; a unique hyperplane means a one-dimensional null space.
    """
    d = len(points[0])
    rows = [[Fraction(v) for v in p] + [Fraction(-1)] for p in points]
    pivots = []
    r = 0
    for col in range(d + 1):
        pivot = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][col]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    free = [c for c in range(d + 1) if c not in pivots]
    if len(free) != 1:
        return None
    f = free[0]
    sol = [Fraction(0)] * (d + 1)
    sol[f] = Fraction(1)
    for i, col in enumerate(pivots):
        sol[col] = -rows[i][f]
    w, c = sol[:d], sol[d]
    if all(v == 0 for v in w):
        return None
    return w, c


def rho_oracle(points, a, b):
    """Brute-force hyperplane-crossing count with the strict-separation rule."""
    d = len(a)
    count = 0
    for subset in combinations(range(len(points)), d):
        plane = hyperplane_through([points[i] for i in subset])
        if plane is None:
            continue
        w, c = plane
        sa = sum(wi * Fraction(ai) for wi, ai in zip(w, a)) - c
        sb = sum(wi * Fraction(bi) for wi, bi in zip(w, b)) - c
        if sa * sb < 0:
            count += 1
    return count


def interval_count(values, a, b):
    lo, hi = min(a, b), max(a, b)
    return sum(1 for v in values if lo < v < hi)


def sorted_neighbors(distances, k):
    """Full stable sort by (distance, index)."""
    return [i for _, i in sorted((dist, i) for i, dist in enumerate(distances))][:k]
