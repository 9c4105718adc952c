"""Exact-sign geometric predicates over rational coordinates.

Every sign returned here is exact. Hot paths evaluate determinants in
double precision together with a certified forward error bound and only
re-evaluate the uncertain entries with integer arithmetic.
"""
from __future__ import annotations

import enum
import math
from fractions import Fraction
from functools import reduce
from numbers import Rational, Real
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "Sign",
    "CutResult",
    "PointSet",
    "to_rational",
    "as_point",
    "exact_det",
    "orientation_sign",
    "side_of_hyperplane",
    "segment_is_cut",
    "side_signs",
    "FILTER_MODES",
]

FILTER_MODES = ("filtered", "exact", "float")

_EPS = 2.0 ** -53
_CHUNK = 8192


class Sign(enum.IntEnum):
    NEGATIVE = -1
    ZERO = 0
    POSITIVE = 1

    def __neg__(self) -> "Sign":
        return Sign(-int(self))


class CutResult(NamedTuple):
    cut: bool
    degenerate: bool


def to_rational(value) -> Fraction:
    """Convert ``value`` to an exact :class:`~fractions.Fraction`.

    Floats are converted exactly (every finite double is a dyadic rational);
    strings are parsed as decimal or ``p/q`` literals without a float
    round-trip.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("booleans are not coordinates")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse {value!r} as a rational number") from exc
    if isinstance(value, (Real, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"coordinate must be finite, got {value!r}")
        return Fraction(value)
    raise TypeError(f"cannot convert {type(value).__name__} to a rational number")


def as_point(coords) -> tuple[Fraction, ...]:
    point = tuple(to_rational(c) for c in np.ravel(np.asarray(coords, dtype=object)))
    if not point:
        raise ValueError("a point needs at least one coordinate")
    return point


def _int_det(rows: list[list[int]]) -> int:
    # Bareiss fraction-free elimination.
    m = [list(r) for r in rows]
    size = len(m)
    sign, prev = 1, 1
    for k in range(size - 1):
        if m[k][k] == 0:
            for i in range(k + 1, size):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = m[k][k]
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                m[i][j] = (m[i][j] * pivot - m[i][k] * m[k][j]) // prev
        prev = pivot
    return sign * m[-1][-1] if size else 1


def exact_det(matrix) -> Fraction:
    """Exact determinant of a square matrix of rationals."""
    rows = [[to_rational(v) for v in row] for row in matrix]
    size = len(rows)
    if any(len(r) != size for r in rows):
        raise ValueError("matrix must be square")
    if size == 0:
        return Fraction(1)
    denom = reduce(math.lcm, (v.denominator for r in rows for v in r), 1)
    ints = [[v.numerator * (denom // v.denominator) for v in r] for r in rows]
    return Fraction(_int_det(ints), denom ** size)


def _gamma(k: int) -> float:
    return k * _EPS / (1.0 - k * _EPS)


class PointSet:
    """Points prepared for batched sign evaluation.

    Holds float copies (for the filter), integer copies scaled by a common
    denominator (for the exact fallback), and canonical ids so that
    coincident points are recognised without arithmetic.
    """

    def __init__(self, points: Sequence[Sequence]):
        pts = [as_point(p) for p in points]
        if not pts:
            raise ValueError("empty point set")
        dim = len(pts[0])
        if any(len(p) != dim for p in pts):
            raise ValueError("all points must have the same dimension")
        self.points = pts
        self.dim = dim
        self.size = len(pts)
        self.scale = reduce(math.lcm, (c.denominator for p in pts for c in p), 1)
        self.ints = [tuple(c.numerator * (self.scale // c.denominator) for c in p) for p in pts]
        ids: dict[tuple[int, ...], int] = {}
        self.canon = np.array([ids.setdefault(p, len(ids)) for p in self.ints], dtype=np.int64)
        self.floats = self._float_copy()
        self._hom_int = [p + (1,) for p in self.ints]

    def _float_copy(self) -> np.ndarray | None:
        try:
            arr = np.array([[float(c) for c in p] for p in self.points], dtype=np.float64)
        except OverflowError:
            return None
        mags = np.abs(arr[arr != 0])
        # Products of dim+1 values must stay normal for the bound to hold.
        limit = 2.0 ** (960 // (self.dim + 1))
        if mags.size and (mags.max() > limit or mags.min() < 1.0 / limit):
            return None
        return arr

    def exact_cofactors(self, subset: Sequence[int]) -> tuple[int, ...]:
        """Integer coefficients ``c`` with det([subset rows; p]) = c . (p, 1)."""
        rows = [self._hom_int[i] for i in subset]
        d = self.dim
        out = []
        for j in range(d + 1):
            minor = [[r[c] for c in range(d + 1) if c != j] for r in rows]
            out.append((-1) ** (d + j) * _int_det(minor))
        return tuple(out)

    def exact_side(self, cof: Sequence[int], target: int) -> int:
        value = sum(c * v for c, v in zip(cof, self._hom_int[target]))
        return (value > 0) - (value < 0)


def _laplace(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Determinant and permanent-of-abs for a stack of square matrices."""
    size = m.shape[-1]
    if size == 1:
        return m[:, 0, 0], np.abs(m[:, 0, 0])
    det = None
    perm = None
    for k in range(size):
        sub = np.delete(m[:, 1:, :], k, axis=2)
        sd, sp = _laplace(sub)
        term = m[:, 0, k] * sd
        aterm = np.abs(m[:, 0, k]) * sp
        if k % 2:
            term = -term
        det = term if det is None else det + term
        perm = aterm if perm is None else perm + aterm
    return det, perm


def _float_cofactors(hom: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = hom.shape[1]
    cof = np.empty((hom.shape[0], d + 1))
    per = np.empty_like(cof)
    for j in range(d + 1):
        det, perm = _laplace(np.delete(hom, j, axis=2))
        cof[:, j] = det if (d + j) % 2 == 0 else -det
        per[:, j] = perm
    return cof, per


def side_signs(
    ps: PointSet,
    subsets,
    targets=None,
    *,
    mode: str = "filtered",
) -> tuple[np.ndarray, np.ndarray]:
    """Signs of every target against the hyperplane of every subset.

    ``subsets`` is a ``(B, d)`` integer array of indices into ``ps``;
    ``targets`` defaults to all points. Returns ``(signs, degenerate)``:
    an int8 ``(B, T)`` matrix of exact orientation signs
    ``sign det[(q_1, 1); ...; (q_d, 1); (p, 1)]`` and a bool ``(B,)`` flag
    marking affinely dependent subsets (whose rows are all zero).
    """
    if mode not in FILTER_MODES:
        raise ValueError(f"mode must be one of {FILTER_MODES}, got {mode!r}")
    d = ps.dim
    subsets = np.asarray(subsets, dtype=np.int64).reshape(-1, d)
    if targets is None:
        targets = np.arange(ps.size)
    targets = np.asarray(targets, dtype=np.int64).ravel()
    n_sub, n_tgt = subsets.shape[0], targets.shape[0]
    signs = np.zeros((n_sub, n_tgt), dtype=np.int8)
    degenerate = np.zeros(n_sub, dtype=bool)
    for start in range(0, n_sub, _CHUNK):
        stop = min(start + _CHUNK, n_sub)
        s, g = _side_signs_chunk(ps, subsets[start:stop], targets, mode)
        signs[start:stop] = s
        degenerate[start:stop] = g
    return signs, degenerate


def _side_signs_chunk(ps: PointSet, subsets: np.ndarray, targets: np.ndarray, mode: str):
    d = ps.dim
    n_sub, n_tgt = subsets.shape[0], targets.shape[0]
    on_plane = np.zeros((n_sub, n_tgt), dtype=bool)
    tcanon = ps.canon[targets]
    for t in range(d):
        on_plane |= ps.canon[subsets[:, t]][:, None] == tcanon[None, :]

    use_float = mode != "exact" and ps.floats is not None
    if use_float:
        hom = np.ones((n_sub, d, d + 1))
        hom[:, :, :d] = ps.floats[subsets]
        cof, per = _float_cofactors(hom)
        thom = np.ones((n_tgt, d + 1))
        thom[:, :d] = ps.floats[targets]
        values = cof @ thom.T
        if mode == "float":
            signs = np.sign(values).astype(np.int8)
            signs[on_plane] = 0
            return signs, ~np.any(cof != 0, axis=1)
        depth_cof = d * (d + 1) // 2 - 1 + d
        k_cof = depth_cof + 2
        k_val = depth_cof + 1 + d + 2
        bound = _gamma(k_val) * (per @ np.abs(thom).T)
        signs = np.sign(values).astype(np.int8)
        uncertain = ~(np.abs(values) > bound)
        maybe_degenerate = np.all(~(np.abs(cof) > _gamma(k_cof) * per), axis=1)
    else:
        signs = np.zeros((n_sub, n_tgt), dtype=np.int8)
        uncertain = np.ones((n_sub, n_tgt), dtype=bool)
        maybe_degenerate = np.ones(n_sub, dtype=bool)

    uncertain &= ~on_plane
    signs[on_plane] = 0
    degenerate = np.zeros(n_sub, dtype=bool)
    exact_cof: dict[int, tuple[int, ...]] = {}
    for b in np.flatnonzero(maybe_degenerate):
        cof_b = ps.exact_cofactors(subsets[b])
        if not any(cof_b):
            degenerate[b] = True
            signs[b] = 0
            uncertain[b] = False
        else:
            exact_cof[b] = cof_b
    rows, cols = np.nonzero(uncertain)
    for b, t in zip(rows.tolist(), cols.tolist()):
        cof_b = exact_cof.get(b)
        if cof_b is None:
            cof_b = exact_cof[b] = ps.exact_cofactors(subsets[b])
        signs[b, t] = ps.exact_side(cof_b, int(targets[t]))
    return signs, degenerate


def _check_dims(points, count: int | None = None) -> list[tuple[Fraction, ...]]:
    pts = [as_point(p) for p in points]
    if not pts:
        raise ValueError("no points given")
    dim = len(pts[0])
    if any(len(p) != dim for p in pts):
        raise ValueError("dimension mismatch between points")
    if count is not None and len(pts) != count(dim):
        raise ValueError(f"expected {count(dim)} points in dimension {dim}, got {len(pts)}")
    return pts


def orientation_sign(points, *, mode: str = "filtered") -> Sign:
    """Sign of det[(p_i, 1)] for d+1 points in R^d."""
    pts = _check_dims(points, count=lambda dim: dim + 1)
    d = len(pts[0])
    signs, _ = side_signs(PointSet(pts), [list(range(d))], [d], mode=mode)
    return Sign(int(signs[0, 0]))


def side_of_hyperplane(subset_points, p, *, mode: str = "filtered") -> Sign:
    """Side of ``p`` relative to the hyperplane through ``subset_points``."""
    subset = [as_point(q) for q in subset_points]
    point = as_point(p)
    if len(subset) != len(point):
        raise ValueError(f"need {len(point)} points to span a hyperplane in dimension {len(point)}")
    return orientation_sign(subset + [point], mode=mode)


def segment_is_cut(subset_points, a, b, *, mode: str = "filtered") -> CutResult:
    """Whether the hyperplane through ``subset_points`` strictly separates a and b.

    Degenerate subsets and endpoints lying on the hyperplane never count as
    a cut; both set the ``degenerate`` flag.
    """
    subset = [as_point(q) for q in subset_points]
    pa, pb = as_point(a), as_point(b)
    d = len(pa)
    if len(pb) != d or len(subset) != d or any(len(q) != d for q in subset):
        raise ValueError("dimension mismatch")
    ps = PointSet(subset + [pa, pb])
    signs, degenerate = side_signs(ps, [list(range(d))], [d, d + 1], mode=mode)
    sa, sb = int(signs[0, 0]), int(signs[0, 1])
    flag = bool(degenerate[0]) or sa == 0 or sb == 0
    return CutResult(cut=sa * sb < 0, degenerate=flag)
