"""Hyperplane-crossing empirical distance.

The distance between two points counts the hyperplanes spanned by d-subsets
of the sample that strictly separate them. :func:`rho_exact` and
:func:`rho_profile` enumerate every subset; the sampled variants draw subsets
uniformly with replacement and rescale by the total subset count.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .geometry import PointSet, as_point, side_signs

__all__ = [
    "Dataset",
    "DistanceCount",
    "DistanceProfile",
    "SampledEstimate",
    "HyperplaneTable",
    "all_subsets",
    "unrank_lex",
    "sample_subsets",
    "rho_exact",
    "rho_profile",
    "rho_sampled",
    "rho_profile_sampled",
]

_MAX_SAMPLED_RANK = 2 ** 62


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable sample of rational points with real responses."""

    points: tuple[tuple[Fraction, ...], ...]
    responses: np.ndarray

    def __post_init__(self):
        responses = np.array(self.responses, dtype=np.float64).ravel()
        responses.setflags(write=False)
        object.__setattr__(self, "responses", responses)
        if not self.points:
            raise ValueError("dataset is empty")
        dim = len(self.points[0])
        if dim < 1 or any(len(p) != dim for p in self.points):
            raise ValueError("all points must share one dimension d >= 1")
        if len(self.responses) != len(self.points):
            raise ValueError(
                f"got {len(self.points)} points but {len(self.responses)} responses"
            )
        if len(self.points) < dim:
            raise ValueError(f"need n >= d, got n={len(self.points)}, d={dim}")
        if not np.all(np.isfinite(self.responses)):
            raise ValueError("responses must be finite")

    @classmethod
    def from_arrays(cls, X, y=None) -> "Dataset":
        X = np.asarray(X, dtype=object)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
        points = tuple(as_point(row) for row in X)
        if y is None:
            y = np.zeros(len(points))
        return cls(points, np.array(y, dtype=np.float64).ravel())

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return len(self.points[0])

    @cached_property
    def n_subsets(self) -> int:
        return math.comb(self.n, self.dim)

    def with_responses(self, y) -> "Dataset":
        return Dataset(self.points, np.array(y, dtype=np.float64).ravel())

    def check_point(self, x) -> tuple[Fraction, ...]:
        p = as_point(x)
        if len(p) != self.dim:
            raise ValueError(f"point has dimension {len(p)}, dataset has {self.dim}")
        return p


class DistanceCount:
    """One empirical distance together with its degenerate-subset diagnostic."""

    __slots__ = ("value", "degenerate_subsets")

    def __init__(self, value, degenerate_subsets: int = 0):
        self.value = value
        self.degenerate_subsets = int(degenerate_subsets)

    def __eq__(self, other):
        if not isinstance(other, DistanceCount):
            return NotImplemented
        return (self.value, self.degenerate_subsets) == (other.value, other.degenerate_subsets)

    def __repr__(self):
        return f"DistanceCount(value={self.value}, degenerate_subsets={self.degenerate_subsets})"


@dataclass(frozen=True)
class SampledEstimate:
    estimate: Fraction
    m: int
    seed: int | None
    cut_count: int
    total_subsets: int
    degenerate_subsets: int = 0


@dataclass(frozen=True, eq=False)
class DistanceProfile:
    """Distances from one query to every sample point.

    ``counts`` are raw comparable values (cut counts for the hyperplane
    metrics); the reported distance is ``scale * count``. For the sampled
    kind ``scale = C(n, d) / m``, which leaves the ordering unchanged.
    """

    counts: np.ndarray
    degenerate: np.ndarray
    kind: str = "exact"
    m: int | None = None
    seed: int | None = None
    total_subsets: int = 0
    dependent_subsets: int = 0
    sign_evaluations: int = 0
    scale: Fraction = Fraction(1)

    def __len__(self):
        return len(self.counts)

    @property
    def values(self) -> list:
        return [self._value(c) for c in self.counts]

    def _value(self, c):
        c = int(c) if isinstance(c, (int, np.integer)) else c
        return c if self.scale == 1 else self.scale * c

    def __getitem__(self, i) -> DistanceCount:
        return DistanceCount(self._value(self.counts[i]), int(self.degenerate[i]))


def all_subsets(n: int, d: int) -> np.ndarray:
    """Every strictly increasing d-tuple of ``range(n)``, lexicographically."""
    total = math.comb(n, d)
    flat = itertools.chain.from_iterable(itertools.combinations(range(n), d))
    return np.fromiter(flat, dtype=np.int64, count=total * d).reshape(total, d)


def unrank_lex(ranks, n: int, d: int) -> np.ndarray:
    """Map lexicographic ranks in ``[0, C(n, d))`` to index tuples.

    A lex rank ``r`` of S corresponds to colex rank ``C - 1 - r`` of the
    mirrored subset ``{n - 1 - s}``, which unranks greedily.
    """
    total = math.comb(n, d)
    ranks = np.asarray(ranks, dtype=np.int64).ravel()
    if ranks.size and (ranks.min() < 0 or ranks.max() >= total):
        raise ValueError("rank out of range")
    rest = (total - 1) - ranks
    out = np.empty((ranks.size, d), dtype=np.int64)
    for k in range(d, 0, -1):
        table = np.array([math.comb(c, k) for c in range(n)], dtype=np.int64)
        c = np.searchsorted(table, rest, side="right") - 1
        out[:, d - k] = (n - 1) - c
        rest = rest - table[c]
    return out


def sample_subsets(n: int, d: int, m: int, seed, *, replace: bool = True) -> np.ndarray:
    """Draw ``m`` d-subsets uniformly, deterministically from ``seed``."""
    if int(m) != m or m < 1:
        raise ValueError(f"sample size m must be a positive integer, got {m!r}")
    total = math.comb(n, d)
    if total >= _MAX_SAMPLED_RANK:
        raise ValueError(f"C({n}, {d}) is too large to sample by rank")
    rng = np.random.default_rng(seed)
    if replace:
        ranks = rng.integers(0, total, size=int(m))
    else:
        if m > total:
            raise ValueError(f"cannot draw {m} distinct subsets out of {total}")
        ranks = rng.choice(total, size=int(m), replace=False)
    return unrank_lex(ranks, n, d)


def _check_n(data: Dataset):
    if data.n < data.dim:
        raise ValueError(f"need n >= d, got n={data.n}, d={data.dim}")


def _pair_counts(data: Dataset, a, b, subsets: np.ndarray, mode: str):
    pa, pb = data.check_point(a), data.check_point(b)
    _check_n(data)
    ps = PointSet(list(data.points) + [pa, pb])
    signs, dependent = side_signs(ps, subsets, [data.n, data.n + 1], mode=mode)
    sa = signs[:, 0].astype(np.int64)
    sb = signs[:, 1].astype(np.int64)
    cut = int(np.count_nonzero(sa * sb < 0))
    flagged = int(np.count_nonzero(dependent | (sa == 0) | (sb == 0)))
    return cut, flagged


def rho_exact(data: Dataset, a, b, *, mode: str = "filtered") -> DistanceCount:
    """Number of sample hyperplanes strictly separating ``a`` and ``b``."""
    _check_n(data)
    cut, flagged = _pair_counts(data, a, b, all_subsets(data.n, data.dim), mode)
    return DistanceCount(cut, flagged)


def rho_sampled(
    data: Dataset, a, b, m: int, seed=None, *, replace: bool = True, mode: str = "filtered"
) -> SampledEstimate:
    """Unbiased estimate of :func:`rho_exact` from ``m`` random subsets."""
    _check_n(data)
    subsets = sample_subsets(data.n, data.dim, m, seed, replace=replace)
    cut, flagged = _pair_counts(data, a, b, subsets, mode)
    total = data.n_subsets
    return SampledEstimate(Fraction(total * cut, int(m)), int(m), seed, cut, total, flagged)


class HyperplaneTable:
    """Signs of every sample point against a fixed list of sample hyperplanes.

    The table does not depend on the query, so it is built once and reused:
    a query then costs one sign per hyperplane plus two matrix products.
    """

    def __init__(
        self,
        data: Dataset,
        subsets: np.ndarray,
        *,
        kind: str = "exact",
        m: int | None = None,
        seed=None,
        mode: str = "filtered",
        n_jobs: int | None = None,
    ):
        _check_n(data)
        self.data = data
        self.subsets = np.asarray(subsets, dtype=np.int64).reshape(-1, data.dim)
        self.kind = kind
        self.m = m
        self.seed = seed
        self.mode = mode
        self._points = PointSet(data.points)
        self.signs, self.dependent = _parallel_signs(
            self._points, self.subsets, None, mode, n_jobs
        )

    @classmethod
    def exact(cls, data: Dataset, **kwargs) -> "HyperplaneTable":
        return cls(data, all_subsets(data.n, data.dim), kind="exact", **kwargs)

    @classmethod
    def sampled(cls, data: Dataset, m: int, seed=None, *, replace: bool = True, **kwargs):
        subsets = sample_subsets(data.n, data.dim, m, seed, replace=replace)
        return cls(data, subsets, kind="sampled", m=int(m), seed=seed, **kwargs)

    @property
    def n_hyperplanes(self) -> int:
        return self.subsets.shape[0]

    def query_signs(self, queries: Sequence) -> np.ndarray:
        """Exact signs of each query against each hyperplane, shape (B, Q)."""
        qs = [self.data.check_point(q) for q in queries]
        n = self.data.n
        ps = PointSet(list(self.data.points) + qs)
        signs, _ = side_signs(ps, self.subsets, np.arange(n, n + len(qs)), mode=self.mode)
        return signs

    def profiles(self, queries: Sequence) -> list[DistanceProfile]:
        queries = list(queries)
        if not queries:
            return []
        qsigns = self.query_signs(queries)
        n_sub = self.n_hyperplanes
        cross = np.zeros((len(queries), self.data.n), dtype=np.int64)
        touch = np.zeros_like(cross)
        step = 1 << 14
        for start in range(0, n_sub, step):
            s = self.signs[start:start + step].astype(np.float32)
            q = qsigns[start:start + step].T.astype(np.float32)
            aq, as_ = np.abs(q), np.abs(s)
            both = np.rint(aq @ as_).astype(np.int64)
            prod = np.rint(q @ s).astype(np.int64)
            cross += (both - prod) // 2
            touch += both
        total = math.comb(self.data.n, self.data.dim)
        dependent = int(np.count_nonzero(self.dependent))
        evals = n_sub * (self.data.n + 1)
        return [
            DistanceProfile(
                counts=cross[i],
                degenerate=n_sub - touch[i],
                kind=self.kind,
                m=self.m,
                seed=self.seed,
                total_subsets=total,
                dependent_subsets=dependent,
                sign_evaluations=evals,
                scale=Fraction(total, self.m) if self.kind == "sampled" else Fraction(1),
            )
            for i in range(len(queries))
        ]

    def profile(self, x) -> DistanceProfile:
        return self.profiles([x])[0]


def _parallel_signs(ps: PointSet, subsets: np.ndarray, targets, mode: str, n_jobs):
    if not n_jobs or n_jobs == 1 or subsets.shape[0] < 2:
        return side_signs(ps, subsets, targets, mode=mode)
    parts = np.array_split(subsets, min(int(n_jobs), subsets.shape[0]))
    with ThreadPoolExecutor(max_workers=int(n_jobs)) as pool:
        results = list(pool.map(lambda s: side_signs(ps, s, targets, mode=mode), parts))
    return (
        np.concatenate([r[0] for r in results]),
        np.concatenate([r[1] for r in results]),
    )


def rho_profile(
    data: Dataset, x, *, mode: str = "filtered", n_jobs: int | None = None
) -> DistanceProfile:
    """Exact distances from ``x`` to every sample point.

    Each hyperplane is evaluated once against ``x`` and once against every
    sample point, i.e. ``C(n, d) * (n + 1)`` signs in total.
    """
    data.check_point(x)
    return HyperplaneTable.exact(data, mode=mode, n_jobs=n_jobs).profile(x)


def rho_profile_sampled(
    data: Dataset,
    x,
    m: int,
    seed=None,
    *,
    replace: bool = True,
    mode: str = "filtered",
    n_jobs: int | None = None,
) -> DistanceProfile:
    """Sampled distances from ``x``; every entry uses one shared subset sample."""
    data.check_point(x)
    table = HyperplaneTable.sampled(data, m, seed, replace=replace, mode=mode, n_jobs=n_jobs)
    return table.profile(x)
