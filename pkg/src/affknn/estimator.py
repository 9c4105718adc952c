"""k-nearest-neighbor regression on pluggable distances.

``exact`` and ``sampled`` use the hyperplane-crossing distance and are
affine invariant; ``euclidean`` and ``rank`` are baselines. Ties are
always broken by ascending data index.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_k, check_positive_int, check_rational_array, check_targets
from .metric import Dataset, DistanceProfile, HyperplaneTable

__all__ = [
    "METRICS",
    "EstimatorConfig",
    "Prediction",
    "select_neighbors",
    "euclidean_profile",
    "rank_profile",
    "Predictor",
    "predict",
    "predict_batch",
    "AffineInvariantKNNRegressor",
]

METRICS = ("exact", "sampled", "euclidean", "rank")


@dataclass(frozen=True)
class EstimatorConfig:
    k: int
    metric: str = "exact"
    m: int | None = None
    seed: int | None = None
    tie_break: str = "index"

    def __post_init__(self):
        check_positive_int(self.k, "k")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.metric == "sampled":
            check_positive_int(self.m, "m")
        if self.tie_break != "index":
            raise ValueError("only the 'index' tie-break policy is supported")

    @property
    def tag(self) -> str:
        if self.metric == "sampled":
            return f"sampled(m={self.m},seed={self.seed})"
        return self.metric


@dataclass(frozen=True)
class Prediction:
    value: float
    neighbor_indices: tuple[int, ...]
    profile: DistanceProfile


def select_neighbors(profile, k: int) -> np.ndarray:
    """Indices of the k smallest distances, ties broken by index."""
    counts = profile.counts if isinstance(profile, DistanceProfile) else profile
    counts = np.asarray(counts)
    k = check_k(k, len(counts))
    if counts.dtype.kind in "iuf":
        order = np.argsort(counts, kind="stable")
    else:
        order = np.array(sorted(range(len(counts)), key=lambda i: (counts[i], i)))
    return order[:k].astype(np.int64)


def euclidean_profile(data: Dataset, x) -> DistanceProfile:
    """Exact squared Euclidean distances."""
    x = data.check_point(x)
    sq = np.empty(data.n, dtype=object)
    for i, p in enumerate(data.points):
        sq[i] = sum((a - b) * (a - b) for a, b in zip(p, x))
    return DistanceProfile(sq, np.zeros(data.n, dtype=np.int64), kind="euclidean")


class _RankColumns:
    """Sorted coordinate columns for joint ranking against a query."""

    def __init__(self, data: Dataset):
        self.columns = [[p[j] for p in data.points] for j in range(data.dim)]
        self.sorted = [sorted(col) for col in self.columns]
        # Doubled average rank of each data value among the data alone.
        self.base = []
        for col, srt in zip(self.columns, self.sorted):
            lo = np.array([bisect.bisect_left(srt, v) for v in col], dtype=np.int64)
            hi = np.array([bisect.bisect_right(srt, v) for v in col], dtype=np.int64)
            self.base.append(lo + hi + 1)

    def distances(self, x) -> np.ndarray:
        total = np.zeros(len(self.columns[0]), dtype=np.int64)
        for col, srt, base, xj in zip(self.columns, self.sorted, self.base, x):
            lo, hi = bisect.bisect_left(srt, xj), bisect.bisect_right(srt, xj)
            x_rank = 2 * lo + (hi - lo) + 2
            shift = np.array([2 if xj < v else (1 if xj == v else 0) for v in col], dtype=np.int64)
            total += np.abs(base + shift - x_rank)
        return total


def rank_profile(data: Dataset, x) -> DistanceProfile:
    """L1 distance between coordinatewise rank vectors.

    The query is ranked jointly with the sample in each coordinate; tied
    values share their average rank. Ranks are kept doubled so they stay
    integral, hence ``scale = 1/2``.
    """
    x = data.check_point(x)
    counts = _RankColumns(data).distances(x)
    return DistanceProfile(
        counts, np.zeros(data.n, dtype=np.int64), kind="rank", scale=Fraction(1, 2)
    )


class Predictor:
    """Precomputed state for repeated predictions on one dataset."""

    def __init__(self, data: Dataset, config: EstimatorConfig, *, mode: str = "filtered", n_jobs=None):
        check_k(config.k, data.n)
        self.data = data
        self.config = config
        self.table = None
        self._ranks = None
        if config.metric == "exact":
            self.table = HyperplaneTable.exact(data, mode=mode, n_jobs=n_jobs)
        elif config.metric == "sampled":
            self.table = HyperplaneTable.sampled(data, config.m, config.seed, mode=mode, n_jobs=n_jobs)
        elif config.metric == "rank":
            self._ranks = _RankColumns(data)

    def profiles(self, queries: Sequence) -> list[DistanceProfile]:
        queries = [self.data.check_point(q) for q in queries]
        if self.table is not None:
            out = []
            for start in range(0, len(queries), 64):
                out.extend(self.table.profiles(queries[start:start + 64]))
            return out
        if self._ranks is not None:
            zeros = np.zeros(self.data.n, dtype=np.int64)
            return [
                DistanceProfile(self._ranks.distances(q), zeros, kind="rank", scale=Fraction(1, 2))
                for q in queries
            ]
        return [euclidean_profile(self.data, q) for q in queries]

    def predict(self, queries: Sequence) -> list[Prediction]:
        out = []
        y = self.data.responses
        for profile in self.profiles(queries):
            idx = select_neighbors(profile, self.config.k)
            value = math.fsum(y[idx]) / len(idx)
            out.append(Prediction(value, tuple(int(i) for i in idx), profile))
        return out


def predict(data: Dataset, x, config: EstimatorConfig, **kwargs) -> Prediction:
    return Predictor(data, config, **kwargs).predict([x])[0]


def predict_batch(data: Dataset, queries: Sequence, config: EstimatorConfig, **kwargs) -> list[Prediction]:
    """Element-wise :func:`predict`; the hyperplane table is shared by all queries."""
    return Predictor(data, config, **kwargs).predict(list(queries))


class AffineInvariantKNNRegressor(RegressorMixin, BaseEstimator):
    """k-NN regressor whose neighbors are ranked by hyperplane crossings.

    Parameters
    ----------
    n_neighbors : int, default=5
        Number of neighbors averaged per prediction.
    metric : {"exact", "sampled", "euclidean", "rank"}, default="exact"
        ``exact`` counts every hyperplane through d sample points,
        ``sampled`` counts ``n_samples`` random ones and rescales.
    n_samples : int, optional
        Hyperplanes drawn for ``metric="sampled"``.
    random_state : int, optional
        Seed for the hyperplane sample.
    n_jobs : int, optional
        Threads used to build the hyperplane sign table.

    Coordinates are converted to exact rationals (floats exactly, strings
    without rounding), so predictions are invariant under any nonsingular
    affine map of the inputs with the exact metric.
    """

    def __init__(self, n_neighbors=5, metric="exact", n_samples=None, random_state=None, n_jobs=None):
        self.n_neighbors = n_neighbors
        self.metric = metric
        self.n_samples = n_samples
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self) -> EstimatorConfig:
        return EstimatorConfig(
            k=self.n_neighbors, metric=self.metric, m=self.n_samples, seed=self.random_state
        )

    def fit(self, X, y):
        config = self._config()
        points = check_rational_array(X)
        y = check_targets(y, len(points))
        self.dataset_ = Dataset(tuple(points), y)
        self.predictor_ = Predictor(self.dataset_, config, n_jobs=self.n_jobs)
        self.n_features_in_ = self.dataset_.dim
        return self

    def predict_details(self, X) -> list[Prediction]:
        check_is_fitted(self, "predictor_")
        return self.predictor_.predict(check_rational_array(X, n_features=self.n_features_in_))

    def predict(self, X) -> np.ndarray:
        return np.array([p.value for p in self.predict_details(X)])

    def kneighbors(self, X) -> np.ndarray:
        return np.array([p.neighbor_indices for p in self.predict_details(X)], dtype=np.int64)
