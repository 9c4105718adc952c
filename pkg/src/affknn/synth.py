"""Synthetic regression data, affine maps, and the experiment procedures."""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ._validation import check_positive_int
from .estimator import EstimatorConfig, Predictor
from .geometry import as_point, exact_det, to_rational
from .metric import Dataset

__all__ = [
    "AffineMap",
    "random_affine",
    "apply_affine",
    "REGRESSION_FUNCTIONS",
    "RegressionScenario",
    "snap_dyadic",
    "generate_sample",
    "sample_queries",
    "InvarianceReport",
    "run_invariance_suite",
    "euclidean_witness",
    "ExperimentRecord",
    "ExperimentReport",
    "k_schedule",
    "run_consistency_experiment",
    "EXACT_CAPS",
]

DYADIC_BITS = 53
# Largest n routed to the exact metric, per dimension.
EXACT_CAPS = {1: 5000, 2: 500, 3: 120}


@dataclass(frozen=True)
class AffineMap:
    """``z -> A z + b`` with exact rational entries and det(A) != 0."""

    A: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]

    def __post_init__(self):
        A = tuple(tuple(to_rational(v) for v in row) for row in self.A)
        b = as_point(self.b)
        d = len(b)
        if len(A) != d or any(len(row) != d for row in A):
            raise ValueError(f"A must be {d}x{d} to match b")
        if exact_det(A) == 0:
            raise ValueError("A is singular")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return len(self.b)

    @property
    def det(self) -> Fraction:
        return exact_det(self.A)

    @classmethod
    def identity(cls, d: int) -> "AffineMap":
        return cls(tuple(tuple(int(i == j) for j in range(d)) for i in range(d)), (0,) * d)

    @classmethod
    def diagonal(cls, scales, offset=None) -> "AffineMap":
        d = len(scales)
        A = tuple(tuple(scales[i] if i == j else 0 for j in range(d)) for i in range(d))
        return cls(A, offset if offset is not None else (0,) * d)

    def __call__(self, point) -> tuple[Fraction, ...]:
        p = as_point(point)
        if len(p) != self.dim:
            raise ValueError(f"point has dimension {len(p)}, map has {self.dim}")
        return tuple(sum(a * x for a, x in zip(row, p)) + c for row, c in zip(self.A, self.b))

    def inverse(self) -> "AffineMap":
        d = self.dim
        # Gauss-Jordan on [A | I] over the rationals.
        aug = [list(row) + [Fraction(int(i == j)) for j in range(d)] for i, row in enumerate(self.A)]
        for col in range(d):
            pivot = next(r for r in range(col, d) if aug[r][col] != 0)
            aug[col], aug[pivot] = aug[pivot], aug[col]
            pv = aug[col][col]
            aug[col] = [v / pv for v in aug[col]]
            for r in range(d):
                if r != col and aug[r][col] != 0:
                    f = aug[r][col]
                    aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
        inv = tuple(tuple(row[d:]) for row in aug)
        b = tuple(-sum(a * c for a, c in zip(row, self.b)) for row in inv)
        return AffineMap(inv, b)

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """``self(inner(z))``."""
        d = self.dim
        A = tuple(
            tuple(sum(self.A[i][t] * inner.A[t][j] for t in range(d)) for j in range(d))
            for i in range(d)
        )
        return AffineMap(A, self(inner.b))


def random_affine(d: int, seed=None, coef_range=(-5, 5), offset_range=(-10, 10)) -> AffineMap:
    """Random nonsingular integer affine map, redrawn until det(A) != 0."""
    d = check_positive_int(d, "d")
    lo, hi = coef_range
    if lo > hi:
        raise ValueError(f"empty coefficient range {coef_range}")
    if lo == hi == 0:
        raise ValueError("coefficient range contains only zero; every matrix is singular")
    rng = np.random.default_rng(seed)
    while True:
        A = rng.integers(lo, hi + 1, size=(d, d)).tolist()
        b = rng.integers(offset_range[0], offset_range[1] + 1, size=d).tolist()
        if exact_det(A) != 0:
            return AffineMap(A, b)


def apply_affine(T: AffineMap, obj):
    """Apply ``T`` to a Dataset (responses untouched), a point, or a list of points."""
    if isinstance(obj, Dataset):
        if obj.dim != T.dim:
            raise ValueError(f"dataset has dimension {obj.dim}, map has {T.dim}")
        return Dataset(tuple(T(p) for p in obj.points), obj.responses)
    arr = np.asarray(obj, dtype=object)
    if arr.ndim == 2:
        return [T(p) for p in arr]
    return T(obj)


def _r_constant(X):
    return np.ones(len(X))


def _r_quadratic(X):
    return X[:, 0] ** 2 - X[:, 1]


def _r_linear(X):
    return X.sum(axis=1)


def _r_sine(X):
    return np.sin(2 * np.pi * X[:, 0])


@dataclass(frozen=True)
class _RegressionFunction:
    func: Callable[[np.ndarray], np.ndarray]
    min_dim: int
    sup_uniform: Callable[[int], float]
    sup_gaussian: float


REGRESSION_FUNCTIONS = {
    "constant": _RegressionFunction(_r_constant, 1, lambda d: 1.0, 1.0),
    "quadratic": _RegressionFunction(_r_quadratic, 2, lambda d: 1.0, math.inf),
    "linear": _RegressionFunction(_r_linear, 1, lambda d: float(d), math.inf),
    "sine": _RegressionFunction(_r_sine, 1, lambda d: 1.0, 1.0),
}

DESIGNS = ("uniform", "gaussian")


@dataclass(frozen=True)
class RegressionScenario:
    """A seeded regression model ``Y = r(X) + U[-noise, noise]``.

    ``design`` is the law of X: uniform on the unit cube or standard
    Gaussian. ``bound`` defaults to ``sup |r| + noise`` on the design's
    support and must be finite.
    """

    d: int = 2
    design: str = "uniform"
    function: str = "quadratic"
    noise: float = 0.1
    seed: int = 0
    bound: float | None = None

    def __post_init__(self):
        check_positive_int(self.d, "d")
        if self.design not in DESIGNS:
            raise ValueError(f"design must be one of {DESIGNS}, got {self.design!r}")
        if self.function not in REGRESSION_FUNCTIONS:
            raise ValueError(
                f"function must be one of {sorted(REGRESSION_FUNCTIONS)}, got {self.function!r}"
            )
        if self.d < REGRESSION_FUNCTIONS[self.function].min_dim:
            raise ValueError(f"function {self.function!r} needs d >= 2")
        if not (self.noise >= 0 and math.isfinite(self.noise)):
            raise ValueError("noise must be a finite nonnegative number")
        if not math.isfinite(self.response_bound):
            raise ValueError(
                f"{self.function!r} is unbounded under the {self.design} design; Y must be bounded"
            )

    @property
    def response_bound(self) -> float:
        if self.bound is not None:
            return float(self.bound)
        fn = REGRESSION_FUNCTIONS[self.function]
        sup = fn.sup_uniform(self.d) if self.design == "uniform" else fn.sup_gaussian
        return sup + self.noise

    def regression(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return REGRESSION_FUNCTIONS[self.function].func(X)

    def draw_design(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.design == "uniform":
            raw = rng.random((count, self.d))
        else:
            raw = rng.standard_normal((count, self.d))
        return snap_dyadic(raw)


def snap_dyadic(values: np.ndarray) -> np.ndarray:
    """Round to the grid ``k / 2**53``; uniform draws on [0, 1) are unchanged."""
    scale = float(2 ** DYADIC_BITS)
    return np.round(np.asarray(values, dtype=np.float64) * scale) / scale


def _to_points(X: np.ndarray) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(Fraction(float(v)) for v in row) for row in X)


def generate_sample(scenario: RegressionScenario, n: int, *, seed=None) -> Dataset:
    """n i.i.d. pairs from ``scenario``; ``seed`` overrides ``scenario.seed``."""
    n = check_positive_int(n, "n")
    if n < scenario.d:
        raise ValueError(f"need n >= d, got n={n}, d={scenario.d}")
    rng = np.random.default_rng(scenario.seed if seed is None else seed)
    X = scenario.draw_design(rng, n)
    y = scenario.regression(X) + rng.uniform(-scenario.noise, scenario.noise, size=n)
    if np.any(np.abs(y) > scenario.response_bound):
        raise ValueError("generated response exceeds the declared bound")
    return Dataset(_to_points(X), y)


def sample_queries(scenario: RegressionScenario, count: int, *, seed=None):
    """Query points from the design law and their true regression values.

    Draws are sequential, so a larger ``count`` extends a smaller one.
    """
    rng = np.random.default_rng(scenario.seed if seed is None else seed)
    X = scenario.draw_design(rng, count)
    return list(_to_points(X)), scenario.regression(X)


# ---------------------------------------------------------------------------
# affine invariance


@dataclass
class InvarianceReport:
    checks: int = 0
    exact_violations: int = 0
    euclidean_violations: int = 0
    maps: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.checks > 0 and self.exact_violations == 0

    def summary(self) -> str:
        return (
            f"maps={self.maps} checks={self.checks} "
            f"exact_violations={self.exact_violations} "
            f"euclidean_violations={self.euclidean_violations}"
        )


def run_invariance_suite(
    n: int,
    d: int,
    num_maps: int,
    seeds: Sequence[int] = (0,),
    *,
    k: int = 5,
    n_queries: int = 5,
    identity: bool = False,
    mode: str = "filtered",
    data: Dataset | None = None,
    queries: Sequence | None = None,
) -> InvarianceReport:
    """Compare exact-metric predictions before and after random affine maps.

    Every (map, query) pair is one check; a check fails unless the value and
    the neighbor indices agree exactly. Euclidean-metric changes in the
    neighbor indices are tallied as a demonstration, not a failure.
    ``data``/``queries`` replace the generated problem (one per seed).
    """
    if int(num_maps) != num_maps or num_maps < 1:
        raise ValueError(f"num_maps must be a positive integer, got {num_maps!r}")
    report = InvarianceReport()
    exact_cfg = EstimatorConfig(k=k, metric="exact")
    eucl_cfg = EstimatorConfig(k=k, metric="euclidean")
    for seed in seeds:
        if data is None:
            scenario = RegressionScenario(d=d, design="uniform", function="linear", seed=seed)
            sample = generate_sample(scenario, n, seed=[seed, 0])
            qs, _ = sample_queries(scenario, n_queries, seed=[seed, 1])
        else:
            sample, qs = data, [as_point(q) for q in queries]
        base = Predictor(sample, exact_cfg, mode=mode).predict(qs)
        base_e = Predictor(sample, eucl_cfg).predict(qs)
        for i in range(num_maps):
            T = AffineMap.identity(sample.dim) if identity else random_affine(sample.dim, [seed, 2, i])
            moved = apply_affine(T, sample)
            mq = [T(q) for q in qs]
            got = Predictor(moved, exact_cfg, mode=mode).predict(mq)
            got_e = Predictor(moved, eucl_cfg).predict(mq)
            report.maps += 1
            for j, (a, b) in enumerate(zip(base, got)):
                report.checks += 1
                if a.value != b.value or a.neighbor_indices != b.neighbor_indices:
                    report.exact_violations += 1
                    report.failures.append((seed, i, j))
            report.euclidean_violations += sum(
                a.neighbor_indices != b.neighbor_indices for a, b in zip(base_e, got_e)
            )
    return report


def euclidean_witness():
    """A problem whose Euclidean neighbors change under a diagonal rescaling.

    Returns ``(data, query, scaling, k)``. With k=2 the Euclidean neighbors of
    the origin are points 0 and 1; stretching the first axis by 10 makes
    points 2 and 3 nearer.
    """
    X = [(1, 0), (-1, 0), (0, 2), (0, -2), (3, 3), (-3, 3)]
    data = Dataset(tuple(as_point(p) for p in X), np.array([1.0, 1.0, 0.0, 0.0, 5.0, 5.0]))
    return data, (Fraction(0), Fraction(0)), AffineMap.diagonal((10, 1)), 2


# ---------------------------------------------------------------------------
# consistency experiment


def k_schedule(name_or_func) -> Callable[[int], int]:
    """Resolve a k_n schedule; the default ``"sqrt"`` is ``ceil(sqrt(n))``."""
    if callable(name_or_func):
        return name_or_func
    schedules = {
        "sqrt": lambda n: math.isqrt(n - 1) + 1,
        "cbrt": lambda n: max(1, math.ceil(round(n ** (1 / 3), 12))),
        "log": lambda n: max(1, math.ceil(math.log(n))),
    }
    try:
        return schedules[name_or_func]
    except KeyError:
        raise ValueError(f"unknown k schedule {name_or_func!r}; use one of {sorted(schedules)}") from None


@dataclass(frozen=True)
class ExperimentRecord:
    n: int
    replicate: int
    k: int
    metric: str
    error: float
    runtime: float = 0.0


@dataclass
class ExperimentReport:
    p: float
    records: list[ExperimentRecord]

    def grid(self) -> list[int]:
        return sorted({r.n for r in self.records})

    def aggregate(self) -> list[tuple[int, float, float]]:
        """``(n, mean error, standard error)`` per grid point."""
        out = []
        for n in self.grid():
            errs = np.array([r.error for r in self.records if r.n == n])
            se = float(errs.std(ddof=1) / math.sqrt(len(errs))) if len(errs) > 1 else 0.0
            out.append((n, math.fsum(errs) / len(errs), se))
        return out

    def trend_ok(self) -> bool:
        """Last mean below the first, at most one adjacent rise, and that rise
        no larger than the bigger of the two standard errors."""
        agg = self.aggregate()
        if len(agg) < 2 or not agg[-1][1] < agg[0][1]:
            return False
        rises = [(a, b) for a, b in zip(agg, agg[1:]) if b[1] > a[1]]
        return len(rises) <= 1 and all(b[1] - a[1] <= max(a[2], b[2]) for a, b in rises)

    def to_csv(self, *, include_runtime: bool = False) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["row", "n", "replicate", "k", "metric", "p", "error", "std_error"]
        if include_runtime:
            header.append("runtime_s")
        writer.writerow(header)
        for r in sorted(self.records, key=lambda r: (r.n, r.replicate)):
            row = ["replicate", r.n, r.replicate, r.k, r.metric, repr(float(self.p)), repr(r.error), ""]
            if include_runtime:
                row.append(f"{r.runtime:.6f}")
            writer.writerow(row)
        for n, mean, se in self.aggregate():
            recs = [r for r in self.records if r.n == n]
            row = ["mean", n, "", recs[0].k, recs[0].metric, repr(float(self.p)), repr(mean), repr(se)]
            if include_runtime:
                row.append(f"{sum(r.runtime for r in recs):.6f}")
            writer.writerow(row)
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"p={self.p!r}"]
        for n, mean, se in self.aggregate():
            lines.append(f"n={n} mean_error={mean!r} std_error={se!r}")
        lines.append(f"trend={'ok' if self.trend_ok() else 'violated'}")
        return "\n".join(lines) + "\n"


def _route_metric(metric: str, n: int, d: int) -> str:
    if metric != "auto":
        return metric
    return "exact" if n <= EXACT_CAPS.get(d, 40) else "sampled"


def _run_job(args) -> ExperimentRecord:
    scenario, n, rep, k, p, n_queries, metric, m = args
    start = time.perf_counter()
    data = generate_sample(scenario, n, seed=[scenario.seed, n, rep, 0])
    qs, truth = sample_queries(scenario, n_queries, seed=[scenario.seed, n, rep, 1])
    seed = int(np.random.SeedSequence([scenario.seed, n, rep, 2]).generate_state(1)[0])
    config = EstimatorConfig(k=k, metric=metric, m=m, seed=seed)
    preds = Predictor(data, config).predict(qs)
    est = np.array([pr.value for pr in preds])
    error = math.fsum(np.abs(est - truth) ** p) / len(est)
    return ExperimentRecord(n, rep, k, config.tag, error, time.perf_counter() - start)


def run_consistency_experiment(
    scenario: RegressionScenario,
    n_grid: Sequence[int] = (50, 100, 200, 400),
    schedule="sqrt",
    *,
    p: float = 2.0,
    n_queries: int = 50,
    replicates: int = 10,
    metric: str = "auto",
    m: int = 2000,
    n_jobs: int | None = None,
) -> ExperimentReport:
    """Empirical L_p error of the estimate over a grid of sample sizes.

    Each (n, replicate) job draws a fresh sample and fresh queries from seeds
    derived from ``(scenario.seed, n, replicate)``, so results do not depend
    on job order or ``n_jobs``. ``metric="auto"`` uses the exact metric up to
    the desk-scale caps in ``EXACT_CAPS`` and the sampled one beyond.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    check_positive_int(n_queries, "n_queries")
    check_positive_int(replicates, "replicates")
    sched = k_schedule(schedule)
    jobs = []
    for n in n_grid:
        n = check_positive_int(n, "n")
        k = sched(n)
        if not (isinstance(k, int) and 1 <= k <= n):
            raise ValueError(f"k schedule gave k={k!r} for n={n}; need 1 <= k <= n")
        routed = _route_metric(metric, n, scenario.d)
        for rep in range(replicates):
            jobs.append((scenario, n, rep, k, p, n_queries, routed, m))
    if n_jobs and n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            records = list(pool.map(_run_job, jobs))
    else:
        records = [_run_job(job) for job in jobs]
    return ExperimentReport(p, records)
