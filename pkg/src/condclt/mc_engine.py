"""Replicated Monte Carlo harness.

Each replicate draws one finite-n sample, standardizes its count statistic
by the centering/scaling sequences appropriate to the model, and feeds the
result into mergeable moment accumulators.  Per-replicate RNG streams are
derived deterministically from (seed, replicate index), so the estimates do
not depend on the worker count or on how replicates are chunked.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import limit_theory, simulators
from .errors import DegenerateVariance, DimensionMismatch, InsufficientReplicates

EXPERIMENT_MODELS = ("alloc", "gnp", "gnm", "spacings")
DEFAULT_Z_GATE = 4.0
DEFAULT_KS_GATE = 0.05
DEFAULT_N_BATCHES = 20


@dataclass(frozen=True)
class StandardizationSpec:
    """Affine standardization (x - b_n)/a_n with the conditioning target xi."""

    a_n: float
    b_n: np.ndarray
    c_n: float
    d_n: float
    y_n: float
    xi: float

    def __post_init__(self):
        assert self.a_n > 0 and self.c_n > 0
        object.__setattr__(self, "b_n", np.asarray(self.b_n, dtype=float))


def standardize(x, spec: StandardizationSpec) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != spec.b_n.shape:
        raise DimensionMismatch(f"x shape {x.shape} != b_n shape {spec.b_n.shape}")
    return (x - spec.b_n) / spec.a_n


class MomentAccumulator:
    """Mergeable running mean / co-moment state for vector samples.

    Tracks the count, mean, the co-moment matrix (sum of outer products of
    deviations) and the per-coordinate central 3rd/4th power sums needed to
    merge fourth moments exactly.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self.count = 0
        self.mean = np.zeros(dim)
        self.comoment = np.zeros((dim, dim))
        self.third_diag = np.zeros(dim)
        self.fourth_diag = np.zeros(dim)

    def update(self, x) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"sample shape {x.shape}, expected ({self.dim},)")
        n1 = self.count
        self.count = n = n1 + 1
        delta = x - self.mean
        delta_n = delta / n
        m2d = np.diag(self.comoment).copy()
        self.fourth_diag += (
            delta * delta_n**3 * n1 * (n * n - 3 * n + 3)
            + 6.0 * delta_n**2 * m2d
            - 4.0 * delta_n * self.third_diag
        )
        self.third_diag += (
            delta * delta_n**2 * n1 * (n1 - 1) - 3.0 * delta_n * m2d
        )
        self.mean += delta_n
        self.comoment += np.outer(delta, x - self.mean)

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        """Combine two disjoint accumulators; associative and commutative up to
        float rounding."""
        if other.dim != self.dim:
            raise DimensionMismatch("accumulator dimensions differ")
        if other.count == 0:
            return self._copy()
        if self.count == 0:
            return other._copy()
        na, nb = self.count, other.count
        n = na + nb
        out = MomentAccumulator(self.dim)
        out.count = n
        delta = other.mean - self.mean
        out.mean = self.mean + delta * (nb / n)
        out.comoment = (
            self.comoment + other.comoment + np.outer(delta, delta) * (na * nb / n)
        )
        m2a = np.diag(self.comoment)
        m2b = np.diag(other.comoment)
        out.third_diag = (
            self.third_diag + other.third_diag
            + delta**3 * na * nb * (na - nb) / n**2
            + 3.0 * delta * (na * m2b - nb * m2a) / n
        )
        out.fourth_diag = (
            self.fourth_diag + other.fourth_diag
            + delta**4 * na * nb * (na * na - na * nb + nb * nb) / n**3
            + 6.0 * delta**2 * (na * na * m2b + nb * nb * m2a) / n**2
            + 4.0 * delta * (na * other.third_diag - nb * self.third_diag) / n
        )
        return out

    def _copy(self) -> "MomentAccumulator":
        out = MomentAccumulator(self.dim)
        out.count = self.count
        out.mean = self.mean.copy()
        out.comoment = self.comoment.copy()
        out.third_diag = self.third_diag.copy()
        out.fourth_diag = self.fourth_diag.copy()
        return out

    def covariance(self) -> np.ndarray:
        if self.count < 2:
            raise InsufficientReplicates("need at least 2 samples for a covariance")
        cov = self.comoment / (self.count - 1)
        return 0.5 * (cov + cov.T)


def model_lambda_n(model: str, params: dict) -> float:
    """Finite-n centering parameter: m/n for allocations, n p or 2m/n for graphs."""
    if model == "alloc":
        return params["m"] / params["n"]
    if model == "gnp":
        return params["n"] * params["p"]
    if model == "gnm":
        return 2 * params["m"] / params["n"]
    raise ValueError(f"no lambda_n for model {model!r}")


def standardization_for(model: str, params: dict) -> StandardizationSpec:
    """Centering/scaling sequences for the implemented experiments (xi = 0)."""
    n = params["n"]
    if model == "spacings":
        b = np.array([n * math.exp(-params["a"])])
        d_n = y_n = float(n)
    else:
        lam_n = model_lambda_n(model, params)
        max_k = params["max_k"]
        b = n * np.array([limit_theory.poisson_pmf(lam_n, k) for k in range(max_k + 1)])
        d_n = y_n = float(params["m"]) if model in ("alloc", "gnm") else lam_n * n / 2
    return StandardizationSpec(a_n=math.sqrt(n), b_n=b, c_n=math.sqrt(n),
                               d_n=d_n, y_n=y_n, xi=0.0)


def _raw_statistic(model: str, params: dict, rng: np.random.Generator) -> np.ndarray:
    if model == "alloc":
        n, m, max_k = params["n"], params["m"], params["max_k"]
        prof = simulators.sample_allocation(n, m, rng,
                                            max_k=max(max_k, simulators.DEFAULT_MAX_K))
        return prof.counts[: max_k + 1]
    if model == "gnp":
        n, p, max_k = params["n"], params["p"], params["max_k"]
        dc = simulators.sample_gnp(n, p, rng, max_k=max(max_k, simulators.DEFAULT_MAX_K))
        return dc.counts[: max_k + 1]
    if model == "gnm":
        n, m, max_k = params["n"], params["m"], params["max_k"]
        dc = simulators.sample_gnm(n, m, rng, max_k=max(max_k, simulators.DEFAULT_MAX_K))
        return dc.counts[: max_k + 1]
    if model == "spacings":
        n, a = params["n"], params["a"]
        sample = simulators.sample_spacings(n, rng)
        return np.array([simulators.exceedance_count(sample, a)])
    raise ValueError(f"unknown model {model!r}; expected one of {EXPERIMENT_MODELS}")


def _replicate_vector(model: str, params: dict, rng: np.random.Generator,
                      spec: StandardizationSpec | None = None) -> np.ndarray:
    if spec is None:
        spec = standardization_for(model, params)
    return standardize(_raw_statistic(model, params, rng), spec)


def replicate_dim(model: str, params: dict) -> int:
    return 1 if model == "spacings" else params["max_k"] + 1


def _compute_chunk(model: str, params: dict, seed: int, lo: int, hi: int) -> np.ndarray:
    spec = standardization_for(model, params)
    out = np.empty((hi - lo, replicate_dim(model, params)))
    for i in range(lo, hi):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        out[i - lo] = _replicate_vector(model, params, rng, spec)
    return out


@dataclass
class ExperimentRun:
    """Replicated experiment output: total and per-batch accumulators plus the
    raw standardized sample matrix (reps x dim)."""

    model: str
    params: dict
    reps: int
    seed: int
    acc: MomentAccumulator
    batch_accs: list[MomentAccumulator]
    samples: np.ndarray
    wall_time: float = 0.0


def run_experiment(model: str, params: dict, reps: int, seed: int,
                   n_batches: int = DEFAULT_N_BATCHES, workers: int = 1,
                   dump_path=None) -> ExperimentRun:
    """Run reps independent replicates, deterministically in (seed, index).

    The worker count only affects scheduling; samples are placed by replicate
    index and accumulated in index order, so results are identical for any
    number of workers.
    """
    if reps < 2:
        raise InsufficientReplicates(f"reps must be >= 2, got {reps}")
    start = time.perf_counter()
    dim = replicate_dim(model, params)
    samples = np.empty((reps, dim))
    if workers <= 1:
        samples[:] = _compute_chunk(model, params, seed, 0, reps)
    else:
        n_chunks = min(max(4 * workers, 1), reps)
        bounds = np.linspace(0, reps, n_chunks + 1, dtype=int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_compute_chunk, model, params, seed, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            pos = 0
            for fut in futures:
                block = fut.result()
                samples[pos: pos + len(block)] = block
                pos += len(block)
    n_batches = min(n_batches, reps)
    batch_bounds = np.linspace(0, reps, n_batches + 1, dtype=int)
    batch_accs = []
    for lo, hi in zip(batch_bounds[:-1], batch_bounds[1:]):
        acc = MomentAccumulator(dim)
        for row in samples[lo:hi]:
            acc.update(row)
        batch_accs.append(acc)
    total = batch_accs[0]
    for acc in batch_accs[1:]:
        total = total.merge(acc)
    if dump_path is not None:
        spec = standardization_for(model, params)
        raw = np.rint(samples * spec.a_n + spec.b_n).astype(np.int64)
        simulators.dump_count_matrix(dump_path, raw)
    return ExperimentRun(model=model, params=dict(params), reps=reps, seed=seed,
                         acc=total, batch_accs=batch_accs, samples=samples,
                         wall_time=time.perf_counter() - start)


@dataclass
class ComparisonEntry:
    kind: str                   # "mean" or "cov"
    i: int
    j: int
    theory: float
    estimate: float
    stderr: float
    z: float


@dataclass
class VerificationReport:
    experiment: str
    params: dict
    seed: int
    z_gate: float
    ks_gate: float
    entries: list[ComparisonEntry] = field(default_factory=list)
    normality: list[dict] = field(default_factory=list)
    passed: bool = False
    wall_time: float = 0.0

    def max_abs_z(self) -> float:
        return max((abs(e.z) for e in self.entries), default=0.0)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": self.params,
            "seed": self.seed,
            "z_gate": self.z_gate,
            "ks_gate": self.ks_gate,
            "entries": [vars(e) for e in self.entries],
            "normality": self.normality,
            "passed": self.passed,
            "wall_time": self.wall_time,
        }

    @staticmethod
    def from_dict(d: dict) -> "VerificationReport":
        rep = VerificationReport(
            experiment=d["experiment"], params=d["params"], seed=d["seed"],
            z_gate=d["z_gate"], ks_gate=d["ks_gate"],
            entries=[ComparisonEntry(**e) for e in d["entries"]],
            normality=list(d["normality"]), passed=d["passed"],
            wall_time=d["wall_time"],
        )
        return rep


def _mean_entries(run: ExperimentRun, theory_mean: np.ndarray) -> list[ComparisonEntry]:
    est = run.acc.mean
    cov = run.acc.covariance()
    out = []
    for i in range(run.acc.dim):
        se = math.sqrt(max(cov[i, i], 0.0) / run.acc.count)
        diff = est[i] - theory_mean[i]
        z = diff / se if se > 0 else (0.0 if diff == 0.0 else math.inf)
        out.append(ComparisonEntry("mean", i, -1, float(theory_mean[i]), float(est[i]),
                                   se, float(z)))
    return out


def _cov_entries(run: ExperimentRun, theory_cov: np.ndarray,
                 diag_only: bool = False) -> list[ComparisonEntry]:
    """Covariance z-scores with batch-means standard errors."""
    est = run.acc.covariance()
    batch_covs = np.array([b.covariance() for b in run.batch_accs])
    nb = len(run.batch_accs)
    se_mat = batch_covs.std(axis=0, ddof=1) / math.sqrt(nb)
    out = []
    for i in range(run.acc.dim):
        for j in range(i, run.acc.dim):
            if diag_only and i != j:
                continue
            se = float(se_mat[i, j])
            z = (est[i, j] - theory_cov[i, j]) / se if se > 0 else 0.0
            out.append(ComparisonEntry("cov", i, j, float(theory_cov[i, j]),
                                       float(est[i, j]), se, float(z)))
    return out


def compare_to_theory(run: ExperimentRun, theory_mean, theory_cov,
                      z_gate: float = DEFAULT_Z_GATE) -> VerificationReport:
    """Gate sample means and covariances against closed-form predictions.

    Mean entries use sqrt(var/count) standard errors; covariance entries use
    batch-means standard errors across the per-batch covariance estimates.
    """
    if run.acc.count < 100:
        raise InsufficientReplicates(f"need >= 100 replicates, got {run.acc.count}")
    theory_mean = np.asarray(theory_mean, dtype=float)
    theory_cov = np.asarray(theory_cov, dtype=float)
    report = VerificationReport(
        experiment=run.model, params=run.params, seed=run.seed,
        z_gate=z_gate, ks_gate=DEFAULT_KS_GATE, wall_time=run.wall_time,
    )
    report.entries = _mean_entries(run, theory_mean) + _cov_entries(run, theory_cov)
    report.passed = report.max_abs_z() <= z_gate
    return report


def normality_distance(samples, mu: float, sigma2: float) -> float:
    """Kolmogorov-Smirnov sup distance between the empirical CDF and
    N(mu, sigma2)."""
    samples = np.sort(np.asarray(samples, dtype=float))
    if sigma2 <= 0.0:
        raise DegenerateVariance(f"sigma2 = {sigma2} is not positive")
    if len(samples) < 1000:
        raise InsufficientReplicates(f"need >= 1000 samples, got {len(samples)}")
    n = len(samples)
    cdf = ndtr((samples - mu) / math.sqrt(sigma2))
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def moment_convergence_check(run: ExperimentRun, theory_mean, theory_cov,
                             z_gate: float = DEFAULT_Z_GATE) -> dict:
    """First- and second-moment convergence section: standardized means against
    the conditional mean and the variance diagonal against the conditional
    variances, both at 4-SE scale."""
    theory_mean = np.asarray(theory_mean, dtype=float)
    theory_cov = np.asarray(theory_cov, dtype=float)
    entries = _mean_entries(run, theory_mean) + _cov_entries(run, theory_cov, diag_only=True)
    max_z = max(abs(e.z) for e in entries)
    return {
        "entries": entries,
        "max_abs_z": max_z,
        "passed": max_z <= z_gate,
    }
