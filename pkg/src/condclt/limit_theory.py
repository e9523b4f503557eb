"""Closed-form limit means, variances and covariances for the three models.

Covers Poisson probabilities, the allocation limit covariance, the G(n,p)
and G(n,m) degree-count covariances, Weiss's empty-box variance, exact
finite-n degree means, spacings constants, linear-combination variances and
the edge-statistic moments used for the analytic G(n,p) -> G(n,m) transfer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import gauss_cond
from .errors import InvalidA, InvalidLambda, TruncationError

TAIL_MASS_GATE = 1e-12

ALLOC = "ALLOC"
GNP = "GNP"
GNM = "GNM"
MODELS = (ALLOC, GNP, GNM)


def poisson_pmf(lam: float, k: int) -> float:
    """P(Po(lam) = k), computed in log space for large k to avoid overflow."""
    if lam <= 0.0:
        raise InvalidLambda(f"lambda must be positive, got {lam}")
    if k < 0 or k != int(k):
        raise InvalidLambda(f"k must be a non-negative integer, got {k}")
    k = int(k)
    if k <= 30:
        return lam**k * math.exp(-lam) / math.factorial(k)
    return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1))


def poisson_tail_mass(lam: float, k: int) -> float:
    """P(Po(lam) > k), computed by stable summation of the pmf."""
    if lam <= 0.0:
        raise InvalidLambda(f"lambda must be positive, got {lam}")
    total = 0.0
    for j in range(int(k) + 1):
        total += poisson_pmf(lam, j)
    return max(0.0, 1.0 - total)


def truncation_index(lam: float, tol: float = TAIL_MASS_GATE) -> int:
    """Smallest K whose Poisson tail mass beyond K is below tol."""
    if lam <= 0.0:
        raise InvalidLambda(f"lambda must be positive, got {lam}")
    total = 0.0
    k = 0
    while True:
        total += poisson_pmf(lam, k)
        if 1.0 - total < tol:
            return k
        k += 1
        if k > 10_000:
            raise TruncationError(f"no truncation index below 10000 for lambda={lam}")


def check_truncation(lam: float, k: int, tol: float = TAIL_MASS_GATE) -> None:
    if poisson_tail_mass(lam, k) >= tol:
        raise TruncationError(
            f"tail mass beyond K={k} is {poisson_tail_mass(lam, k):.3e} >= {tol}"
        )


def alloc_cov(lam: float, i: int, j: int) -> float:
    """Limit covariance of standardized box counts (exactly j balls) after
    conditioning on the total number of balls."""
    pi_i = poisson_pmf(lam, i)
    pi_j = poisson_pmf(lam, j)
    delta = 1.0 if i == j else 0.0
    return delta * pi_i - pi_i * pi_j * (1.0 + (i - lam) * (j - lam) / lam)


def gnp_degree_cov(lam: float, j: int, k: int) -> float:
    """Limit covariance of standardized degree counts in G(n, p), p = lam/n."""
    pi_j = poisson_pmf(lam, j)
    pi_k = poisson_pmf(lam, k)
    delta = 1.0 if j == k else 0.0
    return pi_j * pi_k * ((j - lam) * (k - lam) / lam - 1.0) + pi_k * delta


def gnm_degree_cov(lam: float, j: int, k: int) -> float:
    """Limit covariance of standardized degree counts in G(n, m), 2m/n -> lam.

    The sign of the quadratic correction flips relative to G(n, p); the
    resulting expression coincides with the allocation covariance.
    """
    pi_j = poisson_pmf(lam, j)
    pi_k = poisson_pmf(lam, k)
    delta = 1.0 if j == k else 0.0
    return pi_j * pi_k * (-(j - lam) * (k - lam) / lam - 1.0) + pi_k * delta


@dataclass(frozen=True)
class TheoryCovariance:
    """Truncated (K+1)x(K+1) limit covariance matrix for one model."""

    model: str
    lam: float
    matrix: np.ndarray

    @property
    def k_max(self) -> int:
        return self.matrix.shape[0] - 1


def theory_cov_matrix(model: str, lam: float, k_max: int) -> TheoryCovariance:
    """Assemble the limit covariance matrix for indices 0..k_max."""
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    entry = {ALLOC: alloc_cov, GNP: gnp_degree_cov, GNM: gnm_degree_cov}[model]
    mat = np.empty((k_max + 1, k_max + 1))
    for i in range(k_max + 1):
        for j in range(i, k_max + 1):
            mat[i, j] = mat[j, i] = entry(lam, i, j)
    return TheoryCovariance(model=model, lam=lam, matrix=mat)


def expected_degree_count_exact(n: int, p: float, k: int) -> float:
    """Exact finite-n expected number of degree-k vertices in G(n, p)."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0,1), got {p}")
    if not 0 <= k <= n - 1:
        raise ValueError(f"k must be in [0, n-1], got {k}")
    log_term = (
        math.lgamma(n) - math.lgamma(k + 1) - math.lgamma(n - k)
        + k * math.log(p) + (n - 1 - k) * math.log1p(-p)
    )
    return n * math.exp(log_term)


def weiss_variance(lam: float) -> float:
    """Limit variance of the standardized number of empty boxes."""
    if lam <= 0.0:
        raise InvalidLambda(f"lambda must be positive, got {lam}")
    out = math.exp(-lam) - math.exp(-2 * lam) - lam * math.exp(-2 * lam)
    # Cross-check against the generic residual-variance route.
    e = math.exp(-lam)
    alt = gauss_cond.residual_variance(e * (1.0 - e), lam, -lam * e)
    assert abs(out - alt) <= 1e-14 * max(1.0, abs(out))
    return out


class SpacingsConstants(NamedTuple):
    sx2: float
    sxy: float
    sy2: float
    residual: float


def spacings_limit_constants(a: float) -> SpacingsConstants:
    """Joint limit (co)variances for the count of spacings exceeding a/n,
    paired with the normalized total, plus the conditional residual variance."""
    if a <= 0.0:
        raise InvalidA(f"a must be positive, got {a}")
    e = math.exp(-a)
    sx2 = e * (1.0 - e)
    sxy = a * e
    sy2 = 1.0
    residual = gauss_cond.residual_variance(sx2, sy2, sxy)
    closed = e - e * e - a * a * e * e
    assert abs(residual - closed) <= 1e-14 * max(1.0, abs(closed))
    return SpacingsConstants(sx2, sxy, sy2, residual)


def _estimate_tail_contribution(lam: float, coeffs: np.ndarray, model: str,
                                horizon: int = 120) -> float:
    """Crude upper estimate of the quadratic-form mass lost to truncation,
    extrapolating the coefficient sequence geometrically past its last entry."""
    k_max = len(coeffs) - 1
    nz = np.flatnonzero(np.abs(coeffs) > 0.0)
    if len(nz) == 0 or nz[-1] < k_max:
        # Trailing zeros: the sequence is taken as finitely supported.
        return 0.0
    a_last = abs(coeffs[k_max])
    if k_max >= 1 and abs(coeffs[k_max - 1]) > 0.0:
        ratio = min(max(a_last / abs(coeffs[k_max - 1]), 1e-6), 4.0)
    else:
        ratio = 2.0
    entry = {ALLOC: alloc_cov, GNP: gnp_degree_cov, GNM: gnm_degree_cov}[model]
    ext = a_last * ratio ** np.arange(1, horizon + 1)
    ks = np.arange(k_max + 1, k_max + horizon + 1)
    tail = 0.0
    for a_k, k in zip(ext, ks):
        # Cross terms against the retained block.
        for j, a_j in enumerate(coeffs):
            if a_j != 0.0:
                tail += 2.0 * abs(a_j) * a_k * abs(entry(lam, j, int(k)))
        # Diagonal of the discarded block dominates its own quadratic form.
        tail += a_k * a_k * abs(entry(lam, int(k), int(k)))
    return tail


def lincomb_variance(lam: float, coeffs, model: str) -> float:
    """Variance of the limit of a coefficient-weighted sum of the counts,
    computed as the quadratic form against the truncated theory matrix."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 1 or len(coeffs) == 0:
        raise ValueError("coeffs must be a non-empty 1-D sequence")
    tail = _estimate_tail_contribution(lam, coeffs, model)
    if tail > 1e-9:
        raise TruncationError(
            f"estimated tail contribution {tail:.3e} exceeds 1e-9; increase K"
        )
    theory = theory_cov_matrix(model, lam, len(coeffs) - 1)
    out = float(coeffs @ theory.matrix @ coeffs)
    if out < -1e-10:
        raise TruncationError(f"quadratic form {out:.3e} below the PSD floor")
    return out


def edge_stat_moments(lam: float, k_max: int) -> tuple[np.ndarray, float]:
    """Truncated covariance vector Cov(U_k, V) and variance Var(V) of the
    standardized edge statistic V = (1/2) sum_k k U_k under G(n, p)."""
    check_truncation(lam, k_max)
    sigma = theory_cov_matrix(GNP, lam, k_max).matrix
    ks = np.arange(k_max + 1, dtype=float)
    cov_with_v = 0.5 * sigma @ ks
    var_v = float(0.25 * ks @ sigma @ ks)
    return cov_with_v, var_v


def gnm_cov_via_conditioning(lam: float, k_max: int) -> np.ndarray:
    """Condition the G(n,p) limit covariance on the edge statistic.

    Builds the joint Gaussian of (U_0..U_K, V) from the closed forms and runs
    it through the exact conditioning machinery; the result reproduces the
    G(n, m) covariance matrix.
    """
    sigma = theory_cov_matrix(GNP, lam, k_max).matrix
    cov_with_v, var_v = edge_stat_moments(lam, k_max)
    d = k_max + 2
    cov = np.empty((d, d))
    cov[:-1, :-1] = sigma
    cov[:-1, -1] = cov_with_v
    cov[-1, :-1] = cov_with_v
    cov[-1, -1] = var_v
    jg = gauss_cond.JointGaussian(q=k_max + 1, r=1, mean=np.zeros(d), cov=cov)
    return gauss_cond.condition_on_scalar(jg, 0.0).cov
