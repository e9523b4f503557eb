"""Exact conditioning of a multivariate Gaussian on a block of its coordinates.

Everything here is closed-form linear algebra: given a joint Gaussian split
into an X block (dimension q) and a Y block (dimension r), conditioning on
Y = y produces another Gaussian with regression-shifted mean and a
Schur-complement covariance.  Invertible changes of basis on the X block
commute with conditioning, which is exposed as ``conjugate_by_transform``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidCovariance,
    SingularTransform,
    SingularYBlock,
)

# Numerical gates, shared by validation and conditioning.
SYMMETRY_RTOL = 1e-12
PSD_EIG_FLOOR = -1e-10          # relative to trace
COND_NUMBER_GATE = 1e12


def _check_symmetric(cov: np.ndarray, name: str = "cov") -> None:
    scale = max(np.abs(cov).max(), 1.0)
    if np.abs(cov - cov.T).max() > SYMMETRY_RTOL * scale:
        raise InvalidCovariance(f"{name} is not symmetric to within {SYMMETRY_RTOL} relative")


def _check_psd(cov: np.ndarray, name: str = "cov") -> None:
    eigs = np.linalg.eigvalsh(cov)
    floor = PSD_EIG_FLOOR * max(np.trace(cov), 1e-300)
    if eigs.min() < floor:
        raise InvalidCovariance(
            f"{name} has eigenvalue {eigs.min():.3e} below the PSD floor {floor:.3e}"
        )


def _clamp_psd(cov: np.ndarray) -> np.ndarray:
    """Symmetrize and clamp tiny negative eigenvalues (rounding debris) to 0."""
    sym = 0.5 * (cov + cov.T)
    eigs, vecs = np.linalg.eigh(sym)
    if eigs.min() >= 0.0:
        return sym
    return (vecs * np.clip(eigs, 0.0, None)) @ vecs.T


@dataclass(frozen=True)
class JointGaussian:
    """Gaussian on R^(q+r) with the first q coordinates as X and the last r as Y."""

    q: int
    r: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        if self.q < 1 or self.r < 1:
            raise DimensionMismatch("q and r must be positive")
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        d = self.q + self.r
        if mean.shape != (d,):
            raise DimensionMismatch(f"mean must have length {d}, got {mean.shape}")
        if cov.shape != (d, d):
            raise DimensionMismatch(f"cov must be {d}x{d}, got {cov.shape}")
        _check_symmetric(cov)
        _check_psd(cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def mean_x(self) -> np.ndarray:
        return self.mean[: self.q]

    @property
    def mean_y(self) -> np.ndarray:
        return self.mean[self.q:]

    @property
    def cov_xx(self) -> np.ndarray:
        return self.cov[: self.q, : self.q]

    @property
    def cov_xy(self) -> np.ndarray:
        return self.cov[: self.q, self.q:]

    @property
    def cov_yy(self) -> np.ndarray:
        return self.cov[self.q:, self.q:]

    def y_block_condition_number(self) -> float:
        return float(np.linalg.cond(self.cov_yy))


@dataclass(frozen=True)
class ConditionalGaussian:
    """Law of X given Y = y: mean vector, covariance, and regression matrix gamma."""

    mean: np.ndarray
    cov: np.ndarray
    gamma: np.ndarray = field(repr=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        gamma = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        _check_symmetric(cov)
        _check_psd(cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", _clamp_psd(cov))
        object.__setattr__(self, "gamma", gamma)


def condition_on_vector(jg: JointGaussian, y) -> ConditionalGaussian:
    """Condition the X block on Y = y.

    The regression matrix is A = Cov(X, Y) Var(Y)^{-1}; the result has mean
    EX + A (y - EY) and covariance Cov(X) - A Cov(Y, X) (the Schur complement
    of Var(Y) in the joint covariance).
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (jg.r,):
        raise DimensionMismatch(f"y must have length {jg.r}, got {y.shape}")
    syy = jg.cov_yy
    if np.linalg.cond(syy) > COND_NUMBER_GATE:
        raise SingularYBlock(
            f"Var(Y) condition number {np.linalg.cond(syy):.3e} exceeds {COND_NUMBER_GATE:.0e}"
        )
    # A = Sxy Syy^{-1}, via a symmetric solve rather than explicit inversion.
    a = np.linalg.solve(syy, jg.cov_xy.T).T
    mean = jg.mean_x + a @ (y - jg.mean_y)
    cov = jg.cov_xx - a @ jg.cov_xy.T
    return ConditionalGaussian(mean=mean, cov=cov, gamma=a)


def condition_on_scalar(jg: JointGaussian, xi: float) -> ConditionalGaussian:
    """Scalar-Y specialization: gamma_i = Cov(X_i, Y) / Var(Y)."""
    if jg.r != 1:
        raise DimensionMismatch(f"scalar conditioning requires r=1, got r={jg.r}")
    var_y = float(jg.cov_yy[0, 0])
    if var_y <= 0.0:
        raise SingularYBlock(f"Var(Y) = {var_y} is not positive")
    gamma = jg.cov_xy[:, 0] / var_y
    mean = jg.mean_x + gamma * (float(xi) - float(jg.mean_y[0]))
    cov = jg.cov_xx - np.outer(jg.cov_xy[:, 0], jg.cov_xy[:, 0]) / var_y
    return ConditionalGaussian(mean=mean, cov=cov, gamma=gamma.reshape(-1, 1))


def residual_variance(sx2: float, sy2: float, sxy: float) -> float:
    """Variance left in X after conditioning on a correlated scalar Y.

    Returns sx2 - sxy^2/sy2, which equals (1 - rho^2) sx2 whenever sx2 > 0.
    """
    if sy2 <= 0.0:
        raise SingularYBlock(f"sy2 = {sy2} is not positive")
    if sx2 < 0.0:
        raise InvalidCovariance(f"sx2 = {sx2} is negative")
    if sxy * sxy > sx2 * sy2 + 1e-12 * max(sx2 * sy2, 1.0):
        raise InvalidCovariance(
            f"Cauchy-Schwarz violated: sxy^2 = {sxy * sxy} > sx2*sy2 = {sx2 * sy2}"
        )
    out = sx2 - sxy * sxy / sy2
    if sx2 > 0.0:
        rho2 = sxy * sxy / (sx2 * sy2)
        alt = (1.0 - rho2) * sx2
        assert abs(out - alt) <= 1e-12 * max(abs(out), abs(alt), 1.0)
    return max(out, 0.0)


def conjugate_by_transform(t: np.ndarray, jg: JointGaussian, xi: float) -> ConditionalGaussian:
    """Condition (T X, Y) on Y = xi, then map back through T^{-1}.

    Conditioning commutes with invertible changes of basis on the X block,
    so this agrees with conditioning the untransformed system directly.
    """
    t = np.asarray(t, dtype=float)
    if t.shape != (jg.q, jg.q):
        raise DimensionMismatch(f"T must be {jg.q}x{jg.q}, got {t.shape}")
    if np.linalg.cond(t) > COND_NUMBER_GATE:
        raise SingularTransform(f"T condition number {np.linalg.cond(t):.3e} too large")
    q, r = jg.q, jg.r
    mean = np.concatenate([t @ jg.mean_x, jg.mean_y])
    cov = np.empty((q + r, q + r))
    cov[:q, :q] = t @ jg.cov_xx @ t.T
    cov[:q, q:] = t @ jg.cov_xy
    cov[q:, :q] = cov[:q, q:].T
    cov[q:, q:] = jg.cov_yy
    cov = 0.5 * (cov + cov.T)
    transformed = JointGaussian(q=q, r=r, mean=mean, cov=_clamp_psd(cov))
    cond = condition_on_scalar(transformed, xi)
    t_inv = np.linalg.inv(t)
    return ConditionalGaussian(
        mean=t_inv @ cond.mean,
        cov=t_inv @ cond.cov @ t_inv.T,
        gamma=t_inv @ cond.gamma,
    )
