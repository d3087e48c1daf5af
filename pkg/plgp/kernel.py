"""
Isotropic Gaussian correlation with a nugget, and the dense linear algebra
shared by the regression and classification code.

    K(x, x') = exp(-||x - x'||^2 / d) + g * delta(x, x')

Inside correlation matrices the delta is on row identity, so two coincident
design rows correlate at 1 off the diagonal and the nugget keeps the matrix
positive definite.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.spatial.distance import cdist

from .exceptions import DecompositionError, DimensionError, PLGPError

logger = logging.getLogger(__name__)

JITTER = 1e-8


@dataclass(frozen=True)
class KernelParams:
    """Range ``d`` and nugget ``g`` of the correlation function."""

    d: float
    g: float

    def __post_init__(self):
        if not (np.isfinite(self.d) and self.d > 0):
            raise PLGPError(f'range d must be positive, got {self.d!r}')
        if not (np.isfinite(self.g) and self.g > 0):
            raise PLGPError(f'nugget g must be positive, got {self.g!r}')

    def as_tuple(self):
        return (float(self.d), float(self.g))


@dataclass(frozen=True, eq=False)
class CorrMatrix:
    """A correlation matrix with its cached inverse and log-determinant."""

    values: np.ndarray
    inverse: np.ndarray
    log_det: float

    @property
    def n(self):
        return self.values.shape[0]

    def residual(self):
        """Infinity norm of K K^-1 - I, a cheap health check of the cache."""
        if self.n == 0:
            return 0.0
        return float(np.abs(self.values @ self.inverse - np.eye(self.n)).max())


def as_design(X):
    """Coerce ``X`` to a 2-d float array with one row per point."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise DimensionError(f'design must be 2-d, got shape {X.shape}')
    return X


def cross_corr(X1, X2, d):
    """K*(X1, X2) without nugget: exp(-squared distance / d)."""
    X1 = as_design(X1)
    X2 = as_design(X2)
    if X1.shape[1] != X2.shape[1]:
        raise DimensionError(
            f'points have dimension {X1.shape[1]} and {X2.shape[1]}'
        )
    if X1.shape[0] == 0 or X2.shape[0] == 0:
        return np.zeros((X1.shape[0], X2.shape[0]))
    return np.exp(-cdist(X1, X2, 'sqeuclidean') / d)


def corr(x, x_other, params):
    """Scalar correlation; the nugget is added when the points coincide exactly."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_other = np.atleast_1d(np.asarray(x_other, dtype=float))
    if x.shape != x_other.shape:
        raise DimensionError(
            f'points have dimension {x.shape[0]} and {x_other.shape[0]}'
        )
    value = float(np.exp(-np.sum((x - x_other) ** 2) / params.d))
    if np.array_equal(x, x_other):
        value += params.g
    return value


def cholesky(A):
    """Lower Cholesky factor of ``A``, retrying once with diagonal jitter."""
    try:
        return cho_factor(A, lower=True, check_finite=False)
    except LinAlgError:
        logger.debug('cholesky failed on %dx%d matrix, retrying with jitter', *A.shape)
    try:
        return cho_factor(A + JITTER * np.eye(A.shape[0]), lower=True, check_finite=False)
    except LinAlgError as exc:
        raise DecompositionError(
            f'matrix of size {A.shape[0]} is not positive definite'
        ) from exc


def _from_factor(values, factor):
    n = values.shape[0]
    inverse = cho_solve(factor, np.eye(n), check_finite=False)
    inverse = 0.5 * (inverse + inverse.T)
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return CorrMatrix(values=values, inverse=inverse, log_det=log_det)


def build_corr(X, params):
    """Correlation matrix of the design rows, with inverse and log-determinant."""
    X = as_design(X)
    if not np.all(np.isfinite(X)):
        raise PLGPError('design contains non-finite values')
    values = cross_corr(X, X, params.d)
    values[np.diag_indices_from(values)] = 1.0 + params.g
    if values.shape[0] == 0:
        return CorrMatrix(values=values, inverse=values.copy(), log_det=0.0)
    return _from_factor(values, cholesky(values))


def from_values(values):
    """Wrap an arbitrary symmetric positive definite matrix."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] == 0:
        return CorrMatrix(values=values, inverse=values.copy(), log_det=0.0)
    return _from_factor(values, cholesky(values))


def extend_inverse(K, k_new, k_self):
    """Grow ``K`` by one point using the partitioned inverse, in O(t^2).

    With v = K^-1 k and mu = 1 / (k_self - k^T v), the new inverse is
    [[K^-1 + mu v v^T, -mu v], [-mu v^T, mu]] and log|K| gains -log(mu).
    """
    k_new = np.asarray(k_new, dtype=float).reshape(-1)
    t = K.n
    if k_new.shape[0] != t:
        raise DimensionError(f'expected {t} correlations, got {k_new.shape[0]}')

    v = K.inverse @ k_new
    conditional = k_self - float(k_new @ v)
    if not np.isfinite(conditional) or conditional <= 0.0:
        raise DecompositionError(
            f'conditional variance {conditional:.3g} is not positive',
            quantity=conditional,
        )
    mu = 1.0 / conditional

    values = np.empty((t + 1, t + 1))
    values[:t, :t] = K.values
    values[:t, t] = k_new
    values[t, :t] = k_new
    values[t, t] = k_self

    inverse = np.empty((t + 1, t + 1))
    inverse[:t, :t] = K.inverse + mu * np.outer(v, v)
    inverse[:t, t] = -mu * v
    inverse[t, :t] = -mu * v
    inverse[t, t] = mu
    return CorrMatrix(values=values, inverse=inverse, log_det=K.log_det - np.log(mu))


def block_solve(K, B):
    """K^-1 B through a Cholesky solve rather than an explicit inverse.

    ``K`` is a CorrMatrix or any symmetric positive definite array.
    """
    values = K.values if isinstance(K, CorrMatrix) else np.asarray(K, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.shape[0] != values.shape[0]:
        raise DimensionError(f'right-hand side has {B.shape[0]} rows, matrix has {values.shape[0]}')
    if values.shape[0] == 0:
        return B.copy()
    return cho_solve(cholesky(values), B, check_finite=False)
