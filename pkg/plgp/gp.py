"""
Gaussian process regression with the mean coefficients and the variance
integrated out.

With priors beta ∝ 1 and sigma^2 ~ IG(a/2, b/2), everything a particle needs
is captured by its correlation matrix and three statistics

    V_beta = (F^T K^-1 F)^-1
    beta~  = V_beta F^T K^-1 Y
    psi    = Y^T K^-1 Y - beta~^T V_beta^-1 beta~

from which the marginal likelihood and the Student-t predictive follow in
closed form. F has rows [1, x^T] (q = p + 1 columns) for regression and no
columns at all for classification latents (q = 0).
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import gammaln

from .exceptions import (
    DecompositionError,
    DegenerateDesignError,
    DimensionError,
    ImproperPosteriorError,
    PLGPError,
)
from .kernel import KernelParams, as_design, block_solve, cholesky, cross_corr

logger = logging.getLogger(__name__)

PSI_SLACK = 1e-10
VARIANCE_SLACK = 1e-10
VARIANCE_FLOOR = 1e-12
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class PriorSpec:
    """Variance prior IG(a/2, b/2), Exp rates for d and g, and the mean trend."""

    a: float = 0.0
    b: float = 0.0
    lambda_d: float = 5.0
    lambda_g: float = 5.0
    linear_mean: bool = True

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise PLGPError('variance prior parameters must be non-negative')
        if (self.a == 0) != (self.b == 0):
            raise PLGPError('a and b must be both zero (improper) or both positive')
        if self.lambda_d <= 0 or self.lambda_g <= 0:
            raise PLGPError('exponential prior rates must be positive')

    @property
    def proper(self):
        return self.a > 0

    def n_basis(self, p):
        """Number of mean-basis columns q for a p-dimensional input."""
        return p + 1 if self.linear_mean else 0

    def log_prior(self, params):
        """Log density of the independent exponential priors on d and g."""
        return (
            np.log(self.lambda_d) - self.lambda_d * params.d
            + np.log(self.lambda_g) - self.lambda_g * params.g
        )

    def sample_params(self, rng):
        return KernelParams(
            d=float(rng.exponential(1.0 / self.lambda_d)),
            g=float(rng.exponential(1.0 / self.lambda_g)),
        )

    def to_dict(self):
        return {
            'a': self.a,
            'b': self.b,
            'lambda_d': self.lambda_d,
            'lambda_g': self.lambda_g,
            'linear_mean': self.linear_mean,
        }


@dataclass(frozen=True, eq=False)
class RegressionSuffInfo:
    """Sufficient information of one GP: kernel, K and the integrated statistics."""

    params: object
    K: object
    beta_tilde: np.ndarray
    V_beta: np.ndarray
    psi: float
    prior: PriorSpec
    log_det_V: float = 0.0

    @property
    def t(self):
        return self.K.n

    @property
    def q(self):
        return self.beta_tilde.shape[0]

    @property
    def dof(self):
        return self.prior.a + self.t - self.q


@dataclass(frozen=True)
class PredictiveT:
    """Location-scale Student-t: mean, squared scale and degrees of freedom.

    Fields are floats for a single point and arrays for a batch of points.
    """

    mean: object
    scale: object
    dof: float

    @property
    def sd(self):
        return np.sqrt(self.scale)


@dataclass(frozen=True, eq=False)
class BlockPredictive:
    """Multivariate Student-t for a block of points given the rest."""

    mean: np.ndarray
    scale: np.ndarray
    dof: float
    _factor: tuple = field(default=None, repr=False)

    def sample(self, rng):
        """One joint draw: mean + L z sqrt(dof / chi2_dof)."""
        factor = self._factor if self._factor is not None else cholesky(self.scale)
        lower = np.tril(factor[0])
        z = rng.standard_normal(self.mean.shape[0])
        w = rng.chisquare(self.dof) / self.dof
        return self.mean + lower @ z / np.sqrt(w)


def mean_basis(X, prior):
    """F: rows [1, x^T] for a linear trend, an empty matrix otherwise."""
    X = as_design(X)
    if prior.linear_mean:
        return np.hstack([np.ones((X.shape[0], 1)), X])
    return np.zeros((X.shape[0], 0))


def _check_propriety(t, q, prior):
    if prior.a + t - q <= 0:
        raise ImproperPosteriorError(
            f'{t} data points are too few for an improper variance prior with {q} mean terms'
        )


def _statistics(K_inverse, F, Y, prior):
    """(beta~, V_beta, psi, log|V_beta|) given an inverse correlation matrix."""
    KiY = K_inverse @ Y
    yky = float(Y @ KiY)
    q = F.shape[1]
    if q == 0:
        beta = np.zeros(0)
        V = np.zeros((0, 0))
        psi = yky
        log_det_V = 0.0
    else:
        A = F.T @ (K_inverse @ F)
        A = 0.5 * (A + A.T)
        if not np.all(np.isfinite(A)) or np.linalg.cond(A) > CONDITION_LIMIT:
            raise DegenerateDesignError('F^T K^-1 F is singular; the design is degenerate')
        try:
            factor = cho_factor(A, lower=True, check_finite=False)
        except LinAlgError as exc:
            raise DegenerateDesignError('F^T K^-1 F is not positive definite') from exc
        V = cho_solve(factor, np.eye(q), check_finite=False)
        V = 0.5 * (V + V.T)
        beta = V @ (F.T @ KiY)
        psi = yky - float(beta @ A @ beta)
        log_det_V = -2.0 * float(np.sum(np.log(np.diag(factor[0]))))

    if psi < 0.0:
        if psi < -PSI_SLACK * max(1.0, abs(yky)):
            raise DecompositionError(f'psi = {psi:.3g} is negative', quantity=psi)
        psi = 0.0
    return beta, V, psi, log_det_V


def compute_suffstats(K, X, Y, prior, params=None):
    """Build a particle's sufficient information from its correlation matrix."""
    X = as_design(X)
    Y = np.asarray(Y, dtype=float).reshape(-1)
    if X.shape[0] != Y.shape[0] or K.n != Y.shape[0]:
        raise DimensionError(
            f'design has {X.shape[0]} rows, responses {Y.shape[0]}, K is {K.n}x{K.n}'
        )
    F = mean_basis(X, prior)
    _check_propriety(Y.shape[0], F.shape[1], prior)
    beta, V, psi, log_det_V = _statistics(K.inverse, F, Y, prior)
    return RegressionSuffInfo(
        params=params, K=K, beta_tilde=beta, V_beta=V, psi=psi, prior=prior, log_det_V=log_det_V,
    )


def with_responses(S, X, Y):
    """Same kernel and K, statistics recomputed for new responses (latents)."""
    F = mean_basis(X, S.prior)
    beta, V, psi, log_det_V = _statistics(S.K.inverse, F, np.asarray(Y, dtype=float), S.prior)
    return replace(S, beta_tilde=beta, V_beta=V, psi=psi, log_det_V=log_det_V)


def log_marginal(S, Y):
    """log p(Y | K) with beta and sigma^2 integrated out.

    The (b/2)^(a/2) / Gamma(a/2) factor is dropped for the improper prior,
    where it is a constant.
    """
    t = S.t
    if np.shape(Y)[0] != t:
        raise DimensionError(f'{np.shape(Y)[0]} responses for {t} data points')
    a, b = S.prior.a, S.prior.b
    n = t - S.q
    _check_propriety(t, S.q, S.prior)
    value = (
        0.5 * (S.log_det_V - S.K.log_det)
        + gammaln(0.5 * (a + n))
        - 0.5 * n * np.log(2.0 * np.pi)
        - 0.5 * (a + n) * np.log(0.5 * (b + S.psi))
    )
    if a > 0:
        value += 0.5 * a * np.log(0.5 * b) - gammaln(0.5 * a)
    return float(value)


def log_posterior(S, Y):
    """Unnormalised log posterior of the kernel parameters."""
    return log_marginal(S, Y) + S.prior.log_prior(S.params)


def predict_many(S, X, Y, Xnew):
    """Student-t predictive of new observations at every row of ``Xnew``."""
    X = as_design(X)
    Xnew = as_design(Xnew)
    Y = np.asarray(Y, dtype=float).reshape(-1)
    dof = S.dof
    if dof <= 0:
        raise ImproperPosteriorError(f'predictive degrees of freedom {dof} are not positive')

    k = cross_corr(X, Xnew, S.params.d)
    KiK = S.K.inverse @ k
    F = mean_basis(X, S.prior)
    f = mean_basis(Xnew, S.prior)

    resid = Y - F @ S.beta_tilde
    mean = f @ S.beta_tilde + KiK.T @ resid
    conditional = (1.0 + S.params.g) - np.einsum('ij,ij->j', k, KiK)
    if S.q > 0:
        H = f.T - F.T @ KiK
        conditional = conditional + np.einsum('ij,ij->j', H, S.V_beta @ H)

    if np.any(conditional < -VARIANCE_SLACK):
        raise DecompositionError(
            f'predictive variance {conditional.min():.3g} is negative',
            quantity=float(conditional.min()),
        )
    conditional = np.maximum(conditional, VARIANCE_FLOOR)
    scale = (S.prior.b + S.psi) * conditional / dof
    return PredictiveT(mean=mean, scale=scale, dof=float(dof))


def predict(S, X, Y, x):
    """Student-t predictive at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    pt = predict_many(S, X, Y, x)
    return PredictiveT(mean=float(pt.mean[0]), scale=float(pt.scale[0]), dof=pt.dof)


def log_predict_density(pt, y):
    return stats.t.logpdf(y, df=pt.dof, loc=pt.mean, scale=np.sqrt(pt.scale))


def predict_density(pt, y):
    return np.exp(log_predict_density(pt, y))


def block_predict(S, X, Y, I):
    """Conditional multivariate-t of the responses in block ``I`` given the rest.

    K_{-I,-I}^-1 is read off the cached inverse by the partitioned-inverse
    identity instead of a fresh factorisation.
    """
    X = as_design(X)
    Y = np.asarray(Y, dtype=float).reshape(-1)
    t = S.t
    I = np.asarray(sorted(set(int(i) for i in I)), dtype=int)
    if I.size == 0:
        raise DimensionError('block must contain at least one index')
    R = np.setdiff1d(np.arange(t), I)

    Q = S.K.inverse
    if R.size:
        Q_IR = Q[np.ix_(I, R)]
        R_inverse = Q[np.ix_(R, R)] - Q_IR.T @ block_solve(Q[np.ix_(I, I)], Q_IR)
        R_inverse = 0.5 * (R_inverse + R_inverse.T)
    else:
        R_inverse = np.zeros((0, 0))

    F = mean_basis(X, S.prior)
    F_R, F_I = F[R], F[I]
    q = F.shape[1]
    dof = S.prior.a + R.size - q
    if dof <= 0:
        raise ImproperPosteriorError(f'{R.size} conditioning points are too few for block prediction')
    beta, V, psi, _ = _statistics(R_inverse, F_R, Y[R], S.prior)

    K_IR = S.K.values[np.ix_(I, R)]
    W = K_IR @ R_inverse
    mean = F_I @ beta + W @ (Y[R] - F_R @ beta)
    schur = S.K.values[np.ix_(I, I)] - W @ K_IR.T
    if q > 0:
        H = F_I - W @ F_R
        schur = schur + H @ V @ H.T
    scale = (S.prior.b + psi) / dof * schur
    scale = 0.5 * (scale + scale.T)
    factor = cholesky(scale)
    return BlockPredictive(mean=mean, scale=scale, dof=float(dof), _factor=factor)
