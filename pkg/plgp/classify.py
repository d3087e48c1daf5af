"""
Multi-class GP classification through M - 1 latent GPs.

Class labels are 0-based indices 0..M-1. The latent of the last class is
pinned at zero, and the likelihood is the softmax of the negated latents,
p(c | y) = exp(-y_c) / sum_m exp(-y_m), so a large latent makes its class
unlikely.
"""
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import log_softmax, softmax

from . import gp
from .exceptions import DecompositionError, DimensionError, PLGPError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ClassSuffInfo:
    """One particle of a classification run.

    ``per_class`` holds the M - 1 latent GPs and ``latents`` their values at
    the t design points, one row per GP.
    """

    M: int
    per_class: tuple
    latents: np.ndarray
    accept_rate: float = float('nan')

    def __post_init__(self):
        if len(self.per_class) != self.M - 1:
            raise DimensionError(f'{len(self.per_class)} latent processes for {self.M} classes')
        if self.latents.shape[0] != self.M - 1:
            raise DimensionError(f'latent matrix has {self.latents.shape[0]} rows for {self.M} classes')
        if any(S.t != self.t for S in self.per_class):
            raise DimensionError('latent processes disagree on the data count')

    @property
    def t(self):
        return self.latents.shape[1]

    @property
    def params(self):
        return tuple(S.params for S in self.per_class)


def full_latents(latents):
    """Append the pinned zero latent along the first axis."""
    latents = np.asarray(latents, dtype=float)
    zeros = np.zeros((1,) + latents.shape[1:])
    return np.concatenate([latents, zeros], axis=0)


def softmax_probs(latents_at_x):
    """Class probabilities for full M-vectors of latents (last axis = classes)."""
    return softmax(-np.asarray(latents_at_x, dtype=float), axis=-1)


def softmax_prob(latents_at_x, c):
    return float(softmax_probs(latents_at_x)[c])


def class_predictive_many(S, X, Xnew, L, rng):
    """Monte Carlo class probabilities at every row of ``Xnew``, shape (m, M).

    Draws L latent vectors per point from the product of the per-class
    Student-t predictives and averages their softmax probabilities.
    """
    Xnew = np.atleast_2d(np.asarray(Xnew, dtype=float))
    m = Xnew.shape[0]
    draws = np.zeros((L, m, S.M))
    for k, S_k in enumerate(S.per_class):
        pt = gp.predict_many(S_k, X, S.latents[k], Xnew)
        draws[:, :, k] = pt.mean + np.sqrt(pt.scale) * rng.standard_t(pt.dof, size=(L, m))
    return softmax_probs(draws).mean(axis=0)


def class_predictive(S, X, x, L, rng):
    if L < 1:
        raise PLGPError('at least one Monte Carlo sample is required')
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    return class_predictive_many(S, X, x, L, rng)[0]


def sample_new_latents(S, X, x_new, rng):
    """One independent draw from each latent process's predictive at ``x_new``."""
    x_new = np.atleast_1d(np.asarray(x_new, dtype=float)).reshape(1, -1)
    out = np.empty(S.M - 1)
    for k, S_k in enumerate(S.per_class):
        pt = gp.predict_many(S_k, X, S.latents[k], x_new)
        out[k] = pt.mean[0] + np.sqrt(pt.scale[0]) * rng.standard_t(pt.dof)
    return out


def random_blocks(t, fold_size, rng):
    """Random partition of range(t) into blocks of at most ``fold_size``."""
    if t == 0:
        return []
    n_blocks = int(np.ceil(t / fold_size))
    return np.array_split(rng.permutation(t), n_blocks)


def gibbs_propagate(S, X, labels, fold_size, rng):
    """One randomly blocked MH-within-Gibbs sweep over all latents.

    Each block proposal comes from the GP prior conditional on the other
    latents of the same class, so prior and proposal cancel and acceptance
    depends only on the softmax likelihood of the labels in the block. The
    regression statistics are recomputed once the sweep has finished.
    """
    labels = np.asarray(labels, dtype=int)
    if labels.shape[0] != S.t:
        raise DimensionError(f'{labels.shape[0]} labels for {S.t} latent columns')
    latents = S.latents.copy()
    accepted = proposed = 0

    for k, S_k in enumerate(S.per_class):
        for block in random_blocks(S.t, fold_size, rng):
            try:
                bp = gp.block_predict(S_k, X, latents[k], block)
            except DecompositionError:
                logger.warning('skipping block of %d latents: scale not positive definite', len(block))
                continue
            proposal = bp.sample(rng)
            current = full_latents(latents[:, block]).T
            moved = current.copy()
            moved[:, k] = proposal
            rows = np.arange(len(block))
            log_ratio = float(np.sum(
                log_softmax(-moved, axis=1)[rows, labels[block]]
                - log_softmax(-current, axis=1)[rows, labels[block]]
            ))
            proposed += 1
            if np.log(rng.uniform()) < log_ratio:
                latents[k, block] = proposal
                accepted += 1

    per_class = tuple(
        gp.with_responses(S_k, X, latents[k]) for k, S_k in enumerate(S.per_class)
    )
    rate = accepted / proposed if proposed else float('nan')
    return replace(S, per_class=per_class, latents=latents, accept_rate=rate)
