"""
Particle learning for GP regression and classification.

Each update resamples particles by their one-step predictive probability of
the new observation, then propagates the resampled sufficient information
deterministically (kernel parameters copied, K grown by the partitioned
inverse) and optionally rejuvenates the kernel parameters with one MH step.

Every particle slot owns a seeded random stream and one further stream drives
resampling and initialisation, so a run is reproducible whatever the number
of worker threads.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from django.conf import settings
from scipy.special import logsumexp

from . import classify, gp
from .classify import ClassSuffInfo
from .exceptions import (
    DecompositionError,
    DegenerateDesignError,
    ImproperPosteriorError,
    PLGPError,
    SnapshotError,
    WeightError,
)
from .kernel import KernelParams, as_design, build_corr, cross_corr, extend_inverse
from .utils import to_json

logger = logging.getLogger(__name__)

REGRESSION = 'regression'
CLASSIFICATION = 'classification'
RESAMPLE_SCHEMES = ('multinomial', 'systematic')
SNAPSHOT_FORMAT = 'plgp-particles'


@dataclass
class EngineConfig:
    """Tuning of a particle learning run."""

    n_particles: int = 200
    t0: int = 5
    init_mh_rounds: int = 2000
    init_thin: int = 10
    rejuvenate: bool = True
    window_u: float = 4.0
    window_l: float = 3.0
    window_gamma: float = 0.0
    prior: gp.PriorSpec = field(default_factory=gp.PriorSpec)
    resample_scheme: str = 'multinomial'
    seed: int = 1
    class_samples: int = 100
    fold_size: int = 10
    workers: int = 1

    def __post_init__(self):
        if not (self.window_u > self.window_l > 0):
            raise PLGPError(f'window needs u > l > 0, got ({self.window_u}, {self.window_l})')
        if self.resample_scheme not in RESAMPLE_SCHEMES:
            raise PLGPError(f'unknown resample scheme {self.resample_scheme!r}')
        if self.n_particles < 1 or self.init_thin < 1 or self.t0 < 0:
            raise PLGPError('particle count and thinning must be positive, t0 non-negative')
        if self.class_samples < 1 or self.fold_size < 1 or self.workers < 1:
            raise PLGPError('class samples, fold size and workers must be positive')

    @classmethod
    def from_settings(cls, kind=REGRESSION, **overrides):
        """Defaults from the PLGP_* settings; classification gets the proper latent prior."""
        rate = settings.PLGP_PRIOR_RATE
        if kind == CLASSIFICATION:
            a, b = settings.PLGP_CLASS_PRIOR
            prior = gp.PriorSpec(a=a, b=b, lambda_d=rate, lambda_g=rate, linear_mean=False)
        else:
            prior = gp.PriorSpec(lambda_d=rate, lambda_g=rate)
        values = dict(
            n_particles=settings.PLGP_PARTICLES,
            init_mh_rounds=settings.PLGP_INIT_MH_ROUNDS,
            init_thin=settings.PLGP_INIT_THIN,
            rejuvenate=settings.PLGP_REJUVENATE,
            window_u=settings.PLGP_WINDOW[0],
            window_l=settings.PLGP_WINDOW[1],
            window_gamma=settings.PLGP_WINDOW_GAMMA,
            prior=prior,
            resample_scheme=settings.PLGP_RESAMPLE,
            seed=settings.PLGP_SEED,
            class_samples=settings.PLGP_CLASS_SAMPLES,
            fold_size=settings.PLGP_GIBBS_FOLD,
            workers=settings.PLGP_WORKERS,
        )
        values.update(overrides)
        return cls(**values)

    def window(self, t):
        """Proposal window (u, l), narrowed as (u, l) * (1 + 0.1 (t - t0))^gamma."""
        factor = (1.0 + 0.1 * max(t - self.t0, 0)) ** self.window_gamma
        return self.window_u * factor, self.window_l * factor

    def to_dict(self):
        values = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != 'prior'}
        values['prior'] = self.prior.to_dict()
        return values

    @classmethod
    def from_dict(cls, values):
        values = dict(values)
        values['prior'] = gp.PriorSpec(**values['prior'])
        return cls(**values)


def parallel_map(workers, fn, items):
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(fn, items))
    return [fn(item) for item in items]


def regression_state(params, X, Y, prior):
    """Sufficient information for kernel ``params`` built from scratch."""
    return gp.compute_suffstats(build_corr(X, params), X, Y, prior, params=params)


def latent_state(params, X, latents, prior):
    return regression_state(params, X, latents, prior)


def propose_window(params, window, rng):
    """Uniform positive sliding window: d* ~ Unif(l d / u, u d / l), same for g."""
    u, l = window
    return KernelParams(
        d=float(rng.uniform(l * params.d / u, u * params.d / l)),
        g=float(rng.uniform(l * params.g / u, u * params.g / l)),
    )


def mh_step(S, X, Y, window, rng, proposal=None):
    """One random-walk MH update of (d, g) jointly; returns (state, accepted).

    The window width scales with the current value, so the ratio carries the
    proposal correction d / d* and g / g*. A proposal whose matrices are not
    positive definite is rejected.
    """
    if proposal is None:
        proposal = propose_window(S.params, window, rng)
    u, l = window
    if not (l * S.params.d / u <= proposal.d <= u * S.params.d / l
            and l * S.params.g / u <= proposal.g <= u * S.params.g / l):
        return S, False
    try:
        candidate = regression_state(proposal, X, Y, S.prior)
        log_ratio = gp.log_posterior(candidate, Y) - gp.log_posterior(S, Y)
    except (DecompositionError, DegenerateDesignError):
        return S, False
    log_ratio += np.log(S.params.d / proposal.d) + np.log(S.params.g / proposal.g)
    if np.log(rng.uniform()) < log_ratio:
        return candidate, True
    return S, False


def independence_step(S, X, Y, rng):
    """MH with a fresh prior draw as proposal; accepts on the marginal likelihood ratio."""
    proposal = S.prior.sample_params(rng)
    try:
        candidate = regression_state(proposal, X, Y, S.prior)
        log_ratio = gp.log_marginal(candidate, Y) - gp.log_marginal(S, Y)
    except (DecompositionError, DegenerateDesignError):
        return S, False
    if np.log(rng.uniform()) < log_ratio:
        return candidate, True
    return S, False


def _prior_state(X, Y, prior, rng, attempts=100):
    for _ in range(attempts):
        try:
            return regression_state(prior.sample_params(rng), X, Y, prior)
        except (DecompositionError, DegenerateDesignError):
            continue
    raise DecompositionError('could not draw kernel parameters with a positive definite K')


def _class_prior_state(X, C, n_classes, prior, rng):
    per_class = tuple(
        _prior_state(X, np.zeros(X.shape[0]), prior, rng) for _ in range(n_classes - 1)
    )
    return ClassSuffInfo(M=n_classes, per_class=per_class, latents=np.zeros((n_classes - 1, X.shape[0])))


def _class_kernel_steps(S, X, rng, step):
    per_class = []
    accepted = 0
    for k, S_k in enumerate(S.per_class):
        S_k, ok = step(S_k, X, S.latents[k], rng)
        per_class.append(S_k)
        accepted += ok
    return replace(S, per_class=tuple(per_class)), accepted / max(len(per_class), 1)


@dataclass
class ParticleSet:
    """N particles sharing one growing data record."""

    kind: str
    particles: list
    X: np.ndarray
    Z: np.ndarray
    t0: int
    config: EngineConfig
    rngs: list
    n_classes: int = None
    history: list = field(default_factory=list)

    @property
    def N(self):
        return len(self.particles)

    @property
    def t(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def resample_rng(self):
        return self.rngs[-1]

    def unique_params(self):
        """Number of distinct kernel parameterisations among the particles."""
        if self.kind == REGRESSION:
            keys = {S.params.as_tuple() for S in self.particles}
        else:
            keys = {tuple(p.as_tuple() for p in S.params) for S in self.particles}
        return len(keys)

    def max_inverse_residual(self):
        """Largest ||K K^-1 - I||_inf over every particle's cached inverse."""
        mats = [S.K for S in self.particles] if self.kind == REGRESSION else [
            S_k.K for S in self.particles for S_k in S.per_class
        ]
        return max((K.residual() for K in mats), default=0.0)

    def log_posteriors(self):
        """Unnormalised log posterior of every particle's kernel parameters."""
        if self.kind == REGRESSION:
            return np.array([gp.log_posterior(S, self.Z) for S in self.particles])
        return np.array([
            sum(gp.log_posterior(S_k, S.latents[k]) for k, S_k in enumerate(S.per_class))
            for S in self.particles
        ])

    def predict(self, Xnew):
        """Particle-averaged predictive mean and mixture variance (regression)."""
        return mixture_predict(self.particles, self.X, self.Z, Xnew, workers=self.config.workers)

    def class_probs(self, Xnew, L=None):
        """Particle-averaged class probabilities, shape (m, M)."""
        L = L or self.config.class_samples
        return mixture_class_probs(
            self.particles, self.X, Xnew, L, self.rngs[:self.N], workers=self.config.workers,
        )


def mixture_predict(states, X, Y, Xnew, workers=1):
    """Mean and variance of an equally weighted mixture of Student-t predictives."""
    Xnew = as_design(Xnew)

    def one(S):
        pt = gp.predict_many(S, X, Y, Xnew)
        var = pt.scale * pt.dof / (pt.dof - 2.0) if pt.dof > 2 else np.full_like(pt.scale, np.inf)
        return pt.mean, var

    results = parallel_map(workers, one, states)
    means = np.array([r[0] for r in results])
    variances = np.array([r[1] for r in results])
    mean = means.mean(axis=0)
    var = variances.mean(axis=0) + means.var(axis=0)
    return mean, var


def mixture_class_probs(states, X, Xnew, L, rngs, workers=1):
    Xnew = as_design(Xnew)
    probs = parallel_map(
        workers,
        lambda item: classify.class_predictive_many(item[0], X, Xnew, L, item[1]),
        zip(states, rngs),
    )
    return np.mean(probs, axis=0)


def _streams(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n + 1)]


def init_particles(X, Z, config, kind=REGRESSION, n_classes=None):
    """Particles at time t0 = len(Z).

    Regression with an improper prior runs an independence MH chain with
    prior proposals, keeping every ``init_thin``-th state. A proper prior with
    no data starts from iid prior draws. Classification at t0 > 0 interleaves
    the independence kernel moves of every latent process with one Gibbs
    sweep of the latents per round.
    """
    X = as_design(X)
    Z = np.asarray(Z, dtype=int if kind == CLASSIFICATION else float).reshape(-1)
    t0 = Z.shape[0]
    prior = config.prior
    q = prior.n_basis(X.shape[1])
    if not prior.proper and t0 <= q:
        raise ImproperPosteriorError(f't0 = {t0} must exceed p + 1 = {q} under an improper prior')
    if kind == CLASSIFICATION:
        if not prior.proper:
            raise ImproperPosteriorError('classification requires a proper variance prior (a, b > 0)')
        if n_classes is None or n_classes < 2:
            raise PLGPError('classification needs at least two classes')

    rngs = _streams(config.seed, config.n_particles)
    rng = rngs[-1]
    N = config.n_particles

    if t0 == 0:
        if kind == REGRESSION:
            particles = [_prior_state(X, Z, prior, rng) for _ in range(N)]
        else:
            particles = [_class_prior_state(X, Z, n_classes, prior, rng) for _ in range(N)]
        rate = float('nan')
    else:
        particles, rate = _init_chain(X, Z, config, kind, n_classes, rng)

    ps = ParticleSet(
        kind=kind, particles=particles, X=X, Z=Z, t0=t0, config=config,
        rngs=rngs, n_classes=n_classes,
    )
    ps.history.append({
        't': t0, 'ess': float(N), 'unique': ps.unique_params(), 'accept': rate,
    })
    logger.info(
        'initialised %d %s particles at t0=%d (%d unique, acceptance %.3f)',
        N, kind, t0, ps.unique_params(), rate,
    )
    return ps


def _init_chain(X, Z, config, kind, n_classes, rng):
    prior = config.prior
    if kind == REGRESSION:
        state = _prior_state(X, Z, prior, rng)

        def advance(S):
            return independence_step(S, X, Z, rng)
    else:
        state = _class_prior_state(X, Z, n_classes, prior, rng)

        def advance(S):
            S, rate = _class_kernel_steps(S, X, rng, independence_step)
            S = classify.gibbs_propagate(S, X, Z, config.fold_size, rng)
            return S, rate

    saved = []
    accepted = 0.0
    for r in range(1, config.init_mh_rounds + 1):
        state, ok = advance(state)
        accepted += ok
        if r % config.init_thin == 0:
            saved.append(state)
    if not saved:
        saved.append(state)

    N = config.n_particles
    if len(saved) >= N:
        particles = saved[-N:]
    else:
        particles = [saved[i] for i in rng.choice(len(saved), size=N)]
    return particles, accepted / max(config.init_mh_rounds, 1)


def log_weights(ps, x, z):
    """Log one-step predictive probability of (x, z) under every particle."""
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    if ps.kind == REGRESSION:
        def weight(i):
            pt = gp.predict(ps.particles[i], ps.X, ps.Z, x[0])
            return float(gp.log_predict_density(pt, z))
    else:
        def weight(i):
            probs = classify.class_predictive(
                ps.particles[i], ps.X, x[0], ps.config.class_samples, ps.rngs[i],
            )
            with np.errstate(divide='ignore'):
                return float(np.log(probs[int(z)]))
    return np.array(parallel_map(ps.config.workers, weight, range(ps.N)))


def normalise(logw):
    """Max-subtracted, normalised weights; raises when nothing is usable."""
    logw = np.asarray(logw, dtype=float)
    bad = ~np.isfinite(logw)
    if np.all(bad):
        raise WeightError('every resample weight is zero or NaN', particles=np.flatnonzero(bad))
    if np.any(np.isnan(logw)):
        raise WeightError('resample weights contain NaN', particles=np.flatnonzero(np.isnan(logw)))
    return np.exp(logw - logsumexp(logw[~bad])) * ~bad


def effective_sample_size(weights):
    weights = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(weights ** 2))


def draw_indices(weights, rng, scheme='multinomial'):
    """N ancestor indices drawn with replacement from normalised weights."""
    N = len(weights)
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    if scheme == 'systematic':
        positions = (np.arange(N) + rng.uniform()) / N
    else:
        positions = rng.uniform(size=N)
    return np.minimum(np.searchsorted(cumulative, positions, side='right'), N - 1)


def resample(ps, x, z):
    """Ancestor indices ζ for the next update, plus the normalised weights."""
    weights = normalise(log_weights(ps, x, z))
    return draw_indices(weights, ps.resample_rng, ps.config.resample_scheme), weights


def _grow(S_K, params, X, x_new):
    k = cross_corr(X, x_new, params.d)[:, 0]
    try:
        return extend_inverse(S_K, k, 1.0 + params.g)
    except DecompositionError as exc:
        logger.warning('partitioned inverse lost positive definiteness (%s); rebuilding K', exc)
        return build_corr(np.vstack([X, x_new]), params)


def propagate(S, X, Z, x_new, z_new, config, rng):
    """Sufficient information at t + 1: parameters copied, K extended.

    Classification first draws the new latents from the particle's predictive
    and then runs a blocked Gibbs sweep over all latents.
    """
    x_new = np.atleast_1d(np.asarray(x_new, dtype=float)).reshape(1, -1)
    X_next = np.vstack([X, x_new])
    Z_next = np.append(Z, z_new)
    if isinstance(S, ClassSuffInfo):
        new_latents = classify.sample_new_latents(S, X, x_new[0], rng)
        per_class = tuple(
            replace(S_k, K=_grow(S_k.K, S_k.params, X, x_new)) for S_k in S.per_class
        )
        grown = ClassSuffInfo(
            M=S.M, per_class=per_class,
            latents=np.hstack([S.latents, new_latents.reshape(-1, 1)]),
        )
        return classify.gibbs_propagate(grown, X_next, Z_next.astype(int), config.fold_size, rng)

    K = _grow(S.K, S.params, X, x_new)
    return gp.compute_suffstats(K, X_next, Z_next, S.prior, params=S.params)


def rejuvenate(S, X, Z, t, config, rng):
    """One MH move of the kernel parameters with the window narrowed for time t."""
    window = config.window(t)
    if isinstance(S, ClassSuffInfo):
        return _class_kernel_steps(S, X, rng, lambda S_k, X_, Y_, r: mh_step(S_k, X_, Y_, window, r))
    return mh_step(S, X, Z, window, rng)


def pl_update(ps, x, z):
    """Resample, propagate and (optionally) rejuvenate with one new observation."""
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    if x.shape[1] != ps.p:
        raise PLGPError(f'new point has dimension {x.shape[1]}, data have {ps.p}')
    z = int(z) if ps.kind == CLASSIFICATION else float(z)
    ancestors, weights = resample(ps, x, z)
    ess = effective_sample_size(weights)

    X_next = np.vstack([ps.X, x])
    Z_next = np.append(ps.Z, z)
    t_next = ps.t + 1
    config = ps.config

    def move(i):
        rng = ps.rngs[i]
        S = propagate(ps.particles[ancestors[i]], ps.X, ps.Z, x[0], z, config, rng)
        accepted = float('nan')
        if config.rejuvenate:
            S, accepted = rejuvenate(S, X_next, Z_next, t_next, config, rng)
        return S, accepted

    moved = parallel_map(config.workers, move, range(ps.N))
    ps.particles = [S for S, _ in moved]
    ps.X = X_next
    ps.Z = Z_next
    rate = float(np.nanmean([a for _, a in moved])) if config.rejuvenate else float('nan')
    entry = {'t': ps.t, 'ess': ess, 'unique': ps.unique_params(), 'accept': rate}
    ps.history.append(entry)
    logger.debug('PL update t=%(t)d ess=%(ess).1f unique=%(unique)d accept=%(accept).3f', entry)
    return ps


def run_mcmc(X, Z, iters, thin, config, rng, kind=REGRESSION, n_classes=None):
    """Batch MH chain on the full data with a fixed window, thinned.

    Classification alternates kernel moves for each latent process with a
    blocked Gibbs sweep of the latents.
    """
    X = as_design(X)
    Z = np.asarray(Z, dtype=int if kind == CLASSIFICATION else float).reshape(-1)
    window = (config.window_u, config.window_l)
    if kind == REGRESSION:
        state = _prior_state(X, Z, config.prior, rng)
    else:
        state = _class_prior_state(X, Z, n_classes, config.prior, rng)

    samples = []
    accepted = 0.0
    for i in range(1, iters + 1):
        if kind == REGRESSION:
            state, ok = mh_step(state, X, Z, window, rng)
        else:
            state, ok = _class_kernel_steps(
                state, X, rng, lambda S_k, X_, Y_, r: mh_step(S_k, X_, Y_, window, r),
            )
            state = classify.gibbs_propagate(state, X, Z, config.fold_size, rng)
        accepted += ok
        if i % thin == 0:
            samples.append(state)
    logger.info('MCMC: %d iterations, %d samples kept, acceptance %.3f',
                iters, len(samples), accepted / max(iters, 1))
    return samples


def to_snapshot(ps):
    """Structured snapshot; matrices are left out and rebuilt on load."""
    if ps.kind == REGRESSION:
        particles = [{'params': [list(S.params.as_tuple())]} for S in ps.particles]
    else:
        particles = [
            {'params': [list(p.as_tuple()) for p in S.params], 'latents': S.latents.tolist()}
            for S in ps.particles
        ]
    return {
        'format': SNAPSHOT_FORMAT,
        'version': settings.PLGP_SNAPSHOT_VERSION,
        'kind': ps.kind,
        'n_classes': ps.n_classes,
        't': ps.t,
        't0': ps.t0,
        'config': ps.config.to_dict(),
        'X': ps.X.tolist(),
        'Z': ps.Z.tolist(),
        'particles': particles,
        'rng_states': [rng.bit_generator.state for rng in ps.rngs],
        'history': ps.history,
    }


def from_snapshot(payload):
    if payload.get('format') != SNAPSHOT_FORMAT:
        raise SnapshotError(f'not a particle snapshot: format {payload.get("format")!r}')
    if payload.get('version') != settings.PLGP_SNAPSHOT_VERSION:
        raise SnapshotError(f'unsupported snapshot version {payload.get("version")!r}')
    kind = payload['kind']
    config = EngineConfig.from_dict(payload['config'])
    X = np.asarray(payload['X'], dtype=float).reshape(payload['t'], -1)
    Z = np.asarray(payload['Z'], dtype=int if kind == CLASSIFICATION else float)
    if Z.shape[0] != payload['t']:
        raise SnapshotError('data record length does not match t')

    particles = []
    for entry in payload['particles']:
        params = [KernelParams(d=d, g=g) for d, g in entry['params']]
        if kind == REGRESSION:
            particles.append(regression_state(params[0], X, Z, config.prior))
        else:
            latents = np.asarray(entry['latents'], dtype=float).reshape(len(params), -1)
            per_class = tuple(
                latent_state(p, X, latents[k], config.prior) for k, p in enumerate(params)
            )
            particles.append(ClassSuffInfo(M=payload['n_classes'], per_class=per_class, latents=latents))

    rngs = []
    for state in payload['rng_states']:
        rng = np.random.default_rng()
        rng.bit_generator.state = state
        rngs.append(rng)
    if len(rngs) != len(particles) + 1:
        raise SnapshotError('snapshot needs one random stream per particle plus one')
    return ParticleSet(
        kind=kind, particles=particles, X=X, Z=Z, t0=payload['t0'], config=config,
        rngs=rngs, n_classes=payload['n_classes'], history=list(payload.get('history', [])),
    )


def save_snapshot(ps, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(to_snapshot(ps)), encoding='utf-8')
    return path


def load_snapshot(path):
    try:
        payload = json.loads(Path(path).read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise SnapshotError(f'{path}: not valid JSON ({exc})') from exc
    return from_snapshot(payload)
