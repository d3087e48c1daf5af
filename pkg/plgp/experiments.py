"""
Synthetic data, run configuration and the experiment drivers behind the
management commands.

Every driver returns a report dict holding the config echo, the version
string, wall-clock timings per phase, a JSON summary and named result tables
(pandas DataFrames). Replications draw all their randomness from
SeedSequence([seed, replication]) so a run is reproducible for any worker
count.
"""
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import pandas as pd
from django.conf import settings
from scipy import stats

from . import design
from .exceptions import PLGPError
from .particles import (
    CLASSIFICATION,
    REGRESSION,
    EngineConfig,
    init_particles,
    mixture_predict,
    parallel_map,
    pl_update,
    run_mcmc,
    save_snapshot,
)
from .utils import ScaledData, Scaler, emit_csv, emit_json, ingest_csv, version_string

logger = logging.getLogger(__name__)

SINUSOID = 'sinusoid'
CLASS_STATIC = 'class_static'
CLASS_AL = 'class_al'
EI_OPT = 'ei_opt'
FIT = 'fit'
EXPERIMENTS = (SINUSOID, CLASS_STATIC, CLASS_AL, EI_OPT, FIT)
FORMATS = ('csv', 'json')

SINUSOID_BOUNDS = [(0.0, 9.6)]
SQUARE_BOUNDS = [(-2.0, 2.0), (-2.0, 2.0)]
EXP2D_MINIMISER = np.array([-np.sqrt(0.5), 0.0])

PRESETS = {
    SINUSOID: {
        'desk': dict(n_particles=200, t0=5, T=50, replications=20, test_size=1000,
                     noise_sd=0.1, mcmc_iters=2000, mcmc_thin=10, init_mh_rounds=2000),
        'full': dict(n_particles=1000, t0=5, T=50, replications=100, test_size=1000,
                     noise_sd=0.1, mcmc_iters=10000, mcmc_thin=10, init_mh_rounds=10000),
    },
    EI_OPT: {
        'desk': dict(n_particles=200, t0=7, T=50, noise_sd=0.001,
                     replications=10, init_mh_rounds=2000),
        'full': dict(n_particles=1000, t0=7, T=50, noise_sd=0.001,
                     replications=1, init_mh_rounds=10000),
    },
    CLASS_STATIC: {
        'desk': dict(n_particles=200, t0=25, T=60, test_size=500,
                     replications=10, init_mh_rounds=2000),
        'full': dict(n_particles=1000, t0=17, T=125, test_size=1000,
                     replications=1, init_mh_rounds=10000),
    },
    CLASS_AL: {
        'desk': dict(n_particles=200, t0=25, T=60, test_size=500,
                     replications=10, init_mh_rounds=2000),
        'full': dict(n_particles=1000, t0=25, T=125, test_size=1000,
                     replications=1, init_mh_rounds=10000),
    },
    FIT: {
        'desk': dict(n_particles=200, t0=10, T=10000, replications=1, init_mh_rounds=2000),
        'full': dict(n_particles=1000, t0=10, T=10000, replications=1, init_mh_rounds=10000),
    },
}

ENGINE_FIELDS = {f.name for f in fields(EngineConfig)}


def gen_sinusoid(x):
    """y = sin(pi x / 5) + cos(4 pi x / 5) / 5 on [0, 9.6]."""
    x = np.asarray(x, dtype=float)
    y = np.sin(np.pi * x / 5.0) + 0.2 * np.cos(4.0 * np.pi * x / 5.0)
    return float(y) if y.ndim == 0 else y


def gen_exp2d(x):
    """y = x1 exp(-x1^2 - x2^2); minimised at (-sqrt(1/2), 0)."""
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(x)
    y = X[:, 0] * np.exp(-X[:, 0] ** 2 - X[:, 1] ** 2)
    return float(y[0]) if x.ndim == 1 else y


def gen_class_labels(x):
    """Labels 1..3 from the sign of the Hessian trace of gen_exp2d.

    The trace is 4 x1 (x1^2 + x2^2 - 2) exp(-x1^2 - x2^2). A negative sign
    gives class 1 for x1 <= 0 and class 3 for x1 > 0; anything else is class 2.
    """
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(x)
    trace_sign = np.sign(X[:, 0] * (X[:, 0] ** 2 + X[:, 1] ** 2 - 2.0))
    labels = np.where(trace_sign < 0, np.where(X[:, 0] <= 0, 1, 3), 2)
    return int(labels[0]) if x.ndim == 1 else labels


@dataclass
class RunConfig:
    """One experiment invocation: engine tuning plus design sizes and outputs."""

    experiment: str
    engine: EngineConfig
    t0: int
    T: int
    preset: str = 'desk'
    seed: int = 1
    replications: int = 1
    candidates: int = 40
    pool_size: int = 300
    test_size: int = 1000
    noise_sd: float = 0.0
    mcmc_iters: int = 2000
    mcmc_thin: int = 10
    fmin_mode: str = 'mean-surface'
    smoothing: object = None
    med_range: float = 0.5
    rep_workers: int = 1
    out_dir: Path = None
    fmt: str = 'csv'
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise PLGPError(f'unknown experiment {self.experiment!r}')
        if self.T <= self.t0:
            raise PLGPError(f'T = {self.T} must exceed t0 = {self.t0}')
        sizes = (self.replications, self.candidates, self.pool_size, self.test_size,
                 self.mcmc_iters, self.mcmc_thin, self.rep_workers)
        if min(sizes) < 1 or self.t0 < 0:
            raise PLGPError('all sizes must be positive')
        if self.noise_sd < 0:
            raise PLGPError('noise sd must be non-negative')
        if self.fmt not in FORMATS:
            raise PLGPError(f'unknown output format {self.fmt!r}')
        if self.experiment in (CLASS_STATIC, CLASS_AL) and self.T > self.pool_size:
            raise PLGPError(f'T = {self.T} exceeds the candidate pool of {self.pool_size}')
        if self.out_dir is None:
            self.out_dir = Path(settings.PLGP_OUTPUT_DIR) / self.experiment
        self.out_dir = Path(self.out_dir)

    @classmethod
    def build(cls, experiment, preset='desk', **overrides):
        """Preset values, then the PLGP_* engine settings, then ``overrides``."""
        if experiment not in PRESETS:
            raise PLGPError(f'unknown experiment {experiment!r}')
        if preset not in PRESETS[experiment]:
            raise PLGPError(f'unknown preset {preset!r}')
        values = dict(PRESETS[experiment][preset])
        values.update({k: v for k, v in overrides.items() if v is not None})
        values.setdefault('seed', settings.PLGP_SEED)
        values.setdefault('fmin_mode', settings.PLGP_FMIN_MODE)
        values.setdefault('med_range', settings.PLGP_MED_RANGE)
        if experiment == EI_OPT:
            values.setdefault('candidates', settings.PLGP_EI_CANDIDATES)
        if experiment in (CLASS_STATIC, CLASS_AL):
            values.setdefault('pool_size', settings.PLGP_AL_POOL)

        kind = CLASSIFICATION if experiment in (CLASS_STATIC, CLASS_AL) else REGRESSION
        engine_values = {k: values.pop(k) for k in list(values) if k in ENGINE_FIELDS - {'t0', 'seed'}}
        engine_values['t0'] = values['t0']
        engine_values['seed'] = values['seed']
        engine = EngineConfig.from_settings(kind, **engine_values)
        known = {f.name for f in fields(cls)}
        extra = {k: values.pop(k) for k in list(values) if k not in known}
        return cls(experiment=experiment, preset=preset, engine=engine, extra=extra, **values)

    def to_dict(self):
        values = {f.name: getattr(self, f.name) for f in fields(self) if f.name != 'engine'}
        values['engine'] = self.engine.to_dict()
        values['out_dir'] = str(self.out_dir)
        return values


def _replication_streams(seed, r, names):
    children = np.random.SeedSequence([seed, r]).spawn(len(names))
    return dict(zip(names, children))


def _engine_for(cfg, stream):
    return replace(cfg.engine, seed=int(stream.generate_state(1)[0]))


@contextmanager
def _phase(timings, name):
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - start


def _merge_timings(parts):
    total = {}
    for part in parts:
        for name, seconds in part.items():
            total[name] = total.get(name, 0.0) + seconds
    return total


def _report(cfg, summary, tables, timings):
    return {
        'experiment': cfg.experiment,
        'version': version_string(),
        'config': cfg.to_dict(),
        'timings': timings,
        'summary': summary,
        'tables': tables,
    }


def _sequential_fit(X, Z, engine, kind=REGRESSION, n_classes=None):
    """Initialise at t0 on the first rows, then one PL update per remaining row."""
    ps = init_particles(X[:engine.t0], Z[:engine.t0], engine, kind=kind, n_classes=n_classes)
    for x, z in zip(X[engine.t0:], Z[engine.t0:]):
        pl_update(ps, x, z)
    return ps


# Regression on the 1-d sinusoid, PL against a batch MCMC fit.

def _sinusoid_replication(cfg, r):
    streams = _replication_streams(cfg.seed, r, ('data', 'test', 'engine', 'mcmc'))
    data_rng = np.random.default_rng(streams['data'])
    timings = {}

    width = SINUSOID_BOUNDS[0][1] - SINUSOID_BOUNDS[0][0]
    X_raw = design.lhd(cfg.T, 1, data_rng).points * width + SINUSOID_BOUNDS[0][0]
    Y_raw = gen_sinusoid(X_raw[:, 0]) + cfg.noise_sd * data_rng.standard_normal(cfg.T)
    data = ScaledData.from_raw(X_raw, Y_raw, bounds=SINUSOID_BOUNDS)
    X, Y = data.X, data.Y

    test_rng = np.random.default_rng(streams['test'])
    X_test = design.lhd(cfg.test_size, 1, test_rng).points
    truth = gen_sinusoid(data.scaler.unscale_x(X_test)[:, 0])

    engine = _engine_for(cfg, streams['engine'])
    with _phase(timings, 'pl'):
        ps = _sequential_fit(X, Y, engine)
        pl_mean, _ = ps.predict(X_test)
    with _phase(timings, 'mcmc'):
        samples = run_mcmc(X, Y, cfg.mcmc_iters, cfg.mcmc_thin, engine,
                           np.random.default_rng(streams['mcmc']))
        mcmc_mean, _ = mixture_predict(samples, X, Y, X_test, workers=engine.workers)

    rmse_pl = float(np.sqrt(np.mean((data.scaler.unscale_y(pl_mean) - truth) ** 2)))
    rmse_mcmc = float(np.sqrt(np.mean((data.scaler.unscale_y(mcmc_mean) - truth) ** 2)))
    logger.info('sinusoid replication %d: RMSE PL %.5f, MCMC %.5f', r, rmse_pl, rmse_mcmc)
    row = {
        'replication': r,
        'rmse_pl': rmse_pl,
        'rmse_mcmc': rmse_mcmc,
        'pl_wins': bool(rmse_pl < rmse_mcmc),
        'unique_final': ps.unique_params(),
        'noise_sd_scaled': cfg.noise_sd / data.scaler.y_range,
    }
    history = [dict(replication=r, **entry) for entry in ps.history]
    return row, history, timings


def run_sinusoid_regression(cfg):
    """R paired replications of PL and MCMC on fresh LHD data; RMSE on the raw scale."""
    results = parallel_map(
        cfg.rep_workers, lambda r: _sinusoid_replication(cfg, r), range(cfg.replications),
    )
    rows = pd.DataFrame([row for row, _, _ in results])
    history = pd.DataFrame([entry for _, entries, _ in results for entry in entries])

    pl, mcmc = rows['rmse_pl'].to_numpy(), rows['rmse_mcmc'].to_numpy()
    summary = {
        'rmse_pl_mean': float(pl.mean()),
        'rmse_pl_sd': float(pl.std(ddof=1)) if pl.size > 1 else 0.0,
        'rmse_mcmc_mean': float(mcmc.mean()),
        'rmse_mcmc_sd': float(mcmc.std(ddof=1)) if mcmc.size > 1 else 0.0,
        'rmse_ratio': float(pl.mean() / mcmc.mean()),
        'pl_win_rate': float(rows['pl_wins'].mean()),
        'noise_sd_raw': cfg.noise_sd,
    }
    if pl.size > 1:
        test = stats.ttest_rel(pl, mcmc, alternative='less')
        summary['paired_t_statistic'] = float(test.statistic)
        summary['paired_t_pvalue'] = float(test.pvalue)
    logger.info(
        'sinusoid: PL %.5f (%.5f), MCMC %.5f (%.5f), PL win-rate %.2f',
        summary['rmse_pl_mean'], summary['rmse_pl_sd'],
        summary['rmse_mcmc_mean'], summary['rmse_mcmc_sd'], summary['pl_win_rate'],
    )
    timings = _merge_timings(t for _, _, t in results)
    return _report(cfg, summary, {'replications': rows, 'history': history}, timings)


# Classification on the three-class Hessian-sign data.

@dataclass
class ClassProblem:
    """Candidate pool, static design and test set shared by the static and AL runs."""

    scaler: Scaler
    pool: design.CandidateSet
    static_order: list
    X_test: np.ndarray
    test_labels: np.ndarray

    def labels_at(self, X):
        return gen_class_labels(self.scaler.unscale_x(X))


def class_problem(cfg, r):
    streams = _replication_streams(cfg.seed, r, ('test', 'pool', 'engine'))
    scaler = Scaler.fit(np.array(SQUARE_BOUNDS).T, bounds=SQUARE_BOUNDS)

    pool_rng = np.random.default_rng(streams['pool'])
    superset = design.lhd(4 * cfg.pool_size, 2, pool_rng)
    pool = design.med(cfg.pool_size, superset, d_ref=cfg.med_range)
    static_order = design.med_indices(cfg.T, pool, d_ref=cfg.med_range)

    test_rng = np.random.default_rng(streams['test'])
    test = design.med(cfg.test_size, design.lhd(2 * cfg.test_size, 2, test_rng), d_ref=cfg.med_range)
    return ClassProblem(
        scaler=scaler, pool=pool, static_order=static_order, X_test=test.points,
        test_labels=gen_class_labels(scaler.unscale_x(test.points)),
    ), streams['engine']


def _class_evaluation(ps, problem, r):
    probs = ps.class_probs(problem.X_test)
    predicted = np.argmax(probs, axis=1) + 1
    raw = problem.scaler.unscale_x(problem.X_test)
    table = pd.DataFrame({'replication': r, 'x1': raw[:, 0], 'x2': raw[:, 1],
                          'label': problem.test_labels, 'predicted': predicted})
    for m in range(probs.shape[1]):
        table[f'p{m + 1}'] = probs[:, m]
    table['entropy'] = design.entropy(probs)
    table['bvsb'] = design.bvsb_entropy(probs)
    return int(np.sum(predicted != problem.test_labels)), table


def _class_static_replication(cfg, r):
    problem, engine_stream = class_problem(cfg, r)
    engine = _engine_for(cfg, engine_stream)
    timings = {}
    X = problem.pool.points[problem.static_order]
    labels = problem.labels_at(X) - 1
    with _phase(timings, 'pl'):
        ps = _sequential_fit(X, labels, engine, kind=CLASSIFICATION, n_classes=3)
    with _phase(timings, 'predict'):
        errors, table = _class_evaluation(ps, problem, r)
    logger.info('class static replication %d: %d of %d misclassified', r, errors, len(table))
    return {'replication': r, 'misclassified': errors}, table, ps.history, timings


def _class_al_replication(cfg, r):
    problem, engine_stream = class_problem(cfg, r)
    engine = _engine_for(cfg, engine_stream)
    timings = {}
    start = problem.static_order[:cfg.t0]
    X0 = problem.pool.points[start]
    remaining = design.CandidateSet(np.delete(problem.pool.points, start, axis=0), design.FIXED_POOL)
    rounds = []
    with _phase(timings, 'pl'):
        ps = init_particles(X0, problem.labels_at(X0) - 1, engine, kind=CLASSIFICATION, n_classes=3)
        for t in range(cfg.t0, cfg.T):
            record = design.choose_next_entropy(ps, remaining, smoothing=cfg.smoothing)
            label = int(problem.labels_at(record.chosen.reshape(1, -1))[0])
            pl_update(ps, record.chosen, label - 1)
            remaining = remaining.without(record.index)
            raw = problem.scaler.unscale_x(record.chosen)
            rounds.append({'replication': r, 't': t, 'x1': raw[0], 'x2': raw[1],
                           'label': label, 'bvsb': record.score})
    with _phase(timings, 'predict'):
        errors, table = _class_evaluation(ps, problem, r)
    logger.info('class AL replication %d: %d of %d misclassified', r, errors, len(table))
    return {'replication': r, 'misclassified': errors}, table, ps.history, timings, rounds


def _class_report(cfg, results, extra_tables=None):
    rows = pd.DataFrame([res[0] for res in results])
    tables = {
        'replications': rows,
        'predictions': pd.concat([res[1] for res in results], ignore_index=True),
        'history': pd.DataFrame([
            dict(replication=res[0]['replication'], **entry) for res in results for entry in res[2]
        ]),
    }
    tables.update(extra_tables or {})
    counts = rows['misclassified'].to_numpy()
    summary = {
        'misclassified_mean': float(counts.mean()),
        'misclassified': counts.tolist(),
        'test_size': cfg.test_size,
    }
    return _report(cfg, summary, tables, _merge_timings(res[3] for res in results))


def run_class_static(cfg):
    """PL over a fixed MED of T pool points, scored on the MED test set."""
    results = parallel_map(
        cfg.rep_workers, lambda r: _class_static_replication(cfg, r), range(cfg.replications),
    )
    return _class_report(cfg, results)


def run_class_al(cfg):
    """BVSB active learning from a t0 sub-MED over the remaining pool points."""
    results = parallel_map(
        cfg.rep_workers, lambda r: _class_al_replication(cfg, r), range(cfg.replications),
    )
    rounds = pd.DataFrame([row for res in results for row in res[4]])
    return _class_report(cfg, results, {'rounds': rounds})


# Noisy optimisation of the 2-d exponential by expected improvement.

def _up_spikes(log_ei, chose_x_star):
    """(rounds where the max log EI rose, how many followed a round not choosing x*)."""
    spikes = [i for i in range(1, len(log_ei)) if log_ei[i] > log_ei[i - 1]]
    explained = sum(1 for i in spikes if not chose_x_star[i - 1])
    return len(spikes), explained


def _ei_replication(cfg, r):
    streams = _replication_streams(cfg.seed, r, ('data', 'candidates', 'engine'))
    data_rng = np.random.default_rng(streams['data'])
    cand_rng = np.random.default_rng(streams['candidates'])
    timings = {}

    def observe(x_raw):
        return gen_exp2d(x_raw) + cfg.noise_sd * data_rng.standard_normal(np.atleast_2d(x_raw).shape[0])

    X0 = design.lhd(cfg.t0, 2, data_rng).points
    X0_raw = X0 * 4.0 - 2.0
    Y0_raw = observe(X0_raw)
    scaler = Scaler.fit(X0_raw, Y0_raw, bounds=SQUARE_BOUNDS)

    engine = _engine_for(cfg, streams['engine'])
    rounds = []
    with _phase(timings, 'pl'):
        ps = init_particles(X0, scaler.scale_y(Y0_raw), engine)
        for t in range(cfg.t0, cfg.T):
            cands = design.lhd(cfg.candidates, 2, cand_rng)
            record = design.choose_next_ei(ps, cands, fmin_mode=cfg.fmin_mode)
            x_raw = scaler.unscale_x(record.chosen)
            y_raw = float(observe(x_raw)[0])
            star_raw = scaler.unscale_x(record.x_star)
            with np.errstate(divide='ignore'):
                log_ei = float(np.log(record.score))
            rounds.append({
                'replication': r, 't': t,
                'x_star1': star_raw[0], 'x_star2': star_raw[1],
                'chosen1': x_raw[0], 'chosen2': x_raw[1],
                'y': y_raw, 'log_ei': log_ei,
                'chose_x_star': record.index == len(cands),
            })
            pl_update(ps, record.chosen, float(scaler.scale_y(y_raw)))

    with _phase(timings, 'final'):
        final = scaler.unscale_x(design.map_candidate(ps, design.lhd(cfg.candidates, 2, cand_rng)))
    gap = float(np.linalg.norm(final - EXP2D_MINIMISER))
    spikes, explained = _up_spikes([row['log_ei'] for row in rounds],
                                   [row['chose_x_star'] for row in rounds])
    if spikes > explained:
        logger.info('replication %d: %d of %d log-EI up-spikes followed a round choosing x*',
                    r, spikes - explained, spikes)
    logger.info('EI replication %d: final x* (%.4f, %.4f), gap %.4f', r, final[0], final[1], gap)
    row = {
        'replication': r, 'x_star1': final[0], 'x_star2': final[1], 'gap': gap,
        'up_spikes': spikes, 'up_spikes_after_exploration': explained,
    }
    return row, rounds, ps.history, timings


def run_ei_optimization(cfg):
    """Sequential EI design from a t0 LHD to T points on noisy gen_exp2d."""
    results = parallel_map(
        cfg.rep_workers, lambda r: _ei_replication(cfg, r), range(cfg.replications),
    )
    rows = pd.DataFrame([res[0] for res in results])
    gaps = rows['gap'].to_numpy()
    summary = {
        'true_minimiser': EXP2D_MINIMISER.tolist(),
        'final_x_star': rows[['x_star1', 'x_star2']].to_numpy().tolist(),
        'gap_mean': float(gaps.mean()),
        'within_0_1': int(np.sum(gaps <= 0.1)),
        'up_spikes': int(rows['up_spikes'].sum()),
        'up_spikes_after_exploration': int(rows['up_spikes_after_exploration'].sum()),
    }
    tables = {
        'replications': rows,
        'rounds': pd.DataFrame([row for res in results for row in res[1]]),
        'history': pd.DataFrame([
            dict(replication=res[0]['replication'], **entry) for res in results for entry in res[2]
        ]),
    }
    return _report(cfg, summary, tables, _merge_timings(res[3] for res in results))


# User data.

def run_fit(cfg, train_path, response=None, class_column=None, columns=None,
            predict_path=None, snapshot_path=None):
    """PL fit on a user CSV, one update per row after the first t0 rows.

    Exactly one of ``response`` (regression) and ``class_column`` (labels
    1..M) must be given. Predictions are made at the rows of
    ``predict_path``, or at the training inputs without one.
    """
    if (response is None) == (class_column is None):
        raise PLGPError('give exactly one of a response column and a class column')
    timings = {}
    train = ingest_csv(train_path, columns=columns, response=response, class_column=class_column)
    if train.X.shape[0] <= cfg.t0:
        raise PLGPError(f'{train.X.shape[0]} rows leave nothing to learn after t0 = {cfg.t0}')
    if train.X.shape[0] > cfg.T:
        logger.warning('using the first %d of %d rows', cfg.T, train.X.shape[0])
        train = replace(
            train, X=train.X[:cfg.T],
            y=None if train.y is None else train.y[:cfg.T],
            labels=None if train.labels is None else train.labels[:cfg.T],
        )
    X_new_raw = train.X
    if predict_path is not None:
        X_new_raw = ingest_csv(predict_path, columns=train.columns).X

    engine = cfg.engine
    with _phase(timings, 'pl'):
        if response is not None:
            data = ScaledData.from_raw(train.X, train.y)
            scaler = data.scaler
            ps = _sequential_fit(data.X, data.Y, engine)
        else:
            if train.labels.min() < 1:
                raise PLGPError('class labels must be 1..M')
            scaler = Scaler.fit(train.X)
            n_classes = int(train.labels.max())
            engine = replace(engine, prior=EngineConfig.from_settings(CLASSIFICATION).prior)
            ps = _sequential_fit(scaler.scale_x(train.X), train.labels - 1, engine,
                                 kind=CLASSIFICATION, n_classes=n_classes)

    with _phase(timings, 'predict'):
        X_new = scaler.scale_x(X_new_raw)
        table = pd.DataFrame(X_new_raw, columns=train.columns)
        if response is not None:
            mean, var = ps.predict(X_new)
            table['mean'] = scaler.unscale_y(mean)
            table['sd'] = np.sqrt(var) * scaler.y_range
        else:
            probs = ps.class_probs(X_new)
            for m in range(probs.shape[1]):
                table[f'p{m + 1}'] = probs[:, m]
            table['predicted'] = np.argmax(probs, axis=1) + 1
            table['entropy'] = design.entropy(probs)

    if snapshot_path:
        save_snapshot(ps, snapshot_path)
        logger.info('particle snapshot written to %s', snapshot_path)
    summary = {
        'kind': ps.kind,
        'rows': int(train.X.shape[0]),
        'columns': train.columns,
        'unique_final': ps.unique_params(),
        'scaler': scaler.to_dict(),
    }
    report = _report(cfg, summary, {
        'predictions': table, 'history': pd.DataFrame(ps.history),
    }, timings)
    report['particles'] = ps
    return report


RUNNERS = {
    SINUSOID: run_sinusoid_regression,
    CLASS_STATIC: run_class_static,
    CLASS_AL: run_class_al,
    EI_OPT: run_ei_optimization,
}


def write_report(report, out_dir, fmt='csv'):
    """Tables as CSV files plus summary.json, or everything in report.json."""
    out_dir = Path(out_dir)
    body = {k: v for k, v in report.items() if k not in ('tables', 'particles')}
    written = []
    if fmt == 'json':
        body['tables'] = report['tables']
        written.append(emit_json(body, out_dir / 'report.json'))
    else:
        for name, table in report['tables'].items():
            written.append(emit_csv(table, out_dir / f'{name}.csv'))
        written.append(emit_json(body, out_dir / 'summary.json'))
    return written
