import json
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase, override_settings, tag

from plgp import design, experiments
from plgp.exceptions import PLGPError
from plgp.experiments import (
    CLASS_AL,
    CLASS_STATIC,
    EI_OPT,
    FIT,
    SINUSOID,
    RunConfig,
    gen_class_labels,
    gen_exp2d,
    gen_sinusoid,
)

TINY_ENGINE = dict(n_particles=8, init_mh_rounds=40, init_thin=5)


class GeneratorTests(SimpleTestCase):
    def test_sinusoid(self):
        self.assertAlmostEqual(gen_sinusoid(0.0), 0.2, places=12)
        self.assertAlmostEqual(gen_sinusoid(2.5), 0.8, places=12)
        self.assertAlmostEqual(gen_sinusoid(5.0), 0.2, places=12)
        self.assertEqual(gen_sinusoid([0.0, 5.0]).shape, (2,))

    def test_exp2d(self):
        self.assertAlmostEqual(gen_exp2d([1.0, 0.0]), np.exp(-1.0), places=12)
        minimum = gen_exp2d(experiments.EXP2D_MINIMISER)
        self.assertAlmostEqual(minimum, -np.exp(-0.5) / np.sqrt(2.0), places=12)
        self.assertAlmostEqual(minimum, -0.428882, places=6)
        grid = np.stack(np.meshgrid(np.linspace(-2, 2, 81), np.linspace(-2, 2, 81)), axis=-1).reshape(-1, 2)
        self.assertGreaterEqual(gen_exp2d(grid).min(), minimum - 1e-12)

    def test_class_labels(self):
        self.assertEqual(gen_class_labels([1.0, 0.0]), 3)
        self.assertEqual(gen_class_labels([2.0, 2.0]), 2)
        self.assertEqual(gen_class_labels([-2.0, 0.0]), 1)
        labels = gen_class_labels(np.array([[1.0, 0.0], [2.0, 2.0], [-2.0, 0.0]]))
        self.assertEqual(labels.tolist(), [3, 2, 1])

    def test_up_spikes(self):
        self.assertEqual(experiments._up_spikes([1.0, 2.0, 1.0, 3.0], [False, True, False, True]), (2, 2))
        self.assertEqual(experiments._up_spikes([-1.0, 0.0, -2.0, -1.0], [True, False, True, False]), (2, 0))
        self.assertEqual(experiments._up_spikes([], []), (0, 0))


class RunConfigTests(SimpleTestCase):
    def test_presets(self):
        cfg = RunConfig.build(SINUSOID, 'full')
        self.assertEqual(cfg.engine.n_particles, 1000)
        self.assertEqual((cfg.t0, cfg.T, cfg.replications), (5, 50, 100))
        self.assertEqual(cfg.mcmc_iters, 10000)
        cfg = RunConfig.build(CLASS_AL)
        self.assertEqual((cfg.t0, cfg.T, cfg.pool_size), (25, 60, 300))
        self.assertTrue(cfg.engine.prior.proper)
        self.assertFalse(cfg.engine.prior.linear_mean)
        self.assertFalse(RunConfig.build(EI_OPT).engine.prior.proper)

    def test_overrides_reach_the_engine(self):
        cfg = RunConfig.build(EI_OPT, n_particles=12, seed=9, t0=4, T=6, candidates=None)
        self.assertEqual(cfg.engine.n_particles, 12)
        self.assertEqual(cfg.engine.seed, 9)
        self.assertEqual(cfg.engine.t0, 4)
        self.assertEqual(cfg.candidates, 40)
        echo = cfg.to_dict()
        self.assertEqual(echo['engine']['n_particles'], 12)
        self.assertEqual(echo['T'], 6)
        json.dumps(echo)

    @override_settings(PLGP_EI_CANDIDATES=80, PLGP_AL_POOL=120)
    def test_design_sizes_from_settings(self):
        self.assertEqual(RunConfig.build(EI_OPT).candidates, 80)
        self.assertEqual(RunConfig.build(EI_OPT, candidates=25).candidates, 25)
        self.assertEqual(RunConfig.build(CLASS_AL).pool_size, 120)
        self.assertEqual(RunConfig.build(CLASS_STATIC).pool_size, 120)
        with self.assertRaises(PLGPError):
            RunConfig.build(CLASS_STATIC, 'full')

    def test_invalid(self):
        with self.assertRaises(PLGPError):
            RunConfig.build(SINUSOID, t0=10, T=10)
        with self.assertRaises(PLGPError):
            RunConfig.build(CLASS_STATIC, pool_size=50)
        with self.assertRaises(PLGPError):
            RunConfig.build(SINUSOID, 'huge')
        with self.assertRaises(PLGPError):
            RunConfig.build('regress')
        with self.assertRaises(PLGPError):
            RunConfig.build(SINUSOID, fmt='xml')
        with self.assertRaises(PLGPError):
            RunConfig.build(SINUSOID, noise_sd=-1.0)
        with self.assertRaises(PLGPError):
            RunConfig.build(SINUSOID, window_u=1.0, window_l=2.0)


class TinyRunMixin:
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def build(self, experiment, name='run', **overrides):
        values = dict(TINY_ENGINE, out_dir=self.out / name)
        values.update(overrides)
        return RunConfig.build(experiment, **values)

    def written_bytes(self, report, name):
        experiments.write_report(report, self.out / name)
        return {p.name: p.read_bytes() for p in (self.out / name).glob('*.csv')}


class SinusoidRunTests(TinyRunMixin, SimpleTestCase):
    def config(self, name='run', **overrides):
        values = dict(t0=5, T=10, replications=2, test_size=30, mcmc_iters=40, mcmc_thin=5)
        values.update(overrides)
        return self.build(SINUSOID, name, **values)

    def test_report(self):
        report = experiments.run_sinusoid_regression(self.config())
        self.assertEqual(set(report), {'experiment', 'version', 'config', 'timings', 'summary', 'tables'})
        rows = report['tables']['replications']
        self.assertEqual(len(rows), 2)
        self.assertTrue(np.all(rows['rmse_pl'] > 0))
        self.assertTrue(np.all(np.isfinite(rows['rmse_mcmc'])))
        self.assertEqual(len(report['tables']['history']), 2 * 6)
        self.assertIn('paired_t_pvalue', report['summary'])
        self.assertIn('pl', report['timings'])
        self.assertIn('mcmc', report['timings'])

    def test_output_is_reproducible_across_worker_counts(self):
        first = self.written_bytes(experiments.run_sinusoid_regression(self.config('a')), 'a')
        again = self.written_bytes(experiments.run_sinusoid_regression(self.config('b')), 'b')
        threaded = self.written_bytes(
            experiments.run_sinusoid_regression(self.config('c', workers=3, rep_workers=2)), 'c',
        )
        self.assertEqual(set(first), {'replications.csv', 'history.csv'})
        self.assertEqual(first, again)
        self.assertEqual(first, threaded)

    def test_seed_changes_data(self):
        a = experiments.run_sinusoid_regression(self.config(replications=1, seed=1))
        b = experiments.run_sinusoid_regression(self.config(replications=1, seed=2))
        self.assertNotEqual(a['tables']['replications']['rmse_pl'][0], b['tables']['replications']['rmse_pl'][0])

    def test_write_json(self):
        report = experiments.run_sinusoid_regression(self.config(replications=1))
        written = experiments.write_report(report, self.out / 'json', fmt='json')
        self.assertEqual([p.name for p in written], ['report.json'])
        body = json.loads(written[0].read_text())
        self.assertEqual(body['experiment'], SINUSOID)
        self.assertEqual(len(body['tables']['replications']), 1)

    def test_write_csv(self):
        report = experiments.run_sinusoid_regression(self.config(replications=1))
        written = experiments.write_report(report, self.out / 'csv')
        self.assertEqual(sorted(p.name for p in written), ['history.csv', 'replications.csv', 'summary.json'])
        summary = json.loads((self.out / 'csv' / 'summary.json').read_text())
        self.assertNotIn('tables', summary)
        self.assertEqual(summary['config']['engine']['n_particles'], 8)


class ClassRunTests(TinyRunMixin, SimpleTestCase):
    def config(self, experiment, name='run', **overrides):
        values = dict(t0=6, T=10, pool_size=30, test_size=20, replications=1, class_samples=10)
        values.update(overrides)
        return self.build(experiment, name, **values)

    def test_problem_is_shared(self):
        cfg = self.config(CLASS_STATIC)
        problem, _ = experiments.class_problem(cfg, 0)
        again, _ = experiments.class_problem(self.config(CLASS_AL), 0)
        np.testing.assert_array_equal(problem.pool.points, again.pool.points)
        np.testing.assert_array_equal(problem.X_test, again.X_test)
        np.testing.assert_array_equal(problem.static_order[:6], again.static_order[:6])
        self.assertEqual(len(problem.static_order), 10)
        self.assertEqual(problem.X_test.shape, (20, 2))
        self.assertTrue(set(problem.test_labels.tolist()) <= {1, 2, 3})

    def test_static(self):
        report = experiments.run_class_static(self.config(CLASS_STATIC))
        table = report['tables']['predictions']
        self.assertEqual(len(table), 20)
        np.testing.assert_allclose(table[['p1', 'p2', 'p3']].sum(axis=1), 1.0)
        self.assertTrue(set(table['predicted']) <= {1, 2, 3})
        errors = report['summary']['misclassified'][0]
        self.assertEqual(errors, int((table['predicted'] != table['label']).sum()))

    def test_active_learning(self):
        report = experiments.run_class_al(self.config(CLASS_AL))
        rounds = report['tables']['rounds']
        self.assertEqual(rounds['t'].tolist(), list(range(6, 10)))
        chosen = rounds[['x1', 'x2']].to_numpy()
        self.assertEqual(len(np.unique(chosen, axis=0)), 4)
        self.assertTrue(np.all(np.abs(chosen) <= 2.0))
        self.assertEqual(rounds['label'].tolist(), gen_class_labels(chosen).tolist())
        np.testing.assert_allclose(report['tables']['predictions'][['p1', 'p2', 'p3']].sum(axis=1), 1.0)

    def test_reproducible(self):
        first = self.written_bytes(experiments.run_class_al(self.config(CLASS_AL, 'a')), 'a')
        threaded = self.written_bytes(experiments.run_class_al(self.config(CLASS_AL, 'b', workers=2)), 'b')
        self.assertIn('rounds.csv', first)
        self.assertEqual(first, threaded)


class EIRunTests(TinyRunMixin, SimpleTestCase):
    def config(self, name='run', **overrides):
        values = dict(t0=4, T=8, candidates=10, replications=2)
        values.update(overrides)
        return self.build(EI_OPT, name, **values)

    def test_report(self):
        report = experiments.run_ei_optimization(self.config())
        rounds = report['tables']['rounds']
        self.assertEqual(len(rounds), 2 * 4)
        self.assertEqual(set(rounds['replication']), {0, 1})
        chosen = rounds[['chosen1', 'chosen2']].to_numpy()
        self.assertTrue(np.all(np.abs(chosen) <= 2.0 + 1e-12))
        summary = report['summary']
        self.assertEqual(len(summary['final_x_star']), 2)
        self.assertTrue(0 <= summary['within_0_1'] <= 2)
        self.assertLessEqual(summary['up_spikes_after_exploration'], summary['up_spikes'])

    def test_reproducible(self):
        first = self.written_bytes(experiments.run_ei_optimization(self.config('a')), 'a')
        again = self.written_bytes(experiments.run_ei_optimization(self.config('b', rep_workers=2)), 'b')
        self.assertEqual(first, again)


class FitRunTests(TinyRunMixin, SimpleTestCase):
    def write(self, name, frame):
        path = self.out / name
        frame.to_csv(path, index=False)
        return path

    def test_regression(self):
        x = np.linspace(0.0, 9.6, 15)
        train = self.write('train.csv', pd.DataFrame({'x': x, 'y': gen_sinusoid(x)}))
        grid = self.write('grid.csv', pd.DataFrame({'x': [1.0, 2.5, 7.0]}))
        snapshot = self.out / 'particles.json'
        cfg = self.build(FIT, t0=5)
        report = experiments.run_fit(cfg, train, response='y', predict_path=grid, snapshot_path=snapshot)
        table = report['tables']['predictions']
        self.assertEqual(list(table.columns), ['x', 'mean', 'sd'])
        self.assertEqual(len(table), 3)
        self.assertTrue(np.all(table['sd'] > 0))
        self.assertEqual(report['particles'].t, 15)
        self.assertTrue(snapshot.exists())
        self.assertEqual(report['summary']['rows'], 15)

    def test_truncates_to_T(self):
        x = np.linspace(0.0, 9.6, 12)
        train = self.write('train.csv', pd.DataFrame({'x': x, 'y': gen_sinusoid(x)}))
        with self.assertLogs('plgp.experiments', 'WARNING'):
            report = experiments.run_fit(self.build(FIT, t0=5, T=8), train, response='y')
        self.assertEqual(report['summary']['rows'], 8)

    def test_classification(self):
        rng = np.random.default_rng(5)
        X = np.vstack([[[1.0, 0.0], [2.0, 2.0], [-2.0, 0.0]], rng.uniform(-2, 2, size=(9, 2))])
        train = self.write('train.csv', pd.DataFrame({'a': X[:, 0], 'b': X[:, 1], 'class': gen_class_labels(X)}))
        cfg = self.build(FIT, t0=8, class_samples=10)
        report = experiments.run_fit(cfg, train, class_column='class')
        table = report['tables']['predictions']
        self.assertEqual(len(table), 12)
        np.testing.assert_allclose(table[['p1', 'p2', 'p3']].sum(axis=1), 1.0)
        self.assertEqual(report['summary']['kind'], 'classification')
        self.assertTrue(report['particles'].config.prior.proper)

    def test_needs_one_target(self):
        train = self.write('train.csv', pd.DataFrame({'x': [0.0, 1.0], 'y': [0.0, 1.0]}))
        with self.assertRaises(PLGPError):
            experiments.run_fit(self.build(FIT), train)
        with self.assertRaises(PLGPError):
            experiments.run_fit(self.build(FIT), train, response='y', class_column='x')

    def test_too_few_rows(self):
        train = self.write('train.csv', pd.DataFrame({'x': [0.0, 1.0, 2.0], 'y': [0.0, 1.0, 0.5]}))
        with self.assertRaises(PLGPError):
            experiments.run_fit(self.build(FIT, t0=5), train, response='y')


@tag('acceptance')
class DeskAcceptanceTests(TinyRunMixin, SimpleTestCase):
    """Desk presets; run with PLGP_ACCEPTANCE=1 or --tag acceptance."""

    def test_sinusoid_pl_matches_mcmc(self):
        report = experiments.run_sinusoid_regression(
            RunConfig.build(SINUSOID, out_dir=self.out, rep_workers=4),
        )
        self.assertLessEqual(report['summary']['rmse_ratio'], 1.25)
        self.assertGreaterEqual(report['summary']['pl_win_rate'], 0.45)

    def test_ei_finds_minimiser(self):
        report = experiments.run_ei_optimization(RunConfig.build(EI_OPT, out_dir=self.out, rep_workers=4))
        self.assertGreaterEqual(report['summary']['within_0_1'], 8)

    def test_active_learning_beats_static(self):
        static = experiments.run_class_static(RunConfig.build(CLASS_STATIC, out_dir=self.out, rep_workers=4))
        active = experiments.run_class_al(RunConfig.build(CLASS_AL, out_dir=self.out, rep_workers=4))
        s = np.asarray(static['summary']['misclassified'])
        a = np.asarray(active['summary']['misclassified'])
        self.assertGreaterEqual(int(np.sum(a < s)), 7)
        self.assertLessEqual(a.mean(), 0.85 * s.mean())

    def test_rejuvenation_limits_depletion(self):
        cfg = RunConfig.build(SINUSOID, out_dir=self.out)
        rng = np.random.default_rng(11)
        x = design.lhd(cfg.T, 1, rng).points
        y = gen_sinusoid(x[:, 0] * 9.6) + 0.1 * rng.standard_normal(cfg.T)
        counts = {}
        for rejuvenate in (True, False):
            engine = replace(cfg.engine, rejuvenate=rejuvenate)
            ps = experiments._sequential_fit(x, (y - y.mean()) / np.ptp(y), engine)
            counts[rejuvenate] = ps.unique_params()
        self.assertGreater(counts[True], counts[False])
