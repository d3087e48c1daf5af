import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from plgp.experiments import gen_sinusoid
from plgp.forms import RunConfigForm
from plgp.models import ExperimentRun, ParticleSnapshot

TINY = {'particles': 8, 'init_mh_rounds': 40, 'init_thin': 5}


class CommandTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def config_file(self, **values):
        path = self.dir / 'config.json'
        path.write_text(json.dumps({**TINY, **values}), encoding='utf-8')
        return str(path)

    def call(self, name, *args):
        out = StringIO()
        call_command(name, *args, stdout=out)
        return out.getvalue()


class SinusoidCommandTests(CommandTestCase):
    def test_writes_tables_and_records_run(self):
        cfg = self.config_file(t0=5, rounds=8, replications=1, test_size=20, mcmc_iters=20, mcmc_thin=5)
        out_dir = self.dir / 'sinusoid'
        output = self.call('sinusoid', '--config', cfg, '--out', str(out_dir), '--record')
        self.assertIn('RMSE PL', output)
        self.assertTrue((out_dir / 'replications.csv').exists())
        summary = json.loads((out_dir / 'summary.json').read_text())
        self.assertEqual(summary['config']['engine']['n_particles'], 8)
        self.assertEqual(summary['config']['T'], 8)

        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.STATUS_FINISHED)
        self.assertEqual(run.experiment, 'sinusoid')
        self.assertIn('rmse_pl_mean', run.summary)
        self.assertEqual(run.output_dir, str(out_dir))
        self.assertIsNotNone(run.duration())

    def test_config_file_overrides_flags(self):
        cfg = self.config_file(t0=5, rounds=8, replications=1, test_size=20, mcmc_iters=20,
                               mcmc_thin=5, format='json')
        out_dir = self.dir / 'json'
        self.call('sinusoid', '--config', cfg, '--out', str(out_dir), '--format', 'csv')
        self.assertTrue((out_dir / 'report.json').exists())
        self.assertFalse(ExperimentRun.objects.exists())

    def test_rounds_must_exceed_t0(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('sinusoid', '--t0', '10', '--rounds', '10', '--out', str(self.dir))
        self.assertIn('must exceed t0', str(ctx.exception))

    def test_bad_window(self):
        cfg = self.config_file(window_u=2.0, window_l=3.0)
        with self.assertRaises(CommandError):
            self.call('sinusoid', '--config', cfg, '--out', str(self.dir))

    def test_unreadable_config(self):
        with self.assertRaises(CommandError):
            self.call('sinusoid', '--config', str(self.dir / 'missing.json'))


class ClassCommandTests(CommandTestCase):
    def test_pool_must_hold_the_design(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('class_static', '--pool-size', '20', '--out', str(self.dir))
        self.assertIn('pool', str(ctx.exception))

    def test_active_learning_with_smoothing(self):
        cfg = self.config_file(t0=6, rounds=8, pool_size=25, test_size=15, class_samples=10,
                               replications=1, smoothing='0.1')
        out_dir = self.dir / 'al'
        output = self.call('class_al', '--config', cfg, '--out', str(out_dir))
        self.assertIn('misclassified', output)
        rounds = pd.read_csv(out_dir / 'rounds.csv')
        self.assertEqual(rounds['t'].tolist(), [6, 7])
        summary = json.loads((out_dir / 'summary.json').read_text())
        self.assertEqual(summary['config']['smoothing'], 0.1)


class FitCommandTests(CommandTestCase):
    def setUp(self):
        super().setUp()
        x = np.linspace(0.0, 9.6, 12)
        self.train = self.dir / 'train.csv'
        pd.DataFrame({'x': x, 'y': gen_sinusoid(x)}).to_csv(self.train, index=False)

    def test_snapshot_is_written_and_stored(self):
        snapshot = self.dir / 'particles.json'
        out_dir = self.dir / 'fit'
        self.call('fit', str(self.train), '--response', 'y', '--t0', '5',
                  '--config', self.config_file(), '--out', str(out_dir),
                  '--snapshot', str(snapshot), '--record')
        self.assertTrue(snapshot.exists())
        predictions = pd.read_csv(out_dir / 'predictions.csv')
        self.assertEqual(list(predictions.columns), ['x', 'mean', 'sd'])

        run = ExperimentRun.objects.get()
        stored = run.snapshots.get()
        self.assertEqual(stored.t, 12)
        self.assertEqual(stored.n_particles, 8)
        self.assertEqual(stored.restore().t, 12)

    def test_missing_column_fails_the_record(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('fit', str(self.train), '--response', 'z', '--t0', '5',
                      '--config', self.config_file(), '--out', str(self.dir), '--record')
        self.assertIn("'z'", str(ctx.exception))
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.STATUS_FAILED)
        self.assertIn("'z'", run.error)
        self.assertFalse(ParticleSnapshot.objects.exists())


class RunConfigFormTests(TestCase):
    def test_smoothing_values(self):
        for raw, expected in (('', None), ('off', None), ('map', 'map'), ('0.25', 0.25)):
            form = RunConfigForm('class_al', data={'smoothing': raw})
            self.assertTrue(form.is_valid(), form.errors)
            self.assertEqual(form.cleaned_data['smoothing'], expected)
        for raw in ('-1', 'wide'):
            self.assertFalse(RunConfigForm('class_al', data={'smoothing': raw}).is_valid())

    def test_rounds_checked_against_preset_t0(self):
        form = RunConfigForm('class_static', data={'rounds': 20})
        self.assertFalse(form.is_valid())
        form = RunConfigForm('class_static', data={'rounds': 20, 't0': 10})
        self.assertTrue(form.is_valid(), form.errors)

    def test_to_run_config(self):
        form = RunConfigForm('ei_opt', data={'particles': 50, 'no_rejuvenate': True, 'resample': 'systematic',
                                             'out': str(Path(tempfile.gettempdir()) / 'ei')})
        self.assertTrue(form.is_valid(), form.errors)
        cfg = form.to_run_config()
        self.assertEqual(cfg.engine.n_particles, 50)
        self.assertFalse(cfg.engine.rejuvenate)
        self.assertEqual(cfg.engine.resample_scheme, 'systematic')

    def test_config_errors_land_on_form(self):
        form = RunConfigForm('class_al', data={'pool_size': 10})
        self.assertTrue(form.is_valid(), form.errors)
        self.assertIsNone(form.to_run_config())
        self.assertIn('pool', ' '.join(form.non_field_errors()))
