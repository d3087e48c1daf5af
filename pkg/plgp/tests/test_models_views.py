from datetime import timedelta

import numpy as np
from django.test import TestCase
from django.urls import reverse
from django.utils import timezone

from plgp.models import ExperimentRun, ParticleSnapshot
from plgp.particles import EngineConfig, init_particles, pl_update


def _small_set():
    rng = np.random.default_rng(3)
    X = rng.uniform(size=(7, 1))
    Y = np.sin(6.0 * X[:, 0])
    config = EngineConfig(n_particles=6, t0=5, init_mh_rounds=30, init_thin=5, seed=4)
    ps = init_particles(X[:5], Y[:5], config)
    for x, y in zip(X[5:], Y[5:]):
        pl_update(ps, x, y)
    return ps


class ExperimentRunTests(TestCase):
    def test_finish(self):
        run = ExperimentRun.objects.create(experiment='sinusoid', config={'T': 50})
        self.assertEqual(run.status, ExperimentRun.STATUS_RUNNING)
        self.assertIsNone(run.duration())
        run.started_at = timezone.now() - timedelta(seconds=30)
        run.finish({'rmse_pl_mean': 0.05}, '0.1.0')
        run.refresh_from_db()
        self.assertEqual(run.status, ExperimentRun.STATUS_FINISHED)
        self.assertEqual(run.summary, {'rmse_pl_mean': 0.05})
        self.assertEqual(run.version, '0.1.0')
        self.assertGreaterEqual(run.duration(), 30.0)

    def test_fail(self):
        run = ExperimentRun.objects.create(experiment='fit')
        run.fail('missing column')
        run.refresh_from_db()
        self.assertEqual(run.status, ExperimentRun.STATUS_FAILED)
        self.assertEqual(run.error, 'missing column')
        self.assertIsNotNone(run.finished_at)
        self.assertIn('failed', str(run))


class ParticleSnapshotTests(TestCase):
    def test_capture_and_restore(self):
        ps = _small_set()
        run = ExperimentRun.objects.create(experiment='fit')
        snapshot = ParticleSnapshot.capture(ps, run=run)
        self.assertEqual((snapshot.t, snapshot.n_particles, snapshot.kind), (7, 6, 'regression'))

        restored = ParticleSnapshot.objects.get(pk=snapshot.pk).restore()
        self.assertEqual(restored.N, ps.N)
        np.testing.assert_array_equal(restored.X, ps.X)
        np.testing.assert_allclose(restored.log_posteriors(), ps.log_posteriors())
        grid = np.linspace(0, 1, 5).reshape(-1, 1)
        np.testing.assert_allclose(restored.predict(grid)[0], ps.predict(grid)[0])
        self.assertEqual(run.snapshots.count(), 1)

    def test_nan_history_is_stored_as_null(self):
        ps = _small_set()
        ps.history[0]['accept'] = float('nan')
        snapshot = ParticleSnapshot.capture(ps)
        snapshot.refresh_from_db()
        self.assertIsNone(snapshot.payload['history'][0]['accept'])


class RunViewTests(TestCase):
    def setUp(self):
        self.finished = ExperimentRun.objects.create(experiment='sinusoid', seed=3)
        self.finished.finish({'pl_win_rate': 0.5}, '0.1.0')
        self.failed = ExperimentRun.objects.create(experiment='ei_opt')
        self.failed.fail('boom')

    def test_list(self):
        response = self.client.get(reverse('plgp:run_list'))
        self.assertEqual(response.status_code, 200)
        runs = response.json()['runs']
        self.assertEqual({r['id'] for r in runs}, {self.finished.id, self.failed.id})
        self.assertNotIn('summary', runs[0])

    def test_list_filters(self):
        runs = self.client.get(reverse('plgp:run_list'), {'status': 'failed'}).json()['runs']
        self.assertEqual([r['id'] for r in runs], [self.failed.id])
        runs = self.client.get(reverse('plgp:run_list'), {'experiment': 'sinusoid'}).json()['runs']
        self.assertEqual([r['seed'] for r in runs], [3])

    def test_detail(self):
        ParticleSnapshot.capture(_small_set(), run=self.finished)
        body = self.client.get(reverse('plgp:run_detail', args=[self.finished.id])).json()
        self.assertEqual(body['summary'], {'pl_win_rate': 0.5})
        self.assertEqual(body['status'], 'finished')
        self.assertEqual(len(body['snapshots']), 1)
        self.assertEqual(body['snapshots'][0]['t'], 7)

    def test_missing_run(self):
        response = self.client.get(reverse('plgp:run_detail', args=[9999]))
        self.assertEqual(response.status_code, 404)

    def test_get_only(self):
        response = self.client.post(reverse('plgp:run_list'))
        self.assertEqual(response.status_code, 405)
