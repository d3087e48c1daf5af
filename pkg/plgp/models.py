from django.db import models
from django.utils import timezone

from .particles import CLASSIFICATION, REGRESSION, from_snapshot, to_snapshot
from .utils import storable


class ExperimentRun(models.Model):
    """One recorded invocation of an experiment command"""

    STATUS_RUNNING = 'running'
    STATUS_FINISHED = 'finished'
    STATUS_FAILED = 'failed'
    STATUS_CHOICES = [
        (STATUS_RUNNING, 'Running'),
        (STATUS_FINISHED, 'Finished'),
        (STATUS_FAILED, 'Failed'),
    ]
    PRESET_CHOICES = [('desk', 'Desk'), ('full', 'Full scale')]

    experiment = models.CharField(max_length=32)
    preset = models.CharField(max_length=16, choices=PRESET_CHOICES, default='desk')
    seed = models.BigIntegerField(default=1)
    status = models.CharField(max_length=16, choices=STATUS_CHOICES, default=STATUS_RUNNING)

    config = models.JSONField(default=dict, help_text='Config echo of the run')
    summary = models.JSONField(default=dict, blank=True)
    error = models.TextField(blank=True)
    version = models.CharField(max_length=64, blank=True)
    output_dir = models.CharField(max_length=255, blank=True)

    started_at = models.DateTimeField(default=timezone.now)
    finished_at = models.DateTimeField(null=True, blank=True)

    def finish(self, summary, version=''):
        self.summary = summary
        self.version = version
        self.status = self.STATUS_FINISHED
        self.finished_at = timezone.now()
        self.save()

    def fail(self, message):
        self.error = message
        self.status = self.STATUS_FAILED
        self.finished_at = timezone.now()
        self.save()

    def duration(self):
        if self.finished_at is None:
            return None
        return (self.finished_at - self.started_at).total_seconds()

    def __str__(self):
        return f"{self.experiment} ({self.preset}, seed {self.seed}) - {self.status}"

    class Meta:
        verbose_name = 'Experiment Run'
        verbose_name_plural = 'Experiment Runs'
        ordering = ['-started_at']


class ParticleSnapshot(models.Model):
    """Versioned particle-set payload; matrices are rebuilt on load"""

    KIND_CHOICES = [(REGRESSION, 'Regression'), (CLASSIFICATION, 'Classification')]

    run = models.ForeignKey(
        ExperimentRun,
        on_delete=models.CASCADE,
        related_name='snapshots',
        null=True,
        blank=True,
    )
    t = models.PositiveIntegerField()
    kind = models.CharField(max_length=16, choices=KIND_CHOICES)
    n_particles = models.PositiveIntegerField()
    payload = models.JSONField()
    created_at = models.DateTimeField(auto_now_add=True)

    @classmethod
    def capture(cls, ps, run=None):
        return cls.objects.create(
            run=run, t=ps.t, kind=ps.kind, n_particles=ps.N, payload=storable(to_snapshot(ps)),
        )

    def restore(self):
        return from_snapshot(self.payload)

    def __str__(self):
        return f"{self.kind} snapshot at t={self.t} ({self.n_particles} particles)"

    class Meta:
        verbose_name = 'Particle Snapshot'
        verbose_name_plural = 'Particle Snapshots'
        ordering = ['-created_at']
