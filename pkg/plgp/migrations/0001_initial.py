# Generated by Django 5.2.4 on 2026-10-19 10:12

import django.db.models.deletion
import django.utils.timezone
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('experiment', models.CharField(max_length=32)),
                ('preset', models.CharField(choices=[('desk', 'Desk'), ('full', 'Full scale')], default='desk', max_length=16)),
                ('seed', models.BigIntegerField(default=1)),
                ('status', models.CharField(choices=[('running', 'Running'), ('finished', 'Finished'), ('failed', 'Failed')], default='running', max_length=16)),
                ('config', models.JSONField(default=dict, help_text='Config echo of the run')),
                ('summary', models.JSONField(blank=True, default=dict)),
                ('error', models.TextField(blank=True)),
                ('version', models.CharField(blank=True, max_length=64)),
                ('output_dir', models.CharField(blank=True, max_length=255)),
                ('started_at', models.DateTimeField(default=django.utils.timezone.now)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'verbose_name': 'Experiment Run',
                'verbose_name_plural': 'Experiment Runs',
                'ordering': ['-started_at'],
            },
        ),
        migrations.CreateModel(
            name='ParticleSnapshot',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('t', models.PositiveIntegerField()),
                ('kind', models.CharField(choices=[('regression', 'Regression'), ('classification', 'Classification')], max_length=16)),
                ('n_particles', models.PositiveIntegerField()),
                ('payload', models.JSONField()),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('run', models.ForeignKey(blank=True, null=True, on_delete=django.db.models.deletion.CASCADE, related_name='snapshots', to='plgp.experimentrun')),
            ],
            options={
                'verbose_name': 'Particle Snapshot',
                'verbose_name_plural': 'Particle Snapshots',
                'ordering': ['-created_at'],
            },
        ),
    ]
