"""
Shared plumbing of the experiment commands: common flags, option
validation through RunConfigForm, optional run recording and report output.
"""
import json
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from ..exceptions import PLGPError
from ..experiments import write_report
from ..forms import RunConfigForm
from ..models import ExperimentRun, ParticleSnapshot
from ..utils import storable, version_string

logger = logging.getLogger(__name__)


class ExperimentCommand(BaseCommand):
    experiment = None

    def add_arguments(self, parser):
        parser.add_argument('--preset', choices=['desk', 'full'], help='Scale preset (default desk)')
        parser.add_argument('--particles', type=int, help='Number of particles N')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--t0', type=int, help='Design size at initialisation')
        parser.add_argument('--rounds', type=int, help='Final design size T')
        parser.add_argument('--out', help='Output directory')
        parser.add_argument('--no-rejuvenate', action='store_true', default=None)
        parser.add_argument('--resample', choices=['multinomial', 'systematic'])
        parser.add_argument('--format', choices=['csv', 'json'])
        parser.add_argument('--workers', type=int, help='Threads per particle set')
        parser.add_argument('--rep-workers', type=int, help='Replications run concurrently')
        parser.add_argument('--replications', type=int)
        parser.add_argument('--config', help='JSON file whose keys override the flags')
        parser.add_argument('--record', action='store_true', help='Record the run in the database')

    def run(self, cfg, options):
        raise NotImplementedError

    def form_data(self, options):
        data = {k: v for k, v in options.items() if v is not None and k in RunConfigForm.base_fields}
        if options.get('config'):
            path = Path(options['config'])
            try:
                data.update(json.loads(path.read_text(encoding='utf-8')))
            except (OSError, json.JSONDecodeError) as exc:
                raise CommandError(f'cannot read config file {path}: {exc}')
        return data

    def build_config(self, options):
        form = RunConfigForm(self.experiment, data=self.form_data(options))
        cfg = form.to_run_config() if form.is_valid() else None
        if cfg is None:
            errors = '; '.join(
                f'{field}: {" ".join(messages)}' if field != '__all__' else ' '.join(messages)
                for field, messages in form.errors.items()
            )
            raise CommandError(f'invalid configuration: {errors}')
        return cfg

    def handle(self, *args, **options):
        cfg = self.build_config(options)
        record = None
        if options.get('record'):
            record = ExperimentRun.objects.create(
                experiment=cfg.experiment, preset=cfg.preset, seed=cfg.seed,
                config=storable(cfg.to_dict()),
                output_dir=str(cfg.out_dir),
            )
        logger.info('running %s (%s preset, seed %d)', cfg.experiment, cfg.preset, cfg.seed)
        try:
            report = self.run(cfg, options)
        except PLGPError as exc:
            if record is not None:
                record.fail(str(exc))
            raise CommandError(str(exc))

        written = write_report(report, cfg.out_dir, cfg.fmt)
        if record is not None:
            record.finish(storable(report['summary']), version_string())
            if report.get('particles') is not None:
                ParticleSnapshot.capture(report['particles'], run=record)
        for path in written:
            self.stdout.write(f'wrote {path}')
        self.stdout.write(self.style.SUCCESS(self.describe(report['summary'])))
        return None

    def describe(self, summary):
        return f'{self.experiment} finished'
