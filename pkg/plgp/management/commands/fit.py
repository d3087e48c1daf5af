from ...experiments import FIT, run_fit
from ..base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Particle learning fit of a user CSV (response or class column) with optional prediction'
    experiment = FIT

    def add_arguments(self, parser):
        parser.add_argument('train', help='Training CSV with a header row')
        super().add_arguments(parser)
        target = parser.add_mutually_exclusive_group(required=True)
        target.add_argument('--response', help='Regression response column')
        target.add_argument('--class-column', help='Class label column (labels 1..M)')
        parser.add_argument('--columns', nargs='+', help='Covariate columns (default: all others)')
        parser.add_argument('--predict', help='CSV of inputs to predict at')
        parser.add_argument('--snapshot', help='Write the final particle set to this JSON file')
        parser.add_argument('--class-samples', type=int)

    def run(self, cfg, options):
        return run_fit(
            cfg, options['train'],
            response=options.get('response'),
            class_column=options.get('class_column'),
            columns=options.get('columns'),
            predict_path=options.get('predict'),
            snapshot_path=options.get('snapshot'),
        )

    def describe(self, summary):
        return f"{summary['kind']} fit on {summary['rows']} rows, {summary['unique_final']} unique particles"
