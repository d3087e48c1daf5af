from ...experiments import CLASS_STATIC, run_class_static
from ..base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'PL classification on a fixed maximum entropy design of the three-class data'
    experiment = CLASS_STATIC

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--pool-size', type=int)
        parser.add_argument('--test-size', type=int)
        parser.add_argument('--class-samples', type=int, help='Monte Carlo draws per class probability')

    def run(self, cfg, options):
        return run_class_static(cfg)

    def describe(self, summary):
        return f"misclassified {summary['misclassified_mean']:.1f} of {summary['test_size']} on average"
