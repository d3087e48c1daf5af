from ...experiments import EI_OPT, run_ei_optimization
from ..base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Expected improvement optimisation of the noisy 2-d exponential'
    experiment = EI_OPT

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--candidates', type=int, help='Fresh LHD candidates per round')
        parser.add_argument('--noise-sd', type=float)
        parser.add_argument('--fmin-mode', choices=['mean-surface', 'observed'])

    def run(self, cfg, options):
        return run_ei_optimization(cfg)

    def describe(self, summary):
        return (
            f"{summary['within_0_1']} of {len(summary['final_x_star'])} runs within 0.1 "
            f"of the minimiser, mean gap {summary['gap_mean']:.4f}"
        )
