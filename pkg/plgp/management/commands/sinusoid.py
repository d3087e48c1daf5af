from ...experiments import SINUSOID, run_sinusoid_regression
from ..base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'PL against MCMC for GP regression on the noisy 1-d sinusoid'
    experiment = SINUSOID

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--noise-sd', type=float, help='Observation noise sd on the raw scale')
        parser.add_argument('--mcmc-iters', type=int)
        parser.add_argument('--mcmc-thin', type=int)
        parser.add_argument('--test-size', type=int)

    def run(self, cfg, options):
        return run_sinusoid_regression(cfg)

    def describe(self, summary):
        return (
            f"RMSE PL {summary['rmse_pl_mean']:.5g} ({summary['rmse_pl_sd']:.2g}), "
            f"MCMC {summary['rmse_mcmc_mean']:.5g} ({summary['rmse_mcmc_sd']:.2g}), "
            f"PL win-rate {summary['pl_win_rate']:.2f}"
        )
