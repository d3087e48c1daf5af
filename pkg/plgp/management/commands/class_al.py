from ...experiments import CLASS_AL, run_class_al
from .class_static import Command as StaticCommand


class Command(StaticCommand):
    help = 'BVSB entropy active learning for PL classification over a fixed candidate pool'
    experiment = CLASS_AL

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--smoothing', help="Entropy smoothing: off, map or a kernel range")

    def run(self, cfg, options):
        return run_class_al(cfg)
