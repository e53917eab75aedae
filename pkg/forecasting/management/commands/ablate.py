from ...runner import run_ablate
from ..base import ForecastingCommand, variant_list


class Command(ForecastingCommand):
    help = 'Train and test a list of gate variants over several seeds'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--variants',
            type=variant_list,
            help='Comma-separated tokens <gate_variant>[@<layers>][+notime]; overrides variants',
        )

    def run(self, config, output_dir, options):
        summary = run_ablate(config, output_dir)
        self.stdout.write(summary.to_string(index=False))
        self.stdout.write(self.style.SUCCESS(f'Ablation of {len(summary)} variants written to {output_dir}'))
