from ...runner import run_export
from ..base import ForecastingCommand


class Command(ForecastingCommand):
    help = 'Export gate weights, neighbor rankings and per-layer forecast decompositions'
    uses_checkpoint = True

    def run(self, config, output_dir, options):
        artifacts = run_export(config, options['checkpoint'], output_dir)
        self.stdout.write(self.style.SUCCESS(f'Exported {len(artifacts)} files to {output_dir}'))
