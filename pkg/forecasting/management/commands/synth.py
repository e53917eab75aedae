from ...runner import run_synth
from ..base import ForecastingCommand


class Command(ForecastingCommand):
    help = 'Generate a synthetic speed panel with a planted coupling graph'

    def run(self, config, output_dir, options):
        artifacts = run_synth(config, output_dir)
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(artifacts)} files to {output_dir}'))
