from ...runner import run_evaluate
from ..base import ForecastingCommand


class Command(ForecastingCommand):
    help = 'Score a checkpoint with masked MAE / MAPE / RMSE per horizon'
    uses_checkpoint = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--split', choices=['train', 'val', 'test'], default='test', help='Split to evaluate')

    def run(self, config, output_dir, options):
        report = run_evaluate(config, options['checkpoint'], output_dir, split_name=options['split'])
        for row in report.rows():
            self.stdout.write(
                f"{row['label']:>8}  MAE {row['mae']}  MAPE {row['mape_pct']}  RMSE {row['rmse']}  n={row['count']}"
            )
        self.stdout.write(self.style.SUCCESS(f'Metrics written to {output_dir}'))
