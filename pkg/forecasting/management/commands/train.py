from ...runner import run_train
from ..base import ForecastingCommand


class Command(ForecastingCommand):
    help = 'Train an FC-GAGA model and score its best checkpoint on the test split'

    def run(self, config, output_dir, options):
        result, report = run_train(config, output_dir)
        self.stdout.write(self.style.SUCCESS(
            f'Trained {result.steps} steps (best epoch {result.best_epoch}); '
            f'test mean MAE {report.mean_mae}; checkpoint {result.best_checkpoint}'
        ))
