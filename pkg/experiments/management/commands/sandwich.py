from ..base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Check M - 1 - 1/c <= k <= M + 1 + 2/c on small batches solved exactly; exits 2 on a violation'
    kind = 'sandwich'

    def show(self, report):
        trials = report.trials
        per_n = trials.groupby('n').agg(trials=('trial', 'size'), passed=('holds', 'sum'),
                                        depth=('depth', 'mean'), k_exact=('k_exact', 'mean'))
        self.stdout.write(per_n.reset_index().to_string(index=False))
        if report.failures:
            self.stdout.write(self.style.ERROR(f'{report.failures} violation(s)'))
        else:
            self.stdout.write(self.style.SUCCESS(f'All {len(trials)} instances within the bounds'))
