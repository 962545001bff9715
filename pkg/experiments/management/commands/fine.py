from ..base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Tabulate (k - sqrt(2n/c)) / ln^(2/3) n against the second-order correction band'
    kind = 'fine_asymptotics'

    def show(self, report):
        self.stdout.write(report.tables['band'].to_string(index=False))
