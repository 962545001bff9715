from ..base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Compare empirical layer and service profiles with the predicted profile'
    kind = 'profile'

    def show(self, report):
        columns = ['n', 'layer_sup_distance_mean', 'layer_sup_distance_q95']
        if report.config.surface == 'disk':
            columns += ['service_sup_distance_mean', 'service_sup_distance_q95']
        self.stdout.write(report.aggregates[columns].to_string(index=False))
