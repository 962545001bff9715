from analytics.functionals import analytic_m_radial, maximize_dz, maximize_vertical_functional
from density.distributions import load_density
from geometry.coordinates import SeekModel

from ..base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Estimate the depth constant m: closed form, grid DP and Monte Carlo depth / sqrt(n)'
    kind = 'estimate_m'

    def show(self, report):
        config = report.config
        density = load_density(config.density)
        if config.surface == 'square':
            self.stdout.write(f'DP m (increasing paths, m={config.grid}, w={config.window}): '
                              f'{maximize_dz(density, m=config.grid, w=config.window).m:.6f}')
        else:
            model = SeekModel(config.c)
            if density.is_radial:
                self.stdout.write(f'analytic m: {analytic_m_radial(density, model):.6f}')
            dp = maximize_vertical_functional(density, model, grid=config.grid)
            self.stdout.write(f'DP m (grid={config.grid}): {dp.m:.6f}')
        table = report.aggregates[['n', 'depth_per_sqrt_n_mean', 'depth_per_sqrt_n_std', 'predicted_mean']]
        self.stdout.write(table.to_string(index=False))
