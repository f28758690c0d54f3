"""
Copyright (c) 2024 Josephine Siebert Pockelé

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

   http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.

------------------------------------------------------------------------------------------------------------------------

Tests of the NHPP model of threshold exceedances.

------------------------------------------------------------------------------------------------------------------------
"""
import numpy as np
import pandas as pd
import pytest

from cptseg import (GammaHyperparams, Objective, TimeSeries, exceedances, fit_meanshift, fit_nhpp, fit_nhpp_region,
                    log_prior, manual, region_log_likelihood, simulate_weibull_exceedances)
from cptseg.core import regions
from cptseg.models import as_changepoint_set
from tests.conftest import data_csv


FLAT = GammaHyperparams(1., 1e-3, 1., 1e-3)


class TestExceedances:
    def test_indices_above_threshold(self) -> None:
        found = exceedances(np.array([1., 5., 2., 7., 5.]), threshold=5.)
        assert found.indices == (4, )
        assert len(found) == 1

    def test_threshold_defaults_to_mean(self) -> None:
        found = exceedances(TimeSeries([0., 0., 3., 1.]))
        assert found.threshold == 1.
        assert found.indices == (3, )

    @pytest.mark.parametrize('tau', [(), (101, ), (37, 150), (20, 90, 160)])
    def test_counts_are_conserved(self, tau: tuple[int, ...]) -> None:
        values = simulate_weibull_exceedances(200, 1.2, 30., rng_seed=8).values
        events = np.array(exceedances(values, threshold=.5).indices)
        counts = [np.count_nonzero((events >= region.start) & (events < region.end))
                  for region in regions(as_changepoint_set(tau, 200))]
        assert sum(counts) == len(exceedances(values, threshold=.5))

    def test_hyperparameters_must_be_positive(self) -> None:
        with pytest.raises(ValueError, match='strictly positive'):
            GammaHyperparams(alpha_rate=0.)


class TestRegionFit:
    times = np.array([3, 7, 8, 15, 22])

    def test_posterior_is_likelihood_plus_prior(self) -> None:
        hyper = GammaHyperparams(2., 1., 3., .5)
        fit = fit_nhpp_region(self.times, 1, 31, hyper)
        assert fit.logLik == pytest.approx(region_log_likelihood(fit.alpha, fit.beta, self.times, 1, 31), rel=1e-12)
        assert fit.logPost == pytest.approx(fit.logLik + hyper.log_density(fit.alpha, fit.beta), abs=1e-9)
        assert fit.log_prior == pytest.approx(hyper.log_density(fit.alpha, fit.beta), abs=1e-9)

    def test_fixed_shape_matches_grid(self) -> None:
        hyper = GammaHyperparams()
        fit = fit_nhpp_region(self.times, 1, 31, hyper, alpha=1.)
        assert fit.alpha == 1.

        # With alpha = 1 the stationary point solves beta^2 + k beta - (end - start) = 0
        k, span = self.times.size, 30.
        beta = (-k + np.sqrt(k ** 2 + 4 * span)) / 2
        assert fit.beta == pytest.approx(beta, rel=1e-6)

        grid = np.linspace(.5 * beta, 2 * beta, 20_001)
        posterior = [region_log_likelihood(1., b, self.times, 1, 31) + hyper.log_density(1., b) for b in grid]
        assert fit.logPost >= max(posterior) - 1e-6
        assert fit.beta == pytest.approx(grid[int(np.argmax(posterior))], abs=2 * (grid[1] - grid[0]))

    def test_empty_region(self) -> None:
        fit = fit_nhpp_region(np.array([], dtype=int), 1, 50)
        assert fit.alpha > 0 and fit.beta > 0
        assert np.isfinite(fit.logPost)

    @pytest.mark.parametrize('hyper', [GammaHyperparams(), GammaHyperparams(2., 1., 3., .5)])
    def test_map_beats_small_perturbations(self, hyper: GammaHyperparams) -> None:
        fit = fit_nhpp_region(self.times, 1, 31, hyper)
        for da in (-.01, 0., .01):
            for db in (-.01, 0., .01):
                alpha, beta = fit.alpha * (1. + da), fit.beta * (1. + db)
                perturbed = region_log_likelihood(alpha, beta, self.times, 1, 31) + hyper.log_density(alpha, beta)
                assert perturbed <= fit.logPost + 1e-7


class TestFitNhpp:
    def test_region_table(self) -> None:
        values = simulate_weibull_exceedances(400, 1., 8., rng_seed=3).values
        fit = fit_nhpp(TimeSeries(values), as_changepoint_set((201, ), 400), threshold=.5)
        assert list(fit.region_params.columns) == ['region', 'param_alpha', 'param_beta', 'logPost', 'logLik']
        assert fit.loglik == pytest.approx(fit.region_params['logLik'].sum())
        assert log_prior(fit) == pytest.approx(fit.log_prior)
        assert fit.num_params_per_region == 2 and fit.num_model_params == 0

    def test_log_prior_needs_nhpp(self, step_series: TimeSeries) -> None:
        with pytest.raises(ValueError, match='only defined for NHPP'):
            log_prior(fit_meanshift(step_series, ()))

    def test_region_without_exceedances(self) -> None:
        values = np.array([0.] * 40 + [1.] * 20)
        fit = fit_nhpp(TimeSeries(values), as_changepoint_set((41, ), 60), threshold=.5)
        assert np.isfinite(fit.region_params[['param_alpha', 'param_beta', 'logPost', 'logLik']].to_numpy()).all()
        assert np.isfinite(fit.loglik) and np.isfinite(fit.log_prior)

    @pytest.mark.parametrize('tau', [(), (41, ), (3, 41), (30, 57)])
    def test_bmdl_objective_never_raises(self, tau: tuple[int, ...]) -> None:
        objective = Objective(np.array([0.] * 40 + [1.] * 20), 'nhpp', 'BMDL', {'threshold': .5})
        assert not np.isnan(objective.safe(tau))

    def test_recovers_weibull_shape(self) -> None:
        close = 0
        for seed in range(10):
            values = simulate_weibull_exceedances(5000, 1.3, 55., rng_seed=seed).values
            fit = fit_nhpp(TimeSeries(values), as_changepoint_set((), 5000), threshold=.5, hyper=FLAT)
            close += abs(fit.region_params.loc[0, 'param_alpha'] - 1.3) <= .13
        assert close >= 8

    def test_bogota_regions(self) -> None:
        table = pd.read_csv(data_csv('CPTSEG_BOGOTA_CSV'))
        series = TimeSeries(table['value'].to_numpy(dtype=float))
        result = manual(series, (379, 820, 1026), 'nhpp', 'BMDL', threshold=37.)
        assert result.model.region_params.loc[0, 'param_alpha'] == pytest.approx(.711, rel=.1)
