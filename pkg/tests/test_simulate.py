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

Tests of the synthetic series generators.

------------------------------------------------------------------------------------------------------------------------
"""
import numpy as np
import pytest

from cptseg import RegionSpec, SimSpec, exceedances, simulate, simulate_weibull_exceedances


class TestSimulate:
    def test_lengths_and_truth(self) -> None:
        series, tau = simulate(SimSpec((RegionSpec(30), RegionSpec(20, mu=5.))))
        assert series.n == 50
        assert tau.tau == (31, )
        assert series.labels == tuple(range(1, 51))

    def test_deterministic(self) -> None:
        spec = SimSpec((RegionSpec(40, sigma=2.), RegionSpec(40, 'lognormal')), rng_seed=8)
        np.testing.assert_array_equal(simulate(spec)[0].values, simulate(spec)[0].values)
        other = SimSpec(spec.regions, rng_seed=9)
        assert not np.array_equal(simulate(spec)[0].values, simulate(other)[0].values)

    def test_poisson_counts(self) -> None:
        series, _ = simulate(SimSpec((RegionSpec(50, 'poisson', lam=3.), )))
        assert np.all(series.values >= 0)
        assert np.all(series.values == np.floor(series.values))

    def test_trend(self) -> None:
        series, _ = simulate(SimSpec((RegionSpec(200, 'trend', beta0=1., beta1=.5, sigma=0.), )))
        np.testing.assert_allclose(series.values, 1. + .5 * np.arange(200))

    @pytest.mark.parametrize('settings', [{'length': 0}, {'length': 5, 'distribution': 'cauchy'},
                                          {'length': 5, 'sigma': -1.}, {'length': 5, 'lam': -2.}])
    def test_rejects(self, settings: dict) -> None:
        with pytest.raises(ValueError):
            RegionSpec(**settings)

    def test_needs_a_region(self) -> None:
        with pytest.raises(ValueError, match='at least one region'):
            SimSpec(())


class TestWeibullExceedances:
    def test_binary_series(self) -> None:
        series = simulate_weibull_exceedances(1000, 1.2, 20., rng_seed=1)
        assert set(np.unique(series.values)) <= {0., 1.}
        assert series.n == 1000

    def test_event_count(self) -> None:
        # Rate 0.1 per index, and an index holds at most one event
        counts = [len(exceedances(simulate_weibull_exceedances(2000, 1., 10., rng_seed=seed), .5))
                  for seed in range(20)]
        assert np.mean(counts) == pytest.approx(200 * (1 - np.exp(-.1)) / .1, rel=.1)

    def test_rejects_bad_parameters(self) -> None:
        with pytest.raises(ValueError):
            simulate_weibull_exceedances(100, 0., 10.)
