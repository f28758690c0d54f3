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

Tests of the series, changepoint set and result table types.

------------------------------------------------------------------------------------------------------------------------
"""
from hypothesis import given, strategies as st
import numpy as np
import pytest

from cptseg import (ChangepointSet, LogLikSummary, TimeSeries, augment, changepoints, fit_meanshift, glance,
                    manual, region_lengths, regions, tidy)


@st.composite
def changepoint_sets(draw) -> ChangepointSet:
    n = draw(st.integers(1, 60))
    tau = draw(st.sets(st.integers(2, n), max_size=n - 1)) if n > 1 else set()
    return ChangepointSet(tuple(sorted(tau)), n)


class TestTimeSeries:
    def test_values_are_read_only(self) -> None:
        series = TimeSeries([1., 2., 3.])
        assert series.n == 3
        with pytest.raises(ValueError):
            series.values[0] = 5.

    @pytest.mark.parametrize('values', [[], [1., np.nan], [np.inf, 2.]])
    def test_rejects_missing_values(self, values: list) -> None:
        with pytest.raises(ValueError):
            TimeSeries(values)

    def test_rejects_label_mismatch(self) -> None:
        with pytest.raises(ValueError, match='time labels'):
            TimeSeries([1., 2.], (1, 2, 3))

    def test_rejects_non_increasing_labels(self) -> None:
        with pytest.raises(ValueError, match='strictly increasing'):
            TimeSeries([1., 2., 3.], (1, 3, 2))

    def test_date_labels(self) -> None:
        series = TimeSeries([1., 2.], ('1999-12-01', '2000-01-01'))
        assert series.labels == ('1999-12-01', '2000-01-01')


class TestChangepointSet:
    @pytest.mark.parametrize('tau', [(1, ), (11, ), (5, 5), (7, 3)])
    def test_rejects_invalid(self, tau: tuple) -> None:
        with pytest.raises(ValueError):
            ChangepointSet(tau, 10)

    def test_boundaries(self) -> None:
        assert ChangepointSet((4, 8), 10).boundaries().tolist() == [1, 4, 8, 11]

    @given(changepoint_sets())
    def test_regions_partition_the_series(self, tau: ChangepointSet) -> None:
        parts = regions(tau)
        assert len(parts) == tau.m + 1
        assert parts[0].start == 1 and parts[-1].end == tau.n + 1
        assert all(left.end == right.start for left, right in zip(parts[:-1], parts[1:]))
        assert sum(region_lengths(tau)) == tau.n
        assert all(length >= 1 for length in region_lengths(tau))

    def test_region_labels(self) -> None:
        assert [region.label for region in regions(ChangepointSet((3, ), 5))] == ['[1,3)', '[3,6)']


class TestLogLikSummary:
    def test_degrees_of_freedom(self) -> None:
        ll = LogLikSummary.from_counts(-10., 2, 1, ChangepointSet((3, 6), 9))
        assert ll.df == 2 * 3 + 1 + 2
        assert ll.m == 2 and ll.nobs == 9

    def test_rejects_inconsistent_df(self) -> None:
        with pytest.raises(ValueError, match='Degrees of freedom'):
            LogLikSummary(-10., 1, 1, 5, 9, ChangepointSet((3, ), 9))


class TestResultTables:
    def test_augment(self, step_series: TimeSeries) -> None:
        fit = fit_meanshift(step_series, (31, ))
        table = augment(fit)
        assert list(table.columns) == ['index', 'y', 'region', '.fitted', '.resid']
        assert len(table) == 60
        assert set(table['region']) == {'[1,31)', '[31,61)'}
        np.testing.assert_allclose(table['.fitted'] + table['.resid'], step_series.values)

    def test_tidy(self, step_series: TimeSeries) -> None:
        table = tidy(fit_meanshift(step_series, (31, )))
        assert len(table) == 2
        assert table['num_obs'].tolist() == [30, 30]
        assert table['begin'].tolist() == [1, 31]
        np.testing.assert_allclose(table['mean'], table['param_mu'])

    def test_glance_and_changepoints(self, step_series: TimeSeries) -> None:
        result = manual(step_series, (31, ))
        row = glance(result)
        assert list(row.columns) == ['algorithm', 'seg_params', 'model_name', 'criteria', 'fitness', 'elapsed_time']
        assert row.loc[0, 'algorithm'] == 'manual'
        assert row.loc[0, 'fitness'] == pytest.approx(result.fitness_value)
        assert changepoints(result) == [31]
        assert changepoints(result, use_labels=True) == [31]

    def test_labels_required(self) -> None:
        result = manual(TimeSeries([0., .1, 5., 5.2]), (3, ))
        with pytest.raises(ValueError, match='no time labels'):
            changepoints(result, use_labels=True)
