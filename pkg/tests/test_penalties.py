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

Tests of the penalised objective functions.

------------------------------------------------------------------------------------------------------------------------
"""
from hypothesis import given, strategies as st
import numpy as np
import pytest

from cptseg import (ADDITIVE_PENALTIES, PENALTY_IDS, BIC, ChangepointSet, LogLikSummary, MBIC, TimeSeries,
                    as_penalty_id, fit_meanshift, fit_model, model_glance, pelt_decomposition, penalty_part,
                    penalty_value, region_lengths)


@st.composite
def penalty_cases(draw) -> tuple:
    n = draw(st.integers(3, 80))
    tau = tuple(sorted(draw(st.sets(st.integers(2, n), max_size=min(n - 1, 8)))))
    return n, tau, draw(st.integers(1, 4)), draw(st.integers(0, 2))


class TestHandValues:
    def test_mdl(self) -> None:
        assert penalty_part('MDL', (51, ), 100, 1, 1) == pytest.approx(17.7276, abs=1e-3)

    def test_mbic(self) -> None:
        assert penalty_part('MBIC', (51, ), 100, 1, 1) == pytest.approx(12.4292, abs=1e-3)

    def test_hqc(self) -> None:
        assert penalty_part('HQC', (34, 67), 100, 1, 1) == pytest.approx(6.1090, abs=1e-3)

    def test_bic(self) -> None:
        # df = 2 regions + sigma + 1 changepoint
        assert penalty_part('BIC', (51, ), 100, 1, 1) == pytest.approx(4 * np.log(100))

    def test_aic(self) -> None:
        assert penalty_part('AIC', (10, 20), 30, 2, 0) == pytest.approx(2 * (2 * 3 + 2))


class TestPenaltyProperties:
    @given(st.integers(3, 10_000), st.integers(0, 5), st.integers(0, 3), st.sampled_from(PENALTY_IDS))
    def test_zero_without_changepoints(self, n: int, a: int, b: int, penalty: str) -> None:
        assert penalty_part(penalty, (), n, a, b) == 0.

    @given(penalty_cases(), st.sampled_from(ADDITIVE_PENALTIES))
    def test_segment_additive_form(self, case: tuple, penalty: str) -> None:
        n, tau, a, b = case
        model = {(1, 1): 'meanshift_norm', (2, 1): 'trendshift', (2, 0): 'meanvar', (1, 0): 'meanshift_pois',
                 (1, 2): 'meanshift_norm_ar1', (2, 2): 'trendshift_ar1', (3, 1): 'lmshift',
                 (3, 2): 'lmshift_ar1'}.get((a, b))
        if model is None:
            return
        decomposition = pelt_decomposition(penalty, model, n)
        lengths = region_lengths(ChangepointSet(tau, n))
        assert decomposition.total(lengths) == pytest.approx(penalty_part(penalty, tau, n, a, b), abs=1e-9)

    @given(penalty_cases(), st.sampled_from(ADDITIVE_PENALTIES), st.data())
    def test_grows_with_every_changepoint(self, case: tuple, penalty: str, data: st.DataObject) -> None:
        n, tau, a, b = case
        free = sorted(set(range(2, n + 1)) - set(tau))
        if not free:
            return
        extra = tuple(sorted((*tau, data.draw(st.sampled_from(free)))))
        assert penalty_part(penalty, extra, n, a, b) > penalty_part(penalty, tau, n, a, b)

    @pytest.mark.parametrize('penalty', ['MDL', 'BMDL'])
    def test_position_dependent_penalties_are_not_additive(self, penalty: str) -> None:
        with pytest.raises(ValueError, match='not segment-additive'):
            pelt_decomposition(penalty, 'meanvar', 50)

    def test_hqc_needs_three_observations(self) -> None:
        with pytest.raises(ValueError, match='n >= 3'):
            penalty_part('HQC', (2, ), 2, 1, 1)

    def test_sic_is_bic(self) -> None:
        assert penalty_part('SIC', (5, 9), 20, 1, 1) == penalty_part('BIC', (5, 9), 20, 1, 1)

    def test_identifiers(self) -> None:
        assert as_penalty_id('mbic') == 'MBIC'
        with pytest.raises(ValueError, match='Unknown penalty'):
            as_penalty_id('DIC')


class TestPenaltyValue:
    def test_summary_and_fit_agree(self, step_series: TimeSeries) -> None:
        fit = fit_meanshift(step_series, (31, ))
        ll = LogLikSummary.from_counts(fit.loglik, 1, 1, fit.tau)
        assert BIC(fit) == pytest.approx(BIC(ll))
        assert BIC(fit) == pytest.approx(4 * np.log(60) - 2 * fit.loglik)
        assert MBIC(fit) == pytest.approx(penalty_value('MBIC', ll))

    def test_bmdl_requires_a_prior(self, step_series: TimeSeries) -> None:
        with pytest.raises(ValueError, match='BMDL requires NHPP'):
            penalty_value('BMDL', fit_meanshift(step_series, ()))

    def test_bmdl_adds_the_prior(self) -> None:
        values = np.zeros(40)
        values[[3, 8, 20, 25, 27, 30, 33, 36, 38]] = 1.
        fit = fit_model(TimeSeries(values), (21, ), 'nhpp', threshold=.5)
        assert penalty_value('BMDL', fit) == pytest.approx(penalty_value('MDL', fit) - 2 * fit.log_prior)

    def test_bmdl_prior_counts_without_changepoints(self) -> None:
        values = np.zeros(30)
        values[[2, 11, 19, 28]] = 1.
        fit = fit_model(TimeSeries(values), (), 'nhpp', threshold=.5)
        assert penalty_value('BMDL', fit) == pytest.approx(-2 * fit.loglik - 2 * fit.log_prior)

    def test_model_glance(self, step_series: TimeSeries) -> None:
        row = model_glance(fit_meanshift(step_series, (31, )))
        assert list(row.columns) == ['num_cpts', 'rmse', 'logLik', 'AIC', 'BIC', 'MBIC', 'MDL']
        assert row.loc[0, 'num_cpts'] == 1
        assert row.loc[0, 'rmse'] > 0.
