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

Shared fixtures of the test suite.

------------------------------------------------------------------------------------------------------------------------
"""
import os

import numpy as np
import pandas as pd
import pytest

from cptseg import TimeSeries


def data_csv(variable: str) -> str:
    """
    Path of an exported dataset from an environment variable. Skips the test when it is not set.
    """
    path = os.environ.get(variable)
    if not path or not os.path.isfile(path):
        pytest.skip(f'Set {variable} to an exported CSV file to run this test.')
    return path


slow = pytest.mark.skipif(not os.environ.get('CPTSEG_RUN_SLOW'), reason='Set CPTSEG_RUN_SLOW to run long properties.')


def step_values(rng: np.random.Generator, lengths: tuple[int, ...], means: tuple[float, ...],
                sigma: float = 1.) -> np.ndarray:
    return np.concatenate([mean + sigma * rng.standard_normal(length) for length, mean in zip(lengths, means)])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


@pytest.fixture
def step_series(rng: np.random.Generator) -> TimeSeries:
    """ Two regions of 30 observations, 6 standard deviations apart. """
    return TimeSeries(step_values(rng, (30, 30), (0., 6.)), tuple(range(1, 61)))


@pytest.fixture
def step_csv(tmp_path, step_series: TimeSeries) -> str:
    path = os.path.join(tmp_path, 'step.csv')
    pd.DataFrame({'time': step_series.labels, 'value': step_series.values}).to_csv(path, index=False)
    return path
