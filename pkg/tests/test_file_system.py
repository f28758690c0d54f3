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

Tests of the configuration files, series ingestion and result files.

------------------------------------------------------------------------------------------------------------------------
"""
import json
import os

import numpy as np
import pandas as pd
import pytest

from cptseg import (RunConfig, SimulationFile, TimeSeries, changepoints, ga, GaConfig, load_result, manual,
                    read_series, result_from_dict, result_to_dict, write_result, write_result_files)


def _write(tmp_path, name: str, text: str) -> str:
    path = os.path.join(tmp_path, name)
    with open(path, 'w') as file:
        file.write(text)
    return path


RUN_FILE = """
input = 'series.csv'
method = ga
model = meanshift_norm
penalty = BIC
seed = 12
formats = json, csv

[ga]
    pop size = 30
    maxiter = 20
    seeding = log_informed

[nhpp]
    alpha rate = 0.5

[run first]
    method = pelt
    model = meanvar
    penalty = MBIC

[run second]
    method = manual
    tau = 10, 20
"""


class TestReadSeries:
    def test_reads_time_and_value(self, step_csv: str) -> None:
        series = read_series(step_csv)
        assert series.n == 60
        assert series.labels[:3] == (1, 2, 3)
        assert series.name == 'value'

    def test_time_column_is_optional(self, tmp_path) -> None:
        series = read_series(_write(tmp_path, 'a.csv', 'value\n1.5\n2.5\n'))
        assert series.labels is None
        assert series.values.tolist() == [1.5, 2.5]

    def test_custom_columns(self, tmp_path) -> None:
        series = read_series(_write(tmp_path, 'a.csv', 'year,temp\n1900,1\n1901,2\n'), 'year', 'temp')
        assert series.labels == (1900, 1901)

    @pytest.mark.parametrize('text, message', [
        ('time,value\n1,1\n2,\n', 'missing or non-numeric'),
        ('time,value\n1,1\n2,abc\n', 'missing or non-numeric'),
        ('time,value\n2,1\n1,2\n', 'strictly increasing'),
        ('time,other\n1,1\n', 'Column "value" not found'),
    ])
    def test_rejects(self, tmp_path, text: str, message: str) -> None:
        with pytest.raises(ValueError, match=message):
            read_series(_write(tmp_path, 'bad.csv', text))

    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(FileNotFoundError):
            read_series(os.path.join(tmp_path, 'nothing.csv'))


class TestRunConfig:
    def test_prepared_values(self, tmp_path) -> None:
        config = RunConfig(_write(tmp_path, 'run.cptseg', RUN_FILE))
        assert config['seed'] == 12
        assert config['formats'] == ['json', 'csv']
        assert config['time col'] == 'time'
        assert config.runs == ['run first', 'run second']
        assert config.nhpp_hyper() == {'alpha_rate': .5}

    def test_segment_options(self, tmp_path) -> None:
        config = RunConfig(_write(tmp_path, 'run.cptseg', RUN_FILE))
        method, model, penalty, options = config.segment_options()
        assert (method, model, penalty) == ('ga', 'meanshift_norm', 'BIC')
        assert options['pop_size'] == 30 and options['maxiter'] == 20 and options['rng_seed'] == 12
        assert options['seeding'] == 'log_informed'

    def test_run_sections(self, tmp_path) -> None:
        config = RunConfig(_write(tmp_path, 'run.cptseg', RUN_FILE))
        assert config.segment_options('run first')[:3] == ('pelt', 'meanvar', 'MBIC')
        method, _, _, options = config.segment_options('run second')
        assert method == 'manual' and options['tau'] == [10, 20]

    def test_overrides_take_precedence(self, tmp_path) -> None:
        config = RunConfig(_write(tmp_path, 'run.cptseg', RUN_FILE),
                           {'seed': 3, 'method': None, 'ga': {'maxiter': 5, 'run': None}})
        assert config['seed'] == 3
        assert config['method'] == 'ga'
        assert config.ga_options()['maxiter'] == 5
        assert config.ga_options()['pop_size'] == 30

    def test_without_file(self, monkeypatch) -> None:
        monkeypatch.setenv('CPTSEG_SEED', '77')
        config = RunConfig(overrides={'input': 'x.csv', 'tau': '4,9'})
        assert config['seed'] == 77
        assert config['tau'] == [4, 9]
        assert config['method'] == 'null'

    @pytest.mark.parametrize('text, message', [
        ('[plot]\n', 'Unknown section'),
        ('formats = json, pdf\n', 'Unknown output formats'),
        ('seed = abc\n', 'not an integer'),
        ('[ga]\n    population = 3\n', 'Unknown key'),
        ('tau = 1, x\n', 'comma-separated list'),
    ])
    def test_rejects(self, tmp_path, text: str, message: str) -> None:
        with pytest.raises(SyntaxError, match=message):
            RunConfig(_write(tmp_path, 'bad.cptseg', text))

    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(FileNotFoundError):
            RunConfig(os.path.join(tmp_path, 'nothing'))


class TestSimulationFile:
    def test_repeat_expands_regions(self, tmp_path) -> None:
        path = _write(tmp_path, 'sim.cptsim', "seed = 4\n[region 1]\n    length = 10\n    repeat = 3\n"
                                              "[region 2]\n    length = 5\n    distribution = poisson\n"
                                              "    lam = 2\n")
        sim = SimulationFile(path)
        assert sim.regions == ['region 1_01', 'region 1_02', 'region 1_03', 'region 2']
        spec = sim.to_spec()
        assert spec.n == 35
        assert spec.tau == (11, 21, 31)
        assert spec.rng_seed == 4
        assert spec.regions[-1].lam == 2.
        assert sim.to_spec(seed=9).rng_seed == 9

    @pytest.mark.parametrize('text, message', [
        ('seed = 1\n', 'does not contain any'),
        ('[region 1]\n    mu = 1\n', '"length"'),
        ('[region 1]\n    length = 3\n    distribution = cauchy\n', 'unknown distribution'),
        ('[region 1]\n    length = 3\n    scale = 2\n', 'unknown key'),
    ])
    def test_rejects(self, tmp_path, text: str, message: str) -> None:
        with pytest.raises(SyntaxError, match=message):
            SimulationFile(_write(tmp_path, 'bad.cptsim', text))


class TestResultFiles:
    def test_round_trip(self, tmp_path, step_series: TimeSeries) -> None:
        result = manual(step_series, (31, ), 'meanvar', 'MBIC')
        path = os.path.join(tmp_path, 'result.json')
        write_result(result, path)
        loaded = load_result(path)

        assert changepoints(loaded) == changepoints(result)
        assert (loaded.fitness_name, loaded.fitness_value) == (result.fitness_name, result.fitness_value)
        pd.testing.assert_frame_equal(loaded.model.region_params, result.model.region_params)
        assert loaded.model.loglik == result.model.loglik
        np.testing.assert_array_equal(loaded.model.fitted_values, result.model.fitted_values)

    def test_schema(self, step_series: TimeSeries) -> None:
        document = result_to_dict(manual(step_series, (31, )))
        assert {'algorithm', 'seg_params', 'fitness', 'changepoints', 'changepoint_labels', 'model',
                'elapsed_seconds'} <= set(document)
        assert {'name', 'region_params', 'model_params', 'df', 'logLik'} <= set(document['model'])
        assert document['model']['df'] == 4
        assert document['changepoint_labels'] == [31]

    def test_ga_round_trip(self, step_series: TimeSeries) -> None:
        result = ga(step_series, config=GaConfig(pop_size=10, maxiter=3))
        loaded = result_from_dict(json.loads(json.dumps(result_to_dict(result))))
        assert loaded.seg_params['generations'] == result.seg_params['generations']
        assert loaded.fitness_value == result.fitness_value

    def test_write_result_files(self, tmp_path, step_series: TimeSeries) -> None:
        out = os.path.join(tmp_path, 'out')
        written = write_result_files(manual(step_series, (31, )), out)
        assert sorted(os.path.basename(path) for path in written) == ['augment.csv', 'glance.csv', 'plot.svg',
                                                                     'result.json', 'tidy.csv']
        assert len(pd.read_csv(os.path.join(out, 'tidy.csv'))) == 2
        assert not [name for name in os.listdir(out) if name.endswith('.tmp')]

    def test_formats_subset(self, tmp_path, step_series: TimeSeries) -> None:
        written = write_result_files(manual(step_series, ()), str(tmp_path), ('json', ))
        assert [os.path.basename(path) for path in written] == ['result.json']
