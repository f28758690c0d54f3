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

Module containing the classes and functions that manage the interactions with files: run configuration, simulation
specifications, series ingestion and the result files.

------------------------------------------------------------------------------------------------------------------------
"""
from typing import Any, Optional
import tempfile
import logging
import json
import copy
import os

from configobj import ConfigObj
import numpy as np
import pandas as pd

from .core import ChangepointSet, ModelFit, SegmentationResult, TimeSeries, augment, changepoints, glance, tidy
from .simulate import DISTRIBUTIONS, RegionSpec, SimSpec
from .svg_plot import segmentation_svg


__all__ = ['FORMATS', 'RunConfig', 'SimulationFile', 'default_seed', 'read_series', 'atomic_write', 'write_csv',
           'write_json', 'result_to_dict', 'result_from_dict', 'write_result', 'load_result', 'write_result_files', ]

_log = logging.getLogger(__name__)

FORMATS = ('json', 'csv', 'svg', )
_GA_KEYS = {'pop size': ('pop_size', int), 'maxiter': ('maxiter', int), 'run': ('run', int),
            'crossover': ('crossover_prob', float), 'mutation': ('mutation_prob', float),
            'elitism': ('elitism', int), 'seeding': ('seeding', str), 'jobs': ('n_jobs', int), }
_NHPP_KEYS = ('alpha shape', 'alpha rate', 'beta shape', 'beta rate', )


def default_seed() -> int:
    """
    Seed from the CPTSEG_SEED environment variable, 0 when it is not set.

    Raises
    ------
    SyntaxError :
        If the variable is not an integer.
    """
    seed = os.environ.get('CPTSEG_SEED', '0')
    try:
        return int(seed)
    except ValueError:
        raise SyntaxError(f'Environment variable CPTSEG_SEED is not an integer: "{seed}".')


def _int_list(value: Any, what: str) -> list[int]:
    """
    Convert a ConfigObj value (a string, a list of strings, or ints) into a list of ints.
    """
    if value in (None, '', []):
        return []
    items = value if isinstance(value, (list, tuple)) else str(value).split(',')
    try:
        return [int(str(item).strip()) for item in items if str(item).strip()]
    except ValueError:
        raise SyntaxError(f'"{what}" must be a comma-separated list of integers, got "{value}".')


# ======================================================================================================================
# RUN CONFIGURATION
# ======================================================================================================================
class RunConfig(ConfigObj):
    """
    Subclass of ConfigObj. Stores the full configuration of a segmentation run. Responsible for verification and
    pre-processing of the config file information, with command-line values taking precedence.

    Works similar to a dictionary (see ConfigObj documentation).

    Parameters
    ----------
    path : str, optional
        Path of the run config file (<name>.cptseg). Without a file, only the overrides and defaults are used.
    overrides : dict, optional
        Values set on the command line. Keys are the config file keys; None values are ignored.

    Attributes
    ----------
    path : str or None
        Absolute path of the config file.
    runs : list of str
        Names of the [run <name>] sections, in file order.

    Raises
    ------
    FileNotFoundError :
        If the config file does not exist.
    SyntaxError :
        If anything in the config file is wrong.
    """
    def __init__(self, path: Optional[str] = None, overrides: Optional[dict] = None) -> None:
        self.path = None
        if path is not None:
            self.path = os.path.abspath(path if path.endswith('.cptseg') or os.path.isfile(path)
                                        else f'{path}.cptseg')
            if not os.path.isfile(self.path):
                raise FileNotFoundError(f'Run config file {self.path} not found.')

        super().__init__(self.path, interpolation=False)
        # Command line values overwrite the file, section by section
        for key, value in (overrides or {}).items():
            if isinstance(value, dict):
                value = {name: item for name, item in value.items() if item is not None}
                if value and key in self.sections:
                    self[key].update(value)
                elif value:
                    self[key] = value
            elif value is not None:
                self[key] = value

        self.runs = [section for section in self.sections if section.startswith('run ')]
        if self.path is not None:
            _log.info(f'Successfully loaded "{os.path.basename(self.path)}". Verifying run setup...')
        self._verify_run()
        self._prepare_run()

    def _verify_run(self) -> None:
        """
        Verification of the run configuration.

        Raises
        ------
        SyntaxError :
            If anything in the configuration is wrong.
        """
        for section in self.sections:
            if not (section.startswith('run ') or section in ('ga', 'wbs', 'binseg', 'exact', 'nhpp', 'bench')):
                raise SyntaxError(f'Unknown section [{section}] in the run configuration.')

        for section in self.runs:
            if not section[4:].strip():
                raise SyntaxError('A [run] section needs a name, like [run pelt-mbic].')

        formats = self.get('formats', list(FORMATS))
        formats = formats if isinstance(formats, (list, tuple)) else str(formats).split(',')
        unknown = {item.strip() for item in formats} - set(FORMATS)
        if unknown:
            raise SyntaxError(f'Unknown output formats: {", ".join(sorted(unknown))}. Choose from {FORMATS}.')

        for key in ('degree', 'seed', 'min seg len'):
            if key in self and not str(self[key]).strip().lstrip('-').isdigit():
                raise SyntaxError(f'"{key}" is not an integer: "{self[key]}".')

        if 'ga' in self.sections:
            for key in self['ga']:
                if key not in _GA_KEYS:
                    raise SyntaxError(f'Unknown key "{key}" in the [ga] section.')

        if 'nhpp' in self.sections:
            for key in self['nhpp']:
                if key not in _NHPP_KEYS:
                    raise SyntaxError(f'Unknown key "{key}" in the [nhpp] section.')

    def _prepare_run(self) -> None:
        """
        Convert the configuration values to their python types and fill in the defaults.
        """
        self['time col'] = self.get('time col', 'time')
        self['value col'] = self.get('value col', 'value')
        self['method'] = self.get('method', 'null')
        self['out'] = self.get('out', 'cptseg_output')

        for key in ('degree', 'min seg len'):
            self[key] = self.as_int(key) if key in self else None
        self['seed'] = self.as_int('seed') if 'seed' in self else default_seed()
        self['threshold'] = self.as_float('threshold') if 'threshold' in self else None
        self['verbose'] = self.as_bool('verbose') if 'verbose' in self else False
        self['tau'] = _int_list(self.get('tau'), 'tau')

        formats = self.get('formats', list(FORMATS))
        formats = formats if isinstance(formats, (list, tuple)) else str(formats).split(',')
        self['formats'] = [item.strip() for item in formats]

        for section in self.runs:
            if 'tau' in self[section]:
                self[section]['tau'] = _int_list(self[section]['tau'], f'{section}: tau')
            if 'degree' in self[section]:
                self[section]['degree'] = self[section].as_int('degree')

        if 'bench' in self.sections:
            seedings = self['bench'].get('seedings', ['uniform_half', 'log_informed'])
            self['bench']['seedings'] = seedings if isinstance(seedings, list) else [seedings]

    def nhpp_hyper(self) -> Optional[dict]:
        """
        Gamma hyperparameters from the [nhpp] section, or None without one.
        """
        if 'nhpp' not in self.sections:
            return None
        return {key.replace(' ', '_'): self['nhpp'].as_float(key) for key in self['nhpp']}

    def ga_options(self) -> dict:
        """
        GaConfig fields from the [ga] section.
        """
        options = {}
        for key, (name, kind) in _GA_KEYS.items():
            if 'ga' in self.sections and key in self['ga']:
                options[name] = kind(self['ga'][key])
        return options

    def segment_options(self, run: Optional[str] = None,
                        method: Optional[str] = None) -> tuple[str, Optional[str], Optional[str], dict]:
        """
        Arguments for algorithms.segment of the main run, or of one [run <name>] section.

        Parameters
        ----------
        run : str, optional
            Name of a run section. Its method, model, penalty, degree and tau take precedence.
        method : str, optional
            Method that replaces the configured one.

        Returns
        -------
        Tuple of method, model, penalty and the options dictionary.
        """
        settings = dict(self)
        if run is not None:
            settings.update({key: value for key, value in self[run].items() if not isinstance(value, dict)})

        method = settings['method'] if method is None else method
        options = {}
        if settings.get('degree') is not None:
            options['degree'] = settings['degree']
        if settings.get('min seg len') is not None:
            options['min_seg_len'] = settings['min seg len']
        if method == 'manual':
            options['tau'] = settings.get('tau', [])
        if self['threshold'] is not None:
            options['threshold'] = self['threshold']
        if self.nhpp_hyper() is not None:
            options['hyper'] = self.nhpp_hyper()

        if method in ('ga', 'ga-coen', 'ga-shi', 'random'):
            ga = self.ga_options()
            if method == 'random':
                ga = {key: value for key, value in ga.items() if key == 'pop_size'}
            options.update(ga)
            options['rng_seed'] = self['seed']
        elif method == 'wbs':
            options['rng_seed'] = self['seed']
            if 'wbs' in self.sections and 'intervals' in self['wbs']:
                options['num_intervals'] = self['wbs'].as_int('intervals')
        elif method == 'binseg' and 'binseg' in self.sections and 'max cpts' in self['binseg']:
            options['max_cpts'] = self['binseg'].as_int('max cpts')
        elif method == 'exact' and 'exact' in self.sections and 'max m' in self['exact']:
            options['max_m'] = self['exact'].as_int('max m')

        if method in ('pelt', 'wbs'):
            options.pop('threshold', None)
            options.pop('hyper', None)
        if method == 'wbs':
            options.pop('min_seg_len', None)

        return method, settings.get('model'), settings.get('penalty'), options


# ======================================================================================================================
# SIMULATION SPECIFICATION
# ======================================================================================================================
class SimulationFile(ConfigObj):
    """
    Subclass of ConfigObj. Stores a simulation specification (<name>.cptsim): a top-level seed and ordered
    [region <k>] sections with a length, a distribution and its parameters. A 'repeat' key in a region section
    duplicates it that many times.

    Parameters
    ----------
    path : str
        Path of the specification file.

    Raises
    ------
    FileNotFoundError :
        If the file does not exist.
    SyntaxError :
        If anything in the file is wrong.
    """
    def __init__(self, path: str) -> None:
        self.path = os.path.abspath(path)
        if not os.path.isfile(self.path):
            raise FileNotFoundError(f'Simulation file {self.path} not found.')
        super().__init__(self.path, interpolation=False)

        # Expand the repeated regions, in order
        self.regions = []
        for region in [section for section in self.sections if section.startswith('region')]:
            if 'repeat' in self[region]:
                try:
                    repeat = int(self[region]['repeat'])
                except ValueError:
                    raise SyntaxError(f'[{region}] "repeat" is not an integer.')
                for ri in range(repeat):
                    new_name = f'{region}_{str(ri + 1).zfill(2)}'
                    self[new_name] = {key: copy.deepcopy(value) for key, value in self[region].items()
                                      if key != 'repeat'}
                    self.regions.append(new_name)
                del self[region]
            else:
                self.regions.append(region)

        self._verify_simulation()
        _log.info(f'Successfully loaded "{os.path.basename(self.path)}" with {len(self.regions)} regions.')

    def _verify_simulation(self) -> None:
        """
        Verification of the simulation specification.

        Raises
        ------
        SyntaxError :
            If anything in the specification is wrong.
        """
        if not self.regions:
            raise SyntaxError(f'Simulation file {os.path.basename(self.path)} does not contain any [region] sections.')

        for region in self.regions:
            if 'length' not in self[region]:
                raise SyntaxError(f'[{region}] does not contain the "length" variable.')
            if self[region].get('distribution', 'normal') not in DISTRIBUTIONS:
                raise SyntaxError(f'[{region}] has an unknown distribution "{self[region]["distribution"]}".')
            for key in self[region]:
                if key not in ('length', 'distribution', 'mu', 'sigma', 'lam', 'beta0', 'beta1'):
                    raise SyntaxError(f'[{region}] contains the unknown key "{key}".')

    def to_spec(self, seed: Optional[int] = None) -> SimSpec:
        """
        Build the SimSpec. The seed argument takes precedence over the file, then CPTSEG_SEED.

        Raises
        ------
        SyntaxError :
            If a value does not convert or lies outside its range.
        """
        if seed is None:
            seed = self.as_int('seed') if 'seed' in self else default_seed()

        regions = []
        for region in self.regions:
            section = self[region]
            try:
                parameters = {key: section.as_float(key) for key in section if key not in ('length', 'distribution')}
                regions.append(RegionSpec(section.as_int('length'), section.get('distribution', 'normal'),
                                          **parameters))
            except ValueError as error:
                raise SyntaxError(f'[{region}]: {error}')

        return SimSpec(tuple(regions), int(seed))


# ======================================================================================================================
# SERIES INGESTION
# ======================================================================================================================
def read_series(path: str, time_col: str = 'time', value_col: str = 'value') -> TimeSeries:
    """
    Read a series from a CSV file with a header.

    Parameters
    ----------
    path : str
        Path of the CSV file.
    time_col : str, optional
        Column of the time labels. When the default 'time' column is absent, the row index is used.
    value_col : str, optional
        Column of the observations. Defaults to 'value'.

    Returns
    -------
    The TimeSeries, named after the value column.

    Raises
    ------
    FileNotFoundError :
        If the file does not exist.
    ValueError :
        If a column is missing, a value is missing or not numeric, or the time labels are not strictly increasing.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f'Input file {path} not found.')

    table = pd.read_csv(path)
    if value_col not in table.columns:
        raise ValueError(f'Column "{value_col}" not found in {path}. Available: {", ".join(map(str, table.columns))}.')

    values = pd.to_numeric(table[value_col], errors='coerce')
    if values.isna().any():
        raise ValueError(f'Column "{value_col}" in {path} has missing or non-numeric values.')

    labels = None
    if time_col in table.columns:
        column = table[time_col]
        if column.isna().any():
            raise ValueError(f'Column "{time_col}" in {path} has missing values.')
        labels = tuple(column.tolist())
    elif time_col != 'time':
        raise ValueError(f'Column "{time_col}" not found in {path}.')

    series = TimeSeries(values.to_numpy(dtype=float), labels, name=value_col)
    _log.info(f'Read {series.n} observations from {path}.')
    return series


# ======================================================================================================================
# WRITERS
# ======================================================================================================================
def atomic_write(path: str, text: str) -> None:
    """
    Write a text file through a temporary file in the same directory, renamed over the target.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with tempfile.NamedTemporaryFile('w', dir=directory, delete=False, suffix='.tmp', encoding='utf-8',
                                     newline='') as temporary:
        temporary.write(text)
    try:
        os.replace(temporary.name, path)
    except OSError:
        os.remove(temporary.name)
        raise


def write_csv(table: pd.DataFrame, path: str) -> None:
    atomic_write(path, table.to_csv(index=False))


def _builtin(value: Any) -> Any:
    """
    JSON fallback for numpy types.
    """
    if isinstance(value, np.generic):
        return value.item()
    elif isinstance(value, np.ndarray):
        return value.tolist()
    elif isinstance(value, tuple):
        return list(value)
    raise TypeError(f'Object of type {type(value).__name__} is not JSON serialisable.')


def write_json(content: Any, path: str) -> None:
    atomic_write(path, json.dumps(content, indent=2, default=_builtin) + '\n')


def result_to_dict(result: SegmentationResult) -> dict:
    """
    The JSON document of a segmentation result. Floats keep their shortest round-trip representation.
    """
    fit = result.model
    ll_df = fit.num_params_per_region * (fit.num_cpts + 1) + fit.num_model_params + fit.num_cpts
    labels = fit.data.labels
    return {
        'algorithm': result.algorithm,
        'seg_params': result.seg_params,
        'fitness': {'name': result.fitness_name, 'value': result.fitness_value},
        'changepoints': list(fit.tau.tau),
        'changepoint_labels': changepoints(result, use_labels=True) if labels is not None else list(fit.tau.tau),
        'model': {
            'name': fit.model_name,
            'region_params': fit.region_params.to_dict(orient='records'),
            'model_params': fit.model_params,
            'df': ll_df,
            'logLik': fit.loglik,
            'log_prior': fit.log_prior,
            'num_params_per_region': fit.num_params_per_region,
            'num_model_params': fit.num_model_params,
            'model_args': fit.model_args,
            'fitted_values': fit.fitted_values.tolist(),
            'data': {'values': fit.data.values.tolist(), 'labels': list(labels) if labels is not None else None,
                     'name': fit.data.name},
        },
        'elapsed_seconds': result.elapsed,
    }


def result_from_dict(content: dict) -> SegmentationResult:
    """
    Rebuild a segmentation result from its JSON document.
    """
    model = content['model']
    data = model['data']
    labels = tuple(data['labels']) if data.get('labels') is not None else None
    series = TimeSeries(np.array(data['values'], dtype=float), labels, data.get('name', 'y'))
    tau = ChangepointSet(tuple(content['changepoints']), series.n)

    fit = ModelFit(series, tau, pd.DataFrame.from_records(model['region_params']), dict(model['model_params']),
                   np.array(model['fitted_values'], dtype=float), model['name'], float(model['logLik']),
                   int(model['num_params_per_region']), int(model['num_model_params']), model.get('log_prior'),
                   dict(model.get('model_args') or {}))
    return SegmentationResult(content['algorithm'], dict(content['seg_params']), content['fitness']['name'],
                              float(content['fitness']['value']), fit, float(content['elapsed_seconds']))


def write_result(result: SegmentationResult, path: str) -> None:
    write_json(result_to_dict(result), path)


def load_result(path: str) -> SegmentationResult:
    """
    Load a result.json file.
    """
    with open(path, 'r', encoding='utf-8') as json_file:
        return result_from_dict(json.load(json_file))


def write_result_files(result: SegmentationResult, out: str, formats: tuple[str, ...] = FORMATS) -> list[str]:
    """
    Write the output files of a segmentation run to a directory.

    Parameters
    ----------
    result : SegmentationResult
        The result.
    out : str
        Output directory. Created when missing.
    formats : tuple of str, optional
        Subset of FORMATS: 'json' writes result.json, 'csv' writes tidy.csv, glance.csv and augment.csv, 'svg'
        writes plot.svg. Defaults to all.

    Returns
    -------
    The paths of the written files.
    """
    os.makedirs(out, exist_ok=True)
    written = []
    if 'json' in formats:
        written.append(os.path.join(out, 'result.json'))
        write_result(result, written[-1])
    if 'csv' in formats:
        for name, table in (('tidy', tidy(result.model)), ('glance', glance(result)),
                            ('augment', augment(result.model))):
            written.append(os.path.join(out, f'{name}.csv'))
            write_csv(table, written[-1])
    if 'svg' in formats:
        written.append(os.path.join(out, 'plot.svg'))
        atomic_write(written[-1], segmentation_svg(result))

    _log.info(f'Results successfully saved to: {out}')
    return written
