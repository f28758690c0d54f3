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

Command line interface: segment one series, compare methods on it, simulate series and benchmark the GA seedings.

------------------------------------------------------------------------------------------------------------------------
"""
from functools import partial
from typing import Optional, Sequence
import argparse
import logging
import os

import numpy as np
import pandas as pd

from .algorithms import METHODS, segment
from .core import SegmentationResult, TimeSeries, changepoints, glance
from .file_system import (FORMATS, RunConfig, SimulationFile, read_series, write_csv, write_json,
                          write_result_files, atomic_write)
from .genetic import SEEDINGS
from .simulate import simulate
from .svg_plot import rug_svg
from .threaded_tools import MethodThread


__all__ = ['EXIT_OK', 'EXIT_INPUT', 'EXIT_ALGORITHM', 'EXIT_IO', 'build_parser', 'cmd_segment', 'cmd_compare',
           'cmd_simulate', 'cmd_bench', 'main', ]

_log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ALGORITHM = 3
EXIT_IO = 4


def _fail(code: int, error: BaseException) -> int:
    _log.error(f'{type(error).__name__}: {error}')
    return code


def _comma_list(value: Optional[str]) -> Optional[list[str]]:
    if value is None:
        return None
    return [item.strip() for item in value.split(',') if item.strip()]


# ======================================================================================================================
# ARGUMENT PARSING
# ======================================================================================================================
def build_parser() -> argparse.ArgumentParser:
    """
    Construct the argument parser with the segment, compare, simulate and bench commands.
    """
    parser = argparse.ArgumentParser(prog='cptseg', description='Changepoint detection in univariate time series.')
    commands = parser.add_subparsers(dest='command', required=True)

    # Create the shared groups of arguments
    run_parent = argparse.ArgumentParser(add_help=False)
    run_parent.add_argument('--config', help='run configuration file (<name>.cptseg)')
    run_parent.add_argument('--input', help='CSV file with the series')
    run_parent.add_argument('--time-col', help='column with the time labels (default: time)')
    run_parent.add_argument('--value-col', help='column with the observations (default: value)')
    run_parent.add_argument('--model', help='model identifier, e.g. meanshift_norm or trendshift_ar1')
    run_parent.add_argument('--degree', type=int, help='polynomial degree of the lmshift models')
    run_parent.add_argument('--penalty', help='penalty: AIC, BIC, SIC, HQC, MBIC, MDL or BMDL')
    run_parent.add_argument('--threshold', type=float, help='exceedance threshold of the nhpp model')
    run_parent.add_argument('--min-seg-len', type=int, help='minimum region length')
    run_parent.add_argument('--seed', type=int, help='random seed (fallback: CPTSEG_SEED, then 0)')
    run_parent.add_argument('--out', help='output directory')
    run_parent.add_argument('--formats', help=f'comma-separated subset of {",".join(FORMATS)}')
    run_parent.add_argument('--verbose', action='store_true', default=None, help='debug logging')

    ga_parent = argparse.ArgumentParser(add_help=False)
    ga_parent.add_argument('--pop-size', type=int, help='GA population size')
    ga_parent.add_argument('--maxiter', type=int, help='GA maximum number of generations')
    ga_parent.add_argument('--run', type=int, help='GA generations without improvement before stopping')
    ga_parent.add_argument('--crossover', type=float, help='GA crossover probability')
    ga_parent.add_argument('--mutation', type=float, help='GA mutation probability per chromosome')
    ga_parent.add_argument('--seeding', choices=SEEDINGS, help='GA initial population strategy')
    ga_parent.add_argument('--jobs', type=int, help='threads evaluating the GA fitness')
    ga_parent.add_argument('--progress', action='store_true', help='show a progress bar over the generations')

    segment_parser = commands.add_parser('segment', parents=[run_parent, ga_parent], help='segment one series')
    segment_parser.add_argument('--method', choices=METHODS, help='segmentation method (default: null)')
    segment_parser.add_argument('--tau', help='comma-separated changepoints of the manual method')

    compare_parser = commands.add_parser('compare', parents=[run_parent, ga_parent],
                                         help='compare several methods on one series')
    compare_parser.add_argument('--methods', help='comma-separated methods; default: the [run] sections')
    compare_parser.add_argument('--tau', help='comma-separated changepoints of the manual method')

    simulate_parser = commands.add_parser('simulate', help='draw a series from a simulation file (<name>.cptsim)')
    simulate_parser.add_argument('spec', help='simulation file')
    simulate_parser.add_argument('--output', '-o', required=True, help='CSV file to write')
    simulate_parser.add_argument('--seed', type=int, help='random seed, overrides the file')
    simulate_parser.add_argument('--verbose', action='store_true', default=None, help='debug logging')

    bench_parser = commands.add_parser('bench', parents=[run_parent, ga_parent],
                                       help='compare the GA population seedings on one series')
    bench_parser.add_argument('--seedings', help=f'comma-separated subset of {",".join(SEEDINGS)}')

    return parser


def _overrides(args: argparse.Namespace) -> dict:
    """
    Translate the parsed arguments into RunConfig keys.
    """
    def get(name: str):
        return getattr(args, name, None)

    overrides = {'input': get('input'), 'time col': get('time_col'), 'value col': get('value_col'),
                 'method': get('method'), 'model': get('model'), 'degree': get('degree'), 'penalty': get('penalty'),
                 'threshold': get('threshold'), 'min seg len': get('min_seg_len'), 'seed': get('seed'),
                 'out': get('out'), 'formats': _comma_list(get('formats')), 'verbose': get('verbose'),
                 'tau': get('tau'),
                 'ga': {'pop size': get('pop_size'), 'maxiter': get('maxiter'), 'run': get('run'),
                        'crossover': get('crossover'), 'mutation': get('mutation'), 'seeding': get('seeding'),
                        'jobs': get('jobs')},
                 'bench': {'seedings': _comma_list(get('seedings'))}}
    return overrides


def _load(args: argparse.Namespace) -> tuple[RunConfig, TimeSeries]:
    """
    Load the run configuration and the series.

    Raises
    ------
    SyntaxError :
        For a malformed configuration.
    ValueError :
        For a missing input or an invalid series.
    FileNotFoundError :
        If the configuration or input file does not exist.
    """
    config = RunConfig(args.config, _overrides(args))
    if config['verbose']:
        logging.getLogger().setLevel(logging.DEBUG)
    if not config.get('input'):
        raise ValueError('No input file: use --input or set "input" in the run configuration.')

    series = read_series(config['input'], config['time col'], config['value col'])
    return config, series


def _summary(name: str, result: SegmentationResult) -> str:
    labels = changepoints(result, use_labels=result.model.data.labels is not None)
    return f'{name}: changepoints {labels}, {result.fitness_name} = {result.fitness_value:.4f}'


def _extra_options(args: argparse.Namespace, method: str, options: dict) -> dict:
    if getattr(args, 'progress', False) and method in ('ga', 'ga-coen', 'ga-shi'):
        options['progress'] = True
    return options


# ======================================================================================================================
# COMMANDS
# ======================================================================================================================
def cmd_segment(args: argparse.Namespace) -> int:
    """
    Segment one series and write result.json, tidy.csv, glance.csv, augment.csv and plot.svg.

    Returns
    -------
    The exit code: 0, or 2 for bad input, 3 for an algorithm error, 4 for an I/O error.
    """
    try:
        config, series = _load(args)
        method, model, penalty, options = config.segment_options()
    except (SyntaxError, ValueError, OSError) as error:
        return _fail(EXIT_INPUT, error)

    try:
        result = segment(series, method, model, penalty, **_extra_options(args, method, options))
    except (ValueError, RuntimeError, FloatingPointError) as error:
        return _fail(EXIT_ALGORITHM, error)

    try:
        write_result_files(result, config['out'], tuple(config['formats']))
    except OSError as error:
        return _fail(EXIT_IO, error)

    print(_summary(method, result))
    return EXIT_OK


def _unique_names(names: Sequence[str]) -> list[str]:
    """
    Suffix repeated names with -2, -3, ...
    """
    seen: dict[str, int] = {}
    unique = []
    for name in names:
        seen[name] = seen.get(name, 0) + 1
        unique.append(name if seen[name] == 1 else f'{name}-{seen[name]}')
    return unique


def cmd_compare(args: argparse.Namespace) -> int:
    """
    Run several methods on one series, each in its own thread, and write compare.csv, compare.json and a rug
    plot.svg. A failing method gives an error row.

    Returns
    -------
    The exit code: 0 when at least one method succeeded, 2 for bad input, 3 when all methods failed, 4 for an
    I/O error.
    """
    try:
        config, series = _load(args)
        methods = _comma_list(getattr(args, 'methods', None))
        if methods:
            runs = [(method, config.segment_options(method=method)) for method in methods]
        else:
            runs = [(section[4:].strip(), config.segment_options(run=section)) for section in config.runs]
        if len(runs) < 2:
            raise ValueError('Comparing needs at least two methods: use --methods or [run <name>] sections.')
    except (SyntaxError, ValueError, OSError) as error:
        return _fail(EXIT_INPUT, error)

    # Create and start a thread per method
    names = _unique_names([name for name, _ in runs])
    threads = []
    for name, (_, (method, model, penalty, options)) in zip(names, runs):
        target = partial(segment, series, method, model, penalty, **_extra_options(args, method, options))
        threads.append(MethodThread(name, target))
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()

    rows, document, results = [], {}, {}
    for thread, (_, (method, model, penalty, _)) in zip(threads, runs):
        if thread.error is not None:
            _log.warning(f'{thread.name} failed: {type(thread.error).__name__}: {thread.error}')
            error = f'{type(thread.error).__name__}: {thread.error}'
            rows.append({'name': thread.name, 'algorithm': method, 'seg_params': '', 'model_name': model or '',
                         'criteria': penalty or '', 'fitness': np.nan, 'elapsed_time': np.nan, 'num_cpts': np.nan,
                         'error': error})
            document[thread.name] = {'algorithm': method, 'changepoints': None, 'changepoint_labels': None,
                                     'fitness': None, 'error': error}
            continue

        result = results[thread.name] = thread.result
        row = glance(result).iloc[0].to_dict()
        rows.append({'name': thread.name, **row, 'num_cpts': result.model.num_cpts, 'error': ''})
        labels = changepoints(result, use_labels=True) if result.model.data.labels is not None else None
        document[thread.name] = {'algorithm': result.algorithm, 'changepoints': changepoints(result),
                                 'changepoint_labels': labels,
                                 'fitness': {'name': result.fitness_name, 'value': result.fitness_value},
                                 'error': None}
        print(_summary(thread.name, result))

    formats = tuple(config['formats'])
    try:
        os.makedirs(config['out'], exist_ok=True)
        if 'csv' in formats:
            write_csv(pd.DataFrame(rows), os.path.join(config['out'], 'compare.csv'))
        if 'json' in formats:
            write_json(document, os.path.join(config['out'], 'compare.json'))
        if 'svg' in formats and results:
            atomic_write(os.path.join(config['out'], 'plot.svg'), rug_svg(results))
    except OSError as error:
        return _fail(EXIT_IO, error)

    return EXIT_OK if results else EXIT_ALGORITHM


def cmd_simulate(args: argparse.Namespace) -> int:
    """
    Draw a series from a simulation file. Writes the CSV (columns time and value) and truth.json with the true
    changepoints next to it.

    Returns
    -------
    The exit code: 0, 2 for a bad simulation file, 4 for an I/O error.
    """
    try:
        sim_spec = SimulationFile(args.spec).to_spec(args.seed)
        series, tau = simulate(sim_spec)
    except (SyntaxError, ValueError, OSError) as error:
        return _fail(EXIT_INPUT, error)

    values = series.values
    # Count data stays integer in the file
    column = values.astype(np.int64) if np.all(values == np.round(values)) else values
    table = pd.DataFrame({'time': list(series.labels), 'value': column})

    truth_path = os.path.join(os.path.dirname(os.path.abspath(args.output)), 'truth.json')
    try:
        write_csv(table, args.output)
        write_json({'changepoints': list(tau.tau), 'n': series.n, 'seed': sim_spec.rng_seed}, truth_path)
    except OSError as error:
        return _fail(EXIT_IO, error)

    print(f'Simulated {series.n} observations with changepoints {list(tau.tau)} to {args.output}')
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    """
    Run the GA once per seeding strategy on the same series and seed. Writes trace.csv (strategy, generation,
    best_fitness, mean_fitness) and bench_summary.csv.

    Returns
    -------
    The exit code: 0, 2 for bad input, 3 for an algorithm error, 4 for an I/O error.
    """
    try:
        config, series = _load(args)
        seedings = config['bench']['seedings'] if 'bench' in config.sections else ['uniform_half', 'log_informed']
        unknown = set(seedings) - set(SEEDINGS)
        if unknown:
            raise ValueError(f'Unknown seedings: {", ".join(sorted(unknown))}. Choose from {", ".join(SEEDINGS)}.')
        if len(set(seedings)) < 2:
            raise ValueError('The benchmark needs at least two different seeding strategies.')
        _, model, penalty, options = config.segment_options(method='ga')
    except (SyntaxError, ValueError, OSError) as error:
        return _fail(EXIT_INPUT, error)

    traces, summary = [], []
    try:
        for seeding in dict.fromkeys(seedings):
            result = segment(series, 'ga', model, penalty,
                             **_extra_options(args, 'ga', {**options, 'seeding': seeding}))
            params = result.seg_params
            traces.extend({'strategy': seeding, **row} for row in params['trace'])
            summary.append({'strategy': seeding, 'generations': params['generations'], 'maxiter': params['maxiter'],
                            'stopped_early': params['generations'] < params['maxiter'],
                            'best_fitness': params['trace'][-1]['best_fitness'], 'criteria': result.fitness_name,
                            'objective': result.fitness_value, 'num_cpts': result.model.num_cpts,
                            'elapsed_time': result.elapsed})
            print(_summary(f'ga/{seeding}', result) + f' after {params["generations"]} generations')
    except (ValueError, RuntimeError, FloatingPointError) as error:
        return _fail(EXIT_ALGORITHM, error)

    try:
        write_csv(pd.DataFrame(traces), os.path.join(config['out'], 'trace.csv'))
        write_csv(pd.DataFrame(summary), os.path.join(config['out'], 'bench_summary.csv'))
    except OSError as error:
        return _fail(EXIT_IO, error)

    return EXIT_OK


_COMMANDS = {'segment': cmd_segment, 'compare': cmd_compare, 'simulate': cmd_simulate, 'bench': cmd_bench, }


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the command line interface.

    Parameters
    ----------
    argv : sequence of str, optional
        The arguments. Defaults to sys.argv[1:].

    Returns
    -------
    The exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(levelname)s %(name)s: %(message)s')
    return _COMMANDS[args.command](args)
