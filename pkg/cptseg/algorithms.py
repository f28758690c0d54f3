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

Module with the segmenters. Every segmenter runs its search and then refits the model at the changepoints it found,
so the result only depends on the returned changepoint set.

------------------------------------------------------------------------------------------------------------------------
"""
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional, Sequence, Union
import logging
import time
import warnings

import numpy as np

from .core import ChangepointSet, SegmentationResult, TimeSeries
from .genetic import GaConfig, run_ga
from .models import ModelSpec, as_changepoint_set, as_model_spec, fit_model, log_likelihood
from .nhpp import GammaHyperparams
from .penalties import ADDITIVE_PENALTIES, as_penalty_id, penalty_value
from .search import (PELT_MODELS, Objective, binseg_changepoints, exact_changepoints, pelt_changepoints,
                     wbs_candidates, wbs_changepoints)


__all__ = ['METHODS', 'METHOD_DEFAULTS', 'WbsConfig', 'null_segmentation', 'manual', 'exact_search', 'pelt',
           'binseg', 'wbs', 'ga', 'ga_coen', 'ga_shi', 'random_segmentation', 'segment', ]

_log = logging.getLogger(__name__)

METHODS = ('null', 'manual', 'exact', 'pelt', 'binseg', 'wbs', 'ga', 'ga-coen', 'ga-shi', 'random', )
# Default (model, penalty) of every method
METHOD_DEFAULTS = {
    'null': ('meanshift_norm', 'BIC'),
    'manual': ('meanshift_norm', 'BIC'),
    'exact': ('meanshift_norm', 'BIC'),
    'pelt': ('meanvar', 'MBIC'),
    'binseg': ('meanvar', 'MBIC'),
    'wbs': ('meanshift_norm', 'MBIC'),
    'ga': ('meanshift_norm', 'BIC'),
    'ga-coen': ('nhpp', 'BMDL'),
    'ga-shi': ('trendshift_ar1', 'BIC'),
    'random': ('meanshift_norm', 'BIC'),
}

SeriesLike = Union[TimeSeries, Sequence[float], np.ndarray]
ModelLike = Union[str, ModelSpec]


@dataclass(frozen=True)
class WbsConfig:
    """
    Settings of wild binary segmentation.

    Parameters
    ----------
    num_intervals : int, optional
        Number of random intervals M. Defaults to 5000.
    rng_seed : int, optional
        Seed of the interval draws. Defaults to 0.
    """
    num_intervals: int = 5000
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.num_intervals < 1:
            raise ValueError(f'Number of intervals must be at least 1, got {self.num_intervals}.')


# ======================================================================================================================
# SHARED PLUMBING
# ======================================================================================================================
def _as_series(x: SeriesLike) -> TimeSeries:
    return x if isinstance(x, TimeSeries) else TimeSeries(np.asarray(x, dtype=float))


def _model_args(spec: ModelSpec, threshold: Optional[float], hyper: Union[GammaHyperparams, dict, None]) -> dict:
    """
    Extra fitting arguments. Only the NHPP model takes any.
    """
    if spec.family != 'nhpp':
        return {}
    model_args = {}
    if threshold is not None:
        model_args['threshold'] = float(threshold)
    if hyper is not None:
        model_args['hyper'] = hyper
    return model_args


def _finish(x: TimeSeries, algorithm: str, seg_params: dict, tau: Union[ChangepointSet, Sequence[int]],
            spec: ModelSpec, penalty: str, model_args: dict, t0: float) -> SegmentationResult:
    """
    Refit the model at the found changepoints and wrap everything in a SegmentationResult.
    """
    fit = fit_model(x, tau, spec, **model_args)
    value = penalty_value(penalty, log_likelihood(fit))
    _log.info(f'{algorithm}: {fit.num_cpts} changepoints, {penalty}={value:.4f}')
    return SegmentationResult(algorithm, seg_params, penalty, value, fit, time.perf_counter() - t0)


def _min_len(spec: ModelSpec, min_seg_len: Optional[int]) -> int:
    min_len = spec.min_seg_len if min_seg_len is None else int(min_seg_len)
    if min_len < 1:
        raise ValueError(f'Minimum segment length must be at least 1, got {min_len}.')
    return min_len


# ======================================================================================================================
# SEGMENTERS
# ======================================================================================================================
def null_segmentation(x: SeriesLike, model: ModelLike = 'meanshift_norm', penalty: str = 'BIC',
                      threshold: Optional[float] = None,
                      hyper: Union[GammaHyperparams, dict, None] = None) -> SegmentationResult:
    """
    The segmentation without changepoints.
    """
    t0 = time.perf_counter()
    x, spec = _as_series(x), as_model_spec(model)
    return _finish(x, 'null', {}, (), spec, as_penalty_id(penalty), _model_args(spec, threshold, hyper), t0)


def manual(x: SeriesLike, tau: Union[ChangepointSet, Sequence[int]], model: ModelLike = 'meanshift_norm',
           penalty: str = 'BIC', threshold: Optional[float] = None,
           hyper: Union[GammaHyperparams, dict, None] = None) -> SegmentationResult:
    """
    The segmentation at user-given changepoints.
    """
    t0 = time.perf_counter()
    x, spec = _as_series(x), as_model_spec(model)
    tau = as_changepoint_set(tau, x.n)
    return _finish(x, 'manual', {'tau': list(tau.tau)}, tau, spec, as_penalty_id(penalty),
                   _model_args(spec, threshold, hyper), t0)


def exact_search(x: SeriesLike, model: ModelLike = 'meanshift_norm', penalty: str = 'BIC',
                 max_m: Optional[int] = None, min_seg_len: Optional[int] = None,
                 threshold: Optional[float] = None,
                 hyper: Union[GammaHyperparams, dict, None] = None) -> SegmentationResult:
    """
    Brute-force search over every changepoint set with at most max_m changepoints.

    Parameters
    ----------
    x : TimeSeries or array_like
        The series. At most 20 observations.
    model : str or ModelSpec, optional
        The model. Defaults to 'meanshift_norm'.
    penalty : str, optional
        The penalty. Defaults to 'BIC'.
    max_m : int, optional
        Largest number of changepoints. Defaults to n - 1.
    min_seg_len : int, optional
        Minimum region length. Defaults to the model's minimum.

    Raises
    ------
    ValueError :
        If the series is too long for an exhaustive search.
    """
    t0 = time.perf_counter()
    x, spec, penalty = _as_series(x), as_model_spec(model), as_penalty_id(penalty)
    model_args = _model_args(spec, threshold, hyper)
    min_len = _min_len(spec, min_seg_len)

    tau, _ = exact_changepoints(Objective(x.values, spec, penalty, model_args), max_m, min_len)
    seg_params = {'max_m': x.n - 1 if max_m is None else int(max_m), 'min_seg_len': min_len}
    return _finish(x, 'exact', seg_params, tau, spec, penalty, model_args, t0)


def pelt(x: SeriesLike, model: ModelLike = 'meanvar', penalty: str = 'MBIC',
         min_seg_len: Optional[int] = None) -> SegmentationResult:
    """
    Pruned exact linear time search.

    Parameters
    ----------
    x : TimeSeries or array_like
        The series.
    model : str or ModelSpec, optional
        'meanshift_norm' or 'meanvar'. Defaults to 'meanvar'.
    penalty : str, optional
        A segment-additive penalty: AIC, BIC, SIC, HQC or MBIC. Defaults to 'MBIC'.
    min_seg_len : int, optional
        Minimum region length. Defaults to the model's minimum.

    Raises
    ------
    ValueError :
        For another model or a penalty that is not segment-additive.
    """
    t0 = time.perf_counter()
    x, spec, penalty = _as_series(x), as_model_spec(model), as_penalty_id(penalty)
    if spec.name not in PELT_MODELS:
        raise ValueError(f'PELT supports the models {", ".join(PELT_MODELS)}, not {spec.name}.')
    if penalty not in ADDITIVE_PENALTIES:
        raise ValueError(f'Penalty {penalty} is not segment-additive and cannot be used with PELT.')
    min_len = _min_len(spec, min_seg_len)

    tau = pelt_changepoints(Objective(x.values, spec, penalty), min_len)
    return _finish(x, 'pelt', {'min_seg_len': min_len}, tau, spec, penalty, {}, t0)


def binseg(x: SeriesLike, model: ModelLike = 'meanvar', penalty: str = 'MBIC', max_cpts: int = 5,
           min_seg_len: Optional[int] = None, threshold: Optional[float] = None,
           hyper: Union[GammaHyperparams, dict, None] = None) -> SegmentationResult:
    """
    Binary segmentation: add the best single changepoint until the objective stops decreasing or max_cpts
    changepoints are found.
    """
    t0 = time.perf_counter()
    x, spec, penalty = _as_series(x), as_model_spec(model), as_penalty_id(penalty)
    model_args = _model_args(spec, threshold, hyper)
    min_len = _min_len(spec, min_seg_len)

    tau = binseg_changepoints(Objective(x.values, spec, penalty, model_args), max_cpts, min_len)
    return _finish(x, 'binseg', {'max_cpts': int(max_cpts), 'min_seg_len': min_len}, tau, spec, penalty,
                   model_args, t0)


def wbs(x: SeriesLike, config: WbsConfig = WbsConfig(), model: Optional[ModelLike] = None,
        penalty: Optional[str] = None) -> SegmentationResult:
    """
    Wild binary segmentation: rank candidates by their CUSUM statistics over random intervals, then keep the prefix
    of the ranking with the lowest MBIC under the normal meanshift model.

    Parameters
    ----------
    x : TimeSeries or array_like
        The series. At least 4 observations.
    config : WbsConfig, optional
        The settings.
    model : str or ModelSpec, optional
        Only 'meanshift_norm' is supported. Any other model is ignored with a warning.
    penalty : str, optional
        Only 'MBIC' is supported. Any other penalty is ignored with a warning.
    """
    t0 = time.perf_counter()
    x = _as_series(x)
    if x.n < 4:
        raise ValueError(f'Wild binary segmentation needs at least 4 observations, got {x.n}.')

    seg_params = {'num_intervals': config.num_intervals, 'rng_seed': config.rng_seed}
    spec = as_model_spec('meanshift_norm')
    if model is not None and as_model_spec(model) != spec:
        warnings.warn(f'Wild binary segmentation only uses the meanshift_norm model, '
                      f'ignoring {as_model_spec(model).name}.')
        seg_params['model_ignored'] = True
    if penalty is not None and as_penalty_id(penalty) != 'MBIC':
        warnings.warn(f'Wild binary segmentation only uses the MBIC penalty, ignoring {as_penalty_id(penalty)}.')
        seg_params['penalty_ignored'] = True

    candidates = wbs_candidates(x.values, config.num_intervals, config.rng_seed)
    tau = wbs_changepoints(Objective(x.values, spec, 'MBIC'), candidates)
    seg_params['num_candidates'] = len(candidates)
    return _finish(x, 'wbs', seg_params, tau, spec, 'MBIC', {}, t0)


def ga(x: SeriesLike, model: ModelLike = 'meanshift_norm', penalty: str = 'BIC', config: GaConfig = GaConfig(),
       min_seg_len: Optional[int] = None, threshold: Optional[float] = None,
       hyper: Union[GammaHyperparams, dict, None] = None, algorithm: str = 'ga') -> SegmentationResult:
    """
    Genetic algorithm over changepoint sets.

    Parameters
    ----------
    x : TimeSeries or array_like
        The series.
    model : str or ModelSpec, optional
        The model. Defaults to 'meanshift_norm'.
    penalty : str, optional
        The penalty. Defaults to 'BIC'.
    config : GaConfig, optional
        The settings of the algorithm.
    min_seg_len : int, optional
        Minimum region length. Defaults to the model's minimum.
    threshold : float, optional
        Exceedance threshold of the NHPP model.
    hyper : GammaHyperparams or dict, optional
        Prior hyperparameters of the NHPP model.
    algorithm : str, optional
        Name stored in the result. Defaults to 'ga'.

    Returns
    -------
    The SegmentationResult. seg_params holds the settings, the number of generations, the fitness trace and the
    seeding probability (with 'seeding_fallback' when informed seeding fell back).
    """
    t0 = time.perf_counter()
    x, spec, penalty = _as_series(x), as_model_spec(model), as_penalty_id(penalty)
    model_args = _model_args(spec, threshold, hyper)
    min_len = _min_len(spec, min_seg_len)

    outcome = run_ga(Objective(x.values, spec, penalty, model_args), config, min_len)

    seg_params = {key: value for key, value in asdict(config).items() if key not in ('n_jobs', 'progress')}
    seg_params.update({'min_seg_len': min_len, 'generations': outcome.generations, 'trace': outcome.trace,
                       'seeding_probability': outcome.seeded.probability, 'evaluations': outcome.evaluations})
    if outcome.seeded.fallback:
        seg_params['seeding_fallback'] = True
    if outcome.seeded.informed_counts:
        seg_params['informed_counts'] = list(outcome.seeded.informed_counts)

    return _finish(x, algorithm, seg_params, outcome.tau, spec, penalty, model_args, t0)


def ga_coen(x: SeriesLike, config: Optional[GaConfig] = None, threshold: Optional[float] = None,
            hyper: Union[GammaHyperparams, dict, None] = None, **overrides) -> SegmentationResult:
    """
    Genetic algorithm with the NHPP model of threshold exceedances and the BMDL penalty, seeded from quick runs of
    other algorithms with a population of 50.

    Parameters
    ----------
    x : TimeSeries or array_like
        The series.
    config : GaConfig, optional
        Base settings. Defaults to build_informed seeding with 50 chromosomes.
    threshold : float, optional
        Exceedance threshold. Defaults to the series mean.
    hyper : GammaHyperparams or dict, optional
        Prior hyperparameters.
    **overrides
        GaConfig fields that replace those of the base settings.
    """
    if config is None:
        config = GaConfig(**{'pop_size': 50, 'seeding': 'build_informed', **overrides})
    elif overrides:
        config = replace(config, **overrides)
    return ga(x, 'nhpp', 'BMDL', config, threshold=threshold, hyper=hyper, algorithm='ga-coen')


def ga_shi(x: SeriesLike, model: ModelLike = 'trendshift_ar1', penalty: str = 'BIC',
           config: GaConfig = GaConfig(), min_seg_len: Optional[int] = None) -> SegmentationResult:
    """
    Genetic algorithm with the trend model with AR(1) errors and BIC.
    """
    return ga(x, model, penalty, config, min_seg_len, algorithm='ga-shi')


def random_segmentation(x: SeriesLike, model: ModelLike = 'meanshift_norm', penalty: str = 'BIC',
                        pop_size: int = 50, rng_seed: int = 0, min_seg_len: Optional[int] = None,
                        threshold: Optional[float] = None,
                        hyper: Union[GammaHyperparams, dict, None] = None) -> SegmentationResult:
    """
    Best of pop_size random changepoint sets, drawn with inclusion probability ln n / n. This is a genetic algorithm
    that stops after its first generation.
    """
    config = GaConfig(pop_size=pop_size, maxiter=1, run=1, seeding='log_informed', rng_seed=rng_seed)
    return ga(x, model, penalty, config, min_seg_len, threshold, hyper, algorithm='random')


# ======================================================================================================================
# DISPATCH
# ======================================================================================================================
_GA_FIELDS = tuple(item.name for item in fields(GaConfig))


def segment(x: SeriesLike, method: str = 'null', model: Optional[ModelLike] = None, penalty: Optional[str] = None,
            **options) -> SegmentationResult:
    """
    Segment a series with any of the methods.

    Parameters
    ----------
    x : TimeSeries or array_like
        The series.
    method : str, optional
        One of METHODS. Defaults to 'null'.
    model : str or ModelSpec, optional
        The model. Defaults per method, see METHOD_DEFAULTS.
    penalty : str, optional
        The penalty. Defaults per method, see METHOD_DEFAULTS.
    **options
        Method options: tau (manual), degree (lmshift models), min_seg_len, max_m (exact), max_cpts (binseg),
        num_intervals (wbs), rng_seed, threshold and hyper (nhpp), and the GaConfig fields (ga methods).

    Returns
    -------
    The SegmentationResult.

    Raises
    ------
    ValueError :
        For an unknown method, an unknown option, or an incompatible combination of method, model and penalty.
    """
    if method not in METHODS:
        raise ValueError(f'Unknown method "{method}". Choose from: {", ".join(METHODS)}.')

    if method == 'ga-coen':
        if model is not None and as_model_spec(model).family != 'nhpp':
            raise ValueError('Method ga-coen uses the nhpp model; it cannot be combined with another model.')
        if penalty is not None and as_penalty_id(penalty) != 'BMDL':
            raise ValueError('Method ga-coen uses the BMDL penalty; it cannot be combined with another penalty.')

    penalty_given = penalty
    default_model, default_penalty = METHOD_DEFAULTS[method]
    degree = options.pop('degree', None)
    spec = as_model_spec(default_model if model is None else model, degree=degree)
    penalty = default_penalty if penalty is None else as_penalty_id(penalty)
    if penalty == 'BMDL' and spec.family != 'nhpp':
        raise ValueError(f'BMDL requires NHPP: cannot use it with the {spec.name} model.')

    nhpp_args = {key: options.pop(key) for key in ('threshold', 'hyper') if key in options}
    ga_args = {key: options.pop(key) for key in _GA_FIELDS if key in options}
    min_seg_len = options.pop('min_seg_len', None)
    if min_seg_len is not None and method in ('wbs', 'ga-coen'):
        warnings.warn(f'Method {method} does not take a minimum segment length, ignoring min_seg_len.')

    allowed = {'manual': ('tau', ), 'exact': ('max_m', ), 'binseg': ('max_cpts', ), 'wbs': ('num_intervals', )}
    unknown = set(options) - set(allowed.get(method, ()))
    if unknown:
        raise ValueError(f'Unknown options for method {method}: {", ".join(sorted(unknown))}.')

    if method == 'null':
        return null_segmentation(x, spec, penalty, **nhpp_args)
    elif method == 'manual':
        return manual(x, options.get('tau', ()), spec, penalty, **nhpp_args)
    elif method == 'exact':
        return exact_search(x, spec, penalty, options.get('max_m'), min_seg_len, **nhpp_args)
    elif method == 'pelt':
        return pelt(x, spec, penalty, min_seg_len)
    elif method == 'binseg':
        return binseg(x, spec, penalty, options.get('max_cpts', 5), min_seg_len, **nhpp_args)
    elif method == 'wbs':
        config = WbsConfig(options.get('num_intervals', 5000), ga_args.get('rng_seed', 0))
        return wbs(x, config, None if model is None else spec, None if penalty_given is None else penalty)
    elif method == 'random':
        return random_segmentation(x, spec, penalty, ga_args.get('pop_size', 50), ga_args.get('rng_seed', 0),
                                   min_seg_len, **nhpp_args)
    elif method == 'ga-coen':
        return ga_coen(x, threshold=nhpp_args.get('threshold'), hyper=nhpp_args.get('hyper'), **ga_args)

    config = GaConfig(**ga_args)
    return ga(x, spec, penalty, config, min_seg_len, algorithm=method, **nhpp_args)
