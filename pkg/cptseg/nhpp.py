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

Module with the non-homogeneous Poisson process model of threshold exceedances. Within every region the exceedance
times follow a Weibull intensity, with Gamma priors on its shape and scale, fitted by maximum a posteriori.

------------------------------------------------------------------------------------------------------------------------
"""
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Union
import logging

from scipy.optimize import minimize
from scipy.stats import gamma
import numpy as np
import pandas as pd

from .core import ChangepointSet, FitParts, ModelFit, TimeSeries, regions


__all__ = ['ExceedanceSet', 'GammaHyperparams', 'NhppRegionParams', 'exceedances',
           'region_log_likelihood', 'fit_nhpp_region', 'nhpp_parts', 'fit_nhpp', 'log_prior', ]

_log = logging.getLogger(__name__)

# Number of simplex searches per region, and the spread of the jitter on their starting points
NHPP_RESTARTS = 5
_JITTER = .5
_SIMPLEX_OPTIONS = {'xatol': 1e-8, 'fatol': 1e-10, 'maxiter': 4000, 'maxfev': 8000}
# Bound on ln alpha and ln beta during the search
_LOG_BOUND = 30.


@dataclass(frozen=True)
class ExceedanceSet:
    """
    Indices of the observations above a threshold.

    Parameters
    ----------
    threshold : float
        The threshold w.
    indices : tuple of int
        Sorted 1-based indices t with y_t > w.
    """
    threshold: float
    indices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class GammaHyperparams:
    """
    Shape/rate hyperparameters of the Gamma priors on the Weibull shape alpha and scale beta.
    All four must be strictly positive.
    """
    alpha_shape: float = 1.
    alpha_rate: float = 1.
    beta_shape: float = 1.
    beta_rate: float = 1.

    def __post_init__(self) -> None:
        for key, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f'Gamma hyperparameter "{key}" must be strictly positive, got {value}.')

    def log_density(self, alpha: float, beta: float) -> float:
        """
        Joint log-prior of (alpha, beta).
        """
        return float(np.sum(gamma.logpdf([alpha, beta], [self.alpha_shape, self.beta_shape],
                                         scale=[1. / self.alpha_rate, 1. / self.beta_rate])))


@dataclass(frozen=True)
class NhppRegionParams:
    """
    MAP parameters of one region, with the region log-likelihood and log-posterior at those parameters.
    """
    alpha: float
    beta: float
    logLik: float
    logPost: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f'Weibull parameters must be positive, got alpha={self.alpha}, beta={self.beta}.')

    @property
    def log_prior(self) -> float:
        return self.logPost - self.logLik


def _as_hyper(hyper: Union[GammaHyperparams, dict, None]) -> GammaHyperparams:
    if hyper is None:
        return GammaHyperparams()
    elif isinstance(hyper, GammaHyperparams):
        return hyper
    return GammaHyperparams(**{key: float(value) for key, value in hyper.items()})


def exceedances(x: Union[TimeSeries, np.ndarray], threshold: Optional[float] = None) -> ExceedanceSet:
    """
    Find the exceedances of a threshold.

    Parameters
    ----------
    x : TimeSeries or array_like
        The series.
    threshold : float, optional
        The threshold w. Defaults to the series mean.

    Returns
    -------
    The ExceedanceSet. It may be empty.
    """
    values = x.values if isinstance(x, TimeSeries) else np.asarray(x, dtype=float)
    threshold = float(values.mean()) if threshold is None else float(threshold)
    return ExceedanceSet(threshold, tuple(int(t) for t in np.flatnonzero(values > threshold) + 1))


def region_log_likelihood(alpha: float, beta: float, times: np.ndarray, start: int, end: int) -> float:
    """
    Weibull NHPP log-likelihood of the event times in the region [start, end), on the global time axis:
    sum of ln lambda(t_i) minus Lambda(end) - Lambda(start), with lambda(t) = (alpha/beta)(t/beta)^(alpha-1) and
    Lambda(t) = (t/beta)^alpha.
    """
    with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
        alpha, beta = np.float64(alpha), np.float64(beta)
        log_rate = np.log(alpha) - np.log(beta) + (alpha - 1.) * (np.log(times) - np.log(beta))
        compensator = (end / beta) ** alpha - (start / beta) ** alpha
        return float(np.sum(log_rate) - compensator)


def fit_nhpp_region(times: Sequence[int], start: int, end: int,
                    hyper: Union[GammaHyperparams, dict, None] = None, alpha: Optional[float] = None,
                    restarts: int = NHPP_RESTARTS, seed: int = 0) -> NhppRegionParams:
    """
    MAP estimate of the Weibull parameters of one region.

    The simplex search runs in (ln alpha, ln beta) so that both stay positive. The first start assumes a homogeneous
    process (alpha = 1) matching the event count; the other starts jitter it with a fixed seed.

    Parameters
    ----------
    times : sequence of int
        Global 1-based event times inside [start, end).
    start : int
        First index of the region.
    end : int
        One past the last index of the region.
    hyper : GammaHyperparams or dict, optional
        Prior hyperparameters. Defaults to Gamma(1, 1) for both.
    alpha : float, optional
        Keep the shape fixed at this value and only search the scale.
    restarts : int, optional
        Number of simplex searches. Defaults to NHPP_RESTARTS.
    seed : int, optional
        Seed of the start jitter. Defaults to 0.

    Returns
    -------
    The NhppRegionParams of the region.

    Raises
    ------
    RuntimeError :
        If no simplex search converged.
    """
    hyper = _as_hyper(hyper)
    times = np.asarray(times, dtype=float)
    rng = np.random.default_rng(seed)

    def negative_log_posterior(u: np.ndarray) -> float:
        u = np.clip(u, -_LOG_BOUND, _LOG_BOUND)
        a = np.exp(u[0]) if alpha is None else np.float64(alpha)
        b = np.exp(u[-1])
        with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
            value = -(region_log_likelihood(a, b, times, start, end) + hyper.log_density(a, b))
        return float(value) if np.isfinite(value) else np.inf

    base = np.array([np.log((end - start) / max(times.size, .5))])
    if alpha is None:
        base = np.concatenate(([0.], base))

    best = None
    for restart in range(restarts):
        # Every start is drawn, also the unused first one, so the jitter of a restart does not depend on the budget
        jitter = rng.normal(0., _JITTER, size=base.size)
        x0 = base if restart == 0 else base + jitter
        result = minimize(negative_log_posterior, x0, method='Nelder-Mead', options=_SIMPLEX_OPTIONS)
        if result.success and np.isfinite(result.fun) and (best is None or result.fun < best.fun):
            best = result

    if best is None:
        raise RuntimeError(f'NHPP optimization failed for region [{start},{end}) after {restarts} restarts.')

    u = np.clip(best.x, -_LOG_BOUND, _LOG_BOUND)
    a = float(np.exp(u[0])) if alpha is None else float(alpha)
    b = float(np.exp(u[-1]))
    loglik = region_log_likelihood(a, b, times, start, end)
    return NhppRegionParams(a, b, loglik, loglik + float(hyper.log_density(a, b)))


def nhpp_parts(values: np.ndarray, bounds: np.ndarray, cache: Optional[dict] = None,
               threshold: Optional[float] = None,
               hyper: Union[GammaHyperparams, dict, None] = None) -> FitParts:
    """
    Fit the NHPP model on raw arrays.

    Parameters
    ----------
    values : numpy.ndarray
        The observations.
    bounds : numpy.ndarray
        Zero-based region boundaries (0, ..., n).
    cache : dict, optional
        Region fits keyed by (start, end). Only valid for one series, threshold and prior.
    threshold : float, optional
        The exceedance threshold. Defaults to the series mean.
    hyper : GammaHyperparams or dict, optional
        Prior hyperparameters.
    """
    hyper = _as_hyper(hyper)
    events = np.array(exceedances(values, threshold).indices, dtype=int)

    fits = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        start, end = int(lo) + 1, int(hi) + 1
        if cache is not None and (start, end) in cache:
            fits.append(cache[(start, end)])
            continue

        times = events[np.searchsorted(events, start):np.searchsorted(events, end)]
        fit = fit_nhpp_region(times, start, end, hyper)
        if cache is not None:
            cache[(start, end)] = fit
        fits.append(fit)

    lengths = np.diff(bounds)
    region_params = {'param_alpha': np.array([fit.alpha for fit in fits]),
                     'param_beta': np.array([fit.beta for fit in fits]),
                     'logPost': np.array([fit.logPost for fit in fits]),
                     'logLik': np.array([fit.logLik for fit in fits])}
    fitted = np.repeat(np.add.reduceat(values, bounds[:-1]) / lengths, lengths)

    return FitParts(region_params, {}, fitted, float(region_params['logLik'].sum()),
                    float(np.sum(region_params['logPost'] - region_params['logLik'])))


def fit_nhpp(x: TimeSeries, tau: ChangepointSet, threshold: Optional[float] = None,
             hyper: Union[GammaHyperparams, dict, None] = None) -> ModelFit:
    """
    Fit the NHPP model to the exceedances of a series, independently in every region.

    Parameters
    ----------
    x : TimeSeries
        The series.
    tau : ChangepointSet
        The changepoints.
    threshold : float, optional
        The exceedance threshold. Defaults to the series mean.
    hyper : GammaHyperparams or dict, optional
        Prior hyperparameters. Defaults to Gamma(1, 1) for both.

    Returns
    -------
    The ModelFit. Region parameters are param_alpha, param_beta, logPost and logLik; fitted values are the region
    means of the series; the model log-prior is stored for BMDL.

    Raises
    ------
    RuntimeError :
        If the optimisation of a region does not converge.
    """
    hyper = _as_hyper(hyper)
    threshold = float(x.values.mean()) if threshold is None else float(threshold)
    bounds = np.concatenate(([0], np.asarray(tau.tau, dtype=int) - 1, [x.n]))
    parts = nhpp_parts(x.values, bounds, threshold=threshold, hyper=hyper)
    _log.debug(f'NHPP fit with {tau.m} changepoints: logLik={parts.loglik:.4f}, log-prior={parts.log_prior:.4f}')

    region_params = pd.DataFrame({'region': [region.label for region in regions(tau)], **parts.region_params})
    return ModelFit(x, tau, region_params, {}, parts.fitted, 'nhpp', parts.loglik, 2, 0, parts.log_prior,
                    {'threshold': threshold, 'hyper': asdict(hyper)})


def log_prior(fit: ModelFit) -> float:
    """
    Log-prior of the MAP parameters of an NHPP fit: the sum over regions of logPost - logLik.

    Raises
    ------
    ValueError :
        If the fit is not an NHPP fit.
    """
    if fit.model_name != 'nhpp':
        raise ValueError(f'A log-prior is only defined for NHPP fits, got "{fit.model_name}".')
    return float(np.sum(fit.region_params['logPost'] - fit.region_params['logLik']))
