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

Module with the catalog of segment models. Given a series and a fixed changepoint set, every model is fitted by
maximum likelihood into a ModelFit.

------------------------------------------------------------------------------------------------------------------------
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from scipy.special import gammaln, xlogy
import numpy as np
import pandas as pd

from .core import ChangepointSet, FitParts, LogLikSummary, ModelFit, TimeSeries, regions
from . import nhpp


__all__ = ['MODEL_NAMES', 'ModelSpec', 'Ar1Params', 'as_model_spec', 'as_changepoint_set', 'ar1_log_likelihood',
           'loglik_parts', 'fit_meanshift', 'fit_lmshift', 'fit_trendshift', 'fit_meanvar', 'fit_model',
           'log_likelihood', 'list_models', ]


MODEL_NAMES = ('meanshift_norm', 'meanshift_lnorm', 'meanshift_pois', 'meanshift_norm_ar1', 'trendshift',
               'trendshift_ar1', 'lmshift', 'lmshift_ar1', 'meanvar', 'nhpp', )

_FAMILIES = ('meanshift', 'lmshift', 'meanvar', 'nhpp', )
_DISTRIBUTIONS = {'normal': 'norm', 'lognormal': 'lnorm', 'poisson': 'pois', }
# Largest autocorrelation magnitude accepted from the lag-1 estimator
_PHI_LIMIT = .999
_LOG_2PI = np.log(2 * np.pi)


# ======================================================================================================================
# MODEL SPECIFICATION
# ======================================================================================================================
@dataclass(frozen=True)
class ModelSpec:
    """
    Specification of a segment model.

    Parameters
    ----------
    family : str, optional
        One of 'meanshift', 'lmshift', 'meanvar' or 'nhpp'. Defaults to 'meanshift'.
    distribution : str, optional
        One of 'normal', 'lognormal' or 'poisson'. Only meanshift supports the latter two. Defaults to 'normal'.
    degree : int, optional
        Polynomial degree p of the lmshift family (trendshift is p = 1). Defaults to 1.
    ar1 : bool, optional
        Model the residuals as AR(1). Only for normal meanshift and lmshift. Defaults to False.

    Raises
    ------
    ValueError :
        If the combination of settings does not describe a model in the catalog.
    """
    family: str = 'meanshift'
    distribution: str = 'normal'
    degree: int = 1
    ar1: bool = False

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValueError(f'Unknown model family "{self.family}".')
        if self.distribution not in _DISTRIBUTIONS:
            raise ValueError(f'Unknown distribution "{self.distribution}".')
        if self.family != 'meanshift' and self.distribution != 'normal':
            raise ValueError(f'The {self.family} family only supports the normal distribution.')
        if self.ar1 and not (self.family == 'lmshift' or (self.family == 'meanshift' and
                                                            self.distribution == 'normal')):
            raise ValueError('AR(1) errors are only available for normal meanshift and lmshift models.')
        if int(self.degree) < 0:
            raise ValueError(f'Polynomial degree must be nonnegative, got {self.degree}.')
        object.__setattr__(self, 'degree', int(self.degree))

    @classmethod
    def from_name(cls, name: str, degree: Optional[int] = None) -> 'ModelSpec':
        """
        Build a specification from a model identifier.

        Parameters
        ----------
        name : str
            One of MODEL_NAMES.
        degree : int, optional
            Polynomial degree for 'lmshift' and 'lmshift_ar1'. Defaults to 2 for those.
        """
        ar1 = name.endswith('_ar1')
        base = name[:-4] if ar1 else name

        if base == 'meanshift_norm':
            return cls('meanshift', 'normal', ar1=ar1)
        elif base == 'meanshift_lnorm' and not ar1:
            return cls('meanshift', 'lognormal')
        elif base == 'meanshift_pois' and not ar1:
            return cls('meanshift', 'poisson')
        elif base == 'trendshift':
            return cls('lmshift', degree=1, ar1=ar1)
        elif base == 'lmshift':
            return cls('lmshift', degree=2 if degree is None else degree, ar1=ar1)
        elif name in ('meanvar', 'nhpp'):
            return cls(name)

        raise ValueError(f'Unknown model "{name}". Choose from: {", ".join(MODEL_NAMES)}.')

    @property
    def name(self) -> str:
        if self.family == 'meanshift':
            base = f'meanshift_{_DISTRIBUTIONS[self.distribution]}'
        elif self.family == 'lmshift':
            base = 'trendshift' if self.degree == 1 else 'lmshift'
        else:
            return self.family
        return base + '_ar1' if self.ar1 else base

    @property
    def num_params_per_region(self) -> int:
        if self.family == 'lmshift':
            return self.degree + 1
        elif self.family in ('meanvar', 'nhpp'):
            return 2
        return 1

    @property
    def num_model_params(self) -> int:
        if self.family in ('meanvar', 'nhpp') or self.distribution == 'poisson':
            return 0
        return 1 + int(self.ar1)

    @property
    def min_seg_len(self) -> int:
        """
        Default minimum region length. Any model with an estimated residual variance needs two points per region,
        lmshift of degree p needs p+1.
        """
        if self.family == 'lmshift':
            return max(self.degree + 1, 2)
        elif self.family == 'nhpp' or self.distribution == 'poisson':
            return 1
        return 2


@dataclass(frozen=True)
class Ar1Params:
    """
    Lag-1 autocorrelation of AR(1) residuals.
    """
    phi: float

    def __post_init__(self) -> None:
        if not -1. < self.phi < 1.:
            raise ValueError(f'AR(1) coefficient must lie in (-1, 1), got {self.phi}.')


def as_model_spec(model: Union[str, ModelSpec], degree: Optional[int] = None) -> ModelSpec:
    """
    Accept a model identifier or a ModelSpec and return the ModelSpec.
    """
    if isinstance(model, ModelSpec):
        return model
    return ModelSpec.from_name(str(model), degree=degree)


def as_changepoint_set(tau: Union[ChangepointSet, Sequence[int], None], n: int) -> ChangepointSet:
    """
    Accept a ChangepointSet or a sequence of indices for a series of length n.
    """
    if isinstance(tau, ChangepointSet):
        if tau.n != n:
            raise ValueError(f'Changepoint set refers to n={tau.n}, the series has n={n}.')
        return tau
    return ChangepointSet(tuple(sorted(tau or ())), n)


# ======================================================================================================================
# LIKELIHOOD BUILDING BLOCKS
# ======================================================================================================================
def _is_degenerate(ssq: float, values: np.ndarray) -> bool:
    """
    Whether a residual sum of squares is zero up to floating point noise, on the scale of the spread of the values.
    """
    scale = max(1., float(np.max(np.abs(values - values.mean())))) if values.size else 1.
    return ssq <= 1e2 * np.finfo(float).eps * values.size * scale ** 2


def _bounds(n: int, tau: np.ndarray) -> np.ndarray:
    """
    Zero-based region boundaries (0, tau_1 - 1, ..., tau_m - 1, n).
    """
    return np.concatenate(([0], np.asarray(tau, dtype=int) - 1, [n]))


def _normal_loglik(residuals: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    """
    Closed form of the maximised normal log-likelihood with pooled variance: -n/2 (ln s2 + 1 + ln 2 pi).
    Returns the log-likelihood and the variance estimate.
    """
    n = residuals.size
    rss = float(residuals @ residuals)
    if _is_degenerate(rss, values):
        raise ValueError('Residual variance is zero: degenerate variance.')
    sigma_hatsq = rss / n
    return -n / 2 * (np.log(sigma_hatsq) + 1. + _LOG_2PI), sigma_hatsq


def ar1_log_likelihood(residuals: np.ndarray, phi: Optional[float] = None) -> tuple[float, float, float]:
    """
    Gaussian log-likelihood of residuals with AR(1) dependence. The decorrelated residuals e_t - phi e_{t-1} enter
    with their MLE variance, together with the stationary term of the first observation.

    Parameters
    ----------
    residuals : numpy.ndarray
        Detrended residuals e_t.
    phi : float, optional
        Autocorrelation to use. Estimated as the lag-1 sample autocorrelation when not given.

    Returns
    -------
    Tuple of the log-likelihood, phi and the innovation variance.

    Raises
    ------
    ValueError :
        If the innovation variance is zero or phi lies outside (-1, 1).
    """
    e = np.asarray(residuals, dtype=float)
    n = e.size
    if phi is None:
        energy = float(e @ e)
        phi = float(e[1:] @ e[:-1]) / energy if energy > 0 else 0.
        phi = float(np.clip(phi, -_PHI_LIMIT, _PHI_LIMIT))
    Ar1Params(phi)

    innovations = e[1:] - phi * e[:-1]
    ssq = (1. - phi ** 2) * e[0] ** 2 + float(innovations @ innovations)
    if _is_degenerate(ssq, e):
        raise ValueError('Innovation variance is zero: degenerate variance.')
    sigma_hatsq = ssq / n

    loglik = -n / 2 * (np.log(sigma_hatsq) + 1. + _LOG_2PI) + .5 * np.log(1. - phi ** 2)
    return loglik, phi, sigma_hatsq


def _gaussian_errors(residuals: np.ndarray, values: np.ndarray, ar1: bool) -> tuple[float, dict]:
    """
    Log-likelihood and global parameters of the residuals of a normal model.
    """
    if ar1:
        loglik, phi, sigma_hatsq = ar1_log_likelihood(residuals)
        return loglik, {'param_sigma_hatsq': sigma_hatsq, 'param_phi': phi}

    loglik, sigma_hatsq = _normal_loglik(residuals, values)
    return loglik, {'param_sigma_hatsq': sigma_hatsq}


# ======================================================================================================================
# FAMILY FITTERS
# ======================================================================================================================
def _meanshift_parts(values: np.ndarray, bounds: np.ndarray, distribution: str, ar1: bool) -> FitParts:
    """
    Region-wise constant mean with a pooled variance (normal, lognormal) or a region-wise Poisson rate.
    """
    lengths = np.diff(bounds)

    if distribution == 'poisson':
        if np.any(values < 0) or np.any(values != np.floor(values)):
            raise ValueError('The poisson model needs nonnegative integer observations.')
        rates = np.add.reduceat(values, bounds[:-1]) / lengths
        fitted = np.repeat(rates, lengths)
        loglik = float(np.sum(xlogy(values, fitted) - fitted - gammaln(values + 1.)))
        return FitParts({'param_mu': rates}, {}, fitted, loglik)

    if distribution == 'lognormal':
        if np.any(values <= 0):
            raise ValueError('The lognormal model needs strictly positive observations.')
        y = np.log(values)
    else:
        y = values

    mu = np.add.reduceat(y, bounds[:-1]) / lengths
    centre = np.repeat(mu, lengths)
    loglik, model_params = _gaussian_errors(y - centre, y, ar1)

    if distribution == 'lognormal':
        # Jacobian of the log transform
        loglik -= float(np.sum(y))
        fitted = np.exp(centre + model_params['param_sigma_hatsq'] / 2)
    else:
        fitted = centre

    return FitParts({'param_mu': mu}, model_params, fitted, loglik)


def _lmshift_parts(values: np.ndarray, bounds: np.ndarray, degree: int, ar1: bool) -> FitParts:
    """
    Region-wise polynomial of the given degree in the region-local time index, with a pooled residual variance.
    """
    lengths = np.diff(bounds)
    if np.any(lengths < degree + 1):
        raise ValueError(f'A region shorter than {degree + 1} points is an underdetermined region.')

    starts = bounds[:-1]
    if degree == 1:
        # Closed-form least squares from prefix sums, on data centred for numerical stability
        offset = float(values.mean())
        yc = values - offset
        g = np.arange(values.size, dtype=float)
        sum_y = np.add.reduceat(yc, starts)
        sum_gy = np.add.reduceat(g * yc, starts)

        length = lengths.astype(float)
        t_bar = (length - 1.) / 2
        sum_tt = (length - 1.) * length * (2. * length - 1.) / 6
        s_xx = sum_tt - length * t_bar ** 2
        s_xy = (sum_gy - starts * sum_y) - t_bar * sum_y

        slopes = s_xy / s_xx
        intercepts = sum_y / length - slopes * t_bar + offset
        coefficients = [intercepts, slopes]
        local_t = g - np.repeat(starts, lengths)
        fitted = np.repeat(intercepts, lengths) + np.repeat(slopes, lengths) * local_t

    else:
        rows = []
        fitted = np.empty(values.size)
        for start, end in zip(bounds[:-1], bounds[1:]):
            design = np.vander(np.arange(end - start, dtype=float), degree + 1, increasing=True)
            beta, *_ = np.linalg.lstsq(design, values[start:end], rcond=None)
            fitted[start:end] = design @ beta
            rows.append(beta)
        coefficients = list(np.array(rows).T)

    loglik, model_params = _gaussian_errors(values - fitted, values, ar1)
    region_params = {f'param_beta{ip}': np.asarray(beta) for ip, beta in enumerate(coefficients)}
    return FitParts(region_params, model_params, fitted, loglik)


def _meanvar_parts(values: np.ndarray, bounds: np.ndarray) -> FitParts:
    """
    Region-wise mean and region-wise sample variance. The log-likelihood sums the normal log-densities at the
    region parameters.
    """
    lengths = np.diff(bounds)
    if np.any(lengths < 2):
        raise ValueError('The meanvar model needs regions of at least 2 points.')

    offset = float(values.mean())
    yc = values - offset
    sums = np.add.reduceat(yc, bounds[:-1])
    squares = np.add.reduceat(yc ** 2, bounds[:-1])
    rss = np.maximum(squares - sums ** 2 / lengths, 0.)

    scale = max(1., float(np.max(np.abs(yc))))
    if np.any(rss <= 1e2 * np.finfo(float).eps * lengths * scale ** 2):
        raise ValueError('A region has zero variance: degenerate variance.')

    mu = sums / lengths + offset
    variance = rss / (lengths - 1)
    loglik = float(np.sum(-lengths / 2 * (_LOG_2PI + np.log(variance)) - (lengths - 1) / 2))
    return FitParts({'param_mu': mu, 'param_sigma_hatsq': variance}, {}, np.repeat(mu, lengths), loglik)


def loglik_parts(values: np.ndarray, tau: Sequence[int], spec: ModelSpec, cache: Optional[dict] = None,
                 **model_args) -> FitParts:
    """
    Fit a model on raw arrays. This is the fast path used by the searches: no validation of tau and no tables.

    Parameters
    ----------
    values : numpy.ndarray
        The observations.
    tau : sequence of int
        Sorted 1-based changepoint indices.
    spec : ModelSpec
        The model.
    cache : dict, optional
        Per-region result cache, used by the NHPP model.
    **model_args
        threshold and hyper for the NHPP model.

    Returns
    -------
    The FitParts of the fit.
    """
    bounds = _bounds(values.size, np.asarray(tau, dtype=int))

    if spec.family == 'meanshift':
        return _meanshift_parts(values, bounds, spec.distribution, spec.ar1)
    elif spec.family == 'lmshift':
        return _lmshift_parts(values, bounds, spec.degree, spec.ar1)
    elif spec.family == 'meanvar':
        return _meanvar_parts(values, bounds)
    return nhpp.nhpp_parts(values, bounds, cache=cache, **model_args)


# ======================================================================================================================
# PUBLIC FITTING FUNCTIONS
# ======================================================================================================================
def _build_fit(x: TimeSeries, tau: ChangepointSet, spec: ModelSpec, model_args: Optional[dict] = None) -> ModelFit:
    """
    Fit the model and wrap the result in a ModelFit.
    """
    model_args = dict(model_args or {})
    parts = loglik_parts(x.values, tau.tau, spec, **model_args)

    region_params = pd.DataFrame({'region': [region.label for region in regions(tau)]})
    for key, column in parts.region_params.items():
        region_params[key] = np.asarray(column, dtype=float)

    if spec.family == 'lmshift':
        model_args['degree'] = spec.degree

    return ModelFit(x, tau, region_params, {key: float(value) for key, value in parts.model_params.items()},
                    parts.fitted, spec.name, float(parts.loglik), spec.num_params_per_region,
                    spec.num_model_params, parts.log_prior, model_args)


def fit_meanshift(x: TimeSeries, tau: Union[ChangepointSet, Sequence[int]], distribution: str = 'normal',
                  ar1: bool = False) -> ModelFit:
    """
    Fit a model with a constant mean in every region.

    Parameters
    ----------
    x : TimeSeries
        The series.
    tau : ChangepointSet or sequence of int
        The changepoints.
    distribution : str, optional
        'normal', 'lognormal' or 'poisson'. Defaults to 'normal'.
    ar1 : bool, optional
        AR(1) residuals (normal only). Defaults to False.

    Returns
    -------
    The ModelFit, with param_mu per region and the pooled param_sigma_hatsq (normal, lognormal).

    Raises
    ------
    ValueError :
        For a perfect fit (degenerate variance) or observations outside the distribution's domain.
    """
    return _build_fit(x, as_changepoint_set(tau, x.n), ModelSpec('meanshift', distribution, ar1=ar1))


def fit_lmshift(x: TimeSeries, tau: Union[ChangepointSet, Sequence[int]], degree: int = 1,
                ar1: bool = False) -> ModelFit:
    """
    Fit a polynomial of degree p in every region, by ordinary least squares in the region-local time index.

    Parameters
    ----------
    x : TimeSeries
        The series.
    tau : ChangepointSet or sequence of int
        The changepoints.
    degree : int, optional
        Polynomial degree p. Defaults to 1.
    ar1 : bool, optional
        AR(1) residuals. Defaults to False.

    Raises
    ------
    ValueError :
        If a region is shorter than p+1, or the fit is perfect.
    """
    return _build_fit(x, as_changepoint_set(tau, x.n), ModelSpec('lmshift', degree=degree, ar1=ar1))


def fit_trendshift(x: TimeSeries, tau: Union[ChangepointSet, Sequence[int]], ar1: bool = False) -> ModelFit:
    """
    Fit a linear trend in every region (lmshift with degree 1).
    """
    return fit_lmshift(x, tau, degree=1, ar1=ar1)


def fit_meanvar(x: TimeSeries, tau: Union[ChangepointSet, Sequence[int]]) -> ModelFit:
    """
    Fit a mean and a sample variance in every region.

    Raises
    ------
    ValueError :
        If a region is shorter than 2 points or has zero variance.
    """
    return _build_fit(x, as_changepoint_set(tau, x.n), ModelSpec('meanvar'))


def fit_model(x: TimeSeries, tau: Union[ChangepointSet, Sequence[int]], model: Union[str, ModelSpec],
              **model_args) -> ModelFit:
    """
    Fit any model of the catalog.

    Parameters
    ----------
    x : TimeSeries
        The series.
    tau : ChangepointSet or sequence of int
        The changepoints.
    model : str or ModelSpec
        Model identifier or specification.
    **model_args
        threshold and hyper for the NHPP model.
    """
    spec = as_model_spec(model)
    tau = as_changepoint_set(tau, x.n)
    if spec.family == 'nhpp':
        return nhpp.fit_nhpp(x, tau, **model_args)
    return _build_fit(x, tau, spec)


def log_likelihood(fit: ModelFit) -> LogLikSummary:
    """
    Log-likelihood summary of a model fit, with the parameter counts and degrees of freedom.
    """
    return LogLikSummary.from_counts(fit.loglik, fit.num_params_per_region, fit.num_model_params, fit.tau,
                                     fit.log_prior)


def list_models() -> pd.DataFrame:
    """
    Catalog of the available models.

    Returns
    -------
    DataFrame with one row per model identifier: family, distribution, degree, ar1, the parameter counts a and b
    and the default minimum segment length.
    """
    rows = []
    for name in MODEL_NAMES:
        spec = ModelSpec.from_name(name)
        rows.append({'model': name, 'family': spec.family, 'distribution': spec.distribution,
                     'degree': spec.degree if spec.family == 'lmshift' else None, 'ar1': spec.ar1,
                     'num_params_per_region': spec.num_params_per_region,
                     'num_model_params': spec.num_model_params, 'min_seg_len': spec.min_seg_len})
    return pd.DataFrame(rows)
