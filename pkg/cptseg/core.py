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

Module containing the foundational types of the package, the region algebra, and the tidy/augment/glance tables
that every model and algorithm shares.

------------------------------------------------------------------------------------------------------------------------
"""
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional, Sequence
import json

import numpy as np
import pandas as pd


__all__ = ['TimeSeries', 'ChangepointSet', 'Region', 'RegionLengths', 'ModelFit', 'LogLikSummary',
           'SegmentationResult', 'FitParts', 'regions', 'region_lengths', 'augment', 'tidy', 'glance',
           'changepoints', 'fitness', 'compact_params', ]


def _labels_increasing(labels: tuple) -> bool:
    """
    Check that a sequence of time labels is strictly increasing. Strings are compared as dates when they parse as
    such, otherwise lexicographically.
    """
    if len(labels) < 2:
        return True

    if all(isinstance(label, str) for label in labels):
        try:
            index = pd.Index(pd.to_datetime(list(labels)))
            return bool(index.is_monotonic_increasing and index.is_unique)
        except (ValueError, TypeError):
            pass

    try:
        return all(a < b for a, b in zip(labels[:-1], labels[1:]))
    except TypeError:
        return False


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """
    Ordered real observations with optional time labels.

    Parameters
    ----------
    values : array_like
        The n observations. Must be finite and contain at least one value.
    labels : sequence, optional
        Time labels (ISO-8601 dates or integers), one per observation, strictly increasing.
    name : str, optional
        Name of the measured quantity. Defaults to 'y'.

    Raises
    ------
    ValueError :
        If the values are empty or contain missing entries, or if the labels do not match the values.
    """
    values: np.ndarray
    labels: Optional[tuple] = None
    name: str = 'y'

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).ravel()
        if values.size < 1:
            raise ValueError('A time series needs at least one observation.')
        if not np.all(np.isfinite(values)):
            raise ValueError('Time series values contain missing or non-finite entries.')
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

        if self.labels is not None:
            # Unwrap numpy scalars so labels serialise and compare as plain python values
            labels = tuple(label.item() if isinstance(label, np.generic) else label for label in self.labels)
            if len(labels) != values.size:
                raise ValueError(f'Got {len(labels)} time labels for {values.size} observations.')
            if not _labels_increasing(labels):
                raise ValueError('Time labels are not strictly increasing.')
            object.__setattr__(self, 'labels', labels)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class ChangepointSet:
    """
    Sorted interior indices defining m+1 half-open regions of a series of length n.
    Indices are 1-based: every changepoint satisfies 2 <= tau_j <= n, with implicit boundaries 1 and n+1.

    Parameters
    ----------
    tau : sequence of int
        The changepoint indices.
    n : int
        Length of the series the set refers to.

    Raises
    ------
    ValueError :
        If the indices are out of range or not strictly increasing.
    """
    tau: tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        tau = tuple(int(t) for t in self.tau)
        if int(self.n) < 1:
            raise ValueError('A changepoint set needs a series length of at least 1.')
        object.__setattr__(self, 'n', int(self.n))
        if any(b <= a for a, b in zip(tau[:-1], tau[1:])):
            raise ValueError(f'Changepoints {tau} are not strictly increasing.')
        if tau and (tau[0] < 2 or tau[-1] > self.n):
            raise ValueError(f'Changepoints must lie in [2, {self.n}], got {tau}.')
        object.__setattr__(self, 'tau', tau)

    @property
    def m(self) -> int:
        return len(self.tau)

    def __len__(self) -> int:
        return self.m

    def __iter__(self):
        return iter(self.tau)

    def boundaries(self) -> np.ndarray:
        """
        The augmented boundary sequence (1, tau_1, ..., tau_m, n+1).
        """
        return np.array((1, ) + self.tau + (self.n + 1, ), dtype=int)


class Region(NamedTuple):
    """
    Half-open index interval [start, end).
    """
    start: int
    end: int

    @property
    def label(self) -> str:
        return f'[{self.start},{self.end})'

    @property
    def length(self) -> int:
        return self.end - self.start


class RegionLengths(tuple):
    """
    Tuple of the m+1 positive region lengths of a changepoint set.
    """
    def __new__(cls, lengths: Sequence[int]) -> 'RegionLengths':
        lengths = tuple(int(length) for length in lengths)
        if not lengths or any(length < 1 for length in lengths):
            raise ValueError(f'Region lengths must be positive, got {lengths}.')
        return super().__new__(cls, lengths)


def regions(tau: ChangepointSet) -> list[Region]:
    """
    Split the index range [1, n+1) into the m+1 regions defined by a changepoint set.

    Parameters
    ----------
    tau : ChangepointSet
        The changepoint set.

    Returns
    -------
    List of the Region intervals, in order.
    """
    bounds = tau.boundaries()
    return [Region(int(start), int(end)) for start, end in zip(bounds[:-1], bounds[1:])]


def region_lengths(tau: ChangepointSet) -> RegionLengths:
    """
    Lengths of the m+1 regions of a changepoint set. These always sum to n.
    """
    return RegionLengths(np.diff(tau.boundaries()))


@dataclass(frozen=True)
class LogLikSummary:
    """
    Maximised log-likelihood of a model fit, with the parameter counts every penalty needs.

    Parameters
    ----------
    value : float
        The log-likelihood.
    num_params_per_region : int
        Number of parameters a(theta) fitted in each region.
    num_model_params : int
        Number of global parameters b(theta).
    df : int
        Degrees of freedom, a(m+1) + b + m. Changepoint locations count as parameters.
    nobs : int
        Number of observations.
    tau : ChangepointSet
        The changepoint set of the fit.
    log_prior : float, optional
        Log-prior of the fitted parameters. Only NHPP fits carry one.
    """
    value: float
    num_params_per_region: int
    num_model_params: int
    df: int
    nobs: int
    tau: ChangepointSet
    log_prior: Optional[float] = None

    def __post_init__(self) -> None:
        expected = self.num_params_per_region * (self.tau.m + 1) + self.num_model_params + self.tau.m
        if self.df != expected:
            raise ValueError(f'Degrees of freedom {self.df} do not match a(m+1) + b + m = {expected}.')
        if self.nobs != self.tau.n:
            raise ValueError(f'Number of observations {self.nobs} does not match the series length {self.tau.n}.')

    @classmethod
    def from_counts(cls, value: float, num_params_per_region: int, num_model_params: int, tau: ChangepointSet,
                    log_prior: Optional[float] = None) -> 'LogLikSummary':
        """
        Build the summary from the parameter counts, deriving df and nobs.
        """
        df = num_params_per_region * (tau.m + 1) + num_model_params + tau.m
        return cls(float(value), num_params_per_region, num_model_params, df, tau.n, tau, log_prior)

    @property
    def m(self) -> int:
        return self.tau.m


class FitParts(NamedTuple):
    """
    Raw arrays of a model fit, before they are wrapped into a ModelFit.
    region_params maps column names to arrays with one entry per region.
    """
    region_params: dict
    model_params: dict
    fitted: np.ndarray
    loglik: float
    log_prior: Optional[float] = None


@dataclass(frozen=True, eq=False)
class ModelFit:
    """
    A segment model fitted at a fixed changepoint set.

    Parameters
    ----------
    data : TimeSeries
        The series the model was fitted to.
    tau : ChangepointSet
        The changepoint set.
    region_params : pandas.DataFrame
        One row per region, in region order: the 'region' label followed by the named region parameters.
    model_params : dict
        Named global parameters. Possibly empty.
    fitted_values : numpy.ndarray
        The n fitted values.
    model_name : str
        Identifier of the model.
    loglik : float
        Maximised log-likelihood.
    num_params_per_region : int
        Number of parameters per region a(theta).
    num_model_params : int
        Number of global parameters b(theta).
    log_prior : float, optional
        Log-prior at the fitted parameters (NHPP only).
    model_args : dict, optional
        Settings the fit was made with (threshold, hyperparameters, polynomial degree).
    """
    data: TimeSeries
    tau: ChangepointSet
    region_params: pd.DataFrame
    model_params: dict
    fitted_values: np.ndarray
    model_name: str
    loglik: float
    num_params_per_region: int
    num_model_params: int
    log_prior: Optional[float] = None
    model_args: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.tau.n != self.data.n:
            raise ValueError(f'Changepoint set refers to n={self.tau.n}, the series has n={self.data.n}.')
        if len(self.region_params) != self.tau.m + 1:
            raise ValueError(f'Expected {self.tau.m + 1} rows of region parameters, got {len(self.region_params)}.')
        fitted = np.array(self.fitted_values, dtype=float)
        if fitted.size != self.data.n:
            raise ValueError(f'Expected {self.data.n} fitted values, got {fitted.size}.')
        fitted.setflags(write=False)
        object.__setattr__(self, 'fitted_values', fitted)

    @property
    def residuals(self) -> np.ndarray:
        return self.data.values - self.fitted_values

    @property
    def num_cpts(self) -> int:
        return self.tau.m

    @property
    def coef(self) -> pd.DataFrame:
        """
        Copy of the region parameter table.
        """
        return self.region_params.copy()


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    """
    Result of a segmentation run: the algorithm side (name, arguments, fitness) and the model refit at the
    changepoints the algorithm returned.

    Parameters
    ----------
    algorithm : str
        Method identifier.
    seg_params : dict
        Arguments and bookkeeping of the run (seeds, GA traces, ...).
    fitness_name : str
        Identifier of the penalised objective.
    fitness_value : float
        Value of the penalised objective for the model.
    model : ModelFit
        The refit model.
    elapsed : float
        Wall time of the run, in seconds.
    """
    algorithm: str
    seg_params: dict
    fitness_name: str
    fitness_value: float
    model: ModelFit
    elapsed: float

    @property
    def tau(self) -> ChangepointSet:
        return self.model.tau


def augment(fit: ModelFit) -> pd.DataFrame:
    """
    Per-observation table of a model fit.

    Parameters
    ----------
    fit : ModelFit
        The model fit.

    Returns
    -------
    DataFrame with n rows and the columns index, y, region, .fitted and .resid.
    """
    labels = [region.label for region in regions(fit.tau)]
    values = fit.data.values

    return pd.DataFrame({
        'index': np.arange(1, fit.data.n + 1),
        'y': values,
        'region': np.repeat(labels, region_lengths(fit.tau)),
        '.fitted': fit.fitted_values,
        '.resid': values - fit.fitted_values,
    })


def tidy(fit: ModelFit) -> pd.DataFrame:
    """
    Per-region summary table of a model fit: the region label, the number of observations, min, max, mean and
    sample standard deviation of the observations, the begin and end indices, and the region parameters.

    Parameters
    ----------
    fit : ModelFit
        The model fit.

    Returns
    -------
    DataFrame with m+1 rows.
    """
    rows = []
    for region in regions(fit.tau):
        chunk = fit.data.values[region.start - 1:region.end - 1]
        rows.append({
            'region': region.label,
            'num_obs': chunk.size,
            'min': chunk.min(),
            'max': chunk.max(),
            'mean': chunk.mean(),
            'sd': chunk.std(ddof=1) if chunk.size > 1 else np.nan,
            'begin': region.start,
            'end': region.end,
        })

    summary = pd.DataFrame(rows)
    params = fit.region_params.drop(columns='region', errors='ignore').reset_index(drop=True)
    return pd.concat([summary, params], axis=1)


def compact_params(seg_params: dict) -> str:
    """
    Render the scalar entries (and short scalar lists) of a seg_params record as a JSON string.
    Long entries like GA traces are left out.
    """
    compact = {}
    for key, value in seg_params.items():
        if isinstance(value, np.generic):
            value = value.item()
        if value is None or isinstance(value, (str, bool, int, float)):
            compact[key] = value
        elif isinstance(value, (list, tuple)) and len(value) <= 20 and \
                all(isinstance(item, (str, bool, int, float)) for item in value):
            compact[key] = list(value)

    return json.dumps(compact, sort_keys=True)


def glance(result: SegmentationResult) -> pd.DataFrame:
    """
    One-row summary of a segmentation run.

    Parameters
    ----------
    result : SegmentationResult
        The segmentation result.

    Returns
    -------
    DataFrame with the columns algorithm, seg_params, model_name, criteria, fitness and elapsed_time.
    """
    return pd.DataFrame([{
        'algorithm': result.algorithm,
        'seg_params': compact_params(result.seg_params),
        'model_name': result.model.model_name,
        'criteria': result.fitness_name,
        'fitness': result.fitness_value,
        'elapsed_time': result.elapsed,
    }])


def changepoints(result: SegmentationResult, use_labels: bool = False) -> list[Any]:
    """
    The changepoints of a segmentation result.

    Parameters
    ----------
    result : SegmentationResult
        The segmentation result.
    use_labels : bool, optional
        Return the time labels of the changepoints instead of their indices. Defaults to False.

    Returns
    -------
    Sorted list of changepoint indices, or of their time labels.

    Raises
    ------
    ValueError :
        If labels are requested for a series without time labels.
    """
    tau = list(result.model.tau.tau)
    if not use_labels:
        return tau

    labels = result.model.data.labels
    if labels is None:
        raise ValueError('The series has no time labels.')
    return [labels[t - 1] for t in tau]


def fitness(result: SegmentationResult) -> tuple[str, float]:
    """
    Name and value of the penalised objective of a segmentation result.
    """
    return result.fitness_name, result.fitness_value
