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

Module with the generators of synthetic segmented series. All draws come from numpy's PCG64 generator, so a seed
gives the same series on every platform.

------------------------------------------------------------------------------------------------------------------------
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ChangepointSet, TimeSeries


__all__ = ['DISTRIBUTIONS', 'RegionSpec', 'SimSpec', 'simulate', 'simulate_weibull_exceedances', ]


DISTRIBUTIONS = ('normal', 'lognormal', 'poisson', 'trend', )


@dataclass(frozen=True)
class RegionSpec:
    """
    One region of a synthetic series.

    Parameters
    ----------
    length : int
        Number of observations, at least 1.
    distribution : str, optional
        'normal' (mu, sigma), 'lognormal' (mu, sigma of the log), 'poisson' (lam) or 'trend' (beta0 + beta1 t plus
        normal noise with sigma, t counted from 0 within the region). Defaults to 'normal'.
    mu : float, optional
        Mean. Defaults to 0.
    sigma : float, optional
        Standard deviation, nonnegative. Defaults to 1.
    lam : float, optional
        Poisson rate, nonnegative. Defaults to 1.
    beta0 : float, optional
        Trend intercept. Defaults to 0.
    beta1 : float, optional
        Trend slope. Defaults to 0.
    """
    length: int
    distribution: str = 'normal'
    mu: float = 0.
    sigma: float = 1.
    lam: float = 1.
    beta0: float = 0.
    beta1: float = 0.

    def __post_init__(self) -> None:
        if int(self.length) < 1:
            raise ValueError(f'Region length must be at least 1, got {self.length}.')
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f'Unknown distribution "{self.distribution}". Choose from: {", ".join(DISTRIBUTIONS)}.')
        if self.sigma < 0:
            raise ValueError(f'Standard deviation must be nonnegative, got {self.sigma}.')
        if self.lam < 0:
            raise ValueError(f'Poisson rate must be nonnegative, got {self.lam}.')
        object.__setattr__(self, 'length', int(self.length))

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        """
        Draw the observations of the region.
        """
        if self.distribution == 'normal':
            return self.mu + self.sigma * rng.standard_normal(self.length)
        elif self.distribution == 'lognormal':
            return np.exp(self.mu + self.sigma * rng.standard_normal(self.length))
        elif self.distribution == 'poisson':
            return rng.poisson(self.lam, self.length).astype(float)

        noise = self.sigma * rng.standard_normal(self.length)
        return self.beta0 + self.beta1 * np.arange(self.length) + noise


@dataclass(frozen=True)
class SimSpec:
    """
    Specification of a synthetic series: its regions in order and the seed.
    """
    regions: tuple[RegionSpec, ...]
    rng_seed: int = 0

    def __post_init__(self) -> None:
        regions = tuple(self.regions)
        if not regions:
            raise ValueError('A simulation needs at least one region.')
        object.__setattr__(self, 'regions', regions)

    @property
    def n(self) -> int:
        return sum(region.length for region in self.regions)

    @property
    def tau(self) -> tuple[int, ...]:
        """
        The true changepoints: the 1-based first index of every region after the first.
        """
        return tuple(int(t) for t in np.cumsum([region.length for region in self.regions])[:-1] + 1)


def simulate(spec: SimSpec) -> tuple[TimeSeries, ChangepointSet]:
    """
    Draw a synthetic series.

    Parameters
    ----------
    spec : SimSpec
        The regions and the seed.

    Returns
    -------
    Tuple of the series (time labels 1 to n) and its true changepoint set.
    """
    rng = np.random.default_rng(spec.rng_seed)
    values = np.concatenate([region.draw(rng) for region in spec.regions])
    return TimeSeries(values, tuple(range(1, values.size + 1))), ChangepointSet(spec.tau, spec.n)


def simulate_weibull_exceedances(n: int, alpha: float, beta: float, rng_seed: int = 0,
                                 regions: Sequence[tuple[int, float, float]] = ()) -> TimeSeries:
    """
    Draw a 0/1 series whose ones are the events of a Weibull non-homogeneous Poisson process, with cumulative
    intensity (t/beta)^alpha on (0, n]. Events are rounded up to the next index; an index holds at most one event.

    Parameters
    ----------
    n : int
        Series length.
    alpha : float
        Weibull shape.
    beta : float
        Weibull scale.
    rng_seed : int, optional
        Seed of the draws. Defaults to 0.
    regions : sequence of (start, alpha, beta), optional
        Later regions with their own parameters, starting at the given 1-based index. Within a region the global
        time axis is kept, as in the region likelihood of the NHPP model.

    Returns
    -------
    The series, with time labels 1 to n.
    """
    if n < 1 or alpha <= 0 or beta <= 0:
        raise ValueError(f'Need n >= 1 and positive Weibull parameters, got n={n}, alpha={alpha}, beta={beta}.')

    rng = np.random.default_rng(rng_seed)
    pieces = [(1, alpha, beta)] + sorted((int(start), float(a), float(b)) for start, a, b in regions)
    ends = [start for start, _, _ in pieces[1:]] + [n + 1]

    values = np.zeros(n)
    for (start, a, b), end in zip(pieces, ends):
        # Invert the cumulative intensity on unit-rate arrivals after the region start
        lower, upper = ((start - 1.) / b) ** a, ((end - 1.) / b) ** a
        arrivals = lower + np.cumsum(rng.exponential(1., size=int(2 * (upper - lower) + 50)))
        times = b * arrivals[arrivals <= upper] ** (1. / a)
        values[np.ceil(times).astype(int) - 1] = 1.

    return TimeSeries(values, tuple(range(1, n + 1)))
