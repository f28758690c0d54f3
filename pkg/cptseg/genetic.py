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

Module with the genetic algorithm over changepoint sets. A chromosome is a bit string of length n in which bit t
marks t as a changepoint. The fitness of a chromosome is minus the penalised objective of its changepoint set.

------------------------------------------------------------------------------------------------------------------------
"""
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union
import logging
import math
import warnings

import numpy as np

from .core import ChangepointSet
from .progress_tracker import construct_progress_tracker
from .search import Objective, binseg_changepoints, pelt_changepoints, wbs_candidates, wbs_changepoints
from .threaded_tools import threaded_map


__all__ = ['SEEDINGS', 'GaConfig', 'Chromosome', 'repair', 'SeededPopulation', 'seed_population', 'GaOutcome',
           'run_ga', ]

_log = logging.getLogger(__name__)

SEEDINGS = ('uniform_half', 'build_informed', 'log_informed', )


@dataclass(frozen=True)
class GaConfig:
    """
    Settings of the genetic algorithm.

    Parameters
    ----------
    pop_size : int, optional
        Number of chromosomes per generation. Defaults to 50.
    maxiter : int, optional
        Largest number of generations. Defaults to 100.
    run : int, optional
        Stop after this many generations without improvement of the best fitness. Defaults to maxiter.
    crossover_prob : float, optional
        Probability that a pair of parents is crossed over. Defaults to 0.8.
    mutation_prob : float, optional
        Probability of a mutation per chromosome; every bit flips with mutation_prob / n. Defaults to 0.1.
    elitism : int, optional
        Number of best chromosomes copied to the next generation. Defaults to ceil(0.05 pop_size).
    seeding : str, optional
        Initial population strategy, one of SEEDINGS. Defaults to 'uniform_half'.
    polish : bool, optional
        From the second generation on, move the best chromosome to a local optimum by removing single changepoints
        or moving them by one position. Defaults to True.
    rng_seed : int, optional
        Seed of the random generator. Defaults to 0.
    n_jobs : int, optional
        Number of threads evaluating the fitness. Does not change the result. Defaults to 1.
    progress : bool, optional
        Show a progress bar. Defaults to False.

    Raises
    ------
    ValueError :
        For settings outside their ranges, or run > maxiter.
    """
    pop_size: int = 50
    maxiter: int = 100
    run: Optional[int] = None
    crossover_prob: float = .8
    mutation_prob: float = .1
    elitism: Optional[int] = None
    seeding: str = 'uniform_half'
    polish: bool = True
    rng_seed: int = 0
    n_jobs: int = 1
    progress: bool = False

    def __post_init__(self) -> None:
        if self.run is None:
            object.__setattr__(self, 'run', self.maxiter)
        if self.elitism is None:
            object.__setattr__(self, 'elitism', math.ceil(.05 * self.pop_size))

        if self.pop_size < 2:
            raise ValueError(f'Population size must be at least 2, got {self.pop_size}.')
        if self.maxiter < 1:
            raise ValueError(f'maxiter must be at least 1, got {self.maxiter}.')
        if not 1 <= self.run <= self.maxiter:
            raise ValueError(f'run must lie in [1, maxiter={self.maxiter}], got {self.run}.')
        for key in ('crossover_prob', 'mutation_prob'):
            if not 0. <= getattr(self, key) <= 1.:
                raise ValueError(f'{key} must lie in [0, 1], got {getattr(self, key)}.')
        if not 0 <= self.elitism < self.pop_size:
            raise ValueError(f'elitism must lie in [0, pop_size), got {self.elitism}.')
        if self.seeding not in SEEDINGS:
            raise ValueError(f'Unknown seeding "{self.seeding}". Choose from: {", ".join(SEEDINGS)}.')
        if self.n_jobs < 1:
            raise ValueError(f'n_jobs must be at least 1, got {self.n_jobs}.')


@dataclass(frozen=True, eq=False)
class Chromosome:
    """
    Bit string encoding of a changepoint set. Bit t (1-based) is set when t is a changepoint; bit 1 is always clear.
    """
    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.array(self.bits, dtype=bool)
        if bits.ndim != 1 or bits.size < 1:
            raise ValueError('A chromosome is a non-empty one-dimensional bit string.')
        if bits[0]:
            raise ValueError('Bit 1 of a chromosome must be clear: the first observation cannot be a changepoint.')
        bits.setflags(write=False)
        object.__setattr__(self, 'bits', bits)

    @classmethod
    def from_tau(cls, tau: Sequence[int], n: int) -> 'Chromosome':
        bits = np.zeros(n, dtype=bool)
        bits[np.asarray(tau, dtype=int) - 1] = True
        return cls(bits)

    @property
    def n(self) -> int:
        return self.bits.size

    @property
    def tau(self) -> tuple[int, ...]:
        return tuple(int(t) for t in np.flatnonzero(self.bits) + 1)

    def changepoint_set(self) -> ChangepointSet:
        return ChangepointSet(self.tau, self.n)


def repair(bits: np.ndarray, min_len: int = 1) -> np.ndarray:
    """
    Clear the bits that would make a region shorter than min_len: bit 1, any bit too close to the previous kept
    bit, and any bit too close to the end of the series.
    """
    bits = np.array(bits, dtype=bool)
    n = bits.size
    bits[0] = False
    if min_len <= 1:
        return bits

    previous = 1
    for t in np.flatnonzero(bits) + 1:
        if t - previous < min_len or n + 1 - t < min_len:
            bits[t - 1] = False
        else:
            previous = t
    return bits


# ======================================================================================================================
# INITIAL POPULATION
# ======================================================================================================================
class SeededPopulation(NamedTuple):
    """
    First generation of the genetic algorithm, with the per-bit inclusion probability it was drawn with.
    """
    bits: np.ndarray
    probability: float
    fallback: bool = False
    informed_counts: tuple[int, ...] = ()


def _informed_counts(values: np.ndarray) -> tuple[int, ...]:
    """
    Changepoint counts of quick PELT, binary segmentation and WBS runs.
    """
    meanvar = Objective(values, 'meanvar', 'MBIC')
    meanshift = Objective(values, 'meanshift_norm', 'MBIC')
    return (len(pelt_changepoints(meanvar)), len(binseg_changepoints(meanvar)),
            len(wbs_changepoints(meanshift, wbs_candidates(values))))


def seed_population(strategy: str, values: Sequence[float], pop_size: int,
                    rng: Union[int, np.random.Generator] = 0, min_len: int = 1) -> SeededPopulation:
    """
    Draw the first generation.

    Parameters
    ----------
    strategy : str
        'uniform_half' sets every bit with probability 0.5. 'log_informed' uses ln n / n. 'build_informed' uses
        three times the mean changepoint count of quick PELT, binary segmentation and WBS runs over n, capped at 0.5,
        and falls back to 'log_informed' with a warning when one of those runs fails.
    values : array_like
        The observations.
    pop_size : int
        Number of chromosomes.
    rng : int or numpy.random.Generator, optional
        Seed or generator for the draws. Defaults to 0.
    min_len : int, optional
        Minimum region length used to repair the drawn chromosomes. Defaults to 1.

    Returns
    -------
    The SeededPopulation, with a pop_size x n boolean array of repaired chromosomes.
    """
    if strategy not in SEEDINGS:
        raise ValueError(f'Unknown seeding "{strategy}". Choose from: {", ".join(SEEDINGS)}.')
    if pop_size < 2:
        raise ValueError(f'Population size must be at least 2, got {pop_size}.')

    values = np.asarray(values, dtype=float)
    n = values.size
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng

    fallback = False
    counts = ()
    if strategy == 'uniform_half':
        probability = .5
    elif strategy == 'build_informed':
        try:
            counts = _informed_counts(values)
            probability = min(.5, 3. * float(np.mean(counts)) / n)
            if probability <= 0.:
                probability = 1. / n
        except (ValueError, RuntimeError) as error:
            warnings.warn(f'Informed seeding failed ({error}), falling back to log_informed.')
            fallback = True
            probability = np.log(n) / n
    else:
        probability = np.log(n) / n

    draws = rng.random((pop_size, n)) < probability
    bits = np.array([repair(row, min_len) for row in draws]).reshape(pop_size, n)
    _log.debug(f'Seeded {pop_size} chromosomes with {strategy} at p={probability:.6f}')
    return SeededPopulation(bits, float(probability), fallback, counts)


# ======================================================================================================================
# EVOLUTION
# ======================================================================================================================
class GaOutcome(NamedTuple):
    """
    Result of a genetic algorithm run.

    Parameters
    ----------
    tau : tuple of int
        The best changepoint set found.
    fitness : float
        Its fitness (minus the objective).
    generations : int
        Number of generations run, the first one included.
    trace : list of dict
        Per generation: generation, best_fitness (best so far) and mean_fitness (mean of the finite fitness values).
    seeded : SeededPopulation
        The first generation.
    evaluations : int
        Number of distinct changepoint sets evaluated.
    """
    tau: tuple[int, ...]
    fitness: float
    generations: int
    trace: list[dict]
    seeded: SeededPopulation
    evaluations: int


def _rank_probabilities(fitness: np.ndarray) -> np.ndarray:
    """
    Linear rank selection: the worst chromosome has rank 1, the best rank pop_size.
    """
    ranks = np.empty(fitness.size)
    ranks[np.argsort(fitness, kind='stable')] = np.arange(1, fitness.size + 1)
    return ranks / ranks.sum()


def _best_index(population: np.ndarray, fitness: np.ndarray) -> int:
    """
    Index of the fittest chromosome. Ties go to fewer changepoints, then the lexicographically smaller set.
    """
    return min(range(fitness.size),
               key=lambda ii: (-fitness[ii], int(population[ii].sum()), tuple(np.flatnonzero(population[ii]))))


def _neighbours(bits: np.ndarray, min_len: int) -> np.ndarray:
    """
    The feasible chromosomes one changepoint away: every changepoint removed, or moved one position left or right.
    """
    n = bits.size
    neighbours = []
    for i in np.flatnonzero(bits):
        removed = bits.copy()
        removed[i] = False
        neighbours.append(removed)
        for j in (i - 1, i + 1):
            if 1 <= j < n and not bits[j]:
                moved = removed.copy()
                moved[j] = True
                if np.array_equal(repair(moved, min_len), moved):
                    neighbours.append(moved)
    return np.array(neighbours, dtype=bool).reshape(len(neighbours), n)


def run_ga(objective: Objective, config: GaConfig = GaConfig(), min_len: Optional[int] = None) -> GaOutcome:
    """
    Maximise minus the penalised objective with a genetic algorithm.

    Every generation: linear rank selection of parent pairs, single-point crossover, per-bit mutation, repair of
    the children, and the elite chromosomes copied over unchanged. With polish set, the best chromosome of every new
    generation then climbs to a local optimum over single changepoint removals and moves. All random numbers are
    drawn in this loop, so the threaded fitness evaluation does not change the result.

    Parameters
    ----------
    objective : Objective
        The penalised objective.
    config : GaConfig, optional
        The settings.
    min_len : int, optional
        Minimum region length. Defaults to the model's minimum.

    Returns
    -------
    The GaOutcome.
    """
    min_len = objective.spec.min_seg_len if min_len is None else int(min_len)
    n = objective.n
    rng = np.random.default_rng(config.rng_seed)
    seeded = seed_population(config.seeding, objective.values, config.pop_size, rng, min_len)

    fitness_cache = {}

    def evaluate(population: np.ndarray) -> np.ndarray:
        keys = [tuple(int(t) for t in np.flatnonzero(row) + 1) for row in population]
        new = list(dict.fromkeys(key for key in keys if key not in fitness_cache))
        for key, value in zip(new, threaded_map(objective.safe, new, config.n_jobs)):
            fitness_cache[key] = -value
        return np.array([fitness_cache[key] for key in keys])

    def polish(bits: np.ndarray, value: float) -> tuple[np.ndarray, float]:
        while True:
            neighbours = _neighbours(bits, min_len)
            if not neighbours.shape[0]:
                return bits, value
            scores = evaluate(neighbours)
            i_next = _best_index(neighbours, scores)
            if not scores[i_next] > value:
                return bits, value
            bits, value = neighbours[i_next], float(scores[i_next])

    def record(generation: int, fitness: np.ndarray) -> None:
        finite = fitness[np.isfinite(fitness)]
        trace.append({'generation': generation, 'best_fitness': best_fitness,
                      'mean_fitness': float(finite.mean()) if finite.size else -np.inf})

    population = seeded.bits
    fitness = evaluate(population)
    i_best = _best_index(population, fitness)
    best_bits, best_fitness = population[i_best].copy(), float(fitness[i_best])

    trace = []
    record(1, fitness)
    tracker = construct_progress_tracker(1, config.maxiter, description='GA', enabled=config.progress)

    generation, stall = 1, 0
    n_children = config.pop_size - config.elitism
    n_pairs = -(-n_children // 2)
    while generation < config.maxiter and stall < config.run:
        generation += 1

        # Draw every random number of the generation up front
        parents = rng.choice(config.pop_size, size=(n_pairs, 2), p=_rank_probabilities(fitness))
        crossover = rng.random(n_pairs) < config.crossover_prob
        cuts = rng.integers(1, max(n, 2), size=n_pairs)
        flips = rng.random((2 * n_pairs, n)) < config.mutation_prob / n

        # Create the children by single-point crossover of the parent pairs
        children = np.empty((2 * n_pairs, n), dtype=bool)
        for ip, ((first, second), cross, cut) in enumerate(zip(parents, crossover, cuts)):
            a, b = population[first], population[second]
            if cross:
                children[2 * ip] = np.concatenate((a[:cut], b[cut:]))
                children[2 * ip + 1] = np.concatenate((b[:cut], a[cut:]))
            else:
                children[2 * ip], children[2 * ip + 1] = a, b

        children = np.array([repair(row, min_len) for row in children ^ flips])[:n_children].reshape(n_children, n)

        elites = np.argsort(-fitness, kind='stable')[:config.elitism]
        population = np.vstack((population[elites], children))
        fitness = evaluate(population)

        i_best = _best_index(population, fitness)
        if config.polish:
            population[i_best], fitness[i_best] = polish(population[i_best].copy(), float(fitness[i_best]))
        if fitness[i_best] > best_fitness:
            best_bits, best_fitness = population[i_best].copy(), float(fitness[i_best])
            stall = 0
        else:
            stall += 1

        record(generation, fitness)
        tracker.update(1)
        _log.debug(f'Generation {generation}: best={best_fitness:.4f}, mean={trace[-1]["mean_fitness"]:.4f}')

    tracker.close()
    tau = tuple(int(t) for t in np.flatnonzero(best_bits) + 1)
    return GaOutcome(tau, best_fitness, generation, trace, seeded, len(fitness_cache))
