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

Tests of the genetic algorithm building blocks.

------------------------------------------------------------------------------------------------------------------------
"""
from hypothesis import given, strategies as st
import numpy as np
import pytest

from cptseg import Chromosome, GaConfig, Objective, feasible, repair, run_ga, seed_population
from cptseg import genetic
from cptseg.progress_tracker import construct_progress_tracker
from tests.conftest import step_values


class TestGaConfig:
    def test_defaults(self) -> None:
        config = GaConfig(pop_size=50, maxiter=30)
        assert config.run == 30
        assert config.elitism == 3

    @pytest.mark.parametrize('settings', [{'pop_size': 1}, {'maxiter': 0}, {'maxiter': 10, 'run': 11},
                                          {'mutation_prob': 1.5}, {'elitism': 50}, {'seeding': 'greedy'},
                                          {'n_jobs': 0}])
    def test_rejects(self, settings: dict) -> None:
        with pytest.raises(ValueError):
            GaConfig(**settings)


class TestChromosome:
    def test_encoding(self) -> None:
        chromosome = Chromosome.from_tau((3, 7), 10)
        assert chromosome.bits.tolist() == [False, False, True, False, False, False, True, False, False, False]
        assert chromosome.tau == (3, 7)
        assert chromosome.changepoint_set().m == 2

    def test_first_bit_is_clear(self) -> None:
        with pytest.raises(ValueError, match='Bit 1'):
            Chromosome(np.array([True, False, False]))

    @given(st.lists(st.booleans(), min_size=1, max_size=60), st.integers(1, 6))
    def test_repair_makes_feasible(self, bits: list, min_len: int) -> None:
        min_len = min(min_len, len(bits))
        repaired = repair(np.array(bits), min_len)
        tau = tuple(int(t) for t in np.flatnonzero(repaired) + 1)
        assert not repaired[0]
        assert feasible(tau, len(bits), min_len)
        # Repair only clears bits
        assert not np.any(repaired & ~np.array(bits))


class TestSeeding:
    def test_probabilities(self, rng: np.random.Generator) -> None:
        values = rng.standard_normal(100)
        assert seed_population('uniform_half', values, 10).probability == .5
        assert seed_population('log_informed', values, 10).probability == pytest.approx(np.log(100) / 100)

    def test_build_informed_is_capped(self, rng: np.random.Generator) -> None:
        seeded = seed_population('build_informed', step_values(rng, (30, 30), (0., 6.)), 10)
        assert 0. < seeded.probability <= .5
        assert len(seeded.informed_counts) == 3
        assert not seeded.fallback

    def test_build_informed_fallback(self, rng: np.random.Generator, monkeypatch) -> None:
        def failing(values: np.ndarray) -> tuple:
            raise ValueError('degenerate variance')

        monkeypatch.setattr(genetic, '_informed_counts', failing)
        with pytest.warns(UserWarning, match='falling back to log_informed'):
            seeded = seed_population('build_informed', rng.standard_normal(50), 10)
        assert seeded.fallback
        assert seeded.probability == pytest.approx(np.log(50) / 50)

    def test_population_shape_and_repair(self, rng: np.random.Generator) -> None:
        seeded = seed_population('uniform_half', rng.standard_normal(40), 12, rng=3, min_len=3)
        assert seeded.bits.shape == (12, 40)
        for row in seeded.bits:
            assert feasible(tuple(np.flatnonzero(row) + 1), 40, 3)


class TestRunGa:
    def test_deterministic(self, step_series) -> None:
        config = GaConfig(pop_size=20, maxiter=15, seeding='log_informed', rng_seed=11)
        first = run_ga(Objective(step_series.values, 'meanshift_norm', 'BIC'), config)
        second = run_ga(Objective(step_series.values, 'meanshift_norm', 'BIC'), config)
        assert first.tau == second.tau
        assert first.trace == second.trace

    def test_threads_do_not_change_the_result(self, step_series) -> None:
        single = run_ga(Objective(step_series.values, 'meanshift_norm', 'BIC'),
                        GaConfig(pop_size=20, maxiter=10, rng_seed=4))
        threaded = run_ga(Objective(step_series.values, 'meanshift_norm', 'BIC'),
                          GaConfig(pop_size=20, maxiter=10, rng_seed=4, n_jobs=3))
        assert single.tau == threaded.tau
        assert single.trace == threaded.trace

    def test_trace_is_nondecreasing(self, step_series) -> None:
        outcome = run_ga(Objective(step_series.values, 'meanshift_norm', 'BIC'),
                         GaConfig(pop_size=20, maxiter=40, rng_seed=2))
        best = [row['best_fitness'] for row in outcome.trace]
        assert all(a <= b for a, b in zip(best[:-1], best[1:]))
        assert len(outcome.trace) == outcome.generations <= 40
        assert outcome.fitness == best[-1]

    def test_stops_after_run_without_improvement(self, step_series) -> None:
        outcome = run_ga(Objective(step_series.values, 'meanshift_norm', 'BIC'),
                         GaConfig(pop_size=10, maxiter=500, run=5, seeding='log_informed'))
        assert outcome.generations < 500

    def test_respects_minimum_length(self, step_series) -> None:
        outcome = run_ga(Objective(step_series.values, 'meanshift_norm', 'BIC'),
                         GaConfig(pop_size=20, maxiter=20, rng_seed=9), min_len=5)
        assert feasible(outcome.tau, 60, 5)

    def test_best_is_a_local_optimum(self, step_series) -> None:
        objective = Objective(step_series.values, 'meanshift_norm', 'BIC')
        outcome = run_ga(objective, GaConfig(pop_size=20, maxiter=10, rng_seed=6))
        bits = Chromosome.from_tau(outcome.tau, 60).bits.copy()
        for neighbour in genetic._neighbours(bits, 2):
            assert objective.safe(np.flatnonzero(neighbour) + 1) >= -outcome.fitness - 1e-9

    def test_without_polish(self, step_series) -> None:
        config = GaConfig(pop_size=20, maxiter=10, rng_seed=4, polish=False)
        outcome = run_ga(Objective(step_series.values, 'meanshift_norm', 'BIC'), config)
        best = [row['best_fitness'] for row in outcome.trace]
        assert all(a <= b for a, b in zip(best[:-1], best[1:]))


class TestProgressTracker:
    def test_counts_generations(self) -> None:
        tracker = construct_progress_tracker(1, 40, description='GA', enabled=False)
        assert (tracker.n, tracker.total) == (1, 40)
        tracker.update(3)
        assert tracker.n == 4
        tracker.close()
