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

Module with the raw changepoint searches. These work on arrays and return sorted tuples of 1-based changepoint
indices. The public segmenters in algorithms.py wrap them into SegmentationResults.

------------------------------------------------------------------------------------------------------------------------
"""
from itertools import combinations
from typing import Callable, NamedTuple, Optional, Sequence, Union
import logging

import numpy as np

from .models import ModelSpec, as_model_spec, loglik_parts
from .penalties import as_penalty_id, pelt_decomposition, penalty_part


__all__ = ['EXACT_LIMIT', 'PELT_MODELS', 'Objective', 'feasible', 'exact_changepoints', 'pelt_changepoints',
           'binseg_changepoints', 'WbsCandidate', 'wbs_candidates', 'wbs_changepoints', ]

_log = logging.getLogger(__name__)

# Largest series the exhaustive search accepts
EXACT_LIMIT = 20
PELT_MODELS = ('meanshift_norm', 'meanvar', )

_LOG_2PI = np.log(2 * np.pi)
# Largest increase of the sample-variance normal cost when a region is split in two: 2 (2 ln 2 - 1)
_MEANVAR_SLACK = 2. * (2. * np.log(2.) - 1.)


# ======================================================================================================================
# PENALISED OBJECTIVE
# ======================================================================================================================
class Objective:
    """
    The penalised objective f(tau) = P(tau, n) - 2 ln L of changepoint sets, for a fixed series, model and penalty.
    Values are cached per changepoint set, and NHPP region fits are cached per region.

    Parameters
    ----------
    values : array_like
        The observations.
    model : str or ModelSpec
        The model.
    penalty : str
        The penalty identifier.
    model_args : dict, optional
        threshold and hyper for the NHPP model.

    Raises
    ------
    ValueError :
        For BMDL with a model other than nhpp, or an unknown penalty.
    """
    def __init__(self, values: Sequence[float], model: Union[str, ModelSpec], penalty: str,
                 model_args: Optional[dict] = None) -> None:
        self.values = np.asarray(values, dtype=float)
        self.n = self.values.size
        self.spec = as_model_spec(model)
        self.penalty = as_penalty_id(penalty)
        self.model_args = dict(model_args or {})

        if self.penalty == 'BMDL' and self.spec.family != 'nhpp':
            raise ValueError(f'BMDL requires NHPP: cannot use it with the {self.spec.name} model.')
        # Raises for HQC on too short a series
        penalty_part(self.penalty, (), self.n, 0, 0)

        self._values = {}
        self._regions = {}

    def __call__(self, tau: Sequence[int]) -> float:
        """
        Objective of a changepoint set. Fit errors propagate.
        """
        key = tuple(int(t) for t in tau)
        if key in self._values:
            return self._values[key]

        parts = loglik_parts(self.values, key, self.spec, cache=self._regions, **self.model_args)
        value = penalty_part(self.penalty, key, self.n, self.spec.num_params_per_region,
                             self.spec.num_model_params) - 2. * parts.loglik
        if self.penalty == 'BMDL':
            value -= 2. * parts.log_prior

        self._values[key] = float(value)
        return float(value)

    def safe(self, tau: Sequence[int]) -> float:
        """
        Objective of a changepoint set, with infinity for sets the model cannot be fitted on.
        """
        try:
            value = self(tau)
        except (ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError):
            return np.inf
        return value if np.isfinite(value) else np.inf

    @property
    def evaluations(self) -> int:
        return len(self._values)


def feasible(tau: Sequence[int], n: int, min_len: int) -> bool:
    """
    Whether every region of a changepoint set is at least min_len long.
    """
    return bool(np.all(np.diff(np.concatenate(([1], np.asarray(tau, dtype=int), [n + 1]))) >= min_len))


def _pick(candidates: list[tuple[float, tuple[int, ...]]]) -> tuple[tuple[int, ...], float]:
    """
    The changepoint set with the lowest objective. Ties go to fewer changepoints, then the lexicographically
    smaller set.
    """
    value, tau = min(candidates, key=lambda item: (item[0], len(item[1]), item[1]))
    return tau, value


# ======================================================================================================================
# EXHAUSTIVE SEARCH
# ======================================================================================================================
def exact_changepoints(objective: Objective, max_m: Optional[int] = None,
                       min_len: int = 1) -> tuple[tuple[int, ...], float]:
    """
    Enumerate every changepoint set with at most max_m changepoints.

    Parameters
    ----------
    objective : Objective
        The penalised objective.
    max_m : int, optional
        Largest number of changepoints. Defaults to n - 1.
    min_len : int, optional
        Minimum region length. Defaults to 1.

    Returns
    -------
    Tuple of the optimal changepoint set and its objective value.

    Raises
    ------
    ValueError :
        If the series is longer than EXACT_LIMIT, or max_m is out of range.
    """
    n = objective.n
    if n > EXACT_LIMIT:
        raise ValueError(f'exact search too large: n={n} exceeds the limit of {EXACT_LIMIT} observations.')
    max_m = n - 1 if max_m is None else int(max_m)
    if not 0 <= max_m <= max(n - 1, 0):
        raise ValueError(f'max_m must lie in [0, {n - 1}], got {max_m}.')

    best_tau, best_value = (), objective.safe(())
    for m in range(1, max_m + 1):
        for tau in combinations(range(2, n + 1), m):
            if not feasible(tau, n, min_len):
                continue
            # Strict improvement only: fewer changepoints and lexicographic order win ties
            value = objective.safe(tau)
            if value < best_value:
                best_tau, best_value = tau, value

    return best_tau, best_value


# ======================================================================================================================
# PELT
# ======================================================================================================================
def _prefix_sums(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """
    Prefix sums of the centred values and of their squares, and the scale used for degeneracy checks.
    """
    centred = values - values.mean()
    s1 = np.concatenate(([0.], np.cumsum(centred)))
    s2 = np.concatenate(([0.], np.cumsum(centred ** 2)))
    return s1, s2, max(1., float(np.max(np.abs(centred)))) if values.size else 1.


def _region_rss(s1: np.ndarray, s2: np.ndarray, starts: np.ndarray, end: int) -> np.ndarray:
    lengths = end - starts
    return np.maximum((s2[end] - s2[starts]) - (s1[end] - s1[starts]) ** 2 / lengths, 0.)


def _optimal_partition(segment_cost: Callable[[np.ndarray, int], np.ndarray], n: int, beta: float, min_len: int,
                       slack: float = 0.) -> Optional[tuple[int, ...]]:
    """
    Pruned dynamic program minimising the sum of region costs plus beta per changepoint.

    Parameters
    ----------
    segment_cost : callable
        segment_cost(starts, end) returns the costs of the zero-based regions [s, end) for every s in starts.
        Infinite costs mark regions the model cannot be fitted on.
    n : int
        Series length.
    beta : float
        Cost per changepoint.
    min_len : int
        Minimum region length.
    slack : float, optional
        Largest increase of the summed cost when a region is split in two. Defaults to 0.

    Returns
    -------
    The optimal changepoint set, or None when no partition has a finite cost.
    """
    best = np.full(n + 1, np.inf)
    best[0] = -beta
    last = np.zeros(n + 1, dtype=int)

    # A pruned candidate stays usable for min_len - 1 more steps: the position that dominates it can only
    # start a region after that
    candidates = np.array([0])
    expiry = np.array([np.inf])

    for t in range(min_len, n + 1):
        alive = expiry >= t
        candidates, expiry = candidates[alive], expiry[alive]

        ready = np.flatnonzero(t - candidates >= min_len)
        starts = candidates[ready]
        if starts.size:
            costs = segment_cost(starts, t)
            totals = best[starts] + costs + beta
            i_best = int(np.argmin(totals))

            if np.isfinite(totals[i_best]):
                best[t] = totals[i_best]
                last[t] = starts[i_best]

                tolerance = 1e-9 * max(1., abs(best[t]))
                prune = (np.isfinite(costs) & np.isinf(expiry[ready]) &
                         (best[starts] + costs - slack >= best[t] + tolerance))
                expiry[ready[prune]] = t + min_len - 1

        if np.isfinite(best[t]):
            candidates = np.append(candidates, t)
            expiry = np.append(expiry, np.inf)

    if not np.isfinite(best[n]):
        return None

    tau = []
    t = n
    while t > 0:
        t = int(last[t])
        if t > 0:
            tau.append(t + 1)
    return tuple(sorted(tau))


def _meanvar_changepoints(objective: Objective, min_len: int) -> tuple[int, ...]:
    """
    PELT with the exact region costs of the meanvar model.
    """
    values, n = objective.values, objective.n
    decomposition = pelt_decomposition(objective.penalty, objective.spec, n)
    s1, s2, scale = _prefix_sums(values)

    def cost(starts: np.ndarray, end: int) -> np.ndarray:
        lengths = (end - starts).astype(float)
        rss = _region_rss(s1, s2, starts, end)
        with np.errstate(divide='ignore', invalid='ignore'):
            variance = rss / (lengths - 1.)
            region = lengths * (_LOG_2PI + np.log(variance)) + lengths - 1.
        degenerate = (lengths < 2) | (rss <= 1e2 * np.finfo(float).eps * lengths * scale ** 2)
        return np.where(degenerate, np.inf, region + decomposition.segment_term(lengths))

    tau = _optimal_partition(cost, n, decomposition.beta, max(min_len, 2), slack=_MEANVAR_SLACK)
    if tau is None:
        return ()
    # The decomposition leaves out the constant paid once for m >= 1
    return _pick([(objective.safe(()), ()), (objective.safe(tau), tau)])[0]


def _nonconstant_partition(segment_cost: Callable[[np.ndarray, int], np.ndarray], n: int,
                           beta: float) -> Optional[tuple[int, ...]]:
    """
    Dynamic program over the partitions into regions of any length that keep at least one region of two or more
    observations. The partition into single observations is left out: its residual sum of squares is zero.

    Parameters
    ----------
    segment_cost : callable
        segment_cost(starts, end) returns the costs of the zero-based regions [s, end) for every s in starts.
    n : int
        Series length.
    beta : float
        Cost per changepoint.

    Returns
    -------
    The optimal changepoint set, or None for a series shorter than 2.
    """
    if n < 2:
        return None

    # Prefixes cut into single observations only
    singles = np.array([float(segment_cost(np.array([t - 1]), t)[0]) for t in range(1, n + 1)])
    only_singles = np.concatenate(([-beta], np.cumsum(singles + beta) - beta))

    best = np.full(n + 1, np.inf)
    last = np.zeros(n + 1, dtype=int)
    from_singles = np.zeros(n + 1, dtype=bool)
    for t in range(2, n + 1):
        starts = np.arange(t)
        costs = segment_cost(starts, t) + beta
        mixed = best[:t] + costs
        # A region closing a prefix of single observations must hold at least two
        plain = only_singles[:t] + costs
        plain[t - 1] = np.inf

        i_mixed, i_plain = int(np.argmin(mixed)), int(np.argmin(plain))
        if plain[i_plain] <= mixed[i_mixed]:
            best[t], last[t], from_singles[t] = plain[i_plain], i_plain, True
        else:
            best[t], last[t] = mixed[i_mixed], i_mixed

    tau = []
    t = n
    while t > 0:
        start, singles_before = int(last[t]), bool(from_singles[t])
        if start > 0:
            tau.append(start + 1)
        if singles_before:
            tau.extend(range(2, start + 1))
            break
        t = start
    return tuple(sorted(tau))


class _PathPoint(NamedTuple):
    penalty: float
    rss: float
    tau: tuple[int, ...]


def _meanshift_changepoints(objective: Objective, min_len: int) -> tuple[int, ...]:
    """
    Exact search for the pooled-variance normal meanshift model.

    The objective n ln(RSS) + P is concave and increasing in (P, RSS), so its minimum over all changepoint sets with a
    nonzero RSS lies at a vertex of the lower convex hull of their (P, RSS) points. The vertices are the minimisers of
    RSS + lambda P, each found with the additive dynamic program, and are enumerated by bisecting the hull between the
    smallest RSS and the empty set. Hull edges whose best possible objective cannot beat the best vertex are skipped.
    """
    values, n = objective.values, objective.n
    decomposition = pelt_decomposition(objective.penalty, objective.spec, n)
    s1, s2, scale = _prefix_sums(values)
    a, b = objective.spec.num_params_per_region, objective.spec.num_model_params
    tolerance = 1e2 * np.finfo(float).eps * n * scale ** 2

    def point(tau: tuple[int, ...]) -> _PathPoint:
        bounds = np.concatenate(([0], np.asarray(tau, dtype=int) - 1, [n]))
        rss = sum(float(_region_rss(s1, s2, np.array([lo]), hi)[0]) for lo, hi in zip(bounds[:-1], bounds[1:]))
        return _PathPoint(penalty_part(objective.penalty, tau, n, a, b), rss, tau)

    def criterion(vertex: _PathPoint) -> float:
        with np.errstate(divide='ignore'):
            return n * float(np.log(vertex.rss)) + vertex.penalty

    null = point(())
    if null.rss <= tolerance:
        return ()

    def oracle(scale_factor: float) -> _PathPoint:
        """
        Minimiser of RSS + scale_factor * P over the changepoint sets with a nonzero RSS.
        """
        def cost(starts: np.ndarray, end: int) -> np.ndarray:
            return (_region_rss(s1, s2, starts, end) +
                    scale_factor * decomposition.segment_term((end - starts).astype(float)))

        if min_len == 1:
            tau = _nonconstant_partition(cost, n, scale_factor * decomposition.beta)
        else:
            tau = _optimal_partition(cost, n, scale_factor * decomposition.beta, min_len)
        if not tau:
            return null
        found = point(tau)
        return found if found.rss + scale_factor * found.penalty < null.rss else null

    lower = oracle(0.)
    vertices = {null.tau: null, lower.tau: lower}
    best = min(criterion(vertex) for vertex in vertices.values() if vertex.rss > tolerance)

    stack = [(lower, null)]
    while stack:
        left, right = stack.pop()
        if left.penalty <= right.penalty:
            continue
        # Every vertex between has at least the RSS of the left end and the penalty of the right end
        with np.errstate(divide='ignore'):
            bound = n * float(np.log(left.rss)) + right.penalty
        if bound >= best:
            continue

        scale_factor = (right.rss - left.rss) / (left.penalty - right.penalty)
        found = oracle(scale_factor)
        line = left.rss + scale_factor * left.penalty
        if found.rss + scale_factor * found.penalty < line - 1e-10 * max(1., abs(line)) and \
                found.tau not in vertices:
            vertices[found.tau] = found
            if found.rss > tolerance:
                best = min(best, criterion(found))
            stack.extend([(left, found), (found, right)])

    _log.debug(f'Penalty path search visited {len(vertices)} hull vertices.')
    return _pick([(objective.safe(tau), tau) for tau, vertex in vertices.items()
                  if tau == () or vertex.rss > tolerance])[0]


def pelt_changepoints(objective: Objective, min_len: Optional[int] = None) -> tuple[int, ...]:
    """
    Exact optimal partitioning with pruning, for the meanshift_norm and meanvar models under a segment-additive
    penalty.

    Parameters
    ----------
    objective : Objective
        The penalised objective.
    min_len : int, optional
        Minimum region length. Defaults to the model's minimum.

    Returns
    -------
    The optimal changepoint set.

    Raises
    ------
    ValueError :
        For another model, or a penalty that is not segment-additive.
    """
    min_len = objective.spec.min_seg_len if min_len is None else int(min_len)
    if objective.spec.name not in PELT_MODELS:
        raise ValueError(f'PELT supports the models {", ".join(PELT_MODELS)}, not {objective.spec.name}.')
    if min_len < 1:
        raise ValueError(f'Minimum segment length must be at least 1, got {min_len}.')

    if objective.spec.family == 'meanvar':
        return _meanvar_changepoints(objective, min_len)
    return _meanshift_changepoints(objective, min_len)


# ======================================================================================================================
# BINARY SEGMENTATION
# ======================================================================================================================
def binseg_changepoints(objective: Objective, max_cpts: int = 5, min_len: Optional[int] = None) -> tuple[int, ...]:
    """
    Greedy binary segmentation: repeatedly add the single changepoint that lowers the objective the most, until
    none lowers it or max_cpts changepoints are found.
    """
    if max_cpts < 0:
        raise ValueError(f'Maximum number of changepoints must be nonnegative, got {max_cpts}.')
    min_len = objective.spec.min_seg_len if min_len is None else int(min_len)
    n = objective.n

    tau, value = (), objective.safe(())
    while len(tau) < max_cpts:
        trials = [tuple(sorted(tau + (t, ))) for t in range(2, n + 1) if t not in tau]
        trials = [trial for trial in trials if feasible(trial, n, min_len)]
        if not trials:
            break

        best_tau, best_value = _pick([(objective.safe(trial), trial) for trial in trials])
        if not best_value < value:
            break
        tau, value = best_tau, best_value
        _log.debug(f'Binary segmentation step {len(tau)}: {tau} -> {value:.4f}')

    return tau


# ======================================================================================================================
# WILD BINARY SEGMENTATION
# ======================================================================================================================
class WbsCandidate(NamedTuple):
    """
    Changepoint candidate with its largest absolute CUSUM statistic over all drawn intervals.
    """
    tau: int
    statistic: float


def wbs_candidates(values: Sequence[float], num_intervals: int = 5000, rng_seed: int = 0) -> list[WbsCandidate]:
    """
    Rank changepoint candidates by their CUSUM statistics over random sub-intervals.

    Parameters
    ----------
    values : array_like
        The observations.
    num_intervals : int, optional
        Number of random intervals M, drawn on top of the full series. Defaults to 5000.
    rng_seed : int, optional
        Seed of the interval draws. Defaults to 0.

    Returns
    -------
    Candidates sorted by decreasing statistic (ties to the earlier index). Zero statistics are left out.
    """
    if num_intervals < 1:
        raise ValueError(f'Number of intervals must be at least 1, got {num_intervals}.')
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        return []

    centred = values - values.mean()
    s1 = np.concatenate(([0.], np.cumsum(centred)))
    rng = np.random.default_rng(rng_seed)
    draws = np.sort(rng.integers(0, n, size=(num_intervals, 2)), axis=1)
    intervals = np.unique(np.vstack(([[0, n - 1]], draws[draws[:, 1] > draws[:, 0]])), axis=0)

    statistics = np.zeros(n + 1)
    for start, end in intervals:
        # Split after zero-based position b: left [start, b], right [b + 1, end]
        split = np.arange(start, end)
        length = end - start + 1.
        n_left = split - start + 1.
        n_right = end - split
        sum_left = s1[split + 1] - s1[start]
        sum_right = s1[end + 1] - s1[split + 1]
        cusum = np.abs(np.sqrt(n_right / (length * n_left)) * sum_left -
                       np.sqrt(n_left / (length * n_right)) * sum_right)
        np.maximum.at(statistics, split + 2, cusum)

    tolerance = 1e-9 * max(1., float(np.max(np.abs(centred)))) * np.sqrt(n)
    order = np.lexsort((np.arange(n + 1), -statistics))
    return [WbsCandidate(int(t), float(statistics[t])) for t in order if statistics[t] > tolerance]


def wbs_changepoints(objective: Objective, candidates: Sequence[WbsCandidate],
                     min_len: Optional[int] = None) -> tuple[int, ...]:
    """
    Select the prefix of the ranked candidates that minimises the objective. Candidates that would make a region
    shorter than min_len are skipped.
    """
    min_len = objective.spec.min_seg_len if min_len is None else int(min_len)

    tau = ()
    prefixes = [(objective.safe(()), ())]
    for candidate in candidates:
        trial = tuple(sorted(tau + (candidate.tau, )))
        if not feasible(trial, objective.n, min_len):
            continue
        tau = trial
        prefixes.append((objective.safe(tau), tau))

    return _pick(prefixes)[0]
