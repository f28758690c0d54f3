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

Module with the penalised objective functions f = P(tau, n) - 2 ln L, and their decomposition into the
segment-additive form that PELT needs.

------------------------------------------------------------------------------------------------------------------------
"""
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np
import pandas as pd

from .core import LogLikSummary, ModelFit
from .models import ModelSpec, as_model_spec, log_likelihood


__all__ = ['PENALTY_IDS', 'ADDITIVE_PENALTIES', 'as_penalty_id', 'penalty_part', 'structural_penalty',
           'penalty_value', 'AIC', 'BIC', 'SIC', 'HQC', 'MBIC', 'MDL', 'BMDL', 'PeltDecomposition',
           'pelt_decomposition', 'model_glance', ]


PENALTY_IDS = ('AIC', 'BIC', 'SIC', 'HQC', 'MBIC', 'MDL', 'BMDL', )
ADDITIVE_PENALTIES = ('AIC', 'BIC', 'SIC', 'HQC', 'MBIC', )


def as_penalty_id(penalty: str) -> str:
    """
    Normalise a penalty identifier to upper case and check it exists.

    Raises
    ------
    ValueError :
        For an unknown identifier.
    """
    penalty_id = str(penalty).upper()
    if penalty_id not in PENALTY_IDS:
        raise ValueError(f'Unknown penalty "{penalty}". Choose from: {", ".join(PENALTY_IDS)}.')
    return penalty_id


def _check_hqc(n: int) -> None:
    if n < 3:
        raise ValueError(f'HQC needs ln ln n to be defined and positive, which requires n >= 3 (got n={n}).')


def penalty_part(penalty: str, tau: Sequence[int], n: int, a: int, b: int) -> float:
    """
    Structural part P(tau, n) of a penalised objective, from raw counts.

    Parameters
    ----------
    penalty : str
        Penalty identifier.
    tau : sequence of int
        Sorted 1-based changepoints.
    n : int
        Series length.
    a : int
        Number of parameters per region.
    b : int
        Number of global model parameters.

    Returns
    -------
    The value of P. It is 0 for every penalty when tau is empty.
    """
    penalty = as_penalty_id(penalty)
    if penalty == 'HQC':
        _check_hqc(n)

    m = len(tau)
    if m == 0:
        return 0.

    df = a * (m + 1) + b + m
    if penalty == 'AIC':
        return 2. * df
    elif penalty in ('BIC', 'SIC'):
        return df * np.log(n)
    elif penalty == 'HQC':
        return 2. * m * np.log(np.log(n))

    lengths = np.diff(np.concatenate(([1], np.asarray(tau, dtype=float), [n + 1])))
    if penalty == 'MBIC':
        return 3. * m * np.log(n) + float(np.sum(np.log(lengths / n)))

    # MDL, also the structural part of BMDL
    return (a / 2. * float(np.sum(np.log(lengths))) + 2. * np.log(m) +
            float(np.sum(np.log(np.asarray(tau[1:], dtype=float)))) + (2. + b) * np.log(n))


def _as_summary(ll: Union[LogLikSummary, ModelFit]) -> LogLikSummary:
    return log_likelihood(ll) if isinstance(ll, ModelFit) else ll


def structural_penalty(penalty: str, ll: Union[LogLikSummary, ModelFit]) -> float:
    """
    Structural part P(tau, n) of a penalised objective for a log-likelihood summary (or a model fit).
    """
    ll = _as_summary(ll)
    return penalty_part(penalty, ll.tau.tau, ll.nobs, ll.num_params_per_region, ll.num_model_params)


def penalty_value(penalty: str, ll: Union[LogLikSummary, ModelFit]) -> float:
    """
    Evaluate a penalised objective function.

    Parameters
    ----------
    penalty : str
        One of PENALTY_IDS. SIC is an alias of BIC.
    ll : LogLikSummary or ModelFit
        The log-likelihood summary, or a fit to take it from.

    Returns
    -------
    P(tau, n) - 2 ln L. For BMDL the log-prior of the fitted parameters is added as -2 ln g.

    Raises
    ------
    ValueError :
        For an unknown penalty, HQC with n < 3, or BMDL without a log-prior (only NHPP fits carry one).
    """
    penalty = as_penalty_id(penalty)
    ll = _as_summary(ll)

    value = structural_penalty(penalty, ll) - 2. * ll.value
    if penalty == 'BMDL':
        if ll.log_prior is None:
            raise ValueError('BMDL requires NHPP: the fit carries no log-prior.')
        value -= 2. * ll.log_prior
    return float(value)


def AIC(ll: Union[LogLikSummary, ModelFit]) -> float:
    """ Akaike information criterion, 2 df - 2 ln L. """
    return penalty_value('AIC', ll)


def BIC(ll: Union[LogLikSummary, ModelFit]) -> float:
    """ Bayesian information criterion, df ln n - 2 ln L. """
    return penalty_value('BIC', ll)


def SIC(ll: Union[LogLikSummary, ModelFit]) -> float:
    """ Schwarz information criterion, an alias of BIC. """
    return BIC(ll)


def HQC(ll: Union[LogLikSummary, ModelFit]) -> float:
    """ Hannan-Quinn criterion with the changepoint count, 2 m ln ln n - 2 ln L. """
    return penalty_value('HQC', ll)


def MBIC(ll: Union[LogLikSummary, ModelFit]) -> float:
    """ Modified BIC, 3 m ln n + sum of ln(l_j / n) over the regions - 2 ln L. """
    return penalty_value('MBIC', ll)


def MDL(ll: Union[LogLikSummary, ModelFit]) -> float:
    """ Minimum descriptive length. """
    return penalty_value('MDL', ll)


def BMDL(ll: Union[LogLikSummary, ModelFit]) -> float:
    """ Bayesian minimum descriptive length: MDL with the log-prior of the NHPP parameters. """
    return penalty_value('BMDL', ll)


# ======================================================================================================================
# SEGMENT-ADDITIVE FORM
# ======================================================================================================================
class PeltDecomposition(NamedTuple):
    """
    A penalty written as beta per changepoint, a constant that applies once there is at least one changepoint, and
    a term added for every region as a function of its length.

    Parameters
    ----------
    beta : float
        Cost of each changepoint.
    constant : float
        Cost paid once when m >= 1.
    segment_term : callable
        Maps an array of region lengths to an array of per-region terms.
    """
    beta: float
    constant: float
    segment_term: Callable[[np.ndarray], np.ndarray]

    def total(self, lengths: Sequence[int]) -> float:
        """
        The penalty of a partition with the given region lengths.
        """
        lengths = np.asarray(lengths, dtype=float)
        m = lengths.size - 1
        if m == 0:
            return 0.
        return float(self.beta * m + self.constant + np.sum(self.segment_term(lengths)))


def _no_segment_term(lengths: np.ndarray) -> np.ndarray:
    return np.zeros(np.shape(lengths))


def pelt_decomposition(penalty: str, model: Union[str, ModelSpec], n: int) -> PeltDecomposition:
    """
    Decompose a penalty into the segment-additive form used by PELT.

    Parameters
    ----------
    penalty : str
        One of ADDITIVE_PENALTIES.
    model : str or ModelSpec
        The model, which sets the parameter counts a and b.
    n : int
        Series length.

    Returns
    -------
    The PeltDecomposition. Its total() equals penalty_part() for every changepoint set of the model.

    Raises
    ------
    ValueError :
        If the penalty is not segment-additive (MDL, BMDL), or HQC with n < 3.
    """
    penalty = as_penalty_id(penalty)
    spec = as_model_spec(model)
    a, b = spec.num_params_per_region, spec.num_model_params

    if penalty == 'AIC':
        return PeltDecomposition(2. * (a + 1), 2. * (a + b), _no_segment_term)
    elif penalty in ('BIC', 'SIC'):
        return PeltDecomposition((a + 1) * np.log(n), (a + b) * np.log(n), _no_segment_term)
    elif penalty == 'HQC':
        _check_hqc(n)
        return PeltDecomposition(2. * np.log(np.log(n)), 0., _no_segment_term)
    elif penalty == 'MBIC':
        return PeltDecomposition(3. * np.log(n), 0., lambda lengths: np.log(np.asarray(lengths, dtype=float) / n))

    raise ValueError(f'Penalty {penalty} is not segment-additive: its value depends on the changepoint positions.')


def model_glance(fit: ModelFit) -> pd.DataFrame:
    """
    One-row summary of a model fit: number of changepoints, root mean square residual, log-likelihood, and the
    values of the common penalised objectives (and BMDL for NHPP fits).
    """
    ll = log_likelihood(fit)
    row = {'num_cpts': fit.num_cpts, 'rmse': float(np.sqrt(np.mean(fit.residuals ** 2))), 'logLik': ll.value,
           'AIC': AIC(ll), 'BIC': BIC(ll), 'MBIC': MBIC(ll), 'MDL': MDL(ll)}
    if ll.log_prior is not None:
        row['BMDL'] = BMDL(ll)
    return pd.DataFrame([row])
