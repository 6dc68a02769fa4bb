"""Weighted aggregation of estimates and of convex objectives.

Two routes produce a pooled estimate for a target individual: the
weighted average of the individual estimates, and the minimizer of the
weighted sum of per-individual convex objective contributions. The
weighted empirical quantile is the closed-form special case of the
second route under the tilted absolute (check) loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import (
    EmptyNeighborhoodError,
    InvalidInputError,
    ObjectiveEvaluationError,
)
from .weights import IndividualRecord, Population, WeightVector

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0

WEIGHT_SUM_FLOOR = 1e-12


class AggregationMethod(str, Enum):
    ESTIMATOR_AVG = "estimator_avg"
    OBJECTIVE_MIN = "objective_min"


@dataclass(frozen=True)
class ObjectiveSpec:
    """A per-individual loss contribution, declared convex in theta.

    ``term(theta, record)`` returns one individual's contribution;
    ``terms(theta, pop)``, when given, returns all contributions at once
    and is preferred in hot paths. ``domain`` brackets the minimizer;
    when None a data-driven bracket over the positively weighted
    estimates is used.
    """

    term: Callable[[float, IndividualRecord], float]
    domain: Optional[tuple] = None
    convex: bool = True
    terms: Optional[Callable[[float, Population], np.ndarray]] = None


@dataclass(frozen=True)
class AggregateEstimate:
    target_id: str
    value: float
    method: AggregationMethod
    weight_sum: float
    iterations: int = 0


def _weights_array(w, n=None):
    arr = w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    if n is not None and arr.size != n:
        raise InvalidInputError(f"weight length {arr.size} does not match {n} values")
    return arr


def aggregate_estimators(thetas, w, include_target: bool = True) -> AggregateEstimate:
    """Weighted average of individual estimates."""
    th = np.asarray(thetas, dtype=float)
    arr = _weights_array(w, th.size).copy()
    target_id = w.target_id if isinstance(w, WeightVector) else ""
    if not include_target and isinstance(w, WeightVector):
        arr[w.ids.index(w.target_id)] = 0.0
    total = float(arr.sum())
    if total <= WEIGHT_SUM_FLOOR:
        raise EmptyNeighborhoodError(f"weight sum {total:g} too small for target {target_id!r}")
    pos = arr > 0
    if pos.sum() == 1:
        value = float(th[pos][0])  # degenerate weight: no averaging needed
    else:
        value = float(arr @ th / total)
    return AggregateEstimate(
        target_id=target_id,
        value=value,
        method=AggregationMethod.ESTIMATOR_AVG,
        weight_sum=total,
    )


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-8,
    max_iter: int = 200,
):
    """Golden-section minimizer of a unimodal function on [lo, hi].

    Returns (argmin, iterations). Derivative-free; the bracket shrinks
    by the inverse golden ratio each step until its width is below tol.
    """
    a, b = float(lo), float(hi)
    if not b > a:
        raise InvalidInputError(f"invalid bracket [{lo}, {hi}]")
    h = b - a
    if h <= tol:
        return 0.5 * (a + b), 0
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    yc, yd = f(c), f(d)
    it = 0
    while h > tol and it < max_iter:
        if yc < yd:
            b, d, yd = d, c, yc
            h = b - a
            c = a + _INVPHI2 * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = b - a
            d = a + _INVPHI * h
            yd = f(d)
        it += 1
    return (c if yc < yd else d), it


def _default_bracket(pop: Population, weights: np.ndarray) -> tuple:
    th = np.array(
        [r.theta_hat for r, wt in zip(pop.records, weights) if wt > 0 and r.theta_hat is not None],
        dtype=float,
    )
    if th.size == 0:
        raise InvalidInputError("no positively weighted estimates to bracket the minimizer")
    q75, q25 = np.percentile(th, [75, 25])
    iqr = max(q75 - q25, 1e-6)
    return float(th.min() - 3.0 * iqr), float(th.max() + 3.0 * iqr)


def minimize_weighted_objective(
    obj: ObjectiveSpec,
    pop: Population,
    w,
    include_target: bool = True,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> AggregateEstimate:
    """Minimize the weighted sum of objective contributions over theta."""
    if not obj.convex:
        raise InvalidInputError("objective must be declared convex")
    arr = _weights_array(w, len(pop)).copy()
    target_id = w.target_id if isinstance(w, WeightVector) else ""
    if not include_target and isinstance(w, WeightVector):
        arr[w.ids.index(w.target_id)] = 0.0
    total = float(arr.sum())
    if total <= WEIGHT_SUM_FLOOR:
        raise EmptyNeighborhoodError(f"weight sum {total:g} too small for target {target_id!r}")
    lo, hi = obj.domain if obj.domain is not None else _default_bracket(pop, arr)
    active = np.nonzero(arr > 0)[0]

    if obj.terms is not None:
        def total_loss(theta: float) -> float:
            vals = np.asarray(obj.terms(theta, pop), dtype=float)
            bad = ~np.isfinite(vals[active])
            if bad.any():
                rid = pop.records[active[int(np.argmax(bad))]].id
                raise ObjectiveEvaluationError(
                    f"objective non-finite at theta={theta:g} for record {rid!r}"
                )
            return float(arr[active] @ vals[active])
    else:
        def total_loss(theta: float) -> float:
            s = 0.0
            for i in active:
                v = float(obj.term(theta, pop.records[i]))
                if not math.isfinite(v):
                    raise ObjectiveEvaluationError(
                        f"objective non-finite at theta={theta:g} for record {pop.records[i].id!r}"
                    )
                s += arr[i] * v
            return s

    value, iters = golden_section(total_loss, lo, hi, tol=tol, max_iter=max_iter)
    value = float(np.clip(value, lo, hi))
    return AggregateEstimate(
        target_id=target_id,
        value=value,
        method=AggregationMethod.OBJECTIVE_MIN,
        weight_sum=total,
        iterations=iters,
    )


def weighted_quantile(values, w, alpha: float) -> float:
    """Left-continuous weighted empirical quantile.

    Sorts the values carrying their weights and returns the smallest
    value whose cumulative weight (ties merged) reaches alpha times the
    total weight. With equal weights this is the classic left-continuous
    empirical quantile; it also minimizes the weighted check loss.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise InvalidInputError("weighted quantile of an empty sample")
    if not (0.0 < alpha < 1.0):
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    arr = _weights_array(w, v.size)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InvalidInputError("weights must be finite and nonnegative")
    total = float(arr.sum())
    if total <= WEIGHT_SUM_FLOOR:
        raise EmptyNeighborhoodError("weight sum too small for a weighted quantile")
    order = np.argsort(v, kind="stable")
    vs = v[order]
    cum = np.cumsum(arr[order])
    # Merge ties: the cumulative weight credited to a value is the total
    # through its last occurrence. The threshold backs off by a relative
    # epsilon so exactly-attainable boundaries survive cumsum rounding.
    last = np.nonzero(np.append(vs[1:] != vs[:-1], True))[0]
    threshold = (alpha - 1e-9) * total
    idx = int(np.searchsorted(cum[last], threshold, side="left"))
    idx = min(idx, last.size - 1)
    return float(vs[last[idx]])


def check_loss(residual, alpha: float):
    """Tilted absolute loss whose minimizer is the alpha-quantile."""
    r = np.asarray(residual, dtype=float)
    return np.abs(r) * np.where(r > 0, alpha, 1.0 - alpha)
