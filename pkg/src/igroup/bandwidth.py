"""Leave-one-out cross-validation bandwidth selection.

The selection sweeps a candidate grid and scores each bandwidth by the
mean squared deviation between every individual's own estimate and its
leave-one-out pooled prediction. The averaging set is either the whole
population (global tuning) or a covariate ball around a chosen center
(local tuning); the leave-one-out predictions always draw on the whole
population. Up to an additive constant the CV error tracks the true
pooled-estimation risk, so its argmin is a usable bandwidth choice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from .aggregation import ObjectiveSpec, minimize_weighted_objective
from .errors import (
    ConfigurationError,
    EmptyNeighborhoodError,
    InvalidInputError,
)
from .kernels import GAUSSIAN, KernelSpec, as_bandwidth, rule_of_thumb_bandwidth
from .weights import Population, Scheme, WeightVector, pairwise_distances


@dataclass(frozen=True)
class Omega0:
    """Local cross-validation scope: a covariate ball around a center.

    With epsilon None the radius expands by factor 1.5 from the nearest
    neighbor distance until the member floor is met.
    """

    center_id: str
    epsilon: Optional[float] = None


@dataclass
class CvConfig:
    grid: np.ndarray
    omega0: Optional[Omega0] = None
    kernel: KernelSpec = GAUSSIAN
    scheme: Scheme = Scheme.Z_ONLY
    base_weights: Optional[np.ndarray] = None  # fixed estimate-weight factor for combined CV
    objective: Optional[ObjectiveSpec] = None
    min_members: int = 30

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float).ravel()
        if g.size == 0:
            raise InvalidInputError("bandwidth grid must be nonempty")
        if np.any(g <= 0) or not np.all(np.isfinite(g)):
            raise InvalidInputError("bandwidth grid entries must be positive reals")
        if np.any(np.diff(g) <= 0):
            raise InvalidInputError("bandwidth grid must be strictly increasing")
        self.grid = g
        self.scheme = Scheme(self.scheme)
        if self.scheme is Scheme.THETA_ONLY:
            raise ConfigurationError(
                "cross-validation sweeps the covariate bandwidth; "
                "scheme 'theta' has none (pass a combined config with base_weights instead)"
            )
        if self.scheme is Scheme.COMBINED and self.base_weights is None:
            raise ConfigurationError("combined-scheme CV needs base_weights")


@dataclass(frozen=True)
class CvReport:
    grid: np.ndarray
    errors: np.ndarray
    selected: float
    omega0_size: int

    @property
    def selected_index(self) -> int:
        return int(np.argmin(self.errors))


def loo_estimate(pop: Population, weights_for_k: WeightVector, k) -> float:
    """Pooled estimate for individual k with k's own weight removed."""
    th = pop.theta_hat_array()
    idx = pop.index_of(k)
    w = weights_for_k.weights.copy()
    w[idx] = 0.0
    den = float(w.sum())
    if den <= 1e-12:
        raise EmptyNeighborhoodError(f"all off-target weights vanished for {k!r}")
    return float(w @ th / den)


def default_grid(z, points: int = 20, span=(0.05, 5.0)) -> np.ndarray:
    """Log-spaced candidate bandwidths bracketing the rule of thumb."""
    rot = rule_of_thumb_bandwidth(np.asarray(z, dtype=float))
    scale = rot.value
    if rot.scales is not None:
        scale = rot.value * float(np.mean(rot.scales))
    return np.geomspace(span[0] * scale, span[1] * scale, points)


def _omega_mask(pop: Population, dist: np.ndarray, cfg: CvConfig) -> np.ndarray:
    p = len(pop)
    if cfg.omega0 is None:
        return np.ones(p, dtype=bool)
    ci = pop.index_of(cfg.omega0.center_id)
    d = dist[ci].copy()
    d[ci] = np.inf  # the center itself is not scored
    eps = cfg.omega0.epsilon
    if eps is None:
        floor = min(cfg.min_members, p - 1)
        positive = d[np.isfinite(d)]
        eps = float(positive.min()) if positive.size else 0.0
        eps = max(eps, 1e-12)
        while int((d <= eps).sum()) < floor:
            eps *= 1.5
    mask = d <= eps
    if not mask.any():
        raise ConfigurationError(
            f"local CV scope around {cfg.omega0.center_id!r} is empty at epsilon={eps:g}"
        )
    return mask


def _prepared(pop: Population, cfg: CvConfig):
    z = pop.z_matrix()
    dist = pairwise_distances(z)
    theta = pop.theta_hat_array()
    mask = _omega_mask(pop, dist, cfg)
    base = None
    if cfg.base_weights is not None:
        base = np.ascontiguousarray(cfg.base_weights, dtype=float)
        if base.shape != dist.shape:
            raise ConfigurationError("base_weights must be a full population-square matrix")
    return dist, theta, mask, base


def _objective_cv(pop, dist, mask, base, cfg, b) -> float:
    from .kernels import kernel_eval

    theta = pop.theta_hat_array()
    w_all = kernel_eval(cfg.kernel, dist / b)
    if base is not None:
        w_all = w_all * base
    errs = []
    for k in np.nonzero(mask)[0]:
        w = w_all[k].copy()
        w[k] = 0.0
        if w.sum() <= 1e-12:
            raise EmptyNeighborhoodError(
                f"all off-target weights vanished for {pop.records[k].id!r}"
            )
        est = minimize_weighted_objective(cfg.objective, pop, w)
        errs.append((est.value - theta[k]) ** 2)
    return float(np.mean(errs))


def cv_error(pop: Population, b, cfg: CvConfig) -> float:
    """Leave-one-out CV error at one bandwidth."""
    from .kernels import kernel_eval

    bv = as_bandwidth(b).value
    dist, theta, mask, base = _prepared(pop, cfg)
    if cfg.objective is not None:
        return _objective_cv(pop, dist, mask, base, cfg, bv)
    err = _backend.loo_cv_error(dist, theta, bv, cfg.kernel.code, base, mask.astype(np.uint8))
    if not np.isfinite(err):
        # locate the first empty neighborhood for the error message
        wm = kernel_eval(cfg.kernel, dist / bv)
        if base is not None:
            wm = wm * base
        for k in np.nonzero(mask)[0]:
            row = wm[k].copy()
            row[k] = 0.0
            if row.sum() <= 1e-12:
                raise EmptyNeighborhoodError(
                    f"all off-target weights vanished for {pop.records[k].id!r} at b={bv:g}"
                )
        raise EmptyNeighborhoodError(f"empty neighborhood at b={bv:g}")
    return float(err)


def select_bandwidth(pop: Population, cfg: CvConfig) -> CvReport:
    """Sweep the grid and return the CV curve with its argmin.

    A grid point whose neighborhood is empty records +inf instead of
    failing the sweep; ties break toward the smaller bandwidth.
    """
    dist, theta, mask, base = _prepared(pop, cfg)
    errors = np.empty(cfg.grid.size)
    for i, b in enumerate(cfg.grid):
        if cfg.objective is not None:
            try:
                errors[i] = _objective_cv(pop, dist, mask, base, cfg, float(b))
            except EmptyNeighborhoodError:
                errors[i] = np.inf
        else:
            errors[i] = _backend.loo_cv_error(
                dist, theta, float(b), cfg.kernel.code, base, mask.astype(np.uint8)
            )
    if not np.any(np.isfinite(errors)):
        raise ConfigurationError("every candidate bandwidth produced an empty neighborhood")
    selected = float(cfg.grid[int(np.argmin(errors))])
    return CvReport(
        grid=cfg.grid.copy(),
        errors=errors,
        selected=selected,
        omega0_size=int(mask.sum()),
    )
