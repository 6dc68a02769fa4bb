"""Similarity weights for pooling information across individuals.

The weight given to individual k when estimating a target individual
factorizes into two parts: a covariate part comparing exogenous vectors
z through a kernel, and an estimate part comparing noisy individual
estimates theta_hat through the ratio between the predictive density of
theta_hat_k given the target's information and its own sampling density.
The estimate part is available in closed form for a conjugate Gaussian
model (used as an oracle in tests and diagnostics) and is otherwise
approximated by kernel density estimation on bootstrap re-estimate
pairs: two re-estimates per individual, computed from resampled copies
of that individual's own observations, play the role of draws of two
estimators sharing one true parameter.

All kernel sums here include the target itself (grouping sums start at
the target); callers that need target exclusion zero that entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .distances import euclidean
from .errors import (
    EmptyNeighborhoodError,
    InvalidInputError,
    SchemeMismatchError,
)
from .kernels import (
    GAUSSIAN,
    KernelSpec,
    as_bandwidth,
    kernel_eval,
    kernel_weight,
    rule_of_thumb_bandwidth,
)

# Weights smaller than this fraction of the row maximum are truncated to
# zero to keep long soft-kernel tails out of the aggregation sums.
WEIGHT_TRUNCATION = 1e-12

# Bootstrap resampling is refused below this many observations.
MIN_BOOTSTRAP_OBS = 3


class Scheme(str, Enum):
    """Which information set drives the weights."""

    Z_ONLY = "z"
    THETA_ONLY = "theta"
    COMBINED = "combined"


@dataclass(frozen=True)
class IndividualRecord:
    """One entity's data: raw observations, point estimate, covariates."""

    id: str
    x: Optional[np.ndarray] = None
    theta_hat: Optional[float] = None
    z: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.x is None and self.theta_hat is None and self.z is None:
            raise InvalidInputError(f"record {self.id!r} carries no data")
        if self.x is not None:
            x = np.asarray(self.x, dtype=float)
            if x.ndim != 1 or not np.all(np.isfinite(x)):
                raise InvalidInputError(f"record {self.id!r}: x must be a finite 1-D sequence")
            object.__setattr__(self, "x", x)
        if self.theta_hat is not None:
            th = float(self.theta_hat)
            if not np.isfinite(th):
                raise InvalidInputError(f"record {self.id!r}: theta_hat must be finite")
            object.__setattr__(self, "theta_hat", th)
        if self.z is not None:
            z = np.atleast_1d(np.asarray(self.z, dtype=float))
            if z.ndim != 1 or not np.all(np.isfinite(z)):
                raise InvalidInputError(f"record {self.id!r}: z must be a finite vector")
            object.__setattr__(self, "z", z)


@dataclass(frozen=True)
class Population:
    """An indexed collection of records with consistent dimensions."""

    records: tuple
    z_dim: Optional[int] = None
    meta: str = ""

    def __post_init__(self):
        recs = tuple(self.records)
        if not recs:
            raise InvalidInputError("population must contain at least one record")
        ids = [r.id for r in recs]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("population ids must be unique")
        zdims = {r.z.size for r in recs if r.z is not None}
        if len(zdims) > 1:
            raise InvalidInputError(f"inconsistent z dimensions: {sorted(zdims)}")
        zdim = self.z_dim
        if zdims:
            inferred = zdims.pop()
            if zdim is not None and zdim != inferred:
                raise InvalidInputError(f"z_dim={zdim} but records carry {inferred}-dim z")
            zdim = inferred
        object.__setattr__(self, "records", recs)
        object.__setattr__(self, "z_dim", zdim)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> tuple:
        return tuple(r.id for r in self.records)

    def index_of(self, rid) -> int:
        for i, r in enumerate(self.records):
            if r.id == rid:
                return i
        raise InvalidInputError(f"unknown individual id {rid!r}")

    def theta_hat_array(self) -> np.ndarray:
        if any(r.theta_hat is None for r in self.records):
            raise SchemeMismatchError("scheme requires theta_hat on every record")
        return np.array([r.theta_hat for r in self.records], dtype=float)

    def z_matrix(self) -> np.ndarray:
        if any(r.z is None for r in self.records):
            raise SchemeMismatchError("scheme requires z on every record")
        return np.vstack([r.z for r in self.records]).astype(float)

    @classmethod
    def from_arrays(cls, ids=None, theta_hat=None, z=None, x=None, meta="") -> "Population":
        """Build a population from parallel arrays (None fields omitted)."""
        sizes = [len(a) for a in (ids, theta_hat, z, x) if a is not None]
        if not sizes or len(set(sizes)) != 1:
            raise InvalidInputError("from_arrays needs equal-length arrays")
        p = sizes[0]
        if ids is None:
            ids = [str(i) for i in range(p)]
        recs = []
        for i in range(p):
            recs.append(
                IndividualRecord(
                    id=str(ids[i]),
                    x=None if x is None else np.asarray(x[i], dtype=float),
                    theta_hat=None if theta_hat is None else float(theta_hat[i]),
                    z=None if z is None else np.atleast_1d(z[i]),
                )
            )
        return cls(records=tuple(recs), meta=meta)


@dataclass(frozen=True)
class BootstrapPairs:
    """Per-individual bootstrap re-estimate pairs.

    ``first`` and ``second`` have shape (B, P): B independent pairs per
    individual, each produced from one resampled copy of that
    individual's own observations. ``theta_hat`` keeps the original
    estimates so weights can be evaluated at the observed points.
    """

    ids: tuple
    theta_hat: np.ndarray
    first: np.ndarray
    second: np.ndarray
    z: Optional[np.ndarray] = None

    def __post_init__(self):
        th = np.asarray(self.theta_hat, dtype=float)
        f = np.atleast_2d(np.asarray(self.first, dtype=float))
        s = np.atleast_2d(np.asarray(self.second, dtype=float))
        if f.shape != s.shape or f.shape[1] != th.size or len(self.ids) != th.size:
            raise InvalidInputError("bootstrap pair arrays are inconsistent")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(s)) and np.all(np.isfinite(th))):
            raise InvalidInputError("bootstrap re-estimates must be finite")
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "theta_hat", th)
        object.__setattr__(self, "first", f)
        object.__setattr__(self, "second", s)
        if self.z is not None:
            z = np.atleast_2d(np.asarray(self.z, dtype=float))
            if z.shape[0] != th.size:
                raise InvalidInputError("z rows must match the number of individuals")
            object.__setattr__(self, "z", z)

    def index_of(self, rid) -> int:
        try:
            return self.ids.index(rid)
        except ValueError:
            raise InvalidInputError(f"unknown individual id {rid!r}") from None


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative weights over a population targeting one individual."""

    target_id: str
    ids: tuple
    weights: np.ndarray
    scheme: Scheme
    bandwidths: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(self.ids) != w.size:
            raise InvalidInputError("weights must align with ids")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidInputError("weights must be finite and nonnegative")
        if w.sum() <= 0:
            raise EmptyNeighborhoodError(
                f"all weights vanished for target {self.target_id!r}"
            )
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class GaussianModelSpec:
    """Conjugate Gaussian model: theta ~ N(prior_mean, prior_var) and
    theta_hat | theta ~ N(theta, obs_var). Gives the estimate weight in
    closed form; used as the exact oracle."""

    prior_mean: float
    prior_var: float
    obs_var: float

    def __post_init__(self):
        if not (self.prior_var > 0 and self.obs_var > 0):
            raise InvalidInputError("prior_var and obs_var must be positive")

    @property
    def marginal_var(self) -> float:
        return self.prior_var + self.obs_var

    @property
    def posterior_var(self) -> float:
        return self.prior_var * self.obs_var / (self.prior_var + self.obs_var)

    def posterior_mean(self, theta_hat):
        """E[theta | theta_hat]."""
        th = np.asarray(theta_hat, dtype=float)
        out = (self.prior_var * th + self.obs_var * self.prior_mean) / self.marginal_var
        return float(out) if np.ndim(theta_hat) == 0 else out

    @property
    def predictive_var(self) -> float:
        """Variance of a second estimate given one observed estimate."""
        return self.obs_var + self.posterior_var


def _normal_pdf(x, mean, var):
    return np.exp(-0.5 * (x - mean) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


def covariate_weight(z_k, z_0, kernel: KernelSpec = GAUSSIAN, bandwidth=1.0) -> float:
    """Kernel similarity of two covariate vectors: K(||z_k - z_0|| / b)."""
    b = as_bandwidth(bandwidth)
    return float(kernel_weight(kernel, euclidean(z_k, z_0, scales=b.scales), b))


def covariate_weight_matrix(z, kernel: KernelSpec = GAUSSIAN, bandwidth=1.0) -> np.ndarray:
    """All pairwise covariate weights for a (P, d) covariate matrix."""
    b = as_bandwidth(bandwidth)
    dist = pairwise_distances(z, scales=b.scales)
    return kernel_eval(kernel, dist / b.value)


def pairwise_distances(z, scales=None) -> np.ndarray:
    """Pairwise Euclidean distances, optionally on rescaled axes."""
    zz = np.asarray(z, dtype=float)
    if zz.ndim == 1:
        zz = zz[:, None]
    if scales is not None:
        zz = zz / np.asarray(scales, dtype=float)
    sq = np.sum(zz * zz, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (zz @ zz.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    np.fill_diagonal(d, 0.0)
    return d


def estimate_weight_gaussian(theta_hat_k, theta_hat_0, model: GaussianModelSpec):
    """Closed-form estimate weight in the conjugate Gaussian model.

    Ratio of the predictive density of theta_hat_0 after observing
    theta_hat_k to its marginal density; equals the population-integral
    form of the reduced weight. Vectorized over theta_hat_k.
    """
    th_k = np.asarray(theta_hat_k, dtype=float)
    num = _normal_pdf(
        float(theta_hat_0), model.posterior_mean(th_k), model.predictive_var
    )
    den = _normal_pdf(float(theta_hat_0), model.prior_mean, model.marginal_var)
    out = num / den
    return float(out) if np.ndim(theta_hat_k) == 0 else out


def estimate_weight_matrix_gaussian(theta_hat, model: GaussianModelSpec) -> np.ndarray:
    """Matrix W[t, k] of exact estimate weights for every target t."""
    th = np.asarray(theta_hat, dtype=float)
    mu = model.posterior_mean(th)  # (P,) posterior means given source k
    num = _normal_pdf(th[:, None], mu[None, :], model.predictive_var)
    den = _normal_pdf(th, model.prior_mean, model.marginal_var)
    return num / den[:, None]


def mean_estimate(x) -> float:
    """Sample-mean point estimate (default bootstrap re-estimator)."""
    return float(np.mean(x))


def ar1_cls_estimate(pairs) -> float:
    """Conditional-least-squares AR(1) coefficient from transition pairs,
    clamped to the stationary interval."""
    p = np.asarray(pairs, dtype=float)
    den = float(p[:, 0] @ p[:, 0])
    if den <= 0.0:
        return 0.0
    return float(np.clip(p[:, 0] @ p[:, 1] / den, -0.999, 0.999))


def bootstrap_pairs(
    pop: Population,
    rng: np.random.Generator,
    estimator: Optional[Callable] = None,
    mode: str = "values",
    count: int = 1,
) -> BootstrapPairs:
    """Draw bootstrap re-estimate pairs for every individual.

    mode "values" resamples raw observations with replacement;
    mode "transitions" resamples consecutive-observation pairs, which
    preserves first-order serial dependence for AR-type estimators. Each
    of the ``count`` pairs uses two independent resamples.
    """
    if mode not in ("values", "transitions"):
        raise InvalidInputError(f"unknown bootstrap mode {mode!r}")
    if estimator is None:
        estimator = mean_estimate if mode == "values" else ar1_cls_estimate
    p = len(pop)
    first = np.empty((count, p))
    second = np.empty((count, p))
    theta = np.empty(p)
    for i, rec in enumerate(pop.records):
        if rec.x is None:
            raise SchemeMismatchError(f"record {rec.id!r} has no raw observations to resample")
        x = rec.x
        if x.size < MIN_BOOTSTRAP_OBS:
            raise SchemeMismatchError(
                f"record {rec.id!r} has {x.size} observations; "
                f"bootstrap needs at least {MIN_BOOTSTRAP_OBS}"
            )
        if mode == "values":
            units = x
            theta[i] = rec.theta_hat if rec.theta_hat is not None else estimator(x)
        else:
            units = np.column_stack([x[:-1], x[1:]])
            theta[i] = rec.theta_hat if rec.theta_hat is not None else estimator(units)
        n_units = units.shape[0]
        idx = rng.integers(0, n_units, size=(2 * count, n_units))
        for b in range(count):
            first[b, i] = estimator(units[idx[2 * b]])
            second[b, i] = estimator(units[idx[2 * b + 1]])
    z = None
    if all(r.z is not None for r in pop.records):
        z = pop.z_matrix()
    return BootstrapPairs(ids=pop.ids, theta_hat=theta, first=first, second=second, z=z)


def kde_density(samples, query, kernel: KernelSpec = GAUSSIAN, bandwidth=None):
    """1-D kernel density estimate: mean of K((q - s)/b)/b over samples."""
    s = np.asarray(samples, dtype=float).ravel()
    b = rule_of_thumb_bandwidth(s) if bandwidth is None else as_bandwidth(bandwidth)
    q = np.asarray(query, dtype=float)
    vals = kernel_eval(kernel, (q[..., None] - s) / b.value) / b.value
    out = vals.mean(axis=-1)
    return float(out) if np.ndim(query) == 0 else out


def _theta_z_samples(data):
    if isinstance(data, Population):
        return data.theta_hat_array(), data.z_matrix()
    if isinstance(data, BootstrapPairs):
        if data.z is None:
            raise SchemeMismatchError("bootstrap pairs carry no covariates")
        return data.theta_hat, data.z
    raise InvalidInputError("expected a Population or BootstrapPairs")


def conditional_density_estimate(
    data,
    query_theta: float,
    query_z,
    kernel_z: KernelSpec = GAUSSIAN,
    kernel_theta: KernelSpec = GAUSSIAN,
    b_z=None,
    b_theta=None,
) -> float:
    """Kernel estimate of the conditional density of theta_hat given z.

    Ratio form: sum_j Kz(dz_j/bz) * Kt((q - theta_j)/bt)/bt over
    sum_j Kz(dz_j/bz). The covariate kernel appears in numerator and
    denominator, so only the estimate kernel carries density
    normalization.
    """
    theta_s, z_s = _theta_z_samples(data)
    bz = rule_of_thumb_bandwidth(z_s) if b_z is None else as_bandwidth(b_z)
    bt = rule_of_thumb_bandwidth(theta_s) if b_theta is None else as_bandwidth(b_theta)
    q_z = np.atleast_1d(np.asarray(query_z, dtype=float))
    zz = z_s
    if bz.scales is not None:
        sc = np.asarray(bz.scales, dtype=float)
        zz = z_s / sc
        q_z = q_z / sc
    dz = np.sqrt(np.sum((zz - q_z) ** 2, axis=1))
    wz = kernel_eval(kernel_z, dz / bz.value)
    den = float(np.sum(wz))
    if den <= 1e-12:
        raise EmptyNeighborhoodError(
            f"no individuals within covariate-kernel support of query z={query_z!r}"
        )
    wt = kernel_eval(kernel_theta, (float(query_theta) - theta_s) / bt.value) / bt.value
    return float(np.sum(wz * wt) / den)


def _bootstrap_bandwidths(pairs: BootstrapPairs, b1, b2, b3):
    """Resolve the three kernel bandwidths, rule-of-thumb by default."""
    if pairs.z is not None:
        bb1 = rule_of_thumb_bandwidth(pairs.z) if b1 is None else as_bandwidth(b1)
    else:
        bb1 = rule_of_thumb_bandwidth(pairs.first.ravel()) if b1 is None else as_bandwidth(b1)
    bb2 = (
        rule_of_thumb_bandwidth(pairs.first.ravel() if pairs.z is not None else pairs.second.ravel())
        if b2 is None
        else as_bandwidth(b2)
    )
    bb3 = rule_of_thumb_bandwidth(pairs.second.ravel()) if b3 is None else as_bandwidth(b3)
    return bb1, bb2, bb3


def estimate_weight_matrix_bootstrap(
    pairs: BootstrapPairs,
    kernels: Sequence[KernelSpec] = (GAUSSIAN, GAUSSIAN, GAUSSIAN),
    b1=None,
    b2=None,
    b3=None,
) -> np.ndarray:
    """Bootstrap/KDE estimate weights W[t, k] for every target t.

    With covariates the integral estimate conditions on the target's z
    through covariate-kernel weights and the denominators are
    conditional densities; without covariates the integral is a plain
    two-kernel density estimate over the pairs and the denominators are
    marginal densities of the original estimates.
    """
    k1, k2, k3 = kernels
    bb1, bb2, bb3 = _bootstrap_bandwidths(pairs, b1, b2, b3)
    th = pairs.theta_hat
    p = th.size
    nb = pairs.first.shape[0]
    if pairs.z is not None:
        dist = pairwise_distances(pairs.z, scales=bb1.scales)
        cz = kernel_eval(k1, dist / bb1.value)  # (T, j) covariate weights per target row
        crow = cz.sum(axis=1)
        if np.any(crow <= 1e-12):
            bad = pairs.ids[int(np.argmin(crow))]
            raise EmptyNeighborhoodError(
                f"no individuals within covariate-kernel support for {bad!r}"
            )
        integral = np.zeros((p, p))
        for b in range(nb):
            kf = kernel_eval(k2, (th[:, None] - pairs.first[b][None, :]) / bb2.value) / bb2.value
            ks = kernel_eval(k3, (th[:, None] - pairs.second[b][None, :]) / bb3.value) / bb3.value
            integral += (cz * kf) @ ks.T
        integral /= nb * crow[:, None]
        kq = kernel_eval(k2, (th[:, None] - th[None, :]) / bb2.value) / bb2.value
        cond = np.sum(cz * kq, axis=1) / crow
        cond = np.maximum(cond, 1e-300)
        return integral / (cond[None, :] * cond[:, None])
    integral = np.zeros((p, p))
    for b in range(nb):
        a = kernel_eval(k1, (pairs.first[b][:, None] - th[None, :]) / bb1.value) / bb1.value
        c = kernel_eval(k2, (pairs.second[b][:, None] - th[None, :]) / bb2.value) / bb2.value
        integral += c.T @ a
    integral /= nb * p
    marg_k = kde_density(th, th, kernel=k1, bandwidth=bb1)
    marg_t = kde_density(th, th, kernel=k2, bandwidth=bb2)
    marg_k = np.maximum(marg_k, 1e-300)
    marg_t = np.maximum(marg_t, 1e-300)
    return integral / (marg_k[None, :] * marg_t[:, None])


def estimate_weight_bootstrap(
    pairs: BootstrapPairs,
    k,
    target,
    kernels: Sequence[KernelSpec] = (GAUSSIAN, GAUSSIAN, GAUSSIAN),
    b1=None,
    b2=None,
    b3=None,
) -> float:
    """Bootstrap estimate weight for one (source, target) pair of ids."""
    ki = pairs.index_of(k)
    ti = pairs.index_of(target)
    k1, k2, k3 = kernels
    bb1, bb2, bb3 = _bootstrap_bandwidths(pairs, b1, b2, b3)
    th = pairs.theta_hat
    p = th.size
    nb = pairs.first.shape[0]
    if pairs.z is not None:
        zz = pairs.z
        if bb1.scales is not None:
            zz = zz / np.asarray(bb1.scales, dtype=float)
        dz_t = np.sqrt(np.sum((zz - zz[ti]) ** 2, axis=1))
        wz_t = kernel_eval(k1, dz_t / bb1.value)
        den_t = float(wz_t.sum())
        if den_t <= 1e-12:
            raise EmptyNeighborhoodError(
                f"no individuals within covariate-kernel support for {target!r}"
            )
        acc = 0.0
        for b in range(nb):
            kf = kernel_eval(k2, (th[ti] - pairs.first[b]) / bb2.value) / bb2.value
            ks = kernel_eval(k3, (th[ki] - pairs.second[b]) / bb3.value) / bb3.value
            acc += float(np.sum(wz_t * kf * ks))
        integral = acc / (nb * den_t)

        def cond_at(idx):
            d = np.sqrt(np.sum((zz - zz[idx]) ** 2, axis=1))
            w = kernel_eval(k1, d / bb1.value)
            dd = float(w.sum())
            if dd <= 1e-12:
                raise EmptyNeighborhoodError(
                    f"no individuals within covariate-kernel support for {pairs.ids[idx]!r}"
                )
            kt = kernel_eval(k2, (th[idx] - th) / bb2.value) / bb2.value
            return max(float(np.sum(w * kt) / dd), 1e-300)

        return integral / (cond_at(ki) * cond_at(ti))
    acc = 0.0
    for b in range(nb):
        a = kernel_eval(k1, (pairs.first[b] - th[ki]) / bb1.value) / bb1.value
        c = kernel_eval(k2, (pairs.second[b] - th[ti]) / bb2.value) / bb2.value
        acc += float(np.sum(a * c))
    integral = acc / (nb * p)
    marg_k = max(float(kde_density(th, th[ki], kernel=k1, bandwidth=bb1)), 1e-300)
    marg_t = max(float(kde_density(th, th[ti], kernel=k2, bandwidth=bb2)), 1e-300)
    return integral / (marg_k * marg_t)


def truncate_small(weights: np.ndarray) -> np.ndarray:
    """Zero out weights below WEIGHT_TRUNCATION times the maximum."""
    w = np.asarray(weights, dtype=float).copy()
    top = w.max(initial=0.0)
    if top > 0:
        w[w < WEIGHT_TRUNCATION * top] = 0.0
    return w


def build_weights(
    pop: Population,
    target,
    scheme: Scheme,
    *,
    pairs: Optional[BootstrapPairs] = None,
    model_oracle: Optional[GaussianModelSpec] = None,
    kernel_z: KernelSpec = GAUSSIAN,
    kernel_theta: KernelSpec = GAUSSIAN,
    b_z=None,
    b_theta=(None, None, None),
    include_self: bool = True,
) -> WeightVector:
    """Assemble the full weight vector for one target individual.

    scheme "z" uses covariate similarity only, "theta" the estimate
    weight only (exact when a Gaussian model oracle is supplied,
    bootstrap otherwise), "combined" their product. The target's own
    weight is included unless ``include_self`` is False.
    """
    scheme = Scheme(scheme)
    ti = pop.index_of(target)
    used: dict = {}
    w1 = None
    if scheme in (Scheme.Z_ONLY, Scheme.COMBINED):
        z = pop.z_matrix()
        bz = rule_of_thumb_bandwidth(z) if b_z is None else as_bandwidth(b_z)
        zz = z if bz.scales is None else z / np.asarray(bz.scales, dtype=float)
        dz = np.sqrt(np.sum((zz - zz[ti]) ** 2, axis=1))
        w1 = kernel_eval(kernel_z, dz / bz.value)
        used["b_z"] = bz.value
    w2 = None
    if scheme in (Scheme.THETA_ONLY, Scheme.COMBINED):
        if model_oracle is not None:
            th = pop.theta_hat_array()
            w2 = estimate_weight_gaussian(th, th[ti], model_oracle)
            used["model"] = "gaussian-exact"
        else:
            if pairs is None:
                raise SchemeMismatchError(
                    f"scheme {scheme.value!r} needs bootstrap pairs or a model oracle"
                )
            b1, b2, b3 = b_theta if b_theta is not None else (None, None, None)
            bb1, bb2, bb3 = _bootstrap_bandwidths(pairs, b1, b2, b3)
            kern = (kernel_z, kernel_theta, kernel_theta) if pairs.z is not None else (
                kernel_theta,
                kernel_theta,
                kernel_theta,
            )
            full = estimate_weight_matrix_bootstrap(pairs, kern, bb1, bb2, bb3)
            order = [pairs.index_of(rid) for rid in pop.ids]
            w2 = full[pairs.index_of(target), order]
            used.update(b1=bb1.value, b2=bb2.value, b3=bb3.value)
    if scheme is Scheme.Z_ONLY:
        w = w1
    elif scheme is Scheme.THETA_ONLY:
        w = w2
    else:
        w = w1 * w2
    w = np.asarray(w, dtype=float)
    if not include_self:
        w = w.copy()
        w[ti] = 0.0
    w = truncate_small(w)
    if w.sum() <= 0.0:
        raise EmptyNeighborhoodError(f"all weights vanished for target {target!r}")
    return WeightVector(
        target_id=pop.records[ti].id,
        ids=pop.ids,
        weights=w,
        scheme=scheme,
        bandwidths=used,
    )
