"""End-to-end pipelines: weighted-quantile VaR backtesting and
DTW-neighborhood trajectory anomaly scoring.

The VaR pipeline characterizes each stock by rolling three-factor
loadings, pools every stock's trailing return window, and reads the
loss quantile off the pooled sample with kernel weights on loading
distance. The equally-weighted pooled sample is the infinite-bandwidth
limit (recovered exactly); self-history dominates as the bandwidth
shrinks toward zero.

The anomaly pipeline groups voyages by dynamic-time-warping distance
between their trajectories, estimates each voyage's sailing-time mean
and spread from its nearest neighbors (target excluded), and converts
the absolute z-score into a two-sided normal risk score.

Both pipelines consume CSV files (schemas documented on the ingestion
functions) and ship synthetic generators used for desk-scale testing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._streams import stream
from .distances import Trajectory, dtw_matrix
from .errors import (
    ConfigurationError,
    DegenerateGroupError,
    InvalidInputError,
    RegressionError,
    SchemaError,
)
from .kernels import GAUSSIAN, KernelSpec, kernel_eval
from .weights import IndividualRecord, Population

EARTH_RADIUS_KM = 6371.0088


# --------------------------------------------------------------------- types


@dataclass(frozen=True)
class ReturnPanel:
    """Aligned daily returns, factor realizations and risk-free rates."""

    returns: np.ndarray  # (T, K) fractional returns
    factors: np.ndarray  # (T, 3) market-minus-rf, size, value
    risk_free: np.ndarray  # (T,)
    dates: tuple
    tickers: tuple
    dropped_rows: int = 0

    def __post_init__(self):
        r = np.asarray(self.returns, dtype=float)
        f = np.asarray(self.factors, dtype=float)
        rf = np.asarray(self.risk_free, dtype=float)
        t, k = r.shape
        if f.shape != (t, 3) or rf.shape != (t,):
            raise InvalidInputError("panel shapes are inconsistent")
        if len(self.dates) != t or len(self.tickers) != k:
            raise InvalidInputError("panel labels are inconsistent")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(f)) and np.all(np.isfinite(rf))):
            raise InvalidInputError("panel contains non-finite cells")
        object.__setattr__(self, "returns", r)
        object.__setattr__(self, "factors", f)
        object.__setattr__(self, "risk_free", rf)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))


@dataclass
class VarConfig:
    alpha: float = 0.01
    window: int = 100
    bandwidth_grid: tuple = tuple(np.geomspace(0.02, 5.0, 12))
    kernel: KernelSpec = GAUSSIAN

    def validate(self, t_total: int):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.window >= t_total:
            raise ConfigurationError(
                f"window {self.window} leaves no evaluation days in a {t_total}-day panel"
            )
        if len(self.bandwidth_grid) == 0 or any(b <= 0 for b in self.bandwidth_grid):
            raise ConfigurationError("bandwidth grid must be positive")


@dataclass(frozen=True)
class Voyage:
    id: str
    trajectory: Trajectory
    sailing_time: float  # hours

    def __post_init__(self):
        if not (np.isfinite(self.sailing_time) and self.sailing_time > 0):
            raise InvalidInputError(f"voyage {self.id!r}: sailing time must be positive")


@dataclass(frozen=True)
class VoyageSet:
    voyages: tuple
    dropped_rows: int = 0

    def __post_init__(self):
        object.__setattr__(self, "voyages", tuple(self.voyages))
        ids = [v.id for v in self.voyages]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("voyage ids must be unique")

    def __len__(self):
        return len(self.voyages)


@dataclass(frozen=True)
class AnomalyRecord:
    voyage_id: str
    group: tuple  # neighbor voyage ids
    mu: float
    sigma: float
    risk: float
    flag: bool


@dataclass(frozen=True)
class AnomalyReport:
    records: tuple
    k_neighbors: int
    threshold: float


@dataclass
class VarBacktestResult:
    method: str
    alpha: float
    window: int
    rmse: float
    var_surface: np.ndarray  # (T_eval, K) at the reported bandwidth
    exceed_freq: np.ndarray  # (K,)
    eval_dates: tuple
    bandwidth_grid: Optional[np.ndarray] = None
    rmse_curve: Optional[np.ndarray] = None
    best_bandwidth: Optional[float] = None


# --------------------------------------------------------------- factor fits


def fit_factor_loadings(panel: ReturnPanel, t: int, k: int, window: int):
    """OLS three-factor loadings and intercept for stock k at day t,
    fitted on the window of ``window`` days strictly before t."""
    if t < window:
        raise ConfigurationError(f"day {t} has fewer than {window} prior days")
    sl = slice(t - window, t)
    x = np.column_stack([np.ones(window), panel.factors[sl]])
    y = panel.returns[sl, k] - panel.risk_free[sl]
    rank = np.linalg.matrix_rank(x)
    if rank < 4:
        raise RegressionError(
            f"singular factor design in window [{t - window}, {t}) (rank {rank} < 4)"
        )
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    return coef[1:4].copy(), float(coef[0])


def _loadings_all(panel: ReturnPanel, t: int, window: int) -> np.ndarray:
    """Loadings for every stock at day t via one shared pseudo-inverse."""
    sl = slice(t - window, t)
    x = np.column_stack([np.ones(window), panel.factors[sl]])
    if np.linalg.matrix_rank(x) < 4:
        raise RegressionError(f"singular factor design in window [{t - window}, {t})")
    y = panel.returns[sl] - panel.risk_free[sl][:, None]
    coef = np.linalg.pinv(x) @ y  # (4, K)
    return coef[1:4].T.copy()


# --------------------------------------------------------------- VaR backtest


def _left_quantile_sorted(sorted_vals: np.ndarray, alpha: float) -> float:
    n = sorted_vals.size
    idx = max(int(math.ceil(alpha * n)) - 1, 0)
    return float(sorted_vals[idx])


def _igroup_var_row(vs, so, w_targets, alpha):
    """Weighted left-continuous quantiles for all targets over one pooled,
    pre-sorted sample. ``vs`` sorted values, ``so`` their stock indices,
    ``w_targets`` (K, K) kernel weights (target row, stock column).

    Only a prefix of the cumulative weights is materialized; it doubles
    until every target's threshold falls inside.
    """
    n = vs.size
    k = w_targets.shape[0]
    totals = w_targets.sum(axis=1) * (n // k)
    thr = (alpha - 1e-9) * totals  # same boundary backoff as weighted_quantile
    prefix = min(n, max(64, int(3 * alpha * n)))
    while True:
        cum = np.cumsum(w_targets[:, so[:prefix]], axis=1)
        if prefix == n or np.all(cum[:, -1] >= thr):
            break
        prefix = min(n, prefix * 2)
    idx = np.empty(k, dtype=int)
    for i in range(k):
        idx[i] = np.searchsorted(cum[i], thr[i], side="left")
    idx = np.minimum(idx, prefix - 1)
    return vs[idx]


def var_backtest(panel: ReturnPanel, cfg: VarConfig, method: str) -> VarBacktestResult:
    """Backtest one VaR method over every day with a full trailing window.

    Methods: "individual" (own-window empirical quantile), "market"
    (pooled equal-weight quantile), "igroup" (pooled quantile with
    kernel weights on factor-loading distance; evaluated on the whole
    bandwidth grid, best RMSE reported).
    """
    if method not in ("individual", "market", "igroup"):
        raise ConfigurationError(f"unknown VaR method {method!r}")
    t_total, k = panel.returns.shape
    cfg.validate(t_total)
    s = cfg.window
    alpha = cfg.alpha
    eval_ts = np.arange(s, t_total)
    n_eval = eval_ts.size
    if method in ("individual", "market"):
        surface = np.empty((n_eval, k))
        for i, t in enumerate(eval_ts):
            win = panel.returns[t - s : t]
            if method == "individual":
                surface[i] = np.sort(win, axis=0)[max(int(math.ceil(alpha * s)) - 1, 0)]
            else:
                pooled = np.sort(win.ravel())
                surface[i] = _left_quantile_sorted(pooled, alpha)
        exceed = panel.returns[eval_ts] <= surface
        freq = exceed.mean(axis=0)
        return VarBacktestResult(
            method=method,
            alpha=alpha,
            window=s,
            rmse=float(np.sqrt(np.mean((freq - alpha) ** 2))),
            var_surface=surface,
            exceed_freq=freq,
            eval_dates=tuple(panel.dates[t] for t in eval_ts),
        )
    grid = np.asarray(cfg.bandwidth_grid, dtype=float)
    surfaces = np.empty((grid.size, n_eval, k))
    for i, t in enumerate(eval_ts):
        loadings = _loadings_all(panel, t, s)
        diff = loadings[:, None, :] - loadings[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        win = panel.returns[t - s : t]
        pooled = win.T.reshape(-1)  # stock-major
        stock_of = np.repeat(np.arange(k), s)
        order = np.argsort(pooled, kind="stable")
        vs = pooled[order]
        so = stock_of[order]
        for gi, b in enumerate(grid):
            w = kernel_eval(cfg.kernel, dist / b)
            surfaces[gi, i] = _igroup_var_row(vs, so, w, alpha)
    rmse_curve = np.empty(grid.size)
    freqs = np.empty((grid.size, k))
    for gi in range(grid.size):
        exceed = panel.returns[eval_ts] <= surfaces[gi]
        freqs[gi] = exceed.mean(axis=0)
        rmse_curve[gi] = float(np.sqrt(np.mean((freqs[gi] - alpha) ** 2)))
    best = int(np.argmin(rmse_curve))
    return VarBacktestResult(
        method="igroup",
        alpha=alpha,
        window=s,
        rmse=float(rmse_curve[best]),
        var_surface=surfaces[best],
        exceed_freq=freqs[best],
        eval_dates=tuple(panel.dates[t] for t in eval_ts),
        bandwidth_grid=grid,
        rmse_curve=rmse_curve,
        best_bandwidth=float(grid[best]),
    )


# ------------------------------------------------------------- anomaly scores


def normal_two_sided_risk(zscore) -> float:
    """1 - 2 P(Z > |z|) for standard normal Z: the chance a normal draw
    lands closer to the mean than |z| standard deviations."""
    return math.erf(abs(float(zscore)) / math.sqrt(2.0))


def anomaly_scores(
    voyages: VoyageSet,
    k_neighbors: int = 40,
    threshold: float = 0.95,
    max_points: int = 500,
    workers: int = 1,
    distances=None,
    kernel_weighted: bool = False,
    kernel: KernelSpec = GAUSSIAN,
    bandwidth: Optional[float] = None,
) -> AnomalyReport:
    """Score every voyage's sailing time against its DTW neighborhood.

    The group is the ``k_neighbors`` nearest voyages by trajectory DTW
    distance, target excluded, with equal member weights by default;
    ``kernel_weighted`` switches to kernel weights on the DTW distance
    (bandwidth defaulting to the group's median distance). The risk
    score is the two-sided normal probability at the group z-score.
    ``distances`` accepts a precomputed DistanceMatrix to skip the DTW
    pass.
    """
    n = len(voyages)
    if n < k_neighbors + 1:
        raise ConfigurationError(
            f"need at least {k_neighbors + 1} voyages for {k_neighbors} neighbors, got {n}"
        )
    if not 0.0 < threshold < 1.0:
        raise ConfigurationError("threshold must lie in (0, 1)")
    if distances is None:
        trajs = [v.trajectory.subsample(max_points) for v in voyages.voyages]
        distances = dtw_matrix(trajs, workers=workers)
    dm = distances.entries
    if dm.shape != (n, n):
        raise ConfigurationError("distance matrix does not match the voyage set")
    times = np.array([v.sailing_time for v in voyages.voyages])
    ids = [v.id for v in voyages.voyages]
    records = []
    for i in range(n):
        order = np.lexsort((np.arange(n), dm[i]))
        group = [j for j in order if j != i][:k_neighbors]
        gt = times[group]
        if kernel_weighted:
            gd = dm[i, group]
            b = bandwidth if bandwidth is not None else max(float(np.median(gd)), 1e-12)
            w = kernel_eval(kernel, gd / b)
            wsum = float(w.sum())
            if wsum <= 1e-12:
                raise DegenerateGroupError(
                    f"voyage {ids[i]!r}: all neighborhood kernel weights vanished"
                )
            mu = float(w @ gt / wsum)
            denom = wsum - float(w @ w) / wsum  # unbiased weighted-variance divisor
            if denom <= 0:
                raise DegenerateGroupError(
                    f"voyage {ids[i]!r}: neighborhood weights degenerate to one member"
                )
            sigma = float(np.sqrt(w @ (gt - mu) ** 2 / denom))
        else:
            mu = float(gt.mean())
            sigma = float(gt.std(ddof=1))
        if sigma < 1e-9:
            raise DegenerateGroupError(
                f"voyage {ids[i]!r}: neighborhood sailing times have no spread"
            )
        risk = normal_two_sided_risk((times[i] - mu) / sigma)
        records.append(
            AnomalyRecord(
                voyage_id=ids[i],
                group=tuple(ids[j] for j in group),
                mu=mu,
                sigma=sigma,
                risk=risk,
                flag=risk > threshold,
            )
        )
    return AnomalyReport(records=tuple(records), k_neighbors=k_neighbors, threshold=threshold)


# -------------------------------------------------------- synthetic generators


def synthetic_return_panel(
    seed: int,
    t_days: int = 350,
    n_stocks: int = 100,
    style: str = "heterogeneous",
) -> ReturnPanel:
    """Factor-model return panel for backtests.

    Styles: "heterogeneous" (two volatility regimes separated in loading
    space), "homogeneous" (one regime), "iid_normal" (unit-variance
    returns ignoring the factors; the pooled 1% quantile is then the
    exact normal quantile -2.326...).
    """
    if style not in ("heterogeneous", "homogeneous", "iid_normal"):
        raise ConfigurationError(f"unknown panel style {style!r}")
    rng = stream(seed, 4, 0)
    factors = np.column_stack(
        [
            rng.normal(0.0003, 0.010, t_days),
            rng.normal(0.0, 0.005, t_days),
            rng.normal(0.0, 0.005, t_days),
        ]
    )
    rf = np.full(t_days, 5e-5)
    if style == "iid_normal":
        returns = rng.normal(0.0, 1.0, (t_days, n_stocks))
        rf = np.zeros(t_days)
    else:
        # Idiosyncratic volatility is tied to the market loading, so
        # loading distance is informative about tail scale; two regimes
        # (calm/wild) sit in separate loading clusters, each with an
        # internal volatility spread.
        half = n_stocks // 2
        calm = np.arange(n_stocks) < half if style == "heterogeneous" else np.ones(n_stocks, bool)
        lo, hi = np.where(calm, 0.006, 0.018), np.where(calm, 0.010, 0.030)
        idio = np.exp(rng.uniform(np.log(lo), np.log(hi)))
        loadings = np.column_stack(
            [
                60.0 * idio,
                np.where(calm, 0.3, -0.3) + rng.normal(0.0, 0.03, n_stocks),
                np.where(calm, -0.3, 0.3) + rng.normal(0.0, 0.03, n_stocks),
            ]
        )
        eps = rng.normal(0.0, 1.0, (t_days, n_stocks)) * idio[None, :]
        returns = rf[:, None] + factors @ loadings.T + eps
    dates = tuple(f"d{t:04d}" for t in range(t_days))
    tickers = tuple(f"S{k:03d}" for k in range(n_stocks))
    return ReturnPanel(returns=returns, factors=factors, risk_free=rf, dates=dates, tickers=tickers)


def _route_template(which: int, s: np.ndarray) -> np.ndarray:
    if which == 0:
        return np.column_stack([40.0 * (1.0 - s), 8.0 * np.sin(np.pi * s)])
    if which == 1:
        return np.column_stack([35.0 * (1.0 - s), -20.0 * (1.0 - s) ** 2])
    return np.column_stack(
        [25.0 * (1.0 - s) * np.cos(1.2 * s), 25.0 * (1.0 - s) * np.sin(1.2 * s) + 5.0 * s]
    )


ROUTE_TIME_MEANS = (30.0, 42.0, 55.0)
ROUTE_TIME_SDS = (2.0, 2.5, 3.0)


def synthetic_voyages(
    seed: int,
    n_voyages: int = 500,
    n_outliers: int = 10,
    outlier_sigma: float = 4.0,
    points_range: tuple = (45, 75),
    jitter: float = 0.3,
):
    """Port-approach voyages on three route templates with planted
    sailing-time anomalies. Returns (VoyageSet, planted voyage ids)."""
    if n_outliers > n_voyages:
        raise ConfigurationError(
            f"cannot plant {n_outliers} anomalies in {n_voyages} voyages"
        )
    rng = stream(seed, 5, 0)
    routes = rng.integers(0, 3, n_voyages)
    n_points = rng.integers(points_range[0], points_range[1] + 1, n_voyages)
    voyages = []
    times = np.empty(n_voyages)
    for i in range(n_voyages):
        s = np.linspace(0.0, 1.0, n_points[i])
        pts = _route_template(int(routes[i]), s) + rng.normal(0.0, jitter, (n_points[i], 2))
        times[i] = rng.normal(ROUTE_TIME_MEANS[routes[i]], ROUTE_TIME_SDS[routes[i]])
        voyages.append((f"v{i:04d}", pts))
    planted = rng.choice(n_voyages, size=n_outliers, replace=False)
    signs = rng.choice([-1.0, 1.0], size=n_outliers)
    for j, i in enumerate(planted):
        r = int(routes[i])
        times[i] = ROUTE_TIME_MEANS[r] + signs[j] * outlier_sigma * ROUTE_TIME_SDS[r]
    built = tuple(
        Voyage(id=vid, trajectory=Trajectory(pts), sailing_time=float(max(times[i], 0.1)))
        for i, (vid, pts) in enumerate(voyages)
    )
    return VoyageSet(voyages=built), tuple(f"v{i:04d}" for i in sorted(int(p) for p in planted))


# -------------------------------------------------------------- CSV ingestion


def _read_rows(path) -> tuple:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{path}: empty file (expected a header row)")
    header = [h.strip().lower() for h in rows[0]]
    return header, rows[1:]


def _require_columns(header, required, path):
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(
            f"{path}: missing required columns {missing}; expected at least {sorted(required)}"
        )
    return {c: header.index(c) for c in header}


def ingest_returns_csv(returns_path, factors_path) -> ReturnPanel:
    """Build a ReturnPanel from long-format CSVs.

    returns CSV: date, ticker, return. factors CSV: date, mkt_rf, smb,
    hml, rf. Rows with unparseable cells are dropped and counted; dates
    with any missing ticker or missing factor row are dropped entirely.
    """
    r_header, r_rows = _read_rows(returns_path)
    r_idx = _require_columns(r_header, ("date", "ticker", "return"), returns_path)
    f_header, f_rows = _read_rows(factors_path)
    f_idx = _require_columns(f_header, ("date", "mkt_rf", "smb", "hml", "rf"), factors_path)
    dropped = 0
    cells: dict = {}
    tickers = set()
    for row in r_rows:
        try:
            date = row[r_idx["date"]].strip()
            ticker = row[r_idx["ticker"]].strip()
            val = float(row[r_idx["return"]])
            if not date or not ticker or not math.isfinite(val):
                raise ValueError
        except (ValueError, IndexError):
            dropped += 1
            continue
        cells[(date, ticker)] = val
        tickers.add(ticker)
    fac: dict = {}
    for row in f_rows:
        try:
            date = row[f_idx["date"]].strip()
            vals = [float(row[f_idx[c]]) for c in ("mkt_rf", "smb", "hml", "rf")]
            if not date or not all(math.isfinite(v) for v in vals):
                raise ValueError
        except (ValueError, IndexError):
            dropped += 1
            continue
        fac[date] = vals
    if not cells:
        raise SchemaError(f"{returns_path}: no parseable data rows")
    if not fac:
        raise SchemaError(f"{factors_path}: no parseable data rows")
    tickers = tuple(sorted(tickers))
    dates = []
    for date in sorted({d for d, _ in cells}):
        if date in fac and all((date, tk) in cells for tk in tickers):
            dates.append(date)
        else:
            dropped += 1
    if not dates:
        raise SchemaError("no dates survive alignment of returns and factors")
    returns = np.array([[cells[(d, tk)] for tk in tickers] for d in dates])
    factors = np.array([fac[d][:3] for d in dates])
    rf = np.array([fac[d][3] for d in dates])
    return ReturnPanel(
        returns=returns,
        factors=factors,
        risk_free=rf,
        dates=tuple(dates),
        tickers=tickers,
        dropped_rows=dropped,
    )


def project_equirectangular(lat, lon, origin=None) -> np.ndarray:
    """Project latitude/longitude (degrees) to local planar kilometers.

    ``origin`` is the (lat0, lon0) reference; by default the centroid of
    the supplied points.
    """
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    lat0, lon0 = origin if origin is not None else (float(lat.mean()), float(lon.mean()))
    x = np.radians(lon - lon0) * math.cos(math.radians(lat0)) * EARTH_RADIUS_KM
    y = np.radians(lat - lat0) * EARTH_RADIUS_KM
    return np.column_stack([x, y])


def ingest_voyages_csv(path, durations_path=None) -> VoyageSet:
    """Build a VoyageSet from a point-list CSV.

    voyages CSV: voyage_id, seq, lat, lon and either a
    sailing_time_hours column (repeated per row) or a sidecar durations
    CSV with voyage_id, hours. Coordinates are projected to planar
    kilometers about the data centroid. Malformed rows are dropped and
    counted; voyages without a positive duration are dropped too.
    """
    header, rows = _read_rows(path)
    idx = _require_columns(header, ("voyage_id", "seq", "lat", "lon"), path)
    has_time = "sailing_time_hours" in idx
    durations: dict = {}
    if durations_path is not None:
        d_header, d_rows = _read_rows(durations_path)
        d_idx = _require_columns(d_header, ("voyage_id", "hours"), durations_path)
        for row in d_rows:
            try:
                durations[row[d_idx["voyage_id"]].strip()] = float(row[d_idx["hours"]])
            except (ValueError, IndexError):
                continue
    elif not has_time:
        raise SchemaError(
            f"{path}: need a sailing_time_hours column or a durations sidecar CSV"
        )
    dropped = 0
    points: dict = {}
    times: dict = {}
    for row in rows:
        try:
            vid = row[idx["voyage_id"]].strip()
            seq = int(float(row[idx["seq"]]))
            lat = float(row[idx["lat"]])
            lon = float(row[idx["lon"]])
            if not vid or not (math.isfinite(lat) and math.isfinite(lon)):
                raise ValueError
            if has_time:
                tv = float(row[idx["sailing_time_hours"]])
                times.setdefault(vid, tv)
        except (ValueError, IndexError):
            dropped += 1
            continue
        points.setdefault(vid, []).append((seq, lat, lon))
    if not points:
        raise SchemaError(f"{path}: no parseable data rows")
    times.update(durations)
    all_pts = np.array([(p[1], p[2]) for pts in points.values() for p in pts])
    origin = (float(all_pts[:, 0].mean()), float(all_pts[:, 1].mean()))
    voyages = []
    for vid in sorted(points):
        pts = sorted(points[vid])  # reporting order by seq
        lat = np.array([p[1] for p in pts])
        lon = np.array([p[2] for p in pts])
        planar = project_equirectangular(lat, lon, origin=origin)
        tv = times.get(vid)
        if tv is None or not math.isfinite(tv) or tv <= 0:
            dropped += 1
            continue
        voyages.append(Voyage(id=vid, trajectory=Trajectory(planar), sailing_time=float(tv)))
    if not voyages:
        raise SchemaError(f"{path}: no voyages survived validation")
    return VoyageSet(voyages=tuple(voyages), dropped_rows=dropped)


def read_population_csv(path):
    """Read a population CSV: id, optional theta_hat, optional z0..z{d-1},
    optional x0..x{n-1}. Returns (Population, dropped_row_count)."""
    header, rows = _read_rows(path)
    if "id" not in header:
        raise SchemaError(f"{path}: missing required column ['id']")
    z_cols = sorted((c for c in header if c.startswith("z")), key=lambda c: int(c[1:]) if c[1:].isdigit() else 0)
    x_cols = sorted((c for c in header if c.startswith("x")), key=lambda c: int(c[1:]) if c[1:].isdigit() else 0)
    col = {c: header.index(c) for c in header}
    dropped = 0
    records = []
    for row in rows:
        try:
            rid = row[col["id"]].strip()
            if not rid:
                raise ValueError
            theta = None
            if "theta_hat" in col and row[col["theta_hat"]].strip() != "":
                theta = float(row[col["theta_hat"]])
            z = None
            if z_cols:
                z = np.array([float(row[col[c]]) for c in z_cols])
            x_vals = []
            for c in x_cols:
                cell = row[col[c]].strip() if col[c] < len(row) else ""
                if cell != "":
                    x_vals.append(float(cell))
            x = np.array(x_vals) if x_vals else None
            records.append(IndividualRecord(id=rid, x=x, theta_hat=theta, z=z))
        except (ValueError, IndexError, InvalidInputError):
            dropped += 1
    if not records:
        raise SchemaError(f"{path}: no parseable data rows")
    return Population(records=tuple(records)), dropped
