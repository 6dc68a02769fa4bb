"""Distance measures between exogenous observations.

Two measures are used for grouping: the Euclidean norm for covariate
vectors, and a path-length-normalized dynamic time warping distance for
planar trajectories of unequal length. The DTW alignment is
boundary-anchored and monotone with steps {match, insert, delete}; its
total cost is divided by the number of aligned pairs (choosing, among
all cost-optimal paths, the shortest one) so that the result is the
minimized average pairwise distance. The normalized quantity is
symmetric and zero on identical inputs but is not a metric: the triangle
inequality can fail.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import InvalidInputError


@dataclass(frozen=True)
class Trajectory:
    """A time-ordered polygonal line of 2-D points."""

    points: np.ndarray  # (n, 2) float64

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise InvalidInputError("trajectory must be a nonempty (n, 2) point sequence")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("trajectory coordinates must be finite")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def subsample(self, max_points: int) -> "Trajectory":
        """Uniformly subsample to at most ``max_points`` points."""
        n = len(self)
        if n <= max_points:
            return self
        idx = np.linspace(0, n - 1, max_points).round().astype(int)
        return Trajectory(self.points[idx])


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise distances with zero diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise InvalidInputError("distance matrix must be square")
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def euclidean(a, b, scales=None) -> float:
    """L2 norm of a - b, optionally on per-axis rescaled coordinates."""
    av = np.asarray(a, dtype=float).ravel()
    bv = np.asarray(b, dtype=float).ravel()
    if av.shape != bv.shape:
        raise InvalidInputError(f"dimension mismatch: {av.shape} vs {bv.shape}")
    if not (np.all(np.isfinite(av)) and np.all(np.isfinite(bv))):
        raise InvalidInputError("euclidean distance requires finite inputs")
    d = av - bv
    if scales is not None:
        sc = np.asarray(scales, dtype=float).ravel()
        if sc.shape != d.shape:
            raise InvalidInputError("scale factors must match the input dimension")
        d = d / sc
    return float(np.sqrt(d @ d))


def _as_points(t) -> np.ndarray:
    if isinstance(t, Trajectory):
        return t.points
    return Trajectory(np.asarray(t, dtype=float)).points


def dtw_distance(a, b, window: int | None = None) -> float:
    """Path-length-normalized DTW distance between two trajectories.

    ``window`` constrains |i - j| on the alignment (Sakoe-Chiba band);
    it is widened automatically to the length difference so a full path
    always exists. No window is applied by default.
    """
    pa = _as_points(a)
    pb = _as_points(b)
    w = -1
    if window is not None:
        w = max(int(window), abs(pa.shape[0] - pb.shape[0]))
    cost, length = _backend.dtw_cost_len(pa, pb, w)
    if not np.isfinite(cost):
        raise InvalidInputError("DTW alignment infeasible")
    return cost / length


def dtw_matrix(trajs, window: int | None = None, workers: int = 1) -> DistanceMatrix:
    """Pairwise DTW distances; symmetric with zero diagonal.

    The upper triangle is computed (optionally on a thread pool; the
    compiled core releases the GIL) and mirrored, so results do not
    depend on scheduling.
    """
    pts = [_as_points(t) for t in trajs]
    n = len(pts)
    if n == 0:
        raise InvalidInputError("need at least one trajectory")
    out = np.zeros((n, n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def one(ij):
        i, j = ij
        return i, j, dtw_distance(Trajectory(pts[i]), Trajectory(pts[j]), window=window)

    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for i, j, d in ex.map(one, pairs):
                out[i, j] = out[j, i] = d
    else:
        for ij in pairs:
            i, j, d = one(ij)
            out[i, j] = out[j, i] = d
    return DistanceMatrix(out)
