"""Partial Hausdorff distance between finite point clouds."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptySetError
from .metric_core import PartialMetric, as_point, as_points, unique_rows

# brute force above this many pair evaluations switches to the KD-tree path
KDTREE_THRESHOLD = 4_000_000


class FiniteSet:
    """Non-empty, exactly deduplicated point cloud of shape (n, d)."""

    __slots__ = ("points",)

    def __init__(self, points, d: int | None = None, dedup: bool = True):
        pts = as_points(points, d)
        if len(pts) == 0:
            raise EmptySetError("a FiniteSet needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite coordinates in point cloud")
        self.points = unique_rows(pts) if dedup else pts

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"FiniteSet(n={len(self)}, d={self.dim})"

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def as_set(self) -> set:
        return {tuple(r) for r in self.points.tolist()}

    def issubset(self, other: "FiniteSet") -> bool:
        return self.as_set() <= other.as_set()

    def same_points(self, other: "FiniteSet") -> bool:
        return self.as_set() == other.as_set()

    def to_csv(self) -> str:
        buf = io.StringIO()
        for row in self.points:
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FiniteSet":
        rows = [[float(v) for v in line.split(",")] for line in text.splitlines() if line.strip()]
        return cls(np.array(rows, dtype=float), d=len(rows[0]) if rows else None)


def _as_set(A) -> FiniteSet:
    if isinstance(A, FiniteSet):
        return A
    if A is None or len(np.atleast_1d(np.asarray(A, dtype=float))) == 0:
        raise EmptySetError("empty point set")
    return FiniteSet(A)


def nearest_distances(m: PartialMetric, A: np.ndarray, B: np.ndarray, use_tree: bool | None = None) -> np.ndarray:
    """For every row a of A, min over rows b of B of p(a, b)."""
    if use_tree is None:
        use_tree = m.euclidean and len(A) * len(B) > KDTREE_THRESHOLD
    if use_tree:
        if not m.euclidean:
            raise ValueError("the KD-tree path needs a Euclidean metric")
        _, idx = cKDTree(B, balanced_tree=False, compact_nodes=False).query(A)
        # recompute with the metric itself so both paths share arithmetic
        return m(A, B[idx])
    out = np.empty(len(A))
    step = max(1, 2_000_000 // max(len(B), 1))
    for s in range(0, len(A), step):
        out[s:s + step] = m(A[s:s + step, None, :], B[None, :, :]).min(axis=1)
    return out


def point_to_set(m: PartialMetric, x, A) -> float:
    A = _as_set(A)
    x = as_point(x)
    return float(m(x[None, :], A.points).min())


def delta_p(m: PartialMetric, A, B, use_tree: bool | None = None) -> float:
    A, B = _as_set(A), _as_set(B)
    return float(nearest_distances(m, A.points, B.points, use_tree).max())


def h_p(m: PartialMetric, A, B, use_tree: bool | None = None) -> float:
    A, B = _as_set(A), _as_set(B)
    return max(delta_p(m, A, B, use_tree), delta_p(m, B, A, use_tree))


def min_self_distance(m: PartialMetric, C) -> float:
    C = _as_set(C)
    return float(m(C.points, C.points).min())


PROPERTIES = ("d_i", "d_ii", "d_iii", "d_iv", "h_1", "h_2", "h_3", "h_4")


@dataclass
class HausdorffReport:
    n_sets: int
    violations: dict
    worst_slack: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def to_dict(self) -> dict:
        return {"n_sets": self.n_sets, "violations": dict(self.violations),
                "worst_slack": dict(self.worst_slack)}


def check_hausdorff_props(m: PartialMetric, sets, tol: float = 1e-10) -> HausdorffReport:
    """Check every item of the delta_p / H_p property lists over all ordered
    pairs and triples drawn from ``sets``.

    Keys ``d_i`` .. ``d_iv`` are the directed-distance properties, ``h_1`` ..
    ``h_4`` the Hausdorff ones.
    """
    sets = [_as_set(s) for s in sets]
    if len(sets) < 3:
        raise ValueError("need at least three sets")
    n = len(sets)
    D = np.array([[delta_p(m, a, b) for b in sets] for a in sets])
    H = np.maximum(D, D.T)
    sup_self = np.array([float(m(s.points, s.points).max()) for s in sets])
    inf_self = np.array([min_self_distance(m, s) for s in sets])
    subset = np.array([[a.issubset(b) for b in sets] for a in sets])
    diag = np.diag(D)
    hdiag = np.diag(H)

    v = {}
    v["d_i"] = int(np.count_nonzero(np.abs(diag - sup_self) > tol))
    v["d_ii"] = int(np.count_nonzero(diag[:, None] > D + tol))
    v["d_iii"] = int(np.count_nonzero((D == 0) & ~subset))
    # [a, c, b] axes: D[a,b] <= D[a,c] + D[c,b] - inf_self[c]
    tri_d = D[:, :, None] + D[None, :, :] - inf_self[None, :, None] - D[:, None, :]
    tri_h = H[:, :, None] + H[None, :, :] - inf_self[None, :, None] - H[:, None, :]
    v["d_iv"] = int(np.count_nonzero(tri_d < -tol))
    v["h_1"] = int(np.count_nonzero(hdiag[:, None] > H + tol))
    v["h_2"] = int(np.count_nonzero(H != H.T))
    v["h_3"] = int(np.count_nonzero(tri_h < -tol))
    v["h_4"] = int(np.count_nonzero((H == 0) & ~(subset & subset.T)))
    worst = {"d_iv": float(tri_d.min()), "h_3": float(tri_h.min())}
    return HausdorffReport(n, v, worst)
