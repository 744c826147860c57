"""Points, sample domains and partial metrics.

A point is a 1-D float array of fixed length ``d``. Every metric callable is
vectorised: it takes two arrays of shape ``(..., d)`` that broadcast against
each other and returns an array of shape ``(...)``. Scalar convenience
wrappers (:func:`eval_p`, :func:`induced_ps`) sit on top of that.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainMismatchError

TOL_SYM = 1e-12
TOL_TRI = 1e-10


def as_point(x) -> np.ndarray:
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1:
        raise ValueError(f"a point must be a flat vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise DomainMismatchError(f"non-finite coordinates in {p!r}")
    return p


def as_points(xs, d: Optional[int] = None) -> np.ndarray:
    """Coerce a scalar list / list of vectors / array into shape ``(n, d)``."""
    a = np.asarray(xs, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1) if d in (None, 1) else a.reshape(1, -1)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D point array, got shape {a.shape}")
    if d is not None and a.shape[1] != d:
        raise DomainMismatchError(f"expected dimension {d}, got {a.shape[1]}")
    return a


def unique_rows(points: np.ndarray) -> np.ndarray:
    """Drop exact duplicate rows, keeping first occurrences in order."""
    if len(points) <= 1:
        return points
    order = np.lexsort(points.T[::-1])
    srt = points[order]
    head = np.ones(len(srt), dtype=bool)
    head[1:] = np.any(srt[1:] != srt[:-1], axis=1)
    if head.all():
        return points
    first = np.minimum.reduceat(order, np.flatnonzero(head))
    return points[np.sort(first)]


@dataclass(frozen=True, eq=False)
class DomainDescriptor:
    """Finite stand-in for a carrier set: declared bounds plus a sample grid."""

    kind: str
    lo: float
    hi: float
    sample_grid: np.ndarray
    interval_mode: bool = False

    def __post_init__(self):
        grid = np.asarray(self.sample_grid, dtype=float)
        if grid.ndim != 2 or len(grid) == 0:
            raise ValueError("sample_grid must be a non-empty (n, d) array")
        if len(unique_rows(grid)) != len(grid):
            raise ValueError("sample_grid contains duplicate points")
        object.__setattr__(self, "sample_grid", grid)
        if not np.all(self.contains(grid)):
            raise ValueError("sample_grid leaves the declared bounds")

    @property
    def dim(self) -> int:
        return self.sample_grid.shape[1]

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        ok = np.all(np.isfinite(pts), axis=-1)
        ok &= np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)
        if self.interval_mode:
            ok &= pts[..., 0] <= pts[..., 1]
        return ok

    def check(self, *pts) -> None:
        for p in pts:
            p = np.asarray(p, dtype=float)
            if p.shape[-1] != self.dim or not np.all(self.contains(p)):
                raise DomainMismatchError(f"point {p.tolist()} outside {self.kind} [{self.lo}, {self.hi}]")


def real_interval(lo: float, hi: float, n: int) -> DomainDescriptor:
    grid = np.linspace(lo, hi, n).reshape(-1, 1)
    return DomainDescriptor("real-interval", lo, hi, grid)


def nonneg_reals(hi: float = 10.0, n: int = 1001) -> DomainDescriptor:
    grid = np.linspace(0.0, hi, n).reshape(-1, 1)
    return DomainDescriptor("nonneg-reals", 0.0, hi, grid)


def interval_pairs(lo: float, hi: float, n: int) -> DomainDescriptor:
    """All closed intervals [a, b] with endpoints drawn from an n-point grid."""
    ends = np.linspace(lo, hi, n)
    a, b = np.triu_indices(n)
    grid = np.column_stack([ends[a], ends[b]])
    return DomainDescriptor("interval-pairs", lo, hi, grid, interval_mode=True)


def _profiles(t: np.ndarray) -> list[np.ndarray]:
    # every profile is nonnegative with maximum exactly 1
    return [
        np.ones_like(t),
        t,
        1.0 - t,
        np.sin(np.pi * t),
        t * t,
        4.0 * t * (1.0 - t),
        np.maximum(0.0, 1.0 - 2.0 * np.abs(t - 0.3)),
    ]


def grid_functions(n_nodes: int, n_funcs: int = 400, hi: float = 5.0) -> DomainDescriptor:
    """Nonnegative grid functions on [0, 1] whose maxima are pairwise distinct.

    The sup-based distance is only a partial metric on families where the
    maximum identifies the function, so the sample grid is built that way:
    function i is ``c_i * profile_{i mod 7}`` with distinct scales c_i.
    """
    t = np.linspace(0.0, 1.0, n_nodes)
    profiles = _profiles(t)
    scales = hi * np.arange(1, n_funcs + 1) / n_funcs
    rows = [c * profiles[i % len(profiles)] for i, c in enumerate(scales)]
    rows[0] = np.zeros_like(t)
    return DomainDescriptor(f"grid-functions({n_nodes})", 0.0, hi, np.array(rows))


@dataclass(frozen=True, eq=False)
class PartialMetric:
    name: str
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    exact: bool = False
    dim: Optional[int] = None
    domain: Optional[DomainDescriptor] = None
    note: str = ""
    euclidean: bool = False  # enables the KD-tree nearest-point path

    def __call__(self, x, y) -> np.ndarray:
        return self.fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def ps(self, x, y) -> np.ndarray:
        """Vectorised induced metric 2p(x,y) - p(x,x) - p(y,y)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return 2.0 * self.fn(x, y) - self.fn(x, x) - self.fn(y, y)

    def with_domain(self, domain: DomainDescriptor) -> "PartialMetric":
        return PartialMetric(self.name, self.fn, self.exact, self.dim, domain, self.note, self.euclidean)


def _check(m: PartialMetric, *pts: np.ndarray) -> None:
    for p in pts:
        if m.dim is not None and p.shape[-1] != m.dim:
            raise DomainMismatchError(f"{m.name} expects dimension {m.dim}, got {p.shape[-1]}")
    if m.domain is not None:
        m.domain.check(*pts)


def eval_p(m: PartialMetric, x, y) -> float:
    x, y = as_point(x), as_point(y)
    _check(m, x, y)
    return float(m(x, y))


def induced_ps(m: PartialMetric, x, y) -> float:
    x, y = as_point(x), as_point(y)
    _check(m, x, y)
    return float(m.ps(x, y))


def ball_membership(m: PartialMetric, center, eps: float, y) -> bool:
    if not eps > 0:
        raise ValueError("eps must be positive")
    c, y = as_point(center), as_point(y)
    _check(m, c, y)
    return bool(m(c, y) < m(c, c) + eps)


# -- bundled metrics ---------------------------------------------------------

def _max(x, y):
    return np.maximum(x[..., 0], y[..., 0])


def _interval(x, y):
    return np.maximum(x[..., 1], y[..., 1]) - np.minimum(x[..., 0], y[..., 0])


def _sup_pair(x, y):
    return np.maximum(x.max(axis=-1), y.max(axis=-1))


def _euclid(x, y):
    return np.sqrt(np.sum((x - y) ** 2, axis=-1))


def _mixed(x, y):
    a, b = x[..., 0], y[..., 0]
    low = (a < 1.0) & (b < 1.0)
    return np.where(low, np.abs(a - b), np.maximum(a, b))


max_metric = PartialMetric(
    "max_metric", _max, exact=True, dim=1,
    domain=DomainDescriptor("nonneg-reals", 0.0, np.inf, np.zeros((1, 1))),
    note="p(x,y) = max{x,y} on the nonnegative reals",
)
interval_metric = PartialMetric(
    "interval_metric", _interval, exact=True, dim=2,
    domain=DomainDescriptor("interval-pairs", -np.inf, np.inf, np.zeros((1, 2)), interval_mode=True),
    note="p([a,b],[c,d]) = max{b,d} - min{a,c} on closed intervals (Matthews)",
)
sup_pair_metric = PartialMetric(
    "sup_pair_metric", _sup_pair, exact=True,
    note="p(x,y) = max(sup x, sup y) on nonnegative grid functions (integral-equation setting)",
)
euclidean_metric = PartialMetric(
    "euclidean", _euclid, exact=True, note="Euclidean distance; zero self-distance", euclidean=True,
)


def mixed_metric(k: float = 2.0) -> PartialMetric:
    """|x-y| when both points lie in [0,1), max{x,y} otherwise, on [0,k]."""
    dom = real_interval(0.0, k, 3)
    return PartialMetric(
        f"mixed_metric({k:g})", _mixed, exact=True, dim=1, domain=dom,
        note="|x-y| on [0,1), max{x,y} otherwise, on [0,k]",
    )


# -- axiom checking ------------------------------------------------------------

@dataclass
class AxiomReport:
    metric: str
    n_triples: int
    seed: int
    violations: dict = field(default_factory=dict)
    worst: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "n_triples": self.n_triples,
            "seed": self.seed,
            "violations": dict(self.violations),
            "worst": dict(self.worst),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def check_axioms(m: PartialMetric, dom: DomainDescriptor, n_triples: int, seed: int,
                 tol_tri: float = TOL_TRI) -> AxiomReport:
    """Sample ``n_triples`` grid triples and count violations of P1 (forward), P2-P4
    and of the ordinary triangle inequality for the induced metric."""
    if n_triples < 1:
        raise ValueError("n_triples must be >= 1")
    rng = np.random.default_rng(seed)
    grid = dom.sample_grid
    idx = rng.integers(0, len(grid), size=(n_triples, 3))
    x, y, z = grid[idx[:, 0]], grid[idx[:, 1]], grid[idx[:, 2]]

    tol_eq = 0.0 if m.exact else TOL_SYM
    tol_sym = 0.0 if m.exact else TOL_SYM
    pxx, pyy, pzz = m(x, x), m(y, y), m(z, z)
    pxy, pyz, pxz = m(x, y), m(y, z), m(x, z)
    pyx = m(y, x)

    p1 = 0
    p2 = 0
    for (a, b, paa, pbb, pab) in ((x, y, pxx, pyy, pxy), (y, z, pyy, pzz, pyz), (x, z, pxx, pzz, pxz)):
        distinct = np.any(a != b, axis=-1)
        indist = (np.abs(paa - pab) <= tol_eq) & (np.abs(pbb - pab) <= tol_eq)
        p1 += int(np.count_nonzero(distinct & indist))
        p2 += int(np.count_nonzero((paa > pab + tol_eq) | (pbb > pab + tol_eq) | (pab < 0)))
    p3 = int(np.count_nonzero(np.abs(pxy - pyx) > tol_sym))

    slack4 = (pxy + pyz - pyy) - pxz
    p4 = int(np.count_nonzero(slack4 < -tol_tri))

    sxy = 2 * pxy - pxx - pyy
    syz = 2 * pyz - pyy - pzz
    sxz = 2 * pxz - pxx - pzz
    ps_tri = int(np.count_nonzero(sxz > sxy + syz + tol_tri))

    w = int(np.argmin(slack4))
    return AxiomReport(
        metric=m.name,
        n_triples=n_triples,
        seed=seed,
        violations={"p1": p1, "p2": p2, "p3": p3, "p4": p4, "ps_triangle": ps_tri},
        worst={"x": x[w].tolist(), "y": y[w].tolist(), "z": z[w].tolist(), "slack": float(slack4[w])},
    )
