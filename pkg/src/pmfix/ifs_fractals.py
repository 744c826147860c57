"""Iterated function systems on partial metric spaces, driven through the
set operator T(A) = f_1(A) U ... U f_N(A) and the partial Hausdorff distance."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .control_functions import ControlPair, linear
from .errors import DegenerateBoundsError
from .fixed_point_engine import ContractionReport, _slack_report
from .metric_core import PartialMetric, as_points, euclidean_metric, unique_rows
from .partial_hausdorff import FiniteSet, _as_set, h_p

FAMILIES = ("psi-phi", "plain-contraction", "exp-F", "quadratic-F", "sqrt-F")


def affine(matrix, offset) -> Callable[[np.ndarray], np.ndarray]:
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    o = np.atleast_1d(np.asarray(offset, dtype=float))

    def fn(x):
        return np.asarray(x, dtype=float) @ M.T + o
    fn.matrix, fn.offset = M, o
    return fn


@dataclass(frozen=True, eq=False)
class IfsSystem:
    maps: tuple
    metric: PartialMetric = euclidean_metric
    control: ControlPair = field(default_factory=lambda: linear(0.5))
    family: str = "psi-phi"
    family_params: dict = field(default_factory=dict)
    name: str = "ifs"

    def __post_init__(self):
        if len(self.maps) < 1:
            raise ValueError("an IFS needs at least one map")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "plain-contraction" and not 0 < self.family_params.get("k", -1) < 1:
            raise ValueError("plain-contraction needs 0 < k < 1")
        if self.family.endswith("-F") and not self.family_params.get("tau", -1) > 0:
            raise ValueError(f"{self.family} needs tau > 0")


def sierpinski_system(family: str = "plain-contraction") -> IfsSystem:
    half = [[0.5, 0.0], [0.0, 0.5]]
    maps = (affine(half, [0.0, 0.0]), affine(half, [0.5, 0.0]), affine(half, [0.25, math.sqrt(3) / 4]))
    return IfsSystem(maps, euclidean_metric, linear(0.5), family, {"k": 0.5}, "sierpinski")


def cantor_line_system() -> IfsSystem:
    """{x/2, x/2 + 1/2}: the attractor is [0, 1]."""
    maps = (affine([[0.5]], [0.0]), affine([[0.5]], [0.5]))
    return IfsSystem(maps, euclidean_metric, linear(0.5), "plain-contraction", {"k": 0.5}, "dyadic-line")


def _merge_pairs(m: PartialMetric, pts: np.ndarray, radius: float) -> np.ndarray:
    """Index pairs (i < j) with p^S(pts[i], pts[j]) <= radius."""
    if m.euclidean:
        # zero self-distance, so p^S = 2p
        pairs = cKDTree(pts).query_pairs(radius / 2 * (1 + 1e-9), output_type="ndarray")
        if len(pairs) == 0:
            return pairs.reshape(0, 2)
        keep = m.ps(pts[pairs[:, 0]], pts[pairs[:, 1]]) <= radius
        return pairs[keep]
    found = []
    for i in range(len(pts) - 1):
        d = m.ps(pts[i][None, :], pts[i + 1:])
        for j in np.flatnonzero(d <= radius):
            found.append((i, i + 1 + j))
    return np.array(found, dtype=int).reshape(-1, 2)


def merge_points(m: PartialMetric, pts: np.ndarray, radius: float) -> np.ndarray:
    """Exact dedup, then a greedy scan in order dropping any point within
    ``radius`` (in p^S) of an already kept one."""
    pts = unique_rows(pts)
    if radius <= 0 or len(pts) < 2:
        return pts
    pairs = _merge_pairs(m, pts, radius)
    if len(pairs) == 0:
        return pts
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    starts = np.searchsorted(pairs[:, 0], np.arange(len(pts) + 1))
    keep = np.ones(len(pts), dtype=bool)
    for i in np.unique(pairs[:, 0]):
        if keep[i]:
            keep[pairs[starts[i]:starts[i + 1], 1]] = False
    return pts[keep]


def hutchinson(sys: IfsSystem, A, merge_radius: float = 0.0) -> FiniteSet:
    A = _as_set(A)
    images = np.concatenate([f(A.points) for f in sys.maps])
    return FiniteSet(merge_points(sys.metric, images, merge_radius), dedup=False)


@dataclass
class AttractorRun:
    final: FiniteSet
    hp_steps: list
    sizes: list
    status: str
    tol: float
    merge_radius: float
    history: list = field(default_factory=list)

    @property
    def n_iters(self) -> int:
        return len(self.hp_steps)

    def steps_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "hp_step", "size"])
        for i, (h, s) in enumerate(zip(self.hp_steps, self.sizes[1:])):
            w.writerow([i, repr(float(h)), s])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"status": self.status, "n_iters": self.n_iters, "tol": self.tol,
                "merge_radius": self.merge_radius, "hp_steps": [float(h) for h in self.hp_steps],
                "sizes": self.sizes, "final_size": len(self.final)}


def iterate_attractor(sys: IfsSystem, A0, tol: float = 1e-4, max_iters: int = 60,
                      merge_radius: Optional[float] = None, keep_history: bool = False) -> AttractorRun:
    """Apply T until H_p(A_m, A_{m+1}) <= tol.

    On convergence the estimate is A_m, the set whose image was measured to be
    within ``tol``; on max-iters it is the last set produced.
    """
    if merge_radius is None:
        merge_radius = tol / 10
    A = _as_set(A0)
    steps, sizes = [], [len(A)]
    history = [A] if keep_history else []
    for _ in range(max_iters):
        B = hutchinson(sys, A, merge_radius)
        h = h_p(sys.metric, A, B)
        steps.append(h)
        sizes.append(len(B))
        if keep_history:
            history.append(B)
        if h <= tol:
            return AttractorRun(A, steps, sizes, "converged", tol, merge_radius, history)
        A = B
    return AttractorRun(A, steps, sizes, "max-iters", tol, merge_radius, history)


def compute_MT(sys: IfsSystem, A, B) -> float:
    A, B = _as_set(A), _as_set(B)
    m = sys.metric
    TA, TB = hutchinson(sys, A), hutchinson(sys, B)
    T2A = hutchinson(sys, TA)
    return max(
        h_p(m, A, B),
        h_p(m, A, TA),
        h_p(m, B, TB),
        h_p(m, T2A, TA),
        h_p(m, T2A, B),
        h_p(m, T2A, TB),
        (h_p(m, A, TB) + h_p(m, B, TA)) / 2,
    )


def verify_ifs_contraction(sys: IfsSystem, pairs, tol_slack: float = 1e-10) -> ContractionReport:
    if not pairs:
        raise ValueError("no set pairs given")
    cp, m = sys.control, sys.metric
    lhs, rhs, xs, ys = [], [], [], []
    for A, B in pairs:
        A, B = _as_set(A), _as_set(B)
        mt = compute_MT(sys, A, B)
        h = h_p(m, hutchinson(sys, A), hutchinson(sys, B))
        lhs.append(float(cp.psi(np.array(h))))
        rhs.append(float(cp.psi(np.array(mt)) - cp.phi(np.array(mt))))
        xs.append(A.points.ravel())
        ys.append(B.points.ravel())
    X = np.empty(len(xs), dtype=object)
    Y = np.empty(len(ys), dtype=object)
    X[:], Y[:] = xs, ys
    return _slack_report(np.array(lhs), np.array(rhs), X, Y, tol_slack)


@dataclass
class FamilyReport:
    family: str
    params: dict
    distance: str
    per_map: list

    @property
    def violations(self) -> int:
        return sum(r["violations"] for r in self.per_map)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params), "distance": self.distance,
                "per_map": self.per_map, "violations": self.violations}


def family_holds(family: str, params: dict, d_img: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Boolean mask: does the family inequality hold for image distance d_img vs d?"""
    tol = 1e-12
    if family == "plain-contraction":
        return d_img <= params["k"] * d + tol
    tau = params["tau"]
    if family == "exp-F":
        return d_img * np.exp(d_img - d) <= np.exp(-tau) * d + tol
    if family == "quadratic-F":
        return d_img * (d_img + 1) <= np.exp(-tau) * d * (d + 1) + tol
    if family == "sqrt-F":
        power = params.get("power", 1)
        return d_img <= d / (1 + tau * np.sqrt(d)) ** power + tol
    raise ValueError(f"family {family!r} has no pointwise predicate")


def check_family(sys: IfsSystem, sample_pairs, distance: str = "ps",
                 family: Optional[str] = None, params: Optional[dict] = None) -> FamilyReport:
    """Evaluate the family's defining inequality for every map on every pair.

    ``distance`` picks d = p^S ("ps", default) or d = p ("p"). F-families skip
    pairs whose images coincide.
    """
    family = family or sys.family
    params = dict(sys.family_params if params is None else params)
    arr = np.asarray(sample_pairs, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    X, Y = arr[:, 0, :], arr[:, 1, :]
    dist = sys.metric.ps if distance == "ps" else sys.metric
    d = dist(X, Y)
    out = []
    for i, f in enumerate(sys.maps):
        fx, fy = f(X), f(Y)
        di = dist(fx, fy)
        active = np.ones(len(X), dtype=bool)
        if family != "plain-contraction":
            active = np.any(fx != fy, axis=-1)
        ok = family_holds(family, params, di[active], d[active])
        out.append({"map": i, "checked": int(active.sum()), "skipped": int((~active).sum()),
                    "violations": int(np.count_nonzero(~ok))})
    return FamilyReport(family, params, distance, out)


# -- rendering -----------------------------------------------------------------

def render_attractor(run, width: int, height: int, bounds) -> np.ndarray:
    """Binary occupancy raster, row 0 at the top. ``bounds`` = (xmin, xmax, ymin, ymax)."""
    pts = run.final.points if isinstance(run, AttractorRun) else _as_set(run).points
    xmin, xmax, ymin, ymax = (float(b) for b in bounds)
    if width <= 0 or height <= 0 or not xmax > xmin or not ymax > ymin:
        raise DegenerateBoundsError(f"cannot raster {width}x{height} over {bounds}")
    x = pts[:, 0]
    y = pts[:, 1] if pts.shape[1] > 1 else np.zeros(len(pts))
    ix = np.floor((x - xmin) / (xmax - xmin) * width).astype(np.int64)
    iy = np.floor((y - ymin) / (ymax - ymin) * height).astype(np.int64)
    ix[ix == width] = width - 1
    iy[iy == height] = height - 1
    inside = (ix >= 0) & (ix < width) & (iy >= 0) & (iy < height)
    img = np.zeros((height, width), dtype=bool)
    img[height - 1 - iy[inside], ix[inside]] = True
    return img


def to_ppm(img: np.ndarray) -> bytes:
    h, w = img.shape
    rgb = np.repeat(np.where(img, 255, 0).astype(np.uint8)[:, :, None], 3, axis=2)
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def from_ppm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6" or parts[2] != b"255":
        raise ValueError("not a binary P6 image with maxval 255")
    w, h = (int(v) for v in parts[1].split())
    rgb = np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)
    return rgb[:, :, 0] > 0


# -- config ----------------------------------------------------------------------

def system_from_config(cfg: dict) -> IfsSystem:
    from .registry import metric_from_name
    from .control_functions import pair_from_spec

    if cfg.get("builtin") == "sierpinski":
        base = sierpinski_system()
        maps = base.maps
    else:
        maps = tuple(affine(mp["matrix"], mp["offset"]) for mp in cfg["maps"] if mp.get("type", "affine") == "affine")
        if len(maps) != len(cfg["maps"]):
            raise ValueError("only affine maps are supported in IFS configs")
    return IfsSystem(
        maps,
        metric_from_name(cfg.get("metric", "euclidean")),
        pair_from_spec(cfg.get("control_pair", {"name": "linear", "c": 0.5})),
        cfg.get("family", "psi-phi"),
        dict(cfg.get("params", {})),
        cfg.get("name", "ifs"),
    )


def seed_set(cfg_points, d: int) -> FiniteSet:
    return FiniteSet(as_points(cfg_points, d))
