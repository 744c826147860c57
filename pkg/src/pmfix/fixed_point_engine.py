"""Common fixed points of four self-maps on an ordered partial metric space.

Maps are vectorised: each takes an ``(n, d)`` array and returns an ``(n, d)``
array. The iteration alternates

    y_{2n+1} = f x_{2n} = T x_{2n+1},    y_{2n+2} = g x_{2n+1} = S x_{2n+2},

resolving each x through a preimage of T or S.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._parallel import pmap
from .control_functions import ControlPair
from .errors import NonComparablePairError
from .metric_core import DomainDescriptor, PartialMetric, as_point, as_points

Map = Callable[[np.ndarray], np.ndarray]

TOL_PRE = 1e-9
TOL_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class OrderPredicate:
    name: str
    leq: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, x, y) -> np.ndarray:
        return self.leq(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def comparable(self, x, y) -> np.ndarray:
        return self(x, y) | self(y, x)


usual_leq = OrderPredicate("usual-leq", lambda x, y: np.all(x <= y, axis=-1))


def check_order(order: OrderPredicate, dom: DomainDescriptor, n_triples: int = 2000, seed: int = 0) -> dict:
    """Sampled reflexivity / antisymmetry / transitivity counts."""
    g = dom.sample_grid
    rng = np.random.default_rng(seed)
    i = rng.integers(0, len(g), size=(n_triples, 3))
    x, y, z = g[i[:, 0]], g[i[:, 1]], g[i[:, 2]]
    refl = int(np.count_nonzero(~order(g, g)))
    anti = int(np.count_nonzero(order(x, y) & order(y, x) & np.any(x != y, axis=-1)))
    trans = int(np.count_nonzero(order(x, y) & order(y, z) & ~order(x, z)))
    return {"reflexive": refl, "antisymmetric": anti, "transitive": trans}


@dataclass(frozen=True, eq=False)
class MapQuartet:
    f: Map
    g: Map
    S: Map
    T: Map
    order: OrderPredicate = usual_leq
    preimage_S: Optional[Map] = None
    preimage_T: Optional[Map] = None
    name: str = "quartet"
    # compatibility of {f,S} and {g,T} cannot be machine-checked; callers declare it
    declared: dict = field(default_factory=dict)


def identity(x):
    return np.array(x, dtype=float, copy=True)


def identity_quartet() -> MapQuartet:
    return MapQuartet(identity, identity, identity, identity,
                      preimage_S=identity, preimage_T=identity, name="identity")


def example22_quartet(k: float = 2.0) -> MapQuartet:
    third = 1.0 / 3.0

    def f(x):
        return np.where(x <= third, x / 6.0, 1.0 / 18.0)

    def g(x):
        return np.where(x <= third, 0.0, third)

    def T(x):
        return np.where(x == 0, 0.0, np.where(x <= third, x, k))

    def S(x):
        return np.where(x == 0, 0.0, np.where(x <= third, third, k))

    def pre_T(y):
        ok = (y == 0) | ((y > 0) & (y <= third)) | (y == k)
        return np.where(ok, y, np.nan)

    def pre_S(y):
        ok = (y == 0) | (y == third) | (y == k)
        return np.where(ok, y, np.nan)

    return MapQuartet(f, g, S, T, usual_leq, pre_S, pre_T, name=f"example22(k={k:g})",
                      declared={"fS_compatible": True, "gT_weakly_compatible": True, "f_continuous": True})


def piecewise_map(pieces: list[dict]) -> Map:
    """Piecewise affine map on the line.

    Each piece is ``{"lo", "hi", "slope", "intercept"}`` with optional
    ``"lo_open"`` / ``"hi_open"`` flags; the first matching piece wins and
    points outside every piece map to NaN.
    """
    def fn(x):
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, np.nan)
        done = np.zeros(x.shape, dtype=bool)
        for pc in pieces:
            lo, hi = pc.get("lo", -np.inf), pc.get("hi", np.inf)
            m = (x > lo) if pc.get("lo_open") else (x >= lo)
            m &= (x < hi) if pc.get("hi_open") else (x <= hi)
            m &= ~done
            out = np.where(m, pc.get("slope", 0.0) * x + pc.get("intercept", 0.0), out)
            done |= m
        return out
    return fn


# -- hypotheses ------------------------------------------------------------------

@dataclass
class HypothesisReport:
    grid_size: int
    failures: dict
    first_failure: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(self.failures.values())

    def to_dict(self) -> dict:
        return {"grid_size": self.grid_size, "failures": dict(self.failures),
                "first_failure": dict(self.first_failure), "ok": self.ok}


def _range_residuals(m: PartialMetric, image: np.ndarray, target_map: Map,
                     preimage: Optional[Map], grid: np.ndarray) -> np.ndarray:
    if preimage is not None:
        with np.errstate(invalid="ignore"):
            back = target_map(preimage(image))
            r = m.ps(back, image)
        return np.where(np.isfinite(r), r, np.inf)
    cover = target_map(grid)
    out = np.empty(len(image))
    for s in range(0, len(image), 512):
        blk = image[s:s + 512]
        out[s:s + 512] = m.ps(cover[None, :, :], blk[:, None, :]).min(axis=1)
    return out


def check_dominated_dominating(q: MapQuartet, dom: DomainDescriptor, m: PartialMetric,
                               tol_pre: float = TOL_PRE) -> HypothesisReport:
    g = dom.sample_grid
    leq = q.order
    fx, gx, Sx, Tx = q.f(g), q.g(g), q.S(g), q.T(g)
    checks = {
        "f_dominated": ~leq(fx, g),
        "g_dominated": ~leq(gx, g),
        "S_dominating": ~leq(g, Sx),
        "T_dominating": ~leq(g, Tx),
        "f_range_in_T": _range_residuals(m, fx, q.T, q.preimage_T, g) > tol_pre,
        "g_range_in_S": _range_residuals(m, gx, q.S, q.preimage_S, g) > tol_pre,
    }
    failures = {k: int(np.count_nonzero(v)) for k, v in checks.items()}
    first = {k: g[int(np.argmax(v))].tolist() for k, v in checks.items() if v.any()}
    return HypothesisReport(len(g), failures, first)


# -- generalized distance and contraction ---------------------------------------

def _mp_terms(m: PartialMetric, q: MapQuartet, x: np.ndarray, y: np.ndarray):
    fx, gy, Sx, Ty = q.f(x), q.g(y), q.S(x), q.T(y)
    mp = np.maximum.reduce([
        m(Sx, Ty),
        m(fx, Sx),
        m(gy, Ty),
        (m(Sx, gy) + m(fx, Ty)) / 2.0,
    ])
    return mp, fx, gy


def compute_Mp(m: PartialMetric, q: MapQuartet, x, y) -> float:
    """max{p(Sx,Ty), p(fx,Sx), p(gy,Ty), (p(Sx,gy) + p(fx,Ty)) / 2}."""
    x, y = as_point(x), as_point(y)
    if m.domain is not None:
        m.domain.check(x, y)
    mp, _, _ = _mp_terms(m, q, x[None, :], y[None, :])
    return float(mp[0])


@dataclass
class ContractionReport:
    n_pairs: int = 0
    n_checked: int = 0
    n_noncomparable: int = 0
    violations: int = 0
    min_slack: float = float("inf")
    worst_pair: list = field(default_factory=list)
    violating_pairs: list = field(default_factory=list)
    max_listed: int = 50

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def merge(self, other: "ContractionReport") -> "ContractionReport":
        self.n_pairs += other.n_pairs
        self.n_checked += other.n_checked
        self.n_noncomparable += other.n_noncomparable
        self.violations += other.violations
        if other.min_slack < self.min_slack:
            self.min_slack, self.worst_pair = other.min_slack, other.worst_pair
        room = self.max_listed - len(self.violating_pairs)
        self.violating_pairs.extend(other.violating_pairs[:max(room, 0)])
        return self

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "n_checked": self.n_checked,
            "n_noncomparable": self.n_noncomparable,
            "violations": self.violations,
            "min_slack": self.min_slack if self.n_checked else None,
            "worst_pair": self.worst_pair,
            "violating_pairs": self.violating_pairs,
        }


def _pairs_array(pairs) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, tuple) and len(pairs) == 2 and isinstance(pairs[0], np.ndarray):
        return as_points(pairs[0]), as_points(pairs[1])
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr[:, 0, :], arr[:, 1, :]


def _slack_report(lhs, rhs, X, Y, tol_slack, max_listed=50) -> ContractionReport:
    slack = rhs - lhs
    bad = slack < -tol_slack
    rep = ContractionReport(n_pairs=len(X), n_checked=len(X), violations=int(np.count_nonzero(bad)))
    if len(X):
        w = int(np.argmin(slack))
        rep.min_slack = float(slack[w])
        rep.worst_pair = [X[w].tolist(), Y[w].tolist()]
        for i in np.flatnonzero(bad)[:max_listed]:
            rep.violating_pairs.append({"x": X[i].tolist(), "y": Y[i].tolist(), "slack": float(slack[i])})
    return rep


def verify_contraction(m: PartialMetric, q: MapQuartet, cp: ControlPair, pairs,
                       tol_slack: float = TOL_SLACK, strict: bool = False) -> ContractionReport:
    """Check psi(p(fx,gy)) <= psi(M_p(x,y)) - phi(M_p(x,y)) on each comparable pair.

    Non-comparable pairs are skipped and counted, or rejected with
    :class:`NonComparablePairError` when ``strict`` is set.
    """
    X, Y = _pairs_array(pairs)
    comp = q.order.comparable(X, Y)
    if strict and not comp.all():
        i = int(np.argmin(comp))
        raise NonComparablePairError(f"pair ({X[i].tolist()}, {Y[i].tolist()}) is not comparable")
    Xc, Yc = X[comp], Y[comp]
    mp, fx, gy = _mp_terms(m, q, Xc, Yc)
    lhs = cp.psi(m(fx, gy))
    rhs = cp.psi(mp) - cp.phi(mp)
    rep = _slack_report(lhs, rhs, Xc, Yc, tol_slack)
    rep.n_pairs = len(X)
    rep.n_noncomparable = int(len(X) - len(Xc))
    return rep


def sweep_contraction(m: PartialMetric, q: MapQuartet, cp: ControlPair, dom: DomainDescriptor,
                      tol_slack: float = TOL_SLACK, chunk: int = 200) -> ContractionReport:
    """verify_contraction over every ordered pair of grid points."""
    g = dom.sample_grid
    n = len(g)

    def block(start):
        xi = np.repeat(np.arange(start, min(start + chunk, n)), n)
        yi = np.tile(np.arange(n), len(xi) // n)
        return verify_contraction(m, q, cp, (g[xi], g[yi]), tol_slack)

    report = ContractionReport()
    for part in pmap(block, range(0, n, chunk)):
        report.merge(part)
    return report


# -- iteration ------------------------------------------------------------------

@dataclass
class IterationTrace:
    xs: list = field(default_factory=list)
    ys: list = field(default_factory=list)
    step_distances: list = field(default_factory=list)
    mp_values: list = field(default_factory=list)
    slacks: list = field(default_factory=list)
    status: str = "max-iters"
    converged_at: Optional[int] = None
    limit: Optional[list] = None
    residuals: dict = field(default_factory=dict)
    self_distance: Optional[float] = None
    compat_spot: list = field(default_factory=list)
    message: str = ""

    @property
    def n_steps(self) -> int:
        return len(self.ys)

    def descent_sequence(self, m: PartialMetric) -> np.ndarray:
        """p(y_{2n+1}, y_{2n}) along the trace, with y_0 taken to be x_0."""
        ys = [self.xs[0]] + self.ys
        a = np.array([ys[i] for i in range(0, len(ys) - 1, 2)])
        b = np.array([ys[i + 1] for i in range(0, len(ys) - 1, 2)])
        return m(b, a)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "n_steps": self.n_steps,
            "converged_at": self.converged_at,
            "limit": self.limit,
            "residuals": self.residuals,
            "self_distance": self.self_distance,
            "compat_fS_last": self.compat_spot[-1] if self.compat_spot else None,
            "message": self.message,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "x", "y", "ps_step", "mp", "slack"])
        for n in range(len(self.ys)):
            ps = self.step_distances[n - 1] if n >= 1 else ""
            w.writerow([n + 1, _fmt(self.xs[n + 1]), _fmt(self.ys[n]), _num(ps),
                        _num(self.mp_values[n]), _num(self.slacks[n])])
        return buf.getvalue()


def _fmt(p) -> str:
    return " ".join(repr(float(v)) for v in np.atleast_1d(p))


def _num(v) -> str:
    return "" if v == "" else repr(float(v))


def _resolve(m: PartialMetric, target: Map, preimage: Optional[Map], y: np.ndarray,
             cover: Optional[tuple], tol_pre: float):
    """Find x with target(x) = y; returns (x, residual) with x None on failure."""
    if preimage is not None:
        with np.errstate(invalid="ignore"):
            x = preimage(y[None, :])[0]
        if np.all(np.isfinite(x)):
            r = float(m.ps(target(x[None, :])[0], y))
            if r <= tol_pre:
                return x, r
        if cover is None:
            return None, float("inf")
    if cover is None:
        return None, float("inf")
    grid, image = cover
    res = m.ps(image, y[None, :])
    i = int(np.argmin(res))
    r = float(res[i])
    return (grid[i].copy(), r) if r <= tol_pre else (None, r)


def iterate(m: PartialMetric, q: MapQuartet, cp: ControlPair, x0, tol: float = 1e-10,
            max_iters: int = 100_000, window: int = 3, tol_pre: float = TOL_PRE,
            grid: Optional[DomainDescriptor] = None, check_hypotheses: bool = False) -> IterationTrace:
    """Run the alternating four-map iteration from ``x0``.

    Without preimage oracles, ``grid`` supplies the candidate set for the
    argmin fallback (ties go to the lowest grid index).
    """
    x = as_point(x0)
    trace = IterationTrace(xs=[x.tolist()])
    if check_hypotheses:
        if grid is None:
            raise ValueError("check_hypotheses needs a grid")
        hyp = check_dominated_dominating(q, grid, m, tol_pre)
        if not hyp.ok:
            trace.status = "hypothesis-violation"
            trace.message = json.dumps(hyp.failures, sort_keys=True)
            return trace

    cover_T = cover_S = None
    if grid is not None:
        cover_T = (grid.sample_grid, q.T(grid.sample_grid))
        cover_S = (grid.sample_grid, q.S(grid.sample_grid))

    prev_y = None
    run = 0
    for n in range(max_iters):
        if n % 2 == 0:
            y = q.f(x[None, :])[0]
            x_new, r = _resolve(m, q.T, q.preimage_T, y, cover_T, tol_pre)
            name = "T"
        else:
            y = q.g(x[None, :])[0]
            x_new, r = _resolve(m, q.S, q.preimage_S, y, cover_S, tol_pre)
            name = "S"
        if x_new is None:
            trace.status = "preimage-failure"
            trace.message = f"no {name}-preimage of {y.tolist()} (residual {r:.3g})"
            return trace

        a, b = (x, x_new) if n % 2 == 0 else (x_new, x)
        mp, fa, gb = _mp_terms(m, q, a[None, :], b[None, :])
        slack = cp.psi(mp) - cp.phi(mp) - cp.psi(m(fa, gb))
        trace.ys.append(y.tolist())
        trace.xs.append(x_new.tolist())
        trace.mp_values.append(float(mp[0]))
        trace.slacks.append(float(slack[0]))
        trace.compat_spot.append(float(m.ps(q.f(q.S(x_new[None, :])), q.S(q.f(x_new[None, :])))[0]))

        if prev_y is not None:
            d = float(m.ps(prev_y, y))
            trace.step_distances.append(d)
            run = run + 1 if d <= tol else 0
            if run >= window and _finish(m, q, y, tol, trace):
                trace.status = "converged"
                trace.converged_at = len(trace.step_distances) - window
                return trace
        prev_y = y
        x = x_new
    trace.status = "max-iters"
    _finish(m, q, np.asarray(trace.ys[-1]) if trace.ys else x, tol, trace)
    return trace


def _finish(m, q, z, tol, trace) -> bool:
    z = np.asarray(z, dtype=float)[None, :]
    res = {name: float(m.ps(fn(z), z)[0]) for name, fn in (("f", q.f), ("g", q.g), ("S", q.S), ("T", q.T))}
    trace.limit = z[0].tolist()
    trace.residuals = res
    trace.self_distance = float(m(z, z)[0])
    return all(v <= tol for v in res.values())


@dataclass
class UniquenessReport:
    limits: list
    statuses: list
    distinct_limits: list
    all_comparable: bool

    @property
    def unique(self) -> bool:
        return len(self.distinct_limits) == 1

    def to_dict(self) -> dict:
        return {"limits": self.limits, "statuses": self.statuses,
                "distinct_limits": self.distinct_limits, "all_comparable": self.all_comparable,
                "unique": self.unique}


def probe_uniqueness(m: PartialMetric, q: MapQuartet, cp: ControlPair, seeds, **opts) -> UniquenessReport:
    seeds = [as_point(s) for s in seeds]
    if len(seeds) < 2:
        raise ValueError("probe_uniqueness needs at least two seeds")
    tol = opts.get("tol", 1e-10)
    traces = pmap(lambda s: iterate(m, q, cp, s, **opts), seeds)
    limits = [t.limit for t in traces]
    distinct = []
    for t in traces:
        if t.status != "converged":
            continue
        z = np.asarray(t.limit)
        if all(float(m.ps(z, np.asarray(u))) > tol for u in distinct):
            distinct.append(t.limit)
    arr = np.asarray(distinct, dtype=float)
    comparable = bool(all(q.order.comparable(arr[i], arr[j])
                          for i in range(len(arr)) for j in range(i + 1, len(arr))))
    return UniquenessReport(limits, [t.status for t in traces], distinct, comparable)
