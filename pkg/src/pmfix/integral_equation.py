"""Nonnegative solutions of F(t, x(t)) = integral over [0,1] of kappa(t, s, x(s)) ds
on an N-node grid, by alternating x <- F(., x) and x <- integral operator."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .control_functions import ControlPair, relation_violations, halving_pair
from .errors import ConditionViolationError, NegativeInputError
from .fixed_point_engine import MapQuartet, identity, usual_leq

Pointwise = Callable[[np.ndarray, np.ndarray], np.ndarray]
Kernel = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class IntegralProblem:
    F: Pointwise
    kappa: Kernel
    h: float
    n: int = 201
    control: ControlPair = field(default_factory=halving_pair)
    name: str = "integral"

    def __post_init__(self):
        if not 0 <= self.h < 0.25:
            raise ValueError("h must lie in [0, 1/4)")
        if self.n < 2:
            raise ValueError("need at least two grid nodes")

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n, 1.0 / (self.n - 1))
        w[0] = w[-1] = 0.5 / (self.n - 1)
        return w


def _grid_function(prob: IntegralProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = np.full(prob.n, float(x))
    if x.shape != (prob.n,):
        raise ValueError(f"expected {prob.n} grid values, got shape {x.shape}")
    if np.any(x < 0):
        raise NegativeInputError("grid functions must be nonnegative")
    return x


def apply_f(prob: IntegralProblem, x) -> np.ndarray:
    x = _grid_function(prob, x)
    out = np.asarray(prob.F(prob.t, x), dtype=float)
    if np.any(out < 0):
        raise NegativeInputError("F produced a negative value")
    return out


def apply_g(prob: IntegralProblem, x) -> np.ndarray:
    x = _grid_function(prob, x)
    t = prob.t
    K = np.asarray(prob.kappa(t[:, None], t[None, :], x[None, :]), dtype=float)
    if np.any(K < 0):
        raise NegativeInputError("kappa produced a negative value")
    return K @ prob.weights


def standard_probes(n: int) -> list[np.ndarray]:
    t = np.linspace(0.0, 1.0, n)
    return [np.ones(n), t, np.sin(np.pi * t), 0.5 + 0.5 * t * t, np.zeros(n)]


@dataclass
class ConditionReport:
    violations: dict
    mode: str

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def to_dict(self) -> dict:
        return {"violations": dict(self.violations), "mode": self.mode, "ok": self.ok}


def check_conditions(prob: IntegralProblem, probe_functions=None, control: Optional[ControlPair] = None,
                     a_max: float = 10.0, mode: str = "sup", tol: float = 1e-12) -> ConditionReport:
    """Check the three admissibility conditions.

    (i)  F(s, u(t)) <= h u(t) for every grid s, t and probe u;
    (ii) mode "pointwise": g(v)(t) <= 2h v(t) at every node;
         mode "sup": sup g(v) <= 2h sup v, the bound the convergence argument uses;
    (iii) psi(a) + phi(2a) <= psi(2a) on a grid of a in [0, a_max].
    """
    if mode not in ("sup", "pointwise"):
        raise ValueError("mode must be 'sup' or 'pointwise'")
    probes = standard_probes(prob.n) if probe_functions is None else list(probe_functions)
    if not probes:
        raise ValueError("need at least one probe function")
    cp = control or prob.control
    t = prob.t
    v1 = v2 = 0
    for u in probes:
        u = _grid_function(prob, u)
        Fu = np.asarray(prob.F(t[:, None], u[None, :]))
        v1 += int(np.count_nonzero(Fu > prob.h * u[None, :] + tol))
        gv = apply_g(prob, u)
        if mode == "pointwise":
            v2 += int(np.count_nonzero(gv > 2 * prob.h * u + tol))
        else:
            v2 += int(gv.max() > 2 * prob.h * u.max() + tol)
    v3 = relation_violations(cp, np.linspace(0.0, a_max, 1001))
    return ConditionReport({"i": v1, "ii": v2, "iii": v3}, mode)


@dataclass
class SolveResult:
    u: np.ndarray
    t: np.ndarray
    residual: np.ndarray
    status: str
    steps: int
    step_norms: list
    iterates: list = field(default_factory=list)
    converged_at: Optional[int] = None

    @property
    def residual_sup(self) -> float:
        return float(np.max(self.residual))

    @property
    def cycles(self) -> int:
        return (self.steps + 1) // 2

    def to_dict(self) -> dict:
        return {"status": self.status, "steps": self.steps, "cycles": self.cycles,
                "converged_at": self.converged_at, "sup_u": float(np.max(self.u)),
                "residual_sup": self.residual_sup}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "u", "residual"])
        for row in zip(self.t, self.u, self.residual):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def implicit_residual(prob: IntegralProblem, u) -> np.ndarray:
    return np.abs(apply_f(prob, u) - apply_g(prob, u))


def solve(prob: IntegralProblem, x0, tol: float = 1e-10, max_iters: int = 10_000,
          check: bool = True, keep_iterates: bool = False) -> SolveResult:
    if check:
        rep = check_conditions(prob)
        if not rep.ok:
            raise ConditionViolationError(f"conditions violated: {json.dumps(rep.violations)}", rep)
    x = _grid_function(prob, x0)
    norms = []
    iterates = [x] if keep_iterates else []
    for k in range(max_iters):
        nxt = apply_f(prob, x) if k % 2 == 0 else apply_g(prob, x)
        step = float(np.max(np.abs(nxt - x)))
        norms.append(step)
        if keep_iterates:
            iterates.append(nxt)
        x = nxt
        if step <= tol:
            return SolveResult(x, prob.t, implicit_residual(prob, x), "converged", k + 1, norms, iterates, k)
    return SolveResult(x, prob.t, implicit_residual(prob, x), "max-iters", max_iters, norms, iterates)


def integral_quartet(prob: IntegralProblem) -> MapQuartet:
    """Row-vectorised f, g with S = T = identity and the pointwise order."""
    def f(X):
        return np.array([apply_f(prob, r) for r in np.atleast_2d(X)])

    def g(X):
        return np.array([apply_g(prob, r) for r in np.atleast_2d(X)])

    return MapQuartet(f, g, identity, identity, usual_leq, identity, identity, name=f"integral({prob.name})")


# -- builtin F and kernel families ---------------------------------------------

def F_scaled(a: float) -> Pointwise:
    return lambda t, u: a * np.asarray(u, dtype=float) + 0.0 * np.asarray(t)


def F_scaled_t(a: float) -> Pointwise:
    return lambda t, u: a * np.asarray(u, dtype=float) * np.asarray(t, dtype=float)


def kappa_scaled(c: float) -> Kernel:
    return lambda t, s, v: c * np.asarray(v, dtype=float) + 0.0 * np.asarray(t) + 0.0 * np.asarray(s)


def kappa_scaled_s(c: float) -> Kernel:
    return lambda t, s, v: c * np.asarray(v, dtype=float) * np.asarray(s, dtype=float) + 0.0 * np.asarray(t)


F_BUILTINS = {"scaled": F_scaled, "scaled_t": F_scaled_t}
KAPPA_BUILTINS = {"scaled": kappa_scaled, "scaled_s": kappa_scaled_s}


def problem_from_config(cfg: dict) -> IntegralProblem:
    from .control_functions import pair_from_spec

    h = float(cfg["h"])
    fspec, kspec = dict(cfg["F"]), dict(cfg["kappa"])
    F = F_BUILTINS[fspec.pop("name")](fspec.get("a", h))
    kappa = KAPPA_BUILTINS[kspec.pop("name")](kspec.get("c", 2 * h))
    return IntegralProblem(F, kappa, h, int(cfg.get("N", 201)),
                           pair_from_spec(cfg.get("control_pair", "halving")), cfg.get("name", "integral"))
