"""Control-function pairs (psi, phi) used to weaken a contraction condition."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NegativeInputError

Scalar = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ControlPair:
    """psi must be continuous, nondecreasing and vanish only at 0; phi must be
    lower semicontinuous and vanish only at 0.

    Both callables take and return float arrays. ``jump_points`` lists the
    places where phi is allowed to jump; lower semicontinuity is only probed there.
    """

    name: str
    psi: Scalar
    phi: Scalar
    jump_points: tuple = ()
    declared: dict = field(default_factory=lambda: {"psi_continuous": True, "phi_lsc": True})

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.psi(t), self.phi(t)


def eval_pair(cp: ControlPair, t: float) -> tuple[float, float]:
    t = float(t)
    if not np.isfinite(t):
        raise NegativeInputError(f"control functions need a finite argument, got {t}")
    if t < 0:
        raise NegativeInputError(f"control functions are defined on [0, inf), got {t}")
    psi_t, phi_t = cp(np.array(t))
    return float(psi_t), float(phi_t)


def linear(c: float) -> ControlPair:
    if not 0 < c < 1:
        raise ValueError("linear(c) needs 0 < c < 1")
    return ControlPair(f"linear({c:g})", lambda t: np.asarray(t, dtype=float) * 1.0,
                       lambda t: c * np.asarray(t, dtype=float))


def _psi22(t):
    t = np.asarray(t, dtype=float)
    return np.where(t <= 1 / 3, 3.0 * t, np.where(t <= 1.0, 1.0, t))


def _phi22(t):
    t = np.asarray(t, dtype=float)
    return np.where(t == 0, 0.0, np.where(t <= 1 / 3, t / 3.0, 1 / 9))


example22 = ControlPair("example22", _psi22, _phi22, jump_points=(1 / 3,))


def halving_pair() -> ControlPair:
    """psi(t) = t, phi(t) = t/2: satisfies psi(a) + phi(2a) <= psi(2a) with equality."""
    return ControlPair("halving", lambda t: np.asarray(t, dtype=float) * 1.0,
                       lambda t: 0.5 * np.asarray(t, dtype=float))


@dataclass
class PairReport:
    name: str
    grid_size: int
    monotonicity_violations: int
    positivity_violations: int
    zero_at_zero: bool
    lsc_jump_violations: int = 0
    declared: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return (self.zero_at_zero and not self.monotonicity_violations
                and not self.positivity_violations and not self.lsc_jump_violations)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "grid_size": self.grid_size,
            "monotonicity_violations": self.monotonicity_violations,
            "positivity_violations": self.positivity_violations,
            "zero_at_zero": self.zero_at_zero,
            "lsc_jump_violations": self.lsc_jump_violations,
            "declared": dict(self.declared),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def verify_pair(cp: ControlPair, grid) -> PairReport:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0 or grid[0] != 0.0 or np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted ascending and start at 0")
    psi, phi = cp(grid)
    mono = int(np.count_nonzero(np.diff(psi) < 0))
    pos = grid > 0
    positivity = int(np.count_nonzero(pos & ((psi <= 0) | (phi <= 0))))
    zero = bool(psi[0] == 0.0 and phi[0] == 0.0)

    # liminf of phi at a declared jump point, probed from both sides
    lsc = 0
    for j in cp.jump_points:
        side = j + np.array([-1e-9, -1e-7, 1e-9, 1e-7])
        side = side[side >= 0]
        _, phi_side = cp(side)
        _, phi_j = cp(np.array(j))
        lsc += int(np.min(phi_side) < phi_j - 1e-6)
    return PairReport(cp.name, len(grid), mono, positivity, zero, lsc, dict(cp.declared))


def _cumulative_trapezoid(density: Scalar, x: np.ndarray, quad_steps: int) -> np.ndarray:
    frac = np.linspace(0.0, 1.0, quad_steps + 1)
    s = x[..., None] * frac
    vals = np.asarray(density(s), dtype=float)
    if np.any(vals < 0):
        raise NegativeInputError("density must be nonnegative")
    return np.trapezoid(vals, s, axis=-1)


def integral_compose(cp: ControlPair, density: Scalar, quad_steps: int = 64) -> ControlPair:
    """Compose both control functions with Psi(x) = integral of density over [0, x]."""
    if quad_steps < 16:
        raise ValueError("quad_steps must be >= 16")

    def big_psi(u):
        return _cumulative_trapezoid(density, np.asarray(u, dtype=float), quad_steps)

    return ControlPair(
        f"integral({cp.name})",
        lambda t: big_psi(cp.psi(t)),
        lambda t: big_psi(cp.phi(t)),
        jump_points=cp.jump_points,
        declared=dict(cp.declared),
    )


def relation_violations(cp: ControlPair, a_grid, tol: float = 1e-12) -> int:
    """Count sampled a with psi(a) + phi(2a) > psi(2a)."""
    a = np.asarray(a_grid, dtype=float)
    return int(np.count_nonzero(cp.psi(a) + cp.phi(2 * a) > cp.psi(2 * a) + tol))


BUILTIN_PAIRS = {
    "example22": lambda **kw: example22,
    "linear": lambda c=0.5, **kw: linear(c),
    "halving": lambda **kw: halving_pair(),
}


def pair_from_spec(spec) -> ControlPair:
    """Build a pair from ``"name"`` or ``{"name": ..., **params}``."""
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    name = spec.pop("name")
    try:
        return BUILTIN_PAIRS[name](**spec)
    except KeyError:
        raise ValueError(f"unknown control pair {name!r}") from None
