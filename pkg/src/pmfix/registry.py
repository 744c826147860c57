"""Name lookups for everything a scenario file can refer to."""
from __future__ import annotations

from .metric_core import (PartialMetric, euclidean_metric, interval_metric, max_metric,
                          mixed_metric, sup_pair_metric)


def metric_from_name(name: str, k: float = 2.0) -> PartialMetric:
    if name == "max_metric":
        return max_metric
    if name == "interval_metric":
        return interval_metric
    if name in ("mixed_metric", "mixed"):
        return mixed_metric(k)
    if name == "sup_pair_metric":
        return sup_pair_metric
    if name == "euclidean":
        return euclidean_metric
    raise ValueError(f"unknown metric {name!r}")


BUILTINS = {
    "metrics": [
        ("max_metric", "p(x,y) = max{x,y} on the nonnegative reals"),
        ("interval_metric", "p([a,b],[c,d]) = max{b,d} - min{a,c}"),
        ("mixed_metric", "|x-y| on [0,1), max{x,y} otherwise, on [0,k]; Example 2.2"),
        ("sup_pair_metric", "max(sup x, sup y) on grid functions; integral-equation application"),
        ("euclidean", "Euclidean distance used as a zero-self-distance partial metric"),
    ],
    "control_pairs": [
        ("example22", "piecewise psi/phi paired with mixed_metric"),
        ("linear", "psi(t) = t, phi(t) = c t with 0 < c < 1"),
        ("halving", "psi(t) = t, phi(t) = t/2; meets psi(a) + phi(2a) <= psi(2a)"),
    ],
    "quartets": [
        ("example22", "four piecewise self-maps of [0,k] with exact preimages"),
        ("identity", "f = g = S = T = identity"),
        ("piecewise", "user-specified piecewise affine maps on the line"),
    ],
    "ifs_systems": [
        ("sierpinski", "three affine maps with ratio 1/2 onto the Sierpinski triangle"),
        ("dyadic-line", "{x/2, x/2 + 1/2}; attractor [0,1]"),
    ],
    "kernels": [
        ("F:scaled", "F(t,u) = a u (default a = h)"),
        ("F:scaled_t", "F(t,u) = a u t"),
        ("kappa:scaled", "kappa(t,s,v) = c v (default c = 2h)"),
        ("kappa:scaled_s", "kappa(t,s,v) = c v s"),
    ],
}


def list_builtins() -> str:
    from .cli import bundled_scenarios

    lines = []
    for group, items in BUILTINS.items():
        lines.append(f"{group}:")
        for name, note in items:
            lines.append(f"  {name:<18} {note}")
    lines.append("scenarios:")
    for name in bundled_scenarios():
        lines.append(f"  {name}")
    return "\n".join(lines) + "\n"
