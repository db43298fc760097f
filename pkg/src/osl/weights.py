"""Weights on a finite space and the Muckenhoupt / reverse Hölder constants.

Every constant is a max over an explicit :class:`~osl.grid.CubeFamily`; the
family descriptor travels with the result.  Averages are taken against the
base measure (``space.mass``) unless stated otherwise.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .grid import CubeFamily, GridSpace


class Weight:
    """A strictly positive density against the base measure of a GridSpace."""

    def __init__(self, values, name: str = ""):
        values = np.asarray(values, dtype=float).ravel()
        if np.any(~np.isfinite(values)) or np.any(values <= 0):
            raise ValueError("weights must be finite and strictly positive")
        self.values = values
        self.name = name

    def __len__(self):
        return len(self.values)

    def __mul__(self, other: "Weight") -> "Weight":
        return Weight(self.values * other.values, name="(%s)*(%s)" % (self.name, other.name))

    def __pow__(self, s: float) -> "Weight":
        return Weight(self.values ** s, name="(%s)^%g" % (self.name, s))

    def measure(self, space: GridSpace, idx=None) -> float:
        wm = self.values * space.mass
        return float(wm.sum() if idx is None else wm[idx].sum())

    def to_json(self):
        return self.values.tolist()

    @classmethod
    def from_json(cls, obj, name=""):
        if isinstance(obj, dict):
            return cls(obj["values"], name=obj.get("name", name))
        return cls(obj, name=name)


def constant_weight(space: GridSpace, c: float = 1.0) -> Weight:
    return Weight(np.full(space.n, float(c)), name="const(%g)" % c)


def power_weight(space: GridSpace, a: float, x0: float = 0.0, floor: Optional[float] = None) -> Weight:
    """|x - x0|^a regularised by a floor offset (default: half a grid step)."""
    if space.coords is None:
        raise ValueError("power weights need point coordinates")
    if floor is None:
        floor = 0.5 / space.n
    return Weight((np.abs(space.coords - x0) + floor) ** a, name="pow(%g,%g)" % (a, x0))


def step_weight(space: GridSpace, lo: float, hi: float, cut: float = 0.5) -> Weight:
    if space.coords is None:
        raise ValueError("step weights need point coordinates")
    return Weight(np.where(space.coords < cut, lo, hi), name="step(%g,%g)" % (lo, hi))


def lognormal_weight(space: GridSpace, sigma: float = 0.5, seed: int = 0) -> Weight:
    rng = np.random.default_rng(seed)
    return Weight(np.exp(sigma * rng.standard_normal(space.n)), name="lognormal(%g,%d)" % (sigma, seed))


def weight_from_spec(space: GridSpace, spec) -> Weight:
    """Build a weight from a JSON spec: an explicit array or a generator dict."""
    if isinstance(spec, (list, tuple)):
        return Weight(spec)
    kind = spec.get("kind", "explicit")
    if kind == "explicit":
        return Weight(spec["values"])
    if kind == "constant":
        return constant_weight(space, spec.get("c", 1.0))
    if kind == "power":
        return power_weight(space, spec["a"], spec.get("x0", 0.0), spec.get("floor"))
    if kind == "step":
        return step_weight(space, spec["lo"], spec["hi"], spec.get("cut", 0.5))
    if kind == "lognormal":
        return lognormal_weight(space, spec.get("sigma", 0.5), spec.get("seed", 0))
    raise ValueError("unknown weight kind %r" % kind)


# --------------------------------------------------------------------------
# averages over a family


def _averages(family: CubeFamily, f: np.ndarray, u: Optional[np.ndarray] = None) -> np.ndarray:
    """Averages of f over every cube, against mass*u (u defaults to 1)."""
    m = family.space.mass if u is None else family.space.mass * u
    return (family.indicator @ (f * m)) / (family.indicator @ m)


def _cube_max(family: CubeFamily, vals: np.ndarray) -> np.ndarray:
    """Pointwise max over cubes containing x of per-cube values."""
    masked = np.where(family.indicator, vals[:, None], -np.inf)
    return masked.max(axis=0)


def maximal_average(family: CubeFamily, f: np.ndarray, u: Optional[np.ndarray] = None) -> np.ndarray:
    """M^F_u f(x) = max over family cubes Q containing x of the u-average of |f|."""
    return _cube_max(family, _averages(family, np.abs(f), u))


def a_p_constant(w: Weight, family: CubeFamily, p: float) -> float:
    if p <= 1:
        raise ValueError("p must exceed 1 (use a_1_constant)")
    a = _averages(family, w.values)
    b = _averages(family, w.values ** (-1.0 / (p - 1)))
    return float((a * b ** (p - 1)).max())


def a_1_constant(w: Weight, family: CubeFamily) -> float:
    return float((maximal_average(family, w.values) / w.values).max())


def a_inf_constant(w: Weight, family: CubeFamily) -> float:
    """Fujii–Wilson constant with the maximal function localised to sub-cubes of Q."""
    mass = family.space.mass
    avg = _averages(family, w.values)
    wQ = family.measures(w.values)
    contain = family.contains
    best = 0.0
    for q in range(len(family)):
        subs = np.flatnonzero(contain[:, q])
        local = np.where(family.indicator[subs], avg[subs, None], -np.inf).max(axis=0)
        inside = family.indicator[q]
        val = float((local[inside] * mass[inside]).sum() / wQ[q])
        best = max(best, val)
    return best


def rh_constant(w: Weight, family: CubeFamily, q: float, homogeneous: bool = False) -> float:
    if q < 1:
        raise ValueError("q must be >= 1")
    if q == 1:
        return 1.0
    mass = family.space.mass
    if not homogeneous:
        num = _averages(family, w.values ** q) ** (1.0 / q)
        return float((num / _averages(family, w.values)).max())
    one = family.dilated_indicator(1.0)
    cd = family.dilated_indicator(family.space.c_d)
    num = ((one @ (w.values ** q * mass)) / (one @ mass)) ** (1.0 / q)
    den = (cd @ (w.values * mass)) / (cd @ mass)
    return float((num / den).max())


def a_p_u_constant(v: Weight, u: Weight, family: CubeFamily, p: float) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        # [v]_{A_1(u)} = || M_u v / v ||_inf
        return float((maximal_average(family, v.values, u.values) / v.values).max())
    a = _averages(family, v.values, u.values)
    b = _averages(family, v.values ** (-1.0 / (p - 1)), u.values)
    return float((a * b ** (p - 1)).max())


def sharp_rh_exponent(w: Weight, family: CubeFamily, tau: float = 4.0):
    """t = 1 + 1/(tau [w]_{A_inf}) and the measured constant of the
    homogeneous reverse Hölder inequality at that exponent."""
    t = 1.0 + 1.0 / (tau * a_inf_constant(w, family))
    return t, rh_constant(w, family, t, homogeneous=True)


def crr_lemma3_ratio(w: Weight, family_members, space: GridSpace, eta: float, ap: float, p: float) -> float:
    """Ratio sum_Q w(Q) / ([w]_{A_p} w(union Q) / eta^p) for a sparse family."""
    wm = w.values * space.mass
    total = sum(float(wm[m].sum()) for m in family_members)
    union = np.zeros(space.n, dtype=bool)
    for m in family_members:
        union[m] = True
    return total / (ap * float(wm[union].sum()) / eta ** p)


@dataclass
class WeightConstants:
    a_p: Dict[float, float] = field(default_factory=dict)
    a_1: Optional[float] = None
    a_inf: Optional[float] = None
    rh: Dict[float, float] = field(default_factory=dict)
    a_p_u: Dict[float, float] = field(default_factory=dict)
    family: dict = field(default_factory=dict)

    def to_json(self):
        return {"a_p": {str(k): v for k, v in self.a_p.items()}, "a_1": self.a_1,
                "a_inf": self.a_inf, "rh": {str(k): v for k, v in self.rh.items()},
                "a_p_u": {str(k): v for k, v in self.a_p_u.items()}, "family": self.family}


def all_constants(w: Weight, family: CubeFamily, p: float = 2.0, q: float = 2.0,
                  u: Optional[Weight] = None, homogeneous: bool = False) -> WeightConstants:
    wc = WeightConstants(family=family.descriptor())
    wc.a_p[p] = a_p_constant(w, family, p)
    wc.a_1 = a_1_constant(w, family)
    wc.a_inf = a_inf_constant(w, family)
    wc.rh[q] = rh_constant(w, family, q, homogeneous)
    base = u if u is not None else Weight(np.ones(len(w)), name="1")
    wc.a_p_u[p] = a_p_u_constant(w, base, family, p)
    return wc


def load_weight(path, space: GridSpace) -> Weight:
    with open(path) as fh:
        return weight_from_spec(space, json.load(fh))
