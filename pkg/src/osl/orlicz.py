"""Young functions, Luxemburg norms and Orlicz maximal functions.

The Luxemburg norm of f over a region R with respect to a weight w is

    ||f||_{A(w),R} = inf{ lam > 0 : (1/w(R)) sum_R A(|f|/lam) w mass <= 1 },

computed here by bisection in log-scale, vectorised over many regions at once.
The bisection returns a bracket ``(lo, hi)`` with ``hi`` feasible, so callers
that need certified directions can use ``lo`` on one side of an inequality and
``hi`` on the other.
"""
from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from .grid import CubeFamily


class YoungFn:
    """Base class; subclasses implement ``__call__`` on arrays of t >= 0."""

    tag = "abstract"

    def __call__(self, t):
        raise NotImplementedError

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("Young functions are evaluated at t >= 0")
        out = self(t)
        return float(out) if out.ndim == 0 else out

    def inverse(self, y, tol: float = 1e-10):
        return inverse(self, y, tol)

    @property
    def c_A(self) -> float:
        """Submultiplicative constant measured on the grid {2^i} x {2^j}."""
        if getattr(self, "_c_A", None) is None:
            self._c_A = submultiplicative_constant(self)
        return self._c_A

    def is_power(self) -> Optional[float]:
        return None

    def to_json(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return "%s(%s)" % (self.__class__.__name__, self.to_json())


class Power(YoungFn):
    tag = "power"

    def __init__(self, r: float):
        if r < 1:
            raise ValueError("Power(r) needs r >= 1")
        self.r = float(r)

    def __call__(self, t):
        return np.power(np.asarray(t, dtype=float), self.r)

    def is_power(self):
        return self.r

    def to_json(self):
        return {"tag": self.tag, "r": self.r}


class PowerLog(YoungFn):
    """A(t) = t^r (1 + log^+ t)^gamma."""

    tag = "powerlog"

    def __init__(self, r: float, gamma: float):
        if r < 1 or gamma < 0:
            raise ValueError("PowerLog needs r >= 1 and gamma >= 0")
        self.r = float(r)
        self.gamma = float(gamma)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            lp = np.log(np.where(t > 1, t, 1.0))
            return np.power(t, self.r) * (1.0 + lp) ** self.gamma

    def is_power(self):
        return self.r if self.gamma == 0 else None

    def to_json(self):
        return {"tag": self.tag, "r": self.r, "gamma": self.gamma}


class ExpL(YoungFn):
    """A(t) = exp(t^r) - 1."""

    tag = "expl"

    def __init__(self, r: float):
        if r <= 0:
            raise ValueError("ExpL(r) needs r > 0")
        self.r = float(r)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore"):
            return np.expm1(np.power(t, self.r))

    def to_json(self):
        return {"tag": self.tag, "r": self.r}


class MaxOf(YoungFn):
    tag = "max"

    def __init__(self, a: YoungFn, b: YoungFn):
        self.a, self.b = a, b

    def __call__(self, t):
        return np.maximum(self.a(t), self.b(t))

    def is_power(self):
        pa, pb = self.a.is_power(), self.b.is_power()
        return pa if pa is not None and pa == pb else None

    def to_json(self):
        return {"tag": self.tag, "a": self.a.to_json(), "b": self.b.to_json()}


class Scaled(YoungFn):
    """t -> c * A(t)^p; used for the gauge Phi^p / [v]_{A_p(u)}."""

    tag = "scaled"

    def __init__(self, a: YoungFn, c: float = 1.0, p: float = 1.0):
        self.a, self.c, self.p = a, float(c), float(p)

    def __call__(self, t):
        with np.errstate(over="ignore"):
            return self.c * np.power(self.a(t), self.p)

    def to_json(self):
        return {"tag": self.tag, "a": self.a.to_json(), "c": self.c, "p": self.p}


class NumericComplementary(YoungFn):
    """Complementary function sup_s (t s - A(s)), evaluated numerically.

    The sup is located on a log-spaced bracketing grid and refined by
    golden-section search.  Values at which the sup is not attained inside the
    grid (e.g. t > 1 for A(t) = t) are reported as infinite.
    """

    tag = "complementary"
    _grid = np.logspace(-12, 12, 481)

    def __init__(self, a: YoungFn):
        self.a = a

    def _one(self, t: float) -> float:
        if t == 0:
            return 0.0
        s = self._grid
        with np.errstate(over="ignore", invalid="ignore"):
            vals = t * s - self.a(s)
        vals = np.where(np.isfinite(vals), vals, -np.inf)
        i = int(np.argmax(vals))
        if i == len(s) - 1:
            return math.inf
        best = max(float(vals[i]), 0.0)
        if i == 0:
            return best
        f = lambda x: -(t * x - float(self.a(x)))
        xm = optimize.golden(f, brack=(s[i - 1], s[i], s[i + 1]), tol=1e-12)
        return max(best, -f(xm), 0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        uniq, inv = np.unique(flat, return_inverse=True)
        vals = np.array([self._one(float(x)) for x in uniq])
        out = vals[inv].reshape(t.shape)
        return out

    def to_json(self):
        return {"tag": self.tag, "a": self.a.to_json()}


def young_from_json(obj) -> YoungFn:
    tag = obj["tag"]
    if tag == "power":
        return Power(obj["r"])
    if tag == "powerlog":
        return PowerLog(obj["r"], obj["gamma"])
    if tag == "expl":
        return ExpL(obj["r"])
    if tag == "max":
        return MaxOf(young_from_json(obj["a"]), young_from_json(obj["b"]))
    if tag == "scaled":
        return Scaled(young_from_json(obj["a"]), obj.get("c", 1.0), obj.get("p", 1.0))
    if tag == "complementary":
        return NumericComplementary(young_from_json(obj["a"]))
    raise ValueError("unknown Young function tag %r" % tag)


def phi(rho: float):
    """phi_rho(t) = t (1 + log^+ t)^rho, as used on the right-hand sides."""
    return PowerLog(1.0, rho)


# --------------------------------------------------------------------------
# inverse, conjugate bound, submultiplicativity, B_p


def inverse(A: YoungFn, y: float, tol: float = 1e-10) -> float:
    """Solve A(t) = y by bisection (A continuous and increasing where positive)."""
    if y < 0:
        raise ValueError("inverse needs y >= 0")
    if y == 0:
        return 0.0
    hi = 1.0
    while float(A(hi)) < y:
        hi *= 2.0
    lo = hi / 2.0
    while lo > 0 and float(A(lo)) >= y:
        lo /= 2.0
        if lo < 1e-300:
            return 0.0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if float(A(mid)) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def submultiplicative_constant(A: YoungFn, lo: int = -20, hi: int = 60) -> float:
    e = np.arange(lo, hi + 1, dtype=float)
    t = 2.0 ** e
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        at = A(t)
        num = A(2.0 ** (e[:, None] + e[None, :]))
        ratio = num / (at[:, None] * at[None, :])
    ratio = np.where(np.isnan(ratio), np.inf, ratio)
    return float(ratio.max())


def conjugate_product_ratio(A: YoungFn, grid=None) -> np.ndarray:
    """A^{-1}(t) * Abar^{-1}(t) / t on a log grid (bounded by 2 in theory)."""
    if grid is None:
        grid = np.logspace(-6, 8, 57)
    Ab = NumericComplementary(A)
    return np.array([inverse(A, t) * inverse(Ab, t) / t for t in grid])


def bp_check(A: YoungFn, p: float, cutoff: float = 1e6, eps_slope: float = 1e-3):
    """Numerical test of int_1^inf A(t)/t^p dt/t < inf.

    Integrates on [1, cutoff] in the variable x = log t; the decay is judged
    by the log-log slope of A(t)/t^p near the cutoff.  When the integrand
    decays like t^slope the analytic tail A(c)/c^p/|slope| is added.
    Returns (finite, estimate, slope).
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    if cutoff < 1e6:
        raise ValueError("cutoff must be at least 1e6")

    def g(x):
        with np.errstate(over="ignore"):
            return float(A(math.exp(x))) * math.exp(-p * x)

    L = math.log(cutoff)
    with np.errstate(over="ignore"):
        a1, a2 = float(A(cutoff / 2)), float(A(cutoff))
    if not (np.isfinite(a1) and np.isfinite(a2)) or a1 <= 0:
        return False, math.inf, math.inf
    slope = (math.log(a2) - math.log(a1)) / math.log(2.0) - p
    val, _ = integrate.quad(g, 0.0, L, limit=400)
    if slope < -eps_slope:
        tail = a2 / cutoff ** p / (-slope)
        return True, val + tail, slope
    return False, math.inf, slope


# --------------------------------------------------------------------------
# Luxemburg norms


def _phi_rows(A: YoungFn, F: np.ndarray, W: np.ndarray, lam: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        vals = A(F / lam[:, None])
        vals = np.where(W > 0, vals, 0.0) * W
    return vals.sum(axis=1)


def luxemburg_rows(F: np.ndarray, W: np.ndarray, A: YoungFn, tol: float = 1e-10,
                   method: str = "auto") -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised Luxemburg norms.

    F: (R, n) absolute values; W: (R, n) nonnegative weights (weight*mass,
    zero outside each region).  Returns brackets (lo, hi) per row with
    hi/lo - 1 <= tol and hi feasible.  ``method='auto'`` uses the closed form
    for power gauges; ``'bisect'`` always bisects.
    """
    F = np.abs(np.atleast_2d(np.asarray(F, dtype=float)))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if np.any(~np.isfinite(F)):
        raise ValueError("non-finite function values")
    F = np.where(W > 0, F, 0.0)
    tot = W.sum(axis=1)
    if np.any(tot <= 0):
        raise ValueError("every region needs positive weighted measure")
    Wn = W / tot[:, None]
    R = F.shape[0]
    fmax = F.max(axis=1)
    zero = fmax == 0
    r = A.is_power()
    if method == "auto" and r is not None:
        v = ((F ** r) * Wn).sum(axis=1) ** (1.0 / r)
        return v.copy(), v
    lo = np.zeros(R)
    hi = np.zeros(R)
    act = ~zero
    if not act.any():
        return lo, hi
    Fa, Wa = F[act], Wn[act]
    h = fmax[act].copy()
    # grow hi until feasible, shrink lo until infeasible
    for _ in range(2100):
        bad = _phi_rows(A, Fa, Wa, h) > 1
        if not bad.any():
            break
        h[bad] *= 2.0
    l = h.copy()
    for _ in range(2100):
        ok = _phi_rows(A, Fa, Wa, l) <= 1
        if not ok.any():
            break
        h[ok] = l[ok]
        l[ok] *= 0.5
    while True:
        gap = h / l - 1
        open_ = gap > tol
        if not open_.any():
            break
        mid = np.sqrt(l * h)
        feas = _phi_rows(A, Fa[open_], Wa[open_], mid[open_]) <= 1
        idx = np.flatnonzero(open_)
        h[idx[feas]] = mid[idx[feas]]
        l[idx[~feas]] = mid[idx[~feas]]
    lo[act] = l
    hi[act] = h
    return lo, hi


def luxemburg_bracket(f, w, region, A: YoungFn, mass, tol: float = 1e-10,
                      method: str = "auto") -> Tuple[float, float]:
    f = np.asarray(f, dtype=float)
    region = np.asarray(region)
    wv = np.ones_like(f) if w is None else np.asarray(getattr(w, "values", w), dtype=float)
    Wrow = np.zeros_like(f)
    Wrow[region] = wv[region] * np.asarray(mass)[region]
    lo, hi = luxemburg_rows(np.abs(f)[None, :], Wrow[None, :], A, tol, method)
    return float(lo[0]), float(hi[0])


def luxemburg_norm(f, w, region, A: YoungFn, mass, tol: float = 1e-10, method: str = "auto") -> float:
    """Luxemburg norm of f over ``region``; returns the feasible end of the bracket."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return luxemburg_bracket(f, w, region, A, mass, tol, method)[1]


def family_norms(f, family: CubeFamily, A: YoungFn, w=None, tol: float = 1e-10,
                 method: str = "auto", indicator: Optional[np.ndarray] = None,
                 bracket: bool = False):
    """Luxemburg norms of f over every cube (or every row of ``indicator``)."""
    f = np.abs(np.asarray(f, dtype=float))
    ind = family.indicator if indicator is None else indicator
    wv = np.ones_like(f) if w is None else np.asarray(getattr(w, "values", w), dtype=float)
    W = ind * (wv * family.space.mass)[None, :]
    F = np.broadcast_to(f, W.shape)
    lo, hi = luxemburg_rows(F, W, A, tol, method)
    return (lo, hi) if bracket else hi


def orlicz_maximal(f, family: CubeFamily, A: YoungFn, w=None, tol: float = 1e-10,
                   method: str = "auto") -> np.ndarray:
    """M^F_{A(w)} f(x) = max over family cubes Q containing x of ||f||_{A(w),Q}."""
    norms = family_norms(f, family, A, w, tol, method)
    return np.where(family.indicator, norms[:, None], -np.inf).max(axis=0)


def holder_check(f, g, A: YoungFn, B: YoungFn, C: YoungFn, region, w, mass, c: Optional[float] = None,
                 grid=None):
    """Generalised Hölder inequality ||fg||_A <= 2c ||f||_B ||g||_C.

    c is the measured constant of B^{-1}(t) C^{-1}(t) <= c A^{-1}(t) on the
    verification grid t in [e, 1e8]; a caller-supplied c that the grid
    violates raises ``HypothesisFailed``.  ``c_all`` is the same ratio over
    [1e-8, 1e8], for which the factor 2 bound is rigorous.
    """
    from .errors import HypothesisFailed

    if grid is None:
        grid = np.logspace(1.0 / math.log(10), 8, 60)
    ratio_grid = np.array([inverse(B, t) * inverse(C, t) / inverse(A, t) for t in grid])
    c_meas = float(ratio_grid.max())
    if c is not None and c_meas > c * (1 + 1e-9):
        raise HypothesisFailed("inverse inequality violated on the grid: %g > %g" % (c_meas, c))
    full = np.logspace(-8, 8, 81)
    c_all = float(max(inverse(B, t) * inverse(C, t) / inverse(A, t) for t in full))
    lhs = luxemburg_bracket(np.asarray(f) * np.asarray(g), w, region, A, mass)[0]
    nb = luxemburg_bracket(f, w, region, B, mass)[1]
    nc = luxemburg_bracket(g, w, region, C, mass)[1]
    ratio = lhs / (nb * nc) if nb * nc > 0 else 0.0
    return {"ratio": ratio, "c": c_meas, "c_all": c_all, "bound": 2 * c_all,
            "holds": ratio <= 2 * c_all}
