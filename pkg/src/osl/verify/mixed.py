"""Both sides of the mixed weak-type inequalities, corpora and calibration."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import HypothesisFailed
from ..grid import CubeFamily, GridSpace
from ..operators import KernelOp, commutator_apply, multisymbol_apply
from ..orlicz import PowerLog, bp_check
from ..symbols import SymbolSet, bmo_norm
from ..weights import Weight
from .constants import (ConstantsConfig, WeightProfile, bteth_formula, teth_formula, thm1_formula,
                        thm2_formula, thm3_formula, weight_profile)

THEOREMS = ("thm1", "thm2", "thm3", "teth", "bteth")
HOMOGENEOUS = ("teth", "bteth")


def mixed_weak_lhs(Tfv, u: Weight, v: Weight, lam: float, mass) -> float:
    """uv({x : |T(fv)(x)|/v(x) > lam})."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    level = np.abs(np.asarray(Tfv, dtype=float)) / v.values
    sel = level > lam
    return float((u.values * v.values * np.asarray(mass))[sel].sum())


def phi_rho(t, rho: float):
    """t (1 + log^+ t)^rho."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        lg = np.where(t > 1, np.log(np.where(t > 0, t, 1.0)), 0.0)
    return t * (1.0 + lg) ** rho


def parse_lambda_grid(spec: str) -> np.ndarray:
    """'lo:hi:n' -> n log-spaced levels between lo and hi."""
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ValueError("lambda grid must look like lo:hi:n") from None
    if lo <= 0 or hi < lo or n < 1:
        raise ValueError("lambda grid needs 0 < lo <= hi and n >= 1")
    return np.logspace(np.log10(lo), np.log10(hi), n)


def default_lambda_grid(scale: float, n: int = 61) -> np.ndarray:
    return scale * np.logspace(-3, 3, n)


@dataclass
class MixedWeakReport:
    theorem: str
    lambdas: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    constant: float
    profile: dict
    symbol_norm: float = 1.0
    budget: Optional[float] = None
    extras: dict = field(default_factory=dict)

    @property
    def ratios(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.rhs > 0, self.lhs / self.rhs, np.where(self.lhs > 0, np.inf, 0.0))

    @property
    def sup_ratio(self) -> float:
        return float(self.ratios.max()) if len(self.ratios) else 0.0

    @property
    def passed(self) -> Optional[bool]:
        if self.budget is None:
            return None
        return bool(self.sup_ratio <= self.budget)

    def summary(self) -> dict:
        return {"theorem": self.theorem, "constant": self.constant, "profile": self.profile,
                "symbol_norm": self.symbol_norm, "sup_ratio": self.sup_ratio,
                "budget": self.budget, "passed": self.passed, **self.extras}

    def rows(self):
        return [(float(l), float(a), float(b), float(r))
                for l, a, b, r in zip(self.lambdas, self.lhs, self.rhs, self.ratios)]


@dataclass
class TheoremSetup:
    """Everything that does not depend on f or lambda: the weight constants,
    C_{u,v}, the symbol norm and the phi exponent."""

    theorem: str
    p: float
    r: float
    gamma: float
    m: int
    constant: float
    profile: WeightProfile
    symbol_norm: float
    phi_exponent: float

    def to_json(self):
        d = asdict(self)
        d["profile"] = self.profile.to_json()
        return d


def check_hypotheses(profile: WeightProfile, r: float, gamma: float):
    """The measured hypotheses: finite u in A_1 cap RH_q, v in A_p(u), and the
    Young function t^r (1 + log^+ t)^gamma in B_rho for rho > r."""
    for name in ("a1_u", "rh_u", "ainf_uv", "apu_v", "ap_uv"):
        val = getattr(profile, name)
        if not np.isfinite(val):
            raise HypothesisFailed("weight constant %s is not finite" % name, item=name)
    A = PowerLog(r, gamma)
    finite, est, _ = bp_check(A, r + 0.5)
    if not finite:
        raise HypothesisFailed("Young function fails B_rho at rho=%g" % (r + 0.5), item="B_p")


def theorem_setup(theorem: str, u: Weight, v: Weight, family: CubeFamily, p: float = 2.0,
                  r: float = 1.0, gamma: float = 0.0, bset: Optional[SymbolSet] = None,
                  m: Optional[int] = None, cfg: Optional[ConstantsConfig] = None) -> TheoremSetup:
    if theorem not in THEOREMS:
        raise ValueError("unknown theorem tag %r" % theorem)
    if p < 1:
        raise ValueError("p must be >= 1")
    cfg = cfg or ConstantsConfig()
    bset = bset if bset is not None else SymbolSet([])
    homogeneous = theorem in HOMOGENEOUS
    prof = weight_profile(u, v, p, r, gamma, family, homogeneous=homogeneous)
    check_hypotheses(prof, r, gamma)
    norm, expo = 1.0, 1.0
    if theorem == "thm1":
        C, mm, expo = thm1_formula(prof, r), 0, 0.0
    elif theorem == "teth":
        C, mm, expo = teth_formula(prof, r, cfg.c_np), 0, 0.0
    elif theorem in ("thm2", "bteth"):
        mm = bset.m
        C = (thm2_formula if theorem == "thm2" else bteth_formula)(prof, r, mm, bset.inv_r)
        norm = bset.compute_norms(family) if mm else 1.0
        expo = bset.inv_r
    else:  # thm3
        mm = bset.m if m is None else m
        C = thm3_formula(prof, r, mm)
        norm = bmo_norm(bset[0], family) ** mm if mm else 1.0
        expo = float(mm)
    return TheoremSetup(theorem, p, r, gamma, mm, C, prof, norm, expo)


def apply_theorem_operator(T: KernelOp, setup: TheoremSetup, bset: Optional[SymbolSet], g):
    """T g, T_b g (nested multi-symbol commutator) or T_b^m g."""
    if setup.theorem in ("thm1", "teth") or setup.m == 0:
        return T.apply(g)
    if setup.theorem == "thm3":
        return commutator_apply(T, bset[0], setup.m, g)
    return multisymbol_apply(T, bset, g)


def rhs_integral(f, u: Weight, v: Weight, lam, mass, norm: float, expo: float) -> np.ndarray:
    """int phi(|f| ||b|| / lam) u v for each lam (phi(t) = t (1 + log^+ t)^expo)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    uvm = u.values * v.values * np.asarray(mass)
    a = np.abs(np.asarray(f, dtype=float)) * norm
    return np.array([float((phi_rho(a / l, expo) * uvm).sum()) for l in lam])


def check_mixed_inequality(T: KernelOp, bset: Optional[SymbolSet], f, u: Weight, v: Weight,
                           theorem: str, family: CubeFamily, lam_grid=None,
                           cfg: Optional[ConstantsConfig] = None, p: float = 2.0, r: float = 1.0,
                           gamma: float = 0.0, m: Optional[int] = None,
                           setup: Optional[TheoremSetup] = None,
                           budget: Optional[float] = None) -> MixedWeakReport:
    """LHS and RHS (without the absolute constant c_{n,T}) over a lambda grid.

    The reported ratio is LHS / (C_{u,v} int phi(|f| ||b||/lam) uv); the
    inequality passes when the sup ratio does not exceed the budget c_{n,T}.
    """
    cfg = cfg or ConstantsConfig()
    setup = setup or theorem_setup(theorem, u, v, family, p, r, gamma, bset, m, cfg)
    mass = T.space.mass
    f = np.asarray(f, dtype=float)
    Tfv = apply_theorem_operator(T, setup, bset, f * v.values)
    if lam_grid is None:
        scale = float(np.abs(Tfv / v.values).max()) or 1.0
        lam_grid = default_lambda_grid(scale)
    lam_grid = np.asarray(lam_grid, dtype=float)
    lhs = np.array([mixed_weak_lhs(Tfv, u, v, l, mass) for l in lam_grid])
    rhs = setup.constant * rhs_integral(f, u, v, lam_grid, mass, setup.symbol_norm,
                                        setup.phi_exponent)
    if budget is None:
        budget = cfg.c_nT.get(theorem)
    return MixedWeakReport(theorem, lam_grid, lhs, rhs, setup.constant, setup.profile.to_json(),
                           setup.symbol_norm, budget)


def sup_ratio_exact(T: KernelOp, bset, f, u: Weight, v: Weight, setup: TheoremSetup) -> float:
    """sup over all lambda > 0 of LHS/RHS.

    LHS is a right-continuous step function of lambda and the RHS is
    decreasing, so the supremum is approached from the left at the jump
    points lambda = |T(fv)|/v(x); there LHS equals uv({level >= lambda}).
    """
    mass = T.space.mass
    Tfv = apply_theorem_operator(T, setup, bset, np.asarray(f, dtype=float) * v.values)
    level = np.abs(Tfv) / v.values
    uvm = u.values * v.values * mass
    jumps = np.unique(level[level > 0])
    if jumps.size == 0:
        return 0.0
    order = np.argsort(level)
    lv, w = level[order], uvm[order]
    tail = np.cumsum(w[::-1])[::-1]
    idx = np.searchsorted(lv, jumps, side="left")
    lhs = tail[idx]
    rhs = setup.constant * rhs_integral(f, u, v, jumps, mass, setup.symbol_norm, setup.phi_exponent)
    return float(np.max(lhs / rhs))


# --------------------------------------------------------------------------
# corpora


def calibration_corpus(space: GridSpace, seed: int = 0, n_random: int = 60) -> List[np.ndarray]:
    """Deltas at every point, adjacent dipoles, indicator bumps and random
    nonnegative functions."""
    n = space.n
    rng = np.random.default_rng(seed)
    out = [np.eye(n)[i] for i in range(n)]
    for i in range(0, n - 1, max(1, n // 32)):
        d = np.zeros(n)
        d[i], d[i + 1] = 1.0, -1.0
        out.append(d)
    out.extend(random_functions(space, rng, n_random))
    return out


def random_functions(space: GridSpace, rng, count: int) -> List[np.ndarray]:
    n = space.n
    out = []
    for k in range(count):
        kind = k % 3
        if kind == 0:
            a = int(rng.integers(0, n))
            L = int(rng.integers(1, max(2, n // 4)))
            f = np.zeros(n)
            f[a:a + L] = rng.uniform(0.5, 2.0)
        elif kind == 1:
            f = np.zeros(n)
            idx = rng.choice(n, size=min(n, 4), replace=False)
            f[idx] = rng.exponential(1.0, size=len(idx))
        else:
            f = rng.lognormal(0.0, 1.0, size=n) * (rng.uniform(size=n) < 0.3)
            if not f.any():
                f[int(rng.integers(0, n))] = 1.0
        out.append(f)
    return out


def heldout_corpus(space: GridSpace, seed: int = 1, count: int = 20,
                   lam_range=(1e-3, 1e3)) -> List[tuple]:
    """count new (f, lambda) pairs; lambda is drawn log-uniformly relative to
    the sup of |f|."""
    rng = np.random.default_rng(seed + 7919)
    fs = random_functions(space, rng, count)
    lo, hi = np.log10(lam_range[0]), np.log10(lam_range[1])
    return [(f, float(np.abs(f).max() * 10 ** rng.uniform(lo, hi))) for f in fs]


def fit_budget(T: KernelOp, bset, setups: Sequence[tuple], corpus: Sequence[np.ndarray]) -> float:
    """Largest exact sup ratio over the calibration corpus and weight pairs.

    ``setups`` holds (u, v, TheoremSetup) triples."""
    best = 0.0
    for u, v, setup in setups:
        for f in corpus:
            best = max(best, sup_ratio_exact(T, bset, f, u, v, setup))
    return best


def heldout_ratios(T: KernelOp, bset, setups: Sequence[tuple], heldout: Sequence[tuple],
                   budget: float) -> np.ndarray:
    """LHS / (c_{n,T} C_{u,v} int phi uv) for every held-out (f, lambda) and weight pair."""
    out = []
    for u, v, setup in setups:
        mass = T.space.mass
        for f, lam in heldout:
            Tfv = apply_theorem_operator(T, setup, bset, f * v.values)
            lhs = mixed_weak_lhs(Tfv, u, v, lam, mass)
            rhs = budget * setup.constant * rhs_integral(f, u, v, lam, mass, setup.symbol_norm,
                                                         setup.phi_exponent)[0]
            out.append(lhs / rhs if rhs > 0 else (np.inf if lhs > 0 else 0.0))
    return np.array(out)
