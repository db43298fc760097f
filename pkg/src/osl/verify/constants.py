"""Assembly of the weight-dependent constants C_{u,v} of the mixed weak-type bounds."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import e, log
from typing import Dict, Optional

from ..grid import CubeFamily
from ..symbols import SymbolSet
from ..weights import (Weight, a_1_constant, a_inf_constant, a_p_constant, a_p_u_constant,
                       rh_constant)


@dataclass
class ConstantsConfig:
    """Absolute constants left unspecified by the theory.

    ``tau_n`` is the sharp reverse Hölder constant, ``c_np`` the constant
    inside the logarithm of the homogeneous bound; ``c_nT`` holds the fitted
    per-theorem constants (frozen after calibration).
    """

    tau_n: float = 4.0
    c_n: float = 1.0
    c_np: float = 1.0
    c_X: float = 1.0
    dimension: str = "1d"
    c_nT: Dict[str, float] = field(default_factory=dict)
    fitted: Dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("tau_n", "c_n", "c_np", "c_X"):
            if getattr(self, name) < 1 and not self.fitted.get(name, False):
                raise ValueError("%s must be >= 1 unless flagged as fitted" % name)

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, obj):
        return cls(**(obj or {}))


@dataclass
class WeightProfile:
    """The component constants entering C_{u,v}."""

    a1_u: float
    rh_u: float
    q: float
    kappa_u: float
    ainf_uv: float
    ap_uv: float
    apu_v: float
    ainf_ur: float
    homogeneous: bool = False

    def to_json(self):
        return asdict(self)


def weight_profile(u: Weight, v: Weight, p: float, r: float, gamma: float, family: CubeFamily,
                   homogeneous: bool = False) -> WeightProfile:
    """Measured constants for the pair (u, v) with q = 2r - 1 and
    kappa_u = [u^r]_{A_inf}^{gamma/r}."""
    if r < 1:
        raise ValueError("r must be >= 1")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    q = 2 * r - 1
    uv = u * v
    ainf_ur = a_inf_constant(u ** r, family)
    return WeightProfile(
        a1_u=a_1_constant(u, family),
        rh_u=rh_constant(u, family, q, homogeneous),
        q=q,
        kappa_u=ainf_ur ** (gamma / r),
        ainf_uv=a_inf_constant(uv, family),
        ap_uv=a_p_constant(uv, family, p) if p > 1 else a_1_constant(uv, family),
        apu_v=a_p_u_constant(v, u, family, p),
        ainf_ur=ainf_ur,
        homogeneous=homogeneous,
    )


def thm1_formula(w: WeightProfile, r: float) -> float:
    base = w.kappa_u * w.rh_u ** (1 + w.q / (4 * r)) * w.a1_u * w.ainf_uv
    return base * log(e + base * w.apu_v)


def thm2_formula(w: WeightProfile, s: float, m: int, inv_r: float) -> float:
    pre = w.kappa_u * w.rh_u ** (1 + w.q / (4 * s)) * w.a1_u
    total = 0.0
    for h in range(m + 1):
        a = w.ainf_uv ** (1 + (m - h) * inv_r)
        total += pre * a * log(e + a * pre * w.apu_v) ** (1 + inv_r)
    return total


def thm3_formula(w: WeightProfile, s: float, m: int) -> float:
    pre = w.rh_u ** (1 + w.q / (4 * s)) * w.kappa_u * w.a1_u
    big = w.ainf_uv ** (1 + m)
    t1 = pre * big * log(e + w.kappa_u * w.a1_u * big * w.apu_v) ** (1 + m)
    t2 = pre * w.ainf_uv * log(e + w.kappa_u * w.a1_u * w.ainf_uv * w.apu_v)
    return t1 + t2


def teth_formula(w: WeightProfile, r: float, c_np: float = 1.0) -> float:
    pre = w.kappa_u * w.rh_u ** (1 + w.q / (4 * r)) * w.a1_u
    return pre * w.ap_uv * w.ainf_uv * log(e + c_np * pre * w.apu_v * w.ap_uv ** 3)


def bteth_formula(w: WeightProfile, s: float, m: int, inv_r: float) -> float:
    pre = w.kappa_u * w.rh_u ** (1 + w.q / (4 * s)) * w.a1_u
    total = 0.0
    for h in range(m + 1):
        tau = pre * (w.ap_uv * w.ainf_uv) ** ((m - h) * inv_r) * w.ap_uv
        total += tau * w.ainf_uv * log(e + tau * w.ap_uv ** 2 * w.apu_v) ** (1 + inv_r)
    return total


def thm1_constant(u, v, p, r, gamma, family, cfg: Optional[ConstantsConfig] = None,
                  profile: Optional[WeightProfile] = None) -> float:
    w = profile or weight_profile(u, v, p, r, gamma, family)
    return thm1_formula(w, r)


def thm2_constant(u, v, p, s, bset: SymbolSet, family, cfg: Optional[ConstantsConfig] = None,
                  gamma: float = 0.0, profile: Optional[WeightProfile] = None) -> float:
    w = profile or weight_profile(u, v, p, s, gamma, family)
    return thm2_formula(w, s, bset.m, bset.inv_r)


def thm3_constant(u, v, p, s, m, family, cfg: Optional[ConstantsConfig] = None,
                  gamma: float = 0.0, profile: Optional[WeightProfile] = None) -> float:
    if m < 0:
        raise ValueError("m must be nonnegative")
    w = profile or weight_profile(u, v, p, s, gamma, family)
    return thm3_formula(w, s, m)


def thm_homogeneous_constant(u, v, p, rs, mode, bset: Optional[SymbolSet], family,
                             cfg: Optional[ConstantsConfig] = None, gamma: float = 0.0,
                             profile: Optional[WeightProfile] = None) -> float:
    """mode 'T': the constant of the homogeneous bound for T; mode 'Tb': the
    sum over h of tau_h [uv]_{A_inf} log(e + tau_h [uv]_{A_p}^2 [v]_{A_p(u)})^{1+1/r}."""
    cfg = cfg or ConstantsConfig()
    w = profile or weight_profile(u, v, p, rs, gamma, family, homogeneous=True)
    if mode == "T":
        return teth_formula(w, rs, cfg.c_np)
    if mode == "Tb":
        bset = bset or SymbolSet([])
        return bteth_formula(w, rs, bset.m, bset.inv_r)
    raise ValueError("mode must be 'T' or 'Tb'")


def proof_gamma(l: int, m: int) -> int:
    """The proof-level count l * sum_h #C_h(b) = l 2^m, reported alongside
    the homogeneous commutator constant."""
    return l * 2 ** m
