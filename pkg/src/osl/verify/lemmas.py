"""Quantitative checks of the auxiliary lemmas behind the mixed weak-type bounds.

Each check returns the smallest constant that makes the inequality hold on
the given instances ("fitted constant"); finite and stable values are the
testable content, the absolute constants themselves being unspecified.
"""
from __future__ import annotations

import itertools
from math import ceil, e, log, log2
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import HypothesisFailed
from ..grid import CubeFamily, DyadicSystem
from ..orlicz import PowerLog, YoungFn, luxemburg_rows, orlicz_maximal
from ..sparse import SparseFamily, principal_cubes, witness_sets
from ..weights import Weight, a_inf_constant, a_p_constant, a_p_u_constant, rh_constant


# --------------------------------------------------------------------------
# double sum lemma


def _alpha_grid(J, K, g1, g2, beta, delta, rho1, rho2):
    J = np.asarray(J, dtype=float)
    K = np.asarray(K, dtype=float)
    first = g1 * 2.0 ** (-K) * np.where(J > 0, J, 0.0 if rho1 > 0 else 1.0) ** rho1
    if beta == 0:
        return np.zeros(np.broadcast(J, K).shape)
    # the second term in log2 form avoids overflow of 2^(delta k)
    lk = np.where(K > 0, np.log2(np.where(K > 0, K, 1.0)), 0.0)
    lb = log2(beta * g2) - J - K + delta * K + rho2 * lk
    second = np.where((K == 0) & (rho2 > 0), 0.0, 2.0 ** np.minimum(lb, 1000.0))
    return np.minimum(first, second)


def lemma_sum_bound(g1: float, g2: float, beta: float, delta: float, rho1: float, rho2: float,
                    gamma: float = 1.0, j_max: int = 200, k_max: int = 200,
                    c: Optional[float] = None, reference: int = 1000) -> dict:
    """Truncated double sum of alpha_{j,k} = min{g1 2^-k j^rho1, beta g2 2^-j 2^-k 2^(delta k) k^rho2}.

    Returns the sum over j <= j_max, k <= k_max, the relative tail (measured
    against a reference truncation), the constant c_fit making
    sum <= c g1 log2(e + g2)^(1+rho1) + beta/(2 gamma) tight, and the bound
    and pass flag for a supplied c (default: c_fit).  Conventions: 0^0 = 1,
    min{., 0} = 0 when beta = 0.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if min(g1, g2, gamma) < 1:
        raise ValueError("gamma_1, gamma_2, gamma must be >= 1")
    J, K = np.meshgrid(np.arange(j_max + 1), np.arange(k_max + 1), indexing="ij")
    total = float(_alpha_grid(J, K, g1, g2, beta, delta, rho1, rho2).sum())
    N = max(reference, j_max + 1, k_max + 1)
    Jr, Kr = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    full = float(_alpha_grid(Jr, Kr, g1, g2, beta, delta, rho1, rho2).sum())
    tail = max(full - total, 0.0)
    main = g1 * log2(e + g2) ** (1 + rho1)
    c_fit = max(total - beta / (2 * gamma), 0.0) / main
    cc = c_fit if c is None else c
    bound = cc * main + beta / (2 * gamma)
    return {"sum": total, "tail": tail, "rel_tail": tail / full if full > 0 else 0.0,
            "c_fit": c_fit, "bound": bound, "pass": total <= bound * (1 + 1e-12)}


LEMMA1_SWEEP = list(itertools.product([1, 10, 100], [1, 10, 100], [1, 1000], [0, 2, 8],
                                      [0, 1], [0, 1]))


def lemma1_sweep(deltas=(0, 2, 8), gamma: float = 1.0) -> List[dict]:
    out = []
    for g1, g2, beta, delta, r1, r2 in LEMMA1_SWEEP:
        if delta not in deltas:
            continue
        res = lemma_sum_bound(g1, g2, beta, delta, r1, r2, gamma)
        res.update(params=(g1, g2, beta, delta, r1, r2))
        out.append(res)
    return out


# --------------------------------------------------------------------------
# reverse Hölder type lemmas


def _sharp_s(u: Weight, r: float, family: CubeFamily, tau_n: float) -> float:
    return 1.0 + 1.0 / (2.0 * tau_n * a_inf_constant(u ** r, family))


def random_subsets(rng, members: np.ndarray, count: int) -> List[np.ndarray]:
    out = []
    for _ in range(count):
        keep = rng.uniform(size=len(members)) < rng.uniform(0.05, 0.95)
        if not keep.any():
            keep[int(rng.integers(0, len(members)))] = True
        out.append(members[keep])
    return out


def rhs_rho_check(u: Weight, family: CubeFamily, r: float = 1.0, tau_n: float = 4.0,
                  n_subsets: int = 50, seed: int = 0, homogeneous: bool = False) -> float:
    """Fitted constant C in
    u^{sr}(E)/u^{sr}(Q) <= C [u]_{RH_q}^{q/4} (u(E)/u(Q))^{1/4}
    (Q replaced by its c_d-dilation in the denominators in the homogeneous case)."""
    q = 2 * r - 1
    s = _sharp_s(u, r, family, tau_n)
    rh = rh_constant(u, family, q, homogeneous)
    mass = family.space.mass
    usr = u.values ** (s * r) * mass
    u1 = u.values * mass
    rng = np.random.default_rng(seed)
    ref = family.dilated_indicator(family.space.c_d) if homogeneous else family.indicator
    best = 0.0
    for i, mem in enumerate(family.members):
        den_sr = usr[ref[i]].sum()
        den_1 = u1[ref[i]].sum()
        for E in random_subsets(rng, mem, n_subsets):
            lhs = usr[E].sum() / den_sr
            rhs = rh ** (q / 4) * (u1[E].sum() / den_1) ** 0.25
            best = max(best, lhs / rhs)
    return best


def prom_a_check(u: Weight, family: CubeFamily, r: float = 1.0, gamma: float = 1.0,
                 tau_n: float = 4.0, n_subsets: int = 20, seed: int = 0,
                 homogeneous: bool = False) -> float:
    """Fitted constant C in
    ||chi_G u||_{A,Q} <= C kappa_u [u]_{RH_q}^{1+q/(4r)} <u>_Q <chi_G>^u_{Q,s}
    with A(t) = t^r (1 + log^+ t)^gamma and s = 4(1 + 1/(2 tau_n [u^r]_{A_inf})) r.
    In the homogeneous form the norm is over 1Q, <u> over c_d^3 Q and the
    u-average of chi_G over c_d Q."""
    q = 2 * r - 1
    ainf_r = a_inf_constant(u ** r, family)
    s = 4 * (1 + 1 / (2 * tau_n * ainf_r)) * r
    kappa = ainf_r ** (gamma / r)
    rh = rh_constant(u, family, q, homogeneous)
    A = PowerLog(r, gamma)
    mass = family.space.mass
    cd = family.space.c_d
    if homogeneous:
        norm_reg = family.dilated_indicator(1.0)
        avg_reg = family.dilated_indicator(cd ** 3)
        g_reg = family.dilated_indicator(cd)
    else:
        norm_reg = avg_reg = g_reg = family.indicator
    u1 = u.values * mass
    rng = np.random.default_rng(seed)
    best = 0.0
    for i, mem in enumerate(family.members):
        nreg = np.flatnonzero(norm_reg[i])
        avg_u = u1[avg_reg[i]].sum() / mass[avg_reg[i]].sum()
        uQ = u1[g_reg[i]].sum()
        Gs = random_subsets(rng, nreg, n_subsets)
        F = np.zeros((len(Gs), family.space.n))
        for k, G in enumerate(Gs):
            F[k, G] = u.values[G]
        W = np.broadcast_to(np.where(norm_reg[i], mass, 0.0), F.shape)
        norms = luxemburg_rows(F, W, A)[1]
        for k, G in enumerate(Gs):
            gin = G[g_reg[i][G]]
            frac = u1[gin].sum() / uQ
            if frac == 0:
                continue
            rhs = kappa * rh ** (1 + q / (4 * r)) * avg_u * frac ** (1 / s)
            best = max(best, norms[k] / rhs)
    return best


# --------------------------------------------------------------------------
# E_Q peeling lemma


def peel_layers(system: DyadicSystem, ids: Sequence[int]) -> Dict[int, int]:
    """Layer index i of each cube: S^0 = maximal cubes, S^1 = maximal among
    the rest, ...  (equals the number of strict family ancestors)."""
    s = set(ids)
    return {c: sum(1 for a in system.ancestors(c) if a in s) for c in ids}


def crr_lemma2_check(family: SparseFamily, f, w: Weight, A: YoungFn, ainf: float,
                     C: float = 1.0, homogeneous: bool = False) -> dict:
    """Peeling construction of the sets E~_Q on every stopping class
    2^{-j-1} <= ||f||_{A(w),Q} <= 2^{-j}.

    E~_Q = Q minus the class cubes of layer i + nu inside Q, nu = ceil(C [w]_{A_inf}).
    Reports the maximal overlap of the E~_Q (to compare with nu) and the
    fitted constant of w(Q)||f||_{A(w),Q} <= K (A(2^{j+1})/2^{j+1}) int_{E~_Q} A(|f|) w,
    normalised by the stated K = 4 c_A (4 A(2^{j+2})/2^{j+2} in the
    homogeneous form).
    """
    system = family.system
    mass = system.space.mass
    wm = w.values * mass
    f = np.abs(np.asarray(f, dtype=float))
    ids = family.cube_ids
    if not ids:
        return {"overlap": 0, "nu": 0, "ratio": 0.0, "classes": 0}
    ind = np.zeros((len(ids), system.space.n), dtype=bool)
    for i, c in enumerate(ids):
        ind[i, system.cubes[c].members] = True
    norms = luxemburg_rows(np.broadcast_to(f, ind.shape), ind * wm[None, :], A)[1]
    nu = int(ceil(C * ainf))
    Af = A(f) * wm
    cA = A.c_A
    classes: Dict[int, List[int]] = {}
    for i, nv in enumerate(norms):
        if nv <= 0:
            continue
        j = int(np.floor(-np.log2(nv)))
        if j < 0:
            raise ValueError("normalise f so that every norm is at most 1")
        classes.setdefault(j, []).append(i)
    overlap, ratio = 0, 0.0
    for j, members in classes.items():
        cids = [ids[i] for i in members]
        layer = peel_layers(system, cids)
        cover = np.zeros(system.space.n, dtype=int)
        for i in members:
            c = ids[i]
            Et = ind[i].copy()
            for i2 in members:
                c2 = ids[i2]
                if layer[c2] == layer[c] + nu and ind[i2][ind[i]].sum() == ind[i2].sum() and c2 != c:
                    Et &= ~ind[i2]
            cover += Et
            if homogeneous:
                K = 4 * A(2.0 ** (j + 2)) / 2.0 ** (j + 2)
            else:
                K = 4 * cA * A(2.0 ** (j + 1)) / 2.0 ** (j + 1)
            lhs = wm[ind[i]].sum() * norms[i]
            rhs = K * Af[Et].sum()
            ratio = max(ratio, lhs / rhs if rhs > 0 else np.inf)
        overlap = max(overlap, int(cover.max()))
    return {"overlap": overlap, "nu": nu, "ratio": float(ratio), "classes": len(classes)}


def crr_lemma3_check(family: SparseFamily, w: Optional[Weight] = None,
                     ainf: Optional[float] = None) -> float:
    """sum_Q w(Q) eta / ([w]_{A_inf} w(union Q)) with eta the achieved sparseness.

    For w = 1 this is at most one exactly: sum mu(Q) <= (1/eta) sum mu(E_Q)
    <= (1/eta) mu(union)."""
    system = family.system
    mass = system.space.mass
    wv = np.ones(system.space.n) if w is None else w.values
    wm = wv * mass
    union = np.zeros(system.space.n, dtype=bool)
    total = 0.0
    for mem in family.members():
        union[mem] = True
        total += wm[mem].sum()
    a = 1.0 if ainf is None else ainf
    return float(total * family.achieved_eps / (a * wm[union].sum()))


def crr_lemma4_check(f, w: Weight, family: CubeFamily, A: YoungFn) -> float:
    """Fitted constant C in w({M^F_{A(w)} f > t}) <= C c_A int A(|f|/t) w,
    maximised exactly over t (the sup is approached at the jump points)."""
    mass = family.space.mass
    wm = w.values * mass
    f = np.abs(np.asarray(f, dtype=float))
    M = orlicz_maximal(f, family, A, w)
    best = 0.0
    for t in np.unique(M[M > 0]):
        lhs = wm[M >= t].sum()
        rhs = A.c_A * float((A(f / t) * wm).sum())
        best = max(best, lhs / rhs)
    return best


def bmo_reduction_check(family: SparseFamily, b, f, m: int, h: int, A: YoungFn,
                        rtol: float = 1e-12) -> dict:
    """Pointwise two-term reduction for the symbol-decorated sparse operator:
    sum_Q |b(x)-b_Q|^{m-h} ||f |b-b_Q|^h||_{A,Q} chi_Q(x)
        <= sum_Q |b(x)-b_Q|^m ||f||_{A,Q} chi_Q(x) + sum_Q ||f |b-b_Q|^m||_{A,Q} chi_Q(x).
    Returns the three sums and the number of violating points."""
    from ..sparse import sparse_comm_operator
    from ..symbols import SymbolSet

    if not 0 <= h <= m:
        raise ValueError("need 0 <= h <= m")
    bset = SymbolSet([b])
    lhs = sparse_comm_operator(family, A, bset, f, ("mh", m, h))
    outside = sparse_comm_operator(family, A, bset, f, ("mh", m, 0))
    inside = sparse_comm_operator(family, A, bset, f, ("mh", m, m))
    rhs = outside + inside
    bad = lhs > rhs * (1 + rtol) + 1e-300
    return {"lhs": lhs, "outside": outside, "inside": inside, "violations": int(bad.sum())}


# --------------------------------------------------------------------------
# stopping split and the key summation lemma


def _g_norms(ind_rows, G_mask, u: Weight, mass, xi: float) -> np.ndarray:
    um = u.values * mass
    return ((ind_rows & G_mask[None, :]) @ um / (ind_rows @ um)) ** (1.0 / xi)


def stopping_split(family: SparseFamily, f, g, u: Weight, v: Weight, A: YoungFn, xi: float,
                   maximal_family: Optional[CubeFamily] = None, g_rows=None) -> dict:
    """Classes S_{j,k}: 2^{-j-1} < ||f||_{A(uv),Q} <= 2^{-j}, 2^{-k-1} < ||g||_{L^xi(u),Q} <= 2^{-k}.

    ``g`` must be the indicator of a set G inside {M_{A(uv)} f <= 1/2}
    (checked with the maximal function over ``maximal_family``, default all
    cubes of the family's system).  Cubes with a zero norm are discarded and
    listed under the key 'discarded'.  ``g_rows`` optionally replaces the
    cube rows for the g-average (e.g. c_d-dilated balls).
    """
    system = family.system
    sp = system.space
    mass = sp.mass
    G = np.asarray(g) != 0
    uv = u * v
    mf = maximal_family or CubeFamily(sp, [system])
    if G.any():
        M = orlicz_maximal(f, mf, A, uv)
        bad = np.flatnonzero(G & (M > 0.5 * (1 + 1e-12)))
        if bad.size:
            raise HypothesisFailed("G meets {M f > 1/2} at point %d" % bad[0], item=int(bad[0]))
    out: Dict = {"discarded": []}
    if not family.cube_ids:
        return out
    ind = np.zeros((len(family), sp.n), dtype=bool)
    for i, mem in enumerate(family.members()):
        ind[i, mem] = True
    fn = luxemburg_rows(np.broadcast_to(np.abs(np.asarray(f, dtype=float)), ind.shape),
                        ind * (uv.values * mass)[None, :], A)[1]
    gn = _g_norms(ind if g_rows is None else g_rows, G, u, mass, xi)
    for i, c in enumerate(family.cube_ids):
        if fn[i] <= 0 or gn[i] <= 0:
            out["discarded"].append(c)
            continue
        j = int(np.floor(-np.log2(fn[i])))
        k = int(np.floor(-np.log2(gn[i])))
        out.setdefault((j, k), []).append(c)
    return out


def cuenta_check(family: SparseFamily, f, G, u: Weight, v: Weight, p: float, xi: float,
                 rho: float, tau: float, gamma: float, consts_family: CubeFamily,
                 homogeneous: bool = False) -> dict:
    """Both sides of the key summation lemma.

    lhs = tau sum_Q ||f||_{A(uv),Q} ||chi_G||_{L^xi(u),Q} uv(Q)
    T1  = tau [uv]_{A_inf} log(e + tau [uv]_{A_inf} [v]_{A_p(u)})^{1+rho} int A(|f|) uv
    (homogeneous: log(e + tau [uv]_{A_p}^2 [v]_{A_p(u)}) and the u-average
    of chi_G over c_d Q).  The fitted constant is lhs / (T1 + uv(G)/(2 gamma)).
    """
    sp = family.system.space
    mass = sp.mass
    uv = u * v
    A = PowerLog(1.0, rho)
    G = np.asarray(G) != 0
    ainf = a_inf_constant(uv, consts_family)
    apu = a_p_u_constant(v, u, consts_family, p)
    ind = np.zeros((len(family), sp.n), dtype=bool)
    for i, mem in enumerate(family.members()):
        ind[i, mem] = True
    if homogeneous:
        rows = CubeFamily(sp, [family.system], cube_ids=[family.cube_ids]).dilated_indicator(sp.c_d)
        inner = tau * a_p_constant(uv, consts_family, p) ** 2 * apu
    else:
        rows = ind
        inner = tau * ainf * apu
    uvm = uv.values * mass
    f = np.abs(np.asarray(f, dtype=float))
    if len(family):
        fn = luxemburg_rows(np.broadcast_to(f, ind.shape), ind * uvm[None, :], A)[1]
        gn = _g_norms(rows, G, u, mass, xi)
        lhs = tau * float((fn * gn * (ind @ uvm)).sum())
    else:
        lhs = 0.0
    T1 = tau * ainf * log(e + inner) ** (1 + rho) * float((A(f) * uvm).sum())
    uvG = float(uvm[G].sum())
    den = T1 + uvG / (2 * gamma)
    return {"lhs": lhs, "T1": T1, "uvG": uvG, "ratio": lhs / den if den > 0 else 0.0}


def good_set(f, u: Weight, v: Weight, A: YoungFn, family: CubeFamily, rng=None,
             frac: float = 1.0) -> np.ndarray:
    """A (random) subset of {M_{A(uv)} f <= 1/2}."""
    M = orlicz_maximal(f, family, A, u * v)
    ok = M <= 0.5
    if rng is not None and frac < 1:
        ok &= rng.uniform(size=len(ok)) < frac
    return ok.astype(float)


def reabsorption_check(T, f, u: Weight, v: Weight, p: float, theorem: str, family: CubeFamily,
                       system: DyadicSystem, tau: float = 1.0, rho: float = 0.0, xi: float = 4.0,
                       gamma: float = 1.0, c_fit: float = 1.0) -> dict:
    """The self-improving step at level 1.

    G = {|T(fv)|/v > 1} minus {M_{A(uv)} f > 1/2}; the sparse side is
    evaluated on a principal-cube family of f and split into the two terms
    term1 = c_fit T1 and term2 = uv(G)/(2 gamma).  Absorption holds when
    term2 <= uv(G)/2; the report also states whether the resulting bound
    uv(G) <= 2 term1 is met.
    """
    sp = system.space
    mass = sp.mass
    A = PowerLog(1.0, rho)
    f = np.asarray(f, dtype=float)
    uvm = u.values * v.values * mass
    Tfv = T.apply(f * v.values)
    if not f.any():
        return {"uvG": 0.0, "sparse_sum": 0.0, "term1": 0.0, "term2": 0.0, "absorbed": True,
                "bound_holds": True}
    M = orlicz_maximal(f, family, A, u * v)
    G = (np.abs(Tfv) / v.values > 1) & (M <= 0.5)
    ids = principal_cubes(system, np.abs(f) * v.values)
    fam = witness_sets(ids, system)
    res = cuenta_check(fam, f, G, u, v, p, xi, rho, tau, gamma, family,
                       homogeneous=theorem in ("teth", "bteth"))
    term1 = c_fit * res["T1"]
    term2 = res["uvG"] / (2 * gamma)
    return {"uvG": res["uvG"], "sparse_sum": res["lhs"], "term1": term1, "term2": term2,
            "absorbed": term2 <= res["uvG"] / 2 + 1e-300,
            "bound_holds": res["uvG"] <= 2 * term1 + 1e-300}


# --------------------------------------------------------------------------
# the suite


def _pairs_from(space, exps):
    from ..weights import power_weight

    return [(power_weight(space, a), power_weight(space, b)) for a, b in exps]


SUBCORPUS_A = [(-0.3, 0.2), (-0.1, -0.2)]
SUBCORPUS_B = [(-0.25, 0.25), (-0.15, -0.15)]


def _lemma_constants(space, family, system, pairs, homogeneous, seed, r=2.0, n_f=6):
    rng = np.random.default_rng(seed)
    out = {"RHsrho": 0.0, "promA": 0.0, "CRRlema2": 0.0, "CRRlema4": 0.0, "cuentaSjk": 0.0}
    A1 = PowerLog(1.0, 0.0)
    AL = PowerLog(1.0, 1.0)
    for u, v in pairs:
        out["RHsrho"] = max(out["RHsrho"], rhs_rho_check(u, family, r, n_subsets=20, seed=seed,
                                                         homogeneous=homogeneous))
        out["promA"] = max(out["promA"], prom_a_check(u, family, r, 1.0, n_subsets=8, seed=seed,
                                                      homogeneous=homogeneous))
        uv = u * v
        ainf = a_inf_constant(uv, family)
        for _ in range(n_f):
            f = rng.lognormal(0, 1, space.n) * (rng.uniform(size=space.n) < 0.5)
            f[int(rng.integers(0, space.n))] += 1.0
            sfam = witness_sets(principal_cubes(system, f, a=17.0), system)
            g = f / (max(_max_norm(sfam, f, uv, AL), 1e-300) * (1 + 1e-8))
            res = crr_lemma2_check(sfam, g, uv, AL, ainf, homogeneous=homogeneous)
            out["CRRlema2"] = max(out["CRRlema2"], res["ratio"])
            out["CRRlema4"] = max(out["CRRlema4"], crr_lemma4_check(f, uv, family, A1))
            fs = f / (4.0 * float(orlicz_maximal(f, family, A1, uv).max()))
            G = good_set(fs, u, v, A1, family, rng, 0.5)
            cfam = witness_sets(principal_cubes(system, fs), system)
            res = cuenta_check(cfam, fs, G, u, v, 2.0, 4.0, 0.0, 1.0, 1.0, family, homogeneous)
            out["cuentaSjk"] = max(out["cuentaSjk"], res["ratio"])
    return out


def _max_norm(fam: SparseFamily, f, w: Weight, A: YoungFn) -> float:
    if not len(fam):
        return 0.0
    mass = fam.system.space.mass
    ind = np.zeros((len(fam), fam.system.space.n), dtype=bool)
    for i, mem in enumerate(fam.members()):
        ind[i, mem] = True
    return float(luxemburg_rows(np.broadcast_to(np.abs(f), ind.shape),
                                ind * (w.values * mass)[None, :], A)[1].max())


def run_lemma_suite(n_points: int = 128, seed: int = 0, subcorpora=None) -> List[dict]:
    """Fitted constants per lemma on two disjoint weight sub-corpora, in the
    Euclidean setting (three shifted lattices on a uniform grid) and on a
    space of homogeneous type (adjacent systems over a random line space)."""
    from ..grid import (build_adjacent_systems, build_euclidean_grids, random_space,
                        uniform_grid)

    subs = subcorpora or (SUBCORPUS_A, SUBCORPUS_B)
    rows = []
    depth = int(np.log2(n_points))
    sp = uniform_grid(n_points)
    systems = build_euclidean_grids(n_points, depth, n_shifts=3)
    fam = CubeFamily(sp, systems, unique=True)
    hsp = random_space(n_points, seed + 11, "line")
    hsys, _ = build_adjacent_systems(hsp, 0.5, 3, seed)
    hfam = CubeFamily(hsp, hsys, unique=True)
    settings = [("", sp, fam, systems[0], False), ("Hom", hsp, hfam, hsys[0], True)]
    for suffix, space, family, system, hom in settings:
        res = [_lemma_constants(space, family, system, _pairs_from(space, sub), hom, seed)
               for sub in subs]
        for name in res[0]:
            label = name + suffix
            if hom and name == "cuentaSjk":
                label = "Reabsorcioneth"
            a, b = res[0][name], res[1][name]
            rows.append({"lemma": label, "C_a": a, "C_b": b, "C": max(a, b),
                         "finite": bool(np.isfinite(a) and np.isfinite(b)),
                         "stable": bool(max(a, b) <= 2 * min(a, b))})
    sweep = lemma1_sweep()
    c1 = max(r["c_fit"] for r in sweep)
    tail = max(r["rel_tail"] for r in sweep)
    rows.append({"lemma": "CRRlema1", "C_a": c1, "C_b": c1, "C": c1, "finite": bool(np.isfinite(c1)),
                 "stable": True, "max_rel_tail": tail})
    return rows
