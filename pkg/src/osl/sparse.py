"""Sparse and Carleson families, sparse operators, and constructive sparse domination."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .grid import CubeFamily, DyadicSystem, covering_partition
from .operators import KernelOp, grand_sharp_maximal, multisymbol_apply, sharp_kernel_bound
from .orlicz import MaxOf, Power, YoungFn, inverse, luxemburg_rows
from .symbols import SymbolSet, sigma_enumerate, sigma_product


@dataclass
class SparseFamily:
    """Cubes of one dyadic system together with (fractional) witness sets.

    ``witness[i]`` holds, for the i-th cube, the fraction of each point's mass
    assigned to E_Q; columns sum to at most one, so the witnesses are
    disjoint as measures.
    """

    system: DyadicSystem
    cube_ids: List[int]
    witness: np.ndarray
    target_eps: Optional[float] = None
    mode: str = "canonical"

    @property
    def achieved_eps(self) -> float:
        if not self.cube_ids:
            return 1.0
        mass = self.system.space.mass
        wq = self.witness @ mass
        mq = np.array([mass[self.system.cubes[c].members].sum() for c in self.cube_ids])
        return float((wq / mq).min())

    def __len__(self):
        return len(self.cube_ids)

    def members(self) -> List[np.ndarray]:
        return [self.system.cubes[c].members for c in self.cube_ids]

    def family(self) -> CubeFamily:
        return CubeFamily(self.system.space, [self.system], cube_ids=[self.cube_ids])


def _ancestor_sets(system: DyadicSystem, ids: Sequence[int]):
    s = set(ids)
    return {c: [a for a in system.ancestors(c) if a in s] for c in ids}


def witness_sets(cubes: Sequence[int], system: DyadicSystem, mode: str = "canonical",
                 target_eps: Optional[float] = None) -> SparseFamily:
    """Witness sets for a cube family.

    ``canonical``: E_Q = Q minus the family members strictly inside Q.
    ``optimal``: fractional witnesses allocated bottom-up, each cube taking a
    share 1/Lambda of its measure proportionally from the mass not yet claimed
    by its family descendants (Lambda = Carleson constant).  The Carleson
    condition guarantees enough free mass, so the achieved sparseness is
    exactly 1/Lambda.
    ``best``: whichever of the two has the larger achieved sparseness.
    """
    if isinstance(cubes, dict):
        raise ValueError("cubes must all come from one system")
    ids = sorted(set(int(c) for c in cubes))
    n = system.space.n
    mass = system.space.mass
    if mode == "best":
        a = witness_sets(ids, system, "canonical", target_eps)
        b = witness_sets(ids, system, "optimal", target_eps)
        return b if b.achieved_eps > a.achieved_eps else a
    W = np.zeros((len(ids), n))
    if mode == "canonical":
        pos = {c: i for i, c in enumerate(ids)}
        for c in ids:
            W[pos[c], system.cubes[c].members] = 1.0
        for c, anc in _ancestor_sets(system, ids).items():
            for a in anc:
                W[pos[a], system.cubes[c].members] = 0.0
    elif mode == "optimal":
        if ids:
            lam = carleson_constant_ids(ids, system)
            eta = 1.0 / lam
            used = np.zeros(n)
            order = sorted(range(len(ids)), key=lambda i: -system.cubes[ids[i]].generation)
            for i in order:
                mem = system.cubes[ids[i]].members
                free = (1.0 - used[mem]) * mass[mem]
                need = eta * mass[mem].sum()
                avail = free.sum()
                theta = min(1.0, need / avail) if avail > 0 else 0.0
                frac = theta * (1.0 - used[mem])
                W[i, mem] = frac
                used[mem] = used[mem] + frac
    else:
        raise ValueError("unknown witness mode %r" % mode)
    return SparseFamily(system, ids, W, target_eps, mode)


def carleson_constant_ids(ids: Sequence[int], system: DyadicSystem) -> float:
    mass = system.space.mass
    mu = {c: float(mass[system.cubes[c].members].sum()) for c in ids}
    acc = dict(mu)
    for c, anc in _ancestor_sets(system, ids).items():
        for a in anc:
            acc[a] += mu[c]
    return max(acc[c] / mu[c] for c in ids) if ids else 1.0


def carleson_constant(family: SparseFamily) -> float:
    """max over Q in S of (1/mu(Q)) sum_{P in S, P subset Q} mu(P)."""
    return carleson_constant_ids(family.cube_ids, family.system)


def split_carleson(family: SparseFamily, t: int, tol: float = 1e-12):
    """Split S into t classes by (number of strict S-ancestors) mod t.

    Returns the list of classes and a list of violations of the bound
    Lambda_i <= 1 + (Lambda - 1)/t (each violation names the cube at which
    the Carleson sum is exceeded).
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    system = family.system
    ids = family.cube_ids
    lam = carleson_constant(family)
    anc = _ancestor_sets(system, ids)
    classes = [[c for c in ids if len(anc[c]) % t == i] for i in range(t)]
    out, violations = [], []
    bound = 1.0 + (lam - 1.0) / t
    mass = system.space.mass
    for cls_ids in classes:
        fam = witness_sets(cls_ids, system, "optimal" if cls_ids else "canonical")
        out.append(fam)
        if not cls_ids:
            continue
        mu = {c: float(mass[system.cubes[c].members].sum()) for c in cls_ids}
        acc = dict(mu)
        for c, a_list in _ancestor_sets(system, cls_ids).items():
            for a in a_list:
                acc[a] += mu[c]
        for c in cls_ids:
            if acc[c] / mu[c] > bound * (1 + tol):
                violations.append((c, acc[c] / mu[c], bound))
    return out, violations


# --------------------------------------------------------------------------
# sparse operators and forms


def _family_rows(family: SparseFamily):
    sp = family.system.space
    ind = np.zeros((len(family), sp.n), dtype=bool)
    for i, mem in enumerate(family.members()):
        ind[i, mem] = True
    return ind


def _norm_rows(G, ind, mass, A, w=None, tol=1e-10):
    """Luxemburg norms of the rows of G over the rows of ind."""
    wv = np.ones(ind.shape[1]) if w is None else np.asarray(getattr(w, "values", w), dtype=float)
    W = ind * (wv * mass)[None, :]
    return luxemburg_rows(np.abs(G), W, A, tol)[1]


def sparse_operator(family: SparseFamily, A: YoungFn, f, w=None) -> np.ndarray:
    """sum_{Q in S} ||f||_{A,Q} chi_Q."""
    ind = _family_rows(family)
    if not len(ind):
        return np.zeros(family.system.space.n)
    f = np.asarray(f, dtype=float)
    norms = _norm_rows(np.broadcast_to(f, ind.shape), ind, family.system.space.mass, A, w)
    return norms @ ind


def _cube_avgs(family: SparseFamily, ind, b):
    mass = family.system.space.mass
    return (ind @ (b * mass)) / (ind @ mass)


def sparse_comm_operator(family: SparseFamily, A: YoungFn, bset: SymbolSet, f, mode) -> np.ndarray:
    """Symbol-decorated sparse operators.

    mode = ("mh", m, h): sum_Q |b(x) - b_Q|^{m-h} || f |b - b_Q|^h ||_{A,Q} chi_Q(x)
    (single symbol b = bset[0]);
    mode = ("sigma", sigma): sum_Q |b(x) - b_Q|_{sigma'} || f |b - b_Q|_sigma ||_{A,Q} chi_Q(x).
    """
    sp = family.system.space
    ind = _family_rows(family)
    f = np.asarray(f, dtype=float)
    out = np.zeros(sp.n)
    if not len(ind):
        return out
    if mode[0] == "mh":
        _, m, h = mode
        b = bset[0] if bset.m else np.zeros(sp.n)
        bq = _cube_avgs(family, ind, b)
        dev = np.abs(b[None, :] - bq[:, None])
        norms = _norm_rows(f[None, :] * dev ** h, ind, sp.mass, A)
        return ((dev ** (m - h)) * ind * norms[:, None]).sum(axis=0)
    if mode[0] == "sigma":
        sigma = tuple(mode[1])
        sigp = tuple(i for i in range(bset.m) if i not in sigma)
        bq = [_cube_avgs(family, ind, b) for b in bset.symbols]
        inside = np.ones_like(ind, dtype=float)
        outside = np.ones_like(ind, dtype=float)
        for i in sigma:
            inside *= np.abs(bset[i][None, :] - bq[i][:, None])
        for i in sigp:
            outside *= np.abs(bset[i][None, :] - bq[i][:, None])
        norms = _norm_rows(f[None, :] * inside, ind, sp.mass, A)
        return (outside * ind * norms[:, None]).sum(axis=0)
    raise ValueError("unknown mode %r" % (mode,))


def bilinear_form(family: SparseFamily, f, g, A: YoungFn, bset: Optional[SymbolSet] = None,
                  sigma: Optional[Sequence[int]] = None) -> float:
    """sum_Q <|f (b - b_Q)_{sigma'}|>_Q || g |b - b_Q|_sigma ||_{A,Q} mu(Q)."""
    sp = family.system.space
    ind = _family_rows(family)
    if not len(ind):
        return 0.0
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    inside = np.ones_like(ind, dtype=float)
    outside = np.ones_like(ind, dtype=float)
    if bset is not None and bset.m:
        sigma = tuple(sigma or ())
        sigp = tuple(i for i in range(bset.m) if i not in sigma)
        for i in range(bset.m):
            dev = np.abs(bset[i][None, :] - _cube_avgs(family, ind, bset[i])[:, None])
            if i in sigma:
                inside *= dev
            else:
                outside *= dev
    muQ = ind @ sp.mass
    avg = ((np.abs(f)[None, :] * outside * ind) @ sp.mass) / muQ
    norms = _norm_rows(g[None, :] * inside, ind, sp.mass, A)
    return float((avg * norms * muQ).sum())


# --------------------------------------------------------------------------
# local Calderón–Zygmund decomposition


@dataclass
class CZResult:
    cubes: List[int]
    ratios: List[float]


def local_cz_decomposition(system: DyadicSystem, Q: int, omega, c2: float) -> CZResult:
    """Maximal strict dyadic descendants P of Q with mu(P cap Omega)/mu(P) > 1/c2."""
    if c2 < 2:
        raise ValueError("c2 must be >= 2")
    sp = system.space
    om = np.zeros(sp.n, dtype=bool)
    om[np.asarray(omega, dtype=int) if not (isinstance(omega, np.ndarray) and omega.dtype == bool)
       else np.flatnonzero(omega)] = True
    mass = sp.mass
    cube = system.cubes[Q]
    muQ = mass[cube.members].sum()
    if mass[cube.members][om[cube.members]].sum() >= muQ / c2:
        raise ValueError("precondition violated: mu(Omega cap Q) >= mu(Q)/c2")
    sel, ratios = [], []
    stack = list(cube.children)
    while stack:
        p = stack.pop()
        mem = system.cubes[p].members
        r = mass[mem][om[mem]].sum() / mass[mem].sum()
        if r > 1.0 / c2:
            sel.append(p)
            ratios.append(float(r))
        elif r > 0:
            stack.extend(system.cubes[p].children)
    order = np.argsort(sel)
    return CZResult([sel[i] for i in order], [ratios[i] for i in order])


def principal_cubes(system: DyadicSystem, f, a: float = 2.0, root: Optional[int] = None) -> List[int]:
    """Stopping-time family: starting from the root, select the maximal
    descendants whose average of |f| exceeds ``a`` times the average on the
    current stopping cube; the result is (1 - 1/a)-sparse."""
    mass = system.space.mass
    f = np.abs(np.asarray(f, dtype=float))
    avg = lambda c: float((f[system.cubes[c].members] * mass[system.cubes[c].members]).sum()
                          / mass[system.cubes[c].members].sum())
    root = system.root.id if root is None else root
    out = [root]
    stack = [root]
    while stack:
        q = stack.pop()
        base = avg(q)
        frontier = list(system.cubes[q].children)
        while frontier:
            p = frontier.pop()
            if avg(p) > a * base and base >= 0:
                out.append(p)
                stack.append(p)
            else:
                frontier.extend(system.cubes[p].children)
    return sorted(out)


# --------------------------------------------------------------------------
# constructive sparse domination


@dataclass
class DominationCertificate:
    cubes: List[int]
    coefficients: Dict[int, Dict[str, float]]
    centers: Dict[int, List[float]]
    kappa: float
    kappa_nominal: float
    residual: float
    scale: float
    achieved_eps: float
    constants: dict
    failures: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.residual <= 1e-10 * max(self.scale, 1e-300)

    def to_json(self):
        return {"cubes": self.cubes,
                "coefficients": {str(k): v for k, v in self.coefficients.items()},
                "centers": {str(k): v for k, v in self.centers.items()},
                "kappa": self.kappa, "kappa_nominal": self.kappa_nominal,
                "residual": self.residual, "scale": self.scale,
                "achieved_eps": self.achieved_eps, "constants": self.constants,
                "failures": self.failures}


def _sigma_key(sig):
    return "{" + ",".join(str(i + 1) for i in sig) + "}"


def domination_constants(T: KernelOp, system: DyadicSystem, alpha: float, A: YoungFn, B: YoungFn,
                         family: Optional[CubeFamily] = None) -> dict:
    """Certified level constants for the iteration.

    psi(rho) = C_T/rho with C_T = ||T||_{L^1 -> L^1} A^{-1}(1) (Chebyshev),
    phi(rho) = C_sharp/rho with C_sharp = B^{-1}(1) sum_x kappa(x) mass(x),
    where M#h(x) <= kappa(x) ||h||_{L^1}, and ||M_C|| = the maximal overlap
    of the dilated cubes (a weak-type bound for the dilated-ball maximal
    function valid for every Young function C).
    """
    fam = family or CubeFamily(system.space, [system])
    mass = system.space.mass
    kap = sharp_kernel_bound(T, alpha, fam)
    dil = fam.dilated_indicator(alpha)
    return {"C_T": T.l1_norm() * inverse(A, 1.0),
            "C_sharp": float((kap * mass).sum()) * inverse(B, 1.0),
            "M_C": float(dil.sum(axis=0).max())}


def sparse_dominate(T: KernelOp, bset: SymbolSet, f, system: DyadicSystem, eps: float,
                    alpha: Optional[float] = None, A: YoungFn = Power(1), B: YoungFn = Power(1),
                    constants: Optional[dict] = None, c2: Optional[float] = None):
    """Pointwise sparse domination of T_b f by iterating the local lemma.

    Returns (SparseFamily, DominationCertificate).  The family consists of the
    covering-partition cubes of supp f and all cubes selected by the local
    Calderón–Zygmund decompositions.  The certificate reports the residual
    max_x ( |T_b f(x)| - kappa sum_{Q, sigma} |b(x) - c_Q|_sigma
    ||f |b - c_Q|_{sigma'}||_{C, alpha Q} chi_Q(x) ), with c_Q the averages of
    the symbols over alpha Q.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    sp = system.space
    n, mass = sp.n, sp.mass
    if any(len(system.cubes[c].members) != 1 for c in system.generations[-1]):
        raise ValueError("the finest generation must consist of singletons")
    if alpha is None:
        alpha = 3.0 / system.delta
    f = np.asarray(f, dtype=float)
    fam = CubeFamily(sp, [system])
    C = A if A.to_json() == B.to_json() else MaxOf(A, B)
    dil = fam.dilated_indicator(alpha)
    mu_cube = fam.indicator @ mass
    c1 = float(((dil @ mass) / mu_cube).max())
    D = max([mu_cube[c.parent] / mu_cube[c.id] for c in system.cubes if c.parent is not None],
            default=1.0)
    if c2 is None:
        c2 = max(2.0, 2.0 * D)
    m = bset.m
    sigmas = [s for h in range(m + 1) for s in sigma_enumerate(m, h)]
    gamma = len(sigmas)
    rho = eps / (3.0 * gamma * c1 * c2)
    t = 1.0 / (3.0 * c1)
    consts = dict(constants) if constants else domination_constants(T, system, alpha, A, B, fam)
    xi = lambda r: (consts["C_T"] + consts["C_sharp"]) / r
    MC = consts["M_C"]
    kappa = 2 * xi(rho) + xi(t) * MC / rho
    kappa_nominal = 2 * xi(rho) + xi(t) * rho * MC
    info = dict(consts, c1=c1, c2=c2, rho=rho, t=t, alpha=alpha, Gamma=gamma)

    supp = np.flatnonzero(f != 0)
    if supp.size == 0:
        fam_out = witness_sets([], system)
        cert = DominationCertificate([], {}, {}, kappa, kappa_nominal, 0.0, 0.0, 1.0, info)
        return fam_out, cert

    def lux(rows, masks, G):
        W = masks * mass[None, :]
        return luxemburg_rows(np.abs(rows), W, G)[1]

    related = {}

    def cubes_meeting(cid):
        if cid not in related:
            related[cid] = system.ancestors(cid) + system.descendants(cid)
        return related[cid]

    partition = covering_partition(system, supp, alpha)
    selected = [c.id for c in partition]
    queue = [(c.id, f * dil[c.id]) for c in partition]
    failures = []
    while queue:
        cid, F = queue.pop()
        mem = system.cubes[cid].members
        aQ = dil[cid]
        cQ = [float((b[aQ] * mass[aQ]).sum() / mass[aQ].sum()) for b in bset.symbols]
        omega = np.zeros(n, dtype=bool)
        for sig, sigp in sigmas:
            h = sigma_product(bset, sigp, cQ, n=n) * F * aQ
            if not np.any(h):
                continue
            nA, nB, nC = (lux(h[None, :], aQ[None, :], G)[0] for G in (A, B, C))
            Th = T.apply(h)
            omega[mem] |= np.abs(Th[mem]) > xi(rho) * nA
            sub = CubeFamily(sp, [system], cube_ids=[cubes_meeting(cid)])
            Ms = grand_sharp_maximal(T, h, alpha, sub)
            omega[mem] |= Ms[mem] > xi(rho) * nB
            ball_norms = lux(np.broadcast_to(h, dil.shape), dil, C)
            Mc = np.where(dil, ball_norms[:, None], 0.0).max(axis=0)
            omega[mem] |= Mc[mem] > MC / rho * nC
        om_mu = mass[omega].sum()
        if om_mu == 0:
            continue
        if om_mu >= mu_cube[cid] / c2:
            failures.append({"cube": cid, "rho": rho, "omega_ratio": float(om_mu / mu_cube[cid])})
            continue
        cz = local_cz_decomposition(system, cid, omega, c2)
        for p in cz.cubes:
            selected.append(p)
            queue.append((p, F * dil[p]))

    selected = sorted(set(selected))
    # coefficients with the full f, and the pointwise residual
    Tbf = multisymbol_apply(T, bset, f)
    bound = np.zeros(n)
    coefs, centers = {}, {}
    for cid in selected:
        aQ = dil[cid]
        mem = system.cubes[cid].members
        cQ = [float((b[aQ] * mass[aQ]).sum() / mass[aQ].sum()) for b in bset.symbols]
        centers[cid] = cQ
        coefs[cid] = {}
        for sig, sigp in sigmas:
            g = sigma_product(bset, sigp, cQ, absolute=True, n=n) * f
            val = float(lux(g[None, :], aQ[None, :], C)[0])
            coefs[cid][_sigma_key(sigp)] = val
            outer = sigma_product(bset, sig, cQ, absolute=True, n=n)
            bound[mem] += kappa * outer[mem] * val
    residual = float((np.abs(Tbf) - bound).max())
    fam_out = witness_sets(selected, system, "canonical", target_eps=1 - eps)
    cert = DominationCertificate(selected, coefs, centers, kappa, kappa_nominal, residual,
                                 float(np.abs(Tbf).max()), fam_out.achieved_eps, info, failures)
    return fam_out, cert
