"""Discrete integral operators, commutators and Calderón–Zygmund diagnostics."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .grid import CubeFamily, GridSpace
from .orlicz import Power, YoungFn, luxemburg_rows
from .symbols import SymbolSet, sigma_enumerate, sigma_product


class KernelOp:
    """T f(x) = sum_y K(x, y) f(y) mass(y).

    Singular kernels carry the truncation convention K(x, x) = 0.
    """

    def __init__(self, space: GridSpace, table, name: str = "kernel", singular: bool = True):
        K = np.array(table, dtype=float)
        if K.shape != (space.n, space.n):
            raise ValueError("kernel table must be n x n")
        if np.any(~np.isfinite(K)):
            raise ValueError("kernel entries must be finite")
        if singular:
            np.fill_diagonal(K, 0.0)
        self.space = space
        self.K = K
        self.name = name
        self.singular = singular

    def apply(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if np.any(~np.isfinite(f)):
            raise ValueError("f must be finite")
        return self.K @ (f * self.space.mass)

    __call__ = apply

    def l1_norm(self) -> float:
        """Operator norm on L^1(mu): the largest column sum sum_x |K(x,y)| mass(x)."""
        return float((np.abs(self.K) * self.space.mass[:, None]).sum(axis=0).max())

    def l2_norm(self, iters: int = 500, tol: float = 1e-12, seed: int = 0) -> float:
        """Operator norm on L^2(mu) by power iteration on the symmetrised table."""
        s = np.sqrt(self.space.mass)
        M = s[:, None] * self.K * s[None, :]
        x = np.random.default_rng(seed).standard_normal(self.space.n)
        x /= np.linalg.norm(x)
        val = 0.0
        for _ in range(iters):
            y = M.T @ (M @ x)
            nrm = np.linalg.norm(y)
            if nrm == 0:
                return 0.0
            x = y / nrm
            if abs(nrm - val) <= tol * nrm:
                val = nrm
                break
            val = nrm
        return float(np.sqrt(val))

    def to_json(self) -> dict:
        return {"name": self.name, "table": self.K.tolist(), "singular": self.singular}


def zero_kernel(space: GridSpace) -> KernelOp:
    return KernelOp(space, np.zeros((space.n, space.n)), "zero")


def averaging_kernel(space: GridSpace) -> KernelOp:
    return KernelOp(space, np.full((space.n, space.n), 1.0 / space.total_mass), "averaging",
                    singular=False)


def hilbert_kernel(space: GridSpace) -> KernelOp:
    x = space.coords
    with np.errstate(divide="ignore"):
        K = 1.0 / (x[:, None] - x[None, :])
    K[~np.isfinite(K)] = 0.0
    return KernelOp(space, K, "hilbert")


def log_kernel(space: GridSpace) -> KernelOp:
    d = space.dist
    with np.errstate(divide="ignore"):
        K = 1.0 / (d * (1.0 + np.abs(np.log(d))) ** 2)
    K[~np.isfinite(K)] = 0.0
    return KernelOp(space, K, "logreg")


def random_antisymmetric_kernel(space: GridSpace, seed: int = 0) -> KernelOp:
    R = np.random.default_rng(seed).standard_normal((space.n, space.n))
    return KernelOp(space, R - R.T, "antisym")


def kernel_from_spec(space: GridSpace, spec) -> KernelOp:
    name = spec.get("name", "hilbert") if isinstance(spec, dict) else spec
    if isinstance(spec, dict) and "table" in spec:
        return KernelOp(space, spec["table"], name, spec.get("singular", True))
    gens = {"zero": zero_kernel, "averaging": averaging_kernel, "hilbert": hilbert_kernel,
            "logreg": log_kernel}
    if name == "antisym":
        return random_antisymmetric_kernel(space, spec.get("seed", 0) if isinstance(spec, dict) else 0)
    if name not in gens:
        raise ValueError("unknown kernel %r" % name)
    return gens[name](space)


# --------------------------------------------------------------------------
# commutators


def commutator_apply(T: KernelOp, b, m: int, f) -> np.ndarray:
    """Iterated commutator T_b^m by the nested recursion."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    b = np.asarray(b, dtype=float)
    f = np.asarray(f, dtype=float)
    if m == 0:
        return T.apply(f)
    return b * commutator_apply(T, b, m - 1, f) - commutator_apply(T, b, m - 1, b * f)


def multisymbol_apply(T: KernelOp, bset: SymbolSet, f, upto: Optional[int] = None) -> np.ndarray:
    """[b_m, ... [b_2, [b_1, T]]] f by the nested-bracket definition."""
    k = bset.m if upto is None else upto
    f = np.asarray(f, dtype=float)
    if k == 0:
        return T.apply(f)
    b = bset.symbols[k - 1]
    return b * multisymbol_apply(T, bset, f, k - 1) - multisymbol_apply(T, bset, b * f, k - 1)


def sigma_expansion(T: KernelOp, bset: SymbolSet, f, lam) -> np.ndarray:
    """sum_h sum_{|sigma|=h} (-1)^h (b - lam)_{sigma'} T((b - lam)_sigma f).

    The sign is carried by the symbols that enter inside T; for the m = 1 case
    this is [b, T]f = (b - lam) T f - T((b - lam) f).
    """
    n = T.space.n
    out = np.zeros(n)
    for h in range(bset.m + 1):
        for sig, sigp in sigma_enumerate(bset.m, h):
            inner = sigma_product(bset, sig, lam, n=n) * f
            out += (-1) ** h * sigma_product(bset, sigp, lam, n=n) * T.apply(inner)
    return out


def binomial_expansion(T: KernelOp, b, m: int, f, lam: float) -> np.ndarray:
    """Equal-symbol version: sum_h (-1)^h C(m,h) (b - lam)^{m-h} T((b - lam)^h f)."""
    from math import comb

    d = np.asarray(b, dtype=float) - lam
    out = np.zeros(T.space.n)
    for h in range(m + 1):
        out += (-1) ** h * comb(m, h) * d ** (m - h) * T.apply(d ** h * f)
    return out


# --------------------------------------------------------------------------
# Hörmander constants and the grand sharp maximal function


def _pairs(idx: np.ndarray, max_pairs: Optional[int], rng):
    a, b = np.meshgrid(idx, idx, indexing="ij")
    a, b = a.ravel(), b.ravel()
    keep = a != b
    a, b = a[keep], b[keep]
    if max_pairs is not None and len(a) > max_pairs:
        sel = rng.choice(len(a), size=max_pairs, replace=False)
        a, b = a[sel], b[sel]
    return a, b


def hormander_constant(T: KernelOp, A: YoungFn, family: CubeFamily, k_max: int = 10,
                       max_pairs: Optional[int] = None, seed: int = 0, tol: float = 1e-10):
    """Estimates (H1, H2) of the A-Hörmander condition over the family's balls.

    Ball B = B(z, R) with z the cube center and R = C0 delta^k; for every pair
    x, z' in B(z, R/2) the annular sums
        sum_{k>=1} mu(2^k B) || (K(x,.) - K(z',.)) chi_{2^k B \\ 2^{k-1} B} ||_{A, 2^k B}
    are accumulated (and the transposed version for H2).  Annuli beyond the
    point where 2^{k-1} B covers the space are empty and skipped.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    sp = T.space
    rng = np.random.default_rng(seed)
    mass = sp.mass
    H = [0.0, 0.0]
    for z, R in zip(family.centers, family.radii):
        d = sp.distances_from(z)
        half = np.flatnonzero(d < R / 2)
        if len(half) < 2:
            continue
        a, b = _pairs(half, max_pairs, rng)
        for which, Kt in ((0, T.K), (1, T.K.T)):
            D = np.abs(Kt[a] - Kt[b])
            total = np.zeros(len(a))
            for k in range(1, k_max + 1):
                big = d < 2 ** k * R
                ann = big & (d >= 2 ** (k - 1) * R)
                if ann.any():
                    W = np.broadcast_to(np.where(big, mass, 0.0), D.shape)
                    F = np.where(ann[None, :], D, 0.0)
                    mu = float(mass[big].sum())
                    total += mu * luxemburg_rows(F, W, A, tol)[1]
                if big.all():
                    break
            H[which] = max(H[which], float(total.max()))
    return H[0], H[1]


def grand_sharp_maximal(T: KernelOp, f, alpha: float, family: CubeFamily) -> np.ndarray:
    """M#_{T,alpha} f(x) = max over cubes B containing x of the oscillation on B
    of T(f chi_{X \\ alpha B})."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    f = np.asarray(f, dtype=float)
    fm = f * T.space.mass
    dil = family.dilated_indicator(alpha)
    out = np.zeros(T.space.n)
    for i, mem in enumerate(family.members):
        far = ~dil[i]
        if not far.any():
            continue
        vals = T.K[np.ix_(mem, np.flatnonzero(far))] @ fm[far]
        osc = float(vals.max() - vals.min())
        np.maximum.at(out, mem, osc)
    return out


def sharp_kernel_bound(T: KernelOp, alpha: float, family: CubeFamily) -> np.ndarray:
    """kappa(x) with M#_{T,alpha} h(x) <= kappa(x) ||h||_{L^1(mu)} for every h.

    kappa(x) = max over cubes B containing x of max_{w outside alpha B}
    (max_{y in B} K(y, w) - min_{y in B} K(y, w)).
    """
    dil = family.dilated_indicator(alpha)
    out = np.zeros(T.space.n)
    for i, mem in enumerate(family.members):
        far = ~dil[i]
        if not far.any():
            continue
        sub = T.K[np.ix_(mem, np.flatnonzero(far))]
        val = float((sub.max(axis=0) - sub.min(axis=0)).max())
        np.maximum.at(out, mem, val)
    return out


def level_function(T: KernelOp, corpus: Sequence[np.ndarray], family: CubeFamily, rhos,
                   A: YoungFn = Power(1)) -> np.ndarray:
    """Measured psi(rho): the least level with
    mu({x in Q : |T(g chi_Q)(x)| > psi ||g||_{A,Q}}) <= rho mu(Q)
    for every g in the corpus and every cube Q of the family."""
    mass = T.space.mass
    rhos = np.asarray(rhos, dtype=float)
    psi = np.zeros(len(rhos))
    for g in corpus:
        g = np.asarray(g, dtype=float)
        norms = luxemburg_rows(np.broadcast_to(np.abs(g), family.indicator.shape),
                               family.indicator * mass[None, :], A)[1]
        for i, mem in enumerate(family.members):
            if norms[i] == 0:
                continue
            gq = np.zeros_like(g)
            gq[mem] = g[mem]
            vals = np.abs(T.apply(gq)[mem]) / norms[i]
            order = np.argsort(vals)[::-1]
            v, m = vals[order], mass[mem][order]
            muQ = m.sum()
            # mass strictly above v[j] is cm[j]; smallest level keeping it <= rho muQ
            cm = np.concatenate([[0.0], np.cumsum(m)])
            for r_i, rho in enumerate(rhos):
                j = np.searchsorted(cm, rho * muQ * (1 + 1e-12), side="right") - 1
                level = v[j] if j < len(v) else 0.0
                psi[r_i] = max(psi[r_i], level)
    return psi
