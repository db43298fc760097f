"""Symbols for commutators: oscillation norms and sigma-bookkeeping."""
from __future__ import annotations

from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .grid import CubeFamily, GridSpace
from .orlicz import ExpL, luxemburg_rows


class SymbolSet:
    """Symbols b_1..b_m with exponents r_i; 1/r = sum 1/r_i (1/r = 0 when m = 0)."""

    def __init__(self, symbols: Sequence, exponents: Optional[Sequence[float]] = None):
        self.symbols = [np.asarray(b, dtype=float).ravel() for b in symbols]
        m = len(self.symbols)
        if exponents is None:
            exponents = [1.0] * m
        if len(exponents) != m:
            raise ValueError("one exponent per symbol is required")
        if any(r < 1 for r in exponents):
            raise ValueError("symbol exponents must be >= 1")
        self.exponents = [float(r) for r in exponents]
        self.inv_r = float(sum(1.0 / r for r in self.exponents))
        self.norms: Optional[List[float]] = None

    @property
    def m(self) -> int:
        return len(self.symbols)

    @property
    def r(self) -> float:
        return np.inf if self.inv_r == 0 else 1.0 / self.inv_r

    def __getitem__(self, i):
        return self.symbols[i]

    def compute_norms(self, family: CubeFamily, w=None) -> float:
        """Cache the Osc_{exp L^{r_i}} norms and return their product ||b||."""
        self.norms = [osc_exp_norm(b, r, family, w) for b, r in zip(self.symbols, self.exponents)]
        return self.norm

    @property
    def norm(self) -> float:
        if self.norms is None:
            raise RuntimeError("call compute_norms first")
        return float(np.prod(self.norms)) if self.norms else 1.0

    def to_json(self):
        return {"symbols": [b.tolist() for b in self.symbols], "exponents": self.exponents}

    @classmethod
    def from_json(cls, obj):
        return cls(obj.get("symbols", []), obj.get("exponents"))


def cube_means(b, family: CubeFamily, indicator: Optional[np.ndarray] = None) -> np.ndarray:
    ind = family.indicator if indicator is None else indicator
    m = family.space.mass
    return (ind @ (b * m)) / (ind @ m)


def osc_exp_norm(b, r: float, family: CubeFamily, w=None, tol: float = 1e-10) -> float:
    """max over Q of || b - b_Q ||_{exp L^r (w), Q} with b_Q the plain average."""
    b = np.asarray(b, dtype=float)
    means = cube_means(b, family)
    F = np.abs(b[None, :] - means[:, None])
    wv = np.ones_like(b) if w is None else np.asarray(getattr(w, "values", w), dtype=float)
    W = family.indicator * (wv * family.space.mass)[None, :]
    return float(luxemburg_rows(F, W, ExpL(r), tol)[1].max())


def bmo_norm(b, family: CubeFamily) -> float:
    """max over Q of the average of |b - b_Q| over Q."""
    b = np.asarray(b, dtype=float)
    means = cube_means(b, family)
    m = family.space.mass
    F = np.abs(b[None, :] - means[:, None]) * family.indicator
    return float(((F @ m) / (family.indicator @ m)).max())


def sigma_enumerate(m: int, h: int) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """All (sigma, sigma') with |sigma| = h partitioning {0, ..., m-1}."""
    if m < 0 or not 0 <= h <= m:
        raise ValueError("need 0 <= h <= m")
    full = tuple(range(m))
    return [(s, tuple(i for i in full if i not in s)) for s in combinations(full, h)]


def sigma_product(bset: SymbolSet, sigma: Sequence[int], lam, absolute: bool = False,
                  n: Optional[int] = None) -> np.ndarray:
    """prod_{i in sigma} (b_i - lam_i), or the product of absolute values.

    lam may hold one scalar per symbol or one array per symbol.
    """
    if n is None:
        n = len(bset.symbols[0]) if bset.m else 1
    out = np.ones(n)
    for i in sigma:
        d = bset.symbols[i] - lam[i]
        out = out * (np.abs(d) if absolute else d)
    return out


# --------------------------------------------------------------------------
# test symbols


def log_symbol(space: GridSpace) -> np.ndarray:
    """b(x) = log(x + 1/(2n)) on a 1D grid (BMO-like)."""
    return np.log(space.coords + 0.5 / space.n)


def split_symbol(space: GridSpace, cut: float = 0.5) -> np.ndarray:
    return np.where(space.coords < cut, -1.0, 1.0)


def random_symbol(space: GridSpace, seed: int = 0, scale: float = 1.0) -> np.ndarray:
    return scale * np.random.default_rng(seed).uniform(-1, 1, space.n)
