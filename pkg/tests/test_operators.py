from math import comb

import numpy as np
import pytest

from osl.grid import build_euclidean_grids, full_family, uniform_grid
from osl.operators import (KernelOp, averaging_kernel, binomial_expansion, commutator_apply,
                           grand_sharp_maximal, hilbert_kernel, hormander_constant,
                           multisymbol_apply, sharp_kernel_bound, sigma_expansion, zero_kernel)
from osl.orlicz import Power
from osl.symbols import SymbolSet


def test_zero_and_averaging(rng):
    sp = uniform_grid(16)
    f = rng.standard_normal(16)
    assert np.all(zero_kernel(sp).apply(f) == 0)
    np.testing.assert_allclose(averaging_kernel(sp).apply(f), f.mean())


def test_hilbert_column_readoff():
    sp = uniform_grid(8)
    T = hilbert_kernel(sp)
    e0 = np.zeros(8)
    e0[0] = 1.0
    out = T.apply(e0)
    x = sp.coords
    ref = [0.0] + [1 / (x[i] - x[0]) / 8 for i in range(1, 8)]
    np.testing.assert_allclose(out, ref)


def test_kernel_validation():
    sp = uniform_grid(4)
    with pytest.raises(ValueError):
        KernelOp(sp, np.ones((3, 3)))
    with pytest.raises(ValueError):
        KernelOp(sp, np.full((4, 4), np.inf))


def test_hormander_first_argument_constant():
    sp = uniform_grid(32)
    K = np.tile(np.linspace(1, 2, 32), (32, 1))  # K(x, y) depends on y only
    T = KernelOp(sp, K, singular=False)
    fam = full_family(build_euclidean_grids(32, 5)[0])
    assert hormander_constant(T, Power(1), fam)[0] == pytest.approx(0.0, abs=1e-14)


def oracle_hormander(T, fam, k_max):
    sp = T.space
    best = [0.0, 0.0]
    for z, R in zip(fam.centers, fam.radii):
        d = sp.distances_from(z)
        half = [i for i in range(sp.n) if d[i] < R / 2]
        for a in half:
            for b in half:
                if a >= b:
                    continue
                for which, K in ((0, T.K), (1, T.K.T)):
                    tot = 0.0
                    for y in range(sp.n):
                        if d[y] >= R and any(2 ** (k - 1) * R <= d[y] < 2 ** k * R
                                             for k in range(1, k_max + 1)):
                            tot += abs(K[a, y] - K[b, y]) * sp.mass[y]
                    best[which] = max(best[which], tot)
    return best


def test_hormander_oracle():
    systems = build_euclidean_grids(128, 7)
    fam = full_family(systems[0], max_generation=3)
    T = hilbert_kernel(systems[0].space)
    got = hormander_constant(T, Power(1), fam, k_max=6)
    ref = oracle_hormander(T, fam, 6)
    assert np.isfinite(got[0])
    np.testing.assert_allclose(got, ref, rtol=1e-10)


def test_hormander_monotone_in_kmax():
    systems = build_euclidean_grids(64, 6)
    fam = full_family(systems[0], max_generation=4)
    T = hilbert_kernel(systems[0].space)
    vals = [hormander_constant(T, Power(1), fam, k_max=k)[0] for k in (1, 2, 4, 8)]
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))


def test_commutator_basics(rng):
    sp = uniform_grid(16)
    T = hilbert_kernel(sp)
    f = rng.standard_normal(16)
    assert np.allclose(commutator_apply(T, np.full(16, 2.0), 2, f), 0.0)
    np.testing.assert_allclose(commutator_apply(T, rng.standard_normal(16), 0, f), T.apply(f))


def test_commutator_binomial_expansion(rng):
    sp = uniform_grid(16)
    T = hilbert_kernel(sp)
    b, f = rng.standard_normal(16), rng.standard_normal(16)
    lam = b.mean()
    d = b - lam
    ref = sum((-1) ** h * comb(2, h) * d ** (2 - h) * T.apply(d ** h * f) for h in range(3))
    # (-1)^{m-h} vs (-1)^h coincide for even m
    np.testing.assert_allclose(commutator_apply(T, b, 2, f), ref, rtol=1e-10, atol=1e-10)
    for m in (1, 3):
        np.testing.assert_allclose(commutator_apply(T, b, m, f), binomial_expansion(T, b, m, f, lam),
                                   rtol=1e-10, atol=1e-10)


def test_multisymbol_reductions(rng):
    sp = uniform_grid(16)
    T = hilbert_kernel(sp)
    b, f = rng.standard_normal(16), rng.standard_normal(16)
    np.testing.assert_allclose(multisymbol_apply(T, SymbolSet([b]), f), commutator_apply(T, b, 1, f))
    np.testing.assert_allclose(multisymbol_apply(T, SymbolSet([b, b, b]), f),
                               commutator_apply(T, b, 3, f), rtol=1e-10, atol=1e-10)


def test_sigma_expansion_identity(rng):
    sp = uniform_grid(16)
    T = hilbert_kernel(sp)
    f = rng.standard_normal(16)
    for m in (1, 2, 3):
        bset = SymbolSet([rng.standard_normal(16) for _ in range(m)])
        nested = multisymbol_apply(T, bset, f)
        for lam in ([0.0] * m, [b.mean() for b in bset.symbols]):
            np.testing.assert_allclose(sigma_expansion(T, bset, f, lam), nested,
                                       rtol=1e-10, atol=1e-10 * np.abs(nested).max())


def oracle_sharp(T, f, alpha, fam):
    sp = T.space
    out = np.zeros(sp.n)
    dil = fam.dilated_indicator(alpha)
    for i, mem in enumerate(fam.members):
        far = [y for y in range(sp.n) if not dil[i, y]]
        if not far:
            continue
        vals = [sum(T.K[x, y] * f[y] * sp.mass[y] for y in far) for x in mem]
        osc = max(vals) - min(vals)
        for x in mem:
            out[x] = max(out[x], osc)
    return out


def test_grand_sharp_maximal_oracle(rng):
    systems = build_euclidean_grids(32, 5)
    fam = full_family(systems[0])
    T = hilbert_kernel(systems[0].space)
    f = rng.standard_normal(32)
    np.testing.assert_allclose(grand_sharp_maximal(T, f, 3.0, fam), oracle_sharp(T, f, 3.0, fam),
                               rtol=1e-10, atol=1e-12)
    assert np.all(grand_sharp_maximal(zero_kernel(T.space), f, 3.0, fam) == 0)


def test_sharp_maximal_ignores_near_support(rng):
    systems = build_euclidean_grids(32, 5)
    fam = full_family(systems[0])
    T = hilbert_kernel(systems[0].space)
    f = np.zeros(32)
    f[0] = 1.0
    # a huge dilation holds every point, so no cube sees any far part
    assert np.all(grand_sharp_maximal(T, f, 100.0, fam) == 0)


def test_sharp_kernel_bound_dominates(rng):
    systems = build_euclidean_grids(32, 5)
    fam = full_family(systems[0])
    T = hilbert_kernel(systems[0].space)
    kap = sharp_kernel_bound(T, 3.0, fam)
    for _ in range(10):
        h = rng.standard_normal(32)
        l1 = float((np.abs(h) * T.space.mass).sum())
        assert np.all(grand_sharp_maximal(T, h, 3.0, fam) <= kap * l1 * (1 + 1e-12) + 1e-15)
