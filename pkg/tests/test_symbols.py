import math

import numpy as np
import pytest

from osl.grid import full_family
from osl.symbols import (SymbolSet, bmo_norm, osc_exp_norm, random_symbol, sigma_enumerate,
                         sigma_product, split_symbol)


def test_osc_norm_constant_and_shift(grid64):
    fam = full_family(grid64)
    assert osc_exp_norm(np.full(64, 2.0), 1.0, fam) == 0.0
    b = random_symbol(grid64.space, 3)
    assert osc_exp_norm(b + 5.0, 1.0, fam) == pytest.approx(osc_exp_norm(b, 1.0, fam), rel=1e-9)


def test_osc_norm_split_symbol(grid64):
    # only the root straddles the split; there |b - b_Q| = 1 and e^{1/lam} - 1 = 1
    fam = full_family(grid64)
    b = split_symbol(grid64.space)
    assert osc_exp_norm(b, 1.0, fam) == pytest.approx(1 / math.log(2), rel=1e-9)
    assert bmo_norm(b, fam) == pytest.approx(1.0)


def test_sigma_enumerate():
    assert sigma_enumerate(2, 0) == [((), (0, 1))]
    assert len(sigma_enumerate(3, 1)) == 3
    assert sum(len(sigma_enumerate(4, h)) for h in range(5)) == 16
    with pytest.raises(ValueError):
        sigma_enumerate(2, 3)


def test_sigma_product(rng):
    b1, b2 = rng.standard_normal(10), rng.standard_normal(10)
    bset = SymbolSet([b1, b2])
    np.testing.assert_array_equal(sigma_product(bset, (), [0, 0]), np.ones(10))
    one = SymbolSet([b1])
    np.testing.assert_allclose(sigma_product(one, (0,), [b1.mean()]), b1 - b1.mean())
    np.testing.assert_allclose(sigma_product(bset, (0, 1), [0.3, -0.2]), (b1 - 0.3) * (b2 + 0.2))
    np.testing.assert_allclose(sigma_product(bset, (0, 1), [0.3, -0.2], absolute=True),
                               np.abs((b1 - 0.3) * (b2 + 0.2)))


def test_symbolset_exponents():
    s = SymbolSet([np.zeros(3), np.zeros(3)], [2.0, 2.0])
    assert s.r == pytest.approx(1.0)
    assert SymbolSet([]).r == math.inf
    with pytest.raises(ValueError):
        SymbolSet([np.zeros(3)], [0.5])
