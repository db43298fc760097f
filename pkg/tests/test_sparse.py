import numpy as np
import pytest

from osl.grid import build_euclidean_grids, covering_partition
from osl.operators import averaging_kernel, hilbert_kernel, multisymbol_apply
from osl.orlicz import Power, PowerLog
from osl.sparse import (bilinear_form, carleson_constant, local_cz_decomposition,
                        principal_cubes, sparse_comm_operator, sparse_dominate, sparse_operator,
                        split_carleson, witness_sets)
from osl.symbols import SymbolSet
from osl.verify.lemmas import crr_lemma3_check


def full_tree(depth, n=None):
    (s,) = build_euclidean_grids(n or 2 ** depth, depth)
    return s, [c.id for c in s.cubes]


def left_chain(system):
    """Root, its first child, that cube's first child, ... down to a singleton."""
    ids = [system.root.id]
    while system.cubes[ids[-1]].children:
        ids.append(system.cubes[ids[-1]].children[0])
    return ids


def oracle_carleson(system, ids):
    mass = system.space.mass
    sets = {c: set(system.cubes[c].members.tolist()) for c in ids}
    mu = {c: mass[system.cubes[c].members].sum() for c in ids}
    return max(sum(mu[p] for p in ids if sets[p] <= sets[q]) / mu[q] for q in ids)


# ---------------------------------------------------------------- witnesses


def test_antichain_eps_one(grid64):
    fam = witness_sets([c.id for c in grid64.generation(3)], grid64)
    assert fam.achieved_eps == 1.0
    assert carleson_constant(fam) == 1.0


def test_full_tree_eps_zero():
    s, ids = full_tree(6)
    assert witness_sets(ids, s).achieved_eps == 0.0


def test_nested_chain_eps_half(grid64):
    fam = witness_sets(left_chain(grid64), grid64)
    assert fam.achieved_eps == pytest.approx(0.5)


def test_witness_rejects_dict(grid64):
    with pytest.raises(ValueError):
        witness_sets({0: [1]}, grid64)


def test_witnesses_are_disjoint_and_inside(grid64, rng):
    ids = list(rng.choice(len(grid64.cubes), 30, replace=False))
    for mode in ("canonical", "optimal"):
        fam = witness_sets(ids, grid64, mode)
        assert np.all(fam.witness.sum(axis=0) <= 1 + 1e-12)
        for row, mem in zip(fam.witness, fam.members()):
            outside = np.ones(64, dtype=bool)
            outside[mem] = False
            assert np.all(row[outside] == 0)


# ---------------------------------------------------------------- Carleson


@pytest.mark.parametrize("depth", range(0, 7))
def test_full_tree_carleson(depth):
    s, ids = full_tree(depth)
    fam = witness_sets(ids, s)
    assert carleson_constant(fam) == pytest.approx(depth + 1)
    assert carleson_constant(fam) == pytest.approx(oracle_carleson(s, ids))


def test_duality_random_subfamilies(grid64, rng):
    for _ in range(50):
        k = int(rng.integers(1, 40))
        ids = list(rng.choice(len(grid64.cubes), k, replace=False))
        fam = witness_sets(ids, grid64, "optimal")
        lam = carleson_constant(fam)
        assert lam == pytest.approx(oracle_carleson(grid64, fam.cube_ids), rel=1e-12)
        assert fam.achieved_eps >= 1 / lam - 1e-12


def test_split_depth3_t3():
    s, ids = full_tree(3)
    classes, violations = split_carleson(witness_sets(ids, s), 3)
    assert violations == []
    assert all(carleson_constant(c) <= 2 + 1e-12 for c in classes if len(c))


def test_split_identity_and_antichain(grid64):
    s, ids = full_tree(4)
    classes, _ = split_carleson(witness_sets(ids, s), 1)
    assert classes[0].cube_ids == sorted(ids)
    anti = witness_sets([c.id for c in grid64.generation(2)], grid64)
    classes, violations = split_carleson(anti, 4)
    assert violations == []
    assert all(carleson_constant(c) == 1.0 for c in classes if len(c))
    with pytest.raises(ValueError):
        split_carleson(anti, 0)


def test_crr_lemma3_unit_weight(grid64, rng):
    for _ in range(20):
        ids = list(rng.choice(len(grid64.cubes), 12, replace=False))
        fam = witness_sets(ids, grid64, "optimal")
        assert crr_lemma3_check(fam) <= 1 + 1e-12


# ---------------------------------------------------------------- operators and forms


def test_sparse_operator_basic():
    s, _ = full_tree(3)
    root = witness_sets([s.root.id], s)
    assert np.allclose(sparse_operator(root, Power(1), np.ones(8)), 1.0)
    assert np.all(sparse_operator(root, Power(1), np.zeros(8)) == 0)


def test_sparse_operator_two_cubes_hand_sum():
    s, _ = full_tree(3)
    left = s.generation(1)[0]
    fam = witness_sets([s.root.id, left.id], s)
    f = np.arange(8.0)
    out = sparse_operator(fam, Power(1), f)
    ref = np.full(8, f.mean())
    ref[left.members] += f[left.members].mean()
    np.testing.assert_allclose(out, ref)


def test_sparse_comm_operator(rng):
    s, ids = full_tree(3)
    fam = witness_sets(ids[:7], s)
    f = rng.standard_normal(8)
    const = SymbolSet([np.full(8, 3.0)])
    assert np.allclose(sparse_comm_operator(fam, Power(1), const, f, ("mh", 2, 1)), 0)
    np.testing.assert_allclose(sparse_comm_operator(fam, PowerLog(1, 1), const, f, ("mh", 0, 0)),
                               sparse_operator(fam, PowerLog(1, 1), f))
    b = rng.standard_normal(8)
    out = sparse_comm_operator(fam, Power(1), SymbolSet([b]), f, ("mh", 1, 0))
    ref = np.zeros(8)
    for mem in fam.members():
        bq = b[mem].mean()
        for x in mem:
            ref[x] += abs(b[x] - bq) * np.abs(f[mem]).mean()
    np.testing.assert_allclose(out, ref)


def test_bilinear_form(rng):
    s, ids = full_tree(3)
    root = witness_sets([s.root.id], s)
    assert bilinear_form(root, np.ones(8), np.ones(8), Power(1)) == pytest.approx(1.0)
    assert bilinear_form(root, np.ones(8), np.zeros(8), Power(1)) == 0.0
    fam = witness_sets([s.root.id, s.generation(1)[1].id], s)
    f, g = rng.standard_normal(8), rng.standard_normal(8)
    ref = sum(np.abs(f[m]).mean() * np.abs(g[m]).mean() * len(m) / 8 for m in fam.members())
    assert bilinear_form(fam, f, g, Power(1)) == pytest.approx(ref)


# ---------------------------------------------------------------- CZ and stopping cubes


def test_local_cz_empty_and_precondition(grid64):
    q = grid64.generation(3)[0].id
    assert local_cz_decomposition(grid64, q, np.array([], dtype=int), 2).cubes == []
    mem = grid64.cubes[q].members
    with pytest.raises(ValueError):
        local_cz_decomposition(grid64, q, mem[:4], 2)
    with pytest.raises(ValueError):
        local_cz_decomposition(grid64, q, mem[:1], 1.5)


def test_local_cz_single_point(grid64):
    q = grid64.generation(3)[0]  # 8 points
    x = int(q.members[3])
    res = local_cz_decomposition(grid64, q.id, [x], 2.0)
    assert len(res.cubes) == 1
    (p,) = res.cubes
    mem = grid64.cubes[p].members
    assert x in mem
    parent = grid64.cubes[grid64.cubes[p].parent]
    ratio = 1.0 / len(mem)
    D = len(parent.members) / len(mem)
    assert 1 / 2 < ratio <= D / 2
    assert res.ratios == [pytest.approx(ratio)]


def test_principal_cubes_sparse(grid64, rng):
    f = np.exp(2 * rng.standard_normal(64))
    ids = principal_cubes(grid64, f, a=2.0)
    fam = witness_sets(ids, grid64)
    assert grid64.root.id in ids
    assert fam.achieved_eps >= 0.5 - 1e-12


# ---------------------------------------------------------------- domination


def test_dominate_zero_function():
    (s,) = build_euclidean_grids(16, 4)
    fam, cert = sparse_dominate(hilbert_kernel(s.space), SymbolSet([]), np.zeros(16), s, 0.5)
    assert cert.cubes == [] and cert.residual == 0.0 and len(fam) == 0


def test_dominate_averaging_64(rng):
    (s,) = build_euclidean_grids(64, 6)
    T = averaging_kernel(s.space)
    for _ in range(3):
        f = rng.standard_normal(64)
        fam, cert = sparse_dominate(T, SymbolSet([]), f, s, 0.5)
        Tf = np.abs(T.apply(f))
        bound = np.zeros(64)
        for cid in cert.cubes:
            bound[s.cubes[cid].members] += cert.kappa * cert.coefficients[cid]["{}"]
        assert np.all(Tf <= bound)
        assert cert.residual <= 0


def test_dominate_hilbert_256():
    (s,) = build_euclidean_grids(256, 8)
    f = np.random.default_rng(5).standard_normal(256)
    fam, cert = sparse_dominate(hilbert_kernel(s.space), SymbolSet([]), f, s, 0.5)
    assert cert.achieved_eps >= 0.5
    assert cert.residual <= 0
    assert cert.holds


def test_dominate_commutator_residual_recomputed(rng):
    (s,) = build_euclidean_grids(64, 6)
    T = hilbert_kernel(s.space)
    bset = SymbolSet([rng.standard_normal(64)])
    f = rng.standard_normal(64)
    fam, cert = sparse_dominate(T, bset, f, s, 0.25)
    b = bset[0]
    bound = np.zeros(64)
    for cid in cert.cubes:
        (c,) = cert.centers[cid]
        mem = s.cubes[cid].members
        bound[mem] += cert.kappa * (np.abs(b[mem] - c) * cert.coefficients[cid]["{}"]
                                    + cert.coefficients[cid]["{1}"])
    ref = float((np.abs(multisymbol_apply(T, bset, f)) - bound).max())
    assert cert.residual == pytest.approx(ref, rel=1e-9)


def test_dominate_small_constants_reach_recursion(rng):
    (s,) = build_euclidean_grids(64, 6)
    T = hilbert_kernel(s.space)
    f = np.random.default_rng(12345).standard_normal(64)
    consts = {"C_T": 0.03, "C_sharp": 0.03, "M_C": 0.01}
    fam, cert = sparse_dominate(T, SymbolSet([]), f, s, 0.5, constants=consts)
    covering = covering_partition(s, np.flatnonzero(f), cert.constants["alpha"])
    # the local decompositions add cubes beyond the covering partition
    assert len(cert.cubes) > len(covering)
    assert cert.achieved_eps < 1.0
    for fl in cert.failures:
        assert fl["omega_ratio"] >= 1 / cert.constants["c2"]


def test_dominate_rejects_bad_eps():
    (s,) = build_euclidean_grids(8, 3)
    with pytest.raises(ValueError):
        sparse_dominate(hilbert_kernel(s.space), SymbolSet([]), np.ones(8), s, 1.0)


def test_dominate_rejects_non_singleton_leaves():
    (s,) = build_euclidean_grids(16, 2)
    with pytest.raises(ValueError):
        sparse_dominate(hilbert_kernel(s.space), SymbolSet([]), np.ones(16), s, 0.5)
