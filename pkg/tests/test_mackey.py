from __future__ import annotations

import numpy as np
import pytest

from modp_center.groups import dihedral_d4, heisenberg_group, named_subgroup, subgroups_of_order, symmetric_group
from modp_center.gsets import GroupError
from modp_center.mackey import (
    commutant_basis,
    commutant_dim,
    double_cosets,
    explicit_omega_check,
    induced_bimodule,
    omega_dimension_check,
)
from modp_center.permmod import center_group_algebra
from oracles import commutant_dim_dense, double_cosets as oracle_double_cosets, orbit_partition


def _u_conjugation_orbits(G, U):
    """Number of U-conjugation orbits on G, by enumeration."""
    return len(orbit_partition(U.elements, G.elements, lambda u, x: G.mul(G.mul(u, x), G.inv(u))))


def test_double_cosets_u_equals_g():
    G = symmetric_group(3)
    dc = double_cosets(G, G)
    assert dc.reps == [G.identity] or dc.reps == [min(G.elements)]
    assert dc.sizes() == [6]


def test_double_cosets_s3_a3():
    G, U = named_subgroup("s3", "a3")
    dc = double_cosets(G, U)
    assert dc.sizes() == [3, 3]
    # normal subgroup: double cosets are cosets
    for w, c in zip(dc.reps, dc.cosets):
        assert c == frozenset(G.mul(w, u) for u in U.elements)


def test_double_cosets_s3_c2():
    G, U = named_subgroup("s3", "c2")
    dc = double_cosets(G, U)
    assert sorted(dc.sizes()) == [2, 4]


@pytest.mark.parametrize("g,u", [("s3", "a3"), ("s3", "c2"), ("d4", "center"), ("d4", "c4"), ("s4", "v4"),
                                 ("s4", "d4"), ("heisenberg3", "index3-1"), ("heisenberg3", "center")])
def test_double_cosets_properties(g, u):
    G, U = named_subgroup(g, u, 3)
    dc = double_cosets(G, U)
    assert set(dc.cosets) == set(oracle_double_cosets(G.elements, U.elements, G.mul))
    assert sum(dc.sizes()) == G.order
    assert dc.index_identity_holds()
    for w, c in zip(dc.reps, dc.cosets):
        assert w == min(c)
    assert dc.reps == sorted(dc.reps)


def test_double_cosets_not_subgroup():
    G = symmetric_group(3)
    H = dihedral_d4()
    with pytest.raises(GroupError):
        double_cosets(G, H)


def test_bimodule_basics():
    G, U = named_subgroup("trivial", "trivial")
    assert induced_bimodule(G, U, 2).dim == 1
    G, U = named_subgroup("s3", "a3")
    bm = induced_bimodule(G, U, 3)
    assert bm.dim == 6
    ones = np.ones(U.order, dtype=np.int64)
    char_u = bm.iota(ones)
    assert {G.elements[i] for i in np.flatnonzero(char_u)} == set(U.elements)
    assert bm.iota_equivariant()


def test_bimodule_actions_commute():
    G, U = named_subgroup("d4", "c4")
    bm = induced_bimodule(G, U, 2)
    rng = np.random.default_rng(0)
    F = rng.integers(0, 2, size=G.order)
    for g in G.elements:
        for u in U.elements:
            assert np.array_equal(bm.left(g, bm.right(u, F)), bm.right(u, bm.left(g, F)))


def test_commutant_dim_examples():
    G, U = named_subgroup("trivial", "trivial")
    assert commutant_dim(induced_bimodule(G, U, 2), "both") == 1
    S = symmetric_group(3)
    assert commutant_dim(induced_bimodule(S, S, 3), "both") == 3
    G, U = named_subgroup("s3", "a3")
    bm = induced_bimodule(G, U, 3)
    assert commutant_dim(bm, "both") == 4
    assert commutant_dim(bm, "left-only") == 6
    with pytest.raises(ValueError):
        commutant_dim(bm, "right")


@pytest.mark.parametrize("g,u,p", [("s3", "a3", 3), ("s3", "c2", 2), ("d4", "center", 2), ("d4", "c4", 2)])
def test_commutant_against_dense_oracle(g, u, p):
    G, U = named_subgroup(g, u, p)
    bm = induced_bimodule(G, U, p)
    perms = [s.tolist() for s in bm.left_perms() + bm.right_perms()]
    want = commutant_dim_dense(G.order, perms, p)
    assert commutant_dim(bm, "both") == want == _u_conjugation_orbits(G, U)


def test_commutant_basis_commutes():
    G, U = named_subgroup("d4", "center")
    bm = induced_bimodule(G, U, 2)
    B = commutant_basis(bm)
    assert B.shape[0] == commutant_dim(bm)
    for M in B:
        for s in bm.left_perms() + bm.right_perms():
            P = np.eye(G.order, dtype=np.int64)[:, s]
            assert np.array_equal((M @ P) % 2, (P @ M) % 2)


def test_omega_trivial_u():
    G, U = named_subgroup("s3", "trivial")
    r = omega_dimension_check(G, U, 3)
    assert len(r.reps) == 6 and r.per_w_dims == [1] * 6
    assert r.commutant_dim == 6 and r.passed


def test_omega_s3_a3():
    G, U = named_subgroup("s3", "a3")
    r = omega_dimension_check(G, U, 3)
    assert r.per_w_dims == [3, 1]
    assert r.commutant_dim == 4 and r.passed


def test_omega_d4_center():
    G, U = named_subgroup("d4", "center")
    r = omega_dimension_check(G, U, 2)
    assert r.passed and r.total == r.commutant_dim == _u_conjugation_orbits(G, U) == 8


def test_omega_heisenberg_all_index3():
    G = heisenberg_group(3)
    subs = subgroups_of_order(G, 9)
    assert len(subs) == 4
    for U in subs:
        r = omega_dimension_check(G, U, 3)
        assert r.passed and r.commutant_dim == _u_conjugation_orbits(G, U) == 15


def test_omega_u_equals_g_is_center():
    for G, p in ((symmetric_group(3), 3), (dihedral_d4(), 2), (heisenberg_group(3), 3)):
        r = omega_dimension_check(G, G, p)
        assert r.passed and r.commutant_dim == len(center_group_algebra(G, p))


def test_omega_sweep_small_groups():
    # every (G, U) with U a p-subgroup among the small named groups, p in {2, 3}
    cases = [("s3", "a3", 3), ("s3", "c2", 2), ("s3", "trivial", 2), ("d4", "center", 2), ("d4", "c4", 2),
             ("d4", "d4", 2), ("s4", "v4", 2), ("s4", "d4", 2), ("s4", "trivial", 3), ("heisenberg3", "center", 3)]
    for g, u, p in cases:
        G, U = named_subgroup(g, u, p)
        assert U.is_p_group(p)
        r = omega_dimension_check(G, U, p, explicit=G.order <= 24)
        assert r.passed, (g, u, p)


def test_explicit_omega_map():
    G, U = named_subgroup("s3", "c2", 2)
    bm = induced_bimodule(G, U, 2)
    out = explicit_omega_check(bm, double_cosets(G, U))
    assert out["passed"] and out["image_rank"] == out["basis_size"] == 4
