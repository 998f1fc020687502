from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modp_center.groups import cyclic_group, symmetric_group
from modp_center.gsets import GAction
from modp_center.towers import (
    InvariantFamily,
    LevelError,
    check_coherence,
    check_coherence_direct,
    constant_tower,
    density_check,
    example_tower,
    nonclosed_delta_witness,
    persistent_orbits,
    pushforward,
    random_family,
    same_size_preimages,
    sigma,
    upsilon,
)
from modp_center.twisted import builtin_tower, conjugation_tower
from oracles import gf_rank


def _oracle_level(p, n):
    """Points (m, r) with r in Z/p^m, m = 0..n; Z/p^n acts by translation."""
    return [(m, r) for m in range(n + 1) for r in range(p**m)]


def _oracle_down(p, n, y):
    m, r = y
    return (m, r) if m < n else (n - 1, r % p ** (n - 1))


def _oracle_orbit_of(p, n, y):
    m, r = y
    return frozenset((m, (r + g) % p**m) for g in range(p**n))


@pytest.mark.parametrize("p,N,sizes,orbs", [(2, 1, [1, 3], [1, 2]), (2, 3, [1, 3, 7, 15], [1, 2, 3, 4]),
                                            (3, 2, [1, 4, 13], [1, 2, 3])])
def test_example_tower_shape(p, N, sizes, orbs):
    t = example_tower(p, N)
    assert [t.levels[k].size for k in range(N + 1)] == sizes
    assert [t.num_orbits(k) for k in range(N + 1)] == orbs
    for n in range(N + 1):
        assert set(t.levels[n].points) == set(_oracle_level(p, n))
    for n in range(1, N + 1):
        lv, lo = t.levels[n], t.levels[n - 1]
        assert all(lo.points[t.down[n][i]] == _oracle_down(p, n, y) for i, y in enumerate(lv.points))


def test_sigma_examples():
    t = example_tower(2, 2)
    # orbits at level 2 are ordered Y_2(0), Y_2(1), Y_2(2)
    assert sigma(t, 2, 1, [0, 0, 1]).tolist() == [0, 0]
    assert sigma(t, 2, 1, [0, 1, 0]).tolist() == [0, 1]
    assert sigma(t, 2, 1, [1, 0, 0]).tolist() == [1, 0]
    with pytest.raises((LevelError, IndexError, ValueError)):
        sigma(t, 1, 2, [0, 0])


def _oracle_sigma(p, n, m, x):
    """Point-level pushforward of sum x_k * (orbit sum k), read back as orbit coordinates."""
    pts = _oracle_level(p, n)
    mass: dict = {}
    for y in pts:
        z = y
        for k in range(n, m, -1):
            z = _oracle_down(p, k, z)
        mass[z] = (mass.get(z, 0) + x[y[0]]) % p
    return [mass.get((j, 0), 0) for j in range(m + 1)]


@pytest.mark.parametrize("p,N", [(2, 4), (3, 3)])
def test_sigma_matches_oracle(p, N):
    t = example_tower(p, N)
    rng = np.random.default_rng(0)
    for n in range(N + 1):
        for m in range(n + 1):
            for _ in range(5):
                x = rng.integers(0, p, size=n + 1)
                assert sigma(t, n, m, x).tolist() == _oracle_sigma(p, n, m, x.tolist())


def _towers():
    yield example_tower(2, 5)
    yield example_tower(3, 4)
    yield conjugation_tower(builtin_tower("heisenberg3", 3, 2))
    yield constant_tower(GAction(symmetric_group(3), range(3), lambda g, y: g[y]), 3, 3)


@pytest.mark.parametrize("t", list(_towers()), ids=lambda t: t.name)
def test_sigma_square_and_p_vanishing(t):
    p = t.p
    rng = np.random.default_rng(1)
    for n in range(1, t.depth + 1):
        for m in range(n):
            x = rng.integers(0, p, size=t.num_orbits(n))
            assert np.array_equal(pushforward(t, n, m, upsilon(t, n, x)), upsilon(t, m, sigma(t, n, m, x)))
            S = t.sigma_matrix(n, m)
            down = t.orbit_down(n, m)
            for c in range(t.num_orbits(n)):
                same = t.orbit_sizes[n][c] == t.orbit_sizes[m][down[c]]
                assert (S[down[c], c] % p != 0) == same


def test_coherence_examples():
    t = example_tower(2, 3)
    assert check_coherence(t, InvariantFamily.zero(t))
    # fixed point y = (0, 0): singleton orbit at every level
    fam = InvariantFamily(t, [np.eye(t.num_orbits(n), dtype=int)[0] for n in range(4)])
    assert check_coherence(t, fam) and check_coherence_direct(t, fam)
    top_orbits = InvariantFamily(t, [np.eye(t.num_orbits(n), dtype=int)[n] for n in range(4)])
    assert not check_coherence(t, top_orbits)
    assert not check_coherence_direct(t, top_orbits)


@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 5), (3, 3)]))
def test_coherence_criterion_matches_direct(seed, pn):
    t = example_tower(*pn)
    f = random_family(t, np.random.default_rng(seed))
    assert check_coherence(t, f) == check_coherence_direct(t, f)


def test_coherence_criterion_matches_direct_on_conjugation_tower():
    t = conjugation_tower(builtin_tower("heisenberg3", 3, 2))
    rng = np.random.default_rng(5)
    for _ in range(20):
        f = random_family(t, rng)
        assert check_coherence(t, f) == check_coherence_direct(t, f)


def test_persistent_orbits_examples():
    t = example_tower(2, 4)
    assert persistent_orbits(t, 2, 4) == [0, 1, 2]
    assert persistent_orbits(t, 0, 4) == [0]
    c = constant_tower(GAction(symmetric_group(3), range(3), lambda g, y: g[y]), 3, 3)
    for m in range(4):
        for n in range(m, 4):
            assert persistent_orbits(c, m, n) == list(range(c.num_orbits(m)))


@pytest.mark.parametrize("p,N", [(2, 5), (3, 4)])
def test_persistent_monotone_and_stabilizes(p, N):
    t = example_tower(p, N)
    for m in range(N + 1):
        prev = None
        for n in range(m, N + 1):
            cur = set(persistent_orbits(t, m, n))
            if prev is not None:
                assert cur <= prev
            prev = cur
        assert prev == set(range(m + 1))


def test_same_size_preimages_brute():
    p, N = 2, 4
    t = example_tower(p, N)
    for m in range(N + 1):
        for k in range(m, N + 1):
            for d in range(m + 1):
                D = _oracle_orbit_of(p, m, (d, 0))
                want = []
                for c in range(k + 1):
                    C = _oracle_orbit_of(p, k, (c, 0))
                    img = set()
                    for y in C:
                        z = y
                        for j in range(k, m, -1):
                            z = _oracle_down(p, j, z)
                        img.add(z)
                    if img == set(D) and len(C) == len(D):
                        want.append(c)
                assert same_size_preimages(t, m, k, d) == want


@pytest.mark.parametrize("p,N", [(2, 5), (3, 4)])
def test_density_examples(p, N):
    r = density_check(example_tower(p, N), 1, N)
    assert r.equal and r.coherent_dim == r.persistent_dim == 2
    assert r.coherent_image.tolist() == [[1, 0], [0, 1]]


def _oracle_coherent_image_dim(t, m, n):
    """dim of {x_m : (x_m..x_n) with sigma(x_k) = x_j} by explicit block linear algebra."""
    p = t.p
    sizes = [t.num_orbits(k) for k in range(m, n + 1)]
    offs = np.cumsum([0] + sizes)
    total = int(offs[-1])
    rows = []
    for a in range(m, n + 1):
        for b in range(m, a):
            S = t.sigma_matrix(a, b)
            for i in range(S.shape[0]):
                row = [0] * total
                for j in range(S.shape[1]):
                    row[offs[a - m] + j] = int(S[i, j]) % p
                row[offs[b - m] + i] = (row[offs[b - m] + i] - 1) % p
                rows.append(row)
    # dim of projection of the kernel to the first block = nullity - nullity with first block forced 0
    null_all = total - gf_rank(rows, p)
    pin = [[int(i == j) for j in range(total)] for i in range(sizes[0])]
    null_pinned = total - gf_rank(rows + pin, p)
    return null_all - null_pinned


@pytest.mark.parametrize("t", list(_towers()), ids=lambda t: t.name)
def test_density_equality_all_pairs(t):
    for m in range(t.depth + 1):
        for n in range(m + 2, t.depth + 1):
            r = density_check(t, m, n)
            assert r.equal, (m, n)
            assert r.coherent_dim == _oracle_coherent_image_dim(t, m, n)


def test_constant_tower_density_is_full():
    c = constant_tower(GAction(cyclic_group(3), range(6), lambda g, y: (y + 2 * g) % 6 if y % 2 == 0 else y), 3, 2)
    r = density_check(c, 0, 2)
    assert r.equal and r.coherent_dim == c.num_orbits(0)


@pytest.mark.parametrize("p,N", [(2, 4), (3, 3), (2, 1)])
def test_nonclosed_delta_witness(p, N):
    w = nonclosed_delta_witness(example_tower(p, N))
    assert w.passed
    assert w.sizes == [p**k for k in range(N + 1)]
    assert [a["level"] for a in w.approximants] == list(range(N + 1))
    for n, a in enumerate(w.approximants):
        # the approximant's orbit stays the same size all the way up: it is a finite-orbit point
        assert a["matches"] and a["orbit_size"] == w.sizes[n]


def test_nonclosed_delta_fails_on_constant_tower():
    c = constant_tower(GAction(cyclic_group(3), range(3), lambda g, y: (y + g) % 3), 3, 2)
    assert not nonclosed_delta_witness(c).passed


def test_tower_json():
    t = example_tower(2, 2)
    d = t.to_dict()
    back = json.loads(json.dumps(d))
    assert back["depth"] == 2 and back["p"] == 2
    assert len(back["levels"]) == 3


def test_example_tower_cap():
    from modp_center.coeff import CapExceeded

    with pytest.raises(CapExceeded):
        example_tower(3, 12, cap=1000)
