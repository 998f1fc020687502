from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modp_center.coeff import CapExceeded
from modp_center.groups import cyclic_group, units_group
from modp_center.zhat import (
    ZhatElement,
    ZhatError,
    faithfulness_check,
    finite_spec,
    qp_units_spec,
    remark_iso_check,
    zhat_mul,
    zhat_reduce,
)

QP3 = qp_units_spec(3, 3)
FIN2 = finite_spec(2, 3)
QP2 = qp_units_spec(2, 3)


def test_one_is_unit():
    x = ZhatElement.random(QP3, 2, np.random.default_rng(0))
    assert ZhatElement.one(QP3, 2) * x == x


def test_qp_units_monomial_law():
    U = QP3.level(1)
    for a in range(-2, 3):
        for b in range(-2, 3):
            for u in U.elements:
                for v in U.elements:
                    lhs = zhat_mul(ZhatElement.monomial(QP3, 1, [a], u), ZhatElement.monomial(QP3, 1, [b], v))
                    assert lhs == ZhatElement.monomial(QP3, 1, [a + b], (u * v) % 3)


def test_frobenius_example():
    g = 2
    x = ZhatElement.one(QP3, 1) + ZhatElement.monomial(QP3, 1, [1], g)
    assert x**3 == ZhatElement.one(QP3, 1) + ZhatElement.monomial(QP3, 1, [3], pow(g, 3, 3))


def test_pi_invertible():
    pi = ZhatElement.monomial(QP3, 2, [1], 1)
    assert pi * pi.inverse_monomial() == ZhatElement.one(QP3, 2)


def test_reduce_examples():
    x = ZhatElement.random(QP3, 2, np.random.default_rng(1))
    assert zhat_reduce(x, 2) == x
    y = ZhatElement.monomial(QP3, 2, [0], 2)  # 2 generates (Z/9)^x
    assert zhat_reduce(y, 1) == ZhatElement.monomial(QP3, 1, [0], 2)
    coset = ZhatElement(QP3, 2, {((0,), z): 1 for z in (1, 4, 7)})  # kernel of (Z/9)^x -> (Z/3)^x
    assert zhat_reduce(coset, 1).is_zero()
    with pytest.raises(ZhatError):
        zhat_reduce(y, 3)


def test_mismatches():
    with pytest.raises(ZhatError):
        ZhatElement.one(QP3, 1) * ZhatElement.one(QP3, 2)
    with pytest.raises(ZhatError):
        ZhatElement.one(QP3, 1) * ZhatElement.one(FIN2, 1)
    with pytest.raises(ZhatError):
        ZhatElement.monomial(QP3, 1, [0], 5)


def test_degree_zero_subring_is_units_group_algebra():
    # A-degree 0 products agree with the group algebra of (Z/p^m)^x computed directly
    for m in (1, 2, 3):
        U = QP3.level(m)
        for u in U.elements:
            for v in U.elements:
                prod = ZhatElement.monomial(QP3, m, [0], u) * ZhatElement.monomial(QP3, m, [0], v)
                assert prod.coeffs == {((0,), (u * v) % 3**m): 1}


@pytest.mark.parametrize("spec", [FIN2, QP3, QP2], ids=lambda s: s.name)
def test_remark_iso_all_levels(spec):
    for m in range(1, 4):
        r = remark_iso_check(spec, m)
        assert r.passed
        assert r.windowed == (not spec.a_finite)


def test_remark_iso_a_trivial():
    from modp_center.twisted import builtin_tower
    from modp_center.zhat import ZSpec

    spec = ZSpec("trivial A", 3, 0, (), builtin_tower("cyclic", 3, 2))
    r = remark_iso_check(spec, 2)
    assert r.passed and r.basis_size == 9


def test_remark_iso_finite_table_size():
    r = remark_iso_check(FIN2, 2)
    assert r.basis_size == 8 and r.products_checked == 64 and r.passed


def test_faithfulness_examples():
    assert faithfulness_check(cyclic_group(1), 2).to_dict() == {
        "order": 1, "annihilator_dim": 0, "endomorphism_dim": 1, "passed": True}
    assert faithfulness_check(cyclic_group(4), 2).endomorphism_dim == 4
    r = faithfulness_check(units_group(9), 3)
    assert r.endomorphism_dim == 6 and r.annihilator_dim == 0
    with pytest.raises(CapExceeded):
        faithfulness_check(cyclic_group(9), 3, cap=10)


def test_json_and_pretty():
    x = ZhatElement(QP3, 2, {((-1,), 2): 1, ((2,), 1): 2})
    back = ZhatElement.from_json(QP3, 2, x.to_json())
    assert back == x
    raw = json.loads(x.to_json())
    assert raw == {"[[-1], 2]": 1, "[[2], 1]": 2}
    assert x.pretty() == "π^-1·[2] + 2·π^2·[1]"
    assert ZhatElement.zero(QP3, 1).pretty() == "0"


specs = st.sampled_from([QP3, FIN2, QP2])


@given(specs, st.integers(0, 2**32 - 1))
def test_ring_axioms(spec, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, spec.depth + 1))
    x, y, z = (ZhatElement.random(spec, m, rng) for _ in range(3))
    assert (x * y) * z == x * (y * z)
    assert x * y == y * x
    assert x * (y + z) == x * y + x * z
    assert (x - x).is_zero()


@given(specs, st.integers(0, 2**32 - 1))
def test_frobenius(spec, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, spec.depth + 1))
    x, y = ZhatElement.random(spec, m, rng), ZhatElement.random(spec, m, rng)
    assert (x + y) ** spec.p == x**spec.p + y**spec.p


@given(specs, st.integers(0, 2**32 - 1))
def test_reduce_is_unital_ring_hom(spec, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, spec.depth + 1))
    k = int(rng.integers(1, m + 1))
    x, y = ZhatElement.random(spec, m, rng), ZhatElement.random(spec, m, rng)
    assert zhat_reduce(x * y, k) == zhat_reduce(x, k) * zhat_reduce(y, k)
    assert zhat_reduce(x + y, k) == zhat_reduce(x, k) + zhat_reduce(y, k)
    assert zhat_reduce(ZhatElement.one(spec, m), k) == ZhatElement.one(spec, k)
    # composition of reductions
    assert zhat_reduce(zhat_reduce(x, k), 1) == zhat_reduce(x, 1)
