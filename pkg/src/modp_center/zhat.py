"""Truncated arithmetic in the completed group ring of Z = A x Z0.

A is a finitely generated abelian group (free part and finite cyclic
factors), kept exact with finite support.  Z0 is compact and is seen
through a tower of finite abelian quotients; an element at level m lives in
F_p[A x Z0_m].
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .coeff import CapExceeded, SparseMatrix, check_prime, dense_cap, nullspace
from .gsets import GroupError, GroupModel
from .permmod import commutant_dim, regular_perms
from .twisted import GroupTower, builtin_tower

Key = tuple  # (A-exponent tuple, Z0 element)


class ZhatError(ValueError):
    pass


@dataclass
class ZSpec:
    """Z = Z^r x prod Z/t_i x Z0, with Z0 given by an abelian group tower."""

    name: str
    p: int
    free_rank: int
    torsion: tuple[int, ...]
    z0: GroupTower
    # symbol used for the free generators when printing
    symbols: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        check_prime(self.p)
        if self.z0.p != self.p:
            raise ZhatError("Z0 tower and spec disagree on p")
        for n, U in enumerate(self.z0.levels, 1):
            if not U.is_abelian():
                raise ZhatError(f"Z0 level {n} is not abelian")
        if not self.symbols:
            self.symbols = tuple("π" if self.free_rank == 1 else f"t{i}" for i in range(self.free_rank))

    @property
    def depth(self) -> int:
        return self.z0.depth

    @property
    def a_rank(self) -> int:
        return self.free_rank + len(self.torsion)

    @property
    def a_finite(self) -> bool:
        return self.free_rank == 0

    def a_normalize(self, a: Iterable[int]) -> tuple[int, ...]:
        a = tuple(int(x) for x in a)
        if len(a) != self.a_rank:
            raise ZhatError(f"A-exponent {a} should have length {self.a_rank}")
        r = self.free_rank
        return a[:r] + tuple(x % t for x, t in zip(a[r:], self.torsion))

    def a_add(self, a: tuple, b: tuple) -> tuple:
        return self.a_normalize(x + y for x, y in zip(a, b))

    def a_elements(self, window: int = 0) -> list[tuple[int, ...]]:
        """All of A when finite; otherwise the free part is cut to [-window, window]."""
        ranges = [range(-window, window + 1)] * self.free_rank + [range(t) for t in self.torsion]
        return [tuple(x) for x in itertools.product(*ranges)]

    def level(self, m: int) -> GroupModel:
        return self.z0.level(m)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "p": self.p,
            "free_rank": self.free_rank,
            "torsion": list(self.torsion),
            "z0": self.z0.name,
            "z0_orders": [U.order for U in self.z0.levels],
        }


def qp_units_spec(p: int, depth: int) -> ZSpec:
    """Q_p^x = π^Z x Z_p^x, with Z_p^x seen through (Z/p^n)^x."""
    return ZSpec(f"Q_{p}^x", p, 1, (), builtin_tower("units", p, depth))


def finite_spec(p: int, depth: int, torsion: Sequence[int] = (2,)) -> ZSpec:
    """A finite, Z0 = Z_p seen through Z/p^n."""
    return ZSpec(f"A={'x'.join(f'Z/{t}' for t in torsion)},Z0=Z_{p}", p, 0, tuple(torsion), builtin_tower("cyclic", p, depth))


BUILTIN_SPECS = ("qp-units", "finite")


def builtin_spec(name: str, p: int, depth: int) -> ZSpec:
    if name == "qp-units":
        return qp_units_spec(p, depth)
    if name == "finite":
        return finite_spec(p, depth)
    raise ZhatError(f"unknown spec {name!r}; known: {', '.join(BUILTIN_SPECS)}")


class ZhatElement:
    """Finitely supported F_p-combination of (a, z) with a in A and z in Z0_m."""

    __slots__ = ("spec", "level", "coeffs")

    def __init__(self, spec: ZSpec, level: int, coeffs: Mapping[Key, int] | None = None):
        self.spec = spec
        self.level = level
        U = spec.level(level)
        p = spec.p
        clean: dict[Key, int] = {}
        for (a, z), c in (coeffs or {}).items():
            a = spec.a_normalize(a)
            if z not in U:
                raise ZhatError(f"{z!r} is not in Z0 level {level}")
            c = (clean.get((a, z), 0) + int(c)) % p
            if c:
                clean[(a, z)] = c
            else:
                clean.pop((a, z), None)
        self.coeffs = clean

    @classmethod
    def zero(cls, spec: ZSpec, level: int) -> ZhatElement:
        return cls(spec, level)

    @classmethod
    def one(cls, spec: ZSpec, level: int) -> ZhatElement:
        return cls.monomial(spec, level, (0,) * spec.a_rank, spec.level(level).identity)

    @classmethod
    def monomial(cls, spec: ZSpec, level: int, a: Iterable[int], z: Any, c: int = 1) -> ZhatElement:
        return cls(spec, level, {(tuple(a), z): c})

    @classmethod
    def random(cls, spec: ZSpec, level: int, rng: np.random.Generator, terms: int = 4, window: int = 2) -> ZhatElement:
        U = spec.level(level)
        out: dict[Key, int] = {}
        for _ in range(terms):
            a = [int(rng.integers(-window, window + 1)) for _ in range(spec.free_rank)]
            a += [int(rng.integers(0, t)) for t in spec.torsion]
            z = U.elements[int(rng.integers(0, U.order))]
            key = (spec.a_normalize(a), z)
            out[key] = out.get(key, 0) + int(rng.integers(1, spec.p))
        return cls(spec, level, out)

    def _check(self, other: ZhatElement) -> None:
        if self.spec is not other.spec:
            raise ZhatError("elements belong to different specs")
        if self.level != other.level:
            raise ZhatError(f"level mismatch: {self.level} vs {other.level}")

    def __add__(self, other: ZhatElement) -> ZhatElement:
        self._check(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0) + c
        return ZhatElement(self.spec, self.level, out)

    def __neg__(self) -> ZhatElement:
        return self.scale(-1)

    def __sub__(self, other: ZhatElement) -> ZhatElement:
        return self + (-other)

    def scale(self, c: int) -> ZhatElement:
        return ZhatElement(self.spec, self.level, {k: c * v for k, v in self.coeffs.items()})

    def __mul__(self, other: ZhatElement | int) -> ZhatElement:
        if isinstance(other, int):
            return self.scale(other)
        return zhat_mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> ZhatElement:
        if e < 0:
            raise ZhatError("negative powers are only defined for monomials; use inverse_monomial")
        out = ZhatElement.one(self.spec, self.level)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ZhatElement):
            return NotImplemented
        return self.spec is other.spec and self.level == other.level and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.level, frozenset(self.coeffs.items())))

    def inverse_monomial(self) -> ZhatElement:
        if len(self.coeffs) != 1:
            raise ZhatError("only monomials are inverted")
        ((a, z), c), = self.coeffs.items()
        U = self.spec.level(self.level)
        return ZhatElement.monomial(self.spec, self.level, [-x for x in a], U.inv(z), pow(c, -1, self.spec.p))

    def to_json(self) -> str:
        items = sorted(self.coeffs.items())
        return json.dumps({json.dumps([list(a), z]): c for (a, z), c in items}, sort_keys=True)

    @classmethod
    def from_json(cls, spec: ZSpec, level: int, text: str) -> ZhatElement:
        raw = json.loads(text)
        out = {}
        for k, c in raw.items():
            a, z = json.loads(k)
            out[(tuple(a), tuple(z) if isinstance(z, list) else z)] = c
        return cls(spec, level, out)

    def pretty(self) -> str:
        """Laurent form: sum of c * t^a * [z], free generators shown by symbol."""
        if not self.coeffs:
            return "0"
        spec = self.spec
        terms = []
        for (a, z), c in sorted(self.coeffs.items()):
            parts = [] if c == 1 else [str(c)]
            for sym, e in zip(spec.symbols, a[: spec.free_rank]):
                if e == 1:
                    parts.append(sym)
                elif e:
                    parts.append(f"{sym}^{e}")
            for i, e in enumerate(a[spec.free_rank:]):
                if e:
                    parts.append(f"a{i}^{e}")
            parts.append(f"[{z}]")
            terms.append("·".join(parts))
        return " + ".join(terms)

    def __repr__(self) -> str:
        return f"ZhatElement(level={self.level}, {self.pretty()})"


def zhat_mul(x: ZhatElement, y: ZhatElement) -> ZhatElement:
    """Group-ring product in F_p[A x Z0_m]."""
    x._check(y)
    spec = x.spec
    U = spec.level(x.level)
    p = spec.p
    out: dict[Key, int] = {}
    for (a, z), c in x.coeffs.items():
        for (b, w), d in y.coeffs.items():
            k = (spec.a_add(a, b), U.mul(z, w))
            out[k] = (out.get(k, 0) + c * d) % p
    return ZhatElement(spec, x.level, out)


def zhat_reduce(x: ZhatElement, level: int) -> ZhatElement:
    """Push coefficients forward along Z0_m -> Z0_level."""
    if level > x.level:
        raise ZhatError(f"cannot reduce level {x.level} to higher level {level}")
    if level < 1:
        raise ZhatError("levels start at 1")
    out: dict[Key, int] = {}
    for (a, z), c in x.coeffs.items():
        k = (a, x.spec.z0.project(x.level, level, z))
        out[k] = out.get(k, 0) + c
    return ZhatElement(x.spec, level, out)


@dataclass
class RemarkIsoReport:
    level: int
    basis_size: int
    bijective: bool
    products_checked: int
    mismatches: list = field(default_factory=list)
    windowed: bool = False

    @property
    def passed(self) -> bool:
        return self.bijective and not self.mismatches

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "basis_size": self.basis_size,
            "bijective": self.bijective,
            "products_checked": self.products_checked,
            "windowed": self.windowed,
            "first_mismatch": self.mismatches[0] if self.mismatches else None,
            "passed": self.passed,
        }


class _PolyOverGroupAlgebra:
    """k[A][Z0_m] kept as a map from A-exponent to a dense coefficient vector on Z0_m.

    Multiplication uses an index table of Z0_m rather than the element-level
    product of ZhatElement, so the two sides of the comparison share no code
    beyond the group law itself.
    """

    def __init__(self, spec: ZSpec, m: int):
        self.spec = spec
        U = spec.level(m)
        self.U = U
        n = U.order
        self.table = np.array([[U.index[U.mul(a, b)] for b in U.elements] for a in U.elements], dtype=np.int64)
        self.n = n

    def mul(self, x: dict, y: dict) -> dict:
        p, n = self.spec.p, self.n
        out: dict = {}
        for a, u in x.items():
            for b, v in y.items():
                prod = np.zeros(n, dtype=np.int64)
                np.add.at(prod, self.table.ravel(), np.outer(u, v).ravel())
                key = tuple(s + t for s, t in zip(a, b))
                key = self.spec.a_normalize(key)
                out[key] = (out.get(key, np.zeros(n, dtype=np.int64)) + prod) % p
        return {k: v for k, v in out.items() if v.any()}

    def from_basis(self, a: tuple, z: Any) -> dict:
        v = np.zeros(self.n, dtype=np.int64)
        v[self.U.index[z]] = 1
        return {a: v}

    def from_zhat(self, x: ZhatElement) -> dict:
        out: dict = {}
        for (a, z), c in x.coeffs.items():
            v = out.setdefault(a, np.zeros(self.n, dtype=np.int64))
            v[self.U.index[z]] = (v[self.U.index[z]] + c) % self.spec.p
        return {k: v for k, v in out.items() if v.any()}


def _same(x: dict, y: dict) -> bool:
    return x.keys() == y.keys() and all(np.array_equal(x[k], y[k]) for k in x)


def remark_iso_check(spec: ZSpec, m: int, window: int = 2) -> RemarkIsoReport:
    """Compare the multiplication tables of F_p[A x Z0_m] and F_p[A][Z0_m] under (a, z) <-> a·z.

    For infinite A only basis elements with free exponents in [-window, window] are used.
    """
    U = spec.level(m)
    poly = _PolyOverGroupAlgebra(spec, m)
    basis = [(a, z) for a in spec.a_elements(window) for z in U.elements]
    images = [poly.from_basis(a, z) for a, z in basis]
    keys = {(a, int(np.flatnonzero(v[a])[0])) for v, (a, _) in zip(images, basis)}
    bijective = len(keys) == len(basis) == len(set(basis))
    mismatches = []
    checked = 0
    for (a, z), pa in zip(basis, images):
        ea = ZhatElement.monomial(spec, m, a, z)
        for (b, w), pb in zip(basis, images):
            lhs = poly.from_zhat(zhat_mul(ea, ZhatElement.monomial(spec, m, b, w)))
            rhs = poly.mul(pa, pb)
            checked += 1
            if not _same(lhs, rhs):
                mismatches.append({"left": [list(a), z], "right": [list(b), w]})
    return RemarkIsoReport(m, len(basis), bijective, checked, mismatches, windowed=not spec.a_finite)


@dataclass
class FaithfulnessReport:
    order: int
    annihilator_dim: int
    endomorphism_dim: int

    @property
    def passed(self) -> bool:
        return self.annihilator_dim == 0 and self.endomorphism_dim == self.order

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "annihilator_dim": self.annihilator_dim,
            "endomorphism_dim": self.endomorphism_dim,
            "passed": self.passed,
        }


def faithfulness_check(Z: GroupModel, p: int, cap: int | None = None) -> FaithfulnessReport:
    """F_p[Z] acting on itself: the annihilator of the unit vector, and the module endomorphisms."""
    check_prime(p)
    if not Z.is_abelian():
        raise GroupError("faithfulness check is for abelian groups")
    cap = dense_cap() if cap is None else cap
    n = Z.order
    if n * n > cap:
        raise CapExceeded(f"|Z|^2 = {n * n} exceeds cap {cap}")
    # x = sum c_g e_g annihilates e_1 iff sum_g c_g e_{g} = 0: column g of the system is e_g itself
    e = Z.index[Z.identity]
    rows = {(Z.index[Z.mul(g, Z.elements[e])], j): 1 for j, g in enumerate(Z.elements)}
    ann = nullspace(SparseMatrix(n, n, p, rows), cap=cap)
    end = commutant_dim(n, regular_perms(Z, "left"), p, cap=cap)
    return FaithfulnessReport(n, int(ann.shape[0]), end)
