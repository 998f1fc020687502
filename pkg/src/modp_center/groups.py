"""Concrete ambient groups (matrices mod N, permutations, cyclic and unit groups)
and a registry of the small named groups used by the experiments."""

from __future__ import annotations

import itertools
from typing import Any, Callable, Sequence

from .gsets import GroupError, GroupModel, enumerate_group

Matrix = tuple[int, ...]


class MatrixAmbient:
    """Square matrices over Z/N, flattened row-major into tuples."""

    def __init__(self, dim: int, modulus: int):
        self.dim = dim
        self.modulus = modulus
        self.identity: Matrix = tuple(int(i == j) for i in range(dim) for j in range(dim))

    def __repr__(self) -> str:
        return f"MatrixAmbient({self.dim}, mod {self.modulus})"

    def mul(self, a: Matrix, b: Matrix) -> Matrix:
        n, m = self.dim, self.modulus
        if n == 3:
            a0, a1, a2, a3, a4, a5, a6, a7, a8 = a
            b0, b1, b2, b3, b4, b5, b6, b7, b8 = b
            return (
                (a0 * b0 + a1 * b3 + a2 * b6) % m, (a0 * b1 + a1 * b4 + a2 * b7) % m,
                (a0 * b2 + a1 * b5 + a2 * b8) % m, (a3 * b0 + a4 * b3 + a5 * b6) % m,
                (a3 * b1 + a4 * b4 + a5 * b7) % m, (a3 * b2 + a4 * b5 + a5 * b8) % m,
                (a6 * b0 + a7 * b3 + a8 * b6) % m, (a6 * b1 + a7 * b4 + a8 * b7) % m,
                (a6 * b2 + a7 * b5 + a8 * b8) % m,
            )
        rows = [a[i * n:(i + 1) * n] for i in range(n)]
        cols = [b[j::n] for j in range(n)]
        return tuple(sum(x * y for x, y in zip(r, c)) % m for r in rows for c in cols)

    def inv(self, a: Matrix) -> Matrix:
        """Gauss-Jordan over Z/N, pivoting on units."""
        n, m = self.dim, self.modulus
        aug = [list(a[i * n:(i + 1) * n]) + [int(i == j) for j in range(n)] for i in range(n)]
        for c in range(n):
            piv = None
            for r in range(c, n):
                try:
                    inv = pow(aug[r][c], -1, m)
                except ValueError:
                    continue
                piv = r
                break
            if piv is None:
                raise GroupError(f"matrix {a} is not invertible mod {m}")
            aug[c], aug[piv] = aug[piv], aug[c]
            aug[c] = [(x * inv) % m for x in aug[c]]
            for r in range(n):
                if r != c and aug[r][c]:
                    f = aug[r][c]
                    aug[r] = [(x - f * y) % m for x, y in zip(aug[r], aug[c])]
        return tuple(x for row in aug for x in row[n:])

    def reduce(self, a: Matrix, modulus: int) -> Matrix:
        return tuple(x % modulus for x in a)

    def diag(self, entries: Sequence[int]) -> Matrix:
        n = self.dim
        return tuple((entries[i] % self.modulus) if i == j else 0 for i in range(n) for j in range(n))

    def elementary(self, i: int, j: int, value: int = 1) -> Matrix:
        n = self.dim
        out = list(self.identity)
        out[i * n + j] = (out[i * n + j] + value) % self.modulus
        return tuple(out)

    def is_scalar(self, a: Matrix) -> bool:
        n = self.dim
        return all(a[i * n + j] == (a[0] if i == j else 0) for i in range(n) for j in range(n))


class PermutationAmbient:
    """Permutations of {0..n-1} as image tuples; (a*b)(i) = a(b(i))."""

    def __init__(self, n: int):
        self.n = n
        self.identity = tuple(range(n))

    def mul(self, a: tuple, b: tuple) -> tuple:
        return tuple(a[i] for i in b)

    def inv(self, a: tuple) -> tuple:
        out = [0] * len(a)
        for i, x in enumerate(a):
            out[x] = i
        return tuple(out)


class CyclicAmbient:
    """Additive group Z/n."""

    def __init__(self, n: int):
        self.n = n
        self.identity = 0

    def mul(self, a: int, b: int) -> int:
        return (a + b) % self.n

    def inv(self, a: int) -> int:
        return (-a) % self.n


class UnitsAmbient:
    """Multiplicative group (Z/n)^x."""

    def __init__(self, n: int):
        self.n = n
        self.identity = 1 % n if n > 1 else 0

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.n

    def inv(self, a: int) -> int:
        if self.n == 1:
            return 0
        return pow(a, -1, self.n)


class ProductAmbient:
    """Direct product; elements are tuples of component elements."""

    def __init__(self, factors: Sequence[Any]):
        self.factors = tuple(factors)
        self.identity = tuple(f.identity for f in self.factors)

    def mul(self, a: tuple, b: tuple) -> tuple:
        return tuple(f.mul(x, y) for f, x, y in zip(self.factors, a, b))

    def inv(self, a: tuple) -> tuple:
        return tuple(f.inv(x) for f, x in zip(self.factors, a))


def cyclic_group(n: int, p: int | None = None) -> GroupModel:
    return enumerate_group([1 % n] if n > 1 else [], CyclicAmbient(n), cap=n, p=p, name=f"Z/{n}")


def units_group(n: int, p: int | None = None) -> GroupModel:
    from math import gcd

    units = [a for a in range(1, n) if gcd(a, n) == 1] if n > 1 else []
    return enumerate_group(units, UnitsAmbient(n), cap=max(n, 1), p=p, name=f"(Z/{n})^x")


def symmetric_group(n: int) -> GroupModel:
    amb = PermutationAmbient(n)
    gens = []
    if n >= 2:
        gens.append(tuple([1, 0] + list(range(2, n))))
        gens.append(tuple(list(range(1, n)) + [0]))
    return enumerate_group(gens, amb, name=f"S_{n}")


def unitriangular_group(dim: int, modulus: int, p: int | None = None, cap: int = 10**6) -> GroupModel:
    """Upper unitriangular dim x dim matrices over Z/modulus, generated by E_{i,i+1}."""
    amb = MatrixAmbient(dim, modulus)
    gens = [amb.elementary(i, i + 1) for i in range(dim - 1)]
    return enumerate_group(gens, amb, cap=cap, p=p, name=f"U_{dim}(Z/{modulus})")


def heisenberg_group(p: int, modulus: int | None = None) -> GroupModel:
    g = unitriangular_group(3, modulus or p, p=p)
    g.name = f"H(Z/{modulus or p})"
    return g


def dihedral_d4() -> GroupModel:
    """Symmetries of a square with vertices 0..3."""
    amb = PermutationAmbient(4)
    r = (1, 2, 3, 0)
    s = (0, 3, 2, 1)
    return enumerate_group([r, s], amb, name="D_4")


def subgroups_of_order(G: GroupModel, order: int) -> list[GroupModel]:
    """Subgroups of the given order generated by at most two elements, deduplicated."""
    found: dict[frozenset, GroupModel] = {}
    elems = G.elements
    for a, b in itertools.combinations_with_replacement(elems, 2):
        H = enumerate_group([x for x in (a, b) if x != G.identity], G, cap=G.order, p=G.p)
        if H.order == order:
            key = frozenset(H.elements)
            found.setdefault(key, H)
    return [found[k] for k in sorted(found, key=lambda s: sorted(s))]


def is_subgroup(H: GroupModel, G: GroupModel) -> bool:
    if not all(h in G for h in H.elements):
        return False
    return all(G.mul(a, G.inv(b)) in H for a in H.generators or [H.identity] for b in H.elements)


def _heisenberg_subgroups(p: int) -> tuple[GroupModel, dict[str, Callable[[GroupModel], GroupModel]]]:
    G = heisenberg_group(p)
    amb = MatrixAmbient(3, p)
    x, y, z = amb.elementary(0, 1), amb.elementary(1, 2), amb.elementary(0, 2)
    subs: dict[str, Callable[[GroupModel], GroupModel]] = {
        "trivial": lambda G: G.subgroup([], "1"),
        "center": lambda G: G.subgroup([z], "Z(H)"),
        "heisenberg3": lambda G: G,
    }
    # index-p subgroups: <z, x^i y> and <z, x>
    subs[f"index{p}-x"] = lambda G: G.subgroup([z, x], "<z,x>")
    for i in range(p):
        gen = amb.mul(_mat_pow(amb, x, i), y)
        subs[f"index{p}-{i}"] = (lambda gen, i: lambda G: G.subgroup([z, gen], f"<z,x^{i}y>"))(gen, i)
    return G, subs


def _mat_pow(amb: MatrixAmbient, a: Matrix, e: int) -> Matrix:
    out = amb.identity
    for _ in range(e):
        out = amb.mul(out, a)
    return out


NAMED_GROUPS = ("trivial", "s3", "a3", "d4", "heisenberg3", "s4")


def named_group(name: str, p: int | None = None) -> GroupModel:
    """Look up one of the small named groups; heisenberg3 needs p."""
    name = name.lower()
    if name == "trivial":
        return enumerate_group([], PermutationAmbient(1), name="1")
    if name == "s3":
        return symmetric_group(3)
    if name == "a3":
        return named_subgroup("s3", "a3")[1]
    if name == "s4":
        return symmetric_group(4)
    if name == "d4":
        return dihedral_d4()
    if name in ("heisenberg3", "h3"):
        if p is None:
            raise GroupError("heisenberg3 needs p")
        return heisenberg_group(p)
    raise GroupError(f"unknown group {name!r}; known: {', '.join(NAMED_GROUPS)}")


def named_subgroup(gname: str, uname: str, p: int | None = None) -> tuple[GroupModel, GroupModel]:
    """A named pair (G, U) with U a subgroup of G in G's encoding."""
    gname, uname = gname.lower(), uname.lower()
    if gname in ("heisenberg3", "h3"):
        if p is None:
            raise GroupError("heisenberg3 needs p")
        G, subs = _heisenberg_subgroups(p)
        if uname not in subs:
            raise GroupError(f"unknown subgroup {uname!r} of heisenberg3; known: {', '.join(subs)}")
        return G, subs[uname](G)
    G = named_group(gname, p)
    table: dict[str, dict[str, list]] = {
        "s3": {"s3": list(G.generators), "a3": [(1, 2, 0)], "c2": [(1, 0, 2)], "trivial": []},
        "d4": {"d4": list(G.generators), "center": [(2, 3, 0, 1)], "c4": [(1, 2, 3, 0)], "trivial": []},
        "s4": {"s4": list(G.generators), "trivial": [], "v4": [(1, 0, 3, 2), (2, 3, 0, 1)],
               "d4": [(1, 2, 3, 0), (0, 3, 2, 1)], "a4": [(1, 2, 0, 3), (0, 2, 3, 1)]},
        "trivial": {"trivial": []},
    }
    if gname not in table or uname not in table[gname]:
        raise GroupError(f"unknown subgroup {uname!r} of {gname!r}")
    return G, G.subgroup(table[gname][uname], uname)
