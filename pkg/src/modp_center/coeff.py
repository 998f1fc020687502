"""Exact coefficient rings of characteristic p and linear algebra over GF(p).

Two rings are provided: the prime field F_p (:class:`Fp`) and group algebras
F_p[A] of finite abelian groups A given as products of cyclic groups
(:class:`GroupAlgebraElement`).  Matrices are stored in coordinate format
(:class:`SparseMatrix`); kernels and ranks are computed by a sparse
row-echelon routine, with a dense numpy routine for small dense inputs.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

DEFAULT_DENSE_CAP = 5000
MAX_PRIME = 97


class CapExceeded(RuntimeError):
    """An instance is larger than the configured computational cap."""


class CoefficientError(ValueError):
    """Mismatched moduli or groups in a ring operation."""


def dense_cap() -> int:
    return int(os.environ.get("MODP_CENTER_DENSE_CAP", DEFAULT_DENSE_CAP))


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, int(n**0.5) + 1))


def check_prime(p: int) -> int:
    if not is_prime(p) or p > MAX_PRIME:
        raise CoefficientError(f"p must be a prime in [2, {MAX_PRIME}], got {p}")
    return p


@dataclass(frozen=True)
class Fp:
    """An element of the prime field F_p."""

    value: int
    p: int

    def __post_init__(self) -> None:
        check_prime(self.p)
        object.__setattr__(self, "value", self.value % self.p)

    def _coerce(self, other: Fp | int) -> int:
        if isinstance(other, Fp):
            if other.p != self.p:
                raise CoefficientError(f"F_{self.p} and F_{other.p} do not mix")
            return other.value
        return int(other)

    def __add__(self, other: Fp | int) -> Fp:
        return Fp(self.value + self._coerce(other), self.p)

    __radd__ = __add__

    def __sub__(self, other: Fp | int) -> Fp:
        return Fp(self.value - self._coerce(other), self.p)

    def __rsub__(self, other: Fp | int) -> Fp:
        return Fp(self._coerce(other) - self.value, self.p)

    def __neg__(self) -> Fp:
        return Fp(-self.value, self.p)

    def __mul__(self, other: Fp | int) -> Fp:
        return Fp(self.value * self._coerce(other), self.p)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> Fp:
        return Fp(pow(self.value, e, self.p), self.p)

    def inverse(self) -> Fp:
        if self.value == 0:
            raise ZeroDivisionError("0 has no inverse in F_p")
        return Fp(pow(self.value, -1, self.p), self.p)

    def __truediv__(self, other: Fp | int) -> Fp:
        return self * Fp(self._coerce(other), self.p).inverse()

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Fp):
            return self.p == other.p and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.p
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.value, self.p))

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.p})"


class GroupAlgebraElement:
    """Element of F_p[A] for A = Z/n_1 x ... x Z/n_r.

    Group elements are tuples of residues; ``coeffs`` never stores zeros.
    The empty product of cyclic groups is the trivial group, whose algebra is F_p.
    """

    __slots__ = ("p", "orders", "coeffs")

    def __init__(self, p: int, orders: Sequence[int], coeffs: Mapping[tuple[int, ...], int] | None = None):
        self.p = check_prime(p)
        self.orders = tuple(int(n) for n in orders)
        if any(n < 1 for n in self.orders):
            raise CoefficientError(f"cyclic orders must be positive: {self.orders}")
        clean: dict[tuple[int, ...], int] = {}
        for g, c in (coeffs or {}).items():
            g = self._normalize(g)
            c = (clean.get(g, 0) + int(c)) % p
            if c:
                clean[g] = c
            else:
                clean.pop(g, None)
        self.coeffs = clean

    def _normalize(self, g: Iterable[int] | int) -> tuple[int, ...]:
        if isinstance(g, int):
            g = (g,)
        g = tuple(g)
        if len(g) != len(self.orders):
            raise CoefficientError(f"element {g} does not belong to a group with orders {self.orders}")
        return tuple(x % n for x, n in zip(g, self.orders))

    @classmethod
    def one(cls, p: int, orders: Sequence[int]) -> GroupAlgebraElement:
        return cls(p, orders, {(0,) * len(orders): 1})

    @classmethod
    def zero(cls, p: int, orders: Sequence[int]) -> GroupAlgebraElement:
        return cls(p, orders, {})

    @classmethod
    def basis(cls, p: int, orders: Sequence[int], g: Iterable[int] | int) -> GroupAlgebraElement:
        el = cls(p, orders)
        return cls(p, orders, {el._normalize(g): 1})

    @classmethod
    def random(cls, p: int, orders: Sequence[int], rng: np.random.Generator) -> GroupAlgebraElement:
        group = list(itertools.product(*(range(n) for n in orders)))
        values = rng.integers(0, p, size=len(group))
        return cls(p, orders, dict(zip(group, (int(v) for v in values))))

    def group_elements(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(n) for n in self.orders))

    def _check_compatible(self, other: GroupAlgebraElement) -> None:
        if not isinstance(other, GroupAlgebraElement):
            raise CoefficientError(f"cannot combine group algebra element with {type(other).__name__}")
        if other.p != self.p or other.orders != self.orders:
            raise CoefficientError(
                f"F_{self.p}[{self.orders}] and F_{other.p}[{other.orders}] are different rings"
            )

    def __add__(self, other: GroupAlgebraElement) -> GroupAlgebraElement:
        self._check_compatible(other)
        out = dict(self.coeffs)
        for g, c in other.coeffs.items():
            out[g] = out.get(g, 0) + c
        return GroupAlgebraElement(self.p, self.orders, out)

    def __neg__(self) -> GroupAlgebraElement:
        return GroupAlgebraElement(self.p, self.orders, {g: -c for g, c in self.coeffs.items()})

    def __sub__(self, other: GroupAlgebraElement) -> GroupAlgebraElement:
        return self + (-other)

    def scale(self, c: int) -> GroupAlgebraElement:
        return GroupAlgebraElement(self.p, self.orders, {g: c * v for g, v in self.coeffs.items()})

    def __mul__(self, other: GroupAlgebraElement | int) -> GroupAlgebraElement:
        if isinstance(other, (int, Fp)):
            return self.scale(int(other.value if isinstance(other, Fp) else other))
        return convolve(self, other)

    def __rmul__(self, other: int) -> GroupAlgebraElement:
        return self.scale(int(other))

    def __pow__(self, e: int) -> GroupAlgebraElement:
        if e < 0:
            raise ValueError("negative powers are not supported")
        result = GroupAlgebraElement.one(self.p, self.orders)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int):
            other = GroupAlgebraElement.one(self.p, self.orders).scale(other)
        if not isinstance(other, GroupAlgebraElement):
            return NotImplemented
        return (self.p, self.orders, self.coeffs) == (other.p, other.orders, other.coeffs)

    def __hash__(self) -> int:
        return hash((self.p, self.orders, frozenset(self.coeffs.items())))

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for g in sorted(self.coeffs):
            c = self.coeffs[g]
            if not any(g):
                terms.append(str(c))
            else:
                terms.append(f"{c}*g{list(g)}")
        return " + ".join(terms)


def convolve(x: GroupAlgebraElement, y: GroupAlgebraElement) -> GroupAlgebraElement:
    """Product in F_p[A]: sum over pairs of basis elements, exponents added."""
    x._check_compatible(y)
    out: dict[tuple[int, ...], int] = {}
    orders = x.orders
    p = x.p
    for g, a in x.coeffs.items():
        for h, b in y.coeffs.items():
            k = tuple((s + t) % n for s, t, n in zip(g, h, orders))
            out[k] = (out.get(k, 0) + a * b) % p
    return GroupAlgebraElement(p, orders, out)


class SparseMatrix:
    """Coordinate-format matrix over F_p with no stored zeros."""

    __slots__ = ("rows", "cols", "p", "entries")

    def __init__(self, rows: int, cols: int, p: int, entries: Mapping[tuple[int, int], int] | None = None):
        self.rows = int(rows)
        self.cols = int(cols)
        self.p = check_prime(p)
        clean: dict[tuple[int, int], int] = {}
        for (i, j), v in (entries or {}).items():
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise IndexError(f"entry ({i}, {j}) outside a {rows}x{cols} matrix")
            v = int(v) % p
            if v:
                clean[(int(i), int(j))] = v
        self.entries = clean

    @classmethod
    def from_dense(cls, a: np.ndarray | Sequence[Sequence[int]], p: int) -> SparseMatrix:
        a = np.asarray(a, dtype=np.int64) % p
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        rows, cols = a.shape
        nz = np.nonzero(a)
        return cls(rows, cols, p, {(int(i), int(j)): int(a[i, j]) for i, j in zip(*nz)})

    @classmethod
    def from_rows(cls, rows: Sequence[Mapping[int, int]], cols: int, p: int) -> SparseMatrix:
        entries: dict[tuple[int, int], int] = {}
        for i, row in enumerate(rows):
            for j, v in row.items():
                entries[(i, j)] = (entries.get((i, j), 0) + v) % p
        return cls(len(rows), cols, p, entries)

    @classmethod
    def identity(cls, n: int, p: int) -> SparseMatrix:
        return cls(n, n, p, {(i, i): 1 for i in range(n)})

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.rows, self.cols), dtype=np.int64)
        for (i, j), v in self.entries.items():
            a[i, j] = v
        return a

    def row_dicts(self) -> list[dict[int, int]]:
        out: list[dict[int, int]] = [{} for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def __sub__(self, other: SparseMatrix) -> SparseMatrix:
        if (self.rows, self.cols, self.p) != (other.rows, other.cols, other.p):
            raise CoefficientError("shape or modulus mismatch")
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = (out.get(k, 0) - v) % self.p
        return SparseMatrix(self.rows, self.cols, self.p, out)

    def matvec(self, x: Sequence[int]) -> np.ndarray:
        y = np.zeros(self.rows, dtype=np.int64)
        for (i, j), v in self.entries.items():
            y[i] += v * int(x[j])
        return y % self.p

    def __repr__(self) -> str:
        return f"SparseMatrix({self.rows}x{self.cols} over F_{self.p}, nnz={len(self.entries)})"


def rref(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over F_p of a dense matrix; zero rows dropped."""
    a = np.array(a, dtype=np.int64) % p
    if a.ndim != 2:
        raise ValueError("expected a 2-d array")
    nrows, ncols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        a[r, c:] = (a[r, c:] * pow(int(a[r, c]), -1, p)) % p
        col = a[:, c].copy()
        col[r] = 0
        hit = np.flatnonzero(col)
        if hit.size:
            a[hit, c:] = (a[hit, c:] - np.outer(col[hit], a[r, c:])) % p
        pivots.append(c)
        r += 1
    return a[:r], pivots


def _sparse_echelon(rows: Iterable[Mapping[int, int]], p: int) -> dict[int, dict[int, int]]:
    """Incremental row reduction; returns pivot column -> row with leading 1 at the pivot.

    Rows are reduced against existing pivots on their least column, so the
    result is in (non-reduced) echelon form keyed by pivot.
    """
    pivots: dict[int, dict[int, int]] = {}
    for raw in rows:
        row = {j: v % p for j, v in raw.items() if v % p}
        while row:
            c = min(row)
            prow = pivots.get(c)
            if prow is None:
                inv = pow(row[c], -1, p)
                pivots[c] = {j: (v * inv) % p for j, v in row.items()}
                break
            f = row[c]
            for j, v in prow.items():
                nv = (row.get(j, 0) - f * v) % p
                if nv:
                    row[j] = nv
                else:
                    row.pop(j, None)
    return pivots


def _back_substitute(pivots: dict[int, dict[int, int]], p: int) -> dict[int, dict[int, int]]:
    """Turn an echelon pivot table into reduced echelon form."""
    done: dict[int, dict[int, int]] = {}
    for c in sorted(pivots, reverse=True):
        row = dict(pivots[c])
        for j in sorted(k for k in row if k != c and k in done):
            f = row.get(j, 0)
            if not f:
                continue
            for k, v in done[j].items():
                nv = (row.get(k, 0) - f * v) % p
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
        done[c] = row
    return done


def _as_sparse(m: SparseMatrix | np.ndarray, p: int | None) -> SparseMatrix:
    if isinstance(m, SparseMatrix):
        if p is not None and p != m.p:
            raise CoefficientError(f"matrix is over F_{m.p}, not F_{p}")
        return m
    if p is None:
        raise ValueError("p is required for dense input")
    return SparseMatrix.from_dense(m, p)


def rank(m: SparseMatrix | np.ndarray, p: int | None = None, cap: int | None = None) -> int:
    m = _as_sparse(m, p)
    cap = dense_cap() if cap is None else cap
    if m.cols > cap:
        raise CapExceeded(f"{m.cols} columns exceeds the linear-algebra cap {cap}")
    return len(_sparse_echelon(m.row_dicts(), m.p))


def nullspace(m: SparseMatrix | np.ndarray, p: int | None = None, cap: int | None = None) -> np.ndarray:
    """Basis of the right kernel {x : m x = 0} over F_p.

    Rows of the returned array form the basis, in reduced row echelon form
    (pivots in increasing column order).  Shape is (dim, cols).
    """
    m = _as_sparse(m, p)
    cap = dense_cap() if cap is None else cap
    if m.cols > cap:
        raise CapExceeded(f"{m.cols} columns exceeds the linear-algebra cap {cap}")
    p = m.p
    reduced = _back_substitute(_sparse_echelon(m.row_dicts(), p), p)
    free = [j for j in range(m.cols) if j not in reduced]
    basis = np.zeros((len(free), m.cols), dtype=np.int64)
    for k, f in enumerate(free):
        basis[k, f] = 1
    for c, row in reduced.items():
        for k, f in enumerate(free):
            v = row.get(f)
            if v:
                basis[k, c] = (-v) % p
    if not free:
        return basis
    return rref(basis, p)[0]


def span_rref(vectors: np.ndarray | Sequence[Sequence[int]], p: int, ncols: int | None = None) -> np.ndarray:
    """Canonical basis (reduced echelon form) of the span of the given rows."""
    a = np.asarray(vectors, dtype=np.int64)
    if a.size == 0:
        return np.zeros((0, ncols if ncols is not None else (a.shape[1] if a.ndim == 2 else 0)), dtype=np.int64)
    return rref(a, p)[0]


def same_span(a: np.ndarray, b: np.ndarray, p: int) -> bool:
    ra, rb = span_rref(a, p, a.shape[1]), span_rref(b, p, b.shape[1])
    return ra.shape == rb.shape and bool(np.array_equal(ra, rb))


def contained_in(a: np.ndarray, b: np.ndarray, p: int) -> bool:
    """Whether span(a) is a subspace of span(b)."""
    if a.shape[0] == 0:
        return True
    rb = span_rref(b, p, a.shape[1])
    both = span_rref(np.vstack([rb, a]), p, a.shape[1])
    return both.shape[0] == rb.shape[0]


def solve_in_span(basis: np.ndarray, targets: np.ndarray, p: int) -> np.ndarray:
    """Coefficients C with C @ basis == targets (mod p); basis must have independent rows.

    Raises ValueError if some target is outside the span.
    """
    basis = np.asarray(basis, dtype=np.int64) % p
    targets = np.asarray(targets, dtype=np.int64) % p
    k = basis.shape[0]
    if targets.shape[0] == 0:
        return np.zeros((0, k), dtype=np.int64)
    # [basis^T | targets^T] reduced: coefficients read off pivot rows.
    aug = np.hstack([basis.T, targets.T])
    red, piv = rref(aug, p)
    if any(c >= k for c in piv):
        raise ValueError("target vector outside the span")
    if len(piv) != k:
        raise ValueError("basis rows are linearly dependent")
    return red[:k, k:].T.copy() % p
