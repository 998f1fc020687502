"""Independent brute-force oracles.

Pure Python, no numpy and no imports from the package, so a bug in the
library's linear algebra or orbit code cannot hide in both places at once.
"""

from __future__ import annotations

import itertools
from typing import Any, Callable, Hashable, Iterable, Sequence


def gf_rank(rows: Sequence[Sequence[int]], p: int) -> int:
    """Rank over F_p by textbook Gaussian elimination on lists."""
    m = [[x % p for x in r] for r in rows]
    if not m:
        return 0
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = pow(m[r][c], p - 2, p)
        m[r] = [(x * inv) % p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[r])]
        r += 1
        if r == len(m):
            break
    return r


def all_vectors(n: int, p: int) -> Iterable[tuple[int, ...]]:
    return itertools.product(range(p), repeat=n)


def brute_kernel(matrix: Sequence[Sequence[int]], p: int, ncols: int) -> set[tuple[int, ...]]:
    """Every vector x in F_p^ncols with matrix x = 0, by enumeration."""
    out = set()
    for x in all_vectors(ncols, p):
        if all(sum(a * b for a, b in zip(row, x)) % p == 0 for row in matrix):
            out.add(x)
    return out


def span_set(basis: Sequence[Sequence[int]], p: int, ncols: int) -> set[tuple[int, ...]]:
    out = set()
    for coefs in all_vectors(len(basis), p):
        v = [0] * ncols
        for c, b in zip(coefs, basis):
            for j in range(ncols):
                v[j] = (v[j] + c * int(b[j])) % p
        out.add(tuple(v))
    if not basis:
        out.add(tuple([0] * ncols))
    return out


def closure(gens: Sequence[Any], mul: Callable, identity: Any) -> set:
    seen = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = mul(x, g)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def conjugacy_classes(elements: Sequence[Any], mul: Callable, inv: Callable) -> list[frozenset]:
    left = set(elements)
    classes = []
    while left:
        x = next(iter(left))
        cls = frozenset(mul(mul(g, x), inv(g)) for g in elements)
        classes.append(cls)
        left -= cls
    return classes


def orbit_partition(group: Sequence[Any], points: Iterable[Hashable], act: Callable) -> list[frozenset]:
    left = set(points)
    out = []
    while left:
        y = next(iter(left))
        o = frozenset(act(g, y) for g in group)
        out.append(o)
        left -= o
    return out


def double_cosets(G: Sequence[Any], U: Sequence[Any], mul: Callable) -> list[frozenset]:
    left = set(G)
    out = []
    while left:
        w = next(iter(left))
        dc = frozenset(mul(mul(a, w), b) for a in U for b in U)
        out.append(dc)
        left -= dc
    return out


def commutant_dim_dense(n: int, perms: Sequence[Sequence[int]], p: int) -> int:
    """dim {M : M P = P M} for permutation matrices P e_j = e_{s(j)}, via gf_rank."""
    rows = []
    for s in perms:
        # (MP)[i][j] = M[i][s(j)], (PM)[i][j] = M[s^-1(i)][j]
        sinv = [0] * n
        for j, v in enumerate(s):
            sinv[v] = j
        for i in range(n):
            for j in range(n):
                row = [0] * (n * n)
                row[i * n + s[j]] += 1
                row[sinv[i] * n + j] -= 1
                if any(row):
                    rows.append(row)
    return n * n - gf_rank(rows, p)


def mat_mul(a: Sequence[int], b: Sequence[int], d: int, m: int) -> tuple[int, ...]:
    return tuple(
        sum(a[i * d + k] * b[k * d + j] for k in range(d)) % m for i in range(d) for j in range(d)
    )


def heisenberg_elements(m: int) -> list[tuple[int, ...]]:
    """All 3x3 upper unitriangular matrices over Z/m, flattened row-major."""
    return [(1, a, c, 0, 1, b, 0, 0, 1) for a in range(m) for b in range(m) for c in range(m)]


def heisenberg_inv(x: Sequence[int], m: int) -> tuple[int, ...]:
    a, c, b = x[1], x[2], x[5]
    return (1, (-a) % m, (a * b - c) % m, 0, 1, (-b) % m, 0, 0, 1)
