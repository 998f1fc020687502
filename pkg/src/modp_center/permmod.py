"""Permutation modules F_p[Y] at a single finite level.

Invariants are computed either from orbit sums (the default) or as the
common kernel of rho(g) - I over the generators; the two must agree because
orbit sums of a finite G-set form a basis of its invariants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Hashable, Mapping, Sequence

import numpy as np

from .coeff import SparseMatrix, check_prime, dense_cap, CapExceeded, nullspace, rank, solve_in_span
from .gsets import GAction, GroupModel, orbit_labels, orbits


class PermutationModule:
    """F_p[Y] for a finite G-set Y; group elements permute basis coordinates."""

    def __init__(self, action: GAction, p: int):
        self.action = action
        self.p = check_prime(p)

    @property
    def dim(self) -> int:
        return self.action.size

    def element(self, coeffs: Mapping[Hashable, int]) -> ModuleElement:
        return ModuleElement(self, coeffs)

    def __repr__(self) -> str:
        return f"PermutationModule(F_{self.p}, dim={self.dim})"


class ModuleElement:
    """Sparse element of a permutation module: point -> nonzero coefficient."""

    __slots__ = ("module", "coeffs")

    def __init__(self, module: PermutationModule, coeffs: Mapping[Hashable, int]):
        self.module = module
        p = module.p
        clean = {}
        for y, c in coeffs.items():
            if y not in module.action.index:
                raise KeyError(f"{y!r} is not a basis point")
            c = int(c) % p
            if c:
                clean[y] = c
        self.coeffs = clean

    def to_vector(self) -> np.ndarray:
        v = np.zeros(self.module.dim, dtype=np.int64)
        idx = self.module.action.index
        for y, c in self.coeffs.items():
            v[idx[y]] = c
        return v

    @classmethod
    def from_vector(cls, module: PermutationModule, v: Sequence[int]) -> ModuleElement:
        pts = module.action.points
        return cls(module, {pts[i]: int(c) for i, c in enumerate(v) if int(c) % module.p})

    def act(self, g: Any) -> ModuleElement:
        a = self.module.action
        return ModuleElement(self.module, {a.act(g, y): c for y, c in self.coeffs.items()})

    def __add__(self, other: ModuleElement) -> ModuleElement:
        out = dict(self.coeffs)
        for y, c in other.coeffs.items():
            out[y] = out.get(y, 0) + c
        return ModuleElement(self.module, out)

    def scale(self, c: int) -> ModuleElement:
        return ModuleElement(self.module, {y: c * v for y, v in self.coeffs.items()})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModuleElement):
            return NotImplemented
        return self.module is other.module and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(frozenset(self.coeffs.items()))

    def to_json(self) -> str:
        return json.dumps({json.dumps(y): c for y, c in sorted(self.coeffs.items())}, sort_keys=True)

    @classmethod
    def from_json(cls, module: PermutationModule, text: str) -> ModuleElement:
        raw = json.loads(text)
        return cls(module, {_decode_point(json.loads(k)): v for k, v in raw.items()})

    def __repr__(self) -> str:
        return f"ModuleElement({self.coeffs})"


def _decode_point(obj: Any) -> Hashable:
    if isinstance(obj, list):
        return tuple(_decode_point(x) for x in obj)
    return obj


def orbit_sums(m: PermutationModule) -> list[ModuleElement]:
    """One all-ones element per orbit, orbits ordered by least point."""
    return [ModuleElement(m, {y: 1 for y in o.points}) for o in orbits(m.action)]


def orbit_sum_matrix(m: PermutationModule) -> np.ndarray:
    """Orbit indicator rows; already in reduced echelon form (disjoint supports, leading ones)."""
    label = orbit_labels(m.action)
    k = int(label.max()) + 1 if label.size else 0
    out = np.zeros((k, m.dim), dtype=np.int64)
    out[label, np.arange(m.dim)] = 1
    return out


def invariant_system(m: PermutationModule) -> SparseMatrix:
    """Stacked rho(g) - I over generators; its kernel is the invariant subspace."""
    n = m.dim
    entries: dict[tuple[int, int], int] = {}
    row = 0
    rows = []
    for perm in m.action.perms:
        # (rho(g) x)[perm[i]] = x[i]  =>  row perm[i]: x[i] - x[perm[i]]
        for i in range(n):
            j = int(perm[i])
            if i == j:
                continue
            rows.append({i: 1, j: m.p - 1})
    for r in rows:
        for j, v in r.items():
            entries[(row, j)] = v
        row += 1
    return SparseMatrix(row, n, m.p, entries)


def invariants(m: PermutationModule, route: str = "orbit", cap: int | None = None) -> np.ndarray:
    """Basis (rows, reduced echelon form) of the subspace fixed by the group."""
    if route == "orbit":
        return orbit_sum_matrix(m)
    if route == "nullspace":
        cap = dense_cap() if cap is None else cap
        if m.dim > cap:
            raise CapExceeded(f"module dimension {m.dim} exceeds nullspace cap {cap}; use the orbit route")
        return nullspace(invariant_system(m), cap=cap)
    raise ValueError(f"unknown route {route!r}")


@dataclass
class FiniteInvariantsReport:
    orbit_dim: int
    nullspace_dim: int
    same_echelon_form: bool
    # nullspace basis row i = sum_j orbit_to_null[i, j] * orbit sum j, and conversely
    null_in_orbits: np.ndarray = field(repr=False)
    orbits_in_null: np.ndarray = field(repr=False)
    certificate_ok: bool = False

    @property
    def passed(self) -> bool:
        return self.orbit_dim == self.nullspace_dim and self.same_echelon_form and self.certificate_ok

    def to_dict(self) -> dict:
        return {
            "orbit_dim": self.orbit_dim,
            "nullspace_dim": self.nullspace_dim,
            "same_echelon_form": self.same_echelon_form,
            "certificate_ok": self.certificate_ok,
            "null_in_orbits": self.null_in_orbits.tolist(),
            "orbits_in_null": self.orbits_in_null.tolist(),
            "passed": self.passed,
        }


def verify_finite_invariants(m: PermutationModule, cap: int | None = None) -> FiniteInvariantsReport:
    """Check that orbit sums form a basis of the invariants, with change-of-basis certificates."""
    p = m.p
    osum = orbit_sum_matrix(m)
    null = invariants(m, "nullspace", cap=cap)
    same = osum.shape == null.shape and bool(np.array_equal(osum, null))
    try:
        a = solve_in_span(osum, null, p)
        b = solve_in_span(null, osum, p) if null.shape[0] else np.zeros((osum.shape[0], 0), dtype=np.int64)
        ok = (
            np.array_equal((a @ osum) % p, null % p)
            and np.array_equal((b @ null) % p, osum % p)
            and osum.shape[0] == null.shape[0]
        )
    except ValueError:
        a = np.zeros((0, 0), dtype=np.int64)
        b = np.zeros((0, 0), dtype=np.int64)
        ok = False
    return FiniteInvariantsReport(osum.shape[0], null.shape[0], same, a, b, bool(ok))


def conjugation_action(G: GroupModel, validate: bool = True) -> GAction:
    return GAction(G, G.elements, G.conj, validate=validate)


def center_group_algebra(G: GroupModel, p: int, cap: int | None = None) -> list[ModuleElement]:
    """Class sums: a basis of the center of F_p[G]."""
    cap = 10**6 if cap is None else cap
    if G.order > cap:
        raise CapExceeded(f"|G| = {G.order} exceeds cap {cap}")
    return orbit_sums(PermutationModule(conjugation_action(G), p))


def regular_perms(G: GroupModel, side: str, elements: Sequence[Any] | None = None) -> list[np.ndarray]:
    """Index permutations of F_p[G] for left (e_x -> e_gx) or right (e_x -> e_xg^-1) translation."""
    idx = G.index
    out = []
    for g in (G.generators if elements is None else elements):
        if side == "left":
            out.append(np.array([idx[G.mul(g, x)] for x in G.elements], dtype=np.int64))
        elif side == "right":
            gi = G.inv(g)
            out.append(np.array([idx[G.mul(x, gi)] for x in G.elements], dtype=np.int64))
        else:
            raise ValueError(side)
    return out


def commutant_system(n: int, perms: Sequence[np.ndarray], p: int) -> SparseMatrix:
    """Linear conditions on an n x n matrix M (unknown M[i, j] at column i*n + j) for M P = P M.

    With P e_j = e_{s(j)}: (M P)[i, j] = M[i, s(j)] and (P M)[i, j] = M[s^-1(i), j].
    """
    rows: list[dict[int, int]] = []
    for s in perms:
        sinv = np.empty_like(s)
        sinv[s] = np.arange(n)
        for i in range(n):
            si = int(sinv[i])
            for j in range(n):
                a = i * n + int(s[j])
                b = si * n + j
                if a != b:
                    rows.append({a: 1, b: p - 1})
    return SparseMatrix.from_rows(rows, n * n, p)


def commutant_dim(n: int, perms: Sequence[np.ndarray], p: int, cap: int | None = None) -> int:
    """dim of {M in M_n(F_p) : M commutes with every given permutation matrix}, by linear solve."""
    cap = dense_cap() if cap is None else cap
    if n * n > cap:
        raise CapExceeded(f"commutant system has {n * n} unknowns, cap is {cap}")
    system = commutant_system(n, perms, p)
    return n * n - rank(system, cap=cap)


def bimodule_end_dim(G: GroupModel, p: int, cap: int | None = None) -> int:
    """dim of linear maps F_p[G] -> F_p[G] commuting with left and right translations."""
    check_prime(p)
    perms = regular_perms(G, "left") + regular_perms(G, "right")
    return commutant_dim(G.order, perms, p, cap=cap)


def random_action(rng: np.random.Generator, max_group: int = 64, max_points: int = 64) -> GAction:
    """A random action of a random permutation-style group, for property sweeps.

    The group is generated by one or two random permutations of a small set
    (rejected until its order is at most ``max_group``); the points are a
    random disjoint union of coset-like orbits realised as copies of that set
    and of the group acting on itself.
    """
    from .groups import PermutationAmbient
    from .gsets import enumerate_group

    while True:
        k = int(rng.integers(2, 7))
        amb = PermutationAmbient(k)
        gens = [tuple(int(x) for x in rng.permutation(k)) for _ in range(int(rng.integers(1, 3)))]
        try:
            G = enumerate_group(gens, amb, cap=max_group)
        except CapExceeded:
            continue
        break
    # points: (copy, kind, x) where kind 0 = natural action on {0..k-1}, kind 1 = regular action,
    # kind 2 = trivial point
    pts: list[tuple] = []
    budget = max_points
    copy = 0
    while budget > 0:
        kind = int(rng.integers(0, 3))
        size = {0: k, 1: G.order, 2: 1}[kind]
        if size > budget:
            if budget >= 1:
                pts.append((copy, 2, 0))
            break
        if kind == 0:
            pts.extend((copy, 0, x) for x in range(k))
        elif kind == 1:
            pts.extend((copy, 1, G.index[g]) for g in G.elements)
        else:
            pts.append((copy, 2, 0))
        budget -= size
        copy += 1
        if rng.random() < 0.25:
            break

    def act(g: tuple, y: tuple) -> tuple:
        c, kind, x = y
        if kind == 0:
            return (c, 0, g[x])
        if kind == 1:
            return (c, 1, G.index[G.mul(g, G.elements[x])])
        return y

    return GAction(G, pts, act)
