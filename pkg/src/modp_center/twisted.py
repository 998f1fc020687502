"""Twisted conjugation on finite quotients of a pro-p group.

For a conjugator w in the ambient group and U_w = U ∩ wUw^-1, the twisted
action of U_w on U is (u, x) -> (w^-1 u w) x u^-1.  Its fixed space in
F_p[U] is {λ : λu = (w^-1 u w)λ for u in U_w}, spanned by orbit sums at each
finite level.  Towers U_1 <- U_2 <- ... of quotients let us watch the images
of these fixed spaces at a fixed low level as the level grows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Sequence

import numpy as np

from .coeff import CapExceeded, SparseMatrix, check_prime, contained_in, dense_cap, nullspace, span_rref
from .groups import CyclicAmbient, MatrixAmbient, UnitsAmbient, cyclic_group, unitriangular_group, units_group
from .gsets import GAction, GroupError, GroupModel, enumerate_group, generating_set, orbit_labels
from .permmod import PermutationModule, orbit_sum_matrix
from .towers import TowerOfActions

DEFAULT_LEVEL_CAP = 100_000
BUILTIN_TOWERS = ("heisenberg3", "unitriangular4", "cyclic", "units")


class GroupTower:
    """Finite quotients U_1, ..., U_N of a profinite group, inside ambient groups.

    ``quotient(n, x)`` maps an element of level n (or of its ambient) to level
    n - 1.  Levels are numbered from 1.
    """

    def __init__(
        self,
        levels: Sequence[GroupModel],
        ambients: Sequence[Any],
        quotient: Callable[[int, Any], Any] | None,
        p: int,
        name: str = "tower",
        require_p_group: bool = False,
        validate: bool = True,
    ):
        self.levels = list(levels)
        self.ambients = list(ambients)
        if len(self.ambients) != len(self.levels):
            raise ValueError("one ambient per level")
        self.quotient = quotient
        self.p = check_prime(p)
        self.name = name
        if require_p_group:
            for n, U in enumerate(self.levels, 1):
                if not U.is_p_group(p):
                    raise GroupError(f"level {n} has order {U.order}, not a power of {p}")
        if validate:
            self._validate()

    def _validate(self) -> None:
        for n in range(2, self.depth + 1):
            U, V = self.level(n), self.level(n - 1)
            q = lambda x: self.quotient(n, x)  # noqa: E731
            imgs = [q(g) for g in U.generators]
            if any(y not in V for y in imgs):
                raise GroupError(f"quotient map from level {n} leaves U_{n - 1}")
            for g in U.generators:
                for h in U.generators:
                    if q(U.mul(g, h)) != V.mul(q(g), q(h)):
                        raise GroupError(f"quotient map from level {n} is not a homomorphism")
            if enumerate_group([y for y in imgs if y != V.identity], V, cap=V.order).order != V.order:
                raise GroupError(f"quotient map from level {n} is not surjective")

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> GroupModel:
        if not 1 <= n <= self.depth:
            raise IndexError(f"level {n} outside 1..{self.depth}")
        return self.levels[n - 1]

    def ambient(self, n: int) -> Any:
        self.level(n)
        return self.ambients[n - 1]

    def project(self, n: int, m: int, x: Any) -> Any:
        if m > n:
            raise IndexError("cannot project upwards")
        for k in range(n, m, -1):
            x = self.quotient(k, x)
        return x

    def __repr__(self) -> str:
        return f"GroupTower({self.name}, p={self.p}, orders={[U.order for U in self.levels]})"


@dataclass
class Conjugator:
    """A compatible family of ambient elements w_1, ..., w_N."""

    elements: list
    description: str = "w"

    def at(self, n: int) -> Any:
        return self.elements[n - 1]

    def validate(self, tower: GroupTower) -> None:
        if len(self.elements) < tower.depth:
            raise ValueError(f"conjugator has {len(self.elements)} levels, tower has {tower.depth}")
        for n in range(1, tower.depth + 1):
            amb = tower.ambient(n)
            w = self.at(n)
            if amb.mul(w, amb.inv(w)) != amb.identity:
                raise GroupError(f"w_{n} is not invertible")
            if n > 1 and tower.quotient(n, w) != self.at(n - 1):
                raise GroupError(f"w_{n} does not reduce to w_{n - 1}")

    @classmethod
    def from_function(cls, tower: GroupTower, make: Callable[[int], Any], description: str) -> Conjugator:
        c = cls([make(n) for n in range(1, tower.depth + 1)], description)
        c.validate(tower)
        return c


def identity_conjugator(tower: GroupTower) -> Conjugator:
    return Conjugator.from_function(tower, lambda n: tower.ambient(n).identity, "identity")


def diagonal_conjugator(tower: GroupTower, entries: Sequence[int]) -> Conjugator:
    def make(n: int):
        amb = tower.ambient(n)
        if not isinstance(amb, MatrixAmbient):
            raise GroupError("diagonal conjugators need a matrix ambient")
        return amb.diag(entries)

    return Conjugator.from_function(tower, make, f"diag{tuple(entries)}")


def _matrix_quotient(p: int):
    def q(n: int, x):
        return tuple(v % p ** (n - 1) for v in x)

    return q


def _int_quotient(p: int):
    def q(n: int, x: int) -> int:
        return x % p ** (n - 1)

    return q


def builtin_tower(name: str, p: int, depth: int, cap: int = DEFAULT_LEVEL_CAP) -> GroupTower:
    """Heisenberg / unitriangular matrix towers mod p^n, or abelian cyclic / unit towers."""
    check_prime(p)
    if depth < 1:
        raise ValueError("depth must be at least 1")
    name = name.lower()
    if name in ("heisenberg3", "unitriangular4"):
        dim = 3 if name == "heisenberg3" else 4
        top = p ** (depth * dim * (dim - 1) // 2)
        if top > cap:
            raise CapExceeded(f"{name} at depth {depth} has order {top}, cap is {cap}")
        levels = [unitriangular_group(dim, p**n, p=p, cap=cap) for n in range(1, depth + 1)]
        ambients = [MatrixAmbient(dim, p**n) for n in range(1, depth + 1)]
        return GroupTower(levels, ambients, _matrix_quotient(p), p, name=name, require_p_group=True)
    if name == "cyclic":
        if p**depth > cap:
            raise CapExceeded(f"Z/{p}^{depth} exceeds cap {cap}")
        levels = [cyclic_group(p**n, p=p) for n in range(1, depth + 1)]
        ambients = [CyclicAmbient(p**n) for n in range(1, depth + 1)]
        return GroupTower(levels, ambients, _int_quotient(p), p, name=name, require_p_group=True)
    if name == "units":
        if p**depth > cap:
            raise CapExceeded(f"(Z/{p}^{depth})^x exceeds cap {cap}")
        levels = [units_group(p**n, p=p) for n in range(1, depth + 1)]
        ambients = [UnitsAmbient(p**n) for n in range(1, depth + 1)]
        return GroupTower(levels, ambients, _int_quotient(p), p, name=name)
    raise ValueError(f"unknown tower {name!r}; known: {', '.join(BUILTIN_TOWERS)}")


def single_level_tower(U: GroupModel, ambient: Any, p: int, name: str = "finite") -> GroupTower:
    """A depth-one tower: a finite subgroup U of a finite ambient group."""
    return GroupTower([U], [ambient], None, p, name=name)


def conjugation_tower(gt: GroupTower) -> TowerOfActions:
    """Tower of conjugation actions U_n on itself, with a one-point level 0."""
    trivial = cyclic_group(1)
    levels = [GAction(trivial, [0], lambda g, y: y)]
    set_maps: list = [None]
    group_maps: list = [None]
    for n in range(1, gt.depth + 1):
        U = gt.level(n)
        levels.append(GAction(U, U.elements, U.conj))
        if n == 1:
            set_maps.append(lambda x: 0)
            group_maps.append(lambda g: 0)
        else:
            set_maps.append(lambda x, n=n: gt.quotient(n, x))
            group_maps.append(lambda g, n=n: gt.quotient(n, g))
    return TowerOfActions(levels, set_maps, group_maps, gt.p, name=f"conj({gt.name})", meta={"kind": "conjugation"})


def u_w_subgroup(n: int, tower: GroupTower, w: Conjugator) -> GroupModel:
    """U_w = U_n ∩ w U_n w^-1, i.e. the u in U_n with w^-1 u w in U_n."""
    U = tower.level(n)
    amb = tower.ambient(n)
    wn = w.at(n)
    try:
        winv = amb.inv(wn)
    except (GroupError, ValueError) as exc:
        raise GroupError(f"w_{n} is not invertible") from exc
    members = [u for u in U.elements if amb.mul(amb.mul(winv, u), wn) in U]
    if len(members) == U.order:
        return U
    gens = generating_set(U, members)
    return enumerate_group(gens, U, cap=U.order, p=tower.p, name=f"U_w[{w.description}]")


def twisted_action(n: int, tower: GroupTower, w: Conjugator, uw: GroupModel | None = None,
                   validate: bool = True) -> GAction:
    """U_w acting on U_n by (u, x) -> (w^-1 u w) x u^-1."""
    U = tower.level(n)
    amb = tower.ambient(n)
    wn = w.at(n)
    winv = amb.inv(wn)
    uw = u_w_subgroup(n, tower, w) if uw is None else uw
    mul = amb.mul

    @lru_cache(maxsize=None)
    def parts(u):
        return mul(mul(winv, u), wn), U.inv(u)

    def act(u, x):
        left, right = parts(u)
        return mul(mul(left, x), right)

    return GAction(uw, U.elements, act, validate=validate)


@dataclass
class TwistedFixedSpace:
    level: int
    dim: int
    orbit_sizes: list[int]
    orbits: list[tuple] = field(repr=False)
    direct_dim: int | None = None
    agree: bool | None = None

    @property
    def passed(self) -> bool:
        return self.agree is not False

    def to_dict(self) -> dict:
        sizes: dict[int, int] = {}
        for s in self.orbit_sizes:
            sizes[s] = sizes.get(s, 0) + 1
        return {
            "level": self.level,
            "dim": self.dim,
            "orbit_size_histogram": {str(k): v for k, v in sorted(sizes.items())},
            "direct_dim": self.direct_dim,
            "direct_check": "skipped" if self.agree is None else ("agree" if self.agree else "DISAGREE"),
        }


def twisted_condition_system(n: int, tower: GroupTower, w: Conjugator, uw: GroupModel) -> SparseMatrix:
    """Rows of λu - (w^-1 u w)λ = 0 over generators u of U_w.

    Coordinates are the elements of U_n in sorted order (the point order of
    the twisted action).  Coordinate y of λu is λ(y u^-1); coordinate y of
    cλ is λ(c^-1 y).
    """
    U = tower.level(n)
    amb = tower.ambient(n)
    wn, winv = w.at(n), amb.inv(w.at(n))
    idx = {x: i for i, x in enumerate(sorted(U.elements))}
    p = tower.p
    rows = []
    for u in uw.generators:
        c = amb.mul(amb.mul(winv, u), wn)
        uinv, cinv = U.inv(u), amb.inv(c)
        for y in U.elements:
            a = idx[amb.mul(y, uinv)]
            b = idx[amb.mul(cinv, y)]
            if a != b:
                rows.append({a: 1, b: p - 1})
    return SparseMatrix.from_rows(rows, U.order, p)


def twisted_fixed_space(
    n: int, tower: GroupTower, w: Conjugator, cross_check: bool | None = None, cap: int | None = None
) -> TwistedFixedSpace:
    """Orbit-sum basis of the twisted fixed space at level n.

    With ``cross_check`` (default: when |U_n| is within the dense cap) the
    kernel of the linear conditions is computed independently and compared
    with the orbit-sum span.
    """
    U = tower.level(n)
    cap = dense_cap() if cap is None else cap
    if cross_check is None:
        cross_check = U.order <= cap
    uw = u_w_subgroup(n, tower, w)
    action = twisted_action(n, tower, w, uw=uw)
    label = orbit_labels(action)
    buckets: list[list] = [[] for _ in range(int(label.max()) + 1)]
    for i, k in enumerate(label.tolist()):
        buckets[k].append(action.points[i])
    orbits = [tuple(b) for b in buckets]
    result = TwistedFixedSpace(n, len(orbits), [len(o) for o in orbits], orbits)
    if cross_check:
        if U.order > cap:
            raise CapExceeded(f"|U_{n}| = {U.order} exceeds the direct cross-check cap {cap}")
        direct = nullspace(twisted_condition_system(n, tower, w, uw), cap=cap)
        mod = PermutationModule(action, tower.p)
        osum = orbit_sum_matrix(mod)
        result.direct_dim = int(direct.shape[0])
        result.agree = direct.shape == osum.shape and bool(np.array_equal(direct, osum))
    return result


@dataclass
class CentralizerReport:
    level: int
    uw_order: int
    checked: int
    failures: list[dict]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"level": self.level, "uw_order": self.uw_order, "checked": self.checked,
                "failures": self.failures[:5], "passed": self.passed}


def _centralizer_counts_matrix(amb: MatrixAmbient, uw: GroupModel, gs: list, chunk: int = 96) -> np.ndarray:
    """|{u in U_w : u g = g u}| for each g, by brute force over U_w.

    u -> vec(u g - g u) is linear; only the coordinates that vary over U_w
    enter, the constant ones contribute a fixed offset.  All values stay
    below 2^24, so float32 products are exact.
    """
    d, m = amb.dim, amb.modulus
    A = np.array(uw.elements, dtype=np.int64)
    var = np.flatnonzero((A != A[0]).any(axis=0))
    const = A[0].copy()
    const[var] = 0
    Avar = A[:, var].astype(np.float32)
    eye = np.eye(d, dtype=np.int64)
    out = np.empty(len(gs), dtype=np.int64)
    for s in range(0, len(gs), chunk):
        block = gs[s:s + chunk]
        # row-major vec: vec(u g) = (I ⊗ g^T) vec(u), vec(g u) = (g ⊗ I) vec(u)
        L = np.stack([np.kron(eye, np.array(g).reshape(d, d).T) - np.kron(np.array(g).reshape(d, d), eye)
                      for g in block])  # (c, d*d, d*d)
        offset = np.einsum("cij,j->ci", L, const) % m  # (c, d*d)
        coef = L[:, :, var] % m  # (c, d*d, v)
        live = np.flatnonzero(coef.any(axis=(0, 2)) | offset.any(axis=0))
        coef, offset = coef[:, live].astype(np.float32), offset[:, live]
        vals = Avar @ coef.reshape(-1, len(var)).T  # (K, c*r)
        vals = vals.astype(np.int32).reshape(len(A), len(block), len(live)) + offset[None].astype(np.int32)
        ok = np.all(vals % m == 0, axis=2)
        out[s:s + chunk] = ok.sum(axis=0)
    return out


def orbit_centralizer_check(n: int, tower: GroupTower, w: Conjugator) -> CentralizerReport:
    """For every x in U_n: |twisted orbit of x| == [U_w : C(w x) ∩ U_w]."""
    U = tower.level(n)
    amb = tower.ambient(n)
    wn = w.at(n)
    uw = u_w_subgroup(n, tower, w)
    action = twisted_action(n, tower, w, uw=uw)
    label = orbit_labels(action)
    sizes = np.bincount(label)[label]
    gs = [amb.mul(wn, x) for x in action.points]
    if isinstance(amb, MatrixAmbient) and amb.dim**2 * amb.modulus**2 < 2**24:
        cent = _centralizer_counts_matrix(amb, uw, gs)
    else:
        cent = np.array([sum(1 for u in uw.elements if amb.mul(u, g) == amb.mul(g, u)) for g in gs])
    failures = []
    for i, x in enumerate(action.points):
        c = int(cent[i])
        if uw.order % c or uw.order // c != int(sizes[i]):
            failures.append({"x": list(x) if isinstance(x, tuple) else x, "orbit_size": int(sizes[i]),
                             "centralizer_order": c})
    return CentralizerReport(n, uw.order, U.order, failures)


def fixed_points_full_stabilizer(n: int, tower: GroupTower, w: Conjugator) -> list:
    """Points of U_n fixed by all of U_w under the twisted action."""
    action = twisted_action(n, tower, w)
    return [y for i, y in enumerate(action.points) if all(int(pm[i]) == i for pm in action.perms)]


@dataclass
class StabilizationReport:
    tower: str
    p: int
    conjugator: str
    target_level: int
    max_depth: int
    level_dims: list[dict]
    images: list[np.ndarray] = field(repr=False)
    descending: bool = True
    stabilized_at: int | None = None

    @property
    def stable_dim(self) -> int | None:
        if self.stabilized_at is None:
            return None
        return int(self.images[self.stabilized_at - self.target_level].shape[0])

    @property
    def conclusive(self) -> bool:
        return self.stabilized_at is not None

    def to_dict(self) -> dict:
        return {
            "tower": self.tower,
            "p": self.p,
            "w": self.conjugator,
            "target_level": self.target_level,
            "max_depth": self.max_depth,
            "levels": self.level_dims,
            "descending": self.descending,
            "stabilized_at": self.stabilized_at,
            "stable_dim": self.stable_dim,
            "status": "stable" if self.conclusive else "inconclusive",
        }


def twisted_stabilization(tower: GroupTower, w: Conjugator, m: int, N: int,
                          cross_check: bool | None = None) -> StabilizationReport:
    """Images in F_p[U_m] of the twisted fixed spaces at levels m..N.

    The image of an orbit sum is the pushforward of its points along the
    quotient map, which multiplies the image orbit by |orbit| / |image orbit|.
    Stabilization is declared at the first level whose image equals the
    previous one.
    """
    if not 1 <= m < N <= tower.depth:
        raise ValueError(f"need 1 <= m < N <= {tower.depth}, got m={m}, N={N}")
    p = tower.p
    Um = tower.level(m)
    images = []
    dims = []
    for n in range(m, N + 1):
        fs = twisted_fixed_space(n, tower, w, cross_check=cross_check)
        vecs = np.zeros((fs.dim, Um.order), dtype=np.int64)
        for k, orbit in enumerate(fs.orbits):
            for x in orbit:
                vecs[k, Um.index[tower.project(n, m, x)]] += 1
        img = span_rref(vecs % p, p, Um.order)
        images.append(img)
        row = {"level": n, "fixed_dim": fs.dim, "image_dim": int(img.shape[0]),
               "direct_check": fs.to_dict()["direct_check"]}
        dims.append(row)
    descending = all(contained_in(images[i + 1], images[i], p) for i in range(len(images) - 1))
    stabilized = None
    for i in range(1, len(images)):
        if images[i].shape == images[i - 1].shape and np.array_equal(images[i], images[i - 1]):
            stabilized = m + i
            break
    return StabilizationReport(tower.name, p, w.description, m, N, dims, images, descending, stabilized)
