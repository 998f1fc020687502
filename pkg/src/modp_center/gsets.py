"""Finite groups, finite G-sets, orbits, and Γ-stable refinements of partitions.

Group elements and points are their own canonical encodings: hashable,
totally ordered Python values (ints or tuples of ints).  Equality of
encodings is equality of elements.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Hashable, Iterable, NamedTuple, Protocol, Sequence

import numpy as np

DEFAULT_GROUP_CAP = 100_000


class ActionError(ValueError):
    """A map fails the group-action axioms or an equivariance condition."""


class GroupError(ValueError):
    """Bad group data: non-closure, non-invertible generator, not a subgroup."""


class Ambient(Protocol):
    """Anything with a multiplication, an inverse and an identity."""

    identity: Hashable

    def mul(self, a: Any, b: Any) -> Any: ...

    def inv(self, a: Any) -> Any: ...


class GroupModel:
    """An explicitly enumerated finite group.

    ``elements`` are in canonical order (BFS from the identity when built by
    :func:`enumerate_group`); ``index`` maps each element to its position.
    """

    def __init__(
        self,
        elements: Sequence[Hashable],
        mul: Callable[[Any, Any], Any],
        inv: Callable[[Any], Any],
        identity: Hashable,
        generators: Sequence[Hashable],
        p: int | None = None,
        name: str | None = None,
    ):
        self.elements = tuple(elements)
        self.index = {g: i for i, g in enumerate(self.elements)}
        if len(self.index) != len(self.elements):
            raise GroupError("duplicate element encodings")
        if identity not in self.index:
            raise GroupError("identity is not among the elements")
        self._mul = mul
        self._inv = inv
        self.identity = identity
        self.generators = tuple(generators)
        self.p = p
        self.name = name

    def mul(self, a: Any, b: Any) -> Any:
        return self._mul(a, b)

    def inv(self, a: Any) -> Any:
        return self._inv(a)

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g: object) -> bool:
        return g in self.index

    def conj(self, g: Any, x: Any) -> Any:
        """g x g^-1."""
        return self._mul(self._mul(g, x), self._inv(g))

    def is_abelian(self) -> bool:
        gens = self.generators
        return all(self._mul(a, b) == self._mul(b, a) for a in gens for b in gens)

    def center(self) -> list[Any]:
        return [z for z in self.elements if all(self._mul(z, g) == self._mul(g, z) for g in self.generators)]

    def is_p_group(self, p: int) -> bool:
        n = self.order
        while n % p == 0:
            n //= p
        return n == 1

    def validate(self, full: bool = False) -> None:
        """Check closure under generators and inverses; ``full`` checks every product."""
        e = self.identity
        for g in self.generators:
            if g not in self.index:
                raise GroupError(f"generator {g!r} is not an element")
        for x in self.elements:
            if self._mul(e, x) != x or self._mul(x, e) != x:
                raise GroupError(f"identity fails on {x!r}")
            if self._inv(x) not in self.index or self._mul(x, self._inv(x)) != e:
                raise GroupError(f"bad inverse for {x!r}")
            for g in self.generators:
                if self._mul(g, x) not in self.index:
                    raise GroupError("not closed under multiplication by generators")
        if full:
            for a in self.elements:
                for b in self.elements:
                    if self._mul(a, b) not in self.index:
                        raise GroupError("not closed under multiplication")
        if enumerate_group(self.generators, self, cap=self.order).order != self.order:
            raise GroupError("generators do not generate the group")

    def subgroup(self, generators: Sequence[Hashable], name: str | None = None) -> GroupModel:
        for g in generators:
            if g not in self.index:
                raise GroupError(f"{g!r} is not an element of {self.name or 'the group'}")
        return enumerate_group(generators, self, cap=self.order, p=self.p, name=name)

    def __repr__(self) -> str:
        return f"GroupModel({self.name or '?'}, order={self.order})"

    @classmethod
    def from_table(cls, names: Sequence[str], table: Sequence[Sequence[str]], name: str | None = None) -> GroupModel:
        """Group from a multiplication table: ``table[i][j]`` is names[i] * names[j]."""
        n = len(names)
        idx = {s: i for i, s in enumerate(names)}
        if len(idx) != n or len(table) != n or any(len(r) != n for r in table):
            raise GroupError("multiplication table must be square with distinct names")
        mt = [[idx[s] for s in row] for row in table]
        ident = [i for i in range(n) if all(mt[i][j] == j and mt[j][i] == j for j in range(n))]
        if len(ident) != 1:
            raise GroupError("table has no two-sided identity")
        e = ident[0]
        inv = {}
        for i in range(n):
            js = [j for j in range(n) if mt[i][j] == e]
            if len(js) != 1 or mt[js[0]][i] != e:
                raise GroupError(f"{names[i]} has no inverse")
            inv[i] = js[0]
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    if mt[mt[a][b]][c] != mt[a][mt[b][c]]:
                        raise GroupError("table is not associative")
        ambient = _TableAmbient(mt, inv, e)
        return enumerate_group(range(n), ambient, cap=n, name=name)

    @classmethod
    def from_json(cls, path: str | Path) -> GroupModel:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_table(data["elements"], data["table"], name=data.get("name"))


class _TableAmbient:
    def __init__(self, mt: list[list[int]], inv: dict[int, int], e: int):
        self.mt = mt
        self._inv = inv
        self.identity = e

    def mul(self, a: int, b: int) -> int:
        return self.mt[a][b]

    def inv(self, a: int) -> int:
        return self._inv[a]


def enumerate_group(
    generators: Iterable[Hashable],
    ambient: Ambient,
    cap: int = DEFAULT_GROUP_CAP,
    p: int | None = None,
    name: str | None = None,
) -> GroupModel:
    """Closure of ``generators`` inside ``ambient``.

    Elements are listed breadth-first from the identity (word length in the
    generators), each layer sorted by encoding.
    """
    gens = sorted(set(generators))
    e = ambient.identity
    for g in gens:
        if ambient.mul(g, ambient.inv(g)) != e:
            raise GroupError(f"generator {g!r} is not invertible")
    seen = {e}
    order = [e]
    layer = [e]
    while layer:
        nxt = set()
        for x in layer:
            for g in gens:
                y = ambient.mul(x, g)
                if y not in seen:
                    nxt.add(y)
        nxt_sorted = sorted(nxt)
        seen.update(nxt_sorted)
        order.extend(nxt_sorted)
        if len(order) > cap:
            raise _cap_error(len(order), cap)
        layer = nxt_sorted
    gens = [g for g in gens if g != e]
    return GroupModel(order, ambient.mul, ambient.inv, e, gens, p=p, name=name)


def _cap_error(n: int, cap: int):
    from .coeff import CapExceeded

    return CapExceeded(f"group closure exceeds cap {cap} (reached {n} elements)")


def generating_set(group: GroupModel, elements: Sequence[Hashable] | None = None) -> list[Any]:
    """Greedy generating set: walk elements in order, keep those outside the current closure."""
    elements = group.elements if elements is None else elements
    gens: list[Any] = []
    closure = {group.identity}
    target = len(elements)
    for x in elements:
        if len(closure) == target:
            break
        if x in closure:
            continue
        gens.append(x)
        closure = set(enumerate_group(gens, group, cap=group.order).elements)
    return gens


class GAction:
    """A finite group acting on a finite set of points.

    ``act(g, y)`` must be a left action.  The action of each generator is
    cached as an index permutation ``perms[k]`` of ``points``.  Axioms are
    checked on generators (identity, and act(gh, y) = act(g, act(h, y)) for
    generator pairs); ``full_validation`` checks all group elements.
    """

    def __init__(
        self,
        group: GroupModel,
        points: Iterable[Hashable],
        act: Callable[[Any, Any], Any],
        validate: bool = True,
        full_validation: bool = False,
    ):
        self.group = group
        self.points = tuple(sorted(set(points)))
        self.index = {y: i for i, y in enumerate(self.points)}
        self.act = act
        self.perms = [self._perm(g) for g in group.generators]
        if validate:
            self._validate(full_validation)

    def _perm(self, g: Any) -> np.ndarray:
        idx = self.index
        out = np.empty(len(self.points), dtype=np.int64)
        act = self.act
        for i, y in enumerate(self.points):
            z = act(g, y)
            j = idx.get(z)
            if j is None:
                raise ActionError(f"act({g!r}, {y!r}) = {z!r} is not a point")
            out[i] = j
        if len(set(out.tolist())) != len(out):
            raise ActionError(f"generator {g!r} does not act bijectively")
        return out

    def perm(self, g: Any) -> np.ndarray:
        return self._perm(g)

    def _validate(self, full: bool) -> None:
        G = self.group
        for y in self.points:
            if self.act(G.identity, y) != y:
                raise ActionError(f"identity moves {y!r}")
        elements = G.elements if full else G.generators
        pairs = [(g, h) for g in elements for h in elements]
        for g, h in pairs:
            gh = G.mul(g, h)
            for y in self.points:
                if self.act(gh, y) != self.act(g, self.act(h, y)):
                    raise ActionError(f"act(gh, y) != act(g, act(h, y)) for g={g!r}, h={h!r}, y={y!r}")

    @property
    def size(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"GAction(|G|={self.group.order}, |Y|={self.size})"


class Orbit(NamedTuple):
    points: tuple
    stabilizer_index: int


def orbit_labels(a: GAction) -> np.ndarray:
    """Orbit number of each point index; orbits numbered by least point."""
    n = a.size
    label = np.full(n, -1, dtype=np.int64)
    perms = a.perms
    k = 0
    for start in range(n):
        if label[start] >= 0:
            continue
        label[start] = k
        queue = [start]
        while queue:
            i = queue.pop()
            for perm in perms:
                j = int(perm[i])
                if label[j] < 0:
                    label[j] = k
                    queue.append(j)
        k += 1
    return label


def orbits(a: GAction) -> list[Orbit]:
    """Orbits sorted by least point, each with sorted points.

    At a finite level the stabilizer index of a point equals its orbit size.
    """
    label = orbit_labels(a)
    buckets: list[list[Any]] = [[] for _ in range(int(label.max()) + 1 if label.size else 0)]
    for i, k in enumerate(label.tolist()):
        buckets[k].append(a.points[i])
    return [Orbit(tuple(b), len(b)) for b in buckets]


def orbit_of(a: GAction, y: Hashable) -> tuple:
    seen = {y}
    queue = deque([y])
    while queue:
        x = queue.popleft()
        for g in a.group.generators:
            z = a.act(g, x)
            if z not in seen:
                seen.add(z)
                queue.append(z)
    return tuple(sorted(seen))


def stabilizer(a: GAction, y: Hashable) -> list[Any]:
    """Brute force over all group elements."""
    return [g for g in a.group.elements if a.act(g, y) == y]


def fixed_points(a: GAction) -> list[Any]:
    return [y for i, y in enumerate(a.points) if all(int(perm[i]) == i for perm in a.perms)]


@dataclass(frozen=True)
class PartitionOfSet:
    """A partition of a finite set into nonempty disjoint blocks.

    Blocks are stored sorted internally and ordered by least element.
    """

    base: tuple
    blocks: tuple

    def __init__(self, base: Iterable[Hashable], blocks: Iterable[Iterable[Hashable]]):
        base_t = tuple(sorted(set(base)))
        raw = [tuple(sorted(b)) for b in blocks]
        if any(not b for b in raw):
            raise ValueError("partition has an empty block")
        blocks_t = tuple(sorted(raw, key=lambda b: b[0]))
        seen: set = set()
        for b in blocks_t:
            for y in b:
                if y in seen:
                    raise ValueError(f"point {y!r} lies in two blocks")
                seen.add(y)
        if seen != set(base_t):
            raise ValueError("blocks do not cover the base set exactly")
        object.__setattr__(self, "base", base_t)
        object.__setattr__(self, "blocks", blocks_t)

    def block_index(self) -> dict:
        return {y: i for i, b in enumerate(self.blocks) for y in b}

    def refines(self, other: PartitionOfSet) -> bool:
        """Every block of self lies inside a block of other."""
        where = other.block_index()
        return all(len({where[y] for y in b}) == 1 for b in self.blocks)

    @classmethod
    def discrete(cls, base: Iterable[Hashable]) -> PartitionOfSet:
        base = list(base)
        return cls(base, [[y] for y in base])

    @classmethod
    def from_orbits(cls, a: GAction) -> PartitionOfSet:
        return cls(a.points, [o.points for o in orbits(a)])


def _translate(a: GAction, g: Any, block: Iterable[Hashable]) -> frozenset:
    return frozenset(a.act(g, y) for y in block)


def is_stable(a: GAction, part: PartitionOfSet) -> bool:
    """True iff every generator maps every block onto a block."""
    blocks = {frozenset(b) for b in part.blocks}
    return all(_translate(a, g, b) in blocks for g in a.group.generators for b in part.blocks)


def block_kernel(a: GAction, part: PartitionOfSet) -> list[Any]:
    """Elements of the group stabilising every block setwise."""
    blocks = [frozenset(b) for b in part.blocks]
    return [g for g in a.group.elements if all(_translate(a, g, b) == b for b in blocks)]


def stable_refinement(a: GAction, part: PartitionOfSet) -> PartitionOfSet:
    """Γ-stable refinement by intersecting translates.

    H is the subgroup fixing every block of ``part``; with left coset
    representatives g_1..g_k of H, the new blocks are the nonempty sets
    g_1 P_1 ∩ ... ∩ g_k P_k.  Two points share a block iff for each i their
    images under g_i^{-1} share a block of ``part``.
    """
    if set(part.base) != set(a.points):
        raise ValueError("partition is not a partition of the action's points")
    G = a.group
    H = set(block_kernel(a, part))
    reps: list[Any] = []
    covered: set = set()
    for g in G.elements:
        if g in covered:
            continue
        reps.append(g)
        covered.update(G.mul(g, h) for h in H)
    where = part.block_index()
    inverses = [G.inv(g) for g in reps]
    signature: dict[Any, list] = {}
    for y in a.points:
        sig = tuple(where[a.act(gi, y)] for gi in inverses)
        signature.setdefault(sig, []).append(y)
    return PartitionOfSet(a.points, signature.values())
