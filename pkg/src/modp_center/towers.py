"""Inverse systems of finite G-sets and their invariants in orbit coordinates.

A tower is a chain of levels 0..N; level n is a finite group Γ_n acting on a
finite set Y_n, with equivariant surjections Y_{n+1} -> Y_n over surjective
homomorphisms Γ_{n+1} -> Γ_n.  Invariants of F_p[Y_n] are written in orbit
coordinates (one coefficient per Γ_n-orbit); the transition map sigma sends an
orbit C to (|C| / |π(C)|) π(C).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Hashable, Mapping, Sequence

import numpy as np

from .coeff import CapExceeded, check_prime, nullspace, span_rref
from .gsets import ActionError, GAction, orbit_labels
from .groups import cyclic_group

DEFAULT_TOWER_CAP = 200_000


class LevelError(IndexError):
    """Level indices out of range or in the wrong order."""


class TowerOfActions:
    """Levels 0..N of finite actions linked by equivariant surjections.

    ``set_maps[k]`` (k = 1..N) maps points of level k to points of level k-1;
    ``group_maps[k]`` maps group elements of Γ_k to Γ_{k-1}.  Index 0 of both
    lists is unused (None).
    """

    def __init__(
        self,
        levels: Sequence[GAction],
        set_maps: Sequence[Mapping[Hashable, Hashable] | Callable[[Any], Any] | None],
        group_maps: Sequence[Callable[[Any], Any] | None],
        p: int,
        name: str = "tower",
        meta: Mapping[str, Any] | None = None,
        validate: bool = True,
    ):
        if len(levels) == 0 or len(set_maps) != len(levels) or len(group_maps) != len(levels):
            raise ValueError("need one set map and one group map per level (index 0 unused)")
        self.levels = list(levels)
        self.p = check_prime(p)
        self.name = name
        self.meta = dict(meta or {})
        self.group_maps = list(group_maps)
        self.down: list[np.ndarray | None] = [None]
        for k in range(1, len(levels)):
            f = set_maps[k]
            get = f.__getitem__ if isinstance(f, Mapping) else f
            upper, lower = levels[k], levels[k - 1]
            arr = np.empty(upper.size, dtype=np.int64)
            for i, y in enumerate(upper.points):
                z = get(y)
                j = lower.index.get(z)
                if j is None:
                    raise ActionError(f"level {k} point {y!r} maps to {z!r}, not a level {k - 1} point")
                arr[i] = j
            self.down.append(arr)
        if validate:
            self._validate(set_maps)

    def _validate(self, set_maps) -> None:
        for k in range(1, len(self.levels)):
            upper, lower = self.levels[k], self.levels[k - 1]
            arr = self.down[k]
            if len(set(arr.tolist())) != lower.size:
                raise ActionError(f"map from level {k} to level {k - 1} is not surjective")
            phi = self.group_maps[k]
            for g, perm in zip(upper.group.generators, upper.perms):
                gbar = phi(g)
                if gbar not in lower.group:
                    raise ActionError(f"group map sends {g!r} outside Γ_{k - 1}")
                lperm = lower.perm(gbar)
                # π(g·y) == ḡ·π(y)
                if not np.array_equal(arr[perm], lperm[arr]):
                    raise ActionError(f"map from level {k} is not equivariant for generator {g!r}")

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def _check_levels(self, n: int, m: int) -> None:
        if not (0 <= m <= n <= self.depth):
            raise LevelError(f"need 0 <= m <= n <= {self.depth}, got n={n}, m={m}")

    @cached_property
    def labels(self) -> list[np.ndarray]:
        return [orbit_labels(a) for a in self.levels]

    @cached_property
    def orbit_sizes(self) -> list[np.ndarray]:
        return [np.bincount(lab) for lab in self.labels]

    @cached_property
    def orbit_reps(self) -> list[np.ndarray]:
        """Least point index of each orbit."""
        out = []
        for lab in self.labels:
            k = int(lab.max()) + 1
            reps = np.full(k, -1, dtype=np.int64)
            for i in range(len(lab) - 1, -1, -1):
                reps[lab[i]] = i
            out.append(reps)
        return out

    def num_orbits(self, n: int) -> int:
        return len(self.orbit_sizes[n])

    def orbit_points(self, n: int, k: int) -> list[Any]:
        pts = self.levels[n].points
        return [pts[i] for i in np.flatnonzero(self.labels[n] == k)]

    def orbit_name(self, n: int, k: int) -> Any:
        return self.levels[n].points[int(self.orbit_reps[n][k])]

    def point_down(self, n: int, m: int) -> np.ndarray:
        """Index map Y_n -> Y_m."""
        self._check_levels(n, m)
        arr = np.arange(self.levels[n].size)
        for k in range(n, m, -1):
            arr = self.down[k][arr]
        return arr

    def orbit_down(self, n: int, m: int) -> np.ndarray:
        """Orbit map Γ_n\\Y_n -> Γ_m\\Y_m (images of orbits are orbits)."""
        return self.labels[m][self.point_down(n, m)[self.orbit_reps[n]]]

    def sigma_matrix(self, n: int, m: int) -> np.ndarray:
        self._check_levels(n, m)
        down = self.orbit_down(n, m)
        size_n, size_m = self.orbit_sizes[n], self.orbit_sizes[m]
        out = np.zeros((self.num_orbits(m), self.num_orbits(n)), dtype=np.int64)
        for c, d in enumerate(down.tolist()):
            q, r = divmod(int(size_n[c]), int(size_m[d]))
            if r:
                raise ActionError(f"orbit size {size_n[c]} not divisible by image size {size_m[d]}")
            out[d, c] = q % self.p
        return out

    def to_dict(self) -> dict:
        """JSON-ready description: points, orbit tables and map tables per level."""
        levels = []
        for n, a in enumerate(self.levels):
            entry = {
                "level": n,
                "group_order": a.group.order,
                "points": [_jsonable(y) for y in a.points],
                "orbits": [
                    {"least_point": _jsonable(self.orbit_name(n, k)), "size": int(s)}
                    for k, s in enumerate(self.orbit_sizes[n])
                ],
            }
            if n > 0:
                entry["map_to_previous"] = self.down[n].tolist()
            levels.append(entry)
        return {"name": self.name, "p": self.p, "depth": self.depth, "meta": self.meta, "levels": levels}

    def __repr__(self) -> str:
        return f"TowerOfActions({self.name}, p={self.p}, depth={self.depth})"


def _jsonable(x: Any) -> Any:
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


@dataclass
class InvariantFamily:
    """One orbit-coordinate vector per level 0..N."""

    tower: TowerOfActions
    vectors: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        t = self.tower
        if len(self.vectors) != t.depth + 1:
            raise ValueError(f"need {t.depth + 1} level vectors, got {len(self.vectors)}")
        self.vectors = [np.asarray(v, dtype=np.int64) % t.p for v in self.vectors]
        for n, v in enumerate(self.vectors):
            if v.shape != (t.num_orbits(n),):
                raise ValueError(f"level {n} vector has shape {v.shape}, expected ({t.num_orbits(n)},)")

    @classmethod
    def from_top(cls, tower: TowerOfActions, top: Sequence[int]) -> InvariantFamily:
        """The coherent family determined by its top-level vector."""
        top = np.asarray(top, dtype=np.int64) % tower.p
        vecs = [sigma(tower, tower.depth, n, top) for n in range(tower.depth + 1)]
        return cls(tower, vecs)

    @classmethod
    def zero(cls, tower: TowerOfActions) -> InvariantFamily:
        return cls(tower, [np.zeros(tower.num_orbits(n), dtype=np.int64) for n in range(tower.depth + 1)])


def random_family(t: TowerOfActions, rng: np.random.Generator, coherent: bool | None = None) -> InvariantFamily:
    """A coherent family from a random top vector, or (half the time by default) one with a random perturbation."""
    if coherent is None:
        coherent = bool(rng.random() < 0.5)
    top = rng.integers(0, t.p, size=t.num_orbits(t.depth))
    fam = InvariantFamily.from_top(t, top)
    if coherent:
        return fam
    vecs = [v.copy() for v in fam.vectors]
    n = int(rng.integers(0, t.depth + 1))
    k = int(rng.integers(0, t.num_orbits(n)))
    vecs[n][k] = (vecs[n][k] + int(rng.integers(1, t.p))) % t.p
    return InvariantFamily(t, vecs)


def sigma(t: TowerOfActions, n: int, m: int, x: Sequence[int]) -> np.ndarray:
    """Push an orbit-coordinate vector from level n down to level m."""
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (t.num_orbits(n),):
        raise ValueError(f"expected {t.num_orbits(n)} orbit coordinates at level {n}")
    return (t.sigma_matrix(n, m) @ x) % t.p


def upsilon(t: TowerOfActions, n: int, x: Sequence[int]) -> np.ndarray:
    """Orbit coordinates -> point coordinates (sum of orbit sums)."""
    return np.asarray(x, dtype=np.int64)[t.labels[n]] % t.p


def pushforward(t: TowerOfActions, n: int, m: int, v: Sequence[int]) -> np.ndarray:
    """Point-level map F_p[Y_n] -> F_p[Y_m] induced by the projection."""
    out = np.zeros(t.levels[m].size, dtype=np.int64)
    np.add.at(out, t.point_down(n, m), np.asarray(v, dtype=np.int64))
    return out % t.p


def check_coherence(t: TowerOfActions, fam: InvariantFamily) -> bool:
    """Coherence via same-size preimages.

    For every n > m and orbit C at level m, x(C) must equal the sum of x(B)
    over orbits B at level n with π(B) = C and |B| = |C|.
    """
    if fam.tower is not t:
        raise ValueError("family belongs to another tower")
    p = t.p
    for n in range(1, t.depth + 1):
        for m in range(n):
            down = t.orbit_down(n, m)
            keep = t.orbit_sizes[n] == t.orbit_sizes[m][down]
            total = np.zeros(t.num_orbits(m), dtype=np.int64)
            np.add.at(total, down[keep], fam.vectors[n][keep])
            if not np.array_equal(total % p, fam.vectors[m]):
                return False
    return True


def check_coherence_direct(t: TowerOfActions, fam: InvariantFamily) -> bool:
    """Coherence as sigma(x_n) == x_m for every pair n > m."""
    return all(
        np.array_equal(sigma(t, n, m, fam.vectors[n]), fam.vectors[m])
        for n in range(1, t.depth + 1)
        for m in range(n)
    )


def same_size_preimages(t: TowerOfActions, m: int, k: int, d: int) -> list[int]:
    """Orbits C at level k with π(C) = D (orbit d at level m) and |C| = |D|."""
    down = t.orbit_down(k, m)
    size = t.orbit_sizes[m][d]
    return [c for c in np.flatnonzero(down == d).tolist() if t.orbit_sizes[k][c] == size]


def persistent_orbits(t: TowerOfActions, m: int, n: int) -> list[int]:
    """Level-m orbits having a same-size preimage at every level m..n."""
    t._check_levels(n, m)
    return [
        d
        for d in range(t.num_orbits(m))
        if all(same_size_preimages(t, m, k, d) for k in range(m, n + 1))
    ]


@dataclass
class DensityReport:
    level: int
    horizon: int
    coherent_image: np.ndarray
    persistent_image: np.ndarray
    sigma_image: np.ndarray
    persistent: list[int]

    @property
    def coherent_dim(self) -> int:
        return int(self.coherent_image.shape[0])

    @property
    def persistent_dim(self) -> int:
        return int(self.persistent_image.shape[0])

    @property
    def equal(self) -> bool:
        return (
            self.coherent_image.shape == self.persistent_image.shape
            and bool(np.array_equal(self.coherent_image, self.persistent_image))
            and bool(np.array_equal(self.coherent_image, self.sigma_image))
        )

    def to_dict(self, t: TowerOfActions | None = None) -> dict:
        names = [_jsonable(t.orbit_name(self.level, d)) for d in self.persistent] if t else self.persistent
        return {
            "level": self.level,
            "horizon": self.horizon,
            "coherent_dim": self.coherent_dim,
            "persistent_dim": self.persistent_dim,
            "coherent_image": self.coherent_image.tolist(),
            "persistent_image": self.persistent_image.tolist(),
            "persistent_orbits": names,
            "equal": self.equal,
        }


def density_check(t: TowerOfActions, m: int, n: int) -> DensityReport:
    """Compare the level-m image of coherent families on levels m..n with the
    span of the level-m images of persistent orbits."""
    t._check_levels(n, m)
    p = t.p
    sizes = [t.num_orbits(k) for k in range(m, n + 1)]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    rows = []
    for k in range(m, n):
        s = t.sigma_matrix(k + 1, k)
        lo, hi = offsets[k - m], offsets[k + 1 - m]
        for d in range(s.shape[0]):
            row = np.zeros(total, dtype=np.int64)
            row[hi:offsets[k + 2 - m]] = s[d]
            row[lo + d] = (row[lo + d] - 1) % p
            rows.append(row)
    if rows:
        fams = nullspace(np.array(rows), p)
    else:
        fams = np.eye(total, dtype=np.int64)
    coherent = span_rref(fams[:, : sizes[0]], p, sizes[0])

    persistent = persistent_orbits(t, m, n)
    smat = t.sigma_matrix(n, m)
    pers_vecs = []
    for d in persistent:
        top = same_size_preimages(t, m, n, d)[0]
        pers_vecs.append(smat[:, top])
    persistent_image = span_rref(np.array(pers_vecs).reshape(len(pers_vecs), sizes[0]), p, sizes[0])
    sigma_image = span_rref(smat.T, p, sizes[0])
    return DensityReport(m, n, coherent, persistent_image, sigma_image, persistent)


def example_tower(p: int, depth: int, cap: int = DEFAULT_TOWER_CAP) -> TowerOfActions:
    """Z_p-set with a single infinite orbit outside a non-closed set of finite orbits.

    Level n is the disjoint union of Y_n(m) = Z/p^m for m = 0..n, with
    Γ_n = Z/p^n acting by translation.  Y_{n+1}(m) maps identically onto
    Y_n(m) for m <= n, and Y_{n+1}(n+1) maps onto Y_n(n) by reduction.
    Points are encoded (m, r).
    """
    check_prime(p)
    if depth < 1:
        raise ValueError("depth must be at least 1")
    npts = sum(p**m for m in range(depth + 1))
    if npts > cap:
        raise CapExceeded(f"example tower at depth {depth} has {npts} points, cap is {cap}")
    levels, set_maps, group_maps = [], [None], [None]
    for n in range(depth + 1):
        G = cyclic_group(p**n, p=p)
        pts = [(m, r) for m in range(n + 1) for r in range(p**m)]

        def act(g: int, y: tuple, _p=p) -> tuple:
            m, r = y
            return (m, (r + g) % _p**m)

        levels.append(GAction(G, pts, act))
        if n > 0:
            set_maps.append(lambda y, n=n: y if y[0] < n else (n - 1, y[1] % p ** (n - 1)))
            group_maps.append(lambda g, n=n: g % p ** (n - 1))
    return TowerOfActions(levels, set_maps, group_maps, p, name=f"example(p={p})", meta={"kind": "example"})


def constant_tower(action: GAction, p: int, depth: int) -> TowerOfActions:
    """Every level equal to ``action`` with identity maps."""
    ident = lambda x: x  # noqa: E731
    return TowerOfActions(
        [action] * (depth + 1), [None] + [ident] * depth, [None] + [ident] * depth, p, name="constant"
    )


@dataclass
class DeltaWitness:
    p: int
    depth: int
    thread: list[Any]
    sizes: list[int]
    approximants: list[dict]
    found: bool

    @property
    def strictly_increasing(self) -> bool:
        return all(a < b for a, b in zip(self.sizes, self.sizes[1:]))

    @property
    def passed(self) -> bool:
        return self.found and self.strictly_increasing and all(a["matches"] for a in self.approximants)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "depth": self.depth,
            "thread": [_jsonable(z) for z in self.thread],
            "orbit_sizes": self.sizes,
            "approximants": self.approximants,
            "strictly_increasing": self.strictly_increasing,
            "passed": self.passed,
        }


def _thread(t: TowerOfActions, i: int) -> list[int]:
    """Indices of the images of top-level point i at levels 0..N."""
    out = [i]
    for k in range(t.depth, 0, -1):
        out.append(int(t.down[k][out[-1]]))
    return out[::-1]


def nonclosed_delta_witness(t: TowerOfActions, depth: int | None = None) -> DeltaWitness:
    """Find a coherent thread with strictly growing orbit sizes, plus finite-orbit approximants.

    For each level n the approximant is a top-level point with the same
    level-n image as the thread whose orbit size stays constant from level n
    to the top, i.e. a point of a persistent orbit.
    """
    if depth is not None and depth != t.depth:
        raise LevelError(f"tower has depth {t.depth}, not {depth}")
    N = t.depth
    top = t.levels[N]
    sizes_at = [t.orbit_sizes[k][t.labels[k]] for k in range(N + 1)]
    threads = {}
    z = None
    for i in range(top.size):
        th = _thread(t, i)
        sz = [int(sizes_at[k][th[k]]) for k in range(N + 1)]
        if all(a < b for a, b in zip(sz, sz[1:])):
            z = (th, sz)
            break
    if z is None:
        return DeltaWitness(t.p, N, [], [], [], False)
    th, sz = z
    approximants = []
    for n in range(N + 1):
        match = None
        for i in range(top.size):
            cand = threads.get(i) or threads.setdefault(i, _thread(t, i))
            if cand[n] != th[n]:
                continue
            csz = [int(sizes_at[k][cand[k]]) for k in range(n, N + 1)]
            if len(set(csz)) == 1:
                match = (i, cand)
                break
        if match is None:
            approximants.append({"level": n, "matches": False})
            continue
        i, cand = match
        approximants.append(
            {
                "level": n,
                "point": _jsonable(top.points[i]),
                "image": _jsonable(t.levels[n].points[cand[n]]),
                "orbit_size": int(sizes_at[n][cand[n]]),
                "matches": cand[n] == th[n],
            }
        )
    thread_pts = [t.levels[k].points[th[k]] for k in range(N + 1)]
    return DeltaWitness(t.p, N, thread_pts, sz, approximants, True)
