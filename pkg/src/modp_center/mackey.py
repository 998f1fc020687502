"""Double cosets, the induced bimodule F_p[G], and the per-double-coset
decomposition of its G x U endomorphisms at a single finite level.

Functions on G are vectors indexed by G.elements, with left translation
l_g F(x) = F(g^-1 x) and right translation r_g F(x) = F(x g).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .coeff import CapExceeded, check_prime, dense_cap, nullspace, rank
from .groups import ProductAmbient, is_subgroup
from .gsets import GAction, GroupError, GroupModel, enumerate_group, orbit_labels
from .permmod import PermutationModule, commutant_dim as _commutant_dim, commutant_system, regular_perms
from .twisted import Conjugator, single_level_tower, twisted_action, twisted_fixed_space, u_w_subgroup


@dataclass
class DoubleCosetDecomp:
    G: GroupModel
    U: GroupModel
    reps: list
    cosets: list[frozenset] = field(repr=False)
    u_w: list[GroupModel] = field(repr=False)

    def sizes(self) -> list[int]:
        return [len(c) for c in self.cosets]

    def index_identity_holds(self) -> bool:
        """|UwU| = |U|^2 / |U_w| for every representative."""
        n = self.U.order
        return all(len(c) * h.order == n * n for c, h in zip(self.cosets, self.u_w))

    def to_dict(self) -> dict:
        return {
            "reps": [_enc(w) for w in self.reps],
            "sizes": self.sizes(),
            "u_w_orders": [h.order for h in self.u_w],
        }


def _enc(x: Any) -> Any:
    if isinstance(x, tuple):
        return [_enc(y) for y in x]
    return x


def double_cosets(G: GroupModel, U: GroupModel) -> DoubleCosetDecomp:
    """Decompose G into U w U, each w the least element of its double coset."""
    if not is_subgroup(U, G):
        raise GroupError(f"{U.name or 'U'} is not a subgroup of {G.name or 'G'}")
    seen: set = set()
    reps, cosets, uws = [], [], []
    for w in sorted(G.elements):
        if w in seen:
            continue
        dc = frozenset(G.mul(G.mul(a, w), b) for a in U.elements for b in U.elements)
        seen |= dc
        reps.append(w)
        cosets.append(dc)
        winv = G.inv(w)
        # U_w = U ∩ w U w^-1
        members = [u for u in U.elements if G.mul(G.mul(winv, u), w) in U]
        uws.append(U.subgroup(members, f"U_w[{w!r}]") if len(members) < U.order else U)
    return DoubleCosetDecomp(G, U, reps, cosets, uws)


class BiModule:
    """F_p[G] with G acting by left translation and U by right translation."""

    def __init__(self, G: GroupModel, U: GroupModel, p: int):
        if not is_subgroup(U, G):
            raise GroupError("right group must be a subgroup of G")
        self.G, self.U, self.p = G, U, check_prime(p)
        prod = enumerate_group(
            [(g, U.identity) for g in G.generators] + [(G.identity, u) for u in U.generators],
            ProductAmbient([G, U]),
            cap=G.order * U.order,
            name=f"{G.name}x{U.name}",
        )
        self.product = prod
        act = lambda gu, x: G.mul(G.mul(gu[0], x), G.inv(gu[1]))  # noqa: E731
        self.module = PermutationModule(GAction(prod, G.elements, act), self.p)

    @property
    def dim(self) -> int:
        return self.G.order

    def left_perms(self) -> list[np.ndarray]:
        return regular_perms(self.G, "left")

    def right_perms(self) -> list[np.ndarray]:
        return regular_perms(self.G, "right", self.U.generators)

    def iota(self, f: np.ndarray) -> np.ndarray:
        """Extension by zero of a function on U (indexed by U.elements) to G."""
        out = np.zeros(self.G.order, dtype=np.int64)
        for u, c in zip(self.U.elements, np.asarray(f) % self.p):
            out[self.G.index[u]] = c
        return out

    def left(self, g: Any, F: np.ndarray, group: GroupModel | None = None) -> np.ndarray:
        group = self.G if group is None else group
        gi = group.inv(g)
        return np.array([F[group.index[group.mul(gi, x)]] for x in group.elements], dtype=np.int64)

    def right(self, g: Any, F: np.ndarray, group: GroupModel | None = None) -> np.ndarray:
        group = self.G if group is None else group
        return np.array([F[group.index[group.mul(x, g)]] for x in group.elements], dtype=np.int64)

    def iota_equivariant(self) -> bool:
        """iota commutes with left and right translation by U, checked on basis functions."""
        U = self.U
        for i in range(U.order):
            f = np.zeros(U.order, dtype=np.int64)
            f[i] = 1
            F = self.iota(f)
            for u in U.generators:
                if not np.array_equal(self.iota(self.left(u, f, U)), self.left(u, F)):
                    return False
                if not np.array_equal(self.iota(self.right(u, f, U)), self.right(u, F)):
                    return False
        return True

    def __repr__(self) -> str:
        return f"BiModule({self.G.name}, {self.U.name}, F_{self.p})"


def induced_bimodule(G: GroupModel, U: GroupModel, p: int) -> BiModule:
    return BiModule(G, U, p)


def _perms_for(bm: BiModule, which: str) -> list[np.ndarray]:
    if which == "both":
        return bm.left_perms() + bm.right_perms()
    if which == "left-only":
        return bm.left_perms()
    raise ValueError(f"which must be 'left-only' or 'both', not {which!r}")


def commutant_dim(bm: BiModule, which: str = "both", cap: int | None = None) -> int:
    """Dimension of the linear endomorphisms of F_p[G] commuting with the selected actions."""
    return _commutant_dim(bm.dim, _perms_for(bm, which), bm.p, cap=cap)


def commutant_basis(bm: BiModule, which: str = "both", cap: int | None = None) -> np.ndarray:
    """Basis of the commutant as an array of shape (dim, n, n)."""
    cap = dense_cap() if cap is None else cap
    n = bm.dim
    if n * n > cap:
        raise CapExceeded(f"commutant system has {n * n} unknowns, cap is {cap}")
    ns = nullspace(commutant_system(n, _perms_for(bm, which), bm.p), cap=cap)
    return ns.reshape(-1, n, n)


@dataclass
class OmegaReport:
    reps: list
    double_coset_sizes: list[int]
    u_w_orders: list[int]
    per_w_dims: list[int]
    commutant_dim: int
    u_is_p_group: bool
    index_identity: bool
    iota_equivariant: bool
    explicit: dict | None = None
    seconds: float = 0.0

    @property
    def total(self) -> int:
        return sum(self.per_w_dims)

    @property
    def passed(self) -> bool:
        ok = self.total == self.commutant_dim and self.index_identity and self.iota_equivariant
        if self.explicit is not None:
            ok = ok and self.explicit["passed"]
        return ok

    def to_dict(self, timings: bool = False) -> dict:
        out = {
            "reps": [_enc(w) for w in self.reps],
            "double_coset_sizes": self.double_coset_sizes,
            "u_w_orders": self.u_w_orders,
            "per_w_dims": self.per_w_dims,
            "sum_per_w": self.total,
            "commutant_dim": self.commutant_dim,
            "u_is_p_group": self.u_is_p_group,
            "index_identity": self.index_identity,
            "iota_equivariant": self.iota_equivariant,
            "explicit": self.explicit,
            "passed": self.passed,
        }
        if timings:
            out["seconds"] = round(self.seconds, 4)
        return out


def omega_components(bm: BiModule, alpha: np.ndarray, dc: DoubleCosetDecomp) -> list[np.ndarray]:
    """lambda_w(u) = alpha(delta_e)(w u) for each representative w, as vectors on U.elements."""
    G, U = bm.G, bm.U
    phi = alpha[:, G.index[G.identity]] % bm.p
    return [np.array([phi[G.index[G.mul(w, u)]] for u in U.elements], dtype=np.int64) for w in dc.reps]


def explicit_omega_check(bm: BiModule, dc: DoubleCosetDecomp, cap: int | None = None) -> dict:
    """Apply the decomposition map to a commutant basis.

    Each component must be constant on the twisted orbits of U_w, and the
    images of the basis must be linearly independent.
    """
    G, U, p = bm.G, bm.U, bm.p
    basis = commutant_basis(bm, "both", cap=cap)
    tower = single_level_tower(U, G, p)
    labels = []
    for w in dc.reps:
        act = twisted_action(1, tower, Conjugator([w], repr(w)), validate=False)
        lab = orbit_labels(act)
        pos = {x: i for i, x in enumerate(act.points)}
        labels.append(np.array([lab[pos[u]] for u in U.elements]))
    invariant = True
    rows = []
    for alpha in basis:
        comps = omega_components(bm, alpha, dc)
        for lam, lab in zip(comps, labels):
            for k in np.unique(lab):
                if len(set(lam[lab == k].tolist())) > 1:
                    invariant = False
        rows.append(np.concatenate(comps))
    img = np.array(rows, dtype=np.int64).reshape(len(rows), -1)
    r = rank(img % p, p=p) if len(rows) else 0
    return {
        "basis_size": int(basis.shape[0]),
        "image_rank": int(r),
        "components_twisted_invariant": invariant,
        "passed": bool(invariant and r == basis.shape[0]),
    }


def omega_dimension_check(
    G: GroupModel, U: GroupModel, p: int, explicit: bool | None = None, cap: int | None = None
) -> OmegaReport:
    """Compare dim End_{GxU}(F_p[G]) with the sum over double cosets of twisted fixed-space dimensions."""
    t0 = time.perf_counter()
    p = check_prime(p)
    cap = dense_cap() if cap is None else cap
    dc = double_cosets(G, U)
    bm = induced_bimodule(G, U, p)
    cdim = commutant_dim(bm, "both", cap=cap)
    tower = single_level_tower(U, G, p)
    dims = []
    for w in dc.reps:
        conj = Conjugator([w], repr(w))
        dims.append(twisted_fixed_space(1, tower, conj, cap=cap).dim)
        assert u_w_subgroup(1, tower, conj).order == dc.u_w[len(dims) - 1].order
    if explicit is None:
        explicit = G.order <= 32
    report = OmegaReport(
        reps=dc.reps,
        double_coset_sizes=dc.sizes(),
        u_w_orders=[h.order for h in dc.u_w],
        per_w_dims=dims,
        commutant_dim=cdim,
        u_is_p_group=U.is_p_group(p),
        index_identity=dc.index_identity_holds() and sum(dc.sizes()) == G.order,
        iota_equivariant=bm.iota_equivariant(),
        explicit=explicit_omega_check(bm, dc, cap=cap) if explicit else None,
    )
    report.seconds = time.perf_counter() - t0
    return report
