"""Command-line front end: runs one experiment per subcommand and writes a report.

Exit status: 0 when every assertion passes, 1 when one fails (the first
counterexample is embedded in the report), 2 on configuration or cap errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
import time
from contextlib import contextmanager
from typing import Any, Callable

import numpy as np

from . import __version__
from .coeff import CapExceeded, CoefficientError, GroupAlgebraElement, check_prime, convolve, nullspace, rank, rref
from .groups import cyclic_group, heisenberg_group, named_group, named_subgroup, units_group
from .gsets import (
    ActionError,
    GAction,
    GroupError,
    GroupModel,
    PartitionOfSet,
    is_stable,
    orbits,
    stabilizer,
    stable_refinement,
)
from .mackey import omega_dimension_check
from .permmod import (
    PermutationModule,
    bimodule_end_dim,
    center_group_algebra,
    conjugation_action,
    random_action,
    verify_finite_invariants,
)
from .towers import (
    check_coherence,
    check_coherence_direct,
    density_check,
    example_tower,
    nonclosed_delta_witness,
    pushforward,
    random_family,
    sigma,
    upsilon,
)
from .twisted import (
    BUILTIN_TOWERS,
    builtin_tower,
    diagonal_conjugator,
    identity_conjugator,
    orbit_centralizer_check,
    twisted_stabilization,
)
from .zhat import (
    BUILTIN_SPECS,
    ZhatElement,
    builtin_spec,
    faithfulness_check,
    remark_iso_check,
    zhat_reduce,
)

SCHEMA = "modp-center-report/1"
CAP_ENV = "MODP_CENTER_DENSE_CAP"


class ConfigError(ValueError):
    pass


class Report:
    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.assertions: list[dict] = []
        self.results: dict[str, Any] = {}
        self.table: list[dict] = []
        self.timings: dict[str, float] = {}
        self.error: str | None = None

    def check(self, name: str, ok: bool, counterexample: Any = None) -> bool:
        entry: dict[str, Any] = {"name": name, "passed": bool(ok)}
        if not ok and counterexample is not None:
            entry["counterexample"] = counterexample
        self.assertions.append(entry)
        return bool(ok)

    @contextmanager
    def timed(self, label: str):
        t0 = time.perf_counter()
        yield
        self.timings[label] = round(time.perf_counter() - t0, 4)

    @property
    def passed(self) -> bool:
        return self.error is None and all(a["passed"] for a in self.assertions)

    def to_dict(self, timings: bool = False) -> dict:
        out = {
            "schema": SCHEMA,
            "command": self.command,
            "config": self.config,
            "versions": {
                "modp_center": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
            "assertions": self.assertions,
            "results": self.results,
            "passed": self.passed,
        }
        if self.error is not None:
            out["error"] = self.error
        if self.table:
            out["table"] = self.table
        if timings:
            out["timings"] = self.timings
        return out


def _plain(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def render(report: Report, fmt: str, timings: bool = False) -> str:
    data = _plain(report.to_dict(timings))
    if fmt == "json":
        return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        rows = data.get("table") or [{"assertion": a["name"], "passed": a["passed"]} for a in data["assertions"]]
        cols: list[str] = []
        for r in rows:
            cols += [k for k in r if k not in cols]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
        return buf.getvalue()
    lines = [f"{report.command}: {'PASS' if data['passed'] else 'FAIL'}"]
    for a in data["assertions"]:
        lines.append(f"  [{'PASS' if a['passed'] else 'FAIL'}] {a['name']}")
        if "counterexample" in a:
            lines.append(f"      counterexample: {json.dumps(a['counterexample'], ensure_ascii=False)}")
    for k, v in data["results"].items():
        lines.append(f"  {k}: {json.dumps(v, ensure_ascii=False, sort_keys=True)}")
    if timings:
        for k, v in data.get("timings", {}).items():
            lines.append(f"  time[{k}]: {v}s")
    return "\n".join(lines) + "\n"


def _group(args: argparse.Namespace) -> GroupModel:
    if getattr(args, "group_json", None):
        return GroupModel.from_json(args.group_json)
    name = args.group
    if name in ("heisenberg3", "h3") and getattr(args, "level", None):
        return heisenberg_group(args.p, args.p**args.level)
    return named_group(name, args.p)


# ---- subcommands -------------------------------------------------------------


def cmd_orbits(args: argparse.Namespace, rep: Report) -> None:
    if args.action == "random":
        a = random_action(np.random.default_rng(args.seed))
    else:
        G = _group(args)
        a = conjugation_action(G) if args.action == "conj" else GAction(G, G.elements, G.mul)
    orbs = orbits(a)
    G = a.group
    bad = None
    for o in orbs:
        st = stabilizer(a, o.points[0])
        if len(st) * len(o.points) != G.order:
            bad = {"point": o.points[0], "orbit_size": len(o.points), "stabilizer_order": len(st)}
            break
    rep.check("orbit-stabilizer", bad is None, bad)
    rep.check("orbits partition the points", sum(len(o.points) for o in orbs) == a.size)
    fin = verify_finite_invariants(PermutationModule(a, args.p))
    rep.check("orbit sums = invariants", fin.passed, fin.to_dict() if not fin.passed else None)
    sizes = [len(o.points) for o in orbs]
    rep.results.update(group_order=G.order, points=a.size, num_orbits=len(orbs), orbit_sizes=sizes)
    rep.table = [{"orbit": i, "size": s, "least_point": o.points[0]} for i, (o, s) in enumerate(zip(orbs, sizes))]


def cmd_center(args: argparse.Namespace, rep: Report) -> None:
    G = _group(args)
    p = args.p
    with rep.timed("class_sums"):
        dim = len(center_group_algebra(G, p))
    rep.results.update(group=G.name, order=G.order, center_dim=dim)
    with rep.timed("commutant"):
        try:
            cdim = bimodule_end_dim(G, p)
        except CapExceeded as exc:
            cdim = None
            rep.results["commutant"] = f"skipped: {exc}"
    if cdim is not None:
        rep.results["commutant_dim"] = cdim
        rep.check("class sums = bimodule commutant", dim == cdim, {"class_sums": dim, "commutant": cdim})
    if args.group in ("heisenberg3", "h3") and (args.level or 1) == 1:
        rep.check("Heisenberg class count p^2 + p - 1", dim == p * p + p - 1, {"dim": dim})
    rep.table = [{"group": G.name, "order": G.order, "center_dim": dim, "commutant_dim": cdim}]


def cmd_tower_density(args: argparse.Namespace, rep: Report) -> None:
    t = example_tower(args.p, args.depth)
    m = args.level or 1
    r = density_check(t, m, args.depth)
    rep.check("coherent image = persistent orbit-sum span", r.equal, r.to_dict(t) if not r.equal else None)
    rep.results.update(r.to_dict(t))
    rep.results["level_sizes"] = [t.levels[k].size for k in range(t.depth + 1)]
    rep.table = [
        {"level": k, "points": t.levels[k].size, "orbits": t.num_orbits(k)} for k in range(t.depth + 1)
    ]


def cmd_nonclosed_delta(args: argparse.Namespace, rep: Report) -> None:
    t = example_tower(args.p, args.depth)
    w = nonclosed_delta_witness(t)
    d = w.to_dict()
    rep.check("witness found", w.found)
    rep.check("orbit sizes strictly increase", w.strictly_increasing, d["orbit_sizes"])
    p = args.p
    prefix = [p**k for k in range(min(4, len(w.sizes)))]
    rep.check("orbit sizes start 1, p, p^2, p^3", w.sizes[: len(prefix)] == prefix, d["orbit_sizes"])
    bad = next((a for a in w.approximants if not a["matches"]), None)
    rep.check("persistent approximant at every level", bad is None, bad)
    rep.results.update(d)
    rep.table = [{"level": k, "orbit_size": s} for k, s in enumerate(w.sizes)]


def _conjugator(tower, spec: str):
    if spec in ("identity", "e", "1"):
        return identity_conjugator(tower)
    if spec.startswith("diag:"):
        try:
            entries = [int(x) for x in spec[5:].split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad diagonal {spec!r}") from exc
        return diagonal_conjugator(tower, entries)
    raise ConfigError(f"unknown conjugator {spec!r}; use identity or diag:a,b,c")


def cmd_twisted_stab(args: argparse.Namespace, rep: Report) -> None:
    tower = builtin_tower(args.tower, args.p, args.depth)
    w = _conjugator(tower, args.w)
    m = args.level or 1
    with rep.timed("stabilization"):
        r = twisted_stabilization(tower, w, m, args.depth)
    d = r.to_dict()
    rep.check("image chain descends", r.descending)
    bad = next((row for row in d["levels"] if row["direct_check"] == "DISAGREE"), None)
    rep.check("orbit sums agree with direct kernel where computed", bad is None, bad)
    if not args.skip_centralizer:
        with rep.timed("centralizer"):
            cents = [orbit_centralizer_check(n, tower, w) for n in range(1, args.depth + 1)]
        fail = next((c.to_dict() for c in cents if not c.passed), None)
        rep.check("orbit size = [U_w : C(wx) ∩ U_w] at every point", fail is None, fail)
        d["centralizer"] = [c.to_dict() for c in cents]
    rep.results.update(d)
    rep.table = d["levels"]


def cmd_mackey_dim(args: argparse.Namespace, rep: Report) -> None:
    G, U = named_subgroup(args.g, args.u, args.p)
    with rep.timed("omega"):
        r = omega_dimension_check(G, U, args.p)
    d = r.to_dict()
    rep.check(
        "dim End_{GxU}(F_p[G]) = sum over w of dim k[U]_w",
        r.total == r.commutant_dim,
        {"commutant": r.commutant_dim, "per_w": r.per_w_dims},
    )
    rep.check("|UwU| |U_w| = |U|^2 and the double cosets cover G", r.index_identity, d["double_coset_sizes"])
    rep.check("extension by zero is U-equivariant", r.iota_equivariant)
    if r.explicit is not None:
        rep.check("explicit decomposition map is injective with twisted-invariant components",
                  r.explicit["passed"], r.explicit)
    rep.results.update(d)
    rep.table = [
        {"rep": w, "double_coset_size": s, "u_w_order": o, "dim": k}
        for w, s, o, k in zip(d["reps"], r.double_coset_sizes, r.u_w_orders, r.per_w_dims)
    ]


def _zhat_properties(spec, rng: np.random.Generator, samples: int) -> tuple[dict | None, dict | None]:
    """First counterexample to Frobenius and to reduce being a unital ring map, if any."""
    frob_bad = hom_bad = None
    p = spec.p
    for i in range(samples):
        m = int(rng.integers(1, spec.depth + 1))
        x = ZhatElement.random(spec, m, rng)
        y = ZhatElement.random(spec, m, rng)
        if frob_bad is None and (x + y) ** p != x**p + y**p:
            frob_bad = {"x": x.to_json(), "y": y.to_json(), "level": m}
        k = int(rng.integers(1, m + 1))
        ok = (
            zhat_reduce(x * y, k) == zhat_reduce(x, k) * zhat_reduce(y, k)
            and zhat_reduce(x + y, k) == zhat_reduce(x, k) + zhat_reduce(y, k)
            and zhat_reduce(ZhatElement.one(spec, m), k) == ZhatElement.one(spec, k)
        )
        if hom_bad is None and not ok:
            hom_bad = {"x": x.to_json(), "y": y.to_json(), "from": m, "to": k}
    return frob_bad, hom_bad


def cmd_zhat(args: argparse.Namespace, rep: Report) -> None:
    spec = builtin_spec(args.spec, args.p, args.depth)
    rng = np.random.default_rng(args.seed)
    rows = []
    for m in range(1, spec.depth + 1):
        r = remark_iso_check(spec, m, window=args.window)
        rep.check(f"remark iso tables agree at level {m}", r.passed, r.to_dict() if not r.passed else None)
        rows.append(r.to_dict())
    frob, hom = _zhat_properties(spec, rng, args.samples)
    rep.check("Frobenius (x+y)^p = x^p + y^p", frob is None, frob)
    rep.check("reduction is a unital ring homomorphism", hom is None, hom)
    top = spec.level(spec.depth)
    f = faithfulness_check(top, args.p)
    rep.check("F_p[Z'] is faithful with endomorphisms of dim |Z'|", f.passed, f.to_dict())
    one = ZhatElement.one(spec, 1)
    sample = ZhatElement.random(spec, 1, rng)
    rep.results.update(
        spec=spec.to_dict(),
        levels=rows,
        faithfulness=f.to_dict(),
        sample=sample.pretty(),
        sample_json=sample.to_json(),
        sample_pth_power=(sample**args.p).pretty(),
        one=one.pretty(),
    )
    rep.table = [{"level": r["level"], "basis_size": r["basis_size"], "products": r["products_checked"],
                  "passed": r["passed"]} for r in rows]


# ---- verify-all ----------------------------------------------------------------


def cmd_verify_all(args: argparse.Namespace, rep: Report) -> None:
    """Seeded sweep touching every operation at desk scale."""
    rng = np.random.default_rng(args.seed)
    summary: dict[str, Any] = {}

    # coefficients: rank-nullity and a convolution identity
    bad = None
    for _ in range(20):
        p = int(rng.choice([2, 3, 5]))
        a = rng.integers(0, p, size=(int(rng.integers(1, 7)), int(rng.integers(1, 7))))
        R, piv = rref(a, p)
        if rank(a, p) + nullspace(a, p).shape[0] != a.shape[1] or len(piv) != rank(a, p):
            bad = {"p": p, "matrix": a.tolist()}
            break
        x = GroupAlgebraElement.random(p, (p, 2), rng)
        y = GroupAlgebraElement.random(p, (p, 2), rng)
        if convolve(x, y) != x * y or (x + y) ** p != x**p + y**p:
            bad = {"p": p, "x": repr(x), "y": repr(y)}
            break
    rep.check("coeff: rank-nullity, convolution and Frobenius", bad is None, bad)

    # finite invariants on random actions, stable refinement
    bad = None
    for i in range(20):
        a = random_action(rng, 32, 32)
        p = int(rng.choice([2, 3, 5]))
        fin = verify_finite_invariants(PermutationModule(a, p))
        if not fin.passed:
            bad = {"sample": i, "p": p, "points": list(a.points)}
            break
        pts = list(a.points)
        blocks = [pts[j::2] for j in range(2)] if len(pts) > 1 else [pts]
        part = PartitionOfSet(pts, [b for b in blocks if b])
        ref = stable_refinement(a, part)
        if not (is_stable(a, ref) and ref.refines(part)):
            bad = {"sample": i, "refinement": "not stable"}
            break
    rep.check("gsets/permmod: orbit sums = invariants, stable refinement", bad is None, bad)

    # towers
    bad = None
    for p in (2, 3):
        t = example_tower(p, 4)
        for n in range(1, t.depth + 1):
            x = rng.integers(0, p, size=t.num_orbits(n))
            if not np.array_equal(pushforward(t, n, n - 1, upsilon(t, n, x)), upsilon(t, n - 1, sigma(t, n, n - 1, x))):
                bad = {"p": p, "level": n, "x": x.tolist()}
        for _ in range(20):
            f = random_family(t, rng)
            if check_coherence(t, f) != check_coherence_direct(t, f):
                bad = {"p": p, "family": [v.tolist() for v in f.vectors]}
        dens = density_check(t, 1, 4)
        if not dens.equal:
            bad = {"p": p, "density": dens.to_dict(t)}
        wit = nonclosed_delta_witness(t)
        if not wit.passed:
            bad = {"p": p, "witness": wit.to_dict()}
        summary[f"tower_p{p}"] = {"density_dim": dens.coherent_dim, "witness_sizes": wit.sizes}
    rep.check("towers: sigma square, coherence, density, witness", bad is None, bad)

    # centers
    for p in (2, 3):
        H = heisenberg_group(p)
        dim = len(center_group_algebra(H, p))
        cdim = bimodule_end_dim(H, p)
        rep.check(f"center: H(Z/{p}) class sums = commutant = p^2+p-1", dim == cdim == p * p + p - 1,
                  {"class_sums": dim, "commutant": cdim})
        summary[f"heisenberg_center_p{p}"] = dim

    # twisted
    tower = builtin_tower("heisenberg3", 3, 2)
    for w in (identity_conjugator(tower), diagonal_conjugator(tower, (1, 2, 4))):
        st = twisted_stabilization(tower, w, 1, 2)
        cents = [orbit_centralizer_check(n, tower, w) for n in (1, 2)]
        ok = st.descending and all(c.passed for c in cents)
        rep.check(f"twisted: descending images and orbit-centralizer identity, w={w.description}", ok,
                  st.to_dict() if not ok else None)
        summary[f"twisted_{w.description}"] = [row["image_dim"] for row in st.level_dims]

    # mackey
    for g, u, p in (("s3", "a3", 3), ("d4", "center", 2), ("heisenberg3", "index3-x", 3), ("s3", "trivial", 3)):
        G, U = named_subgroup(g, u, p)
        r = omega_dimension_check(G, U, p)
        rep.check(f"mackey: omega dimension equality for ({g}, {u}, p={p})", r.passed, r.to_dict())
        summary[f"mackey_{g}_{u}"] = [r.commutant_dim, r.per_w_dims]

    # zhat
    for name, p in (("finite", 2), ("qp-units", 3)):
        spec = builtin_spec(name, p, 3)
        ok = all(remark_iso_check(spec, m).passed for m in range(1, 4))
        frob, hom = _zhat_properties(spec, rng, 30)
        rep.check(f"zhat: {name} remark iso, Frobenius, reduction", ok and frob is None and hom is None,
                  frob or hom)
    for Z, p in ((cyclic_group(4), 2), (units_group(9), 3)):
        f = faithfulness_check(Z, p)
        rep.check(f"zhat: faithfulness of {Z.name}", f.passed, f.to_dict())
    rep.results["summary"] = summary


COMMANDS: dict[str, Callable[[argparse.Namespace, Report], None]] = {
    "orbits": cmd_orbits,
    "center": cmd_center,
    "tower-density": cmd_tower_density,
    "nonclosed-delta": cmd_nonclosed_delta,
    "twisted-stab": cmd_twisted_stab,
    "mackey-dim": cmd_mackey_dim,
    "zhat": cmd_zhat,
    "verify-all": cmd_verify_all,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=int, default=3, help="prime (default 3)")
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized sweeps")
    common.add_argument("--cap", type=int, help=f"dense linear-algebra cap (overrides ${CAP_ENV})")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings (breaks byte-determinism)")

    parser = argparse.ArgumentParser(prog="modp-center", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("orbits", parents=[common], help="orbits of a group action")
    s.add_argument("--group", default="s3")
    s.add_argument("--group-json", help="group from a JSON multiplication table")
    s.add_argument("--level", type=int)
    s.add_argument("--action", choices=("conj", "left", "random"), default="conj")

    s = sub.add_parser("center", parents=[common], help="center of F_p[G] by class sums and by commutant")
    s.add_argument("--group", default="heisenberg3")
    s.add_argument("--group-json")
    s.add_argument("--level", type=int, help="Heisenberg group over Z/p^level")

    s = sub.add_parser("tower-density", parents=[common], help="coherent families vs persistent orbits")
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--level", type=int, default=1)

    s = sub.add_parser("nonclosed-delta", parents=[common], help="thread with unbounded orbit sizes")
    s.add_argument("--depth", type=int, default=4)

    s = sub.add_parser("twisted-stab", parents=[common], help="images of twisted fixed spaces")
    s.add_argument("--tower", choices=BUILTIN_TOWERS, default="heisenberg3")
    s.add_argument("--depth", type=int, default=3)
    s.add_argument("--level", type=int, default=1)
    s.add_argument("--w", default="identity", help="identity or diag:a,b,c")
    s.add_argument("--skip-centralizer", action="store_true")

    s = sub.add_parser("mackey-dim", parents=[common], help="double-coset dimension count")
    s.add_argument("--g", default="s3")
    s.add_argument("--u", default="a3")

    s = sub.add_parser("zhat", parents=[common], help="completed group ring arithmetic checks")
    s.add_argument("--spec", choices=BUILTIN_SPECS, default="qp-units")
    s.add_argument("--depth", type=int, default=3)
    s.add_argument("--window", type=int, default=2)
    s.add_argument("--samples", type=int, default=50)

    sub.add_parser("verify-all", parents=[common], help="seeded sweep over every operation")
    return parser


def _config(args: argparse.Namespace) -> dict:
    skip = {"output", "format", "timings"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def run(args: argparse.Namespace) -> tuple[int, Report]:
    rep = Report(args.command, _config(args))
    old = os.environ.get(CAP_ENV)
    try:
        check_prime(args.p)
        for name in ("depth", "level"):
            v = getattr(args, name, None)
            if v is not None and v < 1:
                raise ConfigError(f"--{name} must be at least 1")
        if args.cap is not None:
            os.environ[CAP_ENV] = str(args.cap)
        COMMANDS[args.command](args, rep)
    except (ConfigError, CapExceeded, CoefficientError, GroupError, ActionError, ValueError, IndexError) as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
        return 2, rep
    finally:
        if args.cap is not None:
            if old is None:
                os.environ.pop(CAP_ENV, None)
            else:
                os.environ[CAP_ENV] = old
    return (0 if rep.passed else 1), rep


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    code, rep = run(args)
    text = render(rep, args.format, args.timings)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code == 2:
        print(f"error: {rep.error}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
