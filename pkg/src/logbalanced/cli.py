"""Command-line entry point: ``logbalanced <command> [options]``.

Every run writes one artifact (JSON or CSV) that echoes its resolved
configuration; ``--replay artifact.json`` re-runs that configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import sys
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import __version__
from . import experiments as X
from . import weights as W
from .errors import ConfigError, LogBalancedError, ResourceError
from .exactnum import (EulerEMinus2, PowerRule, UnitPoint, explicit_point, golden_point,
                       point_from_rule, sampled_point)
from .lochs import has_closed_form, lochs_closed_form, lochs_generic, lochs_linear_scan
from .partitions import (CF, Bary, Beta, Farey, MeasureKind, PartitionFamily, SternBrocot,
                         Synthetic, ThreeDistance, brute_cell, cell_farey, cell_sb, farey_points,
                         sb_points, threedist_law, threedist_profile_sorted)
from .sturmian import LabeledFareyTree, farey_prefix, palindrome_depths, rotation_code

SCHEMA_VERSION = 1
SWEEP_COLUMNS = ["depth", "n_samples", "rejections", "mean", "median", "q05", "q95", "target",
                 "abs_err_median"]

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_INVARIANT = 0, 2, 3, 4


# --- spec parsing ------------------------------------------------------------------

def parse_point(spec: str, bits: int = 512) -> UnitPoint:
    """golden | e-2 | dyadic:<bits>:<seed> | rational:p/q | power:<s>"""
    head, _, arg = spec.partition(":")
    try:
        if spec == "golden":
            return golden_point(bits)
        if spec == "e-2":
            return point_from_rule(EulerEMinus2(), bits)
        if head == "dyadic":
            b, _, seed = arg.partition(":")
            return sampled_point(int(seed), 0, int(b))
        if head == "rational":
            return explicit_point(Fraction(arg))
        if head == "power":
            return point_from_rule(PowerRule(Fraction(arg)), bits)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad point spec {spec!r}: {exc}") from exc
    raise ConfigError(f"bad point spec {spec!r}")


def parse_family(spec: str, bits: int = 512) -> PartitionFamily:
    """bary:<b> | beta:p/q | cf | farey | sb | 3d:<alpha-spec> | synthetic:<weight-spec>"""
    head, _, arg = spec.partition(":")
    try:
        if head == "bary" and arg:
            return Bary(int(arg))
        if head == "beta" and arg:
            return Beta(Fraction(arg))
        if spec == "cf":
            return CF()
        if spec == "farey":
            return Farey()
        if spec == "sb":
            return SternBrocot()
        if head == "3d" and arg:
            return ThreeDistance(parse_point(arg, bits).value)
        if head == "synthetic" and arg:
            return Synthetic(W.parse_weight(arg))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad family spec {spec!r}: {exc}") from exc
    raise ConfigError(f"bad family spec {spec!r}")


def parse_pair(spec: str, bits: int = 512) -> Tuple[PartitionFamily, PartitionFamily]:
    """Two family specs joined by ':'; the first split where both halves parse wins."""
    parts = spec.split(":")
    for i in range(1, len(parts)):
        try:
            return parse_family(":".join(parts[:i]), bits), parse_family(":".join(parts[i:]), bits)
        except ConfigError:
            continue
    raise ConfigError(f"bad pair spec {spec!r}")


def parse_depths(spec: str) -> List[int]:
    """Comma list with optional ranges a..b or a..b..step, e.g. 100..1000..100,2000."""
    out = []
    try:
        for part in spec.split(","):
            if ".." in part:
                bits = [int(float(v)) for v in part.split("..")]
                step = bits[2] if len(bits) > 2 else 1
                out.extend(range(bits[0], bits[1] + 1, step))
            else:
                out.append(int(float(part)))
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad depth list {spec!r}") from exc
    return out


def parse_measure(spec: str) -> MeasureKind:
    try:
        return MeasureKind(spec)
    except ValueError as exc:
        raise ConfigError(f"measure must be lebesgue or gauss, got {spec!r}") from exc


# --- commands --------------------------------------------------------------------------

def _s(x) -> str:
    return str(x)


def cmd_cell(a) -> List[dict]:
    fam = parse_family(a.family, a.bits)
    x = parse_point(a.x, a.bits)
    cell = fam.cell(x, a.n)
    row = {"family": fam.spec(), "n": a.n, "lo": _s(cell.lo), "hi": _s(cell.hi),
           "length": _s(cell.length), "measure": _s(X.measure_value(cell, parse_measure(a.measure)))}
    if isinstance(fam, (Farey, SternBrocot)):
        d = (cell_farey if isinstance(fam, Farey) else cell_sb)(x.cf, a.n)[1]
        row.update(m=d.m, r=d.r)
    return [row]


def cmd_lochs(a) -> List[dict]:
    p1, p2 = parse_pair(a.pair, a.bits)
    x = parse_point(a.x, a.bits)
    rows = []
    if p2.self_refining:
        rec = lochs_generic(x, p1, p2, a.n, a.cap if a.cap is not None else "resolution")
    else:
        rec = lochs_linear_scan(x, p1, p2, a.n, a.cap or 256)
    rows.append({"method": rec.method.value, "L": rec.L, "flagged": rec.flagged})
    if has_closed_form(p1, p2):
        closed = lochs_closed_form(x, p1, p2, a.n)
        rows.append({"method": closed.method.value, "L": closed.L, "flagged": False})
        if closed.L != rec.L:
            raise AssertionError(f"generic L={rec.L} but closed form L={closed.L}")
    for r in rows:
        r.update(pair=f"{p1.spec()}->{p2.spec()}", n=a.n, agree=len({q['L'] for q in rows}) == 1)
    return rows


def _stats_rows(rep) -> List[dict]:
    return [{c: getattr(s, c) for c in SWEEP_COLUMNS} for s in rep.stats]


def cmd_weights(a) -> List[dict]:
    fam = parse_family(a.family, a.bits)
    f = W.parse_weight(a.weight) if a.weight else fam.default_weight()
    mode = X.Mode(a.mode)
    rep = X.convergence_sweep(fam, f, parse_measure(a.measure), parse_depths(a.depths), a.N,
                              a.seed, mode, bits=a.bits, max_bits=a.max_bits, target=1.0,
                              workers=a.threads)
    rows = _stats_rows(rep)
    if mode is X.Mode.ALMOST_EVERYWHERE:
        for r in rows:
            r["max_band_exits"] = rep.extra["max_band_exits"]
    return rows


def cmd_limits(a) -> List[dict]:
    p1, p2 = parse_pair(a.pair, a.bits)
    rep = X.lochs_limit_experiment((p1, p2), a.transform, parse_depths(a.depths), a.N, a.seed,
                                   bits=a.bits, max_bits=a.max_bits, engine=a.engine,
                                   target=a.target, workers=a.threads)
    return _stats_rows(rep)


def cmd_clt(a) -> List[dict]:
    d = X.clt_diagnostic(a.n, a.N, a.seed, workers=a.threads)
    return [dict(vars(d))]


def cmd_threedist(a) -> List[dict]:
    alpha = parse_point(a.alpha, a.bits).value
    law = threedist_law(alpha, a.n)
    brute = threedist_profile_sorted(alpha, a.n)
    rows = [{"kind": "gap", "length": _s(l), "approx": float(l), "count": c} for l, c in brute]
    rows.append({"kind": "law", "k": law.k, "m": law.m, "r": law.r,
                 "matches": list(law.profile) == brute, "distinct_lengths": len(brute)})
    if list(law.profile) != brute:
        raise AssertionError("three-distance law disagrees with sorting")
    return rows


def cmd_sturmian(a) -> List[dict]:
    alpha = parse_point(a.alpha, a.bits)
    rot, tree = rotation_code(alpha, a.n), farey_prefix(alpha, a.n)
    pal = palindrome_depths(alpha, a.n)
    rows = [{"rotation_code": rot, "farey_prefix": tree, "agree": rot == tree,
             "palindromes_literal": list(pal.literal), "palindromes_criterion": list(pal.criterion),
             "palindromes_agree": pal.agree}]
    if a.tree is not None:
        rows.append({"tree": json.loads(LabeledFareyTree(a.tree).to_json())})
    if rot != tree or not pal.agree:
        raise AssertionError("Sturmian prefixes disagree")
    return rows


def cmd_nonbalanced(a) -> List[dict]:
    rows = []
    for r in X.nonbalanced_demo(Fraction(a.s), a.k_max):
        rows.append({"k": r.k, "q_k": _s(r.q_k), "n_k": _s(r.n_k), "m_k": _s(r.m_k),
                     "mass_G_lo": _s(r.mass_G[0]), "mass_G_hi": _s(r.mass_G[1]),
                     "ratio_eta": r.ratio_eta[0], "ratio_delta": r.ratio_delta[0], "gap": r.gap,
                     "past_threshold": r.past_threshold, "mass_in_band": r.mass_in_band,
                     "delta_bound": r.delta_bound, "gap_ok": r.gap_ok})
    return rows


def cmd_norms(a) -> List[dict]:
    fam = parse_family(a.family, a.bits)
    measure = parse_measure(a.measure)
    rows = []
    for n in parse_depths(a.depths):
        v = X.partition_norm(fam, n, measure)
        rows.append({"family": fam.spec(), "depth": n, "norm": _s(v), "approx": float(v)})
    return rows


def selftest_checks(n_points: int = 50, seed: int = 0) -> List[dict]:
    """Reduced oracle-equivalence suite: closed forms vs search, cells vs enumeration."""
    from .exactnum import cf_expand
    rows = []
    mism = 0
    for i in range(n_points):
        x = sampled_point(seed, i, 512)
        for n in range(26):
            for p1, p2 in ((CF(), Farey()), (Farey(), CF())):
                g = lochs_generic(x, p1, p2, n, "resolution").L
                c = lochs_closed_form(x, p1, p2, n).L
                mism += g != c
        for n in range(16):
            mism += Farey().cell(x, n) != brute_cell(farey_points(n), x.value)
            mism += SternBrocot().cell(x, n) != brute_cell(sb_points(n), x.value)
    rows.append({"check": "lochs+cells", "points": n_points, "mismatches": mism})
    bad = 0
    for i in range(n_points):
        alpha = sampled_point(seed + 1, i, 64).value
        for n in (1, 7, 50, 300):
            bad += list(threedist_law(alpha, n).profile) != threedist_profile_sorted(alpha, n)
        y = sampled_point(seed + 2, i, 512)
        bad += rotation_code(y, 200) != farey_prefix(y, 200)
    rows.append({"check": "threedist+sturmian", "points": n_points, "mismatches": bad})
    bad_cf = sum(cf_expand(Fraction(p, q)).value != Fraction(p, q) for q in range(2, 60) for p in range(1, q))
    rows.append({"check": "cf_expand", "mismatches": bad_cf})
    return rows


def cmd_selftest(a) -> List[dict]:
    rows = selftest_checks(a.points, a.seed)
    if any(r["mismatches"] for r in rows):
        raise AssertionError("selftest found mismatches")
    return rows


COMMANDS = {
    "cell": cmd_cell, "lochs": cmd_lochs, "weights": cmd_weights, "limits": cmd_limits,
    "clt": cmd_clt, "threedist": cmd_threedist, "sturmian": cmd_sturmian,
    "nonbalanced": cmd_nonbalanced, "norms": cmd_norms, "selftest": cmd_selftest,
}


# --- parser ------------------------------------------------------------------------

def _threads_default() -> int:
    return X.default_workers()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="logbalanced", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--out", help="write the artifact here instead of stdout")
    common.add_argument("--replay", help="re-run the configuration stored in a JSON artifact")
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes (env LOGBALANCED_THREADS overrides the default)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--bits", type=int, default=512, help="initial point resolution")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("cell", parents=[common], help="print the cell I_n(x)")
    s.add_argument("--family")
    s.add_argument("--x")
    s.add_argument("--n", type=int)
    s.add_argument("--measure", default="lebesgue")

    s = sub.add_parser("lochs", parents=[common], help="one Lochs index, generic and closed form")
    s.add_argument("--pair", help="e.g. cf:farey or bary:10:cf")
    s.add_argument("--x")
    s.add_argument("--n", type=int)
    s.add_argument("--cap", type=int)

    s = sub.add_parser("weights", parents=[common], help="weight-function convergence sweep")
    s.add_argument("--family")
    s.add_argument("--weight", help="linear:<h> | twolog | onelog | nlogn:<c> | expression in n")
    s.add_argument("--measure", default="lebesgue")
    s.add_argument("--depths")
    s.add_argument("--N", type=int, default=100)
    s.add_argument("--mode", choices=[m.value for m in X.Mode], default="in_measure")
    s.add_argument("--max-bits", type=int, default=X.DEFAULT_MAX_BITS)

    s = sub.add_parser("limits", parents=[common], help="Lochs-limit experiment")
    s.add_argument("--pair")
    s.add_argument("--transform", choices=X.TRANSFORMS, default="f2(L)/f1(n)")
    s.add_argument("--depths")
    s.add_argument("--N", type=int, default=100)
    s.add_argument("--engine", choices=["auto", "generic", "closed"], default="auto")
    s.add_argument("--target", type=float)
    s.add_argument("--max-bits", type=int, default=X.DEFAULT_MAX_BITS)

    s = sub.add_parser("clt", parents=[common], help="Gaussian diagnostic for log q_n")
    s.add_argument("--n", type=int, default=500)
    s.add_argument("--N", type=int, default=500)

    s = sub.add_parser("threedist", parents=[common], help="gap profile and theorem check")
    s.add_argument("--alpha")
    s.add_argument("--n", type=int)

    s = sub.add_parser("sturmian", parents=[common], help="prefixes, palindromes, labelled tree")
    s.add_argument("--alpha")
    s.add_argument("--n", type=int)
    s.add_argument("--tree", type=int, help="also dump the labelled tree to this depth")

    s = sub.add_parser("nonbalanced", parents=[common], help="exact non-log-balanced demo")
    s.add_argument("--s", default="1")
    s.add_argument("--k-max", type=int, default=10)

    s = sub.add_parser("norms", parents=[common], help="largest cell measure per depth")
    s.add_argument("--family")
    s.add_argument("--depths")
    s.add_argument("--measure", default="lebesgue")

    s = sub.add_parser("selftest", parents=[common], help="oracle-equivalence suite")
    s.add_argument("--points", type=int, default=200)
    return p


# --- output --------------------------------------------------------------------------

def versions() -> Dict[str, str]:
    import mpmath
    import numpy
    import scipy
    import sympy
    return {"logbalanced": __version__, "python": platform.python_version(),
            "mpmath": mpmath.__version__, "sympy": sympy.__version__,
            "numpy": numpy.__version__, "scipy": scipy.__version__}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def render(command: str, config: dict, rows: List[dict], fmt: str) -> str:
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "command": command, "config": config,
               "results": _jsonable(rows), "versions": versions()}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    cols = SWEEP_COLUMNS if command in ("weights", "limits") else []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf.write(f"# schema_version={SCHEMA_VERSION} command={command}\n")
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(_jsonable(v)) if isinstance(v, (dict, list)) else v
                    for k, v in r.items()})
    return buf.getvalue()


# checked after --replay has filled in the stored configuration
REQUIRED = {
    "cell": ["family", "x", "n"], "lochs": ["pair", "x", "n"], "weights": ["family", "depths"],
    "limits": ["pair", "depths"], "threedist": ["alpha", "n"], "sturmian": ["alpha", "n"],
    "norms": ["family", "depths"],
}

CONFIG_SKIP = {"replay"}
# kept from the current invocation when replaying
REPLAY_KEEP = {"out", "replay"}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.replay:
            with open(args.replay) as fh:
                doc = json.load(fh)
            if doc.get("schema_version") != SCHEMA_VERSION:
                raise ConfigError(f"artifact schema {doc.get('schema_version')} != {SCHEMA_VERSION}")
            if doc.get("command") != args.command:
                raise ConfigError(f"artifact is for {doc.get('command')!r}, not {args.command!r}")
            for k, v in doc["config"].items():
                if k not in REPLAY_KEEP:
                    setattr(args, k, v)
        missing = [k for k in REQUIRED.get(args.command, []) if getattr(args, k) is None]
        if missing:
            raise ConfigError("missing " + ", ".join("--" + k for k in missing))
        if args.threads is None:
            args.threads = _threads_default()
        config = {k: v for k, v in sorted(vars(args).items()) if k not in CONFIG_SKIP}
        rows = COMMANDS[args.command](args)
        text = render(args.command, config, rows, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except AssertionError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except LogBalancedError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
