"""Command-line front end: one subcommand per lab operation.

Every run writes a single JSON document (or a CSV table with ``--format
csv`` where the output is tabular).  Exit status: 0 on success, 1 on a
domain or usage error, 2 when an enumeration or vertex cap is exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .errors import CapExceeded, InvalidParameter, ShuffleLabError
from .trees import DEFAULT_CAP, CatalanTree, cached_catalan_table, iter_encodings

SCHEMA_VERSION = 1


def frac(x) -> dict:
    x = Fraction(x)
    return {"num": str(x.numerator), "den": str(x.denominator)}


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParameter(f"not a rational number: {text!r}") from exc


def parse_alpha(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x != "")
    except ValueError as exc:
        raise InvalidParameter(f"bad multi-index {text!r}; expected e.g. 1,0,2") from exc


def parse_code(text: str) -> tuple[int, ...]:
    """Vertex code ``1.2.1`` (the root is ``""`` or ``root``)."""
    text = text.strip()
    if text in ("", "root"):
        return ()
    try:
        return tuple(int(x) for x in text.split("."))
    except ValueError as exc:
        raise InvalidParameter(f"bad vertex code {text!r}; expected e.g. 1.2") from exc


class UsageError(ShuffleLabError):
    code = "usage-error"


class Parser(argparse.ArgumentParser):
    """argparse, but usage mistakes exit 1 so that 2 stays reserved for caps."""

    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------


def _read_json(path: str) -> dict:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParameter(f"{path}: invalid JSON ({exc})") from exc


def load_table(args):
    """H from ``--table FILE``, ``--table-json TEXT`` or ``--entries`` with ``--n``/``--d``."""
    from .weights import CoefficientTable

    if args.table:
        return CoefficientTable.from_json(_read_json(args.table))
    if args.table_json:
        return CoefficientTable.from_json(json.loads(args.table_json))
    if args.entries is None:
        raise UsageError("an H table is required (--table, --table-json or --entries)")
    if args.n is None or args.d is None:
        raise UsageError("--entries needs --n and --d")
    table = CoefficientTable(args.n, args.d)
    for item in filter(None, (s.strip() for s in args.entries.split(";"))):
        try:
            head, value = item.split("=")
            i, alpha = head.split(":")
        except ValueError as exc:
            raise InvalidParameter(f"bad entry {item!r}; expected i:a1,a2=value") from exc
        table.set(int(i), parse_alpha(alpha), parse_fraction(value))
    return table


def load_offspring(args):
    """Offspring law from ``--offspring FILE``, ``--offspring-json`` or ``--masses``."""
    from .sampler import OffspringDistribution

    if args.offspring:
        return OffspringDistribution.from_json(_read_json(args.offspring))
    if args.offspring_json:
        return OffspringDistribution.from_json(json.loads(args.offspring_json))
    if args.masses is None or args.n is None:
        raise UsageError("an offspring law is required (--offspring, --offspring-json or --masses with --n)")
    h = {}
    for item in filter(None, (s.strip() for s in args.masses.split(";"))):
        try:
            head, value = item.split("=")
            i, alpha = head.split(":")
        except ValueError as exc:
            raise InvalidParameter(f"bad mass {item!r}; expected i:a1,a2=value") from exc
        h[(int(i), parse_alpha(alpha))] = parse_fraction(value)
    return OffspringDistribution.from_subprobability(args.n, h)


def _tree(args) -> CatalanTree:
    return CatalanTree.parse(args.tree, args.d)


# ---------------------------------------------------------------------------
# Subcommands: each returns (document, csv rows or None)
# ---------------------------------------------------------------------------


def cmd_count(args):
    value = cached_catalan_table(args.d, args.k)[args.k]
    return {"d": args.d, "k": args.k, "value": str(value)}, [{"d": args.d, "k": args.k, "value": value}]


def cmd_enumerate(args):
    encs = []
    for enc in iter_encodings(args.d, args.k, args.cap):
        if args.limit is not None and len(encs) >= args.limit:
            break
        encs.append(enc)
    return {"d": args.d, "k": args.k, "count": len(encs), "trees": encs}, [{"enc": e} for e in encs]


def cmd_sample(args):
    import random

    from .sampler import sample_encoding

    rng = random.Random(f"shufflelab:sample:{args.seed}")
    encs = [sample_encoding(args.d, args.k, rng) for _ in range(args.count)]
    return {"d": args.d, "k": args.k, "seed": args.seed, "trees": encs}, [{"enc": e} for e in encs]


def cmd_perfect_stats(args):
    from .sampler import estimate_Q, exact_Q, perfect_bound

    doc = {"d": args.d, "p": args.p, "k": args.k,
           "bound": {"kappa": f"1/(2*{args.p}*{args.d}^{args.p}*e^{args.p})"},
           "approx": {"bound": float(perfect_bound(args.d, args.p, args.k))}}
    if args.exact:
        q = exact_Q(args.d, args.p, args.k, args.cap)
        doc["exact_Q"] = frac(q)
        doc["approx"]["exact_Q"] = float(q)
    if args.trials:
        s = estimate_Q(args.d, args.p, args.k, args.trials, args.seed, args.workers)
        doc.update({"trials": s.trials, "seed": s.seed, "not_perfect": s.hits, "rate": frac(s.rate)})
        doc["approx"].update({"rate": float(s.rate), "sigma": s.sigma()})
    return doc, None


def cmd_shuffle_classes(args):
    from .shuffle import shuffle_catalogue, shuffle_class

    if args.tree:
        cls = shuffle_class(_tree(args), parse_code(args.vertex or ""), args.p)
        return {"d": args.d, "p": args.p, "class": cls.to_json()}, [{"key": cls.key, "enc": m} for m in cls.members]
    if args.k is None:
        raise UsageError("give --k (all classes) or --tree with --vertex")
    cat = shuffle_catalogue(args.d, args.k, args.p, args.cap)
    classes = [c.to_json() for c in cat.classes.values()]
    rows = [{"key": c.key, "enc": m} for c in cat.classes.values() for m in c.members]
    return {"d": args.d, "k": args.k, "p": args.p, "count": len(classes), "classes": classes}, rows


def cmd_span_check(args):
    from .span import span_membership

    return span_membership(args.d, args.k, args.p, args.cap).to_json(), None


def cmd_span_dim(args):
    from .span import span_dimension

    rank, total = span_dimension(args.d, args.k, args.p, args.cap)
    return {"d": args.d, "k": args.k, "p": args.p, "rank": str(rank), "dimension": str(total),
            "full_span": rank == total}, None


def cmd_width_fn(args):
    from .span import width_functions

    if not args.tree and args.k is None:
        raise UsageError("give --k (all trees) or --tree")
    trees = [_tree(args)] if args.tree else [CatalanTree(args.d, e) for e in iter_encodings(args.d, args.k, args.cap)]
    recs = [width_functions(t, args.p) for t in trees]
    rows = [{"enc": r.enc, "psi": str(r.psi), "phi": str(r.phi), "phi_star": str(r.phi_star),
             "perfect": int(r.perfect)} for r in recs]
    return {"d": args.d, "p": args.p, "records": [r.to_json() for r in recs]}, rows


def cmd_norms(args):
    from .span import approximation_norms, approximation_norms_sampled

    if args.trials:
        rep = approximation_norms_sampled(args.d, args.k, args.p, args.which, args.trials, args.seed, args.workers)
    else:
        rep = approximation_norms(args.d, args.k, args.p, args.which, args.cap)
    return rep.to_json(), None


def cmd_invert(args):
    from .inversion import inverse_coefficient, inverse_series

    H = load_table(args)
    if args.alpha is not None:
        g = inverse_coefficient(H, args.i, parse_alpha(args.alpha), args.cap)
        return {"i": args.i, "alpha": list(parse_alpha(args.alpha)), "g": frac(g),
                "approx": {"g": float(g)}}, None
    if args.degree is None:
        raise UsageError("give --alpha (one coefficient) or --degree (series)")
    return {"method": "tree-sum", "series": inverse_series(H, args.degree, args.cap).to_json()}, None


def cmd_invert_oracle(args):
    from .inversion import inverse_series, map_from_table, truncated_inverse

    H = load_table(args)
    G = truncated_inverse(map_from_table(H, args.degree), args.degree)
    doc = {"method": "truncated-composition", "series": G.to_json()}
    if args.compare:
        doc["agrees_with_tree_sum"] = G == inverse_series(H, args.degree, args.cap)
    return doc, None


def cmd_nilpotent_check(args):
    from .weights import nilpotency_report

    return nilpotency_report(load_table(args), args.p).to_json(), None


def cmd_fern_sum(args):
    from .weights import fern_sum

    v = fern_sum(args.i, args.j, parse_alpha(args.alpha), load_table(args), args.p)
    return {"i": args.i, "j": args.j, "alpha": list(parse_alpha(args.alpha)), "p": args.p,
            "value": frac(v), "approx": {"value": float(v)}}, None


def cmd_shuffle_lemma(args):
    from .weights import shuffle_lemma_check

    return shuffle_lemma_check(load_table(args), args.p, args.k, args.i, parse_alpha(args.alpha), args.cap).to_json(), None


def cmd_bounds(args):
    from .inversion import coefficient_bound_report

    deficit = parse_fraction(args.deficit) if args.deficit else None
    return coefficient_bound_report(load_table(args), args.i, parse_alpha(args.alpha), deficit, args.cap).to_json(), None


def cmd_chain_kernel(args):
    from .chain import build_kernel

    return build_kernel(args.d, args.k, args.p, cap=args.cap).to_json(), None


def cmd_chain_stationary(args):
    from .chain import build_kernel, stationary_distribution

    return stationary_distribution(build_kernel(args.d, args.k, args.p, cap=args.cap)).to_json(), None


def cmd_chain_feasible(args):
    from .chain import uniform_feasibility

    return uniform_feasibility(args.d, args.k, args.p, args.cap, args.max_pivots).to_json(), None


def cmd_gw_sample(args):
    import random

    from .sampler import CAP_EXCEEDED, sample_gw_multitype

    off = load_offspring(args)
    rng = random.Random(f"shufflelab:gw:{args.seed}")
    out = []
    for _ in range(args.count):
        t = sample_gw_multitype(off, args.root, rng, args.vertex_cap)
        out.append({"status": CAP_EXCEEDED} if t is CAP_EXCEEDED else {"status": "finite", **t.to_json()})
    return {"seed": args.seed, "root_type": args.root, "vertex_cap": args.vertex_cap, "trees": out}, None


def cmd_gw_leaflaw(args):
    from .inversion import verify_gw_leaf_law

    rep = verify_gw_leaf_law(load_offspring(args), args.root, parse_alpha(args.alpha), args.trials,
                             args.seed, args.vertex_cap, args.workers)
    return rep.to_json(), None


def cmd_verify_all(args):
    from .verify import run_all

    only = [int(x) for x in args.only.split(",")] if args.only else None
    results = run_all(args.workers, only)
    doc = {"passed": sum(r.passed for r in results), "total": len(results),
           "results": [r.to_json() for r in results]}
    return doc, [r.line(timing=False) for r in results]


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common(sp, formats=("json",)):
    sp.add_argument("--out", help="write the document here instead of stdout")
    sp.add_argument("--format", choices=formats, default=formats[0])
    sp.add_argument("--cap", type=int, default=DEFAULT_CAP, help="largest enumeration allowed (default %(default)s)")
    sp.add_argument("--workers", type=int, default=1, help="worker processes; results do not depend on it")


def _dkp(sp, k=True, p=True, k_required=True):
    sp.add_argument("--d", type=int, required=True, help="arity")
    if k:
        sp.add_argument("--k", type=int, required=k_required, help="internal vertices")
    if p:
        sp.add_argument("--p", type=int, required=True, help="path length")


def _table_args(sp):
    sp.add_argument("--table", help="CoefficientTable JSON file ('-' for stdin)")
    sp.add_argument("--table-json", help="CoefficientTable JSON inline")
    sp.add_argument("--entries", help="inline divided coefficients, e.g. '1:0,2=2;2:1,1=-1/2'")
    sp.add_argument("--n", type=int)
    sp.add_argument("--d", type=int)


def _offspring_args(sp):
    sp.add_argument("--offspring", help="offspring JSON file")
    sp.add_argument("--offspring-json", help="offspring JSON inline")
    sp.add_argument("--masses", help="non-leaf masses, e.g. '1:2=1/3'; leaf masses fill each row to 1")
    sp.add_argument("--n", type=int)
    sp.add_argument("--root", type=int, default=1, help="root type (1-based)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--vertex-cap", type=int, default=10_000)


COMMANDS = {}


def build_parser() -> Parser:
    ap = Parser(prog="shufflelab", description="Experiments on d-Catalan trees, shuffle classes and inverse series.")
    ap.add_argument("--version", action="version", version=f"shufflelab {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=Parser, required=True)

    def add(name, fn, help, csv_ok=False, formats=None):
        sp = sub.add_parser(name, help=help)
        _common(sp, formats or (("json", "csv") if csv_ok else ("json",)))
        COMMANDS[name] = fn
        return sp

    sp = add("count", cmd_count, "number of trees in C_k^(d)", csv_ok=True)
    _dkp(sp, p=False)
    sp = add("enumerate", cmd_enumerate, "list tree encodings", csv_ok=True)
    _dkp(sp, p=False)
    sp.add_argument("--limit", type=int)
    sp = add("sample", cmd_sample, "uniform random trees", csv_ok=True)
    _dkp(sp, p=False)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp = add("perfect-stats", cmd_perfect_stats, "fraction of trees that are not p-perfect")
    _dkp(sp)
    sp.add_argument("--trials", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--exact", action="store_true", help="also enumerate for the exact fraction")
    sp = add("shuffle-classes", cmd_shuffle_classes, "length-p shuffle classes", csv_ok=True)
    _dkp(sp, k_required=False)
    sp.add_argument("--tree", help="single tree encoding")
    sp.add_argument("--vertex", help="vertex code such as 1.2 (with --tree)")
    sp = add("span-check", cmd_span_check, "is 1 in the span of class indicators")
    _dkp(sp)
    sp = add("span-dim", cmd_span_dim, "rank of the indicator matrix")
    _dkp(sp)
    sp = add("width-fn", cmd_width_fn, "psi, J_m, phi and phi* per tree", csv_ok=True)
    _dkp(sp, k_required=False)
    sp.add_argument("--tree")
    sp = add("norms", cmd_norms, "l1 and sup distance of a width function from 1")
    _dkp(sp)
    sp.add_argument("--which", choices=("psi", "phi", "phi_star"), default="phi_star")
    sp.add_argument("--trials", type=int, default=0, help="sample instead of enumerating")
    sp.add_argument("--seed", type=int, default=0)

    sp = add("invert", cmd_invert, "inverse coefficients from tree sums")
    _table_args(sp)
    sp.add_argument("--i", type=int, default=1)
    sp.add_argument("--alpha")
    sp.add_argument("--degree", type=int)
    sp = add("invert-oracle", cmd_invert_oracle, "inverse series by degree-by-degree composition")
    _table_args(sp)
    sp.add_argument("--degree", type=int, required=True)
    sp.add_argument("--compare", action="store_true", help="also compare with the tree sums")
    sp = add("nilpotent-check", cmd_nilpotent_check, "is (JH)^p = 0")
    _table_args(sp)
    sp.add_argument("--p", type=int, required=True)
    sp = add("fern-sum", cmd_fern_sum, "weighted fern labellings")
    _table_args(sp)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--i", type=int, required=True)
    sp.add_argument("--j", type=int, required=True)
    sp.add_argument("--alpha", required=True)
    sp = add("shuffle-lemma", cmd_shuffle_lemma, "class sums of average H-weights")
    _table_args(sp)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--i", type=int, required=True)
    sp.add_argument("--alpha", required=True)
    sp = add("bounds", cmd_bounds, "inverse coefficient against its a-priori bound")
    _table_args(sp)
    sp.add_argument("--i", type=int, required=True)
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--deficit", help="exact l1 deficit for the refined bound, e.g. 1/10")

    for name, fn, help in (("chain-kernel", cmd_chain_kernel, "p-shuffle transition matrix"),
                           ("chain-stationary", cmd_chain_stationary, "exact stationary laws"),
                           ("chain-feasible", cmd_chain_feasible, "LP search for a uniform-stationary rule")):
        sp = add(name, fn, help)
        _dkp(sp)
        if name == "chain-feasible":
            sp.add_argument("--max-pivots", type=int)

    sp = add("gw-sample", cmd_gw_sample, "multitype Galton-Watson trees")
    _offspring_args(sp)
    sp.add_argument("--count", type=int, default=1)
    sp = add("gw-leaflaw", cmd_gw_leaflaw, "empirical leaf-type law against the exact value")
    _offspring_args(sp)
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--trials", type=int, default=100_000)

    sp = add("verify-all", cmd_verify_all, "run the acceptance checks", formats=("text", "json"))
    sp.add_argument("--only", help="comma-separated criterion numbers")
    return ap


def render(doc: dict, rows, fmt: str) -> str:
    if fmt == "text":
        return "\n".join(rows + [f"{doc['passed']}/{doc['total']} criteria passed"]) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["value"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows or [])
        return buf.getvalue()
    return json.dumps(doc, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    ap = build_parser()
    out = None
    try:
        args = ap.parse_args(argv)
        out = args.out
        body, rows = COMMANDS[args.command](args)
        doc = {"schema": f"shufflelab.{args.command}.v{SCHEMA_VERSION}", "version": __version__, **body}
        _emit(render(doc, rows, args.format), out)
        if args.command == "verify-all":
            return 0 if body["passed"] == body["total"] else 1
        return 0
    except CapExceeded as exc:
        status, code, err = 2, exc.code, exc
    except ShuffleLabError as exc:
        status, code, err = 1, exc.code, exc
    except OSError as exc:
        status, code, err = 1, "io-error", exc
    print(f"shufflelab: {err}", file=sys.stderr)
    doc = {"schema": f"shufflelab.error.v{SCHEMA_VERSION}", "version": __version__,
           "error": {"code": code, "message": str(err)}}
    try:
        _emit(json.dumps(doc, indent=2) + "\n", out)
    except OSError:
        pass
    return status


if __name__ == "__main__":
    sys.exit(main())
