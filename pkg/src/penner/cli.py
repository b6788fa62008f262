"""Command-line interface: ``penner <command> --tree ... --word ...``.

Exit codes: 0 success, 2 invalid input, 3 no convergence, 4 budget exhausted
(partial output is still written), 1 internal mismatch.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import dynamics as dy
from . import twcx as tc
from .errors import BudgetExceeded, MismatchError, NonConvergence, PennerError, ParseError
from .laurent import format_poly
from .quiver import a2_tree, d5_tree, load_tree, star_tree
from .twistcalc import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    entropy,
    hyperbolic_check,
    inverse_setup,
    invariants,
    parse_word,
    word_matrix,
)

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT, EXIT_NONCONV, EXIT_BUDGET = 0, 1, 2, 3, 4


# -- argument plumbing -----------------------------------------------------------

def _positive_float(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def _positive_int(text: str) -> int:
    x = int(text)
    if x <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return x


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tree", required=True, help="tree JSON file, or one of d5, a2, star:<n>")
    p.add_argument("--N", type=int, default=None, help="override (or supply) the dimension N")
    p.add_argument("--word", default="", help="whitespace-separated vertex ids, leftmost applied last")
    p.add_argument("--as-inverse", action="store_true", help="the word describes the inverse map")
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", type=_positive_int, default=DEFAULT_MAX_ITER)
    p.add_argument("--exact", action="store_true", help="exact spectral mode (Sturm bisection)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=_positive_int, default=tc.DEFAULT_BUDGET)
    p.add_argument("--n-max", type=_positive_int, default=None)
    p.add_argument("--t", type=float, default=0.0, help="entropy parameter")
    p.add_argument("--output", choices=("text", "csv", "json"), default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="penner", description="Penner-type autoequivalences on signed tree categories")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    sub.add_parser("matrix", parents=[common], help="print M(t) and M(1)")
    sub.add_parser("invariants", parents=[common], help="stretching factor, shifting numbers, bounds")
    sub.add_parser("entropy", parents=[common], help="entropy at --t")
    p = sub.add_parser("orbit", parents=[common], help="orbit of an object as CSV")
    p.add_argument("--object", required=True, help="complex JSON file, or random")
    p.add_argument("--backend", choices=("engine", "matrix"), default="engine")
    p.add_argument("--plot", default=None, metavar="PNG", help="also draw the growth curves (needs matplotlib)")
    p = sub.add_parser("crosscheck", parents=[common], help="engine vectors against matrix powers")
    p.add_argument("--object", default=None, help="complex JSON file; default: every generator")
    p = sub.add_parser("compare", parents=[common], help="several components side by side")
    p.add_argument("--components", required=True, help="JSON list of {tree, word[, N, as_inverse]}")
    p = sub.add_parser("validate", parents=[common], help="check a complex file")
    p.add_argument("--object", required=True)
    return parser


def resolve_tree(spec: str, N: int | None):
    if spec == "d5":
        return d5_tree(N or 3)
    if spec == "a2":
        return a2_tree(N or 3)
    if spec.startswith("star:"):
        try:
            n = int(spec.split(":", 1)[1])
        except ValueError:
            raise ParseError(f"bad star size in {spec!r}") from None
        return star_tree(n, N or 3)
    try:
        text = Path(spec).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read tree file: {exc}") from None
    tree = load_tree(text)
    return tree.with_N(N) if N else tree


def resolve_word(tree, text: str, as_inverse: bool):
    word = parse_word(tree, text)
    if as_inverse:
        tree, word = inverse_setup(tree, word)
    return tree, word


def _spectral_kw(args) -> dict:
    return {"tol": args.tol, "max_iter": args.max_iter, "exact": args.exact}


def _emit_table(header, rows, fmt: str, out) -> None:
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    elif fmt == "json":
        json.dump([dict(zip(header, r)) for r in rows], out)
        out.write("\n")
    else:
        widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
        for r in [header, *rows]:
            out.write("  ".join(str(x).ljust(wd) for x, wd in zip(r, widths)).rstrip() + "\n")


# -- commands ---------------------------------------------------------------------------

def cmd_matrix(args, out) -> int:
    tree, word = resolve_word(resolve_tree(args.tree, args.N), args.word, args.as_inverse)
    M = word_matrix(tree, word)
    n = M.size
    sym = [[format_poly(M[i, j]) for j in range(n)] for i in range(n)]
    ones = M.at_one()
    fmt = args.output or "text"
    if fmt == "json":
        json.dump({"vertices": list(tree.ids), "M_t": sym, "M_1": ones}, out)
        out.write("\n")
        return EXIT_OK
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["matrix", "row", *tree.ids])
        for v, r in zip(tree.ids, sym):
            w.writerow(["M(t)", v, *r])
        for v, r in zip(tree.ids, ones):
            w.writerow(["M(1)", v, *r])
        return EXIT_OK
    out.write(f"M(t) for {word or 'the empty word'} on {', '.join(tree.ids)} (N={tree.N})\n")
    _emit_table(["", *tree.ids], [[v, *r] for v, r in zip(tree.ids, sym)], "text", out)
    out.write("M(1)\n")
    _emit_table(["", *tree.ids], [[v, *map(str, r)] for v, r in zip(tree.ids, ones)], "text", out)
    return EXIT_OK


def cmd_invariants(args, out) -> int:
    tree, word = resolve_word(resolve_tree(args.tree, args.N), args.word, args.as_inverse)
    kw = _spectral_kw(args)
    rep = invariants(tree, word, **kw)
    _, _, certified = hyperbolic_check(tree, word, **kw)
    data = rep.as_dict()
    data["t"] = args.t
    data["entropy_t"] = rep.log_lambda if args.t == 0 else entropy(tree, word, args.t, args.tol, args.max_iter)
    data["certified_stab_length"] = certified[0] if certified else None
    data["certified_quotient_length"] = certified[1] if certified else None
    fmt = args.output or "text"
    if fmt == "json":
        json.dump(data, out)
        out.write("\n")
    elif fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(list(data))
        w.writerow(["" if v is None else v for v in data.values()])
    else:
        for k, v in data.items():
            out.write(f"{k}: {'-' if v is None else v}\n")
    return EXIT_OK


def cmd_entropy(args, out) -> int:
    tree, word = resolve_word(resolve_tree(args.tree, args.N), args.word, args.as_inverse)
    h = entropy(tree, word, args.t, args.tol, args.max_iter)
    fmt = args.output or "text"
    if fmt == "json":
        json.dump({"t": args.t, "entropy": h}, out)
        out.write("\n")
    elif fmt == "csv":
        out.write(f"t,entropy\n{args.t!r},{h!r}\n")
    else:
        out.write(f"{h!r}\n")
    return EXIT_OK


def _load_object(tree, spec: str, seed: int, check: bool = True) -> tc.TwistedComplex:
    if spec == "random":
        return dy.random_complex(tree, seed)
    try:
        text = Path(spec).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read object file: {exc}") from None
    return tc.load_complex(tree, text, check)


def _plot(report: dy.OrbitReport, path: str, err) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        err.write("matplotlib is not installed; skipping --plot\n")
        return
    steps = [s for s in report.steps if s.n]
    ns = [s.n for s in steps]
    fig, ax = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax[0].plot(ns, [s.log_mass_over_n for s in steps], marker="o")
    ax[0].set_ylabel("log(mass) / n")
    ax[1].plot(ns, [float(s.phase_min) / s.n for s in steps], marker="v", label="phase_min / n")
    ax[1].plot(ns, [float(s.phase_max) / s.n for s in steps], marker="^", label="phase_max / n")
    ax[1].set_xlabel("n")
    ax[1].legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_orbit(args, out, err) -> int:
    tree, word = resolve_word(resolve_tree(args.tree, args.N), args.word, args.as_inverse)
    n_max = args.n_max or dy.DEFAULT_N_MAX
    code = EXIT_OK
    if args.backend == "matrix":
        E = _load_object(tree, args.object, args.seed)
        report = dy.matrix_orbit(tree, word, tc.vector(E), n_max)
    else:
        E = _load_object(tree, args.object, args.seed)
        try:
            report = dy.orbit(tree, word, E, n_max, args.budget)
        except BudgetExceeded as exc:
            err.write(f"budget exhausted: {exc}\n")
            report = exc.partial
            code = EXIT_BUDGET
    fmt = args.output or "csv"
    if fmt == "csv":
        out.write(report.to_csv())
    else:
        header = list(dy.CSV_COLUMNS)
        _emit_table(header, report.rows(), fmt, out)
    if args.plot:
        _plot(report, args.plot, err)
    return code


def cmd_crosscheck(args, out) -> int:
    tree, word = resolve_word(resolve_tree(args.tree, args.N), args.word, args.as_inverse)
    n = args.n_max or 4
    if args.object:
        objects = [("object", _load_object(tree, args.object, args.seed))]
    else:
        objects = [(v, tc.generator(tree, v)) for v in tree.ids]
    rows = []
    for label, E in objects:
        for st in dy.crosscheck(tree, word, E, n, args.budget):
            rows.append([
                label,
                str(st.k),
                "; ".join(format_poly(p) for p in st.engine),
                "; ".join(format_poly(p) for p in st.predicted),
                str(st.equal).lower(),
                str(st.bounded).lower(),
            ])
    _emit_table(["object", "k", "engine", "matrix", "equal", "bounded"], rows, args.output or "text", out)
    return EXIT_OK


def _read_components(path: str, default_N: int | None):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read components: {exc}") from None
    if not isinstance(doc, list) or not doc:
        raise ParseError("components file must hold a nonempty JSON list")
    comps = []
    for item in doc:
        if not isinstance(item, dict) or "tree" not in item:
            raise ParseError("each component needs a tree")
        raw = item["tree"]
        N = item.get("N", default_N)
        if isinstance(raw, dict):
            tree = load_tree(json.dumps(raw))
            tree = tree.with_N(N) if N else tree
        else:
            tree = resolve_tree(str(raw), N)
        tree, word = resolve_word(tree, item.get("word", ""), bool(item.get("as_inverse", False)))
        comps.append(dy.ComponentSpec(tree, word))
    return comps


def cmd_compare(args, out) -> int:
    comps = _read_components(args.components, args.N)
    res = dy.compare_components(comps, **_spectral_kw(args))
    fmt = args.output or "text"
    if fmt == "json":
        json.dump(res.as_dict(), out)
        out.write("\n")
        return EXIT_OK
    rows = [
        [str(i), str(c.tree.N), str(c.word), repr(lam), str(tm), str(tp)]
        for i, (c, lam, (tm, tp)) in enumerate(zip(comps, res.lambdas, res.tau_pairs))
    ]
    _emit_table(["component", "N", "word", "lambda", "tau_minus", "tau_plus"], rows, fmt, out)
    if fmt == "text":
        out.write(f"filtration steps: {list(res.filtration_steps)}\n")
        out.write(f"verdict: {res.verdict}\n")
    return EXIT_OK


def cmd_validate(args, out) -> int:
    tree = resolve_tree(args.tree, args.N)
    E = _load_object(tree, args.object, args.seed, check=False)
    problems = tc.validate(E)
    fmt = args.output or "text"
    if fmt == "json":
        json.dump({"ok": not problems, "violations": problems}, out)
        out.write("\n")
    elif problems:
        for p in problems:
            out.write(p + "\n")
    else:
        out.write("ok\n")
    return EXIT_INPUT if problems else EXIT_OK


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    handlers = {
        "matrix": lambda: cmd_matrix(args, out),
        "invariants": lambda: cmd_invariants(args, out),
        "entropy": lambda: cmd_entropy(args, out),
        "orbit": lambda: cmd_orbit(args, out, err),
        "crosscheck": lambda: cmd_crosscheck(args, out),
        "compare": lambda: cmd_compare(args, out),
        "validate": lambda: cmd_validate(args, out),
    }
    try:
        return handlers[args.command]()
    except NonConvergence as exc:
        err.write(f"error: {exc}\n")
        return EXIT_NONCONV
    except BudgetExceeded as exc:
        err.write(f"error: {exc}\n")
        return EXIT_BUDGET
    except MismatchError as exc:
        err.write(f"internal mismatch: {exc}\n")
        return EXIT_MISMATCH
    except PennerError as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())
