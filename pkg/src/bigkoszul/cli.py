"""Command-line interface.

Exit codes: 0 when a result was computed (a failed Koszulity check still
exits 0), 1 for invalid input, 2 when a computation is refused because a
precondition fails or the operation budget runs out.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence, TextIO

from .exactla import FinModule

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_REFUSED = 2

_METHODS = {
    "cobar": "cobar-diagonal",
    "bar": "bar-diagonal",
    "koszul-complex": "koszul-complex",
    "lattice": "lattice",
    "matrix": "matrix",
}


class InputError(Exception):
    pass


class Refused(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_ring(path: str, d: int | None):
    from .fileformat import FormatError, load_ring
    from .quadra import UnsupportedModuleError

    try:
        return load_ring(_read(path), d)
    except FormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    except UnsupportedModuleError as exc:
        raise Refused(str(exc)) from None
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def _bounds(text: str | None) -> tuple[int, int, int]:
    if text is None:
        return (2, 3, 2)
    try:
        vals = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise InputError("--bounds expects m,n,size") from None
    if len(vals) != 3 or min(vals) < 0:
        raise InputError("--bounds expects three nonnegative integers m,n,size")
    return vals  # type: ignore[return-value]


def _table_lines(tab) -> list[str]:
    lines = [f"{'n':>3} {'i':>3}  {'flag':<13} homology"]
    for n, i, text, flag in tab.rows():
        lines.append(f"{n:>3} {i:>3}  {flag:<13} {text}")
    return lines


def _verdict_lines(v) -> list[str]:
    lines = ["[verdict]", f"method = {v.method}", f"label = {v.label}"]
    state = "inconclusive" if v.inconclusive else ("true" if v.koszul else "false")
    lines.append(f"koszul = {state}")
    lines.append(f"checked_up_to = {v.checked_up_to}")
    if v.failed_at:
        n, i = v.failed_at
        lines.append(f"failed_at = {'-' if n is None else n} {i}")
    if v.note:
        lines.append(f"note = {v.note}")
    return lines


def cmd_check(args, out: TextIO) -> int:
    from .bigring import restrict_to_diagonal
    from .homcheck import PreconditionError, koszul_verdict

    A = _load_ring(args.file, args.max_degree)
    d = args.max_degree if args.max_degree is not None else A.dmax
    if args.restrict_diagonal and not A.base.is_diagonal:
        A = restrict_to_diagonal(A)
    method = _METHODS[args.method]
    kw = {}
    if method == "matrix":
        m, n, size = _bounds(args.bounds)
        kw = {"m_max": m, "n_max": n, "size_bound": size}
    if method == "koszul-complex":
        kw = {"side": args.side}
    try:
        v = koszul_verdict(A, method, d, **kw)
    except PreconditionError as exc:
        raise Refused(str(exc)) from None
    lines = [f"# ring: {A.name or args.file}", f"# method: {method}, max degree {d}"]
    if v.table is not None:
        lines += _table_lines(v.table)
    if method == "matrix" and not v.koszul and not v.inconclusive:
        lines.append("# failing chain problem")
        lines += v.witness["problem"].to_lines()
    lines += _verdict_lines(v)
    out.write("\n".join(lines) + "\n")
    return EXIT_REFUSED if v.inconclusive else EXIT_OK


def _presentation(path: str, d: int | None):
    from .quadra import relations_of

    A = _load_ring(path, d)
    if A.dmax < 2:
        raise InputError("need a ring truncated at degree 2 or higher")
    return A, relations_of(A)


def cmd_dual(args, out: TextIO) -> int:
    from .quadra import UnsupportedModuleError, quadratic_dual_coring

    A, P = _presentation(args.file, args.max_degree)
    d = args.max_degree if args.max_degree is not None else A.dmax
    try:
        C = quadratic_dual_coring(P, d)
    except UnsupportedModuleError as exc:
        raise Refused(str(exc)) from None
    lines = [f"# quadratic dual coring of {A.name or args.file}", "ranks " + " ".join(map(str, C.ranks()))]
    for n in range(d + 1):
        for s in A.objects:
            for t in A.objects:
                M = C.component(n, s, t)
                if not M.is_zero:
                    lines.append(f"C_-{n} {s} {t} : {M}")
    out.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_quadratic_part(args, out: TextIO) -> int:
    from .exactla import kernel
    from .fileformat import dump_quadratic
    from .quadra import quadratic_part

    A = _load_ring(args.file, args.max_degree)
    d = args.max_degree if args.max_degree is not None else A.dmax
    if d < 2:
        raise InputError("need degree 2 or higher")
    Q = quadratic_part(A, d)
    if args.emit:
        from .quadra import relations_of

        out.write(dump_quadratic(relations_of(A), d))
        return EXIT_OK
    lines = [f"# quadratic part of {A.name or args.file}", "ranks " + " ".join(map(str, Q.ring.ranks()))]
    for n in range(d + 1):
        inj = surj = True
        for s in A.objects:
            for t in A.objects:
                f = Q.comparison(n, s, t)
                if not kernel(f).module.is_zero:
                    inj = False
                from .exactla import Submodule
                import numpy as np

                if not Submodule(f.target, f.matrix).contains_all(np.eye(f.target.rank, dtype=np.int64)):
                    surj = False
        lines.append(f"degree {n}: injective={'yes' if inj else 'no'} surjective={'yes' if surj else 'no'}")
    out.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_cobar(args, out: TextIO) -> int:
    from .homcheck import cobar_table
    from .quadra import UnsupportedModuleError, quadratic_dual_coring

    A, P = _presentation(args.file, args.max_degree)
    d = args.max_degree if args.max_degree is not None else A.dmax
    try:
        C = quadratic_dual_coring(P, d)
    except UnsupportedModuleError as exc:
        raise Refused(str(exc)) from None
    tab = cobar_table(C, d)
    lines = [f"# cobar cohomology of the dual coring of {A.name or args.file}"] + _table_lines(tab)
    out.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_ext(args, out: TextIO) -> int:
    from .fileformat import FormatError, parse, to_category
    from .filtcat import ext0, ext1, frobenius_ext1

    try:
        kind, data = to_category(parse(_read(args.category)))
    except FormatError as exc:
        raise InputError(f"{args.category}: {exc}") from None
    if kind == "frobenius":
        if args.n != 1:
            raise Refused("only Ext^1 is computed for Frobenius categories")
        try:
            i, j = int(args.X), int(args.Y)
        except ValueError:
            raise InputError("objects of a Frobenius category are integer levels") from None
        res: FinModule = frobenius_ext1(data, i, j)
    else:
        spec, objs = data
        for name in (args.X, args.Y):
            if name not in objs:
                raise InputError(f"unknown object {name!r}")
        X, Y = objs[args.X], objs[args.Y]
        if args.n == 0:
            res = ext0(X, Y)
        elif args.n == 1:
            res = ext1(X, Y).module
        else:
            raise Refused("Ext^n for n >= 2 is only available through the product test")
    out.write(f"{res}\n")
    return EXIT_OK


def cmd_matrix(args, out: TextIO) -> int:
    from .matrixcrit import BudgetExceeded, parse_problem, parse_witness, search_witness, verify_witness

    A = _load_ring(args.ring, None)
    try:
        problem = parse_problem(A, _read(args.problem))
    except ValueError as exc:
        raise InputError(f"{args.problem}: {exc}") from None
    if args.action == "verify":
        if not args.witness:
            raise InputError("verify needs a witness file")
        try:
            w = parse_witness(A, _read(args.witness), problem.m)
        except ValueError as exc:
            raise InputError(f"{args.witness}: {exc}") from None
        ok, eq = verify_witness(problem, w)
        out.write("valid\n" if ok else f"invalid: {eq}\n")
        return EXIT_OK
    try:
        res = search_witness(problem, args.size, args.variant)
    except BudgetExceeded as exc:
        raise Refused(str(exc)) from None
    if isinstance(res, dict):
        out.write(
            f"absent variant={res['variant']} size_bound={res['size_bound']} candidates={res['candidates']}\n"
        )
    else:
        out.write("\n".join(res.to_lines()) + "\n")
    return EXIT_OK


def _param(text: str):
    if "=" not in text:
        raise InputError(f"parameter {text!r} must read key=value")
    k, v = text.split("=", 1)
    if v in ("true", "false"):
        return k, v == "true"
    try:
        return k, int(v)
    except ValueError:
        return k, v


def cmd_corpus(args, out: TextIO) -> int:
    from . import corpus
    from .fileformat import dump_quadratic, dump_ring
    from .quadra import relations_of

    if args.action == "list":
        for e in corpus.list_entries():
            params = ", ".join(f"{k}={v}" for k, v in e.defaults.items())
            exp = ", ".join(f"{k}={'yes' if v else 'no'}" for k, v in e.expected.items())
            out.write(f"{e.name:<22} {e.kind:<10} [{params}] {e.description}; source: {e.source}")
            out.write(f"; expected: {exp}\n" if exp else "\n")
        return EXIT_OK
    if not args.name:
        raise InputError("corpus get needs an entry name")
    if args.name not in corpus.CATALOG:
        raise InputError(f"unknown corpus entry {args.name!r}")
    entry = corpus.CATALOG[args.name]
    params = dict(_param(p) for p in args.param)
    if args.name == "non-koszul-search":
        if args.seed is None:
            raise InputError("non-koszul-search needs an explicit --seed")
        params["seed"] = args.seed
    if entry.kind == "coalgebra":
        raise Refused(f"{args.name} is a coalgebra; the file format has no coalgebra documents")
    try:
        A = entry.build(**params)
    except (corpus.CorpusError, TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None
    if entry.kind == "category":
        out.write(_category_text(args.name, entry, params, A))
        return EXIT_OK
    if args.format == "quadratic":
        out.write(dump_quadratic(relations_of(A), A.dmax))
    else:
        out.write(dump_ring(A))
    return EXIT_OK


def _category_text(name: str, entry, params: dict, data) -> str:
    lines = ["category v1", f"name {name}"]
    if name == "frobenius":
        lines += ["kind frobenius", f"variant {data.variant}", f"q {data.q}"]
        if data.denominator_bound is not None:
            lines.append(f"bound {data.denominator_bound}")
        return "\n".join(lines) + "\n"
    spec, objs = data
    l = dict(entry.defaults, **params)["l"]
    lines += ["kind filtered", f"modulus {spec.modulus}", f"group cyclic {l}"]
    for oname, X in objs.items():
        lines.append(f"object {oname} : " + " ".join(map(str, X.levels)))
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bigkoszul", description="Koszulity checks for big graded rings.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="decide Koszulity up to a degree")
    c.add_argument("file")
    c.add_argument("--method", choices=sorted(_METHODS), default="cobar")
    c.add_argument("--max-degree", type=int, default=None)
    c.add_argument("--bounds", default=None, help="m,n,size for the matrix method")
    c.add_argument("--side", choices=["left", "right"], default="left")
    c.add_argument("--restrict-diagonal", action="store_true", help="replace a non-diagonal base by its diagonal")
    c.set_defaults(func=cmd_check)

    for name, func, helptext in (
        ("dual", cmd_dual, "quadratic dual coring"),
        ("cobar", cmd_cobar, "cobar cohomology table of the dual coring"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("file")
        s.add_argument("--max-degree", type=int, default=None)
        s.set_defaults(func=func)

    q = sub.add_parser("quadratic-part", help="compare a ring with its quadratic part")
    q.add_argument("file")
    q.add_argument("--max-degree", type=int, default=None)
    q.add_argument("--emit", action="store_true", help="print the quadratic presentation")
    q.set_defaults(func=cmd_quadratic_part)

    e = sub.add_parser("ext", help="Ext groups in a category file")
    e.add_argument("category")
    e.add_argument("X")
    e.add_argument("Y")
    e.add_argument("--n", type=int, default=1)
    e.set_defaults(func=cmd_ext)

    mx = sub.add_parser("matrix", help="verify or search matrix-condition witnesses")
    mx.add_argument("action", choices=["verify", "search"])
    mx.add_argument("ring")
    mx.add_argument("problem")
    mx.add_argument("witness", nargs="?")
    mx.add_argument("--size", type=int, default=2)
    mx.add_argument("--variant", choices=["general", "triangulated"], default="general")
    mx.set_defaults(func=cmd_matrix)

    co = sub.add_parser("corpus", help="built-in examples")
    co.add_argument("action", choices=["list", "get"])
    co.add_argument("name", nargs="?")
    co.add_argument("--param", action="append", default=[], help="key=value")
    co.add_argument("--seed", type=int, default=None)
    co.add_argument("--format", choices=["ring", "quadratic"], default="ring")
    co.set_defaults(func=cmd_corpus)
    return p


def main(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except InputError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT
    except Refused as exc:
        err.write(f"refused: {exc}\n")
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
