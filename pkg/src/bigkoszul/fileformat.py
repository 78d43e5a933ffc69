"""Line-oriented text format for rings, quadratic presentations and categories.

See docs/format.md for the grammar.  Parsing returns a ``Document``; the
helpers turn it into a BigGradedRing, a QuadraticPresentation or a
category description.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .bigring import BigGradedRing, BigRing, Bimodule
from .exactla import FinModule
from .quadra import QuadraticPresentation


class FormatError(ValueError):
    """Malformed input; ``line`` is 1-based (0 when not tied to a line)."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass
class Document:
    header: str
    fields: dict[str, tuple[int, list[str]]] = field(default_factory=dict)
    comps: dict[tuple[int, str, str], tuple[int, ...]] = field(default_factory=dict)
    units: dict[str, list[int]] = field(default_factory=dict)
    mults: dict[tuple[int, int, str, str, str], list[tuple[int, int, int, int]]] = field(default_factory=dict)
    rels: dict[tuple[str, str], list[list[int]]] = field(default_factory=dict)
    objects_decl: list[tuple[str, list[int], int]] = field(default_factory=list)
    actions: list[tuple[str, int, list[list[int]], int]] = field(default_factory=list)

    def field(self, key: str, default: Any = None) -> list[str] | Any:
        return self.fields[key][1] if key in self.fields else default

    def int_field(self, key: str, default: int | None = None) -> int:
        if key not in self.fields:
            if default is None:
                raise FormatError(f"missing field {key!r}")
            return default
        line, vals = self.fields[key]
        if len(vals) != 1:
            raise FormatError(f"{key} takes one value", line)
        return _int(vals[0], line)


def _int(tok: str, line: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"expected an integer, got {tok!r}", line) from None


def _ints(toks: list[str], line: int) -> list[int]:
    return [_int(t, line) for t in toks]


def _split_colon(rest: list[str], line: int) -> tuple[list[str], list[str]]:
    if ":" not in rest:
        raise FormatError("missing ':'", line)
    k = rest.index(":")
    return rest[:k], rest[k + 1 :]


_HEADERS = ("ring v1", "category v1")


def parse(text: str) -> Document:
    """Parse a document; raises FormatError with the offending line."""
    doc: Document | None = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if doc is None:
            if line not in _HEADERS:
                raise FormatError(f"expected header 'ring v1' or 'category v1', got {line!r}", no)
            doc = Document(line)
            continue
        toks = line.replace(":", " : ").replace("->", " -> ").replace("=", " = ").replace(";", " ; ").split()
        key, rest = toks[0], toks[1:]
        if key == "comp":
            head, vals = _split_colon(rest, no)
            if len(head) != 3:
                raise FormatError("comp needs: degree source target", no)
            k = (_int(head[0], no), head[1], head[2])
            if k in doc.comps:
                raise FormatError(f"duplicate component {k}", no)
            doc.comps[k] = tuple(_ints(vals, no))
        elif key == "unit":
            head, vals = _split_colon(rest, no)
            if len(head) != 1:
                raise FormatError("unit needs one object", no)
            doc.units[head[0]] = _ints(vals, no)
        elif key == "mul":
            head, vals = _split_colon(rest, no)
            if len(head) != 5:
                raise FormatError("mul needs: n1 n2 s t r", no)
            if len(vals) != 6 or vals[2] != "->" or vals[4] != "=":
                raise FormatError("mul entry must read 'i j -> k = c'", no)
            k = (_int(head[0], no), _int(head[1], no), head[2], head[3], head[4])
            doc.mults.setdefault(k, []).append((_int(vals[0], no), _int(vals[1], no), _int(vals[3], no), _int(vals[5], no)))
        elif key == "rel":
            head, vals = _split_colon(rest, no)
            if len(head) != 2:
                raise FormatError("rel needs: source target", no)
            doc.rels.setdefault((head[0], head[1]), []).append(_ints(vals, no))
        elif key == "object":
            head, vals = _split_colon(rest, no)
            if len(head) != 1:
                raise FormatError("object needs a name", no)
            doc.objects_decl.append((head[0], _ints(vals, no), no))
        elif key == "action":
            head, vals = _split_colon(rest, no)
            if len(head) != 2:
                raise FormatError("action needs: object generator-index", no)
            rows = [[]]
            for v in vals:
                if v == ";":
                    rows.append([])
                else:
                    rows[-1].append(_int(v, no))
            doc.actions.append((head[0], _int(head[1], no), rows, no))
        elif key in ("name", "modulus", "objects", "degree", "kind", "variant", "q", "bound", "group", "character"):
            if key in doc.fields:
                raise FormatError(f"duplicate field {key!r}", no)
            doc.fields[key] = (no, rest)
        else:
            raise FormatError(f"unknown keyword {key!r}", no)
    if doc is None:
        raise FormatError("empty document")
    return doc


# ---------------------------------------------------------------------------
# Rings
# ---------------------------------------------------------------------------


def _objects(doc: Document) -> list[str]:
    objs = doc.field("objects")
    if not objs:
        raise FormatError("missing field 'objects'")
    if len(set(objs)) != len(objs):
        raise FormatError("duplicate object names", doc.fields["objects"][0])
    return objs


def _module(m: int, facs: tuple[int, ...]) -> FinModule:
    try:
        return FinModule(m, facs)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _check_pair(objs: list[str], *names: str) -> None:
    for s in names:
        if s not in objs:
            raise FormatError(f"unknown object {s!r}")


def _tensor(doc: Document, key, shape: tuple[int, int, int]) -> np.ndarray:
    T = np.zeros(shape, dtype=np.int64)
    for i, j, k, c in doc.mults.get(key, []):
        if not (0 <= i < shape[1] and 0 <= j < shape[2] and 0 <= k < shape[0]):
            raise FormatError(f"index out of range in mul {key}")
        T[k, i, j] += c
    return T


def _base(doc: Document, m: int, objs: list[str]) -> BigRing:
    comps0 = {(s, t): _module(m, f) for (n, s, t), f in doc.comps.items() if n == 0}
    for s, t in comps0:
        _check_pair(objs, s, t)
    zero = FinModule(m, ())

    def rk(a: str, b: str) -> int:
        return comps0.get((a, b), zero).rank

    mult = {}
    for s in objs:
        for t in objs:
            for r in objs:
                mult[(s, t, r)] = _tensor(doc, (0, 0, s, t, r), (rk(s, r), rk(s, t), rk(t, r)))
    for s in doc.units:
        _check_pair(objs, s)
        if len(doc.units[s]) != rk(s, s):
            raise FormatError(f"unit of {s} needs {rk(s, s)} coordinates")
    return BigRing(objs, m, comps0, mult, doc.units)


def to_ring(doc: Document) -> BigGradedRing:
    """A document of kind 'ring' as a BigGradedRing (validated)."""
    from .bigring import validate

    if doc.header != "ring v1":
        raise FormatError("not a ring document")
    m = doc.int_field("modulus")
    objs = _objects(doc)
    d = doc.int_field("degree")
    base = _base(doc, m, objs)
    comps = {}
    for (n, s, t), f in doc.comps.items():
        _check_pair(objs, s, t)
        if n >= 1:
            comps[(n, s, t)] = _module(m, f)
    zero = FinModule(m, ())
    mult = {}
    for key in doc.mults:
        n1, n2, s, t, r = key
        _check_pair(objs, s, t, r)
        if n1 == 0 and n2 == 0:
            continue
        if n1 + n2 > d:
            raise FormatError(f"mul {key} exceeds the degree")

        def rk(n, a, b):
            return base.comp(a, b).rank if n == 0 else comps.get((n, a, b), zero).rank

        mult[key] = _tensor(doc, key, (rk(n1 + n2, s, r), rk(n1, s, t), rk(n2, t, r)))
    name = " ".join(doc.field("name", []))
    A = BigGradedRing(base, d, comps, mult, name=name)
    problems = validate(A)
    if problems:
        raise FormatError("invalid ring: " + problems[0])
    return A


def to_quadratic_presentation(doc: Document) -> QuadraticPresentation:
    """A document of kind 'quadratic': degrees 0 and 1 plus relation vectors."""
    if doc.header != "ring v1":
        raise FormatError("not a ring document")
    m = doc.int_field("modulus")
    objs = _objects(doc)
    base = _base(doc, m, objs)
    comps = {}
    for (n, s, t), f in doc.comps.items():
        _check_pair(objs, s, t)
        if n == 1:
            comps[(s, t)] = _module(m, f)
        elif n > 1:
            raise FormatError("quadratic documents list components of degree 0 and 1 only")
    zero = FinModule(m, ())
    left, right = {}, {}
    for r in objs:
        for s in objs:
            for t in objs:
                K = comps.get((r, t), zero)
                left[(r, s, t)] = _tensor(doc, (0, 1, r, s, t), (K.rank, base.comp(r, s).rank, comps.get((s, t), zero).rank))
                right[(r, s, t)] = _tensor(doc, (1, 0, r, s, t), (K.rank, comps.get((r, s), zero).rank, base.comp(s, t).rank))
    A1 = Bimodule(base, base, comps, left, right)
    name = " ".join(doc.field("name", []))
    try:
        P = QuadraticPresentation(base, A1, {}, name)
        two = P.power(2)
        for pr, vecs in doc.rels.items():
            _check_pair(objs, *pr)
            for v in vecs:
                if len(v) != two.component(*pr).rank:
                    raise FormatError(f"relation for {pr} needs {two.component(*pr).rank} coordinates")
        return QuadraticPresentation.from_relation_vectors(base, A1, doc.rels, name)
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def load_ring(text: str, d: int | None = None) -> BigGradedRing:
    """Parse a ring or a quadratic presentation (closed up to degree d)."""
    from .quadra import quadratic_closure

    doc = parse(text)
    kind = " ".join(doc.field("kind", ["ring"]))
    if kind == "quadratic":
        P = to_quadratic_presentation(doc)
        top = d if d is not None else doc.int_field("degree", 4)
        A = quadratic_closure(P, top)
        A.name = P.name
        return A
    if kind != "ring":
        raise FormatError(f"unknown kind {kind!r}")
    A = to_ring(doc)
    if d is not None and d > A.dmax:
        raise FormatError(f"requested degree {d} beyond the ring's degree {A.dmax}")
    return A


def _mul_lines(key, T: np.ndarray) -> list[str]:
    n1, n2, s, t, r = key
    out = []
    for k, i, j in zip(*np.nonzero(T)):
        out.append(f"mul {n1} {n2} {s} {t} {r} : {i} {j} -> {k} = {int(T[k, i, j])}")
    out.sort(key=lambda x: [int(v) if v.isdigit() else v for v in x.split(":")[1].replace("->", " ").replace("=", " ").split()])
    return out


def _header(name: str, m: int, objs, d: int, kind: str) -> list[str]:
    lines = ["ring v1"]
    if name:
        lines.append(f"name {name}")
    lines += [f"modulus {m}", "objects " + " ".join(objs), f"degree {d}", f"kind {kind}"]
    return lines


def _base_lines(R: BigRing) -> list[str]:
    lines = []
    objs = list(R.objects)
    for s in objs:
        for t in objs:
            M = R.comp(s, t)
            if not M.is_zero:
                lines.append(f"comp 0 {s} {t} : " + " ".join(map(str, M.invariant_factors)))
    for s in objs:
        if R.comp(s, s).rank:
            lines.append(f"unit {s} : " + " ".join(str(int(x)) for x in R.units[s]))
    for s in objs:
        for t in objs:
            for r in objs:
                lines += _mul_lines((0, 0, s, t, r), R.tensor(s, t, r))
    return lines


def dump_ring(A: BigGradedRing) -> str:
    objs = list(A.objects)
    lines = _header(A.name, A.modulus, objs, A.dmax, "ring") + _base_lines(A.base)
    for n in range(1, A.dmax + 1):
        for s in objs:
            for t in objs:
                M = A.comp(n, s, t)
                if not M.is_zero:
                    lines.append(f"comp {n} {s} {t} : " + " ".join(map(str, M.invariant_factors)))
    for key in sorted(A.mult):
        lines += _mul_lines(key, A.mult[key])
    return "\n".join(lines) + "\n"


def dump_quadratic(P: QuadraticPresentation, d: int = 4) -> str:
    objs = list(P.objects)
    lines = _header(P.name, P.modulus, objs, d, "quadratic") + _base_lines(P.base)
    K = P.A1
    for s in objs:
        for t in objs:
            M = K.comp(s, t)
            if not M.is_zero:
                lines.append(f"comp 1 {s} {t} : " + " ".join(map(str, M.invariant_factors)))
    for r in objs:
        for s in objs:
            for t in objs:
                lines += _mul_lines((0, 1, r, s, t), K.left_tensor(r, s, t))
                lines += _mul_lines((1, 0, r, s, t), K.right_tensor(r, s, t))
    for pr, G in sorted(P.relation_gens().items()):
        for col in G.T:
            lines.append(f"rel {pr[0]} {pr[1]} : " + " ".join(str(int(x)) for x in col))
    return "\n".join(lines) + "\n"


def rings_equal(A: BigGradedRing, B: BigGradedRing) -> bool:
    """Same objects, components and structure constants."""
    if list(A.objects) != list(B.objects) or A.modulus != B.modulus or A.dmax != B.dmax:
        return False
    if A.base != B.base:
        return False
    if {k: v.invariant_factors for k, v in A.components.items()} != {k: v.invariant_factors for k, v in B.components.items()}:
        return False
    keys = set(A.mult) | set(B.mult)
    return all(np.array_equal(A.tensor(*k), B.tensor(*k)) for k in keys)


# ---------------------------------------------------------------------------
# Categories
# ---------------------------------------------------------------------------


def to_category(doc: Document):
    """('frobenius', FrobeniusCategorySpec) or ('filtered', (TwistSpec, objects))."""
    from .filtcat import FilteredGModule, FinGroup, FrobeniusCategorySpec, RepresentationError, TwistSpec

    if doc.header != "category v1":
        raise FormatError("not a category document")
    kind = " ".join(doc.field("kind", []))
    if kind == "frobenius":
        bound = doc.int_field("bound", 0) or None
        try:
            return "frobenius", FrobeniusCategorySpec(doc.int_field("variant"), doc.int_field("q"), bound)
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    if kind != "filtered":
        raise FormatError(f"unknown category kind {kind!r}")
    m = doc.int_field("modulus")
    g = doc.field("group")
    if not g:
        raise FormatError("missing field 'group'")
    line = doc.fields["group"][0]
    if g[0] == "cyclic" and len(g) == 2:
        G = FinGroup.cyclic(_int(g[1], line))
    elif g[0] == "product" and len(g) >= 2:
        G = FinGroup.cyclic(_int(g[1], line))
        for o in g[2:]:
            G = FinGroup.product(G, FinGroup.cyclic(_int(o, line)))
    else:
        raise FormatError("group must be 'cyclic n' or 'product n1 n2 ...'", line)
    char = doc.field("character")
    try:
        spec = TwistSpec(G, m, tuple(_ints(char, doc.fields["character"][0])) if char else None)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    actions: dict[str, dict[int, list[list[int]]]] = {}
    for name, k, rows, no in doc.actions:
        if not 0 <= k < len(G.generators):
            raise FormatError("generator index out of range", no)
        actions.setdefault(name, {})[k] = rows
    objs = {}
    for name, levels, no in doc.objects_decl:
        if name in objs:
            raise FormatError(f"duplicate object {name!r}", no)
        acts = None
        if name in actions:
            try:
                X0 = FilteredGModule(spec, levels)
                acts = [np.array(actions[name].get(k, X0.gen_matrices[k]), dtype=np.int64) for k in range(len(G.generators))]
            except (ValueError, RepresentationError) as exc:
                raise FormatError(str(exc), no) from None
        try:
            objs[name] = FilteredGModule(spec, levels, acts)
        except ValueError as exc:
            raise FormatError(str(exc), no) from None
    unknown = set(actions) - set(objs)
    if unknown:
        raise FormatError(f"action for undeclared object {sorted(unknown)[0]!r}")
    return "filtered", (spec, objs)
