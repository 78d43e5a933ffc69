"""Built-in examples: classical Koszul and non-Koszul rings, coalgebras, categories."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Mapping

import numpy as np

from .bigring import BigGradedRing, BigRing, Bimodule
from .exactla import FinModule
from .filtcat import (
    FilteredGModule,
    FinGroup,
    FrobeniusCategorySpec,
    GModule,
    TwistSpec,
    group_coalgebra,
    group_ext_ring,
)
from .quadra import QuadraticPresentation, quadratic_closure


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    """A named example with default parameters and expected verdicts.

    ``expected`` maps property names ("koszul", "quadratic") to booleans
    for the default parameters; tests recompute them instead of trusting
    them.  ``source`` says where the expectation comes from.
    """

    name: str
    kind: str
    builder: Callable[..., Any]
    defaults: Mapping[str, Any]
    description: str
    source: str
    expected: Mapping[str, bool] = field(default_factory=dict)

    def build(self, **params) -> Any:
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise CorpusError(f"unknown parameters for {self.name}: {sorted(unknown)}")
        return self.builder(**{**self.defaults, **params})


# ---------------------------------------------------------------------------
# Helpers for presentations over a diagonal base
# ---------------------------------------------------------------------------


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, int(p**0.5) + 1))


def _diagonal_a1(base: BigRing, comps: Mapping[tuple[str, str], FinModule]) -> Bimodule:
    left, right = {}, {}
    for (s, t), M in comps.items():
        k = M.rank
        left[(s, s, t)] = np.eye(k, dtype=np.int64).reshape(k, 1, k)
        right[(s, t, t)] = np.eye(k, dtype=np.int64).reshape(k, k, 1)
    return Bimodule(base, base, comps, left, right)


def presentation(
    m: int,
    objects: list[str],
    arrows: Mapping[tuple[str, str], FinModule | int],
    relations: Mapping[tuple[str, str], list[Mapping[tuple[tuple[str, ...], tuple[int, ...]], int]]],
    name: str = "",
) -> QuadraticPresentation:
    """A quadratic presentation over the diagonal base on ``objects``.

    ``arrows[(s, t)]`` is the degree-one component (a rank means a free
    module).  Each relation is a dict from naive keys (path, generator
    indices) of A1 (x) A1 to coefficients.
    """
    base = BigRing.diagonal(objects, m)
    comps = {pr: (FinModule.free(m, M) if isinstance(M, int) else M) for pr, M in arrows.items()}
    A1 = _diagonal_a1(base, {pr: M for pr, M in comps.items() if not M.is_zero})
    P = QuadraticPresentation(base, A1, {}, name)
    two = P.power(2)
    vecs: dict[tuple[str, str], list[np.ndarray]] = {}
    for pr, rels in relations.items():
        index = two.naive_index(*pr)
        for rel in rels:
            v = np.zeros(len(index), dtype=np.int64)
            for key, c in rel.items():
                v[index[key]] += c
            vecs.setdefault(pr, []).append(two.component(*pr).reduce(two.to_canon(*pr) @ v))
    return QuadraticPresentation.from_relation_vectors(base, A1, vecs, name)


def _one_object(m: int, g: int, rels: list[Mapping[tuple[int, int], int]], name: str) -> QuadraticPresentation:
    """Single object x, g generators; relations as {(i, j): c} meaning c x_i x_j."""
    path = ("x", "x", "x")
    conv = [{(path, ij): c for ij, c in r.items()} for r in rels]
    return presentation(m, ["x"], {("x", "x"): g}, {("x", "x"): conv}, name)


def _ring(P: QuadraticPresentation, d: int) -> BigGradedRing:
    A = quadratic_closure(P, d)
    A.name = P.name
    return A


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _check_m(m: int) -> None:
    if m < 2:
        raise CorpusError("modulus must be at least 2")


def exterior(gens: int = 2, p: int = 2, d: int = 5) -> BigGradedRing:
    """Exterior algebra: x_i x_i = 0 and x_i x_j + x_j x_i = 0."""
    _check_m(p)
    if not 1 <= gens <= 4:
        raise CorpusError("gens must be between 1 and 4")
    rels = [{(i, i): 1} for i in range(gens)]
    rels += [{(i, j): 1, (j, i): 1} for i, j in itertools.combinations(range(gens), 2)]
    return _ring(_one_object(p, gens, rels, f"exterior({gens}) over Z/{p}"), d)


def symmetric(gens: int = 2, p: int = 3, d: int = 5) -> BigGradedRing:
    """Polynomial ring: x_i x_j - x_j x_i = 0."""
    _check_m(p)
    if not 1 <= gens <= 3:
        raise CorpusError("gens must be between 1 and 3")
    rels = [{(i, j): 1, (j, i): -1} for i, j in itertools.combinations(range(gens), 2)]
    return _ring(_one_object(p, gens, rels, f"symmetric({gens}) over Z/{p}"), d)


def tensor(gens: int = 2, p: int = 2, d: int = 5) -> BigGradedRing:
    """Free associative algebra."""
    _check_m(p)
    if not 1 <= gens <= 2:
        raise CorpusError("gens must be 1 or 2")
    return _ring(_one_object(p, gens, [], f"tensor({gens}) over Z/{p}"), d)


def dual_numbers(p: int = 2, d: int = 5) -> BigGradedRing:
    _check_m(p)
    return _ring(_one_object(p, 1, [{(0, 0): 1}], f"dual numbers over Z/{p}"), d)


def truncated(rank: int = 1, m: int = 2, d: int = 5) -> BigGradedRing:
    """A_0 = Z/m, A_1 = (Z/m)^rank and A_n = 0 for n >= 2."""
    _check_m(m)
    if not 1 <= rank <= 3:
        raise CorpusError("rank must be between 1 and 3")
    rels = [{(i, j): 1} for i in range(rank) for j in range(rank)]
    return _ring(_one_object(m, rank, rels, f"truncated({rank}) over Z/{m}"), d)


def non_quadratic(p: int = 2, d: int = 5) -> BigGradedRing:
    """k[x]/(x^3): generated in degree one with a cubic relation."""
    _check_m(p)
    base = BigRing.diagonal(["x"], p)
    Z = FinModule.free(p, 1)
    comps = {(n, "x", "x"): Z for n in (1, 2)}
    one = np.ones((1, 1, 1), dtype=np.int64)
    mult = {(0, n, "x", "x", "x"): one for n in (1, 2)}
    mult.update({(n, 0, "x", "x", "x"): one for n in (1, 2)})
    mult[(1, 1, "x", "x", "x")] = one
    return BigGradedRing(base, d, comps, mult, name=f"k[x]/x^3 over Z/{p}")


def local_field_exterior(l: int = 3, d: int = 5) -> BigGradedRing:
    """Mod-l cohomology shape of a local field containing the l-th roots of unity."""
    if not _is_prime(l):
        raise CorpusError("l must be prime")
    A = exterior(2, l, d)
    A.name = f"local-field exterior over Z/{l}"
    return A


def _primitive_root(q: int) -> int:
    order = q - 1
    for g in range(2, q):
        x, k = g, 1
        while x != 1:
            x = x * g % q
            k += 1
        if k == order:
            return g
    return 1


def milnor_finite_field(q: int = 7, l: int = 3, d: int = 5) -> BigGradedRing:
    """Milnor K-theory of F_q modulo l as the quadratic ring on K_1 with Steinberg relations.

    K_1 = F_q^* / l is found from discrete logarithms to a primitive root.
    Every Steinberg symbol {a, 1 - a} becomes log(a) log(1 - a) x (x) x.
    """
    if not _is_prime(q) or not _is_prime(l):
        raise CorpusError("q and l must be primes")
    g = _primitive_root(q)
    logs = {}
    x = 1
    for k in range(q - 1):
        logs[x] = k
        x = x * g % q
    order = np.gcd(q - 1, l)
    K1 = FinModule(l, (int(order),) if order > 1 else ())
    rels = []
    if order > 1:
        for a in range(2, q):
            c = logs[a] * logs[(1 - a) % q] % order
            if c:
                rels.append({(("x", "x", "x"), (0, 0)): c})
    P = presentation(l, ["x"], {("x", "x"): K1}, {("x", "x"): rels}, f"Milnor K(F_{q})/{l}")
    return _ring(P, d)


def cyclic_extension(l: int = 2, d: int = 5) -> BigGradedRing:
    """Cohomology of G = Z/l with coefficients in Hom between k and k[G].

    Objects "k" and "kG"; the degree-zero part has ranks 1, 1, 1, l and
    positive degrees live only in the (k, k) corner.
    """
    if not _is_prime(l):
        raise CorpusError("l must be prime")
    if d > 6:
        raise CorpusError("degree window limited to 6")
    G = FinGroup.cyclic(l)
    mods = {"k": GModule.trivial(G, l), "kG": GModule.regular(G, l)}
    return group_ext_ring(G, mods, d, name=f"cyclic extension Z/{l}")


def path_algebra(p: int = 2, relation: bool = False, d: int = 5) -> BigGradedRing:
    """Quiver a -> b -> c; optionally the composite path is set to zero."""
    _check_m(p)
    rels = {("c", "a"): [{(("c", "b", "a"), (0, 0)): 1}]} if relation else {}
    P = presentation(p, ["a", "b", "c"], {("b", "a"): 1, ("c", "b"): 1}, rels, "path algebra a->b->c")
    return _ring(P, d)


def search_non_koszul(seed: int = 1, trials: int = 400, d: int = 4) -> BigGradedRing:
    """First random quadratic algebra over Z/2 whose cobar table is off-diagonal.

    Generators: 2 or 3; relation vectors drawn uniformly from numpy's
    default_rng(seed).
    """
    from .homcheck import koszul_verdict

    rng = np.random.default_rng(seed)
    for _ in range(trials):
        g = int(rng.integers(2, 4))
        r = int(rng.integers(1, g * g - 1))
        vecs = [rng.integers(0, 2, g * g) for _ in range(r)]
        rels = [{(i, j): int(v[i * g + j]) for i in range(g) for j in range(g) if v[i * g + j]} for v in vecs]
        P = _one_object(2, g, rels, f"non-koszul search seed {seed}")
        A = _ring(P, d)
        if not koszul_verdict(A, "cobar-diagonal", d).koszul:
            return A
    raise CorpusError("no non-Koszul example found")


def _golden(seed: int) -> str | None:
    try:
        return resources.files("bigkoszul").joinpath("data").joinpath(f"non_koszul_seed{seed}.ring").read_text()
    except (FileNotFoundError, OSError):
        return None


def non_koszul(seed: int = 1, d: int = 5, fresh: bool = False) -> BigGradedRing:
    """The frozen result of ``search_non_koszul(seed)``, extended to degree d."""
    from .fileformat import parse, to_quadratic_presentation

    text = None if fresh else _golden(seed)
    if text is None:
        A = search_non_koszul(seed)
        from .quadra import relations_of

        P = relations_of(A)
    else:
        P = to_quadratic_presentation(parse(text))
    return _ring(P, d)


def group_coalgebra_entry(group: str = "Z/2", p: int = 2):
    groups = {
        "Z/2": lambda: FinGroup.cyclic(2),
        "Z/3": lambda: FinGroup.cyclic(3),
        "Z/4": lambda: FinGroup.cyclic(4),
        "Z/2xZ/2": lambda: FinGroup.product(FinGroup.cyclic(2), FinGroup.cyclic(2)),
    }
    if group not in groups:
        raise CorpusError(f"group must be one of {sorted(groups)}")
    return group_coalgebra(groups[group](), p)


def filtered_cyclic(l: int = 3, levels: int = 3) -> tuple[TwistSpec, dict[str, FilteredGModule]]:
    """Trivial-twist filtered Z/l-modules over Z/l with generators E_0..E_{levels-1}."""
    if not _is_prime(l):
        raise CorpusError("l must be prime")
    spec = TwistSpec(FinGroup.cyclic(l), l)
    return spec, {f"E{i}": FilteredGModule.generator(spec, i) for i in range(levels)}


def frobenius(variant: int = 2, q: int = 2, bound: int | None = None) -> FrobeniusCategorySpec:
    return FrobeniusCategorySpec(variant, q, bound)


_ENTRIES = [
    CorpusEntry("exterior", "ring", exterior, {"gens": 2, "p": 2, "d": 5},
                "exterior algebra on gens generators", "classical", {"koszul": True, "quadratic": True}),
    CorpusEntry("symmetric", "ring", symmetric, {"gens": 2, "p": 3, "d": 5},
                "polynomial ring", "classical", {"koszul": True, "quadratic": True}),
    CorpusEntry("tensor", "ring", tensor, {"gens": 2, "p": 2, "d": 5},
                "free associative algebra", "classical", {"koszul": True, "quadratic": True}),
    CorpusEntry("dual-numbers", "ring", dual_numbers, {"p": 2, "d": 5},
                "k[x]/x^2", "classical", {"koszul": True, "quadratic": True}),
    CorpusEntry("truncated", "ring", truncated, {"rank": 1, "m": 2, "d": 5},
                "A_n = 0 for n >= 2", "rings with vanishing degree two are Koszul", {"koszul": True, "quadratic": True}),
    CorpusEntry("non-quadratic", "ring", non_quadratic, {"p": 2, "d": 5},
                "k[x]/x^3", "classical", {"koszul": False, "quadratic": False}),
    CorpusEntry("local-field-exterior", "ring", local_field_exterior, {"l": 3, "d": 5},
                "exterior algebra with two generators", "mod-l cohomology of a local field", {"koszul": True, "quadratic": True}),
    CorpusEntry("milnor-finite-field", "ring", milnor_finite_field, {"q": 7, "l": 3, "d": 5},
                "Milnor K-theory of a prime field mod l", "computed from discrete logarithms", {"koszul": True, "quadratic": True}),
    CorpusEntry("cyclic-extension", "ring", cyclic_extension, {"l": 2, "d": 5},
                "cohomology ring of Z/l with objects k and k[G]", "computed by group cochains", {"koszul": True, "quadratic": True}),
    CorpusEntry("cyclic-extension-3", "ring", cyclic_extension, {"l": 3, "d": 5},
                "same with l = 3; the Bockstein class is not generated in degree one",
                "computed by group cochains", {"koszul": False, "quadratic": False}),
    CorpusEntry("path-algebra", "ring", path_algebra, {"p": 2, "relation": False, "d": 5},
                "free path algebra of a -> b -> c", "classical", {"koszul": True, "quadratic": True}),
    CorpusEntry("path-algebra-zero", "ring", path_algebra, {"p": 2, "relation": True, "d": 5},
                "path algebra a -> b -> c with the composite set to zero", "classical", {"koszul": True, "quadratic": True}),
    CorpusEntry("non-koszul-search", "ring", non_koszul, {"seed": 1, "d": 5, "fresh": False},
                "first non-Koszul quadratic algebra found by seeded search", "seeded search, frozen",
                {"koszul": False, "quadratic": True}),
    CorpusEntry("coalgebra", "coalgebra", group_coalgebra_entry, {"group": "Z/2", "p": 2},
                "functions on a finite group", "classical", {}),
    CorpusEntry("filtered-cyclic", "category", filtered_cyclic, {"l": 3, "levels": 3},
                "filtered Z/l-modules with trivial twist", "constructed", {}),
    CorpusEntry("frobenius", "category", frobenius, {"variant": 2, "q": 2, "bound": None},
                "filtered groups with Frobenius data", "constructed", {}),
]

CATALOG: dict[str, CorpusEntry] = {e.name: e for e in _ENTRIES}


def list_entries() -> list[CorpusEntry]:
    return list(_ENTRIES)


def build(name: str, **params) -> Any:
    if name not in CATALOG:
        raise CorpusError(f"unknown corpus entry {name!r}")
    return CATALOG[name].build(**params)


def rings(max_modulus: int | None = None) -> list[tuple[str, BigGradedRing]]:
    """Every ring entry at its default parameters."""
    out = []
    for e in _ENTRIES:
        if e.kind != "ring":
            continue
        A = e.build()
        if max_modulus is None or A.modulus <= max_modulus:
            out.append((e.name, A))
    return out
