"""Bar, cobar and Koszul complexes, their bigraded homology, and Koszulity verdicts.

Every complex is built per internal degree and per object pair (s, t); all
of them are complexes of Z/m-modules in cochain form, so a homological
degree k sits at position -k.

Grading conventions in the tables: entry (n, i) has n = number of tensor
factors and i = internal degree taken positive, so the diagonal is n == i.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bigring import BigGradedRing, Pair, TensorChain, is_flat
from .exactla import (
    BoundedComplex,
    CoordModule,
    FinModule,
    Homology,
    LinearSolver,
    ModuleMap,
    Submodule,
    direct_sum,
    intersection,
    quotient,
    submodule_sum,
)
from .quadra import (
    ChainFactory,
    GradedCoring,
    QuadraticPresentation,
    UnsupportedModuleError,
    is_quadratic_up_to,
    quadratic_dual_coring,
    relation_images,
    relations_of,
)

METHODS = ("cobar-diagonal", "bar-diagonal", "koszul-complex", "lattice", "matrix")


class PreconditionError(ValueError):
    """A method's hypotheses (flatness, prime modulus, ...) do not hold."""


def compositions(n: int, k: int, cap: int | None = None) -> list[tuple[int, ...]]:
    """Ordered compositions of n into k positive parts, each at most cap."""
    out = []
    for cuts in itertools.combinations(range(1, n), k - 1):
        parts = tuple(b - a for a, b in zip((0,) + cuts, cuts + (n,)))
        if cap is None or max(parts) <= cap:
            out.append(parts)
    return out


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------


@dataclass
class BigradedHomologyTable:
    """Homology entries (n, i) per object pair, over the window i <= window."""

    kind: str
    window: int
    entries: dict[tuple[int, int], dict[Pair, FinModule]] = field(default_factory=dict)
    classes: dict[tuple[int, int], dict[Pair, Homology]] = field(default_factory=dict, repr=False)

    def total(self, n: int, i: int) -> FinModule | None:
        """Direct sum over object pairs; None when (n, i) is outside the window."""
        if i > self.window or (n, i) not in self.entries:
            return None
        m = None
        fs: tuple[int, ...] = ()
        for M in self.entries[(n, i)].values():
            m = M.modulus
            fs += M.invariant_factors
        if m is None:
            return None
        return quotient(fs, None, m)

    def nonzero(self) -> list[tuple[int, int, Pair, FinModule]]:
        out = []
        for (n, i), comps in sorted(self.entries.items()):
            for pr, M in sorted(comps.items()):
                if not M.is_zero:
                    out.append((n, i, pr, M))
        return out

    def off_diagonal(self) -> list[tuple[int, int, Pair, FinModule]]:
        return [e for e in self.nonzero() if e[0] != e[1]]

    def rows(self) -> list[tuple[int, int, str, str]]:
        """(n, i, invariant factors, flag) rows in a deterministic order."""
        out = []
        for (n, i), comps in sorted(self.entries.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            fs = []
            for pr in sorted(comps):
                M = comps[pr]
                if not M.is_zero:
                    fs.append(f"{pr[0]}->{pr[1]}: {M}" if len(pr[0]) else str(M))
            text = "; ".join(fs) if fs else "0"
            flag = "diagonal" if n == i else ("OFF-DIAGONAL" if fs else "off-diagonal")
            out.append((n, i, text, flag))
        return out


@dataclass
class KoszulVerdict:
    method: str
    checked_up_to: int
    koszul: bool
    failed_at: tuple[int | None, int] | None = None
    witness: object = None
    table: BigradedHomologyTable | None = None
    inconclusive: bool = False
    note: str = ""
    bounds: tuple[int, int, int] | None = None

    @property
    def label(self) -> str:
        if self.inconclusive:
            return "inconclusive"
        if self.koszul:
            if self.bounds is not None:
                return "koszul-up-to-bounds(m<={},n<={},size<={})".format(*self.bounds)
            return f"koszul-up-to-{self.checked_up_to}"
        n, i = self.failed_at if self.failed_at else (None, None)
        return f"failed-at({'-' if n is None else n},{i})"


# ---------------------------------------------------------------------------
# generic assembly of complexes from blocks
# ---------------------------------------------------------------------------


def _assemble(
    m: int,
    terms: dict[int, list[tuple[object, FinModule]]],
    block: callable,
) -> BoundedComplex:
    """Build a cochain complex from labelled summands and a block function.

    ``terms[pos]`` lists (label, module); ``block(pos, src_label, tgt_label)``
    returns the matrix of the component src -> tgt of d_pos or None.
    """
    mods = {}
    offs = {}
    for pos, summands in terms.items():
        M, off = direct_sum([s[1] for s in summands], m)
        mods[pos] = M
        offs[pos] = off
    diffs = {}
    for pos in terms:
        if pos + 1 not in terms:
            continue
        S, T = mods[pos], mods[pos + 1]
        mat = np.zeros((T.rank, S.rank), dtype=np.int64)
        for a, (la, Ma) in enumerate(terms[pos]):
            if not Ma.rank:
                continue
            for b, (lb, Mb) in enumerate(terms[pos + 1]):
                if not Mb.rank:
                    continue
                B = block(pos, la, lb)
                if B is None:
                    continue
                mat[offs[pos + 1][b] : offs[pos + 1][b + 1], offs[pos][a] : offs[pos][a + 1]] += B
        diffs[pos] = ModuleMap(S, T, mat)
    return BoundedComplex(m, mods, diffs)


def _table_from(kind: str, window: int, complexes: dict[tuple[int, Pair], BoundedComplex], sign: int) -> BigradedHomologyTable:
    """Homology of each complex; position p maps to tensor degree sign * p."""
    tab = BigradedHomologyTable(kind, window)
    for (i, pr), C in sorted(complexes.items()):
        for pos in C.positions:
            H = C.homology(pos)
            n = sign * pos
            tab.entries.setdefault((n, i), {})[pr] = H.module
            tab.classes.setdefault((n, i), {})[pr] = H
    return tab


# ---------------------------------------------------------------------------
# cobar complex
# ---------------------------------------------------------------------------


def cobar_complex(C: GradedCoring, d: int | None = None) -> dict[tuple[int, Pair], BoundedComplex]:
    """Reduced cobar complexes of C, keyed by (internal degree i >= 0, pair).

    In internal degree -i the term in cohomological degree k is the sum over
    compositions (j1, ..., jk) of i of C_{-j1} (x) ... (x) C_{-jk}; the
    differential is the alternating sum of comultiplications.
    """
    d = C.dmax if d is None else min(d, C.dmax)
    m = C.modulus
    out = {}
    for s, t in C.objects.pairs():
        R = C.base.comp(s, t)
        if R.rank:
            out[(0, (s, t))] = BoundedComplex(m, {0: R}, {})
    for i in range(1, d + 1):
        for s, t in C.objects.pairs():
            terms = {}
            subs = {}
            for k in range(1, i + 1):
                row = []
                for comp in compositions(i, k):
                    S = C.term(comp, s, t)
                    subs[comp] = S
                    row.append((comp, S.module))
                terms[k] = row
            if all(not M.rank for row in terms.values() for _, M in row):
                continue

            def block(k, src, tgt, subs=subs):
                if len(tgt) != len(src) + 1:
                    return None
                for p in range(len(src)):
                    if tgt[:p] == src[:p] and tgt[p + 2 :] == src[p + 1 :] and tgt[p] + tgt[p + 1] == src[p]:
                        c = subs[tgt].coordinates_many(subs[src].inclusion.matrix)
                        if c is None:
                            raise ValueError("cobar differential leaves its target term")
                        return (-1) ** p * c
                return None

            out[(i, (s, t))] = _assemble(m, terms, block)
    return out


def cobar_table(C: GradedCoring, d: int | None = None) -> BigradedHomologyTable:
    d = C.dmax if d is None else min(d, C.dmax)
    return _table_from("cobar", d, cobar_complex(C, d), 1)


# ---------------------------------------------------------------------------
# bar complex
# ---------------------------------------------------------------------------


def merge_matrix(A: BigGradedRing, src: Sequence[int], p: int, s: str, t: str) -> np.ndarray:
    """Multiply factors p and p+1 of the chain src (canonical coordinates)."""
    src = tuple(src)
    tgt = src[:p] + (src[p] + src[p + 1],) + src[p + 2 :]
    cs, ct = A.chain(src), A.chain(tgt)
    a, b = src[p], src[p + 1]

    def fn(key):
        path, gens = key
        T = A.tensor(a, b, path[p], path[p + 1], path[p + 2])
        col = T[:, gens[p], gens[p + 1]]
        for k in np.nonzero(col)[0]:
            yield (path[: p + 1] + path[p + 2 :], gens[:p] + (int(k),) + gens[p + 2 :]), int(col[k])

    return cs.naive_linear_map(ct, (s, t), (s, t), fn)


def bar_complex(A: BigGradedRing, d: int | None = None) -> dict[tuple[int, Pair], BoundedComplex]:
    """Reduced bar complexes R <- A+ <- A+ (x) A+ <- ... per internal degree and pair."""
    d = A.dmax if d is None else min(d, A.dmax)
    m = A.modulus
    out = {}
    for s, t in A.objects.pairs():
        R = A.base.comp(s, t)
        if R.rank:
            out[(0, (s, t))] = BoundedComplex(m, {0: R}, {})
    for i in range(1, d + 1):
        for s, t in A.objects.pairs():
            terms = {}
            for k in range(1, i + 1):
                terms[-k] = [(comp, A.chain(comp).component(s, t)) for comp in compositions(i, k, A.dmax)]
            if all(not M.rank for row in terms.values() for _, M in row):
                continue

            def block(pos, src, tgt, s=s, t=t):
                if len(tgt) != len(src) - 1:
                    return None
                for p in range(len(src) - 1):
                    if tgt == src[:p] + (src[p] + src[p + 1],) + src[p + 2 :]:
                        return (-1) ** p * merge_matrix(A, src, p, s, t)
                return None

            out[(i, (s, t))] = _assemble(m, terms, block)
    return out


def bar_table(A: BigGradedRing, d: int | None = None) -> BigradedHomologyTable:
    d = A.dmax if d is None else min(d, A.dmax)
    return _table_from("bar", d, bar_complex(A, d), -1)


# ---------------------------------------------------------------------------
# Koszul complexes
# ---------------------------------------------------------------------------


def check_duality(A: BigGradedRing, C: GradedCoring) -> list[str]:
    """Differences between C and the quadratic dual of A in degrees <= 2."""
    problems = []
    P = relations_of(A)
    for pr in A.objects.pairs():
        if A.comp(1, *pr) != C.component(1, *pr):
            problems.append(f"degree-one components differ at {pr}")
            continue
        if C.dmax < 2:
            continue
        mine = C.subs[2][pr]
        theirs = P.relations[pr]
        if mine.ambient != theirs.ambient:
            problems.append(f"relation ambients differ at {pr}")
        elif not (mine.contains_all(theirs.gens) and theirs.contains_all(mine.gens)):
            problems.append(f"relations differ at {pr}")
    return problems


def koszul_complex(
    A: BigGradedRing, C: GradedCoring, side: str = "left", d: int | None = None, check: bool = True
) -> dict[tuple[int, Pair], BoundedComplex]:
    """A (x)_R C (side="left") or C (x)_R A (side="right") per internal grading."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if check:
        bad = check_duality(A, C)
        if bad:
            raise ValueError("duality mismatch: " + "; ".join(bad))
    d = min(A.dmax, C.dmax) if d is None else min(d, A.dmax, C.dmax)
    m = A.modulus
    f = ChainFactory.of_ring(A)
    out = {}
    for N in range(1, d + 1):
        for s, t in A.objects.pairs():
            terms = {}
            subs = {}
            for j in range(0, N + 1):
                i = N - j
                a_part = [((i,), f.full((i,)))] if i else []
                c_part = [((1,) * j, C.gens(j))] if j else []
                pieces = a_part + c_part if side == "left" else c_part + a_part
                degs = tuple(x for p in pieces for x in p[0])
                amb = f.component(degs, s, t)
                G = f.embed(pieces, s, t) if amb.rank else np.zeros((0, 0), dtype=np.int64)
                S = Submodule(amb, G)
                subs[j] = (degs, S)
                terms.setdefault(-j, []).append((j, S.module))
            if all(not M.rank for row in terms.values() for _, M in row):
                continue

            def block(pos, src, tgt, subs=subs, s=s, t=t, N=N):
                if tgt != src - 1:
                    return None
                degs, S = subs[src]
                tdegs, T = subs[tgt]
                i = N - src
                if i == 0:
                    amb_map = np.eye(S.ambient.rank, dtype=np.int64)
                elif side == "left":
                    amb_map = merge_matrix(A, degs, 0, s, t)
                else:
                    amb_map = merge_matrix(A, degs, len(degs) - 2, s, t)
                imgs = amb_map @ S.inclusion.matrix % m
                c = T.coordinates_many(imgs)
                if c is None:
                    raise ValueError("Koszul differential leaves its target term")
                return c

            out[(N, (s, t))] = _assemble(m, terms, block)
    return out


def koszul_table(A: BigGradedRing, C: GradedCoring, side: str = "left", d: int | None = None, check: bool = True) -> BigradedHomologyTable:
    cx = koszul_complex(A, C, side, d, check)
    d = max((i for i, _ in cx), default=0)
    return _table_from(f"koszul-{side}", d, cx, -1)


# ---------------------------------------------------------------------------
# lattice distributivity
# ---------------------------------------------------------------------------

LATTICE_DIM_CAP = 256
LATTICE_SUBSPACE_CAP = 12


@dataclass
class DistributivityResult:
    distributive: bool
    basis: np.ndarray | None = None
    violation: tuple | None = None
    deficit: int = 0

    def __bool__(self) -> bool:
        return self.distributive


def _dim(S: Submodule) -> int:
    return S.module.rank


def lattice_is_distributive(
    V: FinModule,
    subspaces: Sequence[Submodule | np.ndarray],
    dim_cap: int = LATTICE_DIM_CAP,
    count_cap: int = LATTICE_SUBSPACE_CAP,
) -> DistributivityResult:
    """Decide distributivity of the lattice generated by subspaces of V over Z/p.

    For every subset S of generators let Y_S be their intersection (Y of the
    empty set is V) and V_S a complement in Y_S of the sum of the strictly
    smaller Y_T.  The lattice is distributive iff the dimensions of the V_S
    add up to dim V; the union of bases of the V_S is then a basis in which
    every generator is spanned by a subset.
    """
    p = V.modulus
    if not _is_prime(p) or not V.is_free:
        raise PreconditionError("prime field required")
    if V.rank > dim_cap or len(subspaces) > count_cap:
        raise PreconditionError(f"lattice too large: dim {V.rank}, {len(subspaces)} subspaces")
    X = [s if isinstance(s, Submodule) else Submodule(V, s) for s in subspaces]
    k = len(X)
    D = V.rank
    full = Submodule(V, np.eye(D, dtype=np.int64))
    Y: dict[frozenset, Submodule] = {frozenset(): full}
    order = sorted((frozenset(c) for r in range(1, k + 1) for c in itertools.combinations(range(k), r)), key=len)
    for S in order:
        i = max(S)
        Y[S] = intersection(Y[S - {i}], X[i]) if len(S) > 1 else X[i]
    basis_cols = []
    total = 0
    for S in sorted(Y, key=lambda s: -len(s)):
        bigger = [Y[S | {i}] for i in range(k) if i not in S]
        W = submodule_sum(bigger, V) if bigger else Submodule(V, np.zeros((D, 0), dtype=np.int64))
        dim_v = _dim(Y[S]) - _dim(W)
        total += dim_v
        if dim_v:
            basis_cols.append(_complement(W, Y[S], p))
    if total == D:
        B = np.concatenate(basis_cols, axis=1) if basis_cols else np.zeros((D, 0), dtype=np.int64)
        return DistributivityResult(True, basis=B)
    return DistributivityResult(False, violation=_find_violation(V, X), deficit=total - D)


def _complement(W: Submodule, Y: Submodule, p: int) -> np.ndarray:
    """Vectors of Y completing a basis of W to a basis of Y (prime field)."""
    chosen = W.inclusion.matrix
    rank = _dim(W)
    out = []
    for v in Y.inclusion.matrix.T:
        trial = np.concatenate([chosen, v.reshape(-1, 1)], axis=1)
        if Submodule(W.ambient, trial).module.rank > rank:
            chosen = trial
            rank += 1
            out.append(v)
    return np.stack(out, axis=1)


def _find_violation(V: FinModule, X: Sequence[Submodule], cap: int = 60):
    """Search the lattice closure of X for (A+B)^C != A^C + B^C."""
    elems: list[Submodule] = list(X)

    def key(S: Submodule):
        return S.inclusion.matrix.tobytes() + bytes(S.module.rank)

    def same(a: Submodule, b: Submodule) -> bool:
        return _dim(a) == _dim(b) and a.contains_all(b.gens)

    def add(S: Submodule) -> bool:
        if any(same(S, e) for e in elems):
            return False
        elems.append(S)
        return True

    frontier = True
    while frontier and len(elems) < cap:
        for a, b, c in itertools.permutations(range(len(elems)), 3):
            A, B, Cc = elems[a], elems[b], elems[c]
            lhs = intersection(submodule_sum([A, B]), Cc)
            rhs = submodule_sum([intersection(A, Cc), intersection(B, Cc)])
            if _dim(lhs) != _dim(rhs):
                return (a, b, c, A.inclusion.matrix, B.inclusion.matrix, Cc.inclusion.matrix)
        frontier = False
        n = len(elems)
        for a, b in itertools.combinations(range(n), 2):
            frontier |= add(submodule_sum([elems[a], elems[b]]))
            frontier |= add(intersection(elems[a], elems[b]))
            if len(elems) >= cap:
                break
    return None


def _is_prime(m: int) -> bool:
    return m >= 2 and all(m % q for q in range(2, int(m**0.5) + 1))


def lattice_check(P: QuadraticPresentation, d: int) -> tuple[bool, int | None, object]:
    """Distributivity of the relation lattices in A1^(x)n for 3 <= n <= d."""
    for n in range(3, d + 1):
        chain = P.power(n)
        for s, t in P.objects.pairs():
            amb = chain.component(s, t)
            if not amb.rank:
                continue
            subs = [Submodule(amb, relation_images(P, n, j, s, t)) for j in range(1, n)]
            res = lattice_is_distributive(amb, subs)
            if not res:
                return False, n, ((s, t), res)
    return True, None, None


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


def _first_off_diagonal(tab: BigradedHomologyTable):
    offs = tab.off_diagonal()
    if not offs:
        return None
    offs.sort(key=lambda e: (e[1], e[0]))
    n, i, pr, M = offs[0]
    H = tab.classes[(n, i)][pr]
    return (n, i), {"pair": pr, "module": M, "cycles": H.representatives()}


def _require_flat(A: BigGradedRing, d: int) -> None:
    if _is_prime(A.modulus) and A.base.is_diagonal:
        return
    if A.is_flat_over_base("right", d) or A.is_flat_over_base("left", d):
        return
    raise PreconditionError("flatness precondition violated: components of A are not flat over A_0")


def koszul_verdict(A: BigGradedRing, method: str, d: int | None = None, **kw) -> KoszulVerdict:
    """Koszulity of A up to internal degree d by the chosen criterion."""
    d = A.dmax if d is None else d
    if d > A.dmax:
        raise ValueError("degree window beyond truncation")
    if method == "bar-diagonal":
        tab = bar_table(A, d)
        off = _first_off_diagonal(tab)
        if off:
            return KoszulVerdict(method, d, False, off[0], off[1], tab)
        return KoszulVerdict(method, d, True, table=tab)
    if method == "cobar-diagonal":
        _require_flat(A, d)
        ok, deg = is_quadratic_up_to(A, d)
        if not ok:
            return KoszulVerdict(method, d, False, (None, deg), "not quadratic", note=f"not quadratic in degree {deg}")
        try:
            C = quadratic_dual_coring(relations_of(A), d)
        except UnsupportedModuleError as exc:
            raise PreconditionError(str(exc)) from exc
        tab = cobar_table(C, d)
        off = _first_off_diagonal(tab)
        if off:
            return KoszulVerdict(method, d, False, off[0], off[1], tab)
        return KoszulVerdict(method, d, True, table=tab)
    if method == "koszul-complex":
        _require_flat(A, d)
        try:
            C = quadratic_dual_coring(relations_of(A), d)
        except UnsupportedModuleError as exc:
            raise PreconditionError(str(exc)) from exc
        tab = koszul_table(A, C, kw.get("side", "left"), d)
        nz = [e for e in tab.nonzero()]
        if nz:
            nz.sort(key=lambda e: (e[1], e[0]))
            n, i, pr, M = nz[0]
            H = tab.classes[(n, i)][pr]
            return KoszulVerdict(method, d, False, (n, i), {"pair": pr, "module": M, "cycles": H.representatives()}, tab)
        return KoszulVerdict(method, d, True, table=tab)
    if method == "lattice":
        if not _is_prime(A.modulus):
            raise PreconditionError("prime field required")
        if not A.base.is_diagonal:
            raise PreconditionError("lattice method needs a diagonal base; restrict the base first")
        ok, deg = is_quadratic_up_to(A, d)
        if not ok:
            return KoszulVerdict(method, d, False, (None, deg), "not quadratic", note=f"not quadratic in degree {deg}")
        ok, n, cert = lattice_check(relations_of(A), d)
        if not ok:
            return KoszulVerdict(method, d, False, (None, n), cert, note=f"relation lattice in degree {n} not distributive")
        return KoszulVerdict(method, d, True)
    if method == "matrix":
        from .matrixcrit import matrix_koszulity_check

        return matrix_koszulity_check(A, **kw)
    raise ValueError(f"unknown method {method!r}")


def cobar_exactness_defects(C: GradedCoring, d: int | None = None) -> list[tuple[int, int]]:
    """(n, i) with i >= 3 and n in {1, 2} where the cobar complex of C is not exact.

    The intersection formula for C_{-n} is meant to make these vanish.
    """
    tab = cobar_table(C, d)
    out = []
    for (n, i), comps in tab.entries.items():
        if i >= 3 and n in (1, 2) and any(not M.is_zero for M in comps.values()):
            out.append((n, i))
    return sorted(out)
