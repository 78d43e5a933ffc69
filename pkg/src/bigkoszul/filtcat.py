"""Exact categories of filtered modules over finite groups.

Objects are free Z/m-modules with a G-action and a finite decreasing
filtration whose graded pieces are rank-1 characters prescribed by a
``TwistSpec``.  Every object is stored in a normalized basis: each basis
vector carries a level, and the action matrix of a group element may have
a nonzero entry (a, b) with a != b only when level(a) > level(b).  The
diagonal entry at a vector of level i is the character value chi^i.

Ext^0 and Ext^1 are computed by finite linear algebra over Z/m:

* Ext^0(X, Y): filtration-preserving G-equivariant maps X -> Y.
* Ext^1(X, Y): H^1 of  C0_adm -> C1_strict -> C2_strict  where C1_strict
  holds functions G -> (maps X -> Y raising the level), C0_adm holds
  filtration-preserving maps whose coboundary raises the level, and the
  differentials are the group-cochain ones twisted by rho_Y and rho_X.

Products of Ext^1 classes are tested by solving the linear equation that
describes a three-step object T.  The module also contains the cobar
model for conilpotent coalgebras, group cohomology with a cup product,
diagonal Ext rings, and the three finite-field Frobenius categories.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .bigring import BigGradedRing, BigRing
from .exactla import (
    BoundedComplex,
    FinModule,
    Homology,
    LinearSolver,
    ModuleMap,
    Submodule,
    coords_in_rowspace,
    integer_invariant_factors,
    kernel,
    quotient,
    rref,
)


class RepresentationError(ValueError):
    """Matrices that do not define a representation of the group."""


class FilteredMapError(ValueError):
    """A map that is not filtration-preserving or not equivariant."""


class NotConilpotentError(ValueError):
    pass


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, math.isqrt(p) + 1))


# ---------------------------------------------------------------------------
# Groups and representations
# ---------------------------------------------------------------------------


class FinGroup:
    """A finite group given by its multiplication table.

    Elements are 0..n-1 and 0 must be the identity.  ``generators`` is a
    list of elements that generate the group.
    """

    def __init__(self, table, generators: Sequence[int], name: str = ""):
        T = np.asarray(table, dtype=np.int64)
        n = T.shape[0] if T.ndim == 2 else 0
        if n == 0 or T.shape != (n, n):
            raise ValueError("multiplication table must be a nonempty square array")
        ar = np.arange(n)
        if T.min() < 0 or T.max() >= n:
            raise ValueError("table entries out of range")
        if not (T[0] == ar).all() or not (T[:, 0] == ar).all():
            raise ValueError("element 0 must be the identity")
        for row in T:
            if len(set(row.tolist())) != n:
                raise ValueError("table rows must be permutations")
        for col in T.T:
            if len(set(col.tolist())) != n:
                raise ValueError("table columns must be permutations")
        left = T[T[:, :, None], ar[None, None, :]]
        right = T[ar[:, None, None], T[None, :, :]]
        if not (left == right).all():
            raise ValueError("multiplication is not associative")
        self.table = T
        self.order = n
        self.generators = tuple(int(g) for g in generators)
        self.name = name or f"G{n}"
        self.inverse = np.array([int(np.flatnonzero(T[a] == 0)[0]) for a in range(n)], dtype=np.int64)
        # BFS tree: element -> (parent, generator) with element = parent * generator
        self._tree: list[tuple[int, int, int]] = []
        seen = {0}
        queue = deque([0])
        while queue:
            a = queue.popleft()
            for k, s in enumerate(self.generators):
                b = int(T[a, s])
                if b not in seen:
                    seen.add(b)
                    self._tree.append((b, a, k))
                    queue.append(b)
        if len(seen) != n:
            raise ValueError("generators do not generate the group")

    @classmethod
    def cyclic(cls, n: int) -> FinGroup:
        ar = np.arange(n)
        return cls((ar[:, None] + ar[None, :]) % n, [1] if n > 1 else [], name=f"Z/{n}")

    @classmethod
    def trivial(cls) -> FinGroup:
        return cls.cyclic(1)

    @classmethod
    def product(cls, G: FinGroup, H: FinGroup) -> FinGroup:
        n, k = G.order, H.order
        T = np.zeros((n * k, n * k), dtype=np.int64)
        for a, b, c, d in itertools.product(range(n), range(k), range(n), range(k)):
            T[a * k + b, c * k + d] = G.table[a, c] * k + H.table[b, d]
        gens = [g * k for g in G.generators] + list(H.generators)
        return cls(T, gens, name=f"{G.name}x{H.name}")

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def inv(self, a: int) -> int:
        return int(self.inverse[a])

    @property
    def elements(self) -> range:
        return range(self.order)

    @property
    def tree(self) -> list[tuple[int, int, int]]:
        return self._tree

    def __repr__(self) -> str:
        return f"FinGroup({self.name})"


def _extend_action(G: FinGroup, gen_mats: Sequence[np.ndarray], m: int, rank: int) -> list[np.ndarray]:
    mats: list[np.ndarray | None] = [None] * G.order
    mats[0] = np.eye(rank, dtype=np.int64) % max(m, 1)
    for b, a, k in G.tree:
        mats[b] = mats[a] @ gen_mats[k] % m
    return mats  # type: ignore[return-value]


def _is_representation(G: FinGroup, mats: Sequence[np.ndarray], m: int) -> bool:
    M = np.stack(mats)
    prod = np.einsum("aij,bjk->abik", M, M) % m
    return bool((prod == M[G.table]).all())


class GModule:
    """The free module (Z/m)^rank with a left G-action.

    ``action`` lists one matrix per generator of the group; matrices act
    on column vectors.  The action of every element is derived along a
    spanning tree and checked against the multiplication table.
    """

    def __init__(self, group: FinGroup, modulus: int, rank: int, action: Sequence):
        self.group = group
        self.modulus = modulus
        self.rank = rank
        if len(action) != len(group.generators):
            raise RepresentationError("need one matrix per generator")
        gens = [np.asarray(a, dtype=np.int64).reshape(rank, rank) % modulus for a in action]
        self.gen_matrices = gens
        self.matrices = _extend_action(group, gens, modulus, rank)
        if not _is_representation(group, self.matrices, modulus):
            raise RepresentationError("action does not respect the multiplication table")

    @property
    def underlying(self) -> FinModule:
        return FinModule.free(self.modulus, self.rank)

    @property
    def action(self) -> list[ModuleMap]:
        M = self.underlying
        return [ModuleMap(M, M, a) for a in self.gen_matrices]

    def rho(self, g: int) -> np.ndarray:
        return self.matrices[g]

    @classmethod
    def trivial(cls, group: FinGroup, modulus: int, rank: int = 1) -> GModule:
        I = np.eye(rank, dtype=np.int64)
        return cls(group, modulus, rank, [I] * len(group.generators))

    @classmethod
    def character(cls, group: FinGroup, modulus: int, values: Sequence[int]) -> GModule:
        return cls(group, modulus, 1, [[[v]] for v in values])

    @classmethod
    def regular(cls, group: FinGroup, modulus: int) -> GModule:
        n = group.order
        mats = []
        for s in group.generators:
            P = np.zeros((n, n), dtype=np.int64)
            for h in range(n):
                P[group.mul(s, h), h] = 1
            mats.append(P)
        return cls(group, modulus, n, mats)

    def hom(self, source: GModule) -> GModule:
        """Hom(source, self) with g.f = rho(g) f rho_source(g)^-1, row-major."""
        mats = [np.kron(self.rho(s), source.rho(self.group.inv(s)).T) for s in self.group.generators]
        return GModule(self.group, self.modulus, self.rank * source.rank, mats)

    def invariants(self) -> Submodule:
        M = self.underlying
        if not self.group.generators:
            return Submodule(M, np.eye(self.rank, dtype=np.int64))
        I = np.eye(self.rank, dtype=np.int64)
        D = np.concatenate([a - I for a in self.gen_matrices], axis=0) % self.modulus
        return kernel(ModuleMap(M, FinModule.free(self.modulus, D.shape[0]), D))


# ---------------------------------------------------------------------------
# Filtered objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwistSpec:
    """Graded pieces allowed at each level: the level-th power of a character.

    ``character`` gives the value of the character on each generator of
    the group (units mod m); None means the trivial character.
    """

    group: FinGroup
    modulus: int
    character: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.modulus < 2:
            raise ValueError("modulus must be at least 2")
        if self.character is not None:
            vals = tuple(int(v) % self.modulus for v in self.character)
            if len(vals) != len(self.group.generators):
                raise ValueError("one character value per generator required")
            if any(math.gcd(v, self.modulus) != 1 for v in vals):
                raise ValueError("character values must be units")
            object.__setattr__(self, "character", vals)
            GModule.character(self.group, self.modulus, vals)

    def values(self, level: int) -> tuple[int, ...]:
        if self.character is None:
            return (1,) * len(self.group.generators)
        return tuple(pow(v, level, self.modulus) for v in self.character)

    def piece(self, level: int) -> GModule:
        return GModule.character(self.group, self.modulus, self.values(level))


class FilteredGModule:
    """A filtered G-module in normalized form.

    ``levels[a]`` is the filtration level of basis vector a; F^k is spanned
    by the vectors of level >= k and gr^k by those of level k.  ``action``
    gives one matrix per generator (default: the direct sum of the pieces).
    """

    def __init__(self, spec: TwistSpec, levels: Sequence[int], action: Sequence | None = None):
        self.spec = spec
        self.levels = tuple(int(l) for l in levels)
        n = len(self.levels)
        G, m = spec.group, spec.modulus
        if action is None:
            action = []
            for k in range(len(G.generators)):
                action.append(np.diag([spec.values(l)[k] for l in self.levels]).reshape(n, n))
        gens = [np.asarray(a, dtype=np.int64).reshape(n, n) % m for a in action]
        lv = np.array(self.levels, dtype=np.int64).reshape(n)
        allowed = lv[:, None] > lv[None, :]
        for k, a in enumerate(gens):
            diag = np.array([spec.values(l)[k] for l in self.levels], dtype=np.int64).reshape(n)
            if (np.diag(a) != diag % m).any():
                raise RepresentationError("graded pieces do not match the twist data")
            off = a.copy()
            np.fill_diagonal(off, 0)
            if (off[~allowed] != 0).any():
                raise RepresentationError("action does not preserve the filtration or splits gr")
        self.module = GModule(G, m, n, gens)

    @classmethod
    def generator(cls, spec: TwistSpec, level: int, copies: int = 1) -> FilteredGModule:
        return cls(spec, [level] * copies)

    @property
    def rank(self) -> int:
        return len(self.levels)

    @property
    def modulus(self) -> int:
        return self.spec.modulus

    @property
    def group(self) -> FinGroup:
        return self.spec.group

    @property
    def gen_matrices(self) -> list[np.ndarray]:
        return self.module.gen_matrices

    def rho(self, g: int) -> np.ndarray:
        return self.module.rho(g)

    def graded_rank(self, k: int) -> int:
        return sum(1 for l in self.levels if l == k)

    def filtration(self, k: int) -> Submodule:
        idx = [a for a, l in enumerate(self.levels) if l >= k]
        return Submodule(self.module.underlying, np.eye(self.rank, dtype=np.int64)[:, idx])

    def twist(self, k: int) -> FilteredGModule:
        vals = self.spec.values(k)
        mats = [a * v % self.modulus for a, v in zip(self.gen_matrices, vals)]
        return FilteredGModule(self.spec, [l + k for l in self.levels], mats)

    def truncation(self, k: int) -> tuple[FilteredGModule, np.ndarray, FilteredGModule, np.ndarray]:
        """F^k N, its inclusion, N/F^k N and the projection."""
        hi = [a for a, l in enumerate(self.levels) if l >= k]
        lo = [a for a, l in enumerate(self.levels) if l < k]
        I = np.eye(self.rank, dtype=np.int64)
        sub = FilteredGModule(self.spec, [self.levels[a] for a in hi], [g[np.ix_(hi, hi)] for g in self.gen_matrices])
        quo = FilteredGModule(self.spec, [self.levels[a] for a in lo], [g[np.ix_(lo, lo)] for g in self.gen_matrices])
        return sub, I[:, hi], quo, I[lo, :]

    def __repr__(self) -> str:
        return f"FilteredGModule(levels={list(self.levels)})"


def direct_sum(*objs: FilteredGModule) -> FilteredGModule:
    if not objs:
        raise ValueError("empty direct sum")
    spec = objs[0].spec
    levels = [l for X in objs for l in X.levels]
    n = len(levels)
    mats = []
    for k in range(len(spec.group.generators)):
        M = np.zeros((n, n), dtype=np.int64)
        off = 0
        for X in objs:
            M[off : off + X.rank, off : off + X.rank] = X.gen_matrices[k]
            off += X.rank
        mats.append(M)
    return FilteredGModule(spec, levels, mats)


def _positions(X: FilteredGModule, Y: FilteredGModule, strict: bool) -> list[tuple[int, int]]:
    return [
        (a, b)
        for a in range(Y.rank)
        for b in range(X.rank)
        if (Y.levels[a] > X.levels[b] if strict else Y.levels[a] >= X.levels[b])
    ]


def check_map(X: FilteredGModule, Y: FilteredGModule, f) -> np.ndarray:
    """Validate f: X -> Y (shape Y.rank x X.rank); returns it reduced."""
    m = X.modulus
    f = np.asarray(f, dtype=np.int64).reshape(Y.rank, X.rank) % m
    ly = np.array(Y.levels).reshape(-1, 1)
    lx = np.array(X.levels).reshape(1, -1)
    if (f[ly < lx] != 0).any():
        raise FilteredMapError("map does not preserve the filtration")
    for a, b in zip(Y.gen_matrices, X.gen_matrices):
        if ((a @ f - f @ b) % m).any():
            raise FilteredMapError("map is not equivariant")
    return f


def _graded_block(f: np.ndarray, X: FilteredGModule, Y: FilteredGModule, k: int) -> np.ndarray:
    rows = [a for a, l in enumerate(Y.levels) if l == k]
    cols = [b for b, l in enumerate(X.levels) if l == k]
    return f[np.ix_(rows, cols)]


def _short_exact(f: np.ndarray, g: np.ndarray, m: int) -> bool:
    a, b = f.shape[1], f.shape[0]
    c = g.shape[0]
    A, B, C = FinModule.free(m, a), FinModule.free(m, b), FinModule.free(m, c)
    fm, gm = ModuleMap(A, B, f.reshape(b, a)), ModuleMap(B, C, g.reshape(c, b))
    if not kernel(fm).module.is_zero:
        return False
    if not Submodule(C, g.reshape(c, b)).contains_all(np.eye(c, dtype=np.int64)):
        return False
    im = Submodule(B, f.reshape(b, a))
    return im.contains_all(kernel(gm).gens) and kernel(gm).contains_all(f.reshape(b, a))


def is_admissible_triple(X1: FilteredGModule, X: FilteredGModule, X2: FilteredGModule, f, g) -> bool:
    """True iff X1 -f-> X -g-> X2 is exact on every graded piece.

    Raises FilteredMapError when f or g is not a morphism.
    """
    m = X.modulus
    f = check_map(X1, X, f)
    g = check_map(X, X2, g)
    if ((g @ f) % m).any():
        return False
    levels = set(X1.levels) | set(X.levels) | set(X2.levels)
    return all(
        _short_exact(_graded_block(f, X1, X, k), _graded_block(g, X, X2, k), m) for k in sorted(levels)
    )


# ---------------------------------------------------------------------------
# Ext^0 and Ext^1
# ---------------------------------------------------------------------------


def _selection(pos: list[tuple[int, int]], ny: int, nx: int) -> np.ndarray:
    E = np.zeros((ny * nx, len(pos)), dtype=np.int64)
    for c, (a, b) in enumerate(pos):
        E[a * nx + b, c] = 1
    return E


def _delta_full(X: FilteredGModule, Y: FilteredGModule, g: int) -> np.ndarray:
    """vec(F) -> vec(rho_Y(g) F - F rho_X(g)) in row-major coordinates."""
    ny, nx = Y.rank, X.rank
    return np.kron(Y.rho(g), np.eye(nx, dtype=np.int64)) - np.kron(np.eye(ny, dtype=np.int64), X.rho(g).T)


@dataclass
class HomGroup:
    """Filtration-preserving equivariant maps X -> Y."""

    source: FilteredGModule
    target: FilteredGModule
    positions: list[tuple[int, int]]
    sub: Submodule

    @property
    def module(self) -> FinModule:
        return self.sub.module

    def matrix(self, h) -> np.ndarray:
        v = self.sub.inclusion(np.asarray(h, dtype=np.int64))
        F = np.zeros((self.target.rank, self.source.rank), dtype=np.int64)
        for c, (a, b) in enumerate(self.positions):
            F[a, b] = v[c]
        return F % self.source.modulus

    def coordinates(self, F) -> np.ndarray:
        F = np.asarray(F, dtype=np.int64).reshape(self.target.rank, self.source.rank)
        v = np.array([F[a, b] for a, b in self.positions], dtype=np.int64)
        c = self.sub.coordinates(v)
        if c is None:
            raise FilteredMapError("not a morphism")
        return c


def hom_group(X: FilteredGModule, Y: FilteredGModule) -> HomGroup:
    m = X.modulus
    pos = _positions(X, Y, strict=False)
    C0 = FinModule.free(m, len(pos))
    E = _selection(pos, Y.rank, X.rank)
    rows = [_delta_full(X, Y, s) @ E for s in X.group.generators]
    if rows and len(pos):
        D = np.concatenate(rows, axis=0) % m
        sub = kernel(ModuleMap(C0, FinModule.free(m, D.shape[0]), D))
    else:
        sub = Submodule(C0, np.eye(len(pos), dtype=np.int64))
    return HomGroup(X, Y, pos, sub)


def ext0(X: FilteredGModule, Y: FilteredGModule) -> FinModule:
    """Filtration-preserving G-equivariant maps X -> Y."""
    return hom_group(X, Y).module


@dataclass
class Ext1Group:
    """Ext^1(X, Y) with cocycle representatives and middle terms."""

    source: FilteredGModule
    target: FilteredGModule
    strict: list[tuple[int, int]]
    complex: BoundedComplex
    H: Homology

    @property
    def module(self) -> FinModule:
        return self.H.module

    @property
    def group(self) -> FinGroup:
        return self.source.group

    def _unpack(self, v) -> np.ndarray:
        G = self.group.order
        ny, nx = self.target.rank, self.source.rank
        c = np.zeros((G, ny, nx), dtype=np.int64)
        v = np.asarray(v, dtype=np.int64).reshape(G, len(self.strict))
        for k, (a, b) in enumerate(self.strict):
            c[:, a, b] = v[:, k]
        return c % self.source.modulus

    def pack(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=np.int64)
        return np.stack([c[:, a, b] for a, b in self.strict], axis=1).reshape(-1) % self.source.modulus

    def cocycle(self, h) -> np.ndarray:
        """Cocycle (|G| x Y.rank x X.rank) representing the class h."""
        return self._unpack(self.H.lift(h))

    def class_of(self, c) -> np.ndarray:
        return self.H.project(self.pack(c))

    def element(self, h) -> Ext1Class:
        return Ext1Class(self, self.module.reduce(np.asarray(h, dtype=np.int64)))

    def realize(self, h) -> FilteredGModule:
        return middle_term(self.source, self.target, self.cocycle(h))


@dataclass
class Ext1Class:
    group: Ext1Group
    coords: np.ndarray

    def cocycle(self) -> np.ndarray:
        return self.group.cocycle(self.coords)

    @property
    def is_zero(self) -> bool:
        return not self.coords.any()


def middle_term(X: FilteredGModule, Y: FilteredGModule, c) -> FilteredGModule:
    """The object Y + X with action [[rho_Y, c], [0, rho_X]]."""
    c = np.asarray(c, dtype=np.int64)
    mats = []
    for s, (a, b) in zip(X.group.generators, zip(Y.gen_matrices, X.gen_matrices)):
        top = np.concatenate([a, c[s]], axis=1)
        bot = np.concatenate([np.zeros((X.rank, Y.rank), dtype=np.int64), b], axis=1)
        mats.append(np.concatenate([top, bot], axis=0))
    return FilteredGModule(X.spec, list(Y.levels) + list(X.levels), mats)


def _delta1(X: FilteredGModule, Y: FilteredGModule, pos: list[tuple[int, int]]) -> np.ndarray:
    """C1 -> C2 on the given positions: (g,h) -> rho_Y(g)c(h) - c(gh) + c(g)rho_X(h)."""
    G = X.group
    n, k = G.order, len(pos)
    ny, nx = Y.rank, X.rank
    E = _selection(pos, ny, nx)
    L = [E.T @ np.kron(Y.rho(g), np.eye(nx, dtype=np.int64)) @ E for g in G.elements]
    R = [E.T @ np.kron(np.eye(ny, dtype=np.int64), X.rho(h).T) @ E for h in G.elements]
    D = np.zeros((n * n * k, n * k), dtype=np.int64)
    I = np.eye(k, dtype=np.int64)
    for g in G.elements:
        for h in G.elements:
            r = (g * n + h) * k
            D[r : r + k, h * k : h * k + k] += L[g]
            gh = G.mul(g, h)
            D[r : r + k, gh * k : gh * k + k] -= I
            D[r : r + k, g * k : g * k + k] += R[h]
    return D % X.modulus


def ext1(X: FilteredGModule, Y: FilteredGModule) -> Ext1Group:
    """Classes of extensions 0 -> Y -> E -> X -> 0 with graded-split E."""
    m = X.modulus
    G = X.group
    pos = _positions(X, Y, strict=False)
    strict = _positions(X, Y, strict=True)
    eq = [i for i, (a, b) in enumerate(pos) if Y.levels[a] == X.levels[b]]
    ny, nx = Y.rank, X.rank
    E0 = _selection(pos, ny, nx)
    full_idx = [a * nx + b for a, b in strict]
    eq_idx = [pos[i][0] * nx + pos[i][1] for i in eq]
    C0 = FinModule.free(m, len(pos))
    gen_rows = [(_delta_full(X, Y, s) @ E0)[eq_idx] for s in G.generators]
    if gen_rows and eq_idx and len(pos):
        D = np.concatenate(gen_rows, axis=0) % m
        adm = kernel(ModuleMap(C0, FinModule.free(m, D.shape[0]), D))
    else:
        adm = Submodule(C0, np.eye(len(pos), dtype=np.int64))
    k = len(strict)
    C1 = FinModule.free(m, G.order * k)
    C2 = FinModule.free(m, G.order * G.order * k)
    blocks = [(_delta_full(X, Y, g) @ E0)[full_idx] for g in G.elements]
    D0 = np.concatenate(blocks, axis=0) % m if k else np.zeros((0, len(pos)), dtype=np.int64)
    d0 = ModuleMap(adm.module, C1, (D0 @ adm.inclusion.matrix) % m if len(pos) else np.zeros((C1.rank, 0), dtype=np.int64))
    d1 = ModuleMap(C1, C2, _delta1(X, Y, strict))
    cx = BoundedComplex(m, {0: adm.module, 1: C1, 2: C2}, {0: d0, 1: d1})
    return Ext1Group(X, Y, strict, cx, cx.homology(1))


def baer_sum(X: FilteredGModule, Y: FilteredGModule, E1: FilteredGModule, E2: FilteredGModule) -> FilteredGModule:
    """Baer sum of two extensions given as middle terms in normalized form.

    Pulls back E1 + E2 along the diagonal of X and pushes out along the
    sum map Y + Y -> Y.
    """
    ny, nx = Y.rank, X.rank
    n = ny + nx
    S = direct_sum(E1, E2)
    # pullback: basis (y1, y2, x) -> (y1, x, y2, x) inside E1 + E2
    J = np.zeros((2 * n, 2 * ny + nx), dtype=np.int64)
    J[:ny, :ny] = np.eye(ny, dtype=np.int64)
    J[ny:n, 2 * ny :] = np.eye(nx, dtype=np.int64)
    J[n : n + ny, ny : 2 * ny] = np.eye(ny, dtype=np.int64)
    J[n + ny :, 2 * ny :] = np.eye(nx, dtype=np.int64)
    Lft = J.T.copy()
    Lft[2 * ny :, n + ny :] = 0
    # pushout along (y1, y2, x) -> (y1 + y2, x), with section (y, x) -> (y, 0, x)
    Q = np.zeros((n, 2 * ny + nx), dtype=np.int64)
    Q[:ny, :ny] = np.eye(ny, dtype=np.int64)
    Q[:ny, ny : 2 * ny] = np.eye(ny, dtype=np.int64)
    Q[ny:, 2 * ny :] = np.eye(nx, dtype=np.int64)
    Sec = np.zeros((2 * ny + nx, n), dtype=np.int64)
    Sec[:ny, :ny] = np.eye(ny, dtype=np.int64)
    Sec[2 * ny :, ny:] = np.eye(nx, dtype=np.int64)
    m = X.modulus
    mats = [(Q @ Lft @ a @ J @ Sec) % m for a in S.gen_matrices]
    return FilteredGModule(X.spec, list(Y.levels) + list(X.levels), mats)


def extension_cocycle(X: FilteredGModule, Y: FilteredGModule, E: FilteredGModule) -> np.ndarray:
    """Top-right block of a normalized middle term, for every group element."""
    return np.stack([E.rho(g)[: Y.rank, Y.rank :] for g in X.group.elements])


# ---------------------------------------------------------------------------
# Brute-force oracle for Ext^1
# ---------------------------------------------------------------------------


@dataclass
class EnumeratedExtensions:
    """All normalized middle terms, grouped into isomorphism classes."""

    strict: list[tuple[int, int]]
    class_of: dict[tuple[int, ...], int]
    count: int

    def classify(self, c_gens) -> int:
        return self.class_of[tuple(int(v) for v in np.asarray(c_gens).reshape(-1))]


def enumerate_extensions(X: FilteredGModule, Y: FilteredGModule, budget: int = 200_000) -> EnumeratedExtensions:
    """Enumerate every action [[rho_Y, c], [0, rho_X]] and identify isomorphic ones.

    Two middle terms are isomorphic as extensions when they are conjugate
    by [[1, h], [0, 1]] for a filtration-preserving h.  ``c`` is recorded
    on the generators only.
    """
    m = X.modulus
    G = X.group
    strict = _positions(X, Y, strict=True)
    pos = _positions(X, Y, strict=False)
    ngen = len(G.generators)
    k = len(strict)
    if m ** (ngen * k) > budget or m ** len(pos) > budget:
        raise ValueError("enumeration exceeds budget")
    ny, nx = Y.rank, X.rank
    valid: dict[tuple[int, ...], int] = {}
    for vals in itertools.product(range(m), repeat=ngen * k):
        c = np.zeros((ngen, ny, nx), dtype=np.int64)
        arr = np.array(vals, dtype=np.int64).reshape(ngen, k)
        for j, (a, b) in enumerate(strict):
            c[:, a, b] = arr[:, j]
        mats = []
        for s in range(ngen):
            top = np.concatenate([Y.gen_matrices[s], c[s]], axis=1)
            bot = np.concatenate([np.zeros((nx, ny), dtype=np.int64), X.gen_matrices[s]], axis=1)
            mats.append(np.concatenate([top, bot], axis=0))
        full = _extend_action(G, mats, m, nx + ny)
        if _is_representation(G, full, m):
            valid[vals] = len(valid)
    parent = list(range(len(valid)))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    shifts = []
    for hv in itertools.product(range(m), repeat=len(pos)):
        h = np.zeros((ny, nx), dtype=np.int64)
        for j, (a, b) in enumerate(pos):
            h[a, b] = hv[j]
        dh = [(Y.gen_matrices[s] @ h - h @ X.gen_matrices[s]) % m for s in range(ngen)]
        if all(dh[s][a, b] == 0 for s in range(ngen) for a in range(ny) for b in range(nx) if (a, b) not in strict):
            shifts.append(np.array([[d[a, b] for a, b in strict] for d in dh], dtype=np.int64).reshape(-1))
    for vals, i in valid.items():
        v = np.array(vals, dtype=np.int64)
        for s in shifts:
            j = valid[tuple(int(x) for x in (v - s) % m)]
            ra, rb = find(i), find(j)
            if ra != rb:
                parent[ra] = rb
    roots: dict[int, int] = {}
    class_of = {}
    for vals, i in valid.items():
        r = find(i)
        class_of[vals] = roots.setdefault(r, len(roots))
    return EnumeratedExtensions(strict, class_of, len(roots))


# ---------------------------------------------------------------------------
# Products of Ext^1 classes
# ---------------------------------------------------------------------------


@dataclass
class ProductResult:
    """Outcome of the product test; ``middle`` is the object T when it exists."""

    vanishes: bool
    middle: FilteredGModule | None
    correction: np.ndarray | None = None


def ext2_product_vanishes(xi: Ext1Class, eta: Ext1Class) -> ProductResult:
    """Decide whether eta . xi vanishes in Ext^2(X, Y).

    xi lies in Ext^1(X, Z) and eta in Ext^1(Z, Y).  The product vanishes
    exactly when some b: G -> (maps X -> Y raising the level) satisfies
    delta b = -eta cup xi; the object T = Y + Z + X with action
    [[rho_Y, eta, b], [0, rho_Z, xi], [0, 0, rho_X]] then factors it.
    The equation is linear, so the search is exhaustive.
    """
    X, Z = xi.group.source, xi.group.target
    Z2, Y = eta.group.source, eta.group.target
    if Z.levels != Z2.levels or any((a != b).any() for a, b in zip(Z.gen_matrices, Z2.gen_matrices)):
        raise ValueError("classes are not composable")
    m = X.modulus
    G = X.group
    x, e = xi.cocycle(), eta.cocycle()
    cup = np.einsum("gij,hjk->ghik", e, x) % m
    strict = _positions(X, Y, strict=True)
    target = np.array([[cup[g, h][a, b] for a, b in strict] for g in G.elements for h in G.elements], dtype=np.int64)
    target = (-target.reshape(-1)) % m
    # entries off the strict positions must vanish automatically
    ny, nx = Y.rank, X.rank
    off = [(a, b) for a in range(ny) for b in range(nx) if (a, b) not in strict]
    if off and any(cup[:, :, a, b].any() for a, b in off):
        raise ValueError("cup product leaves the strict part")
    k = len(strict)
    if k == 0:
        if target.any():
            return ProductResult(False, None)
        b = np.zeros((G.order, ny, nx), dtype=np.int64)
    else:
        D = _delta1(X, Y, strict)
        sol = LinearSolver(D, m, D.shape).solve(target)
        if sol is None:
            return ProductResult(False, None)
        b = np.zeros((G.order, ny, nx), dtype=np.int64)
        sol = sol.reshape(G.order, k)
        for j, (a, bb) in enumerate(strict):
            b[:, a, bb] = sol[:, j]
    nz = Z.rank
    mats = []
    for s in G.generators:
        T = np.zeros((ny + nz + nx, ny + nz + nx), dtype=np.int64)
        T[:ny, :ny] = Y.rho(s)
        T[:ny, ny : ny + nz] = e[s]
        T[:ny, ny + nz :] = b[s]
        T[ny : ny + nz, ny : ny + nz] = Z.rho(s)
        T[ny : ny + nz, ny + nz :] = x[s]
        T[ny + nz :, ny + nz :] = X.rho(s)
        mats.append(T)
    middle = FilteredGModule(X.spec, list(Y.levels) + list(Z.levels) + list(X.levels), mats)
    return ProductResult(True, middle, b % m)


# ---------------------------------------------------------------------------
# Conilpotent coalgebras and the filtered cobar complex
# ---------------------------------------------------------------------------


def _inv_mod_p(A: np.ndarray, p: int) -> np.ndarray:
    n = A.shape[0]
    R, piv = rref(np.concatenate([A % p, np.eye(n, dtype=np.int64)], axis=1), p)
    if piv[:n] != list(range(n)) or R.shape[0] < n:
        raise ValueError("matrix is not invertible")
    return R[:n, n:]


class FilteredCoalgebra:
    """A finite coaugmented coalgebra over Z/p with its coaugmentation filtration.

    ``comult[a, b, k]`` is the coefficient of e_a (x) e_b in Delta(e_k);
    ``counit`` and ``unit`` (the coaugmentation, a grouplike element) are
    vectors.  The filtration F_n = ker of the iterated reduced
    comultiplication on ker(counit) is computed at construction; a
    coalgebra that is not conilpotent is rejected.
    """

    def __init__(self, p: int, comult, counit, unit, name: str = ""):
        if not _is_prime(p):
            raise ValueError("coalgebras are supported over prime fields only")
        D = np.asarray(comult, dtype=np.int64) % p
        n = D.shape[0]
        if D.shape != (n, n, n):
            raise ValueError("comultiplication must have shape (dim, dim, dim)")
        eps = np.asarray(counit, dtype=np.int64).reshape(n) % p
        u = np.asarray(unit, dtype=np.int64).reshape(n) % p
        self.p, self.dim, self.name = p, n, name
        self.comult, self.counit, self.unit = D, eps, u
        left = np.einsum("xyc,czk->xyzk", D, D) % p
        right = np.einsum("yzc,xck->xyzk", D, D) % p
        if (left != right).any():
            raise ValueError("comultiplication is not coassociative")
        I = np.eye(n, dtype=np.int64)
        if (np.einsum("a,abk->bk", eps, D) % p != I).any() or (np.einsum("b,abk->ak", eps, D) % p != I).any():
            raise ValueError("counit axiom fails")
        if int(eps @ u) % p != 1 or (np.einsum("abk,k->ab", D, u) % p != np.outer(u, u) % p).any():
            raise ValueError("coaugmentation is not grouplike")
        self._filtration()

    def _filtration(self) -> None:
        p, n = self.p, self.dim
        # basis of C_+ = ker(counit): rows of B, and coordinates P: C -> C_+
        B = _right_null(self.counit.reshape(1, n), p)
        r = B.shape[0]
        proj = (np.eye(n, dtype=np.int64) - np.outer(self.unit, self.counit)) % p
        P = np.zeros((r, n), dtype=np.int64)
        for k in range(n):
            c = coords_in_rowspace(B, proj[:, k].reshape(1, n), p) if r else np.zeros((1, 0), dtype=np.int64)
            P[:, k] = c[0]
        D, u = self.comult, self.unit
        RD = np.zeros((r * r, r), dtype=np.int64)
        for j in range(r):
            x = B[j]
            full = np.einsum("abk,k->ab", D, x) - np.outer(x, u) - np.outer(u, x)
            RD[:, j] = (P @ full % p @ P.T % p).reshape(-1)
        self.reduced_basis = B
        # iterated kernels
        kernels = []
        it = RD % p
        power = 1
        while True:
            K = _right_null(it, p)
            kernels.append(K)
            if K.shape[0] == r or power > r + 1:
                break
            it = np.kron(RD, np.eye(r ** power, dtype=np.int64)) @ it % p
            power += 1
        if kernels and kernels[-1].shape[0] != r:
            raise NotConilpotentError("coaugmentation filtration is not exhaustive")
        basis: list[np.ndarray] = []
        weights: list[int] = []
        for w, K in enumerate(kernels, start=1):
            for v in K:
                cur = np.array(basis, dtype=np.int64).reshape(-1, r)
                if not len(basis) or coords_in_rowspace(cur, v.reshape(1, r), p) is None:
                    basis.append(v % p)
                    weights.append(w)
        A = np.array(basis, dtype=np.int64).reshape(r, r)
        Ainv = _inv_mod_p(A, p) if r else A
        new = np.zeros((r, r, r), dtype=np.int64)
        for k in range(r):
            M = (RD @ A[k]).reshape(r, r) % p
            new[:, :, k] = Ainv.T @ M @ Ainv % p
        self.adapted = A
        self.weights = tuple(weights)
        self.reduced = new
        self.depth = max(weights, default=0)

    def filtration_dims(self) -> list[int]:
        """dim F_n C for n = 0..depth (F_0 is the coaugmentation line)."""
        return [1 + sum(1 for w in self.weights if w <= k) for k in range(self.depth + 1)]


def _right_null(M: np.ndarray, p: int) -> np.ndarray:
    """Rows spanning {v : M v = 0} over F_p."""
    M = np.asarray(M, dtype=np.int64) % p
    n = M.shape[1]
    R, piv = rref(M, p)
    free = [j for j in range(n) if j not in piv]
    out = np.zeros((len(free), n), dtype=np.int64)
    for i, f in enumerate(free):
        out[i, f] = 1
        for row, c in enumerate(piv):
            out[i, c] = (-R[row, f]) % p
    return out


def group_coalgebra(G: FinGroup, p: int) -> FilteredCoalgebra:
    """Functions on G: Delta(d_g) = sum over ab = g of d_a (x) d_b."""
    n = G.order
    D = np.zeros((n, n, n), dtype=np.int64)
    for a in range(n):
        for b in range(n):
            D[a, b, G.mul(a, b)] = 1
    eps = np.zeros(n, dtype=np.int64)
    eps[0] = 1
    return FilteredCoalgebra(p, D, eps, np.ones(n, dtype=np.int64), name=f"k^{G.name}")


def trivial_coalgebra(p: int) -> FilteredCoalgebra:
    return FilteredCoalgebra(p, np.ones((1, 1, 1)), [1], [1], name="k")


def _cobar_basis(C: FilteredCoalgebra, n: int, k: int) -> list[tuple[int, ...]]:
    r = len(C.weights)
    return [t for t in itertools.product(range(r), repeat=n) if sum(C.weights[i] for i in t) <= k]


def filtered_cobar_complex(C: FilteredCoalgebra, k: int, top: int) -> BoundedComplex:
    """F_k of the reduced cobar complex, degrees 0..top+1."""
    p = C.p
    bases = {n: _cobar_basis(C, n, k) for n in range(top + 2)} if k >= 0 else {}
    terms = {n: FinModule.free(p, len(b)) for n, b in bases.items()}
    diffs = {}
    RD = C.reduced
    for n in range(top + 1):
        src, tgt = bases[n], bases[n + 1]
        index = {t: i for i, t in enumerate(tgt)}
        M = np.zeros((len(tgt), len(src)), dtype=np.int64)
        for j, t in enumerate(src):
            for i in range(n):
                sign = -1 if i % 2 == 0 else 1
                for a, b in zip(*np.nonzero(RD[:, :, t[i]])):
                    key = t[:i] + (int(a), int(b)) + t[i + 1 :]
                    if key in index:
                        M[index[key], j] += sign * RD[a, b, t[i]]
        diffs[n] = ModuleMap(terms[n], terms[n + 1], M % p)
    return BoundedComplex(p, terms, diffs)


def filtered_cobar_ext(C: FilteredCoalgebra, i: int, j: int, n: int) -> FinModule:
    """H^n of the weight <= j - i part of the reduced cobar complex of C."""
    k = j - i
    if n < 0 or k < 0:
        return FinModule(C.p, ())
    return filtered_cobar_complex(C, k, n).homology(n).module


# ---------------------------------------------------------------------------
# Group cohomology
# ---------------------------------------------------------------------------


def _tuples(G: FinGroup, n: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(1, G.order), repeat=n))


def _tuple_index(G: FinGroup, t: Sequence[int]) -> int | None:
    q = G.order - 1
    idx = 0
    for g in t:
        if g == 0:
            return None
        idx = idx * q + (g - 1)
    return idx


def group_cochain_complex(M: GModule, top: int) -> BoundedComplex:
    """Normalized inhomogeneous cochains C^0..C^(top+1) of G with values in M."""
    G, m, r = M.group, M.modulus, M.rank
    terms = {n: FinModule.free(m, (G.order - 1) ** n * r) for n in range(top + 2)}
    diffs = {}
    for n in range(top + 1):
        src, tgt = terms[n], terms[n + 1]
        D = np.zeros((tgt.rank, src.rank), dtype=np.int64)
        for ti, t in enumerate(_tuples(G, n + 1)):
            row = ti * r
            j = _tuple_index(G, t[1:])
            D[row : row + r, j * r : j * r + r] += M.rho(t[0])
            for i in range(1, n + 1):
                merged = t[: i - 1] + (G.mul(t[i - 1], t[i]),) + t[i + 1 :]
                j = _tuple_index(G, merged)
                if j is not None:
                    D[row : row + r, j * r : j * r + r] += (-1) ** i * np.eye(r, dtype=np.int64)
            j = _tuple_index(G, t[:-1])
            D[row : row + r, j * r : j * r + r] += (-1) ** (n + 1) * np.eye(r, dtype=np.int64)
        diffs[n] = ModuleMap(src, tgt, D % m)
    return BoundedComplex(m, terms, diffs)


def group_cohomology(M: GModule, n: int) -> Homology:
    return group_cochain_complex(M, n).homology(n)


def cyclic_cohomology(M: GModule, n: int) -> FinModule:
    """Periodic resolution answer for a group generated by one element."""
    G = M.group
    if len(G.generators) != 1:
        raise ValueError("need a single generator")
    m, r = M.modulus, M.rank
    T = M.gen_matrices[0]
    I = np.eye(r, dtype=np.int64)
    N = sum(M.rho(g) for g in G.elements) % m
    F = M.underlying
    tm1 = ModuleMap(F, F, (T - I) % m)
    nm = ModuleMap(F, F, N)
    if n == 0:
        return kernel(tm1).module
    from .exactla import homology

    if n % 2:
        return homology(tm1, nm, F).module
    return homology(nm, tm1, F).module


def _hom_module(Xs: GModule, Xt: GModule) -> GModule:
    """Hom(Xt, Xs)."""
    return Xs.hom(Xt)


def cup_cochain(G: FinGroup, a: np.ndarray, p: int, b: np.ndarray, q: int, Xs: GModule, Xt: GModule, Xr: GModule) -> np.ndarray:
    """(a cup b)(g1..g_{p+q}) = a(g1..gp) o (g1...gp).b(rest).

    a is a p-cochain in Hom(Xt, Xs), b a q-cochain in Hom(Xr, Xt); values
    are row-major matrices.
    """
    ds, dt, dr = Xs.rank, Xt.rank, Xr.rank
    A = np.asarray(a, dtype=np.int64).reshape(-1, ds, dt)
    B = np.asarray(b, dtype=np.int64).reshape(-1, dt, dr)
    out = np.zeros(((G.order - 1) ** (p + q), ds, dr), dtype=np.int64)
    for idx, t in enumerate(_tuples(G, p + q)):
        g = 0
        for x in t[:p]:
            g = G.mul(g, x)
        ia = _tuple_index(G, t[:p])
        ib = _tuple_index(G, t[p:])
        gb = Xt.rho(g) @ B[ib] @ Xr.rho(G.inv(g))
        out[idx] = A[ia] @ gb
    return out.reshape(-1) % Xs.modulus


def group_ext_ring(G: FinGroup, modules: Mapping[str, GModule], d: int, name: str = "") -> BigGradedRing:
    """A_{s,t;n} = H^n(G, Hom(X_t, X_s)) with the cup-composition product."""
    labels = list(modules)
    m = next(iter(modules.values())).modulus
    H: dict[tuple[int, str, str], Homology] = {}
    for s in labels:
        for t in labels:
            cx = group_cochain_complex(_hom_module(modules[s], modules[t]), d)
            for n in range(d + 1):
                H[(n, s, t)] = cx.homology(n)

    def product(n1: int, n2: int, s: str, t: str, r: str) -> np.ndarray:
        out, X, Y = H[(n1 + n2, s, r)], H[(n1, s, t)], H[(n2, t, r)]
        T = np.zeros((out.module.rank, X.module.rank, Y.module.rank), dtype=np.int64)
        for i, a in enumerate(X.representatives()):
            for j, b in enumerate(Y.representatives()):
                c = cup_cochain(G, a, n1, b, n2, modules[s], modules[t], modules[r])
                T[:, i, j] = out.project(c)
        return T

    comps0 = {(s, t): H[(0, s, t)].module for s in labels for t in labels}
    mult0 = {(s, t, r): product(0, 0, s, t, r) for s in labels for t in labels for r in labels}
    units = {s: H[(0, s, s)].project(np.eye(modules[s].rank, dtype=np.int64).reshape(-1)) for s in labels}
    base = BigRing(labels, m, comps0, mult0, units)
    comps = {(n, s, t): H[(n, s, t)].module for n in range(1, d + 1) for s in labels for t in labels}
    mult = {}
    for n1 in range(d + 1):
        for n2 in range(d + 1 - n1):
            if n1 == 0 and n2 == 0:
                continue
            for s, t, r in itertools.product(labels, repeat=3):
                mult[(n1, n2, s, t, r)] = product(n1, n2, s, t, r)
    return BigGradedRing(base, d, comps, mult, name=name or f"H*({G.name})")


# ---------------------------------------------------------------------------
# Diagonal Ext rings of filtered categories
# ---------------------------------------------------------------------------


@dataclass
class _Degree2:
    """(span of cup products + coboundaries) / coboundaries inside C^2."""

    sub: Submodule
    module: FinModule

    def project(self, z) -> np.ndarray:
        c = self.sub.coordinates(z)
        if c is None:
            raise ValueError("cochain outside the product span")
        return self.module.reduce(self.module.presentation.to_canon @ c)

    def lift(self, h) -> np.ndarray:
        return self.sub.inclusion(self.module.presentation.from_canon @ np.asarray(h, dtype=np.int64))


def diagonal_ext_ring(spec: TwistSpec, generators: Mapping[str, FilteredGModule] | Sequence[FilteredGModule], d: int, name: str = "") -> BigGradedRing:
    """A_{s,t;n} = Ext^n(X_t, X_s(n)) with the Yoneda product.

    Degrees 0 and 1 are the full Ext groups; degree 2 is the subgroup
    generated by products of degree-1 classes.  When d > 2 the higher
    degrees come from the quadratic closure of degrees <= 2 and the ring
    records ``generated_from = 3``.
    """
    if not isinstance(generators, Mapping):
        generators = {f"X{i}": X for i, X in enumerate(generators)}
    labels = list(generators)
    X = dict(generators)
    m = spec.modulus
    G = spec.group
    top = min(d, 2)
    homs = {(s, t): hom_group(X[t], X[s]) for s in labels for t in labels}
    ext = {(s, t): ext1(X[t], X[s].twist(1)) for s in labels for t in labels} if top >= 1 else {}

    def pack1(E: Ext1Group, c: np.ndarray) -> np.ndarray:
        return E.class_of(c)

    def mul00(s, t, r):
        out, A, B = homs[(s, r)], homs[(s, t)], homs[(t, r)]
        T = np.zeros((out.module.rank, A.module.rank, B.module.rank), dtype=np.int64)
        for i, a in enumerate(A.module.basis()):
            for j, b in enumerate(B.module.basis()):
                T[:, i, j] = out.coordinates(A.matrix(a) @ B.matrix(b) % m)
        return T

    comps0 = {(s, t): homs[(s, t)].module for s in labels for t in labels}
    mult0 = {(s, t, r): mul00(s, t, r) for s, t, r in itertools.product(labels, repeat=3)}
    units = {s: homs[(s, s)].coordinates(np.eye(X[s].rank, dtype=np.int64)) for s in labels}
    base = BigRing(labels, m, comps0, mult0, units)
    comps: dict = {}
    mult: dict = {}
    if top >= 1:
        for (s, t), E in ext.items():
            comps[(1, s, t)] = E.module
        for s, t, r in itertools.product(labels, repeat=3):
            A, B, out = homs[(s, t)], ext[(t, r)], ext[(s, r)]
            T = np.zeros((out.module.rank, A.module.rank, B.module.rank), dtype=np.int64)
            for i, a in enumerate(A.module.basis()):
                for j, b in enumerate(B.module.basis()):
                    c = np.einsum("ij,gjk->gik", A.matrix(a), B.cocycle(b)) % m
                    T[:, i, j] = pack1(out, c)
            mult[(0, 1, s, t, r)] = T
            A, B = ext[(s, t)], homs[(t, r)]
            T = np.zeros((out.module.rank, A.module.rank, B.module.rank), dtype=np.int64)
            for i, a in enumerate(A.module.basis()):
                for j, b in enumerate(B.module.basis()):
                    c = np.einsum("gij,jk->gik", A.cocycle(a), B.matrix(b)) % m
                    T[:, i, j] = pack1(out, c)
            mult[(1, 0, s, t, r)] = T
    if top >= 2:
        deg2: dict[tuple[str, str], _Degree2] = {}
        cups: dict[tuple[str, str, str], list[np.ndarray]] = {}
        for s, r in itertools.product(labels, repeat=2):
            src, tgt = X[r], X[s].twist(2)
            strict = _positions(src, tgt, strict=True)
            vecs = []
            for t in labels:
                A, B = ext[(s, t)], ext[(t, r)]
                block = []
                for a in A.module.basis():
                    for b in B.module.basis():
                        cup = np.einsum("gij,hjk->ghik", A.cocycle(a), B.cocycle(b)) % m
                        v = np.array([[cup[g, h][i, j] for i, j in strict] for g in G.elements for h in G.elements], dtype=np.int64)
                        block.append(v.reshape(-1))
                cups[(s, t, r)] = block
                vecs.extend(block)
            C2 = FinModule.free(m, G.order * G.order * len(strict))
            bnd = _delta1(src, tgt, strict) if strict else np.zeros((0, 0), dtype=np.int64)
            gens = np.concatenate([np.array(vecs, dtype=np.int64).reshape(-1, C2.rank).T, bnd.reshape(C2.rank, -1)], axis=1)
            sub = Submodule(C2, gens)
            rel = sub.coordinates_many(bnd.reshape(C2.rank, -1)) if bnd.size else np.zeros((sub.module.rank, 0), dtype=np.int64)
            Q = quotient(sub.module.orders, rel, m)
            deg2[(s, r)] = _Degree2(sub, Q)
            comps[(2, s, r)] = Q
        for s, t, r in itertools.product(labels, repeat=3):
            out = deg2[(s, r)]
            A, B = ext[(s, t)], ext[(t, r)]
            T = np.zeros((out.module.rank, A.module.rank, B.module.rank), dtype=np.int64)
            k = 0
            for i in range(A.module.rank):
                for j in range(B.module.rank):
                    T[:, i, j] = out.project(cups[(s, t, r)][k])
                    k += 1
            mult[(1, 1, s, t, r)] = T
            # degree 0 acting on degree 2, on cochain values
            strict_tr = _positions(X[r], X[t].twist(2), strict=True)
            strict_sr = _positions(X[r], X[s].twist(2), strict=True)
            A0, B2 = homs[(s, t)], deg2[(t, r)]
            T = np.zeros((out.module.rank, A0.module.rank, B2.module.rank), dtype=np.int64)
            for i, a in enumerate(A0.module.basis()):
                F = A0.matrix(a)
                for j, b in enumerate(B2.module.basis()):
                    z = _unpack2(B2.lift(b), G.order, strict_tr, X[t].rank, X[r].rank)
                    w = np.einsum("ij,ghjk->ghik", F, z) % m
                    T[:, i, j] = out.project(_pack2(w, strict_sr))
            mult[(0, 2, s, t, r)] = T
            A2, B0 = deg2[(s, t)], homs[(t, r)]
            strict_st = _positions(X[t], X[s].twist(2), strict=True)
            T = np.zeros((out.module.rank, A2.module.rank, B0.module.rank), dtype=np.int64)
            for i, a in enumerate(A2.module.basis()):
                z = _unpack2(A2.lift(a), G.order, strict_st, X[s].rank, X[t].rank)
                for j, b in enumerate(B0.module.basis()):
                    w = np.einsum("ghij,jk->ghik", z, B0.matrix(b)) % m
                    T[:, i, j] = out.project(_pack2(w, strict_sr))
            mult[(2, 0, s, t, r)] = T
    ring = BigGradedRing(base, top, comps, mult, name=name or "diagonal Ext")
    ring.generated_from = None
    if d > 2:
        from .quadra import quadratic_closure, relations_of

        closure = quadratic_closure(relations_of(ring), d)
        closure.name = ring.name
        closure.generated_from = 3
        return closure
    return ring


def _unpack2(v, n: int, strict, ny: int, nx: int) -> np.ndarray:
    z = np.zeros((n, n, ny, nx), dtype=np.int64)
    v = np.asarray(v, dtype=np.int64).reshape(n, n, len(strict))
    for k, (a, b) in enumerate(strict):
        z[:, :, a, b] = v[:, :, k]
    return z


def _pack2(z: np.ndarray, strict) -> np.ndarray:
    return np.stack([z[:, :, a, b] for a, b in strict], axis=2).reshape(-1)


# ---------------------------------------------------------------------------
# Frobenius categories over finite fields
# ---------------------------------------------------------------------------


def _prime_power(q: int) -> int | None:
    for p in range(2, q + 1):
        if q % p == 0:
            r = q
            while r % p == 0:
                r //= p
            return p if r == 1 else None
    return None


@dataclass(frozen=True)
class FrobeniusCategorySpec:
    """One of three categories of filtered groups with Frobenius data.

    variant 1: filtered abelian groups with a fixed splitting over Z_(p);
      extension parameters are rationals with denominators prime to p,
      restricted to those dividing ``denominator_bound``.
    variant 2: filtered Z[1/q]-modules with phi acting by q^i on gr^i.
    variant 3: filtered abelian groups with operators phi^(i) on F^i
      acting by the identity on gr^i.
    """

    variant: int
    q: int
    denominator_bound: int | None = None
    p: int = field(init=False)

    def __post_init__(self) -> None:
        if self.variant not in (1, 2, 3):
            raise ValueError("variant must be 1, 2 or 3")
        p = _prime_power(self.q)
        if p is None:
            raise ValueError("q must be a prime power")
        object.__setattr__(self, "p", p)
        if self.variant == 1 and (self.denominator_bound is None or self.denominator_bound < 1):
            raise ValueError("variant 1 needs a positive denominator bound")


def frobenius_phi(spec: FrobeniusCategorySpec, level: int, relative_to: int) -> Fraction:
    """Scalar by which the Frobenius operator used at ``relative_to`` acts on Z(level)."""
    if spec.variant == 2:
        return Fraction(spec.q) ** level
    if spec.variant == 3:
        return Fraction(spec.q) ** (level - relative_to)
    return Fraction(1)


def frobenius_ext1(spec: FrobeniusCategorySpec, i: int, j: int) -> FinModule:
    """Ext^1(Z(i), Z(j)) as a cyclic group (modulus 1 means zero).

    An extension of Z(i) by Z(j) has underlying module Z(j) + Z(i) with a
    single off-diagonal parameter c, which must vanish unless j > i.
    Changing the splitting by s shifts c by s (phi_Y - phi_X), where phi is
    the Frobenius operator defined on F^i.  The quotient of the parameter
    lattice by these shifts is computed with the integer Smith form.
    """
    if j <= i:
        return FinModule(1, ())
    if spec.variant == 1:
        # parameters (1/N')Z modulo Z, in the coordinate 1/N'
        bound = spec.denominator_bound
        while bound % spec.p == 0:
            bound //= spec.p
        rel = [[bound]]
    else:
        delta = frobenius_phi(spec, j, i) - frobenius_phi(spec, i, i)
        # clear denominators by a unit of the coefficient ring
        rel = [[int(delta * delta.denominator)]]
        if spec.variant == 3 and delta.denominator != 1:
            raise ValueError("variant 3 operators must be integral")
    facs = [abs(f) for f in integer_invariant_factors(rel, rows=1)]
    order = facs[0] if facs else 1
    if spec.variant == 2:
        while order and order % spec.p == 0:
            order //= spec.p
    if order == 0:
        raise ValueError("infinite Ext group")
    return FinModule(order, (order,) if order > 1 else ())
