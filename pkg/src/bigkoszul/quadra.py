"""Quadratic presentations, quadratic closure and the quadratic dual coring.

Everything is computed inside the tensor powers A1^(x)n over the degree-zero
part R.  For a presentation (R, A1, I):

* the closure in degree n is A1^(x)n modulo the sum of the images of
  A1^(x)(j-1) (x) I (x) A1^(x)(n-j-1);
* the dual coring has C_{-n} equal to the intersection of those images, so
  C_{-1} = A1 and C_{-2} = I.  Tensor products of coring components are
  represented by their images in A1^(x)n; this is only faithful when those
  images are direct summands, so non-projective components are refused.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .bigring import BigGradedRing, BigRing, Bimodule, Pair, TensorChain, concat_tensor, is_locally_free
from .exactla import FinModule, ModuleMap, Submodule, intersection, kernel, quotient


class UnsupportedModuleError(ValueError):
    """Raised when a computation needs projective components and gets others."""


class ChainFactory:
    """Tensor chains of graded pieces with cached concatenation tensors."""

    def __init__(self, pieces: Mapping[int, Bimodule], base: BigRing):
        self.pieces = dict(pieces)
        self.base = base
        self.modulus = base.modulus
        self.objects = base.objects
        self._chains: dict[tuple[int, ...], TensorChain] = {}
        self._concat: dict[tuple, np.ndarray] = {}

    @classmethod
    def of_ring(cls, A: BigGradedRing) -> ChainFactory:
        f = cls({}, A.base)
        f._ring = A
        return f

    def piece(self, n: int) -> Bimodule:
        if n not in self.pieces:
            ring = getattr(self, "_ring", None)
            if ring is None:
                raise KeyError(f"no degree {n} piece")
            self.pieces[n] = ring.bimodule(n)
        return self.pieces[n]

    def chain(self, degrees: Sequence[int]) -> TensorChain:
        key = tuple(degrees)
        if key not in self._chains:
            ring = getattr(self, "_ring", None)
            if ring is not None:
                self._chains[key] = ring.chain(key)
            else:
                self._chains[key] = TensorChain([self.piece(d) for d in key])
        return self._chains[key]

    def component(self, degrees: Sequence[int], s: str, t: str) -> FinModule:
        return self.chain(degrees).component(s, t)

    def concat(self, da: Sequence[int], db: Sequence[int], s: str, t: str, r: str) -> np.ndarray:
        key = (tuple(da), tuple(db), s, t, r)
        if key not in self._concat:
            self._concat[key] = concat_tensor(
                self.chain(da), self.chain(db), self.chain(tuple(da) + tuple(db)), s, t, r
            )
        return self._concat[key]

    def full(self, degrees: Sequence[int]) -> dict[Pair, np.ndarray]:
        out = {}
        for s, t in self.objects.pairs():
            M = self.component(degrees, s, t)
            if M.rank:
                out[(s, t)] = np.eye(M.rank, dtype=np.int64)
        return out

    def embed(self, pieces: Sequence[tuple[Sequence[int], Mapping[Pair, np.ndarray]]], s: str, t: str) -> np.ndarray:
        """Generators of the image of P1 (x) ... (x) Pk inside the joined chain.

        Each piece is (degrees, {pair: generator matrix in that chain's
        canonical coordinates}).
        """
        degs = tuple(pieces[0][0])
        cur = {v: G for (u, v), G in pieces[0][1].items() if u == s and G.shape[1]}
        for d2, gens2 in pieces[1:]:
            d2 = tuple(d2)
            new: dict[str, list[np.ndarray]] = {}
            for u, G1 in cur.items():
                for (u2, v), G2 in gens2.items():
                    if u2 != u or not G2.shape[1]:
                        continue
                    CT = self.concat(degs, d2, s, u, v)
                    if not CT.size:
                        continue
                    G = np.einsum("kij,ia,jb->kab", CT, G1, G2).reshape(CT.shape[0], -1)
                    new.setdefault(v, []).append(G)
            cur = {v: np.concatenate(Gs, axis=1) for v, Gs in new.items()}
            degs = degs + d2
        target = self.component(degs, s, t)
        G = cur.get(t)
        if G is None:
            return np.zeros((target.rank, 0), dtype=np.int64)
        return target.reduce(G)


def product_matrix(A: BigGradedRing, degrees: Sequence[int], s: str, t: str) -> np.ndarray:
    """Iterated multiplication A_{d1} (x) ... (x) A_{dk} -> A_{d1+...+dk} on component (s, t)."""
    degrees = tuple(degrees)
    chain = A.chain(degrees)
    src = chain.component(s, t)
    total = sum(degrees)
    tgt = A.comp(total, s, t)
    if not src.rank or not tgt.rank:
        return np.zeros((tgt.rank, src.rank), dtype=np.int64)
    keys = chain.naive_keys(s, t)
    cols = []
    for path, gens in keys:
        deg = degrees[0]
        v = np.eye(A.comp(deg, path[0], path[1]).rank, dtype=np.int64)[gens[0]]
        for p in range(1, len(degrees)):
            d2 = degrees[p]
            w = np.eye(A.comp(d2, path[p], path[p + 1]).rank, dtype=np.int64)[gens[p]]
            v = A.multiply(deg, d2, path[0], path[p], path[p + 1], v, w)
            deg += d2
        cols.append(v)
    N = np.stack(cols, axis=1)
    return tgt.reduce(N @ chain.from_canon(s, t))


@dataclass
class QuadraticPresentation:
    """Base R, degree-one bimodule A1 and relations I inside A1 (x)_R A1."""

    base: BigRing
    A1: Bimodule
    relations: dict[Pair, Submodule]
    name: str = ""
    factory: ChainFactory = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.factory = ChainFactory({1: self.A1}, self.base)
        two = self.factory.chain((1, 1))
        for pr in self.base.objects.pairs():
            amb = two.component(*pr)
            if pr not in self.relations:
                self.relations[pr] = Submodule(amb, np.zeros((amb.rank, 0), dtype=np.int64))
            elif self.relations[pr].ambient != amb:
                raise ValueError(f"relations for {pr} live in the wrong ambient module")

    @property
    def modulus(self) -> int:
        return self.base.modulus

    @property
    def objects(self):
        return self.base.objects

    def power(self, n: int) -> TensorChain:
        return self.factory.chain((1,) * n)

    def relation_gens(self) -> dict[Pair, np.ndarray]:
        return {pr: S.inclusion.matrix for pr, S in self.relations.items() if S.module.rank}

    def is_closed(self) -> list[str]:
        """Pairs where I fails to be stable under the base actions."""
        bad = []
        try:
            self.power(2).as_bimodule().sub_bimodule(self.relations)
        except ValueError as exc:
            bad.append(str(exc))
        return bad

    @classmethod
    def from_relation_vectors(
        cls, base: BigRing, A1: Bimodule, rels: Mapping[Pair, Sequence[Sequence[int]]], name: str = ""
    ) -> QuadraticPresentation:
        """Relations given as lists of vectors in canonical coordinates of A1 (x) A1."""
        P = cls(base, A1, {}, name)
        two = P.power(2)
        subs = {}
        for pr in base.objects.pairs():
            amb = two.component(*pr)
            vecs = [np.asarray(v, dtype=np.int64) for v in rels.get(pr, [])]
            G = np.stack(vecs, axis=1) if vecs else np.zeros((amb.rank, 0), dtype=np.int64)
            subs[pr] = Submodule(amb, G)
        return cls(base, A1, subs, name)


def relations_of(A: BigGradedRing) -> QuadraticPresentation:
    """I = ker(A1 (x) A1 -> A2)."""
    if A.dmax < 2:
        raise ValueError("ring must be truncated at degree 2 or higher")
    P = QuadraticPresentation(A.base, A.bimodule(1), {}, A.name)
    subs = {}
    two = P.power(2)
    for s, t in A.objects.pairs():
        src = two.component(s, t)
        mat = product_matrix_chain(A, two, s, t)
        subs[(s, t)] = kernel(ModuleMap(src, A.comp(2, s, t), mat))
    return QuadraticPresentation(A.base, A.bimodule(1), subs, A.name)


def product_matrix_chain(A: BigGradedRing, chain: TensorChain, s: str, t: str) -> np.ndarray:
    """Multiplication from a chain of A1's (any TensorChain of A's degree-1 piece) to A_n."""
    n = chain.length
    src = chain.component(s, t)
    tgt = A.comp(n, s, t)
    if not src.rank or not tgt.rank:
        return np.zeros((tgt.rank, src.rank), dtype=np.int64)
    cols = []
    for path, gens in chain.naive_keys(s, t):
        v = np.eye(A.comp(1, path[0], path[1]).rank, dtype=np.int64)[gens[0]]
        for p in range(1, n):
            w = np.eye(A.comp(1, path[p], path[p + 1]).rank, dtype=np.int64)[gens[p]]
            v = A.multiply(p, 1, path[0], path[p], path[p + 1], v, w)
        cols.append(v)
    return tgt.reduce(np.stack(cols, axis=1) @ chain.from_canon(s, t))


def relation_images(P: QuadraticPresentation, n: int, j: int, s: str, t: str) -> np.ndarray:
    """Generators of A1^(x)(j-1) (x) I (x) A1^(x)(n-j-1) inside A1^(x)n, 1 <= j <= n-1."""
    f = P.factory
    pieces = []
    if j > 1:
        pieces.append(((1,) * (j - 1), f.full((1,) * (j - 1))))
    pieces.append(((1, 1), P.relation_gens()))
    if n - j - 1 > 0:
        pieces.append(((1,) * (n - j - 1), f.full((1,) * (n - j - 1))))
    return f.embed(pieces, s, t)


class QuadraticClosure:
    """The quadratic ring of a presentation, with quotient data per degree."""

    def __init__(self, P: QuadraticPresentation, d: int):
        if d < 1:
            raise ValueError("degree must be positive")
        self.P = P
        self.d = d
        m = P.modulus
        self.quot: dict[tuple[int, str, str], FinModule] = {}
        comps: dict[tuple[int, str, str], FinModule] = {}
        for s, t in P.objects.pairs():
            comps[(1, s, t)] = P.A1.comp(s, t)
        for n in range(2, d + 1):
            chain = P.power(n)
            for s, t in P.objects.pairs():
                amb = chain.component(s, t)
                if not amb.rank:
                    continue
                gens = [relation_images(P, n, j, s, t) for j in range(1, n)]
                G = np.concatenate(gens, axis=1)
                q = quotient(amb.orders, G, m)
                self.quot[(n, s, t)] = q
                comps[(n, s, t)] = q
        mult = {}
        o = P.objects
        for n1 in range(0, d + 1):
            for n2 in range(0, d + 1 - n1):
                if n1 == 0 and n2 == 0:
                    continue
                for s in o:
                    for t in o:
                        for r in o:
                            T = self._tensor(n1, n2, s, t, r)
                            if T is not None:
                                mult[(n1, n2, s, t, r)] = T
        self.ring = BigGradedRing(P.base, d, comps, mult, P.name)

    def lift(self, n: int, s: str, t: str) -> np.ndarray:
        """Columns: canonical generators of degree n lifted to A1^(x)n coordinates."""
        if n == 1:
            return np.eye(self.P.A1.comp(s, t).rank, dtype=np.int64)
        q = self.quot.get((n, s, t))
        if q is None:
            return np.zeros((self.P.power(n).component(s, t).rank, 0), dtype=np.int64)
        return q.presentation.from_canon

    def project(self, n: int, s: str, t: str) -> np.ndarray:
        if n == 1:
            return np.eye(self.P.A1.comp(s, t).rank, dtype=np.int64)
        q = self.quot.get((n, s, t))
        if q is None:
            return np.zeros((0, self.P.power(n).component(s, t).rank), dtype=np.int64)
        return q.presentation.to_canon

    def _comp(self, n: int, s: str, t: str) -> FinModule:
        if n == 0:
            return self.P.base.comp(s, t)
        if n == 1:
            return self.P.A1.comp(s, t)
        return self.quot.get((n, s, t), FinModule(self.P.modulus, ()))

    def _tensor(self, n1: int, n2: int, s: str, t: str, r: str) -> np.ndarray | None:
        a, b, c = self._comp(n1, s, t), self._comp(n2, t, r), self._comp(n1 + n2, s, r)
        if not (a.rank and b.rank and c.rank):
            return None
        n = n1 + n2
        P = self.P
        if n1 == 0 or n2 == 0:
            bim = P.power(n).as_bimodule() if n > 1 else P.A1
            if n1 == 0:
                act = bim.left_tensor(s, t, r)
                T = np.einsum("xay,yi->xai", act, self.lift(n, t, r))
            else:
                act = bim.right_tensor(s, t, r)
                T = np.einsum("xya,yi->xia", act, self.lift(n, s, t))
            return c.reduce(np.einsum("kx,xij->kij", self.project(n, s, r), T))
        CT = P.factory.concat((1,) * n1, (1,) * n2, s, t, r)
        T = np.einsum("xab,ai,bj->xij", CT, self.lift(n1, s, t), self.lift(n2, t, r))
        return c.reduce(np.einsum("kx,xij->kij", self.project(n, s, r), T))


def quadratic_closure(P: QuadraticPresentation, d: int) -> BigGradedRing:
    """The quadratic big ring of P truncated at degree d."""
    return QuadraticClosure(P, d).ring


def is_quadratic_up_to(A: BigGradedRing, d: int | None = None) -> tuple[bool, int | None]:
    """Whether closure(relations_of(A)) -> A is an isomorphism in degrees <= d.

    Returns (verdict, first failing degree or None).
    """
    d = A.dmax if d is None else d
    if d > A.dmax:
        raise ValueError("degree beyond truncation")
    if d < 2:
        return True, None
    P = relations_of(A)
    for n in range(2, d + 1):
        chain = P.power(n)
        for s, t in A.objects.pairs():
            tgt = A.comp(n, s, t)
            amb = chain.component(s, t)
            mu = product_matrix_chain(A, chain, s, t)
            img = Submodule(tgt, mu) if tgt.rank else None
            if img is not None and img.module.order != tgt.order:
                return False, n
            if not amb.rank:
                continue
            G = np.concatenate([relation_images(P, n, j, s, t) for j in range(1, n)], axis=1)
            q = quotient(amb.orders, G, A.modulus)
            if q.order != tgt.order:
                return False, n
    return True, None


@dataclass
class QuadraticPart:
    """qu A together with the comparison map qu A -> A in each degree."""

    ring: BigGradedRing
    closure: QuadraticClosure
    target: BigGradedRing

    def comparison(self, n: int, s: str, t: str) -> ModuleMap:
        src = self.ring.comp(n, s, t)
        tgt = self.target.comp(n, s, t)
        if n == 0 or n == 1:
            return ModuleMap(src, tgt, np.eye(tgt.rank, src.rank, dtype=np.int64))
        chain = self.closure.P.power(n)
        mu = product_matrix_chain(self.target, chain, s, t)
        return ModuleMap(src, tgt, mu @ self.closure.lift(n, s, t))


def quadratic_part(A: BigGradedRing, d: int | None = None) -> QuadraticPart:
    d = A.dmax if d is None else d
    if d < 2:
        raise ValueError("degree must be at least 2")
    cl = QuadraticClosure(relations_of(A), d)
    return QuadraticPart(cl.ring, cl, A.truncate(d))


# ---------------------------------------------------------------------------
# dual coring
# ---------------------------------------------------------------------------


class GradedCoring:
    """The quadratic dual coring of a presentation, truncated at degree d.

    ``subs[n][(s, t)]`` is C_{-n}[s, t] as a submodule of A1^(x)n.  Tensor
    products of components are represented by their images in A1^(x)n
    (see ``term``); comultiplication is the inclusion into those images.
    """

    def __init__(self, P: QuadraticPresentation, d: int, check_projective: bool = True):
        self.P = P
        self.base = P.base
        self.dmax = d
        self.modulus = P.modulus
        self.objects = P.objects
        self.subs: dict[int, dict[Pair, Submodule]] = {}
        self._terms: dict[tuple[tuple[int, ...], str, str], Submodule] = {}
        for n in range(1, d + 1):
            chain = P.power(n)
            layer = {}
            for s, t in self.objects.pairs():
                amb = chain.component(s, t)
                if n == 1:
                    layer[(s, t)] = Submodule(amb, np.eye(amb.rank, dtype=np.int64))
                    continue
                cur = None
                for j in range(1, n):
                    X = Submodule(amb, relation_images(P, n, j, s, t))
                    cur = X if cur is None else intersection(cur, X)
                layer[(s, t)] = cur
            self.subs[n] = layer
        if check_projective:
            self._check_projective()

    def _check_projective(self) -> None:
        if _is_prime(self.modulus) and self.base.is_diagonal:
            return
        for n, layer in self.subs.items():
            for pr, S in layer.items():
                if not is_locally_free(S.ambient) or not is_locally_free(S.module):
                    raise UnsupportedModuleError(
                        f"nonfree components unsupported: degree {n} component {pr} is {S.module} inside {S.ambient}"
                    )

    def component(self, n: int, s: str, t: str) -> FinModule:
        if n == 0:
            return self.base.comp(s, t)
        return self.subs[n][(s, t)].module

    def ranks(self) -> list[int]:
        return [sum(self.component(n, s, t).rank for s, t in self.objects.pairs()) for n in range(self.dmax + 1)]

    def gens(self, n: int) -> dict[Pair, np.ndarray]:
        return {pr: S.inclusion.matrix for pr, S in self.subs[n].items() if S.module.rank}

    def term(self, composition: Sequence[int], s: str, t: str) -> Submodule:
        """Image of C_{-j1} (x) ... (x) C_{-jk} in A1^(x)(j1+...+jk)."""
        key = (tuple(composition), s, t)
        if key not in self._terms:
            comp = tuple(composition)
            n = sum(comp)
            amb = self.P.power(n).component(s, t)
            if len(comp) == 1:
                self._terms[key] = self.subs[n][(s, t)]
            else:
                pieces = [((1,) * j, self.gens(j)) for j in comp]
                G = self.P.factory.embed(pieces, s, t)
                self._terms[key] = Submodule(amb, G)
        return self._terms[key]

    def comult(self, n: int, i: int, s: str, t: str) -> np.ndarray:
        """Matrix of C_{-n} -> C_{-i} (x) C_{-(n-i)} in canonical coordinates."""
        src = self.subs[n][(s, t)]
        tgt = self.term((i, n - i), s, t)
        c = tgt.coordinates_many(src.inclusion.matrix)
        if c is None:
            raise ValueError("comultiplication does not land in the tensor product")
        return c

    def bimodule(self, n: int) -> Bimodule:
        if n == 1:
            return self.P.A1
        return self.P.power(n).as_bimodule().sub_bimodule(self.subs[n])


def _is_prime(m: int) -> bool:
    return m >= 2 and all(m % p for p in range(2, int(m**0.5) + 1))


def quadratic_dual_coring(P: QuadraticPresentation, d: int) -> GradedCoring:
    """C with C_0 = R, C_{-1} = A1, C_{-2} = I and C_{-n} the intersection of relation images."""
    if d < 2:
        raise ValueError("degree must be at least 2")
    return GradedCoring(P, d)


def trivial_coring(R: BigRing, d: int) -> GradedCoring:
    """The coring R concentrated in degree 0."""
    A1 = Bimodule(R, R, {}, {}, {})
    return GradedCoring(QuadraticPresentation(R, A1, {}), d)
