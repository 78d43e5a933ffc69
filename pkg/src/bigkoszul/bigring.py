"""Big rings and big graded rings over a finite object set.

A big ring R over a set of objects has a Z/m-module R[s, t] for every
ordered pair of objects, a multiplication R[s, t] x R[t, r] -> R[s, r] and a
unit in every R[s, s].  A big graded ring adds components A_n[s, t] for
1 <= n <= dmax.

Multiplication is stored as structure tensors on canonical generators:
``T[k, i, j]`` is the coefficient of generator k of the target in the
product (generator i of the left factor) * (generator j of the right one).

Tensor products over the base are built by ``TensorChain``: for a chain of
bimodules K1, ..., Kn it materializes every component of K1 (x) ... (x) Kn
as a quotient of the "naive" direct sum over object paths of
Z/m-tensor products of canonical generators, modulo the balancing
relations.  Maps between chains (multiplication of adjacent factors, outer
actions, concatenation) are written on naive generators and pushed through
the presentations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .exactla import FinModule, ModuleMap, Presentation, Submodule, kernel, quotient

Pair = tuple[str, str]


@dataclass(frozen=True)
class ObjectSet:
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        names = tuple(str(n) for n in self.names)
        if not names:
            raise ValueError("object set must be nonempty")
        if len(set(names)) != len(names):
            raise ValueError("object labels must be unique")
        object.__setattr__(self, "names", names)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def pairs(self) -> list[Pair]:
        return [(s, t) for s in self.names for t in self.names]


def _as_objects(objects) -> ObjectSet:
    return objects if isinstance(objects, ObjectSet) else ObjectSet(tuple(objects))


def _mult(T: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("kij,i,j->k", T, x, y)


class BigRing:
    """A big ring over ``objects`` with Z/m coefficients."""

    def __init__(
        self,
        objects,
        modulus: int,
        components: Mapping[Pair, FinModule],
        mult: Mapping[tuple[str, str, str], np.ndarray],
        units: Mapping[str, Sequence[int]],
    ):
        self.objects = _as_objects(objects)
        self.modulus = modulus
        self.components = {k: v for k, v in components.items() if not v.is_zero}
        self._zero = FinModule(modulus, ())
        self.mult = {}
        for key, T in mult.items():
            s, t, r = key
            shape = (self.comp(s, r).rank, self.comp(s, t).rank, self.comp(t, r).rank)
            T = np.asarray(T, dtype=np.int64).reshape(shape)
            if T.size and T.any():
                self.mult[key] = T % self.comp(s, r).orders_array()[:, None, None]
        self.units = {}
        for s in self.objects:
            u = np.asarray(units.get(s, ()), dtype=np.int64)
            self.units[s] = self.comp(s, s).reduce(u) if self.comp(s, s).rank else u

    @classmethod
    def diagonal(cls, objects, m: int) -> BigRing:
        """The product ring (Z/m)^objects: Z/m on the diagonal, zero elsewhere."""
        objects = _as_objects(objects)
        Z = FinModule.free(m, 1)
        comps = {(s, s): Z for s in objects}
        mult = {(s, s, s): np.ones((1, 1, 1), dtype=np.int64) for s in objects}
        units = {s: [1] for s in objects}
        return cls(objects, m, comps, mult, units)

    def comp(self, s: str, t: str) -> FinModule:
        return self.components.get((s, t), self._zero)

    def tensor(self, s: str, t: str, r: str) -> np.ndarray:
        T = self.mult.get((s, t, r))
        if T is None:
            return np.zeros((self.comp(s, r).rank, self.comp(s, t).rank, self.comp(t, r).rank), dtype=np.int64)
        return T

    def multiply(self, s: str, t: str, r: str, x, y) -> np.ndarray:
        return self.comp(s, r).reduce(_mult(self.tensor(s, t, r), np.asarray(x), np.asarray(y)))

    @cached_property
    def is_diagonal(self) -> bool:
        """True when R is (Z/m)^objects with the obvious structure."""
        m = self.modulus
        for (s, t), M in self.components.items():
            if s != t:
                return False
            if M.invariant_factors != (m,):
                return False
            if (self.tensor(s, s, s) % m).tolist() != [[[self.units[s][0] % m]]]:
                return False
            if math.gcd(int(self.units[s][0]), m) != 1:
                return False
        return all(not self.comp(s, s).is_zero for s in self.objects) or m == 1

    def as_bimodule(self) -> Bimodule:
        """R as a bimodule over itself."""
        o = self.objects
        left = {(s, t, r): self.tensor(s, t, r) for s in o for t in o for r in o}
        return Bimodule(self, self, dict(self.components), left, dict(left))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BigRing):
            return NotImplemented
        return (
            self.objects == other.objects
            and self.modulus == other.modulus
            and self.components == other.components
            and set(self.mult) == set(other.mult)
            and all(np.array_equal(self.mult[k], other.mult[k]) for k in self.mult)
            and all(np.array_equal(self.units[s], other.units[s]) for s in self.objects)
        )

    def __hash__(self) -> int:
        return hash((self.objects, self.modulus, tuple(sorted(self.components.items()))))


def point_ring(m: int) -> BigRing:
    """Z/m as a big ring over a single object."""
    return BigRing.diagonal(("*",), m)


class Bimodule:
    """A bimodule K over (left base R, right base S).

    ``left[(r, s, t)]`` has shape (rank K[r,t], rank R[r,s], rank K[s,t]) and
    ``right[(s, t, u)]`` has shape (rank K[s,u], rank K[s,t], rank S[t,u]).
    """

    def __init__(
        self,
        left_base: BigRing,
        right_base: BigRing,
        components: Mapping[Pair, FinModule],
        left: Mapping[tuple[str, str, str], np.ndarray],
        right: Mapping[tuple[str, str, str], np.ndarray],
    ):
        self.left_base = left_base
        self.right_base = right_base
        self.modulus = left_base.modulus
        self.components = {k: v for k, v in components.items() if not v.is_zero}
        self._zero = FinModule(self.modulus, ())
        self.left = {}
        for (r, s, t), T in left.items():
            shape = (self.comp(r, t).rank, left_base.comp(r, s).rank, self.comp(s, t).rank)
            T = np.asarray(T, dtype=np.int64).reshape(shape)
            if T.size and T.any():
                self.left[(r, s, t)] = T
        self.right = {}
        for (s, t, u), T in right.items():
            shape = (self.comp(s, u).rank, self.comp(s, t).rank, right_base.comp(t, u).rank)
            T = np.asarray(T, dtype=np.int64).reshape(shape)
            if T.size and T.any():
                self.right[(s, t, u)] = T

    def comp(self, s: str, t: str) -> FinModule:
        return self.components.get((s, t), self._zero)

    def left_tensor(self, r: str, s: str, t: str) -> np.ndarray:
        T = self.left.get((r, s, t))
        if T is None:
            return np.zeros((self.comp(r, t).rank, self.left_base.comp(r, s).rank, self.comp(s, t).rank), dtype=np.int64)
        return T

    def right_tensor(self, s: str, t: str, u: str) -> np.ndarray:
        T = self.right.get((s, t, u))
        if T is None:
            return np.zeros((self.comp(s, u).rank, self.comp(s, t).rank, self.right_base.comp(t, u).rank), dtype=np.int64)
        return T

    @property
    def is_zero(self) -> bool:
        return not self.components

    def invariants(self) -> dict[Pair, tuple[int, ...]]:
        return {k: v.invariant_factors for k, v in sorted(self.components.items())}

    def sub_bimodule(self, subs: Mapping[Pair, Submodule]) -> Bimodule:
        """The sub-bimodule given by action-stable submodules of components."""
        comps = {k: s.module for k, s in subs.items()}
        L = self.left_base
        Rb = self.right_base
        left = {}
        for (r, t), tgt in subs.items():
            for s in L.objects:
                src = subs.get((s, t))
                if src is None or not L.comp(r, s).rank:
                    continue
                T = self.left_tensor(r, s, t)
                inc = src.inclusion.matrix
                out = np.zeros((tgt.module.rank, L.comp(r, s).rank, src.module.rank), dtype=np.int64)
                for a in range(L.comp(r, s).rank):
                    imgs = np.einsum("kj,jx->kx", T[:, a, :], inc)
                    c = tgt.coordinates_many(imgs)
                    if c is None:
                        raise ValueError("submodule not stable under the left action")
                    out[:, a, :] = c
                left[(r, s, t)] = out
        right = {}
        for (s, u), tgt in subs.items():
            for t in Rb.objects:
                src = subs.get((s, t))
                if src is None or not Rb.comp(t, u).rank:
                    continue
                T = self.right_tensor(s, t, u)
                inc = src.inclusion.matrix
                out = np.zeros((tgt.module.rank, src.module.rank, Rb.comp(t, u).rank), dtype=np.int64)
                for b in range(Rb.comp(t, u).rank):
                    imgs = np.einsum("kj,jx->kx", T[:, :, b], inc)
                    c = tgt.coordinates_many(imgs)
                    if c is None:
                        raise ValueError("submodule not stable under the right action")
                    out[:, :, b] = c
                right[(s, t, u)] = out
        return Bimodule(L, Rb, comps, left, right)


class BigGradedRing:
    """A nonnegatively graded big ring truncated at degree ``dmax``."""

    def __init__(
        self,
        base: BigRing,
        dmax: int,
        components: Mapping[tuple[int, str, str], FinModule],
        mult: Mapping[tuple[int, int, str, str, str], np.ndarray],
        name: str = "",
    ):
        self.base = base
        self.dmax = dmax
        self.name = name
        self.objects = base.objects
        self.modulus = base.modulus
        self._zero = FinModule(self.modulus, ())
        self.components = {k: v for k, v in components.items() if 1 <= k[0] <= dmax and not v.is_zero}
        self.mult = {}
        for key, T in mult.items():
            n1, n2, s, t, r = key
            if n1 + n2 > dmax or (n1 == 0 and n2 == 0):
                continue
            shape = (self.comp(n1 + n2, s, r).rank, self.comp(n1, s, t).rank, self.comp(n2, t, r).rank)
            T = np.asarray(T, dtype=np.int64).reshape(shape)
            if T.size and T.any():
                self.mult[key] = T % self.comp(n1 + n2, s, r).orders_array()[:, None, None]
        self._bimodules: dict[int, Bimodule] = {}
        self._chains: dict[tuple[int, ...], TensorChain] = {}

    def comp(self, n: int, s: str, t: str) -> FinModule:
        if n == 0:
            return self.base.comp(s, t)
        return self.components.get((n, s, t), self._zero)

    def tensor(self, n1: int, n2: int, s: str, t: str, r: str) -> np.ndarray:
        if n1 == 0 and n2 == 0:
            return self.base.tensor(s, t, r)
        T = self.mult.get((n1, n2, s, t, r))
        if T is None:
            return np.zeros(
                (self.comp(n1 + n2, s, r).rank, self.comp(n1, s, t).rank, self.comp(n2, t, r).rank), dtype=np.int64
            )
        return T

    def multiply(self, n1: int, n2: int, s: str, t: str, r: str, x, y) -> np.ndarray:
        if n1 + n2 > self.dmax:
            raise ValueError("product beyond truncation degree")
        return self.comp(n1 + n2, s, r).reduce(_mult(self.tensor(n1, n2, s, t, r), np.asarray(x), np.asarray(y)))

    def ranks(self) -> list[int]:
        """Number of canonical generators in each degree, summed over object pairs."""
        return [sum(self.comp(n, s, t).rank for s, t in self.objects.pairs()) for n in range(self.dmax + 1)]

    def orders(self) -> list[int]:
        return [math.prod(self.comp(n, s, t).order for s, t in self.objects.pairs()) for n in range(self.dmax + 1)]

    def bimodule(self, n: int) -> Bimodule:
        """A_n as a bimodule over A_0."""
        if n not in self._bimodules:
            o = self.objects
            comps = {(s, t): self.comp(n, s, t) for s, t in o.pairs()}
            left = {(r, s, t): self.tensor(0, n, r, s, t) for r in o for s in o for t in o}
            right = {(s, t, u): self.tensor(n, 0, s, t, u) for s in o for t in o for u in o}
            self._bimodules[n] = Bimodule(self.base, self.base, comps, left, right)
        return self._bimodules[n]

    def chain(self, degrees: Sequence[int]) -> TensorChain:
        """A_{d1} (x) ... (x) A_{dk} over A_0, cached."""
        key = tuple(degrees)
        if key not in self._chains:
            self._chains[key] = TensorChain([self.bimodule(d) for d in key])
        return self._chains[key]

    def truncate(self, d: int) -> BigGradedRing:
        d = min(d, self.dmax)
        return BigGradedRing(self.base, d, self.components, self.mult, self.name)

    def is_flat_over_base(self, side: str = "right", upto: int | None = None) -> bool:
        top = self.dmax if upto is None else min(upto, self.dmax)
        return all(is_flat(self.bimodule(n), side) for n in range(1, top + 1))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate(A: BigGradedRing | BigRing) -> list[str]:
    """Every failed associativity, unit or well-definedness identity on generators."""
    if isinstance(A, BigRing):
        A = BigGradedRing(A, 0, {}, {})
    report: list[str] = []
    o = A.objects
    d = A.dmax
    for (n1, n2, s, t, r), T in list(A.mult.items()) + [((0, 0, *k), v) for k, v in A.base.mult.items()]:
        tgt = A.comp(n1 + n2, s, r).orders_array()
        a = A.comp(n1, s, t).orders_array()
        b = A.comp(n2, t, r).orders_array()
        bad = ((T * a[None, :, None]) % tgt[:, None, None]).any() or ((T * b[None, None, :]) % tgt[:, None, None]).any()
        if bad:
            report.append(f"structure tensor ({n1},{n2}) on objects ({s},{t},{r}) not well defined on relations")
    for s in o:
        e = A.base.units[s]
        for n in range(d + 1):
            for t in o:
                M = A.comp(n, s, t)
                for i in range(M.rank):
                    x = np.eye(M.rank, dtype=np.int64)[i]
                    if not np.array_equal(A.multiply(0, n, s, s, t, e, x) if M.rank else x, M.reduce(x)):
                        report.append(f"left unit fails: e_{s} * generator {i} of degree {n} ({s},{t})")
                N = A.comp(n, t, s)
                for i in range(N.rank):
                    x = np.eye(N.rank, dtype=np.int64)[i]
                    if not np.array_equal(A.multiply(n, 0, t, s, s, x, e), N.reduce(x)):
                        report.append(f"right unit fails: generator {i} of degree {n} ({t},{s}) * e_{s}")
    for n1 in range(d + 1):
        for n2 in range(d + 1 - n1):
            for n3 in range(d + 1 - n1 - n2):
                for s, t, r, u in itertools.product(o, repeat=4):
                    if not (A.comp(n1, s, t).rank and A.comp(n2, t, r).rank and A.comp(n3, r, u).rank):
                        continue
                    tgt = A.comp(n1 + n2 + n3, s, u)
                    if not tgt.rank:
                        continue
                    lhs = np.einsum("lkc,kij->lijc", A.tensor(n1 + n2, n3, s, r, u), A.tensor(n1, n2, s, t, r))
                    rhs = np.einsum("lik,kjc->lijc", A.tensor(n1, n2 + n3, s, t, u), A.tensor(n2, n3, t, r, u))
                    diff = (lhs - rhs) % tgt.orders_array()[:, None, None, None]
                    if diff.any():
                        _, i, j, c = (int(v) for v in np.argwhere(diff)[0])
                        report.append(
                            f"associativity fails: degrees ({n1},{n2},{n3}) objects ({s},{t},{r},{u}) generators ({i},{j},{c})"
                        )
    return report


# ---------------------------------------------------------------------------
# tensor chains
# ---------------------------------------------------------------------------

NaiveKey = tuple[tuple[str, ...], tuple[int, ...]]


class TensorChain:
    """The iterated tensor product K1 (x)_R ... (x)_R Kn of bimodules."""

    def __init__(self, factors: Sequence[Bimodule]):
        if not factors:
            raise ValueError("empty tensor chain")
        for a, b in zip(factors, factors[1:]):
            if a.right_base is not b.left_base and a.right_base != b.left_base:
                raise ValueError("base mismatch between consecutive factors")
        self.factors = list(factors)
        self.modulus = factors[0].modulus
        self.left_base = factors[0].left_base
        self.right_base = factors[-1].right_base
        self._cache: dict[Pair, tuple[list[NaiveKey], dict[NaiveKey, int], FinModule]] = {}

    @property
    def length(self) -> int:
        return len(self.factors)

    def _paths(self, s: str, t: str) -> list[tuple[str, ...]]:
        n = len(self.factors)
        out = []

        def rec(path: tuple[str, ...], p: int) -> None:
            if p == n - 1:
                if self.factors[p].comp(path[-1], t).rank:
                    out.append(path + (t,))
                return
            mids = self.factors[p].right_base.objects
            for u in mids:
                if self.factors[p].comp(path[-1], u).rank:
                    rec(path + (u,), p + 1)

        rec((s,), 0)
        return out

    def _build(self, s: str, t: str):
        if (s, t) in self._cache:
            return self._cache[(s, t)]
        m = self.modulus
        keys: list[NaiveKey] = []
        orders: list[int] = []
        for path in self._paths(s, t):
            mods = [f.comp(path[p], path[p + 1]) for p, f in enumerate(self.factors)]
            for gens in itertools.product(*(range(M.rank) for M in mods)):
                keys.append((path, gens))
                orders.append(math.gcd(*(M.invariant_factors[g] for M, g in zip(mods, gens))) if gens else m)
        index = {k: i for i, k in enumerate(keys)}
        if len(self.factors) == 1:
            M = self.factors[0].comp(s, t)
            eye = np.eye(M.rank, dtype=np.int64)
            q = M.with_presentation(Presentation(M.orders, eye, eye))
            self._cache[(s, t)] = (keys, index, q)
            return self._cache[(s, t)]
        rels = self._relations(s, t, keys, index) if keys else []
        R = np.stack(rels, axis=1) if rels else None
        q = quotient(orders, R, m)
        self._cache[(s, t)] = (keys, index, q)
        return self._cache[(s, t)]

    def _relations(self, s, t, keys, index) -> list[np.ndarray]:
        """Balancing relations (x a) (x) y - x (x) (a y) at each junction."""
        n = len(self.factors)
        rels = []
        N = len(keys)
        for p in range(n - 1):
            K, L = self.factors[p], self.factors[p + 1]
            S = K.right_base
            if S.is_diagonal:
                continue
            seen = set()
            for path, gens in keys:
                # enumerate junction variants: left factor ends at tau, right starts at tau'
                pre, post = path[: p + 1], path[p + 2 :]
                key_ctx = (pre, post, gens[:p], gens[p + 2 :])
                if key_ctx in seen:
                    continue
                seen.add(key_ctx)
                a_obj = pre[-1]
                b_obj = post[0] if post else t
                for tau in S.objects:
                    Kx = K.comp(a_obj, tau)
                    if not Kx.rank:
                        continue
                    for tau2 in S.objects:
                        Ly = L.comp(tau2, b_obj)
                        Sa = S.comp(tau, tau2)
                        if not (Ly.rank and Sa.rank):
                            continue
                        Tr = K.right_tensor(a_obj, tau, tau2)
                        Tl = L.left_tensor(tau, tau2, b_obj)
                        for x in range(Kx.rank):
                            for y in range(Ly.rank):
                                for a in range(Sa.rank):
                                    v = np.zeros(N, dtype=np.int64)
                                    for k in np.nonzero(Tr[:, x, a])[0]:
                                        key = (pre + (tau2,) + post, gens[:p] + (int(k), y) + gens[p + 2 :])
                                        v[index[key]] += Tr[k, x, a]
                                    for k in np.nonzero(Tl[:, a, y])[0]:
                                        key = (pre + (tau,) + post, gens[:p] + (x, int(k)) + gens[p + 2 :])
                                        v[index[key]] -= Tl[k, a, y]
                                    if v.any():
                                        rels.append(v % self.modulus)
        return rels

    def component(self, s: str, t: str) -> FinModule:
        return self._build(s, t)[2]

    def naive_keys(self, s: str, t: str) -> list[NaiveKey]:
        return self._build(s, t)[0]

    def naive_index(self, s: str, t: str) -> dict[NaiveKey, int]:
        return self._build(s, t)[1]

    def to_canon(self, s: str, t: str) -> np.ndarray:
        return self.component(s, t).presentation.to_canon

    def from_canon(self, s: str, t: str) -> np.ndarray:
        return self.component(s, t).presentation.from_canon

    def pairs(self) -> list[Pair]:
        return [(s, t) for s in self.left_base.objects for t in self.right_base.objects]

    def naive_linear_map(
        self,
        target: TensorChain,
        src: Pair,
        tgt: Pair,
        fn: Callable[[NaiveKey], Iterable[tuple[NaiveKey, int]]],
    ) -> np.ndarray:
        """Matrix (canonical coords) of the map given on naive generators by fn."""
        S = self.component(*src)
        T = target.component(*tgt)
        if not S.rank or not T.rank:
            return np.zeros((T.rank, S.rank), dtype=np.int64)
        keys = self.naive_keys(*src)
        tidx = target.naive_index(*tgt)
        Nm = np.zeros((len(tidx), len(keys)), dtype=np.int64)
        for j, key in enumerate(keys):
            for k2, c in fn(key):
                i = tidx.get(k2)
                if i is None:
                    continue
                Nm[i, j] += c
        mat = target.to_canon(*tgt) @ (Nm % self.modulus) @ self.from_canon(*src)
        return T.reduce(mat)

    def as_bimodule(self) -> Bimodule:
        """The tensor product with its induced outer actions."""
        L, Rb = self.left_base, self.right_base
        comps = {(s, t): self.component(s, t) for s, t in self.pairs()}
        first, last = self.factors[0], self.factors[-1]
        left = {}
        for r in L.objects:
            for s in L.objects:
                if not L.comp(r, s).rank:
                    continue
                for t in Rb.objects:
                    if not comps[(s, t)].rank or not comps[(r, t)].rank:
                        continue
                    out = np.zeros((comps[(r, t)].rank, L.comp(r, s).rank, comps[(s, t)].rank), dtype=np.int64)
                    for a in range(L.comp(r, s).rank):

                        def act(key, a=a, r=r):
                            path, gens = key
                            T = first.left_tensor(r, path[0], path[1])
                            for k in np.nonzero(T[:, a, gens[0]])[0]:
                                yield ((r,) + path[1:], (int(k),) + gens[1:]), int(T[k, a, gens[0]])

                        out[:, a, :] = self.naive_linear_map(self, (s, t), (r, t), act)
                    left[(r, s, t)] = out
        right = {}
        for s in L.objects:
            for t in Rb.objects:
                if not comps[(s, t)].rank:
                    continue
                for u in Rb.objects:
                    if not Rb.comp(t, u).rank or not comps[(s, u)].rank:
                        continue
                    out = np.zeros((comps[(s, u)].rank, comps[(s, t)].rank, Rb.comp(t, u).rank), dtype=np.int64)
                    for b in range(Rb.comp(t, u).rank):

                        def act(key, b=b, u=u):
                            path, gens = key
                            T = last.right_tensor(path[-2], path[-1], u)
                            for k in np.nonzero(T[:, gens[-1], b])[0]:
                                yield (path[:-1] + (u,), gens[:-1] + (int(k),)), int(T[k, gens[-1], b])

                        out[:, :, b] = self.naive_linear_map(self, (s, t), (s, u), act)
                    right[(s, t, u)] = out
        return Bimodule(L, Rb, comps, left, right)


def concat_tensor(A: TensorChain, B: TensorChain, AB: TensorChain, s: str, t: str, r: str) -> np.ndarray:
    """T[k, i, j]: canonical coords in AB[s,r] of (gen i of A[s,t]) (x) (gen j of B[t,r]).

    AB must be the chain of A's factors followed by B's factors.
    """
    CA, CB, CAB = A.component(s, t), B.component(t, r), AB.component(s, r)
    if not (CA.rank and CB.rank and CAB.rank):
        return np.zeros((CAB.rank, CA.rank, CB.rank), dtype=np.int64)
    ka, kb = A.naive_keys(s, t), B.naive_keys(t, r)
    idx = AB.naive_index(s, r)
    P = np.zeros((len(idx), len(ka) * len(kb)), dtype=np.int64)
    for i, (pa, ga) in enumerate(ka):
        for j, (pb, gb) in enumerate(kb):
            P[idx[(pa + pb[1:], ga + gb)], i * len(kb) + j] = 1
    FA, FB = A.from_canon(s, t), B.from_canon(t, r)
    lifted = np.einsum("ai,bj->abij", FA, FB).reshape(len(ka) * len(kb), CA.rank * CB.rank)
    out = AB.to_canon(s, r) @ (P @ lifted % AB.modulus)
    return CAB.reduce(out).reshape(CAB.rank, CA.rank, CB.rank)


def tensor_over_base(N: Bimodule, M: Bimodule) -> Bimodule:
    """N (x)_R M where R is the right base of N and the left base of M."""
    if N.right_base is not M.left_base and N.right_base != M.left_base:
        raise ValueError("base mismatch: right base of N differs from left base of M")
    return TensorChain([N, M]).as_bimodule()


# ---------------------------------------------------------------------------
# flatness
# ---------------------------------------------------------------------------


def is_locally_free(M: FinModule) -> bool:
    """Projectivity over Z/m: each invariant factor's p-part is 1 or that of m."""
    m = M.modulus
    for d in M.invariant_factors:
        g = math.gcd(d, m)
        rest = m // g
        # for every prime p dividing d, the p-part of m must divide d
        if math.gcd(g, rest) != 1:
            return False
    return True


def _cyclic_ideals(R: BigRing, side: str) -> Iterator[tuple[str, Bimodule, Bimodule, np.ndarray]]:
    """Cyclic one-sided ideals J of R with the inclusion into R e (or e R).

    For side == "right" (testing right flatness) these are left ideals R*a
    inside the column R e_t, given as bimodules over (R, point); for "left"
    they are right ideals a*R inside e_s R, as bimodules over (point, R).
    """
    m = R.modulus
    P = point_ring(m)
    for (s, t), comp in sorted(R.components.items()):
        for a in comp.elements():
            if not a.any():
                continue
            if side == "right":
                col = {}
                left = {}
                subs = {}
                for u in R.objects:
                    amb = R.comp(u, t)
                    col[(u, "*")] = amb
                    gens = [R.multiply(u, s, t, x, a) for x in np.eye(R.comp(u, s).rank, dtype=np.int64)]
                    G = np.stack(gens, axis=1) if gens else np.zeros((amb.rank, 0), dtype=np.int64)
                    subs[(u, "*")] = Submodule(amb, G)
                for u in R.objects:
                    for v in R.objects:
                        left[(u, v, "*")] = R.tensor(u, v, t)
                column = Bimodule(R, P, col, left, {})
                J = column.sub_bimodule(subs)
                yield t, J, column, subs
            else:
                row = {}
                right = {}
                subs = {}
                for u in R.objects:
                    amb = R.comp(s, u)
                    row[("*", u)] = amb
                    gens = [R.multiply(s, t, u, a, x) for x in np.eye(R.comp(t, u).rank, dtype=np.int64)]
                    G = np.stack(gens, axis=1) if gens else np.zeros((amb.rank, 0), dtype=np.int64)
                    subs[("*", u)] = Submodule(amb, G)
                for u in R.objects:
                    for v in R.objects:
                        right[("*", u, v)] = R.tensor(s, u, v)
                rowmod = Bimodule(P, R, row, {}, right)
                J = rowmod.sub_bimodule(subs)
                yield s, J, rowmod, subs


def is_flat(K: Bimodule, side: str = "right") -> bool:
    """Flatness of K as a right (or left) module over its base.

    Over a diagonal base (Z/m)^objects this is local freeness of every
    component.  Otherwise K (x) J -> K (x) R e must stay injective for every
    cyclic ideal J of the base.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    base = K.right_base if side == "right" else K.left_base
    if base.is_diagonal:
        return all(is_locally_free(M) for M in K.components.values())
    return flat_by_ideals(K, side)


def flat_by_ideals(K: Bimodule, side: str = "right") -> bool:
    """Flatness decided by tensoring with every cyclic ideal inclusion."""
    base = K.right_base if side == "right" else K.left_base
    for _, J, amb, subs in _cyclic_ideals(base, side):
        if side == "right":
            chain_j = TensorChain([K, J])
            chain_a = TensorChain([K, amb])
            pairs = [(s, "*") for s in K.left_base.objects]
        else:
            chain_j = TensorChain([J, K])
            chain_a = TensorChain([amb, K])
            pairs = [("*", t) for t in K.right_base.objects]
        for pr in pairs:
            src = chain_j.component(*pr)
            if not src.rank:
                continue
            pos = 1 if side == "right" else 0

            def inc(key, pos=pos):
                path, gens = key
                obj = (path[pos], path[pos + 1])
                incl = subs[obj].inclusion.matrix
                for k in np.nonzero(incl[:, gens[pos]])[0]:
                    g2 = list(gens)
                    g2[pos] = int(k)
                    yield (path, tuple(g2)), int(incl[k, gens[pos]])

            mat = chain_j.naive_linear_map(chain_a, pr, pr, inc)
            f = ModuleMap(src, chain_a.component(*pr), mat)
            if not kernel(f).module.is_zero:
                return False
    return True


# ---------------------------------------------------------------------------
# restriction of base
# ---------------------------------------------------------------------------


@dataclass
class BaseMorphism:
    """A morphism phi: R' -> R of big rings over the same objects.

    ``maps[(s, t)]`` has shape (rank R[s,t], rank R'[s,t]).
    """

    source: BigRing
    target: BigRing
    maps: dict[Pair, np.ndarray] = field(default_factory=dict)

    def matrix(self, s: str, t: str) -> np.ndarray:
        M = self.maps.get((s, t))
        if M is None:
            return np.zeros((self.target.comp(s, t).rank, self.source.comp(s, t).rank), dtype=np.int64)
        return np.asarray(M, dtype=np.int64).reshape(self.target.comp(s, t).rank, self.source.comp(s, t).rank)

    def problems(self) -> list[str]:
        out = []
        R1, R = self.source, self.target
        for s in R.objects:
            img = R.comp(s, s).reduce(self.matrix(s, s) @ R1.units[s]) if R.comp(s, s).rank else np.zeros(0)
            if not np.array_equal(img, R.units[s]):
                out.append(f"not unital at object {s}")
        for s, t, r in itertools.product(R.objects, repeat=3):
            if not (R1.comp(s, t).rank and R1.comp(t, r).rank):
                continue
            lhs = np.einsum("ka,aij->kij", self.matrix(s, r), R1.tensor(s, t, r))
            rhs = np.einsum("kab,ai,bj->kij", R.tensor(s, t, r), self.matrix(s, t), self.matrix(t, r))
            if ((lhs - rhs) % R.comp(s, r).orders_array()[:, None, None]).any() if R.comp(s, r).rank else False:
                out.append(f"not multiplicative on ({s},{t},{r})")
        for (s, t), M in self.maps.items():
            f = ModuleMap(R1.comp(s, t), R.comp(s, t), self.matrix(s, t))
            if not f.is_well_defined():
                out.append(f"not well defined on ({s},{t})")
        return out

    def compose(self, inner: BaseMorphism) -> BaseMorphism:
        """self after inner."""
        maps = {k: self.matrix(*k) @ inner.matrix(*k) for k in self.target.objects.pairs()}
        return BaseMorphism(inner.source, self.target, maps)


def unit_morphism(R: BigRing) -> BaseMorphism:
    """The morphism (Z/m)^objects -> R sending each idempotent to the unit."""
    D = BigRing.diagonal(R.objects, R.modulus)
    maps = {(s, s): np.asarray(R.units[s], dtype=np.int64).reshape(-1, 1) for s in R.objects}
    return BaseMorphism(D, R, maps)


def restrict_base(A: BigGradedRing, phi: BaseMorphism) -> BigGradedRing:
    """Replace A_0 by R' and pull the A_0-actions back along phi."""
    if phi.target != A.base:
        raise ValueError("morphism target is not the degree-zero part")
    bad = phi.problems()
    if bad:
        raise ValueError("; ".join(bad))
    R1 = phi.source
    mult = {}
    for (n1, n2, s, t, r), T in A.mult.items():
        if n1 == 0:
            mult[(n1, n2, s, t, r)] = np.einsum("kaj,ai->kij", T, phi.matrix(s, t))
        elif n2 == 0:
            mult[(n1, n2, s, t, r)] = np.einsum("kia,aj->kij", T, phi.matrix(t, r))
        else:
            mult[(n1, n2, s, t, r)] = T
    return BigGradedRing(R1, A.dmax, dict(A.components), mult, A.name)


def restrict_to_diagonal(A: BigGradedRing) -> BigGradedRing:
    return restrict_base(A, unit_morphism(A.base))
