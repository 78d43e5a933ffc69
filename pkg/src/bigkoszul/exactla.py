"""Exact linear algebra over Z and Z/m.

Two Smith normal form routines live here.  ``smith_normal_form`` works over
the integers with Python's arbitrary precision ints.  ``snf_mod`` works over
Z/m with numpy int64 arrays; entries stay below m, so products stay below m^2
and never overflow for the moduli this package is meant for.

A ``FinModule`` is a finitely generated Z/m-module stored by its canonical
invariant factors d1 | d2 | ... | dk (each > 1 and dividing m).  Elements are
integer coordinate vectors with respect to the canonical generators, and maps
are integer matrices whose columns are images of source generators.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

# Largest modulus for which products of two reduced entries, summed over a
# few thousand terms, still fit in int64.
MAX_MODULUS = 1 << 20


class ComplexError(ValueError):
    """Raised when consecutive differentials do not compose to zero."""


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with x*a + y*b = g = gcd(a, b) and g >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


# ---------------------------------------------------------------------------
# Integer matrices and integer Smith normal form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntMatrix:
    """A dense integer matrix with arbitrary-precision entries."""

    rows: int
    cols: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("entry array must have exactly rows x cols entries")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> IntMatrix:
        data = tuple(tuple(int(x) for x in r) for r in rows)
        if cols is None:
            cols = len(data[0]) if data else 0
        return cls(len(data), cols, data)

    @classmethod
    def identity(cls, n: int) -> IntMatrix:
        return cls(n, n, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> IntMatrix:
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.entries]

    def __matmul__(self, other: IntMatrix) -> IntMatrix:
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        cols = list(zip(*other.entries)) if other.rows else [()] * other.cols
        out = [
            [sum(a * b for a, b in zip(r, c)) for c in cols] if other.cols else []
            for r in self.entries
        ]
        return IntMatrix.from_rows(out, other.cols)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        return self.entries[ij[0]][ij[1]]

    def diagonal(self) -> list[int]:
        return [self.entries[i][i] for i in range(min(self.rows, self.cols))]


def smith_normal_form(M: IntMatrix | Sequence[Sequence[int]]) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Integer Smith normal form.

    Returns (U, D, V) with U*M*V = D, U and V unimodular, D diagonal with
    nonnegative entries d1 | d2 | ... .

    >>> U, D, V = smith_normal_form([[2, 4], [6, 8]])
    >>> D.diagonal()
    [2, 4]
    """
    if not isinstance(M, IntMatrix):
        M = IntMatrix.from_rows(M)
    r, c = M.rows, M.cols
    A = M.tolist()
    U = IntMatrix.identity(r).tolist()
    V = IntMatrix.identity(c).tolist()

    def swap_rows(i: int, j: int) -> None:
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i: int, j: int) -> None:
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst: int, src: int, q: int) -> None:
        A[dst] = [a + q * b for a, b in zip(A[dst], A[src])]
        U[dst] = [a + q * b for a, b in zip(U[dst], U[src])]

    def add_col(dst: int, src: int, q: int) -> None:
        for row in A:
            row[dst] += q * row[src]
        for row in V:
            row[dst] += q * row[src]

    for t in range(min(r, c)):
        while True:
            best = None
            for i in range(t, r):
                for j in range(t, c):
                    v = A[i][j]
                    if v and (best is None or abs(v) < best[0]):
                        best = (abs(v), i, j)
            if best is None:
                break
            _, i, j = best
            swap_rows(t, i)
            swap_cols(t, j)
            p = A[t][t]
            clean = True
            for i in range(t + 1, r):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // p))
                    clean = clean and A[i][t] == 0
            for j in range(t + 1, c):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // p))
                    clean = clean and A[t][j] == 0
            if not clean:
                continue
            bad = next(
                (i for i in range(t + 1, r) for j in range(t + 1, c) if A[i][j] % p),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
            U[t] = [-a for a in U[t]]
    return IntMatrix.from_rows(U, r), IntMatrix.from_rows(A, c), IntMatrix.from_rows(V, c)


def unimodular_inverse(U: IntMatrix) -> IntMatrix:
    """Exact inverse of a unimodular integer matrix (fraction-free Gauss-Jordan)."""
    from fractions import Fraction

    n = U.rows
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(U.entries)]
    for col in range(n):
        piv = next(i for i in range(col, n) if A[i][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [x / p for x in A[col]]
        for i in range(n):
            if i != col and A[i][col] != 0:
                f = A[i][col]
                A[i] = [x - f * y for x, y in zip(A[i], A[col])]
    out = [[int(x) for x in row[n:]] for row in A]
    return IntMatrix.from_rows(out, n)


def integer_invariant_factors(M: IntMatrix | Sequence[Sequence[int]], rows: int | None = None) -> list[int]:
    """Invariant factors of Z^rows / im(M); a 0 entry stands for a free summand Z."""
    if not isinstance(M, IntMatrix):
        M = IntMatrix.from_rows(M, None) if M else IntMatrix.zeros(rows or 0, 0)
    _, D, _ = smith_normal_form(M)
    diag = D.diagonal() + [0] * (M.rows - min(M.rows, M.cols))
    return [d for d in diag if d != 1]


# ---------------------------------------------------------------------------
# Smith normal form over Z/m
# ---------------------------------------------------------------------------


def unit_part(a: int, m: int) -> tuple[int, int]:
    """Write a = u*g mod m with g = gcd(a, m) and u a unit; return (u, g)."""
    a %= m
    g = math.gcd(a, m)
    if g == m:
        return 1, m
    step = m // g
    u = a // g
    while math.gcd(u, m) != 1:
        u += step
    return u % m, g


@dataclass
class ModSNF:
    """Result of ``snf_mod``: U*A*V = diag(d) mod m, with Uinv = U^-1.

    ``diag`` has min(rows, cols) entries, each a divisor of m (m encodes a
    zero pivot), forming a divisibility chain.
    """

    modulus: int
    U: np.ndarray
    Uinv: np.ndarray
    V: np.ndarray
    diag: list[int]


def _as_mod_array(A, m: int, shape: tuple[int, int] | None = None) -> np.ndarray:
    arr = np.array(A, dtype=object if m > MAX_MODULUS else np.int64)
    if shape is not None:
        arr = arr.reshape(shape)
    if arr.ndim != 2:
        raise ValueError("matrix expected")
    if m > MAX_MODULUS:
        raise OverflowError(f"modulus {m} too large for int64 elimination")
    return arr.astype(np.int64) % m


def snf_mod(A, m: int, shape: tuple[int, int] | None = None) -> ModSNF:
    """Smith normal form of an integer matrix over Z/m.

    Pivots are normalized to gcd(pivot, m) by a unit rescaling, so the
    diagonal is a chain of divisors of m under ideal inclusion.
    """
    A = _as_mod_array(A, m, shape).copy()
    r, c = A.shape
    U = np.eye(r, dtype=np.int64)
    Uinv = np.eye(r, dtype=np.int64)
    V = np.eye(c, dtype=np.int64)
    diag: list[int] = []
    if m == 1:
        return ModSNF(m, U, Uinv, V, [1] * min(r, c))
    for t in range(min(r, c)):
        sub = A[t:, t:]
        nz = sub != 0
        if not nz.any():
            diag.extend([m] * (min(r, c) - t))
            break
        gs = np.where(nz, np.gcd(sub, m), m + 1)
        i, j = np.unravel_index(int(np.argmin(gs)), gs.shape)
        i += t
        j += t
        if i != t:
            A[[t, i]] = A[[i, t]]
            U[[t, i]] = U[[i, t]]
            Uinv[:, [t, i]] = Uinv[:, [i, t]]
        if j != t:
            A[:, [t, j]] = A[:, [j, t]]
            V[:, [t, j]] = V[:, [j, t]]
        while True:
            u, g = unit_part(int(A[t, t]), m)
            if u != 1:
                uinv = pow(u, -1, m)
                A[t] = A[t] * uinv % m
                U[t] = U[t] * uinv % m
                Uinv[:, t] = Uinv[:, t] * u % m
            # clear column t below the pivot
            col = A[t + 1 :, t]
            if col.any():
                div = col % g == 0
                q = np.where(div, col // g, 0)
                if q.any():
                    A[t + 1 :] = (A[t + 1 :] - np.outer(q, A[t])) % m
                    U[t + 1 :] = (U[t + 1 :] - np.outer(q, U[t])) % m
                    Uinv[:, t] = (Uinv[:, t] + Uinv[:, t + 1 :] @ q) % m
                if not div.all():
                    i = t + 1 + int(np.argmin(div))
                    b = int(A[i, t])
                    h, x, y = xgcd(g, b)
                    a_h, b_h = g // h, b // h
                    rt, ri = A[t].copy(), A[i].copy()
                    A[t], A[i] = (x * rt + y * ri) % m, (-b_h * rt + a_h * ri) % m
                    rt, ri = U[t].copy(), U[i].copy()
                    U[t], U[i] = (x * rt + y * ri) % m, (-b_h * rt + a_h * ri) % m
                    ct, ci = Uinv[:, t].copy(), Uinv[:, i].copy()
                    Uinv[:, t], Uinv[:, i] = (a_h * ct + b_h * ci) % m, (-y * ct + x * ci) % m
                    continue
            # clear row t right of the pivot
            row = A[t, t + 1 :]
            if row.any():
                div = row % g == 0
                q = np.where(div, row // g, 0)
                if q.any():
                    A[:, t + 1 :] = (A[:, t + 1 :] - np.outer(A[:, t], q)) % m
                    V[:, t + 1 :] = (V[:, t + 1 :] - np.outer(V[:, t], q)) % m
                if not div.all():
                    j = t + 1 + int(np.argmin(div))
                    b = int(A[t, j])
                    h, x, y = xgcd(g, b)
                    a_h, b_h = g // h, b // h
                    ct, cj = A[:, t].copy(), A[:, j].copy()
                    A[:, t], A[:, j] = (x * ct + y * cj) % m, (-b_h * ct + a_h * cj) % m
                    ct, cj = V[:, t].copy(), V[:, j].copy()
                    V[:, t], V[:, j] = (x * ct + y * cj) % m, (-b_h * ct + a_h * cj) % m
                    continue
            rest = A[t + 1 :, t + 1 :]
            if g > 1 and rest.size and (rest % g).any():
                i = t + 1 + int(np.argwhere(rest % g)[0][0])
                A[t] = (A[t] + A[i]) % m
                U[t] = (U[t] + U[i]) % m
                Uinv[:, i] = (Uinv[:, i] - Uinv[:, t]) % m
                continue
            break
        diag.append(g)
    return ModSNF(m, U, Uinv, V, diag)


class LinearSolver:
    """Solves A x = b over Z/m for a fixed matrix A, using one SNF."""

    def __init__(self, A, m: int, shape: tuple[int, int] | None = None):
        A = _as_mod_array(A, m, shape)
        self.modulus = m
        self.shape = A.shape
        self.snf = snf_mod(A, m)

    def solve(self, b) -> np.ndarray | None:
        """Return one solution x, or None if A x = b has no solution."""
        X = self.solve_many(np.asarray(b, dtype=np.int64).reshape(-1, 1))
        return None if X is None else X[:, 0]

    def solvable(self, B) -> np.ndarray:
        """Boolean mask of the columns of B lying in the image of A."""
        m = self.modulus
        r, c = self.shape
        B = np.asarray(B, dtype=np.int64).reshape(r, -1) % m
        Y = self.snf.U @ B % m
        ok = np.ones(B.shape[1], dtype=bool)
        k = len(self.snf.diag)
        for i, d in enumerate(self.snf.diag):
            ok &= Y[i] % d == 0
        if k < r:
            ok &= ~Y[k:].any(axis=0)
        return ok

    def solve_many(self, B) -> np.ndarray | None:
        """Solve for every column of B at once; None if any column fails."""
        m = self.modulus
        r, c = self.shape
        B = np.asarray(B, dtype=np.int64).reshape(r, -1) % m
        if not self.solvable(B).all():
            return None
        Y = self.snf.U @ B % m
        Z = np.zeros((c, B.shape[1]), dtype=np.int64)
        for i, d in enumerate(self.snf.diag):
            if d != m:
                Z[i] = Y[i] // d
        return self.snf.V @ Z % m

    def kernel_generators(self) -> np.ndarray:
        """Columns generating {x : A x = 0 mod m}."""
        m = self.modulus
        r, c = self.shape
        gens = []
        for i in range(c):
            d = self.snf.diag[i] if i < len(self.snf.diag) else m
            if d == 1:
                continue
            gens.append(self.snf.V[:, i] * (m // d) % m)
        if not gens:
            return np.zeros((c, 0), dtype=np.int64)
        return np.stack(gens, axis=1)


# ---------------------------------------------------------------------------
# Modules, maps, presentations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Presentation:
    """Links an ambient module (Z/o_1 + ... + Z/o_n) to canonical coordinates.

    ``to_canon`` (k x n) sends ambient coordinates to canonical ones and
    ``from_canon`` (n x k) sends canonical generators to ambient elements.
    """

    ambient_orders: tuple[int, ...]
    to_canon: np.ndarray
    from_canon: np.ndarray


class CoordinateSpace:
    """Shared behaviour of modules presented as Z/o_1 + ... + Z/o_k.

    Subclasses provide ``modulus`` and ``orders``.
    """

    modulus: int

    @property
    def orders(self) -> tuple[int, ...]:
        raise NotImplementedError

    @property
    def rank(self) -> int:
        """Number of coordinate generators."""
        return len(self.orders)

    @property
    def order(self) -> int:
        return math.prod(self.orders)

    @property
    def is_zero(self) -> bool:
        return not self.orders

    @property
    def is_free(self) -> bool:
        return all(f == self.modulus for f in self.orders)

    def orders_array(self) -> np.ndarray:
        return np.array(self.orders, dtype=np.int64)

    def reduce(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64)
        if not self.rank:
            return v.reshape((0,) + v.shape[1:]) if v.ndim else v
        o = self.orders_array()
        return v % (o if v.ndim == 1 else o.reshape((-1,) + (1,) * (v.ndim - 1)))

    def zero(self) -> np.ndarray:
        return np.zeros(self.rank, dtype=np.int64)

    def basis(self) -> list[np.ndarray]:
        return [np.eye(self.rank, dtype=np.int64)[i] for i in range(self.rank)]

    def elements(self) -> Iterator[np.ndarray]:
        for t in itertools.product(*(range(f) for f in self.orders)):
            yield np.array(t, dtype=np.int64)

    def is_zero_element(self, v) -> bool:
        return not self.reduce(v).any()

    def canonical(self) -> FinModule:
        return quotient(self.orders, None, self.modulus)


@dataclass(frozen=True)
class CoordModule(CoordinateSpace):
    """A direct sum Z/o_1 + ... + Z/o_k kept in the given coordinates."""

    modulus: int
    summand_orders: tuple[int, ...] = ()

    @property
    def orders(self) -> tuple[int, ...]:
        return self.summand_orders


def direct_sum(modules: Sequence[CoordinateSpace], m: int) -> tuple[CoordModule, list[int]]:
    """Concatenated coordinates of several modules, with block offsets."""
    orders: list[int] = []
    offsets = []
    for M in modules:
        offsets.append(len(orders))
        orders.extend(M.orders)
    offsets.append(len(orders))
    return CoordModule(m, tuple(orders)), offsets


@dataclass(frozen=True)
class FinModule(CoordinateSpace):
    """Finitely generated Z/m-module in invariant-factor form."""

    modulus: int
    invariant_factors: tuple[int, ...] = ()
    presentation: Presentation | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        m = self.modulus
        if m < 1:
            raise ValueError("modulus must be positive")
        fs = tuple(int(f) for f in self.invariant_factors)
        for f in fs:
            if f <= 1 or m % f:
                raise ValueError(f"invalid invariant factor {f} for modulus {m}")
        for a, b in zip(fs, fs[1:]):
            if b % a:
                raise ValueError(f"invariant factors {fs} do not form a divisibility chain")
        object.__setattr__(self, "invariant_factors", fs)

    @classmethod
    def free(cls, m: int, rank: int) -> FinModule:
        return cls(m, (m,) * rank if m > 1 else ())

    @classmethod
    def zero_module(cls, m: int) -> FinModule:
        return cls(m, ())

    @property
    def orders(self) -> tuple[int, ...]:
        return self.invariant_factors

    @property
    def factors(self) -> tuple[int, ...]:
        return self.invariant_factors

    def with_presentation(self, p: Presentation) -> FinModule:
        return FinModule(self.modulus, self.invariant_factors, p)

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for f, grp in itertools.groupby(self.invariant_factors):
            n = len(list(grp))
            parts.append(f"(Z/{f})^{n}" if n > 1 else f"Z/{f}")
        return " + ".join(parts)

    def direct_sum(self, other: CoordinateSpace) -> FinModule:
        return quotient(self.invariant_factors + tuple(other.orders), None, self.modulus)


def quotient(ambient_orders: Sequence[int], relations, m: int) -> FinModule:
    """The module (Z/o_1 + ... + Z/o_n) / <columns of relations>, with presentation.

    Each o_i must divide m.
    """
    orders = [int(o) for o in ambient_orders]
    n = len(orders)
    if n == 0:
        empty = np.zeros((0, 0), dtype=np.int64)
        return FinModule(m, (), Presentation((), empty, empty))
    cols = [np.diag(np.array(orders, dtype=np.int64))]
    if relations is not None:
        R = np.asarray(relations, dtype=np.int64)
        if R.size:
            cols.append(R.reshape(n, -1) % m)
    full = np.concatenate(cols, axis=1)
    snf = snf_mod(full, m)
    diag = snf.diag + [m] * (n - len(snf.diag))
    keep = [i for i, d in enumerate(diag) if d != 1]
    factors = tuple(diag[i] for i in keep)
    if keep:
        to_canon = snf.U[keep] % np.array(factors, dtype=np.int64)[:, None]
    else:
        to_canon = np.zeros((0, n), dtype=np.int64)
    from_canon = snf.Uinv[:, keep] % np.array(orders, dtype=np.int64)[:, None]
    return FinModule(m, factors, Presentation(tuple(orders), to_canon, from_canon))


def cokernel_mod_m(M, m: int, rows: int | None = None) -> FinModule:
    """Z^rows / (im M + m Z^rows) in invariant-factor form.

    >>> str(cokernel_mod_m([[2]], 4))
    'Z/2'
    """
    if m < 2:
        raise ValueError("modulus must be at least 2")
    if isinstance(M, IntMatrix):
        rows = M.rows
        M = np.array(M.entries, dtype=object).reshape(M.rows, M.cols)
    arr = np.array(M, dtype=object)
    if rows is None:
        rows = arr.shape[0]
    arr = arr.reshape(rows, -1) if arr.size else np.zeros((rows, 0), dtype=object)
    red = np.vectorize(lambda x: int(x) % m, otypes=[np.int64])(arr) if arr.size else np.zeros((rows, 0), dtype=np.int64)
    return quotient([m] * rows, red, m)


@dataclass(frozen=True, eq=False)
class ModuleMap:
    """A Z/m-linear map between FinModules given in canonical coordinates."""

    source: FinModule
    target: FinModule
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=np.int64).reshape(self.target.rank, self.source.rank)
        if self.target.rank:
            mat = mat % self.target.orders_array()[:, None]
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def zero(cls, source: FinModule, target: FinModule) -> ModuleMap:
        return cls(source, target, np.zeros((target.rank, source.rank), dtype=np.int64))

    @classmethod
    def identity(cls, M: FinModule) -> ModuleMap:
        return cls(M, M, np.eye(M.rank, dtype=np.int64))

    def is_well_defined(self) -> bool:
        s = self.source.orders_array()
        t = self.target.orders_array()
        if not self.source.rank or not self.target.rank:
            return True
        return not ((self.matrix * s[None, :]) % t[:, None]).any()

    def __call__(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64)
        return self.target.reduce(self.matrix @ v)

    def compose(self, other: ModuleMap) -> ModuleMap:
        """self after other."""
        if other.target != self.source:
            raise ValueError("maps not composable")
        return ModuleMap(other.source, self.target, self.matrix @ other.matrix)

    def __matmul__(self, other: ModuleMap) -> ModuleMap:
        return self.compose(other)

    @property
    def is_zero(self) -> bool:
        return not self.matrix.any()


class Submodule:
    """The submodule of ``ambient`` generated by the columns of ``gens``.

    Gives the canonical module, the inclusion map, and coordinates of
    ambient elements that lie in the submodule.
    """

    def __init__(self, ambient: FinModule, gens):
        m = ambient.modulus
        k = ambient.rank
        G = np.asarray(gens, dtype=np.int64)
        G = G.reshape(k, -1) if k else np.zeros((0, 0), dtype=np.int64)
        G = ambient.reduce(G) if k else G
        self.ambient = ambient
        self.gens = G
        g = G.shape[1]
        s = ambient.orders_array()
        stacked = np.concatenate([G, np.diag(s).reshape(k, k)], axis=1) if k else np.zeros((0, g), dtype=np.int64)
        self._solver = LinearSolver(stacked, m, (k, g + k))
        rel = self._solver.kernel_generators()[:g] if k else np.eye(g, dtype=np.int64)
        q = quotient([m] * g, rel, m)
        self.module = q
        self._to_canon = q.presentation.to_canon
        incl = G @ q.presentation.from_canon if g else np.zeros((k, 0), dtype=np.int64)
        self.inclusion = ModuleMap(q, ambient, incl)

    def contains(self, v) -> bool:
        if not self.ambient.rank:
            return True
        return bool(self._solver.solvable(np.asarray(v, dtype=np.int64).reshape(self.ambient.rank, 1))[0])

    def contains_all(self, V) -> bool:
        if not self.ambient.rank:
            return True
        return bool(self._solver.solvable(np.asarray(V, dtype=np.int64).reshape(self.ambient.rank, -1)).all())

    def coordinates(self, v) -> np.ndarray | None:
        """Canonical coordinates of an ambient element, or None if outside."""
        X = self.coordinates_many(np.asarray(v, dtype=np.int64).reshape(-1, 1))
        return None if X is None else X[:, 0]

    def coordinates_many(self, V) -> np.ndarray | None:
        k = self.ambient.rank
        g = self.gens.shape[1]
        V = np.asarray(V, dtype=np.int64)
        if k == 0:
            return np.zeros((self.module.rank, V.shape[1] if V.ndim == 2 else 1), dtype=np.int64)
        V = V.reshape(k, -1)
        X = self._solver.solve_many(V)
        if X is None:
            return None
        return self.module.reduce(self._to_canon @ X[:g])


def kernel(f: ModuleMap) -> Submodule:
    """Kernel of f as a submodule of its source."""
    S, T = f.source, f.target
    m = S.modulus
    k, l = S.rank, T.rank
    if l == 0:
        return Submodule(S, np.eye(k, dtype=np.int64))
    A = np.concatenate([f.matrix, np.diag(T.orders_array())], axis=1)
    gens = LinearSolver(A, m, (l, k + l)).kernel_generators()[:k]
    return Submodule(S, gens)


def image(f: ModuleMap) -> Submodule:
    """Image of f as a submodule of its target."""
    return Submodule(f.target, f.matrix)


def cokernel(f: ModuleMap) -> tuple[FinModule, ModuleMap]:
    """Cokernel of f with the projection from the target."""
    T = f.target
    q = quotient(T.orders, f.matrix, T.modulus)
    return q, ModuleMap(T, q, q.presentation.to_canon)


def intersection(a: Submodule, b: Submodule) -> Submodule:
    """Intersection of two submodules of the same ambient module."""
    if a.ambient != b.ambient:
        raise ValueError("different ambient modules")
    M = a.ambient
    m = M.modulus
    k = M.rank
    if k == 0:
        return Submodule(M, np.zeros((0, 0), dtype=np.int64))
    ga, gb = a.gens, b.gens
    A = np.concatenate([ga, -gb % m, np.diag(M.orders_array())], axis=1)
    ker = LinearSolver(A, m, (k, A.shape[1])).kernel_generators()
    return Submodule(M, ga @ ker[: ga.shape[1]] % m)


def submodule_sum(subs: Sequence[Submodule], ambient: FinModule | None = None) -> Submodule:
    if not subs:
        if ambient is None:
            raise ValueError("ambient module needed for an empty sum")
        return Submodule(ambient, np.zeros((ambient.rank, 0), dtype=np.int64))
    return Submodule(subs[0].ambient, np.concatenate([s.gens for s in subs], axis=1))


# ---------------------------------------------------------------------------
# Complexes
# ---------------------------------------------------------------------------


@dataclass
class Homology:
    """ker(d_out)/im(d_in) with maps between cycles and homology coordinates."""

    module: FinModule
    cycles: Submodule
    _to_canon: np.ndarray
    _from_canon: np.ndarray

    def project(self, z) -> np.ndarray:
        """Homology class of a cycle (given in coordinates of the term)."""
        c = self.cycles.coordinates(z)
        if c is None:
            raise ValueError("not a cycle")
        return self.module.reduce(self._to_canon @ c)

    def lift(self, h) -> np.ndarray:
        """A cycle representing the class with coordinates h."""
        h = np.asarray(h, dtype=np.int64)
        return self.cycles.inclusion(self._from_canon @ h)

    def representatives(self) -> list[np.ndarray]:
        return [self.lift(e) for e in self.module.basis()]


def homology(d_in: ModuleMap | None, d_out: ModuleMap | None, term: FinModule | None = None) -> Homology:
    """Homology at the middle of  --d_in-->  term  --d_out-->."""
    if term is None:
        term = d_out.source if d_out is not None else d_in.target
    m = term.modulus
    if d_out is None:
        cyc = Submodule(term, np.eye(term.rank, dtype=np.int64))
    else:
        cyc = kernel(d_out)
    K = cyc.module
    if d_in is None or d_in.source.rank == 0:
        rel = np.zeros((K.rank, 0), dtype=np.int64)
    else:
        rel = cyc.coordinates_many(d_in.matrix)
        if rel is None:
            raise ComplexError("image of the incoming differential is not made of cycles")
    q = quotient(K.invariant_factors, rel, m)
    return Homology(q, cyc, q.presentation.to_canon, q.presentation.from_canon)


@dataclass
class BoundedComplex:
    """Cochain complex: d[k] maps terms[k] to terms[k+1].

    Positions missing from ``terms`` hold the zero module.
    """

    modulus: int
    terms: dict[int, FinModule]
    differentials: dict[int, ModuleMap]

    def term(self, k: int) -> FinModule:
        return self.terms.get(k, FinModule(self.modulus, ()))

    def differential(self, k: int) -> ModuleMap | None:
        d = self.differentials.get(k)
        if d is None and self.term(k).rank and self.term(k + 1).rank:
            return ModuleMap.zero(self.term(k), self.term(k + 1))
        return d

    @property
    def positions(self) -> list[int]:
        return sorted(self.terms)

    def check(self) -> list[int]:
        """Positions k where d[k+1] o d[k] is nonzero (empty means d o d = 0)."""
        bad = []
        for k in self.positions:
            a, b = self.differentials.get(k), self.differentials.get(k + 1)
            if a is not None and b is not None and not b.compose(a).is_zero:
                bad.append(k)
        return bad

    def homology(self, k: int) -> Homology:
        T = self.term(k)
        d_out = self.differential(k) if T.rank else None
        d_in = self.differential(k - 1) if T.rank else None
        return homology(d_in, d_out, T)


def homology_at(C: BoundedComplex, k: int) -> FinModule:
    """ker(d_k)/im(d_{k-1}); positions outside the complex give the zero module."""
    if k not in C.terms:
        return FinModule(C.modulus, ())
    return C.homology(k).module


def solve_linear(A: ModuleMap, b) -> np.ndarray | None:
    """Some x with A(x) = b, or None when no solution exists."""
    S, T = A.source, A.target
    m = S.modulus
    l = T.rank
    if l == 0:
        return S.zero()
    stacked = np.concatenate([A.matrix, np.diag(T.orders_array())], axis=1)
    x = LinearSolver(stacked, m, (l, S.rank + l)).solve(np.asarray(b, dtype=np.int64))
    if x is None:
        return None
    return S.reduce(x[: S.rank])


def enumerate_span(gens: np.ndarray, orders: Iterable[int], reduce_mod: np.ndarray | int) -> Iterator[np.ndarray]:
    """All combinations sum c_i g_i with 0 <= c_i < orders[i]."""
    gens = np.asarray(gens, dtype=np.int64)
    orders = list(orders)
    for coeffs in itertools.product(*(range(o) for o in orders)):
        v = gens @ np.array(coeffs, dtype=np.int64) if orders else np.zeros(gens.shape[0], dtype=np.int64)
        yield v % reduce_mod


# ---------------------------------------------------------------------------
# Linear algebra over a prime field
# ---------------------------------------------------------------------------


def rref(M: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over F_p with zero rows removed."""
    A = np.array(M, dtype=np.int64) % p
    if A.ndim != 2 or not A.size:
        return A.reshape(0, A.shape[1] if A.ndim == 2 else 0), []
    rows, cols = A.shape
    piv = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if not nz.size:
            continue
        k = r + nz[0]
        if k != r:
            A[[r, k]] = A[[k, r]]
        A[r] = A[r] * pow(int(A[r, c]), -1, p) % p
        col = A[:, c].copy()
        col[r] = 0
        A = (A - np.outer(col, A[r])) % p
        piv.append(c)
        r += 1
    return A[:r], piv


def rank(M: np.ndarray, p: int) -> int:
    return len(rref(M, p)[1])


def left_nullspace(M: np.ndarray, p: int) -> np.ndarray:
    """Rows x with x @ M = 0, as a basis (k x rows)."""
    return right_nullspace(np.asarray(M).T, p)


def right_nullspace(M: np.ndarray, p: int) -> np.ndarray:
    """Basis (as rows) of {v : M @ v = 0}."""
    M = np.asarray(M, dtype=np.int64)
    cols = M.shape[1]
    R, piv = rref(M, p)
    free = [c for c in range(cols) if c not in piv]
    out = np.zeros((len(free), cols), dtype=np.int64)
    for i, f in enumerate(free):
        out[i, f] = 1
        for r, c in enumerate(piv):
            out[i, c] = -R[r, f] % p
    return out


def in_rowspace(B: np.ndarray, V: np.ndarray, p: int) -> np.ndarray:
    """Boolean per row of V: does it lie in the row space of B?"""
    V = np.atleast_2d(np.asarray(V, dtype=np.int64))
    if not B.shape[0]:
        return ~(V % p).any(axis=1)
    H = right_nullspace(B, p)
    if not H.shape[0]:
        return np.ones(V.shape[0], dtype=bool)
    return ~((V @ H.T) % p).any(axis=1)


def coords_in_rowspace(basis: np.ndarray, V: np.ndarray, p: int) -> np.ndarray | None:
    """Coordinates C with C @ basis = V, or None."""
    t = basis.shape[0]
    aug = np.concatenate([basis.T, V.T], axis=1) % p
    R, piv = rref(aug, p)
    if any(c >= t for c in piv):
        return None
    C = np.zeros((V.shape[0], t), dtype=np.int64)
    for r, c in enumerate(piv):
        C[:, c] = R[r, t:]
    return C


def solve_rows(B: np.ndarray, v: np.ndarray, p: int) -> np.ndarray | None:
    """x with x @ B = v over F_p."""
    k = B.shape[0]
    aug = np.concatenate([B.T, v.reshape(-1, 1)], axis=1) % p
    R, piv = rref(aug, p)
    if k in piv:
        return None
    x = np.zeros(k, dtype=np.int64)
    for r, c in enumerate(piv):
        x[c] = R[r, k]
    return x
