"""Colored matrices over a big graded ring and the matrix Koszulity conditions.

Two witness shapes are supported.  The ``general`` one asks for K (degree
0), M' (degree 1), P (degree 1) and Q (degree n-1) with

    M1 = K1 M'1,  M(i+1) Ki = K(i+1) M'(i+1),  N Km = Q P,
    M'(i+1) M'(i) = 0,  P M'm = 0;

the ``triangulated`` one asks for L (degree 1), M' (degree 1), Q with

    N = Q Lm,  L(i) M(i) = M'(i) L(i-1),  M'(i+1) M'(i) = 0,  Q M'm = 0.

The search works over a prime field with a diagonal degree-zero part.  For a
fixed chain M and fixed (K, M') the admissible N form a linear subspace, so
the quantifier over N is settled by linear algebra plus enumeration of a
finite vector space.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .bigring import BigGradedRing
from .exactla import in_rowspace, rank, rref, right_nullspace
from .exactla import coords_in_rowspace as _coords
from .exactla import solve_rows as _solve_rows

DEFAULT_BUDGET = 5_000_000


def budget_from_env() -> int:
    raw = os.environ.get("BIGKOSZUL_BUDGET")
    return int(raw) if raw else DEFAULT_BUDGET


class BudgetExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# linear algebra over F_p
# ---------------------------------------------------------------------------


def subspaces(basis: np.ndarray, max_dim: int, p: int, contain: np.ndarray | None = None) -> Iterator[np.ndarray]:
    """Subspaces of span(basis) of dimension <= max_dim containing span(contain).

    Yields RREF bases (rows) in increasing dimension, lexicographic within a
    dimension.  ``basis`` must have independent rows.
    """
    t = basis.shape[0]
    dim_v = basis.shape[1]
    base = np.zeros((0, dim_v), dtype=np.int64)
    if contain is not None and contain.size:
        base, _ = rref(contain, p)
    b0 = base.shape[0]
    if b0 > max_dim:
        return
    if b0:
        # coordinates of the forced part inside span(basis)
        coords = _coords(basis, base, p)
        if coords is None:
            return
        forced = rref(coords, p)[0]
    else:
        forced = np.zeros((0, t), dtype=np.int64)
    seen = set()
    for extra in range(0, max_dim - b0 + 1):
        for R in _grassmannian(t, b0 + extra, p):
            if b0 and not in_rowspace(R, forced, p).all():
                continue
            key = R.tobytes()
            if key in seen:
                continue
            seen.add(key)
            yield (R @ basis) % p


def _grassmannian(t: int, k: int, p: int) -> Iterator[np.ndarray]:
    """All k x t matrices in RREF of full rank k over F_p."""
    if k == 0:
        yield np.zeros((0, t), dtype=np.int64)
        return
    if k > t:
        return
    for piv in itertools.combinations(range(t), k):
        free = [(r, c) for r in range(k) for c in range(piv[r] + 1, t) if c not in piv]
        for vals in itertools.product(range(p), repeat=len(free)):
            R = np.zeros((k, t), dtype=np.int64)
            for r, c in enumerate(piv):
                R[r, c] = 1
            for (r, c), v in zip(free, vals):
                R[r, c] = v
            yield R


def span_elements(B: np.ndarray, p: int, limit: int) -> np.ndarray:
    """All elements of the row span of B (B with independent rows)."""
    k = B.shape[0]
    if p**k > limit:
        raise BudgetExceeded(f"span of dimension {k} over F_{p} exceeds enumeration budget")
    coeffs = np.array(list(itertools.product(range(p), repeat=k)), dtype=np.int64).reshape(-1, k)
    return (coeffs @ B) % p


# ---------------------------------------------------------------------------
# colored matrices
# ---------------------------------------------------------------------------


@dataclass
class ColoredMatrix:
    """Matrix with Σ-labelled rows and columns; entry (i, j) lies in A_{row_i col_j; degree}."""

    ring: BigGradedRing
    degree: int
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    entries: list[list[np.ndarray]] = field(repr=False)

    def __post_init__(self) -> None:
        self.row_labels = tuple(self.row_labels)
        self.col_labels = tuple(self.col_labels)
        A = self.ring
        if len(self.entries) != len(self.row_labels):
            raise ValueError("row count does not match row labels")
        fixed = []
        for i, row in enumerate(self.entries):
            if len(row) != len(self.col_labels):
                raise ValueError("column count does not match column labels")
            out = []
            for j, e in enumerate(row):
                M = A.comp(self.degree, self.row_labels[i], self.col_labels[j])
                v = np.asarray(e, dtype=np.int64).reshape(-1)
                if v.size != M.rank:
                    if not v.any():
                        v = np.zeros(M.rank, dtype=np.int64)
                    else:
                        raise ValueError(
                            f"entry ({i},{j}) does not lie in A_{self.degree}[{self.row_labels[i]},{self.col_labels[j]}]"
                        )
                out.append(M.reduce(v) if M.rank else v)
            fixed.append(out)
        self.entries = fixed

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_labels), len(self.col_labels)

    @classmethod
    def zero(cls, A: BigGradedRing, degree: int, rows: Sequence[str], cols: Sequence[str]) -> ColoredMatrix:
        return cls(A, degree, tuple(rows), tuple(cols), [[np.zeros(A.comp(degree, r, c).rank, dtype=np.int64) for c in cols] for r in rows])

    @classmethod
    def identity(cls, A: BigGradedRing, labels: Sequence[str]) -> ColoredMatrix:
        labels = tuple(labels)
        M = cls.zero(A, 0, labels, labels)
        for i, s in enumerate(labels):
            M.entries[i][i] = np.asarray(A.base.units[s], dtype=np.int64)
        return M

    @classmethod
    def from_flat_rows(cls, A: BigGradedRing, degree: int, rows: Sequence[str], cols: Sequence[str], flat) -> ColoredMatrix:
        """Rows given as concatenated coordinate vectors (see row_dims)."""
        if isinstance(flat, (list, tuple)):
            flat = [np.asarray(v, dtype=np.int64).reshape(-1) for v in flat]
        else:
            flat = list(np.asarray(flat, dtype=np.int64).reshape(len(rows), -1))
        entries = []
        for i, r in enumerate(rows):
            dims = row_dims(A, degree, r, cols)
            off = np.concatenate([[0], np.cumsum(dims)]).astype(int)
            if len(flat[i]) != off[-1]:
                raise ValueError(f"row {i} has {len(flat[i])} coordinates, expected {off[-1]}")
            entries.append([flat[i][off[j] : off[j + 1]] for j in range(len(cols))])
        return cls(A, degree, tuple(rows), tuple(cols), entries)

    def flat_row(self, i: int) -> np.ndarray:
        row = self.entries[i]
        return np.concatenate(row) if row else np.zeros(0, dtype=np.int64)

    def is_zero(self) -> bool:
        return all(not e.any() for row in self.entries for e in row)

    def __matmul__(self, other: ColoredMatrix) -> ColoredMatrix:
        return compose(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ColoredMatrix):
            return NotImplemented
        return (
            self.degree == other.degree
            and self.row_labels == other.row_labels
            and self.col_labels == other.col_labels
            and all(np.array_equal(a, b) for ra, rb in zip(self.entries, other.entries) for a, b in zip(ra, rb))
        )

    def to_lines(self) -> list[str]:
        head = f"matrix {self.degree} rows {' '.join(self.row_labels) or '-'} cols {' '.join(self.col_labels) or '-'}"
        lines = [head]
        for row in self.entries:
            lines.append(" | ".join(" ".join(str(int(x)) for x in e) or "." for e in row) if row else "-")
        return lines


def row_dims(A: BigGradedRing, degree: int, label: str, cols: Sequence[str]) -> list[int]:
    return [A.comp(degree, label, c).rank for c in cols]


class NotComposable(ValueError):
    pass


def compose(M: ColoredMatrix, N: ColoredMatrix) -> ColoredMatrix:
    """The product MN, with entries in degree deg M + deg N."""
    if M.ring is not N.ring:
        raise NotComposable("matrices over different rings")
    if M.col_labels != N.row_labels:
        raise NotComposable(f"columns {M.col_labels} do not match rows {N.row_labels}")
    A = M.ring
    d = M.degree + N.degree
    out = []
    for i, s in enumerate(M.row_labels):
        row = []
        for k, r in enumerate(N.col_labels):
            acc = np.zeros(A.comp(d, s, r).rank, dtype=np.int64)
            for j, t in enumerate(M.col_labels):
                x, y = M.entries[i][j], N.entries[j][k]
                if x.size and y.size and acc.size:
                    acc = acc + A.multiply(M.degree, N.degree, s, t, r, x, y)
            row.append(A.comp(d, s, r).reduce(acc) if acc.size else acc)
        out.append(row)
    return ColoredMatrix(A, d, M.row_labels, N.col_labels, out)


def right_mul_matrix(A: BigGradedRing, degree: int, label: str, X: ColoredMatrix) -> np.ndarray:
    """Matrix of x -> x X on flat rows of degree ``degree`` with row label ``label``."""
    in_dims = row_dims(A, degree, label, X.row_labels)
    d2 = degree + X.degree
    out_dims = row_dims(A, d2, label, X.col_labels)
    ioff = np.concatenate([[0], np.cumsum(in_dims)]).astype(int)
    ooff = np.concatenate([[0], np.cumsum(out_dims)]).astype(int)
    mat = np.zeros((ooff[-1], ioff[-1]), dtype=np.int64)
    for j, c in enumerate(X.row_labels):
        for k, e in enumerate(X.col_labels):
            if not in_dims[j] or not out_dims[k]:
                continue
            T = A.tensor(degree, X.degree, label, c, e)
            mat[ooff[k] : ooff[k + 1], ioff[j] : ioff[j + 1]] += T @ X.entries[j][k]
    return mat


def left_span(A: BigGradedRing, degree: int, label: str, W: dict[str, np.ndarray], cols: Sequence[str]) -> np.ndarray:
    """Rows spanning the sum over sigma of A_degree[label, sigma] * W[sigma].

    ``W[sigma]`` holds degree-1 flat rows with row label sigma.
    """
    out_dims = row_dims(A, degree + 1, label, cols)
    ooff = np.concatenate([[0], np.cumsum(out_dims)]).astype(int)
    rows = []
    for sigma, Ws in W.items():
        R = A.comp(degree, label, sigma)
        if not R.rank or not Ws.shape[0]:
            continue
        in_dims = row_dims(A, 1, sigma, cols)
        ioff = np.concatenate([[0], np.cumsum(in_dims)]).astype(int)
        for b in range(R.rank):
            a = np.zeros(R.rank, dtype=np.int64)
            a[b] = 1
            for w in Ws:
                v = np.zeros(ooff[-1], dtype=np.int64)
                for k, c in enumerate(cols):
                    if not out_dims[k] or not in_dims[k]:
                        continue
                    T = A.tensor(degree, 1, label, sigma, c)
                    v[ooff[k] : ooff[k + 1]] += np.einsum("kij,i,j->k", T, a, w[ioff[k] : ioff[k + 1]])
                rows.append(v)
    if not rows:
        return np.zeros((0, ooff[-1]), dtype=np.int64)
    return np.stack(rows) % A.modulus


# ---------------------------------------------------------------------------
# problems and witnesses
# ---------------------------------------------------------------------------


@dataclass
class ChainProblem:
    """Degree-one chain M_(1..m) with zero consecutive products and N with N M_(m) = 0."""

    ring: BigGradedRing
    chain: list[ColoredMatrix]
    N: ColoredMatrix

    def __post_init__(self) -> None:
        for M in self.chain:
            if M.degree != 1:
                raise ValueError("chain matrices must have entries in A_1")
        if self.N.degree < 1:
            raise ValueError("N must have degree at least 1")
        for a, b in zip(self.chain, self.chain[1:]):
            if not compose(b, a).is_zero():
                raise ValueError("consecutive chain products must vanish")
        if self.chain:
            if not compose(self.N, self.chain[-1]).is_zero():
                raise ValueError("N M_(m) must vanish")

    @property
    def m(self) -> int:
        return len(self.chain)

    @property
    def n(self) -> int:
        return self.N.degree

    def to_lines(self) -> list[str]:
        out = [f"problem m {self.m} n {self.n}"]
        for i, M in enumerate(self.chain, 1):
            out.append(f"# M_({i})")
            out += M.to_lines()
        out.append("# N")
        out += self.N.to_lines()
        return out


@dataclass
class FactorizationWitness:
    variant: str
    K: list[ColoredMatrix] = field(default_factory=list)
    M_prime: list[ColoredMatrix] = field(default_factory=list)
    P: ColoredMatrix | None = None
    Q: ColoredMatrix | None = None
    L: list[ColoredMatrix] = field(default_factory=list)

    def to_lines(self) -> list[str]:
        out = [f"witness {self.variant}"]
        for name, mats in (("K", self.K), ("M'", self.M_prime), ("L", self.L)):
            for i, M in enumerate(mats):
                idx = i if name == "L" else i + 1
                out.append(f"# {name}_({idx})")
                out += M.to_lines()
        for name, M in (("P", self.P), ("Q", self.Q)):
            if M is not None:
                out.append(f"# {name}")
                out += M.to_lines()
        return out


def _parse_tagged(A: BigGradedRing, text: str) -> tuple[str, list[tuple[str, ColoredMatrix]]]:
    """Header line plus the matrices of a problem or witness file, with their tags."""
    lines = [ln.rstrip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix file")
    header = lines[0].strip()
    out: list[tuple[str, ColoredMatrix]] = []
    tag = ""
    i = 1
    while i < len(lines):
        ln = lines[i].strip()
        if ln.startswith("#"):
            tag = ln[1:].strip()
            i += 1
            continue
        toks = ln.split()
        if len(toks) < 5 or toks[0] != "matrix" or "rows" not in toks or "cols" not in toks:
            raise ValueError(f"line {i + 1}: expected 'matrix <degree> rows ... cols ...'")
        r, c = toks.index("rows"), toks.index("cols")
        degree = int(toks[1])
        rows = tuple(t for t in toks[r + 1 : c] if t != "-")
        cols = tuple(t for t in toks[c + 1 :] if t != "-")
        entries = []
        for k in range(len(rows)):
            if i + 1 + k >= len(lines):
                raise ValueError(f"line {i + 1}: matrix has too few rows")
            row = lines[i + 1 + k].strip()
            if row == "-":
                parts = []
            else:
                parts = [p.strip() for p in row.split("|")]
            if len(parts) != len(cols):
                raise ValueError(f"line {i + 2 + k}: expected {len(cols)} entries")
            entries.append([np.array([int(x) for x in p.split()] if p != "." else [], dtype=np.int64) for p in parts])
        out.append((tag, ColoredMatrix(A, degree, rows, cols, entries)))
        tag = ""
        i += 1 + len(rows)
    return header, out


def parse_problem(A: BigGradedRing, text: str) -> ChainProblem:
    header, mats = _parse_tagged(A, text)
    toks = header.split()
    if len(toks) != 5 or toks[0] != "problem" or toks[1] != "m" or toks[3] != "n":
        raise ValueError("expected header 'problem m <m> n <n>'")
    m = int(toks[2])
    if len(mats) != m + 1:
        raise ValueError(f"problem with m = {m} needs {m + 1} matrices")
    return ChainProblem(A, [M for _, M in mats[:m]], mats[m][1])


def parse_witness(A: BigGradedRing, text: str, m: int) -> FactorizationWitness:
    header, mats = _parse_tagged(A, text)
    toks = header.split()
    if len(toks) != 2 or toks[0] != "witness" or toks[1] not in ("general", "triangulated"):
        raise ValueError("expected header 'witness general' or 'witness triangulated'")
    Ms = [M for _, M in mats]
    if toks[1] == "general":
        if len(Ms) != 2 * m + 2:
            raise ValueError(f"general witness for m = {m} needs {2 * m + 2} matrices")
        return FactorizationWitness("general", K=Ms[:m], M_prime=Ms[m : 2 * m], P=Ms[2 * m], Q=Ms[2 * m + 1])
    if len(Ms) != 2 * m + 2:
        raise ValueError(f"triangulated witness for m = {m} needs {2 * m + 2} matrices")
    return FactorizationWitness("triangulated", M_prime=Ms[:m], L=Ms[m : 2 * m + 1], Q=Ms[2 * m + 1])


def _eq(a: ColoredMatrix, b: ColoredMatrix) -> bool:
    return a == b


def verify_witness(problem: ChainProblem, w: FactorizationWitness) -> tuple[bool, str | None]:
    """Check every equation of the witness; returns (ok, first failing equation)."""
    M = problem.chain
    m = len(M)
    try:
        if w.variant == "general":
            K, Mp = w.K, w.M_prime
            if len(K) != m or len(Mp) != m or w.P is None or w.Q is None:
                raise ValueError("general witness needs m matrices K, m matrices M' and P, Q")
            for X in K:
                if X.degree != 0:
                    return False, "K matrices must have degree 0"
            for X in Mp:
                if X.degree != 1:
                    return False, "M' matrices must have degree 1"
            if w.P.degree != 1 or w.Q.degree != problem.n - 1:
                return False, "P must have degree 1 and Q degree n-1"
            if m:
                if not _eq(M[0], compose(K[0], Mp[0])):
                    return False, "M_(1) = K_(1) M'_(1)"
                for i in range(1, m):
                    if not _eq(compose(M[i], K[i - 1]), compose(K[i], Mp[i])):
                        return False, f"M_({i + 1}) K_({i}) = K_({i + 1}) M'_({i + 1})"
                lhs = compose(problem.N, K[-1])
            else:
                lhs = problem.N
            if not _eq(lhs, compose(w.Q, w.P)):
                return False, "N K_(m) = Q P" if m else "N = Q P"
            for i in range(1, m):
                if not compose(Mp[i], Mp[i - 1]).is_zero():
                    return False, f"M'_({i + 1}) M'_({i}) = 0"
            if m and not compose(w.P, Mp[-1]).is_zero():
                return False, "P M'_(m) = 0"
            return True, None
        if w.variant == "triangulated":
            L, Mp = w.L, w.M_prime
            if len(L) != m + 1 or len(Mp) != m or w.Q is None:
                raise ValueError("triangulated witness needs m+1 matrices L, m matrices M' and Q")
            for X in L + Mp:
                if X.degree != 1:
                    return False, "L and M' matrices must have degree 1"
            if w.Q.degree != problem.n - 1:
                return False, "Q must have degree n-1"
            if not _eq(problem.N, compose(w.Q, L[m])):
                return False, "N = Q L_(m)"
            for i in range(m, 0, -1):
                if not _eq(compose(L[i], M[i - 1]), compose(Mp[i - 1], L[i - 1])):
                    return False, f"L_({i}) M_({i}) = M'_({i}) L_({i - 1})"
            for i in range(1, m):
                if not compose(Mp[i], Mp[i - 1]).is_zero():
                    return False, f"M'_({i + 1}) M'_({i}) = 0"
            if m and not compose(w.Q, Mp[-1]).is_zero():
                return False, "Q M'_(m) = 0"
            return True, None
    except NotComposable as exc:
        raise ValueError(f"shape inconsistency: {exc}") from exc
    raise ValueError(f"unknown variant {w.variant!r}")


# ---------------------------------------------------------------------------
# structured search (general variant)
# ---------------------------------------------------------------------------


@dataclass
class _Level:
    """One level of a candidate witness: M'_(i) with row labels and K_(i)."""

    labels: tuple[str, ...]
    Mp: ColoredMatrix | None
    K: ColoredMatrix


class _Counter:
    def __init__(self, budget: int):
        self.budget = budget
        self.used = 0

    def tick(self, k: int = 1) -> None:
        self.used += k
        if self.used > self.budget:
            raise BudgetExceeded(f"operation budget {self.budget} exhausted")


def _require_field(A: BigGradedRing) -> int:
    from .homcheck import PreconditionError, _is_prime

    p = A.modulus
    if not _is_prime(p):
        raise PreconditionError("matrix search needs a prime field")
    if not A.base.is_diagonal:
        raise PreconditionError("matrix search needs a diagonal degree-zero part; restrict the base first")
    return p


def _annihilator_rows(A: BigGradedRing, label: str, prev: ColoredMatrix) -> np.ndarray:
    """Degree-1 flat rows x with row label ``label`` and x @ prev = 0."""
    R = right_mul_matrix(A, 1, label, prev)
    dim = sum(row_dims(A, 1, label, prev.row_labels))
    if not dim:
        return np.zeros((0, 0), dtype=np.int64)
    if not R.shape[0]:
        return np.eye(dim, dtype=np.int64)
    return right_nullspace(R, A.modulus)


def _block_rows(M: ColoredMatrix, label: str) -> np.ndarray:
    """Flat rows of M that carry the given row label."""
    idx = [i for i, r in enumerate(M.row_labels) if r == label]
    if not idx:
        return np.zeros((0, sum(row_dims(M.ring, M.degree, label, M.col_labels))), dtype=np.int64)
    return np.stack([np.concatenate(M.entries[i]) if M.entries[i] else np.zeros(0, dtype=np.int64) for i in idx])


def _levels(
    A: BigGradedRing,
    chain: Sequence[ColoredMatrix],
    tau0: str,
    size: int,
    counter: _Counter,
    minimal_only: bool = False,
) -> Iterator[list[_Level]]:
    """Candidate (K, M') sequences for the chain, minimal choice first."""
    p = A.modulus
    objs = list(A.objects)
    start = _Level((tau0,), None, ColoredMatrix.identity(A, (tau0,)))

    def rec(i: int, acc: list[_Level]) -> Iterator[list[_Level]]:
        if i == len(chain):
            yield acc
            return
        prev = acc[-1]
        Mi = chain[i]
        R = compose(Mi, prev.K)  # rows labelled like Mi, columns like prev.labels
        per_label = []
        for sigma in objs:
            dim = sum(row_dims(A, 1, sigma, prev.labels))
            if not dim:
                per_label.append((sigma, None, None))
                continue
            S = np.eye(dim, dtype=np.int64) if prev.Mp is None else _annihilator_rows(A, sigma, prev.Mp)
            forced = _block_rows(R, sigma)
            per_label.append((sigma, S, forced))

        def choose(j: int, budget_left: int, chosen: list[tuple[str, np.ndarray]]):
            if j == len(per_label):
                yield list(chosen)
                return
            sigma, S, forced = per_label[j]
            if S is None or not S.shape[0]:
                if forced is not None and forced.size and (forced % p).any():
                    return
                yield from choose(j + 1, budget_left, chosen)
                return
            gen = subspaces(S, budget_left, p, forced)
            if minimal_only:
                gen = itertools.islice(gen, 1)
            for U in gen:
                counter.tick()
                yield from choose(j + 1, budget_left - U.shape[0], chosen + [(sigma, U)])

        for chosen in choose(0, size, []):
            labels = tuple(s for s, U in chosen for _ in range(U.shape[0]))
            if labels:
                flat = [r for _, U in chosen for r in U]
                Mp = ColoredMatrix.from_flat_rows(A, 1, labels, prev.labels, flat)
            else:
                Mp = ColoredMatrix.zero(A, 1, (), prev.labels)
            K = _coefficients(A, R, chosen, labels)
            if K is None:
                continue
            yield from rec(i + 1, acc + [_Level(labels, Mp, K)])

    yield from rec(0, [start])


def _coefficients(A: BigGradedRing, R: ColoredMatrix, chosen, labels) -> ColoredMatrix | None:
    """K with R = K M' for M' stacked from the chosen bases."""
    p = A.modulus
    K = ColoredMatrix.zero(A, 0, R.row_labels, labels)
    offs = {}
    o = 0
    for s, U in chosen:
        offs[s] = (o, U)
        o += U.shape[0]
    for i, s in enumerate(R.row_labels):
        row = np.concatenate(R.entries[i]) if R.entries[i] else np.zeros(0, dtype=np.int64)
        if not (row % p).any():
            continue
        if s not in offs:
            return None
        start, U = offs[s]
        c = _coords(U, row.reshape(1, -1), p)
        if c is None:
            return None
        for k, v in enumerate(c[0]):
            K.entries[i][start + k] = np.array([v % p], dtype=np.int64)
    return K


def _good_subspace(A: BigGradedRing, n: int, s: str, chain_last: ColoredMatrix | None, lev: _Level, tau0: str) -> np.ndarray:
    """Rows N (flat, degree n, row label s) admitting the factorization for this level data."""
    p = A.modulus
    cols = lev.labels
    W = {}
    for sigma in A.objects:
        dim = sum(row_dims(A, 1, sigma, cols))
        if not dim:
            continue
        W[sigma] = np.eye(dim, dtype=np.int64) if lev.Mp is None else _annihilator_rows(A, sigma, lev.Mp)
    Y = left_span(A, n - 1, s, W, cols)
    Yb = rref(Y, p)[0] if Y.size else np.zeros((0, sum(row_dims(A, n, s, cols))), dtype=np.int64)
    # N -> N K is the map; V = preimage of span(Yb)
    if chain_last is None:
        return Yb
    Kmat = right_mul_matrix(A, n, s, lev.K)  # (dim out) x (dim N)
    H = right_nullspace(Yb, p) if Yb.shape[0] else np.eye(Kmat.shape[0], dtype=np.int64)
    # N in V iff H @ (Kmat @ N) = 0
    C = (H @ Kmat) % p if H.shape[0] else np.zeros((0, Kmat.shape[1]), dtype=np.int64)
    return right_nullspace(C, p) if C.shape[0] else np.eye(Kmat.shape[1], dtype=np.int64)


def _witness_for(A: BigGradedRing, problem: ChainProblem, levels: list[_Level], s: str) -> FactorizationWitness | None:
    """Explicit P, Q for a given N and level data, or None."""
    p = A.modulus
    n = problem.n
    last = levels[-1]
    cols = last.labels
    Nflat = np.concatenate(problem.N.entries[0]) if problem.N.entries[0] else np.zeros(0, dtype=np.int64)
    target = Nflat if not problem.chain else (right_mul_matrix(A, n, s, last.K) @ Nflat) % p
    Prows, Plabels = [], []
    for sigma in A.objects:
        dim = sum(row_dims(A, 1, sigma, cols))
        if not dim:
            continue
        Wb = np.eye(dim, dtype=np.int64) if last.Mp is None else _annihilator_rows(A, sigma, last.Mp)
        for w in Wb:
            Prows.append(w)
            Plabels.append(sigma)
    if not Prows:
        if (target % p).any():
            return None
        P = ColoredMatrix.zero(A, 1, (), cols)
        Q = ColoredMatrix.zero(A, n - 1, (s,), ())
    else:
        P = ColoredMatrix.from_flat_rows(A, 1, Plabels, cols, list(Prows))
        # Q is a row over A_{n-1}; solve target = Q P linearly
        qdims = [A.comp(n - 1, s, lab).rank for lab in Plabels]
        cols_ = []
        for j, lab in enumerate(Plabels):
            for b in range(qdims[j]):
                e = [np.zeros(d, dtype=np.int64) for d in qdims]
                e[j][b] = 1
                Qb = ColoredMatrix(A, n - 1, (s,), tuple(Plabels), [e])
                prod = compose(Qb, P)
                cols_.append(np.concatenate(prod.entries[0]) if prod.entries[0] else np.zeros(0, dtype=np.int64))
        if not cols_:
            if (target % p).any():
                return None
            x = np.zeros(0, dtype=np.int64)
        else:
            Bm = np.stack(cols_)  # rows = images of basis elements of Q
            x = _solve_rows(Bm, target, p)
            if x is None:
                return None
        flatq = []
        o = 0
        for d in qdims:
            flatq.append(x[o : o + d])
            o += d
        Q = ColoredMatrix(A, n - 1, (s,), tuple(Plabels), [flatq])
    K = [lv.K for lv in levels[1:]]
    Mp = [lv.Mp for lv in levels[1:]]
    return FactorizationWitness("general", K=K, M_prime=Mp, P=P, Q=Q)


def search_witness(
    problem: ChainProblem,
    size_bound: int = 2,
    variant: str = "general",
    budget: int | None = None,
) -> FactorizationWitness | dict:
    """A verifying witness, or an absence certificate scoped to the bound.

    The certificate is a dict with the enumerated search-space size.
    """
    budget = budget_from_env() if budget is None else budget
    counter = _Counter(budget)
    A = problem.ring
    if variant == "triangulated":
        return _search_triangulated(problem, size_bound, counter)
    _require_field(A)
    if problem.N.shape[0] != 1 or (problem.chain and problem.chain[0].shape[1] != 1):
        raise ValueError("search handles problems with one outer row and column")
    if problem.N.degree == 1 and problem.chain:
        m = problem.m
        K = [ColoredMatrix.identity(A, M.row_labels) for M in problem.chain]
        Q = ColoredMatrix.identity(A, problem.N.row_labels)
        return FactorizationWitness("general", K=K, M_prime=list(problem.chain), P=problem.N, Q=Q)
    tau0 = problem.chain[0].col_labels[0] if problem.chain else problem.N.col_labels[0]
    s = problem.N.row_labels[0]
    count = 0
    for levels in _levels(A, problem.chain, tau0, size_bound, counter):
        count += 1
        w = _witness_for(A, problem, levels, s)
        if w is not None:
            return w
    return {"absent": True, "variant": "general", "size_bound": size_bound, "candidates": count}


def _search_triangulated(problem: ChainProblem, size: int, counter: _Counter) -> FactorizationWitness | dict:
    """Exhaustive search over L and M' entries within the bound (small rings only)."""
    A = problem.ring
    p = A.modulus
    M = problem.chain
    m = len(M)
    n = problem.n
    if n == 1:
        # Q = identity, L_(m) = N, everything else empty
        in_labels = [M[0].col_labels] + [Mi.row_labels for Mi in M] if m else [problem.N.col_labels]
        L = [ColoredMatrix.zero(A, 1, (), in_labels[i]) for i in range(m)] + [problem.N]
        Mp = [ColoredMatrix.zero(A, 1, problem.N.row_labels if i == m - 1 else (), ()) for i in range(m)]
        Q = ColoredMatrix.identity(A, problem.N.row_labels)
        return FactorizationWitness("triangulated", M_prime=Mp, L=L, Q=Q)
    objs = list(A.objects)
    in_labels = [M[0].col_labels if m else problem.N.col_labels] + [Mi.row_labels for Mi in M]
    label_choices = [()] + [tuple(c) for k in range(1, size + 1) for c in itertools.combinations_with_replacement(objs, k)]
    count = 0
    for outs in itertools.product(label_choices, repeat=m + 1):
        # L_(i): outs[i] x in_labels[i]; M'_(i): outs[i] x outs[i-1]
        shapes = [(outs[i], in_labels[i]) for i in range(m + 1)] + [(outs[i], outs[i - 1]) for i in range(1, m + 1)]
        dims = [sum(row_dims(A, 1, r, c)) for rows, c in shapes for r in rows]
        total = sum(dims)
        if p**total > counter.budget - counter.used:
            raise BudgetExceeded("triangulated search space exceeds the budget")
        for vals in itertools.product(range(p), repeat=total):
            counter.tick()
            count += 1
            mats = []
            o = 0
            for rows, c in shapes:
                w = sum(row_dims(A, 1, rows[0], c)) if rows else 0
                flat = []
                for r in rows:
                    w = sum(row_dims(A, 1, r, c))
                    flat.append(np.array(vals[o : o + w], dtype=np.int64))
                    o += w
                if rows:
                    mats.append(ColoredMatrix.from_flat_rows(A, 1, rows, c, flat))
                else:
                    mats.append(ColoredMatrix.zero(A, 1, (), c))
            L = mats[: m + 1]
            Mp = mats[m + 1 :]
            ok = True
            for i in range(m, 0, -1):
                if not _eq(compose(L[i], M[i - 1]), compose(Mp[i - 1], L[i - 1])):
                    ok = False
                    break
            if not ok:
                continue
            if any(not compose(Mp[i], Mp[i - 1]).is_zero() for i in range(1, m)):
                continue
            Q = _solve_Q(A, problem.N, L[m], Mp[m - 1] if m else None)
            if Q is not None:
                return FactorizationWitness("triangulated", M_prime=Mp, L=L, Q=Q)
    return {"absent": True, "variant": "triangulated", "size_bound": size, "candidates": count}


def _solve_Q(A: BigGradedRing, N: ColoredMatrix, Lm: ColoredMatrix, Mpm: ColoredMatrix | None) -> ColoredMatrix | None:
    """Q (degree n-1) with N = Q Lm and Q M'_(m) = 0, solved linearly."""
    p = A.modulus
    n = N.degree
    s = N.row_labels[0]
    labels = Lm.row_labels
    qdims = [A.comp(n - 1, s, lab).rank for lab in labels]
    basis = []
    for j in range(len(labels)):
        for b in range(qdims[j]):
            e = [np.zeros(d, dtype=np.int64) for d in qdims]
            e[j][b] = 1
            basis.append(ColoredMatrix(A, n - 1, (s,), labels, [e]))
    target = np.concatenate(N.entries[0]) if N.entries[0] else np.zeros(0, dtype=np.int64)
    if not basis:
        return ColoredMatrix.zero(A, n - 1, (s,), labels) if not (target % p).any() else None
    img = []
    for Qb in basis:
        a = np.concatenate(compose(Qb, Lm).entries[0]) if Lm.col_labels else np.zeros(0, dtype=np.int64)
        z = np.concatenate(compose(Qb, Mpm).entries[0]) if Mpm is not None and Mpm.col_labels else np.zeros(0, dtype=np.int64)
        img.append(np.concatenate([a, z]))
    B = np.stack(img)
    rhs = np.concatenate([target, np.zeros(B.shape[1] - target.size, dtype=np.int64)])
    x = _solve_rows(B, rhs, p) if B.shape[1] else np.zeros(B.shape[0], dtype=np.int64)
    if x is None:
        return None
    flat = []
    o = 0
    for d in qdims:
        flat.append(x[o : o + d])
        o += d
    return ColoredMatrix(A, n - 1, (s,), labels, [flat])


# ---------------------------------------------------------------------------
# the full check
# ---------------------------------------------------------------------------


def _chains(A: BigGradedRing, m: int, tau0: str, size: int, counter: _Counter) -> Iterator[list[ColoredMatrix]]:
    """Chains M_(1..m) up to the row-side general linear actions."""
    p = A.modulus
    objs = list(A.objects)
    label_sets = [tuple(c) for k in range(1, size + 1) for c in itertools.combinations_with_replacement(objs, k)]

    def rec(prev_labels: tuple[str, ...], prev: ColoredMatrix | None, acc: list[ColoredMatrix]):
        if len(acc) == m:
            yield acc
            return
        for labels in label_sets:
            blocks = []
            for sigma in objs:
                c = labels.count(sigma)
                if not c:
                    continue
                dim = sum(row_dims(A, 1, sigma, prev_labels))
                S = np.eye(dim, dtype=np.int64) if prev is None else _annihilator_rows(A, sigma, prev)
                if not dim:
                    S = np.zeros((0, 0), dtype=np.int64)
                blocks.append((sigma, c, dim, S))

            def pick(j: int, chosen: list):
                if j == len(blocks):
                    yield list(chosen)
                    return
                sigma, c, dim, S = blocks[j]
                if not S.shape[0]:
                    yield from pick(j + 1, chosen + [np.zeros((c, dim), dtype=np.int64)])
                    return
                for U in subspaces(S, c, p):
                    counter.tick()
                    pad = np.zeros((c - U.shape[0], dim), dtype=np.int64)
                    yield from pick(j + 1, chosen + [np.concatenate([U, pad], axis=0)])

            for rows in pick(0, []):
                flat = [r for blk in rows for r in blk]
                Mi = ColoredMatrix.from_flat_rows(A, 1, labels, prev_labels, flat)
                yield from rec(labels, Mi, acc + [Mi])

    yield from rec((tau0,), None, [])


@dataclass
class _Failure:
    m: int
    n: int
    problem: ChainProblem
    certificate: dict


def matrix_koszulity_check(
    A: BigGradedRing,
    m_max: int = 2,
    n_max: int = 3,
    size_bound: int = 2,
    budget: int | None = None,
    **_ignored,
):
    """Koszulity verdict from the general matrix condition within the bounds."""
    from .homcheck import KoszulVerdict

    p = _require_field(A)
    budget = budget_from_env() if budget is None else budget
    counter = _Counter(budget)
    limit = min(budget, 1 << 20)
    pairs = sorted(
        ((m, n) for m in range(m_max + 1) for n in range(2, n_max + 1) if (n + 1 if m else n) <= A.dmax),
        key=lambda mn: (mn[0] + mn[1], mn[0]),
    )
    checked = 0
    bounds = (m_max, n_max, size_bound)
    try:
        for m, n in pairs:
            fail = _check_pair(A, m, n, size_bound, counter, limit)
            checked += 1
            if fail is not None:
                return KoszulVerdict(
                    "matrix",
                    _covered(m_max, n_max, A.dmax),
                    False,
                    _failure_location(m, n),
                    {"problem": fail.problem, "certificate": fail.certificate},
                    note=f"no witness for chain length {m}, degree {n}",
                    bounds=bounds,
                )
    except BudgetExceeded as exc:
        return KoszulVerdict(
            "matrix", _covered(m_max, n_max, A.dmax), False, inconclusive=True,
            note=f"{exc}; finished {checked} of {len(pairs)} (m, n) cases", bounds=bounds,
        )
    return KoszulVerdict("matrix", _covered(m_max, n_max, A.dmax), True, bounds=bounds, note=f"{counter.used} operations")


def _failure_location(m: int, n: int) -> tuple[int, int]:
    """(homological, internal) degree tied to a failing (m, n) case.

    m = 0 is generation in degree n, m = 1 concerns relations in degree
    n + 1, and m >= 2 is the Ext^(n+1) class in internal degree n + m that
    the chain problem describes.
    """
    if m == 0:
        return (1, n)
    if m == 1:
        return (2, n + 1)
    return (n + 1, n + m)


def _covered(m_max: int, n_max: int, dmax: int) -> int:
    """Largest internal degree all of whose Ext classes fall inside the bounds."""
    i = 1
    while True:
        j = i + 1
        if j > dmax or j > n_max + 1 or j - 2 > m_max:
            return i
        i = j


def _check_pair(A: BigGradedRing, m: int, n: int, size: int, counter: _Counter, limit: int) -> _Failure | None:
    p = A.modulus
    for tau0 in A.objects:
        for chain in _chains(A, m, tau0, size, counter):
            last = chain[-1] if chain else None
            for s in A.objects:
                cols = last.row_labels if last is not None else (tau0,)
                dim = sum(row_dims(A, n, s, cols))
                if not dim:
                    continue
                if last is None:
                    Lb = np.eye(dim, dtype=np.int64)
                else:
                    Rm = right_mul_matrix(A, n, s, last)
                    Lb = right_nullspace(Rm, p) if Rm.shape[0] else np.eye(dim, dtype=np.int64)
                if not Lb.shape[0]:
                    continue
                uncovered = None
                tried = 0
                for levels in _levels(A, chain, tau0, size, counter):
                    tried += 1
                    V = _good_subspace(A, n, s, last, levels[-1], tau0)
                    counter.tick()
                    if uncovered is None:
                        if in_rowspace(V, Lb, p).all() if V.shape[0] else not (Lb % p).any():
                            break
                        uncovered = span_elements(Lb, p, limit)
                        counter.tick(uncovered.shape[0])
                    uncovered = uncovered[~in_rowspace(V, uncovered, p)]
                    if not uncovered.shape[0]:
                        break
                else:
                    if uncovered is None or uncovered.shape[0]:
                        bad = (uncovered[0] if uncovered is not None else Lb[0])
                        N = ColoredMatrix.from_flat_rows(A, n, (s,), cols, bad.reshape(1, -1))
                        prob = ChainProblem(A, list(chain), N)
                        cert = {"absent": True, "variant": "general", "size_bound": size, "candidates": tried}
                        return _Failure(m, n, prob, cert)
    return None
