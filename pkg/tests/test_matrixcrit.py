from __future__ import annotations

import itertools

import numpy as np
import pytest

from bigkoszul import corpus
from bigkoszul.matrixcrit import (
    ChainProblem,
    ColoredMatrix,
    FactorizationWitness,
    NotComposable,
    compose,
    matrix_koszulity_check,
    parse_problem,
    parse_witness,
    search_witness,
    verify_witness,
)

import oracles

RANK_ONE = {"poly": ("tensor", {"gens": 1}), "cube": ("non-quadratic", {}), "dual": ("dual-numbers", {})}


def _ring(kind: str, d: int = 4):
    name, kw = RANK_ONE[kind]
    return corpus.build(name, p=2, d=d, **kw)


def _scalar_matrix(A, degree: int, rows: int, cols: int, vals) -> ColoredMatrix:
    entries = []
    for i in range(rows):
        row = []
        for j in range(cols):
            rk = A.comp(degree, "x", "x").rank
            row.append(np.array([vals[i * cols + j]] if rk else [], dtype=np.int64))
        entries.append(row)
    return ColoredMatrix(A, degree, ("x",) * rows, ("x",) * cols, entries)


def _exterior():
    return corpus.build("exterior", gens=2, p=2, d=3)


def test_compose_identity():
    A = _exterior()
    N = ColoredMatrix.from_flat_rows(A, 1, ("x",), ("x", "x"), [[1, 0, 0, 1]])
    assert compose(ColoredMatrix.identity(A, ("x",)), N) == N


def test_compose_exterior_anticommutes():
    A = _exterior()
    row = ColoredMatrix.from_flat_rows(A, 1, ("x",), ("x", "x"), [[1, 0, 0, 1]])  # [x y]
    col = ColoredMatrix.from_flat_rows(A, 1, ("x", "x"), ("x",), [[0, 1], [1, 0]])  # [y x]^T
    assert compose(row, col).is_zero()


def test_compose_label_mismatch():
    A = corpus.build("path-algebra", p=2, d=3)
    a, b = A.objects.names[:2]
    M = ColoredMatrix.zero(A, 0, (a,), (a,))
    N = ColoredMatrix.zero(A, 0, (b,), (b,))
    with pytest.raises(NotComposable):
        compose(M, N)


def _exterior_problem():
    A = _exterior()
    M1 = ColoredMatrix.from_flat_rows(A, 1, ("x",), ("x",), [[1, 0]])
    N = ColoredMatrix.from_flat_rows(A, 2, ("x",), ("x",), [[1]])
    return ChainProblem(A, [M1], N)


def test_degree_one_witnesses_trivial():
    A = _exterior()
    M1 = ColoredMatrix.from_flat_rows(A, 1, ("x",), ("x",), [[1, 0]])
    N = ColoredMatrix.from_flat_rows(A, 1, ("x",), ("x",), [[1, 0]])
    prob = ChainProblem(A, [M1], N)
    ident = ColoredMatrix.identity(A, ("x",))
    w = FactorizationWitness("general", K=[ident], M_prime=[M1], P=N, Q=ident)
    assert verify_witness(prob, w) == (True, None)
    L0 = ColoredMatrix.zero(A, 1, (), ("x",))
    Mp = ColoredMatrix.zero(A, 1, ("x",), ())
    t = FactorizationWitness("triangulated", M_prime=[Mp], L=[L0, N], Q=ident)
    assert verify_witness(prob, t) == (True, None)


def test_perturbed_witness_names_equation():
    prob = _exterior_problem()
    w = search_witness(prob, 2)
    assert isinstance(w, FactorizationWitness) and verify_witness(prob, w)[0]
    bad = FactorizationWitness(w.variant, K=w.K, M_prime=w.M_prime, P=w.P, Q=w.Q)
    bad.Q = ColoredMatrix(w.Q.ring, w.Q.degree, w.Q.row_labels, w.Q.col_labels,
                          [[(e + 1) % 2 if i == 0 and j == 0 else e for j, e in enumerate(r)] for i, r in enumerate(w.Q.entries)])
    ok, eq = verify_witness(prob, bad)
    assert not ok and "Q P" in eq


def test_search_m_zero_factors_any_matrix():
    A = _exterior()
    N = ColoredMatrix.from_flat_rows(A, 2, ("x",), ("x",), [[1]])
    w = search_witness(ChainProblem(A, [], N), 2)
    assert isinstance(w, FactorizationWitness)
    assert verify_witness(ChainProblem(A, [], N), w) == (True, None)


def test_search_truncated_random_problems():
    A = corpus.build("truncated", rank=2, m=2, d=3)
    rng = np.random.default_rng(3)
    found = 0
    for _ in range(10):
        col = rng.integers(0, 2, size=(1, 2))
        if not col.any():
            continue
        M1 = ColoredMatrix.from_flat_rows(A, 1, ("x",), ("x",), col)
        # every degree-two matrix is zero in this ring, so N = 0 is the only choice
        N = ColoredMatrix.zero(A, 2, ("x",), ("x",))
        prob = ChainProblem(A, [M1], N)
        w = search_witness(prob, 2)
        assert isinstance(w, FactorizationWitness)
        assert verify_witness(prob, w)[0]
        found += 1
    assert found


def test_vacuous_problem_rejected():
    A = corpus.build("truncated", rank=1, m=2, d=3)
    with pytest.raises(ValueError):
        ColoredMatrix.from_flat_rows(A, 2, ("x",), ("x",), [[1]])
    with pytest.raises(ValueError):
        ChainProblem(A, [], ColoredMatrix.zero(A, 0, ("x",), ("x",)))


@pytest.mark.parametrize("name,kw", [("truncated", {"rank": 1, "m": 2}), ("exterior", {"gens": 1, "p": 2})])
def test_matrix_check_koszul_examples(name, kw):
    v = matrix_koszulity_check(corpus.build(name, d=4, **kw), 2, 3, 2)
    assert v.koszul and v.label == "koszul-up-to-bounds(m<=2,n<=3,size<=2)"


def test_matrix_check_negative_control():
    v = matrix_koszulity_check(corpus.build("non-quadratic", p=2, d=4), 2, 3, 2)
    assert not v.koszul and not v.inconclusive
    prob = v.witness["problem"]
    assert isinstance(search_witness(prob, 2), dict)
    lines = prob.to_lines()
    assert lines[0].startswith("problem m ")


def test_problem_and_witness_round_trip():
    prob = _exterior_problem()
    A = prob.ring
    back = parse_problem(A, "\n".join(prob.to_lines()))
    assert back.chain == prob.chain and back.N == prob.N
    for variant in ("general", "triangulated"):
        w = search_witness(prob, 2, variant)
        w2 = parse_witness(A, "\n".join(w.to_lines()), prob.m)
        assert verify_witness(back, w2) == (True, None)


def _problems(kind: str, n: int):
    A = _ring(kind)
    yield [], [1], A
    for a in (1, 2):
        for col in itertools.product(range(2), repeat=a):
            if not any(col):
                continue
            for row in itertools.product(range(2), repeat=a):
                yield list(col), list(row), A


@pytest.mark.parametrize("kind", ["poly", "cube", "dual"])
@pytest.mark.parametrize("n", [2, 3])
def test_structured_search_matches_raw_enumeration(kind, n):
    checked = 0
    for col, row, A in _problems(kind, n):
        if not A.comp(n, "x", "x").rank and any(row):
            continue
        if not A.comp(1, "x", "x").rank and any(col):
            continue
        chain = [_scalar_matrix(A, 1, len(col), 1, col)] if col else []
        N = _scalar_matrix(A, n, 1, max(len(col), 1), row)
        try:
            prob = ChainProblem(A, chain, N)
        except ValueError:
            continue  # N M != 0
        res = search_witness(prob, 2)
        raw = oracles.general_witness_exists(kind, col, row, n, size=2, outer=2)
        if raw:
            assert isinstance(res, FactorizationWitness)
        if isinstance(res, FactorizationWitness):
            assert verify_witness(prob, res)[0]
            if res.P.shape[0] <= 2 and all(len(K.col_labels) <= 2 for K in res.K):
                assert raw
        checked += 1
    assert checked >= 3
