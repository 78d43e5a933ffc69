from __future__ import annotations

import numpy as np
import pytest

from bigkoszul.exactla import (
    BoundedComplex,
    FinModule,
    IntMatrix,
    LinearSolver,
    ModuleMap,
    Submodule,
    cokernel_mod_m,
    homology,
    homology_at,
    integer_invariant_factors,
    intersection,
    kernel,
    quotient,
    rank,
    right_nullspace,
    smith_normal_form,
    snf_mod,
    solve_linear,
)

import oracles


def _mul(a: IntMatrix, b: IntMatrix) -> list[list[int]]:
    A, B = a.tolist(), b.tolist()
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]) if B else 0)] for i in range(len(A))]


def test_snf_identity():
    U, D, V = smith_normal_form([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert D.tolist() == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]


def test_snf_two_by_two():
    M = [[2, 4], [6, 8]]
    U, D, V = smith_normal_form(M)
    assert D.diagonal() == [2, 4]
    assert _mul(IntMatrix.from_rows(_mul(U, IntMatrix.from_rows(M))), V) == D.tolist()


def test_snf_zero():
    _, D, _ = smith_normal_form([[0, 0], [0, 0]])
    assert D.tolist() == [[0, 0], [0, 0]]


def test_cokernel_free_case():
    M = cokernel_mod_m(np.zeros((2, 0), dtype=np.int64), 4, rows=2)
    assert M.invariant_factors == (4, 4)


def test_cokernel_examples():
    assert str(cokernel_mod_m([[2]], 4)) == "Z/2"
    assert cokernel_mod_m([[1]], 4).is_zero


def test_cokernel_matches_enumeration():
    rels = [[2, 0], [1, 2]]  # columns (2,1) and (0,2)
    M = cokernel_mod_m(rels, 4)
    cols = [[2, 1], [0, 2]]
    assert oracles.counts_from_factors(M.invariant_factors, 4) == oracles.cokernel_counts(cols, [4, 4], 4)


def test_integer_invariant_factors():
    assert integer_invariant_factors([[1]]) == []
    assert integer_invariant_factors([[3]]) == [3]
    assert integer_invariant_factors([[2, 0], [0, 0]]) == [2, 0]


def _cx(m, terms, diffs):
    mods = {k: FinModule(m, t) for k, t in terms.items()}
    maps = {k: ModuleMap(mods[k], mods[k + 1], np.array(M)) for k, M in diffs.items()}
    return BoundedComplex(m, mods, maps)


def test_homology_single_term():
    C = _cx(4, {0: (4,)}, {})
    assert str(homology_at(C, 0)) == "Z/4"


def test_homology_exact_identity():
    C = _cx(2, {0: (2,), 1: (2,)}, {0: [[1]]})
    assert homology_at(C, 0).is_zero
    assert homology_at(C, 1).is_zero


def test_homology_multiplication_by_two():
    C = _cx(4, {0: (4,), 1: (4,)}, {0: [[2]]})
    assert str(homology_at(C, 1)) == "Z/2"
    assert str(homology_at(C, 0)) == "Z/2"
    expected = oracles.homology_counts([[2]], None, [4], [4], [], 4)
    assert oracles.counts_from_factors(homology_at(C, 1).invariant_factors, 4) == expected


def test_homology_lift_and_project():
    C = _cx(4, {0: (4,), 1: (4,)}, {0: [[2]]})
    H = C.homology(1)
    for z in H.representatives():
        h = H.project(z)
        assert not H.module.reduce(h - H.project(H.lift(h))).any()


def test_check_flags_bad_complex():
    C = _cx(2, {0: (2,), 1: (2,), 2: (2,)}, {0: [[1]], 1: [[1]]})
    assert C.check() == [0]


def test_linear_solver_examples():
    assert list(LinearSolver([[1, 0], [0, 1]], 5).solve([3, 4])) == [3, 4]
    x = LinearSolver([[2]], 4).solve([2])
    assert int(x[0]) in (1, 3)
    assert LinearSolver([[2]], 4).solve([1]) is None


def test_solve_linear_against_brute_force():
    S = FinModule(4, (2, 4))
    T = FinModule(4, (4, 4))
    A = ModuleMap(S, T, np.array([[2, 1], [0, 2]]))
    for b in oracles.elements([4, 4]):
        x = solve_linear(A, b)
        sols = oracles.solve_brute(A.matrix.tolist(), b, [2, 4], [4, 4])
        assert (x is None) == (not sols)
        if x is not None:
            assert tuple(int(v) for v in S.reduce(x)) in sols


def test_snf_mod_reconstructs():
    A = np.array([[2, 3, 1], [4, 0, 6]])
    s = snf_mod(A, 8)
    D = np.zeros((2, 3), dtype=np.int64)
    for i, d in enumerate(s.diag):
        D[i, i] = d % 8
    assert ((s.U @ A @ s.V - D) % 8 == 0).all()
    assert ((s.U @ s.Uinv) % 8 == np.eye(2, dtype=np.int64)).all()


def test_quotient_presentation_round_trip():
    q = quotient([4, 2], np.array([[2], [1]]), 4)
    p = q.presentation
    for v in oracles.elements([4, 2]):
        c = q.reduce(p.to_canon @ np.array(v))
        back = (p.from_canon @ c - np.array(v)) % np.array([4, 2])
        # difference must lie in the relation span
        assert tuple(int(x) for x in back) in oracles.span([[2, 1]], [4, 2])


def test_kernel_and_intersection():
    M = FinModule(2, (2, 2, 2))
    f = ModuleMap(M, FinModule(2, (2,)), np.array([[1, 1, 0]]))
    K = kernel(f)
    assert K.module.rank == 2
    L = Submodule(M, np.array([[1], [0], [1]]))
    assert intersection(K, L).module.is_zero
    assert K.contains([1, 1, 0]) and not K.contains([1, 0, 0])


def test_fp_helpers():
    A = np.array([[1, 1, 0], [0, 1, 1]])
    assert rank(A, 2) == 2
    N = right_nullspace(A, 2)
    assert ((A @ N.T) % 2 == 0).all() and N.shape[0] == 1


def test_finmodule_validation():
    with pytest.raises(ValueError):
        FinModule(4, (3,))
    with pytest.raises(ValueError):
        FinModule(4, (4, 2))
    assert FinModule.free(3, 2).invariant_factors == (3, 3)


def test_homology_function_rejects_non_cycles():
    T = FinModule(2, (2,))
    d_in = ModuleMap(T, T, np.array([[1]]))
    d_out = ModuleMap(T, T, np.array([[1]]))
    with pytest.raises(ValueError):
        homology(d_in, d_out, T)
