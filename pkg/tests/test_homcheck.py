from __future__ import annotations

import numpy as np
import pytest

from bigkoszul import corpus
from bigkoszul.bigring import BigGradedRing, point_ring
from bigkoszul.exactla import FinModule
from bigkoszul.homcheck import (
    PreconditionError,
    bar_complex,
    bar_table,
    cobar_complex,
    cobar_exactness_defects,
    cobar_table,
    koszul_complex,
    koszul_table,
    koszul_verdict,
    lattice_is_distributive,
)
from bigkoszul.quadra import QuadraticPresentation, quadratic_dual_coring, relations_of, trivial_coring


def _dual(A, d):
    return quadratic_dual_coring(relations_of(A), d)


def _rank(tab, n, i) -> int:
    M = tab.total(n, i)
    return 0 if M is None else M.rank


def test_cobar_trivial_coring():
    tab = cobar_table(trivial_coring(point_ring(2), 3), 3)
    assert [(n, i) for n, i, _, _ in tab.nonzero()] == [(0, 0)]


def test_cobar_dual_numbers():
    A = corpus.build("dual-numbers", p=2, d=5)
    tab = cobar_table(_dual(A, 5), 5)
    assert _rank(tab, 0, 0) == 1 and _rank(tab, 1, 1) == 1
    assert all(_rank(tab, n, n) == 0 for n in range(2, 6))
    assert tab.off_diagonal() == []


def test_cobar_without_degree_one():
    A = corpus.build("exterior", gens=2, p=2, d=3)
    P = relations_of(A)
    from bigkoszul.bigring import Bimodule

    empty = QuadraticPresentation(P.base, Bimodule(P.base, P.base, {}, {}, {}), {})
    tab = cobar_table(quadratic_dual_coring(empty, 3), 3)
    assert [(n, i) for n, i, _, _ in tab.nonzero()] == [(0, 0)]


def test_bar_of_base():
    tab = bar_table(BigGradedRing(point_ring(2), 3, {}, {}), 3)
    assert [(n, i) for n, i, _, _ in tab.nonzero()] == [(0, 0)]


def test_bar_free_ring():
    tab = bar_table(corpus.build("tensor", gens=1, p=2, d=4), 4)
    assert [(n, i) for n, i, _, _ in tab.nonzero()] == [(0, 0), (1, 1)]


def test_bar_truncated_diagonal():
    tab = bar_table(corpus.build("truncated", rank=1, m=2, d=4), 4)
    assert tab.off_diagonal() == []
    assert all(_rank(tab, n, n) == 1 for n in range(5))


def test_differentials_square_to_zero():
    A = corpus.build("exterior", gens=2, p=2, d=4)
    C = _dual(A, 4)
    families = [bar_complex(A, 4), cobar_complex(C, 4), koszul_complex(A, C, "left", 4), koszul_complex(A, C, "right", 4)]
    for fam in families:
        for cx in fam.values():
            assert cx.check() == []


def test_koszul_complex_of_base_is_empty():
    A = BigGradedRing(point_ring(2), 3, {}, {})
    tab = koszul_table(A, trivial_coring(A.base, 3), "left", 3)
    assert all(i == 0 for _, i, _, _ in tab.nonzero())


def test_koszul_complex_exterior_one_exact():
    A = corpus.build("exterior", gens=1, p=2, d=5)
    tab = koszul_table(A, _dual(A, 5), "left", 5)
    assert all(i == 0 for _, i, _, _ in tab.nonzero())


def test_koszul_complex_wrong_pairing():
    A = corpus.build("exterior", gens=1, p=2, d=5)
    P = relations_of(A)
    wrong = quadratic_dual_coring(QuadraticPresentation(P.base, P.A1, {}), 5)
    tab = koszul_table(A, wrong, "left", 5, check=False)
    assert min(i for _, i, _, _ in tab.nonzero() if i > 0) == 2


def test_verdict_exterior_koszul_complex():
    v = koszul_verdict(corpus.build("exterior", gens=2, p=2, d=6), "koszul-complex", 6)
    assert v.label == "koszul-up-to-6"


def test_verdict_truncated_over_z4():
    v = koszul_verdict(corpus.build("truncated", rank=1, m=4, d=4), "bar-diagonal", 4)
    assert v.label == "koszul-up-to-4"


@pytest.mark.parametrize("method", ["bar-diagonal", "cobar-diagonal", "koszul-complex", "lattice"])
def test_verdict_non_quadratic_fails(method):
    v = koszul_verdict(corpus.build("non-quadratic", p=2, d=4), method, 4)
    assert not v.koszul and v.failed_at is not None and v.failed_at[1] == 3


def test_verdict_bar_failure_location_and_witness():
    v = koszul_verdict(corpus.build("non-quadratic", p=2, d=4), "bar-diagonal", 4)
    assert v.failed_at == (2, 3)
    assert v.witness["cycles"]


def test_lattice_refuses_non_prime():
    with pytest.raises(PreconditionError, match="prime field required"):
        koszul_verdict(corpus.build("truncated", rank=1, m=4, d=3), "lattice", 3)


def test_lattice_single_and_pairs():
    V = FinModule.free(2, 3)
    assert lattice_is_distributive(V, [np.array([[1], [0], [0]])])
    rng = np.random.default_rng(7)
    for _ in range(30):
        a = rng.integers(0, 2, size=(3, 2))
        b = rng.integers(0, 2, size=(3, 1))
        assert lattice_is_distributive(V, [a, b])


def test_lattice_three_lines():
    V = FinModule.free(2, 2)
    lines = [np.array([[1], [0]]), np.array([[0], [1]]), np.array([[1], [1]])]
    res = lattice_is_distributive(V, lines)
    assert not res
    a, b, c = res.violation[:3]
    assert len({a, b, c}) == 3


def test_lattice_basis_spans_generators():
    V = FinModule.free(2, 3)
    gens = [np.array([[1, 0], [0, 1], [0, 0]]), np.array([[0], [1], [1]])]
    res = lattice_is_distributive(V, gens)
    assert res and res.basis.shape == (3, 3)


def test_cobar_exactness_defects_empty_for_corpus():
    for name in ("exterior", "symmetric", "path-algebra-zero"):
        assert cobar_exactness_defects(_dual(corpus.build(name, d=4), 4), 4) == []


def test_table_rows_deterministic():
    A = corpus.build("exterior", gens=2, p=2, d=3)
    assert bar_table(A, 3).rows() == bar_table(A, 3).rows()
