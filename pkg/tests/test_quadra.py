from __future__ import annotations

import numpy as np
import pytest

from bigkoszul import corpus
from bigkoszul.exactla import Submodule, kernel
from bigkoszul.fileformat import load_ring
from bigkoszul.quadra import (
    is_quadratic_up_to,
    quadratic_closure,
    quadratic_dual_coring,
    quadratic_part,
    relations_of,
)

# x in degree 1 and an unrelated generator z in degree 3; x^2 = 0
EXTRA_DEGREE_THREE = """\
ring v1
name extra generator in degree three
modulus 2
objects x
degree 3
comp 0 x x : 2
unit x : 1
mul 0 0 x x x : 0 0 -> 0 = 1
comp 1 x x : 2
mul 0 1 x x x : 0 0 -> 0 = 1
mul 1 0 x x x : 0 0 -> 0 = 1
comp 3 x x : 2
mul 0 3 x x x : 0 0 -> 0 = 1
mul 3 0 x x x : 0 0 -> 0 = 1
"""


def _rel_rank(A) -> int:
    P = relations_of(A)
    return sum(S.module.rank for S in P.relations.values())


def test_relations_free_degree_two():
    assert _rel_rank(corpus.build("tensor", gens=1, p=2, d=3)) == 0


def test_relations_dual_numbers():
    P = relations_of(corpus.build("dual-numbers", p=2, d=3))
    (pr, S), = [(k, v) for k, v in P.relations.items() if v.module.rank]
    assert S.module.invariant_factors == (2,)
    assert S.contains(np.array([1]))


def test_relations_truncated_everything():
    P = relations_of(corpus.build("truncated", rank=1, m=2, d=3))
    for pr, S in P.relations.items():
        assert S.module == S.ambient


def test_closure_free_ring():
    A = corpus.build("tensor", gens=1, p=2, d=4)
    assert quadratic_closure(relations_of(A), 4).ranks() == [1, 1, 1, 1, 1]


def test_closure_all_relations():
    A = corpus.build("truncated", rank=1, m=2, d=4)
    assert quadratic_closure(relations_of(A), 4).ranks() == [1, 1, 0, 0, 0]


def test_closure_exterior_two_generators():
    A = corpus.build("exterior", gens=2, p=2, d=2)
    assert quadratic_closure(relations_of(A), 3).ranks() == [1, 2, 1, 0]


def test_is_quadratic_symmetric():
    assert is_quadratic_up_to(corpus.build("symmetric", gens=2, p=3, d=4), 4) == (True, None)


def test_is_quadratic_extra_generator():
    A = load_ring(EXTRA_DEGREE_THREE)
    assert is_quadratic_up_to(A) == (False, 3)


def test_is_quadratic_trivial_at_degree_two():
    for name in ("non-quadratic", "exterior", "symmetric"):
        assert is_quadratic_up_to(corpus.build(name), 2) == (True, None)


def _iso(f) -> bool:
    return kernel(f).module.is_zero and Submodule(f.target, f.matrix).module.order == f.target.order


def test_quadratic_part_of_quadratic_ring():
    A = corpus.build("exterior", gens=2, p=2, d=3)
    Q = quadratic_part(A, 3)
    assert all(_iso(Q.comparison(n, "x", "x")) for n in range(4))


def test_quadratic_part_vanishes_above_one():
    Q = quadratic_part(load_ring(EXTRA_DEGREE_THREE), 3)
    assert Q.ring.ranks() == [1, 1, 0, 0]


def test_quadratic_part_injective_in_degree_two():
    A = corpus.build("cyclic-extension", l=2, d=3)
    Q = quadratic_part(A, 3)
    for s in A.objects:
        for t in A.objects:
            assert kernel(Q.comparison(2, s, t)).module.is_zero


def test_quadratic_part_non_quadratic_cube():
    A = corpus.build("non-quadratic", p=2, d=4)
    Q = quadratic_part(A, 4)
    assert not kernel(Q.comparison(3, "x", "x")).module.is_zero


def test_dual_coring_free():
    C = quadratic_dual_coring(relations_of(corpus.build("tensor", gens=1, p=2, d=4)), 4)
    assert C.ranks() == [1, 1, 0, 0, 0]


def test_dual_coring_dual_numbers():
    C = quadratic_dual_coring(relations_of(corpus.build("dual-numbers", p=2, d=5)), 5)
    assert C.ranks() == [1, 1, 1, 1, 1, 1]


def test_dual_coring_exterior():
    C = quadratic_dual_coring(relations_of(corpus.build("exterior", gens=2, p=2, d=2)), 4)
    assert C.ranks() == [1, 2, 3, 4, 5]


def test_dual_coring_second_component_is_relations():
    A = corpus.build("symmetric", gens=2, p=3, d=3)
    P = relations_of(A)
    C = quadratic_dual_coring(P, 3)
    for pr, S in P.relations.items():
        assert C.component(2, *pr).order == S.module.order


def test_relations_of_closure_recover_presentation():
    for name in ("exterior", "symmetric", "path-algebra-zero"):
        P = relations_of(corpus.build(name, d=3))
        P2 = relations_of(quadratic_closure(P, 3))
        for pr, S in P.relations.items():
            T = P2.relations[pr]
            assert S.contains_all(T.inclusion.matrix) and T.contains_all(S.inclusion.matrix)


def test_relations_need_degree_two():
    with pytest.raises(ValueError):
        relations_of(corpus.build("exterior", d=1))
