from __future__ import annotations

import numpy as np

from bigkoszul import corpus
from bigkoszul.bigring import (
    BaseMorphism,
    BigGradedRing,
    BigRing,
    Bimodule,
    is_flat,
    point_ring,
    restrict_base,
    restrict_to_diagonal,
    tensor_over_base,
    validate,
)
from bigkoszul.exactla import FinModule


def _cyclic_bimodule(R: BigRing, order: int, pair=("*", "*")) -> Bimodule:
    s, t = pair
    comps = {pair: FinModule(R.modulus, (order,))}
    return Bimodule(R, R, comps, {(s, s, t): [[[1]]]}, {(s, t, t): [[[1]]]})


def test_validate_point_ring():
    assert validate(point_ring(2)) == []
    assert validate(BigGradedRing(point_ring(2), 0, {}, {})) == []


def test_validate_exterior_clean():
    assert validate(corpus.build("exterior", gens=2, p=2, d=4)) == []


def test_validate_reports_corrupted_constant():
    A = corpus.build("tensor", gens=1, p=2, d=3)
    key = (1, 2, "x", "x", "x")
    T = A.mult[key].copy()
    T[0, 0, 0] ^= 1
    B = BigGradedRing(A.base, A.dmax, dict(A.components), {**A.mult, key: T}, "broken")
    report = validate(B)
    assert report
    assert any("associativity" in line and "(x,x,x,x)" in line for line in report)


def test_tensor_unit_bimodule():
    R = point_ring(2)
    U = R.as_bimodule()
    T = tensor_over_base(U, U)
    assert T.invariants() == {("*", "*"): (2,)}


def test_tensor_over_z4_of_z2():
    R = point_ring(4)
    K = _cyclic_bimodule(R, 2)
    assert tensor_over_base(K, K).invariants() == {("*", "*"): (2,)}


def test_tensor_no_matching_middle_object():
    R = BigRing.diagonal(("a", "b", "c", "d"), 2)
    N = _cyclic_bimodule(R, 2, ("a", "b"))
    M = _cyclic_bimodule(R, 2, ("c", "d"))
    assert tensor_over_base(N, M).is_zero


def test_flatness_examples():
    R4 = point_ring(4)
    assert is_flat(R4.as_bimodule())
    assert not is_flat(_cyclic_bimodule(R4, 2))
    R2 = point_ring(2)
    assert is_flat(_cyclic_bimodule(R2, 2))


def test_flatness_by_ideals_agrees_on_non_diagonal_base():
    from bigkoszul.bigring import flat_by_ideals, is_locally_free

    R4 = point_ring(4)
    for K in (R4.as_bimodule(), _cyclic_bimodule(R4, 2)):
        assert flat_by_ideals(K) == all(is_locally_free(M) for M in K.components.values())


def test_restrict_identity_is_noop():
    A = corpus.build("exterior", gens=2, p=2, d=3)
    ident = BaseMorphism(A.base, A.base, {("x", "x"): np.eye(1, dtype=np.int64)})
    B = restrict_base(A, ident)
    assert B.ranks() == A.ranks()
    assert set(B.mult) == set(A.mult)
    assert all(np.array_equal(B.mult[k], A.mult[k]) for k in A.mult)


def test_restrict_degree_zero_only():
    A = corpus.build("truncated", rank=1, m=2, d=3)
    A0 = BigGradedRing(A.base, 3, {}, {})
    B = restrict_to_diagonal(A0)
    assert B.base.is_diagonal
    assert B.ranks() == [len(B.objects), 0, 0, 0]


def test_restrict_cyclic_extension_to_diagonal():
    A = corpus.build("cyclic-extension", l=2, d=3)
    assert not A.base.is_diagonal
    B = restrict_to_diagonal(A)
    assert B.base.is_diagonal
    assert validate(B) == []
    for s in A.objects:
        for t in A.objects:
            assert B.comp(0, s, t).invariant_factors == ((2,) if s == t else ())
            for n in range(1, 4):
                assert B.comp(n, s, t) == A.comp(n, s, t)
