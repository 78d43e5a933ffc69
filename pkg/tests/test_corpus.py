from __future__ import annotations

import pytest

from bigkoszul import corpus
from bigkoszul.bigring import restrict_to_diagonal, validate
from bigkoszul.filtcat import FilteredCoalgebra, FrobeniusCategorySpec
from bigkoszul.fileformat import dump_ring, load_ring, rings_equal
from bigkoszul.homcheck import koszul_verdict
from bigkoszul.quadra import is_quadratic_up_to, relations_of

RING_ENTRIES = [e for e in corpus.list_entries() if e.kind == "ring"]


def test_catalog_names_unique_and_complete():
    names = [e.name for e in corpus.list_entries()]
    assert len(names) == len(set(names))
    for needed in ("exterior", "symmetric", "truncated", "non-quadratic", "milnor-finite-field",
                   "cyclic-extension", "non-koszul-search", "coalgebra", "filtered-cyclic", "frobenius"):
        assert needed in corpus.CATALOG


def test_unknown_entry_and_parameter():
    with pytest.raises(corpus.CorpusError):
        corpus.build("no-such-entry")
    with pytest.raises(corpus.CorpusError):
        corpus.build("exterior", colour=3)


@pytest.mark.parametrize("entry", RING_ENTRIES, ids=lambda e: e.name)
def test_ring_entries_validate(entry):
    A = entry.build(d=3)
    assert validate(A) == []


@pytest.mark.parametrize("entry", RING_ENTRIES, ids=lambda e: e.name)
def test_expected_verdicts_recomputed(entry):
    A = entry.build(d=4)
    quad, _ = is_quadratic_up_to(A, 4)
    assert quad == entry.expected["quadratic"]
    B = A if A.base.is_diagonal else restrict_to_diagonal(A)
    assert koszul_verdict(B, "koszul-complex", 4).koszul == entry.expected["koszul"]


def test_exterior_ranks():
    assert corpus.build("exterior", gens=3, p=2, d=4).ranks() == [1, 3, 3, 1, 0]


def test_truncated_over_z4():
    A = corpus.build("truncated", rank=2, m=4, d=3)
    assert A.modulus == 4
    assert A.ranks() == [1, 2, 0, 0]
    assert str(A.comp(1, "x", "x")) == "(Z/4)^2"


def test_milnor_prime_field():
    A = corpus.build("milnor-finite-field", q=7, l=3, d=2)
    assert A.ranks() == [1, 1, 0]
    assert str(A.comp(1, "x", "x")) == "Z/3"
    # l not dividing q - 1: K_1 / l vanishes
    assert corpus.build("milnor-finite-field", q=7, l=5, d=2).ranks() == [1, 0, 0]


def test_milnor_rejects_prime_power():
    with pytest.raises(corpus.CorpusError):
        corpus.build("milnor-finite-field", q=9)


def test_cyclic_extension_shape():
    A = corpus.build("cyclic-extension", l=2, d=3)
    assert not A.base.is_diagonal
    assert A.ranks()[1:] == [1, 1, 1]


def test_non_koszul_golden_reproduces():
    golden = corpus.build("non-koszul-search", d=4)
    fresh = corpus.build("non-koszul-search", d=4, fresh=True)
    assert rings_equal(golden, fresh)
    assert is_quadratic_up_to(golden, 4) == (True, None)
    assert not koszul_verdict(golden, "cobar-diagonal", 4).koszul


def test_golden_relations_survive_dump():
    A = corpus.build("non-koszul-search", d=3)
    B = load_ring(dump_ring(A))
    assert rings_equal(A, B)
    P, Q = relations_of(A), relations_of(B)
    for pr, S in P.relations.items():
        assert S.module == Q.relations[pr].module


def test_non_ring_entries():
    C = corpus.build("coalgebra", group="Z/2xZ/2", p=2)
    assert isinstance(C, FilteredCoalgebra)
    spec, objs = corpus.build("filtered-cyclic", l=2, levels=2)
    assert list(objs) == ["E0", "E1"] and spec.modulus == 2
    assert isinstance(corpus.build("frobenius", variant=3, q=5), FrobeniusCategorySpec)
    with pytest.raises(corpus.CorpusError):
        corpus.build("coalgebra", group="S3")


def test_rings_filter_by_modulus():
    names = [n for n, _ in corpus.rings(max_modulus=2)]
    assert "exterior" in names and "symmetric" not in names
