from __future__ import annotations

import pytest

from bigkoszul import corpus
from bigkoszul.fileformat import (
    FormatError,
    dump_quadratic,
    dump_ring,
    load_ring,
    parse,
    rings_equal,
    to_category,
    to_quadratic_presentation,
)
from bigkoszul.quadra import quadratic_closure, relations_of

DUAL_NUMBERS_QUADRATIC = """\
ring v1
kind quadratic
name dual numbers
modulus 2
objects x
degree 4
comp 0 x x : 2
unit x : 1
comp 1 x x : 2
mul 0 1 x x x : 0 0 -> 0 = 1
mul 1 0 x x x : 0 0 -> 0 = 1
rel x x : 1   # x^2 = 0
"""


@pytest.mark.parametrize("name,kw", [
    ("exterior", {"gens": 2, "p": 2}),
    ("symmetric", {"gens": 2, "p": 3}),
    ("truncated", {"rank": 2, "m": 4}),
    ("path-algebra-zero", {}),
    ("cyclic-extension", {"l": 2}),
])
def test_ring_round_trip(name, kw):
    A = corpus.build(name, d=3, **kw)
    assert rings_equal(A, load_ring(dump_ring(A)))


def test_quadratic_round_trip():
    A = corpus.build("exterior", gens=2, p=2, d=3)
    P = relations_of(A)
    B = load_ring(dump_quadratic(P, 3))
    assert rings_equal(quadratic_closure(P, 3), B)


def test_quadratic_document_dual_numbers():
    A = load_ring(DUAL_NUMBERS_QUADRATIC)
    assert A.ranks() == [1, 1, 0, 0, 0]
    assert load_ring(DUAL_NUMBERS_QUADRATIC, 2).ranks() == [1, 1, 0]


def test_comments_and_blank_lines_ignored():
    text = "# leading comment\n\n" + DUAL_NUMBERS_QUADRATIC.replace("name", "\nname")
    assert load_ring(text).ranks() == [1, 1, 0, 0, 0]


def _error_line(text: str) -> int:
    with pytest.raises(FormatError) as info:
        load_ring(text)
    return info.value.line


def test_unknown_keyword_reports_line():
    text = DUAL_NUMBERS_QUADRATIC.replace("objects x\n", "objects x\nfrob 3\n")
    assert _error_line(text) == 6


def test_bad_header():
    assert _error_line("ring v2\n") == 1


def test_empty_document():
    with pytest.raises(FormatError, match="empty"):
        parse("# nothing\n")


def test_non_integer_reports_line():
    text = DUAL_NUMBERS_QUADRATIC.replace("modulus 2", "modulus two")
    with pytest.raises(FormatError, match="line 4"):
        load_ring(text)


def test_malformed_mul_entry():
    text = DUAL_NUMBERS_QUADRATIC.replace("0 0 -> 0 = 1\nmul 1", "0 0 0 = 1\nmul 1")
    assert _error_line(text) == 10


def test_duplicate_component():
    text = DUAL_NUMBERS_QUADRATIC.replace("comp 1 x x : 2\n", "comp 1 x x : 2\ncomp 1 x x : 2\n")
    assert _error_line(text) == 10


def test_wrong_relation_length():
    text = DUAL_NUMBERS_QUADRATIC.replace("rel x x : 1", "rel x x : 1 0")
    with pytest.raises(FormatError, match="coordinates"):
        load_ring(text)


def test_invalid_ring_rejected():
    A = corpus.build("tensor", gens=1, p=2, d=3)
    text = dump_ring(A).replace("mul 1 2 x x x : 0 0 -> 0 = 1", "mul 1 2 x x x : 0 0 -> 0 = 0")
    assert text != dump_ring(A)
    with pytest.raises(FormatError, match="invalid ring"):
        load_ring(text)


def test_unknown_object():
    text = DUAL_NUMBERS_QUADRATIC.replace("rel x x", "rel x y")
    with pytest.raises(FormatError):
        to_quadratic_presentation(parse(text))


def test_degree_beyond_ring():
    A = corpus.build("exterior", gens=1, p=2, d=2)
    with pytest.raises(FormatError, match="beyond"):
        load_ring(dump_ring(A), 5)


FILTERED = """\
category v1
kind filtered
modulus 3
group cyclic 3
object E0 : 0
object E1 : 1
object M : 1 0
action M 0 : 1 1 ; 0 1
"""


def test_filtered_category():
    kind, (spec, objs) = to_category(parse(FILTERED))
    assert kind == "filtered"
    assert list(objs) == ["E0", "E1", "M"]
    assert objs["M"].gen_matrices[0].tolist() == [[1, 1], [0, 1]]


def test_frobenius_category():
    kind, spec = to_category(parse("category v1\nkind frobenius\nvariant 1\nq 3\nbound 6\n"))
    assert kind == "frobenius" and spec.denominator_bound == 6


def test_filtered_category_errors():
    # the action breaks the graded piece of M; reported at its declaration
    wrong = FILTERED.replace("action M 0 : 1 1 ; 0 1", "action M 0 : 2 1 ; 0 1")
    with pytest.raises(FormatError, match="line 7"):
        to_category(parse(wrong))
    with pytest.raises(FormatError, match="undeclared"):
        to_category(parse(FILTERED + "action N 0 : 1\n"))
    with pytest.raises(FormatError, match="duplicate object"):
        to_category(parse(FILTERED + "object E0 : 2\n"))
    with pytest.raises(FormatError):
        to_category(parse(FILTERED.replace("group cyclic 3", "group dihedral 3")))
