import json
import random
from itertools import combinations
from pathlib import Path

import pytest
from pydantic import BaseModel

from setcore import (
    Family,
    InvalidParameters,
    InvariantViolation,
    KSet,
    ParseError,
    TSetSystem,
    binomial,
    check_enumerable,
    count_subsets,
    enumerate_ksets,
    interval_mask,
    intersection_size,
    iter_kmasks,
    mask_elements,
    mask_of,
    parse_family,
    parse_tset_system,
    read_family,
    serialize_family,
    write_family,
)

FIXTURES = Path(__file__).parent / "fixtures"


def test_kset_basics_and_order():
    a = KSet([3, 1, 2])
    assert a.elements == (1, 2, 3)
    assert len(a) == 3
    assert 2 in a and 4 not in a
    assert str(a) == "{1,2,3}"
    assert repr(a) == "KSet(1, 2, 3)"
    assert KSet([1, 2, 4]) < KSet([1, 3, 4]) < KSet([2, 3, 4])
    assert KSet([1, 2]).issubset(a)
    assert KSet.from_bits(a.bits) == a
    assert hash(KSet([2, 1])) == hash(KSet([1, 2]))
    assert intersection_size(a, KSet([2, 3, 5])) == 2


@pytest.mark.parametrize("bad", [[1, 1], [0, 2], [65], ["1"], [True]])
def test_kset_rejects_bad_elements(bad):
    with pytest.raises(InvariantViolation):
        KSet(bad)


def test_mask_helpers():
    assert mask_of([1, 3]) == 0b101
    assert mask_elements(0b10110) == (2, 3, 5)
    assert interval_mask(2, 4) == 0b1110
    assert interval_mask(3, 2) == 0
    assert list(map(mask_elements, iter_kmasks(4, 2))) == list(combinations(range(1, 5), 2))
    within = list(map(mask_elements, iter_kmasks(6, 2, within=mask_of([2, 4, 6]))))
    assert within == [(2, 4), (2, 6), (4, 6)]


def test_counting_edge_cases():
    assert binomial(5, 2) == 10
    assert binomial(5, 7) == 0
    assert binomial(5, -1) == 0
    with pytest.raises(InvalidParameters):
        binomial(-1, 0)
    assert count_subsets(-1, 0) == 0
    assert count_subsets(3, 0) == 1
    # exact big integers
    assert count_subsets(10_000, 3) == 10_000 * 9_999 * 9_998 // 6


@pytest.mark.parametrize("a", range(1, 61))
def test_binomial_pascal_identity(a):
    for b in range(-2, a + 3):
        assert binomial(a, b) == binomial(a - 1, b - 1) + binomial(a - 1, b)
        if b < 0 or b > a:
            assert binomial(a, b) == 0


def test_family_is_canonical_and_rejects_duplicates():
    f = Family(5, 2, [[3, 4], [1, 2], [2, 5]])
    assert f.sets() == [[1, 2], [2, 5], [3, 4]]
    assert f.k == 2 and f.n == 5
    assert KSet([2, 5]) in f and [2, 5] in f
    assert f.index_of([3, 4]) == 2
    with pytest.raises(InvariantViolation):
        Family(5, 2, [[1, 2], [2, 1]])
    assert len(Family(5, 2, [[1, 2], [2, 1]], dedupe=True)) == 1


@pytest.mark.parametrize(
    "members, n, k",
    [([[1, 2, 3]], 5, 2), ([[1, 6]], 5, 2)],
)
def test_family_rejects_wrong_size_or_range(members, n, k):
    with pytest.raises(InvariantViolation):
        Family(n, k, members)


def test_family_set_operations():
    f = Family(4, 2, [[1, 2], [1, 3]])
    g = Family(4, 2, [[1, 3], [3, 4]])
    assert f.union(g).sets() == [[1, 2], [1, 3], [3, 4]]
    assert f.difference(g).sets() == [[1, 2]]
    assert f.with_members([[2, 4]]).sets() == [[1, 2], [1, 3], [2, 4]]
    assert f.without_members([[1, 2]]).sets() == [[1, 3]]
    assert f.relabel({1: 4, 4: 1}).sets() == [[2, 4], [3, 4]]
    with pytest.raises(InvalidParameters):
        f.union(Family(5, 2, []))


def test_families_and_tset_systems_differ():
    assert Family(4, 2, [[1, 2]]) != TSetSystem(4, 2, [[1, 2]])
    assert TSetSystem(4, 1, [[3]]).t == 1


def test_enumerate_ksets_and_limit(monkeypatch):
    full = enumerate_ksets(6, 3)
    assert len(full) == 20
    assert full.sets()[0] == [1, 2, 3] and full.sets()[-1] == [4, 5, 6]
    monkeypatch.setenv("TMATCH_ENUMERATION_LIMIT", "10")
    with pytest.raises(InvalidParameters):
        check_enumerable(6, 3)
    with pytest.raises(InvalidParameters):
        enumerate_ksets(6, 3)


@pytest.mark.parametrize("n", range(15))
def test_enumerate_ksets_counts_and_order(n):
    for k in range(n + 1):
        full = enumerate_ksets(n, k)
        assert len(full) == binomial(n, k)
        assert full.sets() == [list(c) for c in combinations(range(1, n + 1), k)]


def test_lines_fixture_parses():
    f = read_family(FIXTURES / "shift_example.lines")
    assert (f.n, f.k, len(f)) == (6, 3, 8)
    assert f.sets()[4] == [1, 3, 4]


def test_json_fixture_parses():
    f = read_family(FIXTURES / "star_12.json")
    assert f.sets() == [[1, 2, 3], [1, 2, 4], [1, 2, 5], [1, 2, 6]]


def test_lines_errors_carry_line_numbers():
    with pytest.raises(ParseError) as exc:
        read_family(FIXTURES / "bad_member.lines")
    assert exc.value.line == 4
    with pytest.raises(ParseError) as exc:
        parse_family("n=5 k=2\n1 x\n", "lines")
    assert exc.value.line == 2
    with pytest.raises(ParseError) as exc:
        parse_family("n=5 k=2\n1 2\n2 1\n", "lines")
    assert exc.value.line == 3
    with pytest.raises(ParseError) as exc:
        parse_family("n=5 q=2\n", "lines")
    assert exc.value.line == 1
    with pytest.raises(ParseError):
        parse_family("", "lines")


def test_json_errors_carry_field_paths():
    with pytest.raises(ParseError) as exc:
        parse_family('{"n": 5, "k": 2, "sets": [[1, 2], [1, "a"]]}', "json")
    assert exc.value.field == "sets.1.1"
    with pytest.raises(ParseError) as exc:
        parse_family('{"n": 5, "k": 2,', "json")
    assert exc.value.line == 1
    with pytest.raises(ParseError):
        parse_family('{"n": 5, "k": 2, "t": 1, "sets": []}', "json")
    with pytest.raises(ParseError):
        parse_family('{"n": 5, "k": 2, "extra": 1}', "json")


def test_serialization_is_canonical(tmp_path):
    f = Family(5, 2, [[3, 4], [1, 2]])
    assert serialize_family(f, "lines") == b"n=5 k=2\n1 2\n3 4\n"
    doc = json.loads(serialize_family(f, "json"))
    assert doc == {"n": 5, "k": 2, "sets": [[1, 2], [3, 4]]}
    write_family(tmp_path / "out" / "f.json", f)
    assert read_family(tmp_path / "out" / "f.json") == f
    centers = parse_tset_system("n=6 t=2\n3 4\n1 2\n", "lines")
    assert centers.sets() == [[1, 2], [3, 4]]


def test_pydantic_models_carry_sets():
    class Holder(BaseModel):
        member: KSet
        family: Family

    h = Holder.model_validate({"member": [2, 1], "family": {"n": 4, "k": 2, "sets": [[3, 4]]}})
    assert h.member == KSet([1, 2])
    assert h.model_dump(mode="json") == {
        "member": [1, 2],
        "family": {"n": 4, "k": 2, "sets": [[3, 4]]},
    }


@pytest.mark.parametrize("seed", range(100))
def test_parse_inverts_serialize_on_random_families(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 12)
    k = rng.randint(1, min(n, 5))
    pool = list(iter_kmasks(n, k))
    f = Family.from_masks(n, k, rng.sample(pool, rng.randint(0, min(30, len(pool)))))
    for fmt in ("lines", "json"):
        assert parse_family(serialize_family(f, fmt), fmt) == f
