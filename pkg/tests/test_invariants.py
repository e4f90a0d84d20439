import random
from itertools import combinations
from pathlib import Path

import networkx as nx
import pytest
from pydantic import ValidationError

from invariants import (
    SearchBudget,
    SearchClock,
    conflict_adjacency,
    full_compress,
    full_compress_sweeps,
    is_maximal,
    is_t_intersecting,
    max_clique,
    nu_t,
    removal_number,
    shift,
    tau_t,
    trivial_center,
)
from setcore import (
    Family,
    InvalidParameters,
    KSet,
    NotTIntersecting,
    iter_kmasks,
    read_family,
)

FIXTURES = Path(__file__).parent / "fixtures"


# ---------------------
# Brute-force oracles
# ---------------------


def brute_nu(masks, t):
    best = 0
    for r in range(1, len(masks) + 1):
        if any(
            all((a & b).bit_count() < t for a, b in combinations(combo, 2))
            for combo in combinations(masks, r)
        ):
            best = r
        else:
            break
    return best


def has_matching(masks, s, t):
    return any(
        all((a & b).bit_count() < t for a, b in combinations(combo, 2))
        for combo in combinations(masks, s)
    )


def brute_tau(n, masks, t):
    """Iterative deepening: some chosen t-set must cover the first uncovered member."""
    if not masks:
        return 0
    hits = {
        c: frozenset(i for i, m in enumerate(masks) if c & m == c)
        for m in masks
        for c in iter_kmasks(n, t, within=m)
    }

    def coverable(uncovered, r):
        if not uncovered:
            return True
        if r == 0:
            return False
        first = masks[min(uncovered)]
        options = {hits[c] & uncovered for c in iter_kmasks(n, t, within=first)}
        # a choice hitting a subset of another choice's members never helps
        best = [o for o in options if not any(o < p for p in options)]
        return any(coverable(uncovered - o, r - 1) for o in best)

    everyone = frozenset(range(len(masks)))
    return next(r for r in range(1, len(masks) + 1) if coverable(everyone, r))


def brute_removal(masks, s, t):
    for r in range(len(masks) + 1):
        for drop in combinations(range(len(masks)), r):
            rest = [m for i, m in enumerate(masks) if i not in drop]
            if not has_matching(rest, s, t):
                return r
    raise AssertionError("removing everything always works")


def random_family(rng):
    n = rng.randint(4, 6)
    k = rng.randint(2, min(3, n - 1))
    pool = list(iter_kmasks(n, k))
    masks = rng.sample(pool, rng.randint(1, min(7, len(pool))))
    return Family.from_masks(n, k, masks), rng.randint(1, k)


def random_oracle_family(rng):
    n = rng.randint(4, 8)
    k = rng.randint(2, min(4, n - 1))
    pool = list(iter_kmasks(n, k))
    masks = rng.sample(pool, rng.randint(1, min(14, len(pool))))
    return Family.from_masks(n, k, masks), rng.randint(1, min(3, k))


# ---------------------
# The shifting exhibit
# ---------------------


def test_full_compress_of_exhibit_and_nu_increase():
    f = read_family(FIXTURES / "shift_example.lines")
    g = full_compress(f)
    assert g.sets() == [
        [1, 2, 3],
        [1, 2, 4],
        [1, 2, 5],
        [1, 2, 6],
        [1, 3, 4],
        [1, 3, 5],
        [1, 3, 6],
        [2, 3, 4],
    ]
    before, after = nu_t(f, 2), nu_t(g, 2)
    assert (before.value, after.value) == (2, 3)
    assert before.certified and after.certified
    assert after.witness.is_valid_for(g)


def test_shift_moves_only_new_sets():
    f = Family(4, 2, [[1, 2], [2, 3], [1, 3]])
    # {2,3} -> {1,3} already present, so it stays
    assert shift(f, 1, 2).sets() == [[1, 2], [1, 3], [2, 3]]
    g = Family(4, 2, [[2, 3], [3, 4]])
    assert shift(g, 1, 3).sets() == [[1, 2], [1, 4]]
    with pytest.raises(InvalidParameters):
        shift(f, 2, 2)
    with pytest.raises(InvalidParameters):
        shift(f, 1, 5)


@pytest.mark.parametrize("seed", range(10))
def test_full_compress_terminates_and_preserves_size(seed):
    f, _ = random_family(random.Random(seed))
    g, sweeps = full_compress_sweeps(f)
    assert len(g) == len(f)
    assert sweeps <= f.n**2
    assert full_compress(g) == g


# ---------------------
# nu / tau / removal against oracles
# ---------------------


@pytest.mark.parametrize("seed", range(200))
def test_nu_tau_removal_match_brute_force(seed):
    rng = random.Random(1000 + seed)
    f, t = random_oracle_family(rng)
    masks = list(f.masks)

    nu = nu_t(f, t)
    assert nu.certified
    assert nu.value == brute_nu(masks, t)
    assert len(nu.witness.sets) == nu.value
    assert nu.witness.is_valid_for(f)
    assert is_t_intersecting(f, t) == (nu.value <= 1)

    tau = tau_t(f, t)
    assert tau.certified
    assert tau.value == brute_tau(f.n, masks, t)
    assert tau.covers(f)
    assert len(tau.cover) == tau.value

    s = rng.randint(1, 3)
    removal = removal_number(f, s, t)
    assert removal.certified
    assert removal.value == brute_removal(masks, s, t)
    rest = f.without_members(removal.removed)
    assert len(removal.removed) == removal.value
    assert nu_t(rest, t).value < s


def test_nu_agrees_with_networkx_cliques():
    f = Family.from_masks(7, 3, list(iter_kmasks(7, 3))[:20])
    adj = conflict_adjacency(f.masks, 2)
    g = nx.Graph()
    g.add_nodes_from(range(len(adj)))
    edges = [
        (i, j) for i, row in enumerate(adj) for j in range(i + 1, len(adj)) if row >> j & 1
    ]
    g.add_edges_from(edges)
    expected = max(len(c) for c in nx.find_cliques(g))
    assert nu_t(f, 2).value == expected
    assert len(max_clique(adj, SearchClock(SearchBudget()))) == expected


def test_nu_witness_is_lexicographically_least():
    f = Family(6, 2, [[1, 2], [3, 4], [5, 6], [1, 3]])
    nu = nu_t(f, 1)
    assert nu.value == 3
    assert [s.elements for s in nu.witness.sets] == [(1, 2), (3, 4), (5, 6)]


@pytest.mark.parametrize("seed", range(10))
def test_nu_is_monotone_under_adding_a_set(seed):
    rng = random.Random(seed)
    f, t = random_family(rng)
    outside = [m for m in iter_kmasks(f.n, f.k) if m not in set(f.masks)]
    if not outside:
        pytest.skip("family already complete")
    g = f.union(Family.from_masks(f.n, f.k, [rng.choice(outside)]))
    a, b = nu_t(f, t).value, nu_t(g, t).value
    assert a <= b <= a + 1


def test_nu_and_tau_of_empty_family():
    empty = Family(5, 2)
    assert nu_t(empty, 1).value == 0
    assert tau_t(empty, 1).value == 0


def test_tau_examples():
    star = Family(6, 3, [[1, 2, 3], [1, 2, 4], [1, 2, 5], [1, 2, 6]])
    cover = tau_t(star, 2)
    assert cover.value == 1
    assert cover.cover.sets() == [[1, 2]]
    matching = Family(8, 2, [[1, 2], [3, 4], [5, 6], [7, 8]])
    assert tau_t(matching, 1).value == 4


def test_removal_examples():
    matching = Family(6, 2, [[1, 2], [3, 4], [5, 6]])
    assert removal_number(matching, 3, 1).value == 1
    assert removal_number(matching, 4, 1).value == 0
    assert removal_number(matching, 1, 1).value == 3
    with pytest.raises(InvalidParameters):
        removal_number(matching, 0, 1)


def test_nu_budget_exhaustion_is_uncertified():
    matching = Family(8, 2, [[1, 2], [3, 4], [5, 6], [7, 8]])
    result = nu_t(matching, 1, SearchBudget(max_nodes=1))
    assert not result.certified
    assert 1 <= result.value <= 4


def test_search_budget_validation_and_env(monkeypatch):
    with pytest.raises(ValidationError):
        SearchBudget(max_nodes=0)
    monkeypatch.setenv("TMATCH_MAX_NODES", "123")
    monkeypatch.setenv("TMATCH_MAX_SECONDS", "4.5")
    budget = SearchBudget.from_env()
    assert (budget.max_nodes, budget.max_seconds) == (123, 4.5)


# ---------------------
# Intersection predicates
# ---------------------


def test_trivial_center():
    star = Family(6, 3, [[1, 2, 3], [1, 2, 4], [1, 2, 5]])
    assert trivial_center(star, 2) == KSet([1, 2])
    assert trivial_center(Family(6, 3), 2) == KSet([1, 2])
    nontrivial = Family(4, 3, [[1, 2, 3], [1, 2, 4], [1, 3, 4], [2, 3, 4]])
    assert is_t_intersecting(nontrivial, 2)
    assert trivial_center(nontrivial, 2) is None
    with pytest.raises(NotTIntersecting):
        trivial_center(Family(6, 3, [[1, 2, 3], [4, 5, 6]]), 1)
    with pytest.raises(InvalidParameters):
        is_t_intersecting(star, 4)


def test_is_maximal():
    star = Family.from_masks(6, 3, [m for m in iter_kmasks(6, 3) if m & 0b11 == 0b11])
    assert is_maximal(star, 2)
    assert not is_maximal(star.without_members([[1, 2, 6]]), 2)
