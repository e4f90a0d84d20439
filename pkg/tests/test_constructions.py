import logging

import pytest
from pydantic import ValidationError

from constructions import (
    FamilyISpec,
    GFamilySpec,
    HMTypeSpec,
    canonical_g_spec,
    centers_from_text,
    describe_spec,
    emc_bound,
    emc_family,
    emc_size,
    ell,
    family_I,
    family_II,
    g1_family,
    g1_size,
    g2_family,
    g2_size,
    g_family,
    g_size,
    h1_family,
    h1_size,
    h2_family,
    h2_size,
    h_size_report,
    hm1_family,
    hm1_size,
    hm1_size_report,
    hm_t_family,
    relabel_onto,
    star,
    star_union,
)
from invariants import is_t_intersecting, nu_t, tau_t, trivial_center
from setcore import InvalidParameters, KSet, TSetSystem, count_subsets


def test_star_members_contain_centre():
    f = star(6, 3, [1, 2])
    assert f.sets() == [[1, 2, 3], [1, 2, 4], [1, 2, 5], [1, 2, 6]]
    assert len(star(8, 3, [4])) == count_subsets(7, 2)
    with pytest.raises(InvalidParameters):
        star(6, 2, [1, 2, 3])


@pytest.mark.parametrize(
    "n, k, t, m",
    [(8, 3, 1, 2), (9, 4, 2, 2), (10, 4, 1, 3), (10, 3, 1, 2), (9, 3, 2, 3)],
)
def test_ell_matches_enumerated_star_union(n, k, t, m):
    centers = TSetSystem(n, t, [list(range(r * t + 1, (r + 1) * t + 1)) for r in range(m)])
    assert len(star_union(n, k, centers)) == ell(n, k, t, m)


def test_ell_values_and_errors():
    assert ell(10, 3, 1, 2) == 64
    assert ell(6, 3, 2, 2) == 8
    assert ell(6, 3, 1, 0) == 0
    with pytest.raises(InvalidParameters):
        ell(5, 3, 2, 3)


def test_ell_runs_beyond_enumeration():
    # closed forms never enumerate
    assert ell(1000, 3, 1, 1) == count_subsets(999, 2)


# ---------------------
# Erdős matching families
# ---------------------


def test_emc_sizes():
    assert emc_size(12, 3, 2, 1) == 100
    assert len(emc_family(12, 3, 2, 1)) == 100
    assert len(emc_family(10, 3, 2, 3)) == emc_size(10, 3, 2, 3) == count_subsets(8, 3)
    assert emc_bound(12, 3, 2) == max(100, count_subsets(8, 3))
    with pytest.raises(InvalidParameters):
        emc_size(5, 3, 2, 3)


@pytest.mark.parametrize("i", [1, 2, 3])
def test_emc_family_has_matching_number_s(i):
    f = emc_family(9, 3, 2, i)
    assert nu_t(f, 1).value == 2


# ---------------------
# Non-trivial t-intersecting families
# ---------------------


def test_h1_h2_at_seven_three_two():
    h1 = h1_family(7, 3, 2)
    assert h1.sets() == [[1, 2, 3], [1, 2, 4], [1, 3, 4], [2, 3, 4]]
    assert len(h2_family(7, 3, 2)) == h2_size(7, 3, 2) == 4
    assert h1_size(7, 3, 2) == 4
    assert len(star(7, 3, [1, 2])) == 5


@pytest.mark.parametrize("n, k, t", [(7, 3, 1), (8, 3, 2), (9, 4, 2), (9, 4, 1), (10, 5, 2)])
def test_h1_h2_are_nontrivial_t_intersecting(n, k, t):
    pairs = [(h1_family(n, k, t), h1_size(n, k, t)), (h2_family(n, k, t), h2_size(n, k, t))]
    for family, size in pairs:
        assert len(family) == size
        assert is_t_intersecting(family, t)
        assert trivial_center(family, t) is None


def test_h2_size_value():
    assert h2_size(9, 4, 2) == 21


def test_family_i_and_ii():
    spec = FamilyISpec(n=7, k=3, t=1, X=KSet([1]), M=KSet([1, 2, 3]), C=KSet([1, 2, 3, 4]))
    f = family_I(spec)
    assert len(f) == 13
    assert is_t_intersecting(f, 1)
    assert trivial_center(f, 1) is None
    assert len(family_II(7, 3, 1, [1, 2, 3])) == 13
    with pytest.raises(InvalidParameters):
        family_II(7, 3, 1, [1, 2])


def test_family_i_spec_validation():
    with pytest.raises(ValidationError):
        FamilyISpec(n=7, k=3, t=1, X=KSet([5]), M=KSet([1, 2, 3]), C=KSet([1, 2, 3, 4]))
    with pytest.raises(ValidationError):
        # |C| = 6 is neither in k+1..2k-t nor n
        FamilyISpec(n=7, k=3, t=1, X=KSet([1]), M=KSet([1, 2, 3]), C=KSet(range(1, 7)))


# ---------------------
# HM-type families
# ---------------------


@pytest.mark.parametrize(
    "n, k, t, s",
    [(8, 3, 1, 2), (9, 4, 1, 2), (10, 4, 2, 2), (11, 5, 1, 3), (9, 3, 1, 3)],
)
def test_hm_t_enumeration_matches_closed_form(n, k, t, s):
    report = h_size_report(n, k, t, s)
    assert report.agrees is True
    f = hm_t_family(HMTypeSpec(n=n, k=k, t=t, s=s))
    assert nu_t(f, t).value <= s


HM_GRID = [
    (s * t + k + 6, k, t, s)
    for t in (1, 2)
    for k in range(t + 1, min(5, 2 * t + 2) + 1)
    for s in (1, 2, 3)
]


@pytest.mark.parametrize("n, k, t, s", HM_GRID)
def test_hm_t_has_matching_number_s_and_no_small_cover(n, k, t, s):
    f = hm_t_family(HMTypeSpec(n=n, k=k, t=t, s=s))
    assert nu_t(f, t).value == s
    assert tau_t(f, t).value >= s + 1
    assert len(f) > ell(n, k, t, s - 1)


def test_hm_t_case_and_window_check():
    assert HMTypeSpec(n=8, k=3, t=1, s=2).case == "i"
    assert HMTypeSpec(n=9, k=4, t=1, s=2).case == "ii"
    with pytest.raises(ValidationError):
        HMTypeSpec(n=5, k=4, t=1, s=2)


def test_hm1_displayed_formula_disagrees(caplog):
    with caplog.at_level(logging.INFO, logger="constructions"):
        report = hm1_size_report(12, 3, 2)
    assert report.enumerated == report.closed_form == 80
    assert report.literal_formula == 35
    assert report.literal_agrees is False
    assert "displayed formula" in caplog.text
    hm1 = hm1_family(12, 3, 2)
    assert len(hm1) == 80
    assert nu_t(hm1, 1).value == 2
    assert tau_t(hm1, 1).value > 2
    # closed form alone beyond enumeration
    assert hm1_size(200, 3, 2) == hm1_size_report(200, 3, 2).closed_form


# ---------------------
# G1 / G2
# ---------------------


@pytest.mark.parametrize("shape", ["g1", "g2"])
@pytest.mark.parametrize("n, k, t, s", [(8, 3, 1, 2), (9, 4, 2, 2), (10, 3, 1, 3), (10, 5, 2, 2)])
def test_g_sizes_match_enumeration(shape, n, k, t, s):
    spec = canonical_g_spec(n, k, t, s, shape)
    assert spec.shape == shape and spec.s == s
    assert len(g_family(spec)) == g_size(spec)


def test_g2_size_value():
    assert g2_size(8, 3, 1, 2) == 34


@pytest.mark.parametrize("n", range(8, 13))
def test_g1_minus_g2_closed_forms(n):
    assert g1_size(n, 5, 2, 2) - g2_size(n, 5, 2, 2) == 18 - 3 * n
    assert g1_size(n, 4, 2, 2) - g2_size(n, 4, 2, 2) == 5 - n
    assert g1_size(n, 3, 1, 2) == g2_size(n, 3, 1, 2)


def test_g_spec_validation_and_description():
    spec = canonical_g_spec(8, 3, 1, 2, "g2")
    assert describe_spec(spec) == "T1={1} Z={2,3,4}"
    with pytest.raises(ValidationError):
        GFamilySpec(n=8, k=3, t=1, centers=[KSet([1])], X=KSet([2]))
    with pytest.raises(ValidationError):
        GFamilySpec(n=8, k=3, t=1, centers=[KSet([1])], Z=KSet([2, 3, 4]), X=KSet([2]))
    overlapping = spec.replace_first_center(KSet([2]))
    assert not overlapping.is_disjoint()
    with pytest.raises(InvalidParameters):
        g_size(overlapping)


def test_centers_from_text_and_relabel():
    centers = centers_from_text(6, "3 4; 1 2")
    assert centers.sets() == [[1, 2], [3, 4]]
    with pytest.raises(InvalidParameters):
        centers_from_text(6, "1 2;3")
    f = star(5, 2, [4])
    assert relabel_onto(f, [KSet([4])]).sets() == [[1, 2], [1, 3], [1, 4], [1, 5]]


def test_g1_g2_family_check_shape():
    g1 = canonical_g_spec(8, 3, 1, 2, "g1")
    g2 = canonical_g_spec(8, 3, 1, 2, "g2")
    assert len(g1_family(g1)) == g1_size(8, 3, 1, 2)
    assert len(g2_family(g2)) == 34
    with pytest.raises(InvalidParameters):
        g1_family(g2)
    with pytest.raises(InvalidParameters):
        g2_family(g1)
