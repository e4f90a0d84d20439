"""Verification harness: exhaustive small-instance checks and exact extremal searches.

Each check returns a `CheckReport`. A report's violations are self-contained descriptors
that `revalidate` can re-evaluate from scratch, so every counterexample can be reproduced
without the run that found it. Grids of checks run through `run_checks`, sequentially or
on a process pool, always returning reports in job order.
"""

from __future__ import annotations

import logging
import os
import random
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from itertools import combinations
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from constructions import (
    GFamilySpec,
    canonical_g_spec,
    ell,
    enumeration_feasible,
    g1_size,
    g2_size,
    g_family,
    g_predicate,
    h1_family,
    h1_size,
    h2_family,
    h2_size,
    relabel_onto,
    star_union,
)
from invariants import (
    SearchBudget,
    SearchClock,
    bit_indices,
    color_sort,
    conflict_adjacency,
    first_clique,
)
from kneser import contains_pattern, extremal_gfree_family, parse_pattern
from setcore import (
    BigCount,
    BudgetExhausted,
    DecompositionInvalid,
    Family,
    InfeasibleGrid,
    InvalidParameters,
    KSet,
    TSetSystem,
    check_enumerable,
    count_subsets,
    enumerate_ksets,
    enumeration_limit,
    interval_mask,
    iter_kmasks,
    mask_elements,
)

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_MAX_N = 16


def enumeration_max_n() -> int:
    raw = os.getenv("TMATCH_ENUMERATION_MAX_N")
    return int(raw) if raw else DEFAULT_ENUMERATION_MAX_N


# ---------------------
# Reports
# ---------------------


class CheckReport(BaseModel):
    check: str
    params: dict[str, Any]
    tested: int = 0
    violations: list[dict[str, Any]] = Field(default_factory=list)
    certified: bool = True
    seconds: float | None = None
    details: dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.certified and not self.violations


class ExtremalSearchResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_size: int
    witness: Family
    certified: bool
    nodes: int
    reference: BigCount | None = None
    construction_size: BigCount | None = None

    @property
    def relation(self) -> Literal["below", "equal", "above"] | None:
        if self.reference is None:
            return None
        if self.max_size < self.reference:
            return "below"
        return "equal" if self.max_size == self.reference else "above"


class G1G2Comparison(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    k: int
    t: int
    s: int
    g1: BigCount
    g2: BigCount
    predicted_sign: int
    enumerated_difference: BigCount | None = None

    @property
    def difference(self) -> BigCount:
        return self.g1 - self.g2

    @property
    def observed_sign(self) -> int:
        return (self.difference > 0) - (self.difference < 0)

    @property
    def closed_agrees(self) -> bool | None:
        if self.enumerated_difference is None:
            return None
        return self.enumerated_difference == self.difference


def _sets(masks: Iterable[int]) -> list[list[int]]:
    return [list(mask_elements(m)) for m in masks]


def _timed(report: CheckReport, started: float) -> CheckReport:
    report.seconds = round(time.monotonic() - started, 3)
    logger.debug(
        "%s %s: tested=%d violations=%d certified=%s",
        report.check, report.params, report.tested, len(report.violations), report.certified,
    )
    return report


# ---------------------
# Union of stars
# ---------------------


def _star_union_size(n: int, k: int, centers: Sequence[int]) -> BigCount:
    """|S(T_1) ∪ ... ∪ S(T_m)| by inclusion-exclusion over the centre unions."""
    total = 0
    for r in range(1, len(centers) + 1):
        sign = 1 if r % 2 else -1
        for combo in combinations(centers, r):
            union = 0
            for c in combo:
                union |= c
            size = union.bit_count()
            total += sign * count_subsets(n - size, k - size)
    return total


def check_lemma_star(
    n: int,
    k: int,
    t: int,
    m: int,
    mode: Literal["exhaustive", "sample"] = "exhaustive",
    samples: int = 1000,
    seed: int = 0,
) -> CheckReport:
    """|S(T)| <= ell(n,k,t,m) for every (or a seeded sample of) system of m distinct t-sets."""
    started = time.monotonic()
    if n < m * t:
        raise InvalidParameters(f"need n >= mt, got n={n}, m={m}, t={t}")
    bound = ell(n, k, t, m)
    tsets = list(iter_kmasks(n, t))
    report = CheckReport(
        check="lemma-star", params={"n": n, "k": k, "t": t, "m": m, "mode": mode}
    )
    if mode == "exhaustive":
        estimate = count_subsets(len(tsets), m)
        if estimate > enumeration_limit():
            raise InfeasibleGrid(
                f"{estimate} centre systems exceed the limit {enumeration_limit()}",
                estimate=estimate,
            )
        systems: Iterable[tuple[int, ...]] = combinations(tsets, m)
    else:
        rng = random.Random(seed)
        report.params.update(samples=samples, seed=seed)
        systems = (tuple(rng.sample(tsets, m)) for _ in range(samples))

    equalities = 0
    disjoint_equal = True
    for system in systems:
        report.tested += 1
        size = _star_union_size(n, k, system)
        if size == bound:
            equalities += 1
        union = 0
        disjoint = True
        for c in system:
            disjoint &= not union & c
            union |= c
        if disjoint and size != bound:
            disjoint_equal = False
        if size > bound:
            report.violations.append(
                {
                    "kind": "lemma-star",
                    "n": n,
                    "k": k,
                    "t": t,
                    "centers": _sets(sorted(system, key=mask_elements)),
                    "size": size,
                    "bound": bound,
                }
            )
    report.details = {"bound": bound, "equalities": equalities, "disjoint_equal": disjoint_equal}
    return _timed(report, started)


# ---------------------
# Intersection counting estimates
# ---------------------


def _hit_masks(masks: Sequence[int], queries: Iterable[int], t: int) -> dict[int, int]:
    """For each query set A, the bitset of members F with |F ∩ A| >= t."""
    out = {}
    for a in queries:
        row = 0
        for i, f in enumerate(masks):
            if (f & a).bit_count() >= t:
                row |= 1 << i
        out[a] = row
    return out


def check_est1(n: int, k: int, t: int) -> CheckReport:
    """Pairs A, B with |A ∩ B| < t: #{F : |F∩A| >= t, |F∩B| >= t} <= C(2k,t+1)·C(n-t-1,k-t-1).

    The constant C(2t,t+1) and pairs with |A ∩ B| >= t are measured and reported, not asserted.
    """
    started = time.monotonic()
    if not 1 <= t < k <= n:
        raise InvalidParameters(f"need 1 <= t < k <= n, got n={n}, k={k}, t={t}")
    check_enumerable(n, k)
    tail = count_subsets(n - t - 1, k - t - 1)
    bound = count_subsets(2 * k, t + 1) * tail
    literal = count_subsets(2 * t, t + 1) * tail
    masks = list(iter_kmasks(n, k))
    hits = _hit_masks(masks, masks, t)
    report = CheckReport(check="est1", params={"n": n, "k": k, "t": t})
    literal_failures = 0
    max_count = 0
    unrestricted_max = 0
    for i, a in enumerate(masks):
        for b in masks[i + 1 :]:
            count = (hits[a] & hits[b]).bit_count()
            if (a & b).bit_count() >= t:
                unrestricted_max = max(unrestricted_max, count)
                continue
            report.tested += 1
            max_count = max(max_count, count)
            if count > literal:
                literal_failures += 1
            if count > bound:
                report.violations.append(
                    {
                        "kind": "est1",
                        "n": n,
                        "k": k,
                        "t": t,
                        "A": list(mask_elements(a)),
                        "B": list(mask_elements(b)),
                        "count": count,
                        "bound": bound,
                    }
                )
    report.details = {
        "bound": bound,
        "max_count": max_count,
        "literal_bound": literal,
        "literal_failures": literal_failures,
        "unrestricted_max": unrestricted_max,
        "unrestricted_exceeds_bound": unrestricted_max > bound,
    }
    return _timed(report, started)


def check_est2(n: int, k: int, t: int) -> CheckReport:
    """A k-set, T a t-set with T ⊄ A: #{F ∈ S(T) : |F∩A| >= t} <= C(k+t,t+1)·C(n-t-1,k-t-1)."""
    started = time.monotonic()
    if not 1 <= t <= k <= n:
        raise InvalidParameters(f"need 1 <= t <= k <= n, got n={n}, k={k}, t={t}")
    check_enumerable(n, k)
    bound = count_subsets(k + t, t + 1) * count_subsets(n - t - 1, k - t - 1)
    masks = list(iter_kmasks(n, k))
    tsets = list(iter_kmasks(n, t))
    stars = {}
    for c in tsets:
        row = 0
        for i, f in enumerate(masks):
            if f & c == c:
                row |= 1 << i
        stars[c] = row
    hits = _hit_masks(masks, masks, t)
    report = CheckReport(check="est2", params={"n": n, "k": k, "t": t})
    max_count = 0
    for a in masks:
        for c in tsets:
            if c & a == c:
                continue
            report.tested += 1
            count = (stars[c] & hits[a]).bit_count()
            max_count = max(max_count, count)
            if count > bound:
                report.violations.append(
                    {
                        "kind": "est2",
                        "n": n,
                        "k": k,
                        "t": t,
                        "A": list(mask_elements(a)),
                        "T": list(mask_elements(c)),
                        "count": count,
                        "bound": bound,
                    }
                )
    report.details = {"bound": bound, "max_count": max_count}
    return _timed(report, started)


# ---------------------
# Exact extremal searches
# ---------------------


def _clique_cover_bound(cand: int, adj: Sequence[int], cap: int) -> int:
    """Greedy clique partition of `cand`; each clique contributes at most `cap` vertices."""
    bound = 0
    rest = cand
    while rest:
        low = rest & -rest
        rest ^= low
        grow = rest & adj[low.bit_length() - 1]
        size = 1
        while grow:
            w = grow & -grow
            size += 1
            rest ^= w
            grow = (grow ^ w) & adj[w.bit_length() - 1]
        bound += min(size, cap)
    return bound


def extremal_search_nu(
    n: int, k: int, t: int, s: int, budget: SearchBudget | None = None
) -> ExtremalSearchResult:
    """Largest F ⊆ ([n] choose k) with ν_t(F) <= s, i.e. the largest K_{s+1}-free induced
    subgraph of the conflict graph. The first member is fixed to {1..k} by symmetry."""
    if s < 1 or not 1 <= t <= k <= n:
        raise InvalidParameters(f"need s >= 1 and 1 <= t <= k <= n, got n={n} k={k} t={t} s={s}")
    budget = budget or SearchBudget.from_env()
    clock = SearchClock(budget)
    masks = enumerate_ksets(n, k).masks
    adj = conflict_adjacency(masks, t)
    everyone = (1 << len(masks)) - 1
    best_mask = 1
    best = 1

    def addable_after(v: int, chosen: int, cand: int) -> int:
        keep = 0
        for u in bit_indices(cand):
            if not adj[u] >> v & 1:
                keep |= 1 << u
            elif first_clique(adj, chosen & adj[u] & adj[v], s - 1, clock) is None:
                keep |= 1 << u
        return keep

    def search(chosen: int, count: int, cand: int) -> None:
        nonlocal best, best_mask
        clock.tick()
        live = chosen | cand
        free = 0
        for u in bit_indices(cand):
            if (adj[u] & live).bit_count() < s:
                free |= 1 << u
        if free:
            chosen |= free
            cand &= ~free
            count += free.bit_count()
        if count > best:
            best, best_mask = count, chosen
        if not cand or count + _clique_cover_bound(cand, adj, s) <= best:
            return
        v = max(bit_indices(cand), key=lambda u: ((adj[u] & live).bit_count(), -u))
        bit = 1 << v
        rest = cand & ~bit
        search(chosen | bit, count + 1, addable_after(v, chosen, rest))
        search(chosen, count, rest)

    certified = True
    try:
        search(1, 1, addable_after(0, 0, everyone & ~1))
    except BudgetExhausted:
        logger.warning("extremal_search_nu budget exhausted after %d nodes", clock.nodes)
        certified = False
    reference = ell(n, k, t, s) if n >= s * t else None
    construction = None
    if reference is not None:
        windows = [interval_mask((r - 1) * t + 1, r * t) for r in range(1, s + 1)]
        construction = len(star_union(n, k, TSetSystem.from_masks(n, t, windows)))
    return ExtremalSearchResult(
        max_size=best,
        witness=Family.from_masks(n, k, [masks[i] for i in bit_indices(best_mask)]),
        certified=certified,
        nodes=clock.nodes,
        reference=reference,
        construction_size=construction,
    )


def extremal_search_nontrivial(
    n: int, k: int, t: int, budget: SearchBudget | None = None
) -> ExtremalSearchResult:
    """Largest t-intersecting family whose members share no common t-set."""
    if not 2 <= t < k <= n:
        raise InvalidParameters(f"need 2 <= t < k <= n, got n={n}, k={k}, t={t}")
    if n <= (t + 1) * (k - t + 1):
        raise InvalidParameters(f"need n > (t+1)(k-t+1) = {(t + 1) * (k - t + 1)}, got n={n}")
    budget = budget or SearchBudget.from_env()
    clock = SearchClock(budget)
    masks = enumerate_ksets(n, k).masks
    conflict = conflict_adjacency(masks, t)
    everyone = (1 << len(masks)) - 1
    share = [everyone & ~row & ~(1 << i) for i, row in enumerate(conflict)]
    best = 0
    best_mask = 0

    def expand(clique: int, count: int, common: int, cand: int) -> None:
        nonlocal best, best_mask
        verts, bounds = color_sort(cand, share)
        for idx in range(len(verts) - 1, -1, -1):
            if count + bounds[idx] <= best:
                return
            clock.tick()
            v = verts[idx]
            bit = 1 << v
            narrowed = common & masks[v]
            if narrowed.bit_count() < t and count + 1 > best:
                best, best_mask = count + 1, clique | bit
            nxt = cand & share[v]
            if nxt:
                expand(clique | bit, count + 1, narrowed, nxt)
            cand &= ~bit

    certified = True
    try:
        expand(1, 1, masks[0], share[0])
    except BudgetExhausted:
        logger.warning("extremal_search_nontrivial budget exhausted after %d nodes", clock.nodes)
        certified = False
    reference = None
    if n >= k + 1:
        reference = max(h1_size(n, k, t), h2_size(n, k, t))
    return ExtremalSearchResult(
        max_size=best,
        witness=Family.from_masks(n, k, [masks[i] for i in bit_indices(best_mask)]),
        certified=certified,
        nodes=clock.nodes,
        reference=reference,
        construction_size=reference,
    )


def _extremal_report(
    check: str, params: dict[str, Any], result: ExtremalSearchResult, asserted: bool
) -> CheckReport:
    report = CheckReport(
        check=check,
        params=params,
        tested=1,
        certified=result.certified,
        details={
            "max_size": result.max_size,
            "reference": result.reference,
            "construction_size": result.construction_size,
            "relation": result.relation,
            "asserted": asserted,
            "nodes": result.nodes,
            "witness": result.witness.sets(),
        },
    )
    if asserted and result.certified and result.relation != "equal":
        report.violations.append(
            {"kind": check, **params, "found": result.max_size, "expected": result.reference}
        )
    return report


def check_extremal_nu(
    n: int, k: int, t: int, s: int, budget: SearchBudget | None = None
) -> CheckReport:
    """Asserted only where the answer is independently known (s = t = 1 and n > 2k)."""
    started = time.monotonic()
    result = extremal_search_nu(n, k, t, s, budget)
    asserted = s == 1 and t == 1 and n > 2 * k
    params = {"n": n, "k": k, "t": t, "s": s}
    return _timed(_extremal_report("extremal-nu", params, result, asserted), started)


def check_extremal_nontrivial(
    n: int, k: int, t: int, budget: SearchBudget | None = None
) -> CheckReport:
    started = time.monotonic()
    result = extremal_search_nontrivial(n, k, t, budget)
    params = {"n": n, "k": k, "t": t}
    return _timed(_extremal_report("extremal-nontrivial", params, result, True), started)


# ---------------------
# G1 / G2 families
# ---------------------


def _rest_of_support(spec: GFamilySpec) -> int:
    rest = spec.tail_support.bits
    for c in spec.centers[1:]:
        rest |= c.bits
    return rest


def check_shift_monotonicity(spec: GFamilySpec, t1_star: KSet) -> CheckReport:
    """|G(T_1, ...)| <= |G(T_1*, ...)| when T_1 meets the rest of the support and T_1* avoids it.

    A T_1 that already avoids the rest is the same configuration up to relabeling, so the
    sizes must then be equal.
    """
    started = time.monotonic()
    if not spec.centers:
        raise InvalidParameters("the G family needs at least one centre (s >= 2)")
    rest = _rest_of_support(spec)
    if len(t1_star) != spec.t or t1_star.bits & rest or t1_star.max_element > spec.n:
        raise InvalidParameters("T1* must be a t-subset of [n] disjoint from the rest")
    already_disjoint = not spec.centers[0].bits & rest
    moved = spec.replace_first_center(t1_star)
    before = len(g_family(spec))
    after = len(g_family(moved))
    report = CheckReport(
        check="shift-mono",
        params={"n": spec.n, "k": spec.k, "t": spec.t, "s": spec.s, "shape": spec.shape},
        tested=1,
        details={"size_before": before, "size_after": after},
    )
    if already_disjoint:
        report.details["already_disjoint"] = True
    failed = before != after if already_disjoint else before > after
    if failed:
        report.violations.append(
            {
                "kind": "shift-mono-equal" if already_disjoint else "shift-mono",
                "spec": spec.model_dump(mode="json"),
                "t1_star": list(t1_star.elements),
                "size_before": before,
                "size_after": after,
            }
        )
    return _timed(report, started)


def overlapping_shift_instance(
    n: int, k: int, t: int, s: int, shape: Literal["g1", "g2"]
) -> tuple[GFamilySpec, KSet]:
    """The canonical layout with T_1 pulled onto the tail's first point; T_1* is [1, t]."""
    if s < 2:
        raise InvalidParameters("shift monotonicity needs s >= 2")
    disjoint = canonical_g_spec(n, k, t, s, shape)
    base = (s - 1) * t
    t1 = KSet([*range(1, t), base + 1])
    return disjoint.replace_first_center(t1), disjoint.centers[0]


def check_shift_mono_grid(n: int, k: int, t: int, s: int) -> CheckReport:
    started = time.monotonic()
    merged = CheckReport(check="shift-mono", params={"n": n, "k": k, "t": t, "s": s})
    for shape in ("g1", "g2"):
        spec, t1_star = overlapping_shift_instance(n, k, t, s, shape)
        part = check_shift_monotonicity(spec, t1_star)
        merged.tested += part.tested
        merged.violations += part.violations
        merged.details[shape] = part.details
    return _timed(merged, started)


def compare_g1_g2(n: int, k: int, t: int, s: int) -> G1G2Comparison:
    """Exact |G1| - |G2| on canonical disjoint supports, enumerated too when n is small."""
    if not 1 <= t < k or s < 1:
        raise InvalidParameters(f"need 1 <= t < k and s >= 1, got k={k}, t={t}, s={s}")
    comparison = G1G2Comparison(
        n=n,
        k=k,
        t=t,
        s=s,
        g1=g1_size(n, k, t, s),
        g2=g2_size(n, k, t, s),
        predicted_sign=1 if k > 2 * t + 1 else -1,
    )
    if n <= enumeration_max_n() and enumeration_feasible(n, k):
        g1 = len(g_family(canonical_g_spec(n, k, t, s, "g1")))
        g2 = len(g_family(canonical_g_spec(n, k, t, s, "g2")))
        comparison = comparison.model_copy(update={"enumerated_difference": g1 - g2})
    return comparison


def check_g1_g2(n: int, k: int, t: int, s: int) -> CheckReport:
    started = time.monotonic()
    cmp = compare_g1_g2(n, k, t, s)
    report = CheckReport(
        check="g1-vs-g2",
        params={"n": n, "k": k, "t": t, "s": s},
        tested=1,
        details={
            "g1": cmp.g1,
            "g2": cmp.g2,
            "difference": cmp.difference,
            "predicted_sign": cmp.predicted_sign,
            "observed_sign": cmp.observed_sign,
            "enumerated_difference": cmp.enumerated_difference,
        },
    )
    if cmp.closed_agrees is False:
        report.violations.append(
            {
                "kind": "g1-vs-g2-closed",
                "n": n,
                "k": k,
                "t": t,
                "s": s,
                "closed": cmp.difference,
                "enumerated": cmp.enumerated_difference,
            }
        )
    if cmp.observed_sign != cmp.predicted_sign:
        report.violations.append(
            {
                "kind": "g1-vs-g2-sign",
                "n": n,
                "k": k,
                "t": t,
                "s": s,
                "difference": cmp.difference,
                "predicted_sign": cmp.predicted_sign,
            }
        )
    return _timed(report, started)


# ---------------------
# Decompositions
# ---------------------


def decomposition_verify(family: Family, t: int, s: int, pieces: GFamilySpec) -> CheckReport:
    """F ⊆ S(T_1) ∪ ... ∪ S(T_{s-1}) ∪ tail, with the tail an H1(X, C) or H2(Z) copy."""
    started = time.monotonic()
    if (pieces.n, pieces.k, pieces.t, pieces.s) != (family.n, family.k, t, s):
        raise InvalidParameters("pieces do not match the family's n, k and the given t, s")
    member = g_predicate(pieces)
    for m in family.masks:
        if not member(m):
            uncovered = KSet.from_bits(m)
            raise DecompositionInvalid(f"{uncovered} is not covered", uncovered=uncovered)
    report = CheckReport(
        check="decomposition",
        params={"n": family.n, "k": family.k, "t": t, "s": s, "shape": pieces.shape},
        tested=len(family),
    )
    n, k = family.n, family.k
    if enumeration_feasible(n, k) and n >= k + 1:
        tail = g_family(pieces.model_copy(update={"centers": []}))
        if pieces.shape == "g1":
            assert pieces.X is not None and pieces.C is not None
            iso = relabel_onto(tail, [pieces.X, pieces.C]) == h1_family(n, k, t)
        else:
            assert pieces.Z is not None
            iso = relabel_onto(tail, [pieces.Z]) == h2_family(n, k, t)
        report.details["tail_isomorphic"] = iso
        if not iso:
            report.violations.append(
                {"kind": "decomposition-tail", "pieces": pieces.model_dump(mode="json")}
            )
    else:
        report.certified = False
    return _timed(report, started)


def find_decomposition(
    family: Family, t: int, s: int, budget: SearchBudget | None = None
) -> GFamilySpec | None:
    """Exhaustive search for s-1 centres plus an H1(X, C) or H2(Z) tail covering F (n <= 8)."""
    n, k = family.n, family.k
    if n > 8:
        raise InvalidParameters("decomposition search is limited to n <= 8")
    if s < 1 or not 1 <= t < k:
        raise InvalidParameters(f"need s >= 1 and 1 <= t < k, got s={s}, t={t}, k={k}")
    clock = SearchClock(budget or SearchBudget.from_env())
    tsets = [KSet.from_bits(m) for m in iter_kmasks(n, t)]
    tails: list[dict[str, KSet]] = []
    if k + 1 <= n:
        for c in iter_kmasks(n, k + 1):
            for x in iter_kmasks(n, t, within=c):
                tails.append({"X": KSet.from_bits(x), "C": KSet.from_bits(c)})
    if t + 2 <= n:
        tails += [{"Z": KSet.from_bits(z)} for z in iter_kmasks(n, t + 2)]
    for centers in combinations(tsets, s - 1):
        for tail in tails:
            clock.tick()
            spec = GFamilySpec(n=n, k=k, t=t, centers=list(centers), **tail)
            member = g_predicate(spec)
            if all(member(m) for m in family.masks):
                return spec
    return None


# ---------------------
# G-free families
# ---------------------


def check_gfree(
    n: int, k: int, t: int, pattern: str, budget: SearchBudget | None = None
) -> CheckReport:
    """The extremal G-free construction has exactly the bound's size and contains no G."""
    started = time.monotonic()
    g = parse_pattern(pattern)
    result = extremal_gfree_family(n, k, t, g, budget=budget)
    report = CheckReport(
        check="gfree",
        params={"n": n, "k": k, "t": t, "pattern": pattern},
        tested=1,
        details={
            "chi": result.chi,
            "eta": result.eta,
            "bound": result.bound,
            "size": len(result.family),
            "conditions": result.conditions,
        },
    )
    if not result.attains_bound:
        report.violations.append(
            {"kind": "gfree-size", **report.params, "size": len(result.family),
             "bound": result.bound}
        )
    try:
        found = contains_pattern(result.family, t, g, budget)
    except BudgetExhausted:
        report.certified = False
        return _timed(report, started)
    report.details["contains"] = found.contains
    if found.contains:
        assert found.witness is not None
        report.violations.append(
            {
                "kind": "gfree-contains",
                **report.params,
                "witness": {str(u): list(v.elements) for u, v in found.witness.items()},
            }
        )
    return _timed(report, started)


# ---------------------
# Revalidation and job running
# ---------------------


def revalidate(descriptor: dict[str, Any]) -> bool:
    """Re-evaluate one violation descriptor from scratch; True if it still reproduces."""
    kind = descriptor["kind"]
    if kind == "lemma-star":
        n, k, t = descriptor["n"], descriptor["k"], descriptor["t"]
        centers = TSetSystem(n, t, descriptor["centers"])
        return len(star_union(n, k, centers)) > ell(n, k, t, len(centers))
    if kind in ("est1", "est2"):
        n, k, t = descriptor["n"], descriptor["k"], descriptor["t"]
        a = KSet(descriptor["A"]).bits
        if kind == "est1":
            b = KSet(descriptor["B"]).bits
            if (a & b).bit_count() >= t:
                return False
            count = sum(
                1
                for f in iter_kmasks(n, k)
                if (f & a).bit_count() >= t and (f & b).bit_count() >= t
            )
            bound = count_subsets(2 * k, t + 1) * count_subsets(n - t - 1, k - t - 1)
        else:
            c = KSet(descriptor["T"]).bits
            if c & a == c:
                return False
            count = sum(1 for f in iter_kmasks(n, k) if f & c == c and (f & a).bit_count() >= t)
            bound = count_subsets(k + t, t + 1) * count_subsets(n - t - 1, k - t - 1)
        return count > bound
    if kind == "shift-mono":
        spec = GFamilySpec.model_validate(descriptor["spec"])
        moved = spec.replace_first_center(KSet(descriptor["t1_star"]))
        return len(g_family(spec)) > len(g_family(moved))
    if kind == "shift-mono-equal":
        spec = GFamilySpec.model_validate(descriptor["spec"])
        moved = spec.replace_first_center(KSet(descriptor["t1_star"]))
        return len(g_family(spec)) != len(g_family(moved))
    if kind == "g1-vs-g2-closed":
        cmp = compare_g1_g2(descriptor["n"], descriptor["k"], descriptor["t"], descriptor["s"])
        return cmp.closed_agrees is False
    if kind == "g1-vs-g2-sign":
        cmp = compare_g1_g2(descriptor["n"], descriptor["k"], descriptor["t"], descriptor["s"])
        return cmp.observed_sign != cmp.predicted_sign
    if kind in ("gfree-size", "gfree-contains"):
        g = parse_pattern(descriptor["pattern"])
        n, k, t = descriptor["n"], descriptor["k"], descriptor["t"]
        if kind == "gfree-size":
            return not extremal_gfree_family(n, k, t, g).attains_bound
        family = Family(n, k, descriptor["witness"].values())
        return contains_pattern(family, t, g).contains
    if kind == "extremal-nu":
        n, k, t, s = (descriptor[x] for x in ("n", "k", "t", "s"))
        return extremal_search_nu(n, k, t, s).max_size != descriptor["expected"]
    if kind == "extremal-nontrivial":
        n, k, t = (descriptor[x] for x in ("n", "k", "t"))
        return extremal_search_nontrivial(n, k, t).max_size != descriptor["expected"]
    if kind == "decomposition-tail":
        pieces = GFamilySpec.model_validate(descriptor["pieces"])
        tail = g_family(pieces.model_copy(update={"centers": []}))
        reference = h1_family if pieces.shape == "g1" else h2_family
        blocks = [pieces.X, pieces.C] if pieces.shape == "g1" else [pieces.Z]
        return relabel_onto(tail, [b for b in blocks if b is not None]) != reference(
            pieces.n, pieces.k, pieces.t
        )
    raise InvalidParameters(f"unknown violation kind {kind!r}")


class CheckJob(BaseModel):
    model_config = ConfigDict(frozen=True)

    check: str
    params: dict[str, Any]
    budget: SearchBudget | None = None


def _lemma_star_job(params: dict[str, Any], _budget: SearchBudget | None) -> CheckReport:
    return check_lemma_star(**params)


CHECKS: dict[str, Callable[[dict[str, Any], SearchBudget | None], CheckReport]] = {
    "lemma-star": _lemma_star_job,
    "est1": lambda p, _b: check_est1(p["n"], p["k"], p["t"]),
    "est2": lambda p, _b: check_est2(p["n"], p["k"], p["t"]),
    "extremal-nu": lambda p, b: check_extremal_nu(p["n"], p["k"], p["t"], p["s"], b),
    "extremal-nontrivial": lambda p, b: check_extremal_nontrivial(p["n"], p["k"], p["t"], b),
    "shift-mono": lambda p, _b: check_shift_mono_grid(p["n"], p["k"], p["t"], p["s"]),
    "g1-vs-g2": lambda p, _b: check_g1_g2(p["n"], p["k"], p["t"], p["s"]),
    "gfree": lambda p, b: check_gfree(p["n"], p["k"], p["t"], p["pattern"], b),
}


def run_job(job: CheckJob) -> CheckReport:
    try:
        runner = CHECKS[job.check]
    except KeyError as e:
        raise InvalidParameters(f"unknown check {job.check!r}") from e
    return runner(dict(job.params), job.budget)


def run_checks(jobs: Sequence[CheckJob], threads: int = 1) -> list[CheckReport]:
    """Run jobs in order; with threads > 1 on a process pool, results still in job order."""
    if threads <= 1 or len(jobs) <= 1:
        return [run_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_job, jobs))
