"""Exact family invariants: t-matching and t-covering numbers, removal numbers, shifting.

Every search here runs against a `SearchBudget`. Running out of budget never produces a
wrong answer: results carry `certified=False` together with the best bound found so far.
The conflict graph of a family (members adjacent when they meet in fewer than t points)
is held as one adjacency bitmask per member, indexed in canonical family order.
"""

from __future__ import annotations

import logging
import os
import time
from collections.abc import Sequence

from pydantic import BaseModel, ConfigDict, Field

from setcore import (
    BudgetExhausted,
    Family,
    InvalidParameters,
    KSet,
    NotTIntersecting,
    TSetSystem,
    check_enumerable,
    iter_kmasks,
    mask_elements,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_NODES = 50_000_000
DEFAULT_MAX_SECONDS = 600.0


# ---------------------
# Budgets
# ---------------------


class SearchBudget(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_nodes: int = Field(default=DEFAULT_MAX_NODES, gt=0)
    max_seconds: float = Field(default=DEFAULT_MAX_SECONDS, gt=0)

    @classmethod
    def from_env(cls) -> SearchBudget:
        """Defaults overridden by TMATCH_MAX_NODES / TMATCH_MAX_SECONDS when set."""
        values: dict[str, float] = {}
        nodes = os.getenv("TMATCH_MAX_NODES")
        seconds = os.getenv("TMATCH_MAX_SECONDS")
        if nodes:
            values["max_nodes"] = int(nodes)
        if seconds:
            values["max_seconds"] = float(seconds)
        return cls.model_validate(values)


class SearchClock:
    """Counts search nodes and raises `BudgetExhausted` once either limit is crossed."""

    __slots__ = ("_deadline", "_max_nodes", "_started", "nodes")

    def __init__(self, budget: SearchBudget) -> None:
        self._max_nodes = budget.max_nodes
        self._started = time.monotonic()
        self._deadline = self._started + budget.max_seconds
        self.nodes = 0

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes > self._max_nodes:
            raise BudgetExhausted(f"node budget of {self._max_nodes} exhausted")
        if not self.nodes & 0x3FF and time.monotonic() > self._deadline:
            raise BudgetExhausted(f"time budget exhausted after {self.nodes} nodes")

    @property
    def seconds(self) -> float:
        return time.monotonic() - self._started


# ---------------------
# Result models
# ---------------------


class MatchingWitness(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: int
    sets: list[KSet] = Field(default_factory=list)

    def is_valid_for(self, family: Family) -> bool:
        if any(s not in family for s in self.sets):
            return False
        if len(set(self.sets)) != len(self.sets):
            return False
        bits = [s.bits for s in self.sets]
        return all(
            (bits[i] & bits[j]).bit_count() < self.t
            for i in range(len(bits))
            for j in range(i + 1, len(bits))
        )


class MatchingResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: int
    witness: MatchingWitness
    certified: bool = True
    nodes: int = 0


class CoverResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: int
    cover: TSetSystem
    certified: bool = True
    nodes: int = 0

    def covers(self, family: Family) -> bool:
        cover = self.cover.masks
        return all(any(c & ~m == 0 for c in cover) for m in family.masks)


class RemovalResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: int
    removed: list[KSet] = Field(default_factory=list)
    certified: bool = True
    nodes: int = 0


# ---------------------
# Conflict-graph primitives
# ---------------------


def conflict_adjacency(masks: Sequence[int], t: int) -> list[int]:
    """adj[i] has bit j set iff members i and j share fewer than t elements."""
    size = len(masks)
    adj = [0] * size
    for i in range(size):
        a = masks[i]
        row = 0
        for j in range(i + 1, size):
            if (a & masks[j]).bit_count() < t:
                row |= 1 << j
                adj[j] |= 1 << i
        adj[i] |= row
    return adj


def bit_indices(bits: int) -> list[int]:
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length() - 1)
        bits ^= low
    return out


def greedy_colors(cand: int, adj: Sequence[int], stop: int | None = None) -> int:
    """Number of classes in a sequential greedy colouring of `cand` (a clique-size bound)."""
    colors = 0
    rest = cand
    while rest:
        colors += 1
        if stop is not None and colors >= stop:
            return colors
        q = rest
        while q:
            low = q & -q
            q ^= low
            q &= ~adj[low.bit_length() - 1]
            rest ^= low
    return colors


def color_sort(cand: int, adj: Sequence[int]) -> tuple[list[int], list[int]]:
    verts: list[int] = []
    bounds: list[int] = []
    color = 0
    rest = cand
    while rest:
        color += 1
        q = rest
        while q:
            low = q & -q
            v = low.bit_length() - 1
            q ^= low
            q &= ~adj[v]
            rest ^= low
            verts.append(v)
            bounds.append(color)
    return verts, bounds


def degeneracy_order(adj: Sequence[int]) -> list[int]:
    """Smallest-last ordering, reversed so the densest core comes first; ties by index."""
    size = len(adj)
    degree = [a.bit_count() for a in adj]
    alive = set(range(size))
    removed: list[int] = []
    for _ in range(size):
        v = min(alive, key=lambda i: (degree[i], i))
        alive.discard(v)
        removed.append(v)
        for u in bit_indices(adj[v]):
            if u in alive:
                degree[u] -= 1
    removed.reverse()
    return removed


def max_clique(adj: Sequence[int], clock: SearchClock) -> list[int]:
    """A maximum clique by colour-bounded branch and bound; indices ascending.

    On budget exhaustion the raised `BudgetExhausted` carries the incumbent in `best`.
    """
    size = len(adj)
    if size == 0:
        return []
    order = degeneracy_order(adj)
    pos = {v: p for p, v in enumerate(order)}
    padj = []
    for v in order:
        row = 0
        for u in bit_indices(adj[v]):
            row |= 1 << pos[u]
        padj.append(row)

    best: list[int] = [0]

    def expand(clique: list[int], cand: int) -> None:
        nonlocal best
        verts, bounds = color_sort(cand, padj)
        for idx in range(len(verts) - 1, -1, -1):
            if len(clique) + bounds[idx] <= len(best):
                return
            clock.tick()
            v = verts[idx]
            clique.append(v)
            nxt = cand & padj[v]
            if nxt:
                expand(clique, nxt)
            elif len(clique) > len(best):
                best = clique.copy()
            clique.pop()
            cand &= ~(1 << v)

    try:
        expand([], (1 << size) - 1)
    except BudgetExhausted as e:
        e.best = sorted(order[p] for p in best)
        raise
    return sorted(order[p] for p in best)


def first_clique(
    adj: Sequence[int], cand: int, size: int, clock: SearchClock
) -> list[int] | None:
    """Lexicographically least clique of exactly `size` vertices inside `cand`, or None."""
    chosen: list[int] = []

    def dfs(pool: int, need: int) -> bool:
        if need == 0:
            return True
        if pool.bit_count() < need:
            return False
        if need > 1 and greedy_colors(pool, adj, stop=need) < need:
            return False
        q = pool
        while q:
            clock.tick()
            low = q & -q
            q ^= low
            if q.bit_count() + 1 < need:
                return False
            v = low.bit_length() - 1
            chosen.append(v)
            if dfs(q & adj[v], need - 1):
                return True
            chosen.pop()
        return False

    return chosen if dfs(cand, size) else None


def _require_t(family: Family, t: int) -> None:
    if not 1 <= t <= family.k:
        raise InvalidParameters(f"t must lie in 1..k={family.k}, got {t}")


# ---------------------
# Intersection predicates
# ---------------------


def is_t_intersecting(family: Family, t: int) -> bool:
    _require_t(family, t)
    masks = family.masks
    for i, a in enumerate(masks):
        for b in masks[i + 1 :]:
            if (a & b).bit_count() < t:
                return False
    return True


def trivial_center(family: Family, t: int) -> KSet | None:
    """The lexicographically least t-set inside every member, or None for a non-trivial family.

    The empty family is vacuously trivial with centre {1..t}.
    """
    if not is_t_intersecting(family, t):
        raise NotTIntersecting(f"family is not {t}-intersecting")
    if not family.masks:
        return KSet(range(1, t + 1))
    common = -1
    for m in family.masks:
        common &= m
    if common.bit_count() < t:
        return None
    return KSet(mask_elements(common)[:t])


# ---------------------
# t-matching number
# ---------------------


def nu_t(family: Family, t: int, budget: SearchBudget | None = None) -> MatchingResult:
    """Maximum t-matching, with the lexicographically least optimal witness."""
    _require_t(family, t)
    budget = budget or SearchBudget.from_env()
    masks = family.masks
    if not masks:
        return MatchingResult(value=0, witness=MatchingWitness(t=t))
    clock = SearchClock(budget)
    adj = conflict_adjacency(masks, t)

    def result(indices: list[int], certified: bool) -> MatchingResult:
        witness = MatchingWitness(t=t, sets=[KSet.from_bits(masks[i]) for i in sorted(indices)])
        return MatchingResult(
            value=len(indices), witness=witness, certified=certified, nodes=clock.nodes
        )

    try:
        best = max_clique(adj, clock)
    except BudgetExhausted as e:
        logger.warning("nu_t budget exhausted after %d nodes; returning lower bound", clock.nodes)
        return result(e.best or [0], certified=False)

    try:
        canonical = first_clique(adj, (1 << len(masks)) - 1, len(best), clock)
    except BudgetExhausted:
        logger.warning("nu_t: canonical witness search ran out of budget; value is exact")
        canonical = None
    logger.debug("nu_t=%d t=%d |F|=%d nodes=%d", len(best), t, len(masks), clock.nodes)
    return result(canonical if canonical is not None else best, certified=True)


def is_maximal(family: Family, t: int, budget: SearchBudget | None = None) -> bool:
    """True iff adding any k-set outside the family raises its t-matching number.

    Raises `BudgetExhausted` if the check cannot be completed.
    """
    _require_t(family, t)
    budget = budget or SearchBudget.from_env()
    check_enumerable(family.n, family.k)
    nu = nu_t(family, t, budget)
    if not nu.certified:
        raise BudgetExhausted("nu_t could not be certified")
    masks = family.masks
    adj = conflict_adjacency(masks, t)
    clock = SearchClock(budget)
    inside = set(masks)
    for g in iter_kmasks(family.n, family.k):
        if g in inside:
            continue
        around = 0
        for i, m in enumerate(masks):
            if (g & m).bit_count() < t:
                around |= 1 << i
        if first_clique(adj, around, nu.value, clock) is None:
            return False
    return True


# ---------------------
# t-covering number
# ---------------------


def tau_t(family: Family, t: int, budget: SearchBudget | None = None) -> CoverResult:
    """Minimum t-covering family, searched over the t-subsets of the members."""
    _require_t(family, t)
    budget = budget or SearchBudget.from_env()
    masks = family.masks
    n = family.n
    if not masks:
        return CoverResult(value=0, cover=TSetSystem(n, t))
    clock = SearchClock(budget)
    size = len(masks)
    full = (1 << size) - 1

    covers: dict[int, int] = {}
    for i, m in enumerate(masks):
        for c in iter_kmasks(n, t, within=m):
            covers[c] = covers.get(c, 0) | (1 << i)
    options_of = [list(iter_kmasks(n, t, within=m)) for m in masks]

    # members sharing >= t elements with i, i included: they may share a cover element
    share = [0] * size
    for i, a in enumerate(masks):
        for j in range(size):
            if (a & masks[j]).bit_count() >= t:
                share[i] |= 1 << j

    def lower_bound(uncovered: int) -> int:
        count = 0
        while uncovered:
            low = uncovered & -uncovered
            uncovered &= ~share[low.bit_length() - 1]
            count += 1
        return count

    # greedy upper bound; ties go to the canonically first candidate
    ranked = sorted(covers, key=mask_elements)
    best: list[int] = []
    uncovered = full
    while uncovered:
        pick = max(ranked, key=lambda c: (covers[c] & uncovered).bit_count())
        best.append(pick)
        uncovered &= ~covers[pick]

    chosen: list[int] = []

    def search(uncovered: int) -> None:
        nonlocal best
        clock.tick()
        if not uncovered:
            if len(chosen) < len(best):
                best = chosen.copy()
            return
        if len(chosen) + lower_bound(uncovered) >= len(best):
            return
        low = uncovered & -uncovered
        i = low.bit_length() - 1
        seen: set[int] = set()
        opts = []
        for c in options_of[i]:
            gain = covers[c] & uncovered
            if gain not in seen:
                seen.add(gain)
                opts.append((c, gain))
        opts.sort(key=lambda cg: -cg[1].bit_count())
        for c, gain in opts:
            chosen.append(c)
            search(uncovered & ~gain)
            chosen.pop()

    certified = True
    try:
        search(full)
    except BudgetExhausted:
        logger.warning("tau_t budget exhausted after %d nodes; returning upper bound", clock.nodes)
        certified = False
    logger.debug("tau_t=%d t=%d |F|=%d nodes=%d", len(best), t, size, clock.nodes)
    return CoverResult(
        value=len(best),
        cover=TSetSystem.from_masks(n, t, best),
        certified=certified,
        nodes=clock.nodes,
    )


# ---------------------
# Removal number
# ---------------------


def removal_number(
    family: Family, s: int, t: int, budget: SearchBudget | None = None
) -> RemovalResult:
    """Fewest members whose deletion leaves no t-matching of size s."""
    if s < 1:
        raise InvalidParameters(f"s must be >= 1, got {s}")
    _require_t(family, t)
    budget = budget or SearchBudget.from_env()
    masks = family.masks
    size = len(masks)
    if s == 1:
        return RemovalResult(value=size, removed=list(family))
    clock = SearchClock(budget)
    adj = conflict_adjacency(masks, t)
    full = (1 << size) - 1
    deleted: list[int] = []

    def feasible(alive: int, protected: int, left: int) -> bool:
        clock.tick()
        clique = first_clique(adj, alive, s, clock)
        if clique is None:
            return True
        if left == 0:
            return False
        kept = protected
        for v in clique:
            bit = 1 << v
            if protected & bit:
                continue
            deleted.append(v)
            if feasible(alive & ~bit, kept, left - 1):
                return True
            deleted.pop()
            kept |= bit
        return False

    # keeping any s-1 members always works
    upper = max(0, size - s + 1)
    depth = 0
    try:
        while depth < upper:
            if feasible(full, 0, depth):
                break
            depth += 1
    except BudgetExhausted:
        logger.warning("removal_number budget exhausted; %d is a lower bound", depth)
        return RemovalResult(value=depth, certified=False, nodes=clock.nodes)
    if depth == upper and not deleted:
        deleted = list(range(s - 1, size))
    removed = [KSet.from_bits(masks[i]) for i in sorted(deleted)]
    return RemovalResult(value=depth, removed=removed, nodes=clock.nodes)


# ---------------------
# Shifting
# ---------------------


def shift(family: Family, i: int, j: int) -> Family:
    """The (i,j)-compression: move j to i in each member where that creates a new set."""
    if not 1 <= i < j <= family.n:
        raise InvalidParameters(f"shift needs 1 <= i < j <= n={family.n}, got i={i}, j={j}")
    bi, bj = 1 << (i - 1), 1 << (j - 1)
    original = set(family.masks)
    out = []
    for m in family.masks:
        if m & bj and not m & bi:
            moved = m ^ bj ^ bi
            out.append(m if moved in original else moved)
        else:
            out.append(m)
    return Family.from_masks(family.n, family.k, out)


def full_compress_sweeps(family: Family) -> tuple[Family, int]:
    """Fixpoint of all (i,j)-shifts, sweeping i then j ascending; also returns the sweep count."""
    current = family
    sweeps = 0
    changed = True
    while changed:
        changed = False
        sweeps += 1
        for i in range(1, family.n + 1):
            for j in range(i + 1, family.n + 1):
                shifted = shift(current, i, j)
                if shifted != current:
                    current = shifted
                    changed = True
    return current, sweeps


def full_compress(family: Family) -> Family:
    return full_compress_sweeps(family)[0]
