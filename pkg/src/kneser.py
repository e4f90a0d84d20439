"""Generalized Kneser graph machinery.

`PatternGraph` is the small graph G of a G-free query. Its colouring data (chromatic number
q, the smallest colour class η over proper q-colourings, and the special subgraphs whose
removal drops χ by one) feed the bound ell(n,k,t,q-1) + η - 1 on G-free families and the
construction that attains it. Searches here raise `BudgetExhausted` instead of returning
partial answers.
"""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Iterable, Sequence
from itertools import combinations
from typing import Any, Literal

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from constructions import ell, star_union
from invariants import (
    SearchBudget,
    SearchClock,
    bit_indices,
    conflict_adjacency,
    degeneracy_order,
    max_clique,
)
from setcore import (
    BigCount,
    ConstructionInfeasible,
    Family,
    IdenticalSets,
    InvalidParameters,
    KSet,
    ParseError,
    TSetSystem,
    count_subsets,
    interval_mask,
    iter_kmasks,
)

logger = logging.getLogger(__name__)

Strategy = Literal["auto", "generic"]


# ---------------------
# Pattern graphs
# ---------------------


class PatternGraph(BaseModel):
    """Simple graph on vertices 1..vertex_count; edges stored as sorted pairs."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    vertex_count: int = Field(alias="vertices", ge=0)
    edges: list[tuple[int, int]] = Field(default_factory=list)

    @model_validator(mode="before")
    @classmethod
    def _normalise(cls, data: Any) -> Any:
        if not isinstance(data, dict) or "edges" not in data:
            return data
        seen: set[tuple[int, int]] = set()
        for edge in data["edges"]:
            u, v = (int(x) for x in edge)
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            pair = (min(u, v), max(u, v))
            if pair in seen:
                raise ValueError(f"repeated edge {pair}")
            seen.add(pair)
        return {**data, "edges": sorted(seen)}

    @model_validator(mode="after")
    def _check_range(self) -> PatternGraph:
        for u, v in self.edges:
            if not (1 <= u and v <= self.vertex_count):
                raise ValueError(f"edge ({u}, {v}) outside 1..{self.vertex_count}")
        return self

    def adjacency(self) -> list[int]:
        """0-based adjacency bitmasks."""
        adj = [0] * self.vertex_count
        for u, v in self.edges:
            adj[u - 1] |= 1 << (v - 1)
            adj[v - 1] |= 1 << (u - 1)
        return adj

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(1, self.vertex_count + 1))
        g.add_edges_from(self.edges)
        return g

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> PatternGraph:
        label = {v: i for i, v in enumerate(sorted(g.nodes), 1)}
        return cls(vertices=len(label), edges=[(label[u], label[v]) for u, v in g.edges])

    @classmethod
    def complete(cls, m: int) -> PatternGraph:
        return cls.from_networkx(nx.complete_graph(m))

    @classmethod
    def complete_multipartite(cls, *parts: int) -> PatternGraph:
        if any(p < 1 for p in parts):
            raise InvalidParameters("multipartite part sizes must be positive")
        return cls.from_networkx(nx.complete_multipartite_graph(*parts))

    def multipartite_parts(self) -> list[list[int]] | None:
        """The parts (1-based) if this graph is complete multipartite, else None."""
        if self.vertex_count == 0:
            return None
        adj = self.adjacency()
        everyone = (1 << self.vertex_count) - 1
        parts: list[list[int]] = []
        placed = 0
        for v in range(self.vertex_count):
            if placed >> v & 1:
                continue
            part = everyone & ~adj[v]
            for u in bit_indices(part):
                if everyone & ~adj[u] != part:
                    return None
            parts.append([u + 1 for u in bit_indices(part)])
            placed |= part
        return parts


def parse_pattern(text: str) -> PatternGraph:
    """Builtin names K3, K2x3 and K1,2,3, or a JSON {"vertices": n, "edges": [[u, v], ...]}."""
    raw = text.strip()
    if raw.startswith("{"):
        try:
            return PatternGraph.model_validate(json.loads(raw))
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, line=e.lineno) from e
        except ValidationError as e:
            err = e.errors()[0]
            field = ".".join(str(p) for p in err["loc"]) or "<document>"
            raise ParseError(err["msg"], field=field) from e
    if m := re.fullmatch(r"K(\d+)", raw):
        return PatternGraph.complete(int(m.group(1)))
    if m := re.fullmatch(r"K(\d+)x(\d+)", raw):
        return PatternGraph.complete_multipartite(int(m.group(1)), int(m.group(2)))
    if m := re.fullmatch(r"K(\d+(?:,\d+)+)", raw):
        return PatternGraph.complete_multipartite(*(int(x) for x in m.group(1).split(",")))
    raise ParseError(f"unknown pattern {raw!r} (expected K<m>, K<a>x<b>, K<a>,<b>,... or JSON)")


def induced_pattern(g: PatternGraph, vertices: Iterable[int]) -> PatternGraph:
    """G[U] relabelled to 1..|U| in increasing vertex order."""
    keep = sorted(set(vertices))
    label = {v: i for i, v in enumerate(keep, 1)}
    edges = [(label[u], label[v]) for u, v in g.edges if u in label and v in label]
    return PatternGraph(vertices=len(keep), edges=edges)


# ---------------------
# Conflict graphs
# ---------------------


def kneser_adjacent(a: KSet, b: KSet, t: int) -> bool:
    if a == b:
        raise IdenticalSets(f"{a} compared with itself")
    return (a.bits & b.bits).bit_count() < t


def conflict_graph(family: Family, t: int) -> PatternGraph:
    """KG_{n,k,t}[F] with vertex i standing for the i-th member in canonical order."""
    adj = conflict_adjacency(family.masks, t)
    edges = [(i + 1, j + 1) for i, row in enumerate(adj) for j in bit_indices(row) if j > i]
    return PatternGraph(vertices=len(adj), edges=edges)


# ---------------------
# Colouring
# ---------------------


class ColoringAnalysis(BaseModel):
    model_config = ConfigDict(frozen=True)

    chi: int
    eta: int
    witness_coloring: dict[int, int] = Field(default_factory=dict)


def _find_coloring(
    adj: Sequence[int], cand: int, colors: int, clock: SearchClock
) -> dict[int, int] | None:
    """A proper colouring of `cand` with at most `colors` colours (0-based), or None."""
    verts = bit_indices(cand)
    if not verts:
        return {}
    if colors <= 0:
        return None
    sub = [adj[v] & cand if cand >> v & 1 else 0 for v in range(len(adj))]
    order = [v for v in degeneracy_order(sub) if cand >> v & 1]
    classes = [0] * colors
    coloring: dict[int, int] = {}

    def place(idx: int, used: int) -> bool:
        if idx == len(order):
            return True
        clock.tick()
        v = order[idx]
        for c in range(used):
            if not classes[c] & adj[v]:
                classes[c] |= 1 << v
                coloring[v] = c
                if place(idx + 1, used):
                    return True
                classes[c] &= ~(1 << v)
        if used < colors:
            classes[used] |= 1 << v
            coloring[v] = used
            if place(idx + 1, used + 1):
                return True
            classes[used] &= ~(1 << v)
        coloring.pop(v, None)
        return False

    return dict(coloring) if place(0, 0) else None


def _chi(adj: Sequence[int], cand: int, clock: SearchClock) -> tuple[int, dict[int, int]]:
    if not cand:
        return 0, {}
    sub = [adj[v] & cand if cand >> v & 1 else 0 for v in range(len(adj))]
    verts = bit_indices(cand)
    index = {v: i for i, v in enumerate(verts)}
    local = [0] * len(verts)
    for v in verts:
        for u in bit_indices(sub[v]):
            local[index[v]] |= 1 << index[u]
    q = len(max_clique(local, clock))
    while True:
        coloring = _find_coloring(adj, cand, q, clock)
        if coloring is not None:
            return q, coloring
        q += 1


def chromatic_number(g: PatternGraph, budget: SearchBudget | None = None) -> int:
    clock = SearchClock(budget or SearchBudget.from_env())
    adj = g.adjacency()
    return _chi(adj, (1 << g.vertex_count) - 1, clock)[0]


def _independent_sets(adj: Sequence[int], cand: int, size: int) -> Iterable[int]:
    """Independent subsets of `cand` with `size` vertices, in lexicographic order."""

    def walk(pool: int, chosen: int, need: int) -> Iterable[int]:
        if need == 0:
            yield chosen
            return
        while pool.bit_count() >= need:
            low = pool & -pool
            pool ^= low
            yield from walk(pool & ~adj[low.bit_length() - 1], chosen | low, need - 1)

    return walk(cand, 0, size)


def eta(g: PatternGraph, budget: SearchBudget | None = None) -> ColoringAnalysis:
    """χ(G) and the smallest colour class over proper χ(G)-colourings, with a witness."""
    clock = SearchClock(budget or SearchBudget.from_env())
    adj = g.adjacency()
    everyone = (1 << g.vertex_count) - 1
    q, _ = _chi(adj, everyone, clock)
    if q <= 1:
        return ColoringAnalysis(
            chi=q, eta=g.vertex_count, witness_coloring={v + 1: 1 for v in range(g.vertex_count)}
        )
    for size in range(1, g.vertex_count // q + 1):
        for part in _independent_sets(adj, everyone, size):
            clock.tick()
            rest = _find_coloring(adj, everyone & ~part, q - 1, clock)
            if rest is None:
                continue
            coloring = {v + 1: c + 2 for v, c in rest.items()}
            coloring.update({v + 1: 1 for v in bit_indices(part)})
            logger.debug("eta=%d chi=%d nodes=%d", size, q, clock.nodes)
            witness = dict(sorted(coloring.items()))
            return ColoringAnalysis(chi=q, eta=size, witness_coloring=witness)
    # unreachable: the smallest class of an optimal colouring has at most n/q vertices
    raise AssertionError("no colour class found")


def special_subgraphs(
    g: PatternGraph, budget: SearchBudget | None = None, limit: int | None = None
) -> list[list[int]]:
    """Inclusion-minimal vertex sets U with χ(G - U) = χ(G) - 1, by size then lexicographically."""
    clock = SearchClock(budget or SearchBudget.from_env())
    adj = g.adjacency()
    size = g.vertex_count
    everyone = (1 << size) - 1
    q, _ = _chi(adj, everyone, clock)
    if q == 0:
        return []
    found: list[int] = []
    for r in range(1, size + 1):
        for combo in combinations(range(size), r):
            clock.tick()
            u = 0
            for v in combo:
                u |= 1 << v
            if any(f & u == f for f in found):
                continue
            if _find_coloring(adj, everyone & ~u, q - 1, clock) is not None:
                found.append(u)
                if limit is not None and len(found) >= limit:
                    logger.warning("special_subgraphs stopped at the limit of %d sets", limit)
                    return [[v + 1 for v in bit_indices(f)] for f in found]
    return [[v + 1 for v in bit_indices(f)] for f in found]


# ---------------------
# G-free testing
# ---------------------


class GFreeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    contains: bool
    witness: dict[int, KSet] | None = None
    strategy: str = "generic"

    def is_valid_for(self, family: Family, t: int, g: PatternGraph) -> bool:
        if not self.contains or self.witness is None:
            return not self.contains
        images = self.witness
        if len(images) != g.vertex_count or len(set(images.values())) != len(images):
            return False
        if any(img not in family for img in images.values()):
            return False
        return all(
            (images[u].bits & images[v].bits).bit_count() < t for u, v in g.edges
        )


def _embed_multipartite(
    host: Sequence[int], parts: list[list[int]], clock: SearchClock
) -> dict[int, int] | None:
    ordered = sorted(parts, key=lambda p: (-len(p), p[0]))
    sizes = [len(p) for p in ordered]
    chosen: list[list[int]] = []

    def place(i: int, pool: int) -> bool:
        if i == len(ordered):
            return True
        if pool.bit_count() < sum(sizes[i:]):
            return False
        for combo in combinations(bit_indices(pool), sizes[i]):
            clock.tick()
            common = pool
            for v in combo:
                common &= host[v]
            if i + 1 < len(ordered) and common.bit_count() < sum(sizes[i + 1 :]):
                continue
            chosen.append(list(combo))
            if place(i + 1, common):
                return True
            chosen.pop()
        return False

    if not place(0, (1 << len(host)) - 1):
        return None
    return {u: v for part, images in zip(ordered, chosen) for u, v in zip(part, images)}


def _embed_generic(
    host: Sequence[int], pattern: Sequence[int], clock: SearchClock
) -> dict[int, int] | None:
    size = len(pattern)
    degree = [p.bit_count() for p in pattern]
    host_degree = [h.bit_count() for h in host]
    order: list[int] = []
    placed = 0
    while len(order) < size:
        v = max(
            (u for u in range(size) if not placed >> u & 1),
            key=lambda u: ((pattern[u] & placed).bit_count(), degree[u], -u),
        )
        order.append(v)
        placed |= 1 << v
    image = [-1] * size
    everyone = (1 << len(host)) - 1

    def place(i: int, used: int) -> bool:
        if i == size:
            return True
        u = order[i]
        cand = everyone & ~used
        for w in bit_indices(pattern[u]):
            if image[w] >= 0:
                cand &= host[image[w]]
        for h in bit_indices(cand):
            clock.tick()
            if host_degree[h] < degree[u]:
                continue
            image[u] = h
            if place(i + 1, used | (1 << h)):
                return True
        image[u] = -1
        return False

    if not place(0, 0):
        return None
    return {u + 1: image[u] for u in range(size)}


def contains_pattern(
    family: Family,
    t: int,
    g: PatternGraph,
    budget: SearchBudget | None = None,
    strategy: Strategy = "auto",
) -> GFreeReport:
    """Decide whether KG_{n,k,t}[F] has a (not necessarily induced) subgraph isomorphic to G."""
    clock = SearchClock(budget or SearchBudget.from_env())
    masks = family.masks
    if g.vertex_count > len(masks):
        return GFreeReport(contains=False, strategy=strategy)
    host = conflict_adjacency(masks, t)
    parts = g.multipartite_parts() if strategy == "auto" else None
    if parts is not None:
        found = _embed_multipartite(host, parts, clock)
        used = "multipartite"
    else:
        found = _embed_generic(host, g.adjacency(), clock)
        used = "generic"
    logger.debug("contains_pattern %s: %s after %d nodes", used, found is not None, clock.nodes)
    if found is None:
        return GFreeReport(contains=False, strategy=used)
    witness = {u: KSet.from_bits(masks[h]) for u, h in sorted(found.items())}
    return GFreeReport(contains=True, witness=witness, strategy=used)


# ---------------------
# Bounds and extremal families
# ---------------------


def gfree_bound(
    n: int, k: int, t: int, g: PatternGraph, budget: SearchBudget | None = None
) -> BigCount:
    """ell(n, k, t, χ(G) - 1) + η(G) - 1."""
    if g.vertex_count == 0:
        raise InvalidParameters("the pattern graph has no vertices")
    analysis = eta(g, budget)
    return ell(n, k, t, analysis.chi - 1) + analysis.eta - 1


def multipartite_stability_bound(n: int, k: int, parts: Sequence[int]) -> BigCount:
    """C(n,k) - C(n-s1,k) + C(s1,2) - C(s_last,2) + r + s_last - 1 for s1 > ... > s_last >= 1."""
    if len(parts) < 2 or any(a <= b for a, b in zip(parts, parts[1:])) or parts[-1] < 1:
        raise InvalidParameters("need strictly decreasing part sizes s1 > ... > s_{r+1} >= 1")
    r = len(parts) - 1
    first, last = parts[0], parts[-1]
    return (
        count_subsets(n, k)
        - count_subsets(n - first, k)
        + count_subsets(first, 2)
        - count_subsets(last, 2)
        + r
        + last
        - 1
    )


class ExtremalGFreeResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: Family
    centers: TSetSystem
    extras: Family
    chi: int
    eta: int
    bound: BigCount
    conditions: dict[str, bool]

    @property
    def attains_bound(self) -> bool:
        return len(self.family) == self.bound


def _extras_clean(
    extras: list[int], t: int, patterns: list[PatternGraph], budget: SearchBudget
) -> bool:
    if not extras or not patterns:
        return True
    host = conflict_adjacency(extras, t)
    for p in patterns:
        if p.vertex_count > len(extras):
            continue
        clock = SearchClock(budget)
        parts = p.multipartite_parts()
        if parts is not None:
            hit = _embed_multipartite(host, parts, clock)
        else:
            hit = _embed_generic(host, p.adjacency(), clock)
        if hit is not None:
            return False
    return True


def extremal_gfree_family(
    n: int,
    k: int,
    t: int,
    g: PatternGraph,
    extras: Family | None = None,
    budget: SearchBudget | None = None,
) -> ExtremalGFreeResult:
    """Stars on q-1 disjoint t-windows plus η-1 extra sets that avoid every special subgraph."""
    budget = budget or SearchBudget.from_env()
    if g.vertex_count == 0:
        raise InvalidParameters("the pattern graph has no vertices")
    analysis = eta(g, budget)
    q, size_eta = analysis.chi, analysis.eta
    if n < (q - 1) * t or not 1 <= t <= k <= n:
        raise ConstructionInfeasible(f"[{n}] cannot hold {q - 1} disjoint {t}-windows of k={k}")
    windows = [interval_mask((r - 1) * t + 1, r * t) for r in range(1, q)]
    centers = TSetSystem.from_masks(n, t, windows)
    stars = star_union(n, k, centers)
    patterns = [induced_pattern(g, u) for u in special_subgraphs(g, budget)]
    need = size_eta - 1

    def outside(m: int) -> bool:
        return not any(m & w == w for w in windows)

    if extras is not None:
        if (extras.n, extras.k) != (n, k):
            raise ConstructionInfeasible("extras must be k-subsets of [n]")
        chosen = list(extras.masks)
        conditions = {
            "extras_count": len(chosen) == need,
            "extras_outside_stars": all(outside(m) for m in chosen),
            "extras_avoid_special_subgraphs": _extras_clean(chosen, t, patterns, budget),
        }
        failed = [name for name, ok in conditions.items() if not ok]
        if failed:
            raise ConstructionInfeasible(f"supplied extras fail: {', '.join(failed)}")
    else:
        pool = [m for m in iter_kmasks(n, k) if outside(m)]
        chosen = []

        def pick(start: int) -> bool:
            if len(chosen) == need:
                return True
            for idx in range(start, len(pool)):
                if len(pool) - idx < need - len(chosen):
                    return False
                chosen.append(pool[idx])
                if _extras_clean(chosen, t, patterns, budget) and pick(idx + 1):
                    return True
                chosen.pop()
            return False

        if not pick(0):
            raise ConstructionInfeasible(
                f"no {need} sets outside the stars avoid the special subgraphs of G"
            )
        conditions = {
            "extras_count": True,
            "extras_outside_stars": True,
            "extras_avoid_special_subgraphs": True,
        }

    extra_family = Family.from_masks(n, k, chosen)
    family = stars.union(extra_family)
    bound = ell(n, k, t, q - 1) + size_eta - 1
    conditions["size_equals_bound"] = len(family) == bound
    return ExtremalGFreeResult(
        family=family,
        centers=centers,
        extras=extra_family,
        chi=q,
        eta=size_eta,
        bound=bound,
        conditions=conditions,
    )
