"""Generators for the named extremal families and exact evaluators for their sizes.

Generators materialise families by scanning ([n] choose k) with the defining predicate
(stars are built directly), so they are bounded by the enumeration limit. Size formulas are
exact inclusion-exclusion sums and run for any n; wherever enumeration is feasible the two
are expected to agree, and `SizeReport` records both.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Sequence
from typing import Literal

from pydantic import BaseModel, ConfigDict, model_validator

from setcore import (
    BigCount,
    Family,
    InvalidParameters,
    KSet,
    TSetSystem,
    check_enumerable,
    count_subsets,
    enumeration_limit,
    interval_mask,
    iter_kmasks,
)

logger = logging.getLogger(__name__)


def _interval(lo: int, hi: int) -> KSet:
    return KSet.from_bits(interval_mask(lo, hi))


def _enumerate_where(n: int, k: int, keep: Callable[[int], bool]) -> Family:
    check_enumerable(n, k)
    return Family.from_masks(n, k, (m for m in iter_kmasks(n, k) if keep(m)), ordered=True)


def _check_nk(n: int, k: int) -> None:
    if not 0 <= k <= n:
        raise InvalidParameters(f"need 0 <= k <= n, got n={n}, k={k}")


def enumeration_feasible(n: int, k: int) -> bool:
    return 0 <= k <= n <= 64 and count_subsets(n, k) <= enumeration_limit()


# ---------------------
# Specs
# ---------------------


class FamilyISpec(BaseModel):
    """X ⊆ M ⊆ C with |X| = t, |M| = k and |C| in {k+1, ..., 2k-t} or |C| = n."""

    model_config = ConfigDict(frozen=True)

    n: int
    k: int
    t: int
    X: KSet
    M: KSet
    C: KSet

    @model_validator(mode="after")
    def _check(self) -> FamilyISpec:
        if not 1 <= self.t < self.k < self.n:
            raise ValueError(f"need 1 <= t < k < n, got t={self.t}, k={self.k}, n={self.n}")
        if len(self.X) != self.t or len(self.M) != self.k:
            raise ValueError("X must have t elements and M must have k elements")
        if not (self.X.issubset(self.M) and self.M.issubset(self.C)):
            raise ValueError("need X ⊆ M ⊆ C")
        if self.C.max_element > self.n:
            raise ValueError(f"C has elements above n={self.n}")
        c = len(self.C)
        if not (self.k + 1 <= c <= 2 * self.k - self.t or c == self.n):
            raise ValueError(f"|C|={c} outside {{k+1..2k-t}} ∪ {{n}}")
        return self


class HMTypeSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    k: int
    t: int
    s: int

    @property
    def case(self) -> Literal["i", "ii"]:
        return "i" if self.k <= 2 * self.t + 1 else "ii"

    @model_validator(mode="after")
    def _check(self) -> HMTypeSpec:
        if not (self.k > self.t >= 1 and self.s >= 1):
            raise ValueError(f"need k > t >= 1 and s >= 1, got k={self.k} t={self.t} s={self.s}")
        need = self.s * self.t + 2 if self.case == "i" else (self.s - 1) * self.t + self.k + 1
        if self.n < need:
            raise ValueError(f"n={self.n} too small: the windows need n >= {need}")
        return self


class GFamilySpec(BaseModel):
    """s-1 star centres plus an H1(X, C) tail (G1 shape) or an H2(Z) tail (G2 shape)."""

    model_config = ConfigDict(frozen=True)

    n: int
    k: int
    t: int
    centers: list[KSet]
    X: KSet | None = None
    C: KSet | None = None
    Z: KSet | None = None

    @property
    def shape(self) -> Literal["g1", "g2"]:
        return "g2" if self.Z is not None else "g1"

    @property
    def s(self) -> int:
        return len(self.centers) + 1

    @property
    def tail_support(self) -> KSet:
        support = self.Z if self.shape == "g2" else self.C
        assert support is not None
        return support

    @model_validator(mode="after")
    def _check(self) -> GFamilySpec:
        if not 1 <= self.t < self.k <= self.n:
            raise ValueError(f"need 1 <= t < k <= n, got t={self.t}, k={self.k}, n={self.n}")
        if any(len(c) != self.t for c in self.centers):
            raise ValueError("every centre must have t elements")
        if len(set(self.centers)) != len(self.centers):
            raise ValueError("centres must be distinct")
        g1 = self.X is not None or self.C is not None
        if g1 == (self.Z is not None):
            raise ValueError("give either X and C (G1 shape) or Z (G2 shape)")
        if g1:
            if self.X is None or self.C is None:
                raise ValueError("the G1 shape needs both X and C")
            if len(self.X) != self.t or len(self.C) != self.k + 1 or not self.X.issubset(self.C):
                raise ValueError("need |X| = t, |C| = k+1 and X ⊆ C")
        elif self.Z is not None and len(self.Z) != self.t + 2:
            raise ValueError("Z must have t+2 elements")
        pieces = [*self.centers, self.tail_support]
        if self.X is not None:
            pieces.append(self.X)
        if any(p.max_element > self.n for p in pieces):
            raise ValueError(f"supports exceed n={self.n}")
        return self

    def replace_first_center(self, center: KSet) -> GFamilySpec:
        return self.model_copy(update={"centers": [center, *self.centers[1:]]})

    def is_disjoint(self) -> bool:
        seen = 0
        for piece in [*self.centers, self.tail_support]:
            if seen & piece.bits:
                return False
            seen |= piece.bits
        return True


class SizeReport(BaseModel):
    """A family size evaluated by enumeration and/or by closed form."""

    name: str
    params: dict[str, int]
    enumerated: BigCount | None = None
    closed_form: BigCount | None = None
    literal_formula: BigCount | None = None

    @property
    def value(self) -> BigCount:
        value = self.enumerated if self.enumerated is not None else self.closed_form
        assert value is not None
        return value

    @property
    def agrees(self) -> bool | None:
        if self.enumerated is None or self.closed_form is None:
            return None
        return self.enumerated == self.closed_form

    @property
    def literal_agrees(self) -> bool | None:
        if self.literal_formula is None:
            return None
        return self.literal_formula == self.value


# ---------------------
# Stars and their unions
# ---------------------


def star(n: int, k: int, center: KSet | Iterable[int]) -> Family:
    """All k-subsets of [n] containing the centre."""
    T = KSet.coerce(center)
    _check_nk(n, k)
    if len(T) > k or T.max_element > n:
        raise InvalidParameters(f"centre {T} does not fit a {k}-subset of [{n}]")
    check_enumerable(n - len(T), k - len(T))
    rest = interval_mask(1, n) & ~T.bits
    return Family.from_masks(n, k, (T.bits | m for m in iter_kmasks(n, k - len(T), within=rest)))


def star_union(n: int, k: int, centers: TSetSystem) -> Family:
    _check_nk(n, k)
    if centers.t > k or any(c.max_element > n for c in centers):
        raise InvalidParameters(f"centres must be subsets of [{n}] of size <= k={k}")
    masks: set[int] = set()
    for c in centers:
        masks.update(star(n, k, c).masks)
    return Family.from_masks(n, k, masks)


def ell(n: int, k: int, t: int, m: int) -> BigCount:
    """Size of the union of m stars with pairwise-disjoint t-set centres."""
    if m < 0 or t < 1 or k < 0:
        raise InvalidParameters(f"need m >= 0, t >= 1, k >= 0; got m={m}, t={t}, k={k}")
    if n < m * t:
        raise InvalidParameters(f"n={n} cannot hold {m} disjoint {t}-sets")
    total = 0
    for j in range(1, m + 1):
        sign = 1 if j % 2 else -1
        total += sign * count_subsets(m, j) * count_subsets(n - j * t, k - j * t)
    return total


def _avoiding(ground: int, size: int, t: int, windows: int) -> BigCount:
    """size-subsets of a ground set of `ground` points containing none of `windows`
    pairwise-disjoint t-sets that lie inside it."""
    return sum(
        (-1) ** i * count_subsets(windows, i) * count_subsets(ground - i * t, size - i * t)
        for i in range(windows + 1)
    )


def _stars_plus_tail(n: int, k: int, t: int, s: int, tail: Literal["h1", "h2"]) -> BigCount:
    """|S(T_1..T_{s-1}) ∪ tail| for pairwise-disjoint supports, tail shaped like H1 or H2."""
    if tail == "h2":
        ysize = t + 2
        patterns = {t + 1: t + 2, t + 2: 1}
    else:
        ysize = k + 1
        patterns = {j: count_subsets(k + 1 - t, j - t) for j in range(t + 1, k)}
        patterns[k] = k + 1
    if n < (s - 1) * t + ysize:
        raise InvalidParameters(f"n={n} cannot hold the disjoint supports")
    outside = n - ysize
    total = ell(n, k, t, s - 1)
    for j, count in patterns.items():
        total += count * _avoiding(outside, k - j, t, s - 1)
    return total


# ---------------------
# Erdős matching conjecture families
# ---------------------


def _emc_window(k: int, s: int, i: int) -> int:
    if not (1 <= i <= k and s >= 1):
        raise InvalidParameters(f"need 1 <= i <= k and s >= 1, got i={i}, k={k}, s={s}")
    return i * s + i - 1


def emc_family(n: int, k: int, s: int, i: int) -> Family:
    """{F : |F ∩ [is+i-1]| >= i}."""
    _check_nk(n, k)
    width = _emc_window(k, s, i)
    if n < width:
        raise InvalidParameters(f"n={n} must be at least is+i-1={width}")
    window = interval_mask(1, width)
    return _enumerate_where(n, k, lambda m: (m & window).bit_count() >= i)


def emc_size(n: int, k: int, s: int, i: int) -> BigCount:
    _check_nk(n, k)
    width = _emc_window(k, s, i)
    if n < width:
        raise InvalidParameters(f"n={n} must be at least is+i-1={width}")
    return sum(
        count_subsets(width, j) * count_subsets(n - width, k - j) for j in range(i, k + 1)
    )


def emc_bound(n: int, k: int, s: int) -> BigCount:
    """max(|A_1|, |A_k|), the conjectured largest size with matching number s."""
    if n < k * s + k - 1:
        raise InvalidParameters(f"need n >= ks+k-1, got n={n}")
    return max(
        count_subsets(n, k) - count_subsets(n - s, k), count_subsets(k * s + k - 1, k)
    )


# ---------------------
# Non-trivial t-intersecting families
# ---------------------


def _check_ktn(n: int, k: int, t: int) -> None:
    if not 1 <= t < k:
        raise InvalidParameters(f"need k > t >= 1, got k={k}, t={t}")
    if n < k + 1:
        raise InvalidParameters(f"need n >= k+1, got n={n}")


def h1_family(n: int, k: int, t: int) -> Family:
    """[1,t] ⊆ F meeting [t+1,k+1], plus the k+1 sets [1,k+1] minus one point."""
    _check_ktn(n, k, t)
    head = interval_mask(1, t)
    mid = interval_mask(t + 1, k + 1)
    block = interval_mask(1, k + 1)
    return _enumerate_where(
        n, k, lambda m: (m & head == head and bool(m & mid)) or m & block == m
    )


def h2_family(n: int, k: int, t: int) -> Family:
    """{F : |F ∩ [1,t+2]| >= t+1}."""
    _check_ktn(n, k, t)
    if n < t + 2:
        raise InvalidParameters(f"need n >= t+2, got n={n}")
    window = interval_mask(1, t + 2)
    return _enumerate_where(n, k, lambda m: (m & window).bit_count() >= t + 1)


def h1_size(n: int, k: int, t: int) -> BigCount:
    _check_ktn(n, k, t)
    return count_subsets(n - t, k - t) - count_subsets(n - k - 1, k - t) + t


def h2_size(n: int, k: int, t: int) -> BigCount:
    _check_ktn(n, k, t)
    return (t + 2) * count_subsets(n - t - 2, k - t - 1) + count_subsets(n - t - 2, k - t - 2)


def family_I(spec: FamilyISpec) -> Family:
    """H1(X, M, C) = A(X, M) ∪ B(X, M, C) ∪ C(X, M, C)."""
    t, k = spec.t, spec.k
    x, m, c = spec.X.bits, spec.M.bits, spec.C.bits
    c_hits = len(spec.C) - k + t

    def keep(f: int) -> bool:
        if f & x == x and (f & m).bit_count() >= t + 1:
            return True
        if f & m == x and (f & c).bit_count() == c_hits:
            return True
        return f & ~c == 0 and (f & x).bit_count() == t - 1 and (f & m).bit_count() == k - 1

    return _enumerate_where(spec.n, k, keep)


def family_II(n: int, k: int, t: int, Z: KSet | Iterable[int]) -> Family:
    """H2(Z) = {F : |F ∩ Z| >= t+1}."""
    z = KSet.coerce(Z)
    _check_nk(n, k)
    if len(z) != t + 2 or z.max_element > n:
        raise InvalidParameters(f"Z must be a {t + 2}-subset of [{n}]")
    if k < t + 1:
        raise InvalidParameters(f"need k >= t+1, got k={k}")
    return _enumerate_where(n, k, lambda m: (m & z.bits).bit_count() >= t + 1)


def relabel_onto(family: Family, blocks: Sequence[KSet]) -> Family:
    """Relabel so the elements of `blocks` (in order) become 1, 2, ... and the rest follow."""
    order: list[int] = []
    for block in blocks:
        order += [e for e in block if e not in order]
    order += [e for e in range(1, family.n + 1) if e not in order]
    return family.relabel({old: new for new, old in enumerate(order, 1)})


# ---------------------
# HM-type families
# ---------------------


def hm_t_family(spec: HMTypeSpec) -> Family:
    """Union of the s-1 window stars [(r-1)t+1, rt] and the case (i)/(ii) tail."""
    n, k, t, s = spec.n, spec.k, spec.t, spec.s
    windows = [interval_mask((r - 1) * t + 1, r * t) for r in range(1, s)]
    base = (s - 1) * t
    if spec.case == "i":
        z = interval_mask(base + 1, s * t + 2)

        def tail(m: int) -> bool:
            return (m & z).bit_count() >= t + 1

    else:
        x = interval_mask(base + 1, s * t)
        rest = interval_mask(s * t + 1, base + k + 1)
        block = interval_mask(base + 1, base + k + 1)

        def tail(m: int) -> bool:
            return (m & x == x and bool(m & rest)) or m & block == m

    return _enumerate_where(n, k, lambda m: any(m & w == w for w in windows) or tail(m))


def h_size(n: int, k: int, t: int, s: int) -> BigCount:
    spec = HMTypeSpec(n=n, k=k, t=t, s=s)
    return _stars_plus_tail(n, k, t, s, "h2" if spec.case == "i" else "h1")


def h_size_report(n: int, k: int, t: int, s: int) -> SizeReport:
    report = SizeReport(name="hm-t", params={"n": n, "k": k, "t": t, "s": s})
    report.closed_form = h_size(n, k, t, s)
    if enumeration_feasible(n, k):
        report.enumerated = len(hm_t_family(HMTypeSpec(n=n, k=k, t=t, s=s)))
    return report


def hm1_family(n: int, k: int, s: int) -> Family:
    """{F ∩ [s] ≠ ∅} minus {F ∩ [s] = {s}, F ∩ [s+1,s+k] = ∅}, plus [s+1, s+k]."""
    _check_hm1(n, k, s)
    head = interval_mask(1, s)
    last = 1 << (s - 1)
    block = interval_mask(s + 1, s + k)

    def keep(m: int) -> bool:
        if m == block:
            return True
        return bool(m & head) and not (m & head == last and not m & block)

    return _enumerate_where(n, k, keep)


def _check_hm1(n: int, k: int, s: int) -> None:
    if s < 1 or k < 1 or n < s + k:
        raise InvalidParameters(f"need s, k >= 1 and n >= s+k, got n={n}, k={k}, s={s}")


def hm1_closed_form(n: int, k: int, s: int) -> BigCount:
    _check_hm1(n, k, s)
    return (
        count_subsets(n, k)
        - count_subsets(n - s, k)
        + 1
        - count_subsets(n - s - k, k - 1)
    )


def hm1_literal_formula(n: int, k: int, s: int) -> BigCount:
    """The displayed size expression C(n,k) - C(n-k+s,k) + 1 - C(n-s-k,k-1), taken verbatim."""
    _check_hm1(n, k, s)
    return (
        count_subsets(n, k)
        - count_subsets(n - k + s, k)
        + 1
        - count_subsets(n - s - k, k - 1)
    )


def hm1_size_report(n: int, k: int, s: int) -> SizeReport:
    report = SizeReport(
        name="hm1",
        params={"n": n, "k": k, "s": s},
        closed_form=hm1_closed_form(n, k, s),
        literal_formula=hm1_literal_formula(n, k, s),
    )
    if enumeration_feasible(n, k):
        report.enumerated = len(hm1_family(n, k, s))
    if report.literal_agrees is False:
        logger.info(
            "hm1 size at n=%d k=%d s=%d: family has %d members, displayed formula gives %d",
            n, k, s, report.value, report.literal_formula,
        )
    return report


def hm1_size(n: int, k: int, s: int) -> BigCount:
    return hm1_size_report(n, k, s).value


# ---------------------
# G1 / G2 families
# ---------------------


def canonical_g_spec(n: int, k: int, t: int, s: int, shape: Literal["g1", "g2"]) -> GFamilySpec:
    """Windows laid left to right: centres [(r-1)t+1, rt], then the tail support."""
    if s < 1:
        raise InvalidParameters(f"s must be >= 1, got {s}")
    centers = [_interval((r - 1) * t + 1, r * t) for r in range(1, s)]
    base = (s - 1) * t
    if shape == "g1":
        return GFamilySpec(
            n=n,
            k=k,
            t=t,
            centers=centers,
            X=_interval(base + 1, base + t),
            C=_interval(base + 1, base + k + 1),
        )
    return GFamilySpec(n=n, k=k, t=t, centers=centers, Z=_interval(base + 1, base + t + 2))


def _g_tail_keep(spec: GFamilySpec) -> Callable[[int], bool]:
    t = spec.t
    if spec.shape == "g2":
        z = spec.tail_support.bits
        return lambda m: (m & z).bit_count() >= t + 1
    assert spec.X is not None
    x = spec.X.bits
    c = spec.tail_support.bits
    rest = c & ~x
    return lambda m: (m & x == x and bool(m & rest)) or m & c == m


def g_predicate(spec: GFamilySpec) -> Callable[[int], bool]:
    """Membership test for the G family of `spec`, on k-set bitmasks."""
    windows = [c.bits for c in spec.centers]
    tail = _g_tail_keep(spec)
    return lambda m: any(m & w == w for w in windows) or tail(m)


def g_family(spec: GFamilySpec) -> Family:
    return _enumerate_where(spec.n, spec.k, g_predicate(spec))


def g1_family(spec: GFamilySpec) -> Family:
    if spec.shape != "g1":
        raise InvalidParameters("g1_family needs a spec with X and C")
    return g_family(spec)


def g2_family(spec: GFamilySpec) -> Family:
    if spec.shape != "g2":
        raise InvalidParameters("g2_family needs a spec with Z")
    return g_family(spec)


def g_size(spec: GFamilySpec) -> BigCount:
    """Closed-form size; only defined for pairwise-disjoint supports."""
    if not spec.is_disjoint():
        raise InvalidParameters("closed-form G sizes need pairwise-disjoint supports")
    tail: Literal["h1", "h2"] = "h1" if spec.shape == "g1" else "h2"
    return _stars_plus_tail(spec.n, spec.k, spec.t, spec.s, tail)


def g1_size(n: int, k: int, t: int, s: int) -> BigCount:
    return _stars_plus_tail(n, k, t, s, "h1")


def g2_size(n: int, k: int, t: int, s: int) -> BigCount:
    return _stars_plus_tail(n, k, t, s, "h2")


def describe_spec(spec: GFamilySpec) -> str:
    parts = [f"T{i}={c}" for i, c in enumerate(spec.centers, 1)]
    if spec.shape == "g1":
        parts += [f"X={spec.X}", f"C={spec.C}"]
    else:
        parts.append(f"Z={spec.Z}")
    return " ".join(parts)


def centers_from_text(n: int, text: str) -> TSetSystem:
    """Parse a centre list like "1 2;3 4" (semicolon-separated, space-delimited)."""
    chunks = [c.split() for c in text.split(";") if c.strip()]
    try:
        sets = [[int(x) for x in chunk] for chunk in chunks]
    except ValueError as e:
        raise InvalidParameters(f"bad centre list {text!r}") from e
    sizes = {len(s) for s in sets}
    if len(sizes) > 1:
        raise InvalidParameters("all centres must have the same size")
    t = sizes.pop() if sizes else 1
    return TSetSystem(n, t, sets)


def pairwise_disjoint(sets: Iterable[KSet]) -> bool:
    seen = 0
    for s in sets:
        if seen & s.bits:
            return False
        seen |= s.bits
    return True

