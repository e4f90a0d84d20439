"""Ground-set arithmetic for families of k-subsets of [n].

`KSet`, `Family` and `TSetSystem` are immutable values backed by a one-word bitmask per
set (bit e-1 stands for element e, so n <= 64). Elements are 1-based everywhere callers
can see them, and families are kept in canonical order: members sorted lexicographically
by their ascending element lists. All counting is exact `int` arithmetic.
"""

from __future__ import annotations

import json
import logging
import math
import os
import pathlib
from collections.abc import Iterable, Iterator
from functools import total_ordering
from itertools import combinations
from typing import Any, Literal, TypeAlias

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_core import core_schema

logger = logging.getLogger(__name__)

MAX_N = 64
DEFAULT_ENUMERATION_LIMIT = 2_000_000

BigCount: TypeAlias = int
FamilyFormat = Literal["json", "lines"]


# ---------------------
# Errors
# ---------------------


class TMatchError(Exception):
    """Base class for every error raised by the tmatch modules."""


class InvalidParameters(TMatchError, ValueError):
    pass


class InvariantViolation(TMatchError, ValueError):
    pass


class ParseError(TMatchError, ValueError):
    """Malformed family/pattern text; carries a line number or a field path."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        where = f"line {line}: " if line is not None else f"field {field}: " if field else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.field = field


class NotTIntersecting(TMatchError):
    pass


class IdenticalSets(TMatchError, ValueError):
    pass


class BudgetExhausted(TMatchError):
    """A search ran out of nodes or time before it could certify its answer."""

    def __init__(self, message: str, *, best: Any = None):
        super().__init__(message)
        self.best = best


class ConstructionInfeasible(TMatchError):
    pass


class DecompositionInvalid(TMatchError):
    def __init__(self, message: str, *, uncovered: KSet | None = None):
        super().__init__(message)
        self.uncovered = uncovered


class InfeasibleGrid(TMatchError):
    def __init__(self, message: str, *, estimate: int):
        super().__init__(message)
        self.estimate = estimate


# ---------------------
# Bitmask helpers
# ---------------------

_BITS = tuple(1 << i for i in range(MAX_N))


def mask_of(elements: Iterable[int]) -> int:
    bits = 0
    for e in elements:
        bits |= _BITS[e - 1]
    return bits


def mask_elements(bits: int) -> tuple[int, ...]:
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length())
        bits ^= low
    return tuple(out)


def interval_mask(lo: int, hi: int) -> int:
    """Mask of the integer interval [lo, hi] (empty when hi < lo)."""
    if hi < lo:
        return 0
    return ((1 << (hi - lo + 1)) - 1) << (lo - 1)


def iter_kmasks(n: int, k: int, within: int | None = None) -> Iterator[int]:
    """Yield k-subset masks of [n] (or of the `within` mask) in canonical order."""
    pool = mask_elements(within) if within is not None else tuple(range(1, n + 1))
    bits = [_BITS[e - 1] for e in pool]
    for combo in combinations(range(len(pool)), k):
        m = 0
        for i in combo:
            m |= bits[i]
        yield m


def enumeration_limit() -> int:
    raw = os.getenv("TMATCH_ENUMERATION_LIMIT")
    if not raw:
        return DEFAULT_ENUMERATION_LIMIT
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("Ignoring non-integer TMATCH_ENUMERATION_LIMIT=%r", raw)
        return DEFAULT_ENUMERATION_LIMIT


def check_enumerable(n: int, k: int) -> None:
    total = count_subsets(n, k)
    if total > enumeration_limit():
        raise InvalidParameters(
            f"C({n},{k}) = {total} sets exceeds the enumeration limit {enumeration_limit()}"
        )


# ---------------------
# Counting
# ---------------------


def binomial(a: int, b: int) -> BigCount:
    """Exact C(a, b), with C(a, b) = 0 for b < 0 or b > a."""
    if a < 0:
        raise InvalidParameters(f"binomial needs a >= 0, got a={a}")
    if b < 0 or b > a:
        return 0
    return math.comb(a, b)


def count_subsets(a: int, b: int) -> BigCount:
    """Number of b-subsets of an a-element set; 0 whenever there are none (a < 0 included)."""
    if a < 0 or b < 0 or b > a:
        return 0
    return math.comb(a, b)


# ---------------------
# KSet
# ---------------------


@total_ordering
class KSet:
    """A finite set of positive integers, compared lexicographically by sorted elements."""

    __slots__ = ("_bits",)

    def __init__(self, elements: Iterable[int]) -> None:
        bits = 0
        for e in elements:
            if isinstance(e, bool) or not isinstance(e, int):
                raise InvariantViolation(f"element {e!r} is not an integer")
            if not 1 <= e <= MAX_N:
                raise InvariantViolation(f"element {e} outside 1..{MAX_N}")
            if bits & _BITS[e - 1]:
                raise InvariantViolation(f"duplicate element {e}")
            bits |= _BITS[e - 1]
        self._bits = bits

    @classmethod
    def from_bits(cls, bits: int) -> KSet:
        obj = cls.__new__(cls)
        obj._bits = bits
        return obj

    @property
    def bits(self) -> int:
        return self._bits

    @property
    def elements(self) -> tuple[int, ...]:
        return mask_elements(self._bits)

    @property
    def max_element(self) -> int:
        return self._bits.bit_length()

    def issubset(self, other: KSet) -> bool:
        return self._bits & ~other._bits == 0

    def __len__(self) -> int:
        return self._bits.bit_count()

    def __iter__(self) -> Iterator[int]:
        return iter(self.elements)

    def __contains__(self, e: object) -> bool:
        return isinstance(e, int) and 1 <= e <= MAX_N and bool(self._bits & _BITS[e - 1])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, KSet) and other._bits == self._bits

    def __lt__(self, other: KSet) -> bool:
        return self.elements < other.elements

    def __hash__(self) -> int:
        return hash(("KSet", self._bits))

    def __repr__(self) -> str:
        return f"KSet({', '.join(map(str, self.elements))})"

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.elements)) + "}"

    @classmethod
    def coerce(cls, value: Any) -> KSet:
        if isinstance(value, KSet):
            return value
        if isinstance(value, (str, bytes)) or not isinstance(value, Iterable):
            raise InvariantViolation(f"cannot read a set from {value!r}")
        return cls(value)

    @classmethod
    def __get_pydantic_core_schema__(cls, _source: Any, _handler: Any) -> core_schema.CoreSchema:
        return core_schema.no_info_plain_validator_function(
            cls.coerce,
            serialization=core_schema.plain_serializer_function_ser_schema(
                lambda v: list(v.elements)
            ),
        )


def intersection_size(a: KSet, b: KSet) -> int:
    return (a.bits & b.bits).bit_count()


# ---------------------
# Families
# ---------------------


def _lex_key(bits: int) -> tuple[int, ...]:
    return mask_elements(bits)


class SetSystem:
    """Canonically ordered, duplicate-free collection of equal-size subsets of [n]."""

    __slots__ = ("_index", "_masks", "_n", "_rank")

    rank_name = "rank"

    def __init__(self, n: int, rank: int, members: Iterable[Any] = (), *, dedupe: bool = False):
        _check_ground(n, rank, self.rank_name)
        masks: list[int] = []
        seen: set[int] = set()
        for raw in members:
            ks = KSet.coerce(raw)
            if len(ks) != rank:
                raise InvariantViolation(f"set {ks} has {len(ks)} elements, expected {rank}")
            if ks.max_element > n:
                raise InvariantViolation(f"set {ks} has an element above n={n}")
            if ks.bits in seen:
                if dedupe:
                    continue
                raise InvariantViolation(f"duplicate set {ks}")
            seen.add(ks.bits)
            masks.append(ks.bits)
        self._n = n
        self._rank = rank
        self._masks = tuple(sorted(masks, key=_lex_key))
        self._index: dict[int, int] | None = None

    @classmethod
    def from_masks(cls, n: int, rank: int, masks: Iterable[int], *, ordered: bool = False):
        """Build from trusted bitmasks; duplicates are merged."""
        _check_ground(n, rank, cls.rank_name)
        obj = cls.__new__(cls)
        obj._n = n
        obj._rank = rank
        if ordered:
            obj._masks = tuple(masks)
        else:
            obj._masks = tuple(sorted(set(masks), key=_lex_key))
        obj._index = None
        return obj

    @property
    def n(self) -> int:
        return self._n

    @property
    def masks(self) -> tuple[int, ...]:
        return self._masks

    @property
    def members(self) -> tuple[KSet, ...]:
        return tuple(KSet.from_bits(m) for m in self._masks)

    def sets(self) -> list[list[int]]:
        return [list(mask_elements(m)) for m in self._masks]

    def index_of(self, member: Any) -> int | None:
        if self._index is None:
            self._index = {m: i for i, m in enumerate(self._masks)}
        return self._index.get(KSet.coerce(member).bits)

    def union(self, other: SetSystem):
        self._check_compatible(other)
        return type(self).from_masks(self._n, self._rank, self._masks + other._masks)

    def difference(self, other: SetSystem):
        self._check_compatible(other)
        drop = set(other._masks)
        kept = [m for m in self._masks if m not in drop]
        return type(self).from_masks(self._n, self._rank, kept, ordered=True)

    def with_members(self, extra: Iterable[Any]):
        added = type(self)(self._n, self._rank, extra, dedupe=True)
        return self.union(added)

    def without_members(self, drop: Iterable[Any]):
        gone = {KSet.coerce(x).bits for x in drop}
        kept = [m for m in self._masks if m not in gone]
        return type(self).from_masks(self._n, self._rank, kept, ordered=True)

    def relabel(self, mapping: dict[int, int]):
        """Apply an element permutation given as {old: new} (identity where absent)."""
        moved = []
        for m in self._masks:
            moved.append(mask_of(mapping.get(e, e) for e in mask_elements(m)))
        return type(self).from_masks(self._n, self._rank, moved)

    def to_document(self) -> dict[str, Any]:
        return {"n": self._n, self.rank_name: self._rank, "sets": self.sets()}

    def _check_compatible(self, other: SetSystem) -> None:
        if (self._n, self._rank) != (other._n, other._rank):
            raise InvalidParameters(
                f"incompatible systems: (n={self._n}, {self.rank_name}={self._rank}) vs "
                f"(n={other._n}, {other.rank_name}={other._rank})"
            )

    def __len__(self) -> int:
        return len(self._masks)

    def __iter__(self) -> Iterator[KSet]:
        return (KSet.from_bits(m) for m in self._masks)

    def __contains__(self, member: object) -> bool:
        try:
            return self.index_of(member) is not None
        except InvariantViolation:
            return False

    def __eq__(self, other: object) -> bool:
        return (
            type(other) is type(self)
            and isinstance(other, SetSystem)
            and (self._n, self._rank, self._masks) == (other._n, other._rank, other._masks)
        )

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._n, self._rank, self._masks))

    def __repr__(self) -> str:
        head = f"{type(self).__name__}(n={self._n}, {self.rank_name}={self._rank}"
        if len(self._masks) <= 8:
            return head + ", sets=" + repr(self.sets()) + ")"
        return head + f", {len(self._masks)} sets)"

    @classmethod
    def _coerce(cls, value: Any):
        if isinstance(value, cls):
            return value
        if isinstance(value, dict):
            doc = SetSystemDocument.model_validate(value)
            return doc.build(cls)
        raise InvariantViolation(f"cannot read a {cls.__name__} from {type(value).__name__}")

    @classmethod
    def __get_pydantic_core_schema__(cls, _source: Any, _handler: Any) -> core_schema.CoreSchema:
        return core_schema.no_info_plain_validator_function(
            cls._coerce,
            serialization=core_schema.plain_serializer_function_ser_schema(
                lambda v: v.to_document()
            ),
        )


class Family(SetSystem):
    """A family of k-subsets of [n]."""

    __slots__ = ()
    rank_name = "k"

    @property
    def k(self) -> int:
        return self._rank


class TSetSystem(SetSystem):
    """A collection of t-subsets of [n]: star centres and t-covering families."""

    __slots__ = ()
    rank_name = "t"

    @property
    def t(self) -> int:
        return self._rank


def _check_ground(n: int, rank: int, rank_name: str) -> None:
    if not 0 <= n <= MAX_N:
        raise InvalidParameters(f"n must lie in 0..{MAX_N}, got {n}")
    if not 0 <= rank <= n:
        raise InvalidParameters(f"{rank_name} must lie in 0..n={n}, got {rank}")


def enumerate_ksets(n: int, k: int) -> Family:
    """The complete family ([n] choose k) in canonical order."""
    if n < 0 or k < 0 or k > n:
        raise InvalidParameters(f"enumerate_ksets needs 0 <= k <= n, got n={n}, k={k}")
    check_enumerable(n, k)
    return Family.from_masks(n, k, iter_kmasks(n, k), ordered=True)


# ---------------------
# Serialization
# ---------------------


class SetSystemDocument(BaseModel):
    """The JSON document shape shared by families (`k`) and t-set systems (`t`)."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=0, le=MAX_N)
    k: int | None = Field(default=None, ge=0)
    t: int | None = Field(default=None, ge=0)
    sets: list[list[int]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _one_rank(self) -> SetSystemDocument:
        if (self.k is None) == (self.t is None):
            raise ValueError("exactly one of 'k' or 't' must be given")
        return self

    def build(self, cls: type[SetSystem]):
        rank = self.k if self.k is not None else self.t
        assert rank is not None
        if cls.rank_name not in ("rank", "k" if self.k is not None else "t"):
            raise InvariantViolation(f"document carries the wrong rank key for {cls.__name__}")
        return cls(self.n, rank, self.sets)


def _parse_json(text: str) -> SetSystemDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno) from e
    try:
        return SetSystemDocument.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        field = ".".join(str(p) for p in err["loc"]) or "<document>"
        raise ParseError(err["msg"], field=field) from e


def _parse_lines(text: str, rank_name: str) -> tuple[int, int, list[list[int]]]:
    lines = text.splitlines()
    header_no = next((i for i, ln in enumerate(lines) if ln.strip()), None)
    if header_no is None:
        raise ParseError("missing header 'n=<int> " + rank_name + "=<int>'", line=1)
    fields: dict[str, int] = {}
    for token in lines[header_no].split():
        key, sep, value = token.partition("=")
        if not sep or key not in ("n", rank_name) or key in fields:
            raise ParseError(f"bad header token {token!r}", line=header_no + 1)
        try:
            fields[key] = int(value)
        except ValueError as e:
            raise ParseError(f"bad header value {token!r}", line=header_no + 1) from e
    if set(fields) != {"n", rank_name}:
        raise ParseError(f"header must give n and {rank_name}", line=header_no + 1)
    n, rank = fields["n"], fields[rank_name]
    sets = []
    seen: set[int] = set()
    for i in range(header_no + 1, len(lines)):
        raw = lines[i].strip()
        if not raw:
            continue
        try:
            row = [int(x) for x in raw.split()]
        except ValueError as e:
            raise ParseError(f"non-integer element in {raw!r}", line=i + 1) from e
        try:
            bits = KSet(row).bits
        except InvariantViolation as e:
            raise ParseError(str(e), line=i + 1) from e
        if len(row) != rank:
            raise ParseError(f"expected {rank} elements, got {len(row)}", line=i + 1)
        if bits.bit_length() > n:
            raise ParseError(f"element above n={n}", line=i + 1)
        if bits in seen:
            raise ParseError(f"duplicate set {raw!r}", line=i + 1)
        seen.add(bits)
        sets.append(row)
    return n, rank, sets


def _parse(text: bytes | str, fmt: FamilyFormat, cls: type[SetSystem]):
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError("input is not UTF-8", line=1) from e
    if fmt == "json":
        doc = _parse_json(text)
        return doc.build(cls)
    if fmt == "lines":
        n, rank, sets = _parse_lines(text, cls.rank_name)
        return cls(n, rank, sets)
    raise InvalidParameters(f"unknown format {fmt!r}")


def parse_family(text: bytes | str, fmt: FamilyFormat) -> Family:
    return _parse(text, fmt, Family)


def parse_tset_system(text: bytes | str, fmt: FamilyFormat) -> TSetSystem:
    return _parse(text, fmt, TSetSystem)


def serialize_family(family: SetSystem, fmt: FamilyFormat) -> bytes:
    """Encode a family or t-set system; the output is canonical and ends with a newline."""
    if fmt == "json":
        return (json.dumps(family.to_document()) + "\n").encode("utf-8")
    if fmt == "lines":
        out = [f"n={family.n} {family.rank_name}={family._rank}"]
        out += [" ".join(map(str, s)) for s in family.sets()]
        return ("\n".join(out) + "\n").encode("utf-8")
    raise InvalidParameters(f"unknown format {fmt!r}")


def format_for_path(path: pathlib.Path | str) -> FamilyFormat:
    return "json" if str(path).endswith(".json") else "lines"


def read_family(path: pathlib.Path | str, fmt: FamilyFormat | None = None) -> Family:
    p = pathlib.Path(path)
    return parse_family(p.read_bytes(), fmt or format_for_path(p))


def write_family(path: pathlib.Path | str, family: SetSystem, fmt: FamilyFormat | None = None):
    p = pathlib.Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_bytes(serialize_family(family, fmt or format_for_path(p)))
    logger.debug("Wrote %d sets to %s", len(family), p)
