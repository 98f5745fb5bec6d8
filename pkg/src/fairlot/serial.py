"""Canonical text format for instances, profiles and allocations.

The format is a UTF-8 document of newline-terminated, space-separated
records with a fixed field order, so serializing the same value twice
yields identical bytes. Rationals are written in lowest terms as "p/q"
(or bare "p" for integers), which is exactly `str(Fraction)`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import (
    DeterministicAllocation,
    FairlotError,
    Instance,
    Kind,
    ValuationProfile,
    validate_instance,
    validate_profile,
)


class ParseError(FairlotError):
    """Malformed canonical text; carries the offending line and field."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field {field!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


def format_rational(value: Fraction) -> str:
    return str(value)


def parse_rational(token: str, *, line: int | None = None, field: str | None = None) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad rational {token!r}: {exc}", line=line, field=field) from None


@dataclass(frozen=True)
class InstanceDocument:
    """An instance plus the optional profiles that travel with it."""

    instance: Instance
    true_profile: ValuationProfile | None = None
    reported_profile: ValuationProfile | None = None


def serialize_document(doc: InstanceDocument) -> str:
    inst = doc.instance
    lines = [f"kind {inst.kind.value}", f"n {inst.n_agents}", f"items {inst.m}"]
    for item in inst.items:
        values = " ".join(format_rational(v) for v in item.inherent_values)
        lines.append(f"item {item.id} {values}")
    for name, profile in (("true_profile", doc.true_profile), ("reported_profile", doc.reported_profile)):
        if profile is None:
            continue
        lines.append(name)
        for row in profile.values:
            lines.append(" ".join(format_rational(v) for v in row))
    return "\n".join(lines) + "\n"


def serialize_instance(instance: Instance) -> str:
    return serialize_document(InstanceDocument(instance=instance))


class _Cursor:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.index = 0

    @property
    def line_no(self) -> int:
        return self.index + 1

    def done(self) -> bool:
        return self.index >= len(self.lines)

    def peek(self) -> str:
        return self.lines[self.index]

    def take(self, expected_field: str | None = None) -> list[str]:
        if self.done():
            raise ParseError("unexpected end of document", field=expected_field)
        tokens = self.lines[self.index].split()
        self.index += 1
        if expected_field is not None:
            if not tokens or tokens[0] != expected_field:
                raise ParseError(
                    f"expected field {expected_field!r}, got {self.lines[self.index - 1]!r}",
                    line=self.index,
                    field=expected_field,
                )
            return tokens[1:]
        return tokens


def _parse_int(token: str, line: int, field: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"bad integer {token!r}", line=line, field=field) from None


def parse_document(text: str) -> InstanceDocument:
    """Parse the canonical format back into a validated document."""
    cursor = _Cursor(text)

    kind_tokens = cursor.take("kind")
    if len(kind_tokens) != 1:
        raise ParseError("kind takes exactly one token", line=cursor.line_no, field="kind")
    try:
        kind = Kind(kind_tokens[0])
    except ValueError:
        raise ParseError(f"unknown kind {kind_tokens[0]!r}", line=cursor.line_no, field="kind") from None

    n_tokens = cursor.take("n")
    if len(n_tokens) != 1:
        raise ParseError("n takes exactly one token", line=cursor.line_no, field="n")
    n_agents = _parse_int(n_tokens[0], cursor.line_no, "n")

    m_tokens = cursor.take("items")
    if len(m_tokens) != 1:
        raise ParseError("items takes exactly one token", line=cursor.line_no, field="items")
    m = _parse_int(m_tokens[0], cursor.line_no, "items")

    items: list[tuple[int, list[Fraction]]] = []
    for _ in range(m):
        tokens = cursor.take("item")
        if len(tokens) < 2:
            raise ParseError("item line needs an id and at least one value", line=cursor.line_no, field="item")
        item_id = _parse_int(tokens[0], cursor.line_no, "item")
        values = [parse_rational(t, line=cursor.line_no, field="item") for t in tokens[1:]]
        items.append((item_id, values))

    try:
        instance = validate_instance(kind, n_agents, items)
    except FairlotError as exc:
        raise ParseError(f"invalid instance: {exc}") from None

    profiles: dict[str, ValuationProfile] = {}
    for name in ("true_profile", "reported_profile"):
        if cursor.done() or cursor.peek().strip() != name:
            continue
        cursor.take(name)
        rows: list[list[Fraction]] = []
        for _ in range(n_agents):
            tokens = cursor.take()
            if len(tokens) != m:
                raise ParseError(
                    f"profile row has {len(tokens)} entries, expected {m}", line=cursor.line_no, field=name
                )
            rows.append([parse_rational(t, line=cursor.line_no, field=name) for t in tokens])
        try:
            profiles[name] = validate_profile(instance, rows)
        except FairlotError as exc:
            raise ParseError(f"invalid {name}: {exc}") from None

    while not cursor.done():
        if cursor.peek().strip():
            raise ParseError(f"unexpected trailing line {cursor.peek()!r}", line=cursor.line_no)
        cursor.index += 1

    return InstanceDocument(
        instance=instance,
        true_profile=profiles.get("true_profile"),
        reported_profile=profiles.get("reported_profile"),
    )


def serialize_allocation(allocation: DeterministicAllocation) -> str:
    owners = " ".join(str(o) for o in allocation.owner)
    return f"allocation {owners}".rstrip() + "\n"


def parse_allocation(text: str) -> DeterministicAllocation:
    tokens = text.split()
    if not tokens or tokens[0] != "allocation":
        raise ParseError("expected an 'allocation' record", line=1, field="allocation")
    owners = [_parse_int(t, 1, "allocation") for t in tokens[1:]]
    return DeterministicAllocation(owner=tuple(owners))
