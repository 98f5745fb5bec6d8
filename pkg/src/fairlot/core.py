"""Domain types for exact-arithmetic allocation instances.

Every value and probability in this library is a `fractions.Fraction`.
Floats are rejected at the boundary: the fairness and strategyproofness
checks rest on exact equalities (probabilities like 1/n!, equitability
comparisons) that floating point cannot represent.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence


class FairlotError(Exception):
    """Base class for all errors raised by this library."""


@dataclass(frozen=True)
class Violation:
    """A single validation failure: a stable code plus human context."""

    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


class ValidationError(FairlotError):
    """Raised with the complete list of violations, not just the first."""

    def __init__(self, violations: Iterable[Violation]):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations))

    def codes(self) -> tuple[str, ...]:
        return tuple(v.code for v in self.violations)


def as_rational(value: int | str | Fraction) -> Fraction:
    """Coerce to Fraction, refusing floats outright."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational value")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"expected an exact rational (int, str or Fraction), got {type(value).__name__}")


class Kind(str, Enum):
    """Instance domain kind, fixing each agent's allowed report set."""

    CHORES1 = "chores1"   # one inherent negative value per item; reports in {0, v(e)}
    CHORESK = "choresk"   # k >= 2 inherent negative values; reports in {0, v1(e), ..., vk(e)}
    MIXED2 = "mixed2"     # two agents; item carries (-c(e), v(e)); reports in {-c(e), 0, v(e)}


@dataclass(frozen=True)
class ItemSpec:
    id: int
    inherent_values: tuple[Fraction, ...]


@dataclass(frozen=True)
class Instance:
    n_agents: int
    items: tuple[ItemSpec, ...]
    kind: Kind

    @property
    def m(self) -> int:
        return len(self.items)

    def allowed_values(self, item_id: int) -> tuple[Fraction, ...]:
        """The full report set for an item, sorted ascending (always contains 0)."""
        values = set(self.items[item_id].inherent_values)
        values.add(Fraction(0))
        return tuple(sorted(values))


def validate_instance(
    kind: Kind | str,
    n_agents: int,
    items: Sequence[tuple[int, Sequence[int | str | Fraction]]],
) -> Instance:
    """Check every instance invariant; raise ValidationError listing all failures.

    `items` is a sequence of (item_id, inherent values) pairs. Ids must be
    0-based, contiguous and unique.
    """
    kind = Kind(kind)
    violations: list[Violation] = []
    if n_agents < 1:
        violations.append(Violation("NonPositiveAgentCount", f"n_agents = {n_agents}"))
    if kind is Kind.MIXED2 and n_agents != 2:
        violations.append(Violation("MixedRequiresTwoAgents", f"n_agents = {n_agents}"))

    seen_ids: set[int] = set()
    for item_id, _ in items:
        if item_id in seen_ids:
            violations.append(Violation("DuplicateItemId", f"item id {item_id} appears twice"))
        seen_ids.add(item_id)
    if seen_ids != set(range(len(items))):
        violations.append(
            Violation("NonContiguousItemIds", f"ids {sorted(seen_ids)} are not 0..{len(items) - 1}")
        )

    specs: list[ItemSpec] = []
    value_counts: set[int] = set()
    for item_id, raw_values in items:
        try:
            values = tuple(as_rational(v) for v in raw_values)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            violations.append(Violation("MalformedValue", f"item {item_id}: {exc}"))
            continue
        value_counts.add(len(values))
        if kind is Kind.CHORES1:
            if len(values) != 1:
                violations.append(
                    Violation("WrongInherentValueCount", f"item {item_id} carries {len(values)} values, expected 1")
                )
            for v in values:
                if v >= 0:
                    violations.append(
                        Violation("NonNegativeInherentChoreValue", f"item {item_id} has inherent value {v}")
                    )
        elif kind is Kind.CHORESK:
            if len(values) < 2:
                violations.append(
                    Violation("WrongInherentValueCount", f"item {item_id} carries {len(values)} values, expected >= 2")
                )
            for v in values:
                if v >= 0:
                    violations.append(
                        Violation("NonNegativeInherentChoreValue", f"item {item_id} has inherent value {v}")
                    )
        else:
            if len(values) != 2:
                violations.append(
                    Violation("WrongInherentValueCount", f"item {item_id} carries {len(values)} values, expected 2")
                )
            else:
                cost, gain = values
                if cost >= 0:
                    violations.append(
                        Violation("NonNegativeInherentChoreValue", f"item {item_id} has chore value {cost}")
                    )
                if gain <= 0:
                    violations.append(
                        Violation("NonPositiveInherentGoodValue", f"item {item_id} has good value {gain}")
                    )
        specs.append(ItemSpec(id=item_id, inherent_values=values))
    if kind is Kind.CHORESK and len(value_counts) > 1:
        violations.append(
            Violation("InconsistentInherentValueCount", f"items carry differing value counts {sorted(value_counts)}")
        )

    if violations:
        raise ValidationError(violations)
    specs.sort(key=lambda s: s.id)
    return Instance(n_agents=n_agents, items=tuple(specs), kind=kind)


def make_instance(
    kind: Kind | str, n_agents: int, values: Sequence[Sequence[int | str | Fraction]]
) -> Instance:
    """Build an instance from per-item value lists with implicit 0-based ids."""
    return validate_instance(kind, n_agents, list(enumerate(values)))


def chores_instance(n_agents: int, values: Sequence[int | str | Fraction]) -> Instance:
    """Shorthand for a 1-restricted chores instance from scalar inherent values."""
    return make_instance(Kind.CHORES1, n_agents, [[v] for v in values])


def mixed_instance(pairs: Sequence[tuple[int | str | Fraction, int | str | Fraction]]) -> Instance:
    """Shorthand for a two-agent mixed instance from (-cost, gain) pairs."""
    return make_instance(Kind.MIXED2, 2, [list(p) for p in pairs])


@dataclass(frozen=True)
class ValuationProfile:
    """An n x m matrix of exact rationals; additive over bundles."""

    values: tuple[tuple[Fraction, ...], ...]

    @property
    def n_agents(self) -> int:
        return len(self.values)

    @property
    def m(self) -> int:
        return len(self.values[0]) if self.values else 0

    def value(self, agent: int, item: int) -> Fraction:
        return self.values[agent][item]

    def row(self, agent: int) -> tuple[Fraction, ...]:
        return self.values[agent]


def validate_profile(
    instance: Instance, raw: Sequence[Sequence[int | str | Fraction]]
) -> ValuationProfile:
    """Accept a matrix iff every entry lies in the instance's allowed report set."""
    violations: list[Violation] = []
    if len(raw) != instance.n_agents:
        raise ValidationError(
            [Violation("ProfileShapeMismatch", f"{len(raw)} rows for {instance.n_agents} agents")]
        )
    rows: list[tuple[Fraction, ...]] = []
    for agent, raw_row in enumerate(raw):
        if len(raw_row) != instance.m:
            violations.append(
                Violation("ProfileShapeMismatch", f"agent {agent} row has {len(raw_row)} entries for {instance.m} items")
            )
            continue
        row: list[Fraction] = []
        for item, raw_value in enumerate(raw_row):
            value = as_rational(raw_value)
            if value not in instance.allowed_values(item):
                violations.append(
                    Violation(
                        "ValueOutsideAllowedSet",
                        f"agent {agent}, item {item}: {value} not in {list(map(str, instance.allowed_values(item)))}",
                    )
                )
            row.append(value)
        rows.append(tuple(row))
    if violations:
        raise ValidationError(violations)
    return ValuationProfile(values=tuple(rows))


def bundle_value(profile: ValuationProfile, agent: int, bundle: Iterable[int]) -> Fraction:
    """Additive value of a bundle; the empty bundle is worth 0."""
    total = Fraction(0)
    for item in bundle:
        total += profile.values[agent][item]
    return total


@dataclass(frozen=True)
class DeterministicAllocation:
    """A total item -> agent map; owner[j] is the agent receiving item j."""

    owner: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.owner)

    def bundle(self, agent: int) -> tuple[int, ...]:
        return tuple(j for j, o in enumerate(self.owner) if o == agent)

    def bundles(self, n_agents: int) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(n_agents)]
        for j, o in enumerate(self.owner):
            out[o].append(j)
        return tuple(tuple(b) for b in out)


def validate_allocation(instance: Instance, owner: Sequence[int]) -> DeterministicAllocation:
    violations: list[Violation] = []
    if len(owner) != instance.m:
        violations.append(
            Violation("AllocationLengthMismatch", f"{len(owner)} owners for {instance.m} items")
        )
    for j, o in enumerate(owner):
        if not isinstance(o, int) or isinstance(o, bool) or not (0 <= o < instance.n_agents):
            violations.append(Violation("OwnerOutOfRange", f"item {j} owned by {o!r}"))
    if violations:
        raise ValidationError(violations)
    return DeterministicAllocation(owner=tuple(owner))


@dataclass(frozen=True)
class FractionalAllocation:
    """An m x n matrix of ownership shares; every row sums to exactly 1."""

    shares: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        for j, row in enumerate(self.shares):
            if sum(row, Fraction(0)) != 1:
                raise ValueError(f"row {j} of a fractional allocation sums to {sum(row)}, not 1")
            for share in row:
                if share < 0 or share > 1:
                    raise ValueError(f"share {share} of item {j} outside [0, 1]")

    @property
    def m(self) -> int:
        return len(self.shares)

    @property
    def n_agents(self) -> int:
        return len(self.shares[0]) if self.shares else 0


@dataclass(frozen=True)
class RandomizedAllocation:
    """A finite lottery over deterministic allocations.

    The support is kept canonical: probabilities strictly positive and
    summing to exactly 1, allocations pairwise distinct and sorted
    lexicographically by owner sequence.
    """

    support: tuple[tuple[Fraction, DeterministicAllocation], ...]

    def __post_init__(self) -> None:
        total = Fraction(0)
        previous: tuple[int, ...] | None = None
        for probability, allocation in self.support:
            if probability <= 0:
                raise ValueError(f"non-positive probability {probability} in support")
            if previous is not None and allocation.owner <= previous:
                raise ValueError("support not sorted by owner sequence or contains duplicates")
            previous = allocation.owner
            total += probability
        if total != 1:
            raise ValueError(f"support probabilities sum to {total}, not 1")

    @property
    def size(self) -> int:
        return len(self.support)


def make_randomized(
    pairs: Iterable[tuple[Fraction, DeterministicAllocation | Sequence[int]]],
) -> RandomizedAllocation:
    """Merge duplicate allocations, drop nothing, sort canonically."""
    merged: dict[tuple[int, ...], Fraction] = {}
    for probability, allocation in pairs:
        owner = tuple(allocation.owner) if isinstance(allocation, DeterministicAllocation) else tuple(allocation)
        merged[owner] = merged.get(owner, Fraction(0)) + probability
    support = tuple(
        (merged[owner], DeterministicAllocation(owner=owner)) for owner in sorted(merged)
    )
    return RandomizedAllocation(support=support)
