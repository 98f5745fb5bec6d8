"""Randomized allocation procedures with exact output distributions.

Each mechanism maps (instance, reported profile) to a lottery over
deterministic allocations, computed as an exact product measure and
merged into a canonical support. Closed-form expected utilities are
provided alongside, so strategyproofness checks can scale past the
enumeration cap.
"""

from __future__ import annotations

import itertools
import math
import os
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import (
    DeterministicAllocation,
    FairlotError,
    Instance,
    Kind,
    RandomizedAllocation,
    ValuationProfile,
    bundle_value,
    make_randomized,
)

DEFAULT_SUPPORT_CAP = 10**6


class WrongInstanceKind(FairlotError):
    """The mechanism does not accept this instance kind."""


class SupportTooLarge(FairlotError):
    """The exact support would exceed the cap; use sampling or closed forms."""

    def __init__(self, atoms: int, cap: int):
        self.atoms = atoms
        self.cap = cap
        super().__init__(f"support would hold {atoms} atoms before merging, cap is {cap}")


class SequenceLengthMismatch(FairlotError):
    pass


def support_cap_default() -> int:
    """Default support cap, overridable via FAIRLOT_SUPPORT_CAP."""
    raw = os.environ.get("FAIRLOT_SUPPORT_CAP")
    return int(raw) if raw else DEFAULT_SUPPORT_CAP


@dataclass(frozen=True)
class PickSequence:
    """How many items each agent takes in a picking mechanism; sums to m."""

    counts: tuple[int, ...]

    def check(self, n_agents: int, m: int) -> None:
        if len(self.counts) != n_agents:
            raise SequenceLengthMismatch(f"{len(self.counts)} counts for {n_agents} agents")
        if any(c < 0 for c in self.counts) or sum(self.counts) != m:
            raise SequenceLengthMismatch(f"counts {self.counts} do not sum to {m} items")


@dataclass(frozen=True)
class MechanismOutput:
    """A mechanism's exact distribution plus the index sets it computed."""

    mechanism: str
    instance: Instance
    trace: dict[str, tuple[int, ...]]
    distribution: RandomizedAllocation


def _require_kind(instance: Instance, kind: Kind, mechanism: str) -> None:
    if instance.kind is not kind:
        raise WrongInstanceKind(f"{mechanism} requires kind {kind.value}, got {instance.kind.value}")


def _require_shape(instance: Instance, profile: ValuationProfile) -> None:
    if profile.n_agents != instance.n_agents or profile.m != instance.m:
        raise ValueError(
            f"profile shape {profile.n_agents}x{profile.m} does not match instance "
            f"{instance.n_agents}x{instance.m}"
        )


def _check_permutation(permutation: Sequence[int] | None, n_agents: int) -> tuple[int, ...] | None:
    if permutation is None:
        return None
    perm = tuple(permutation)
    if sorted(perm) != list(range(n_agents)):
        raise ValueError(f"{perm} is not a permutation of 0..{n_agents - 1}")
    return perm


def _round_robin_owners(
    sorted_items: Sequence[int], permutation: Sequence[int]
) -> list[tuple[int, int]]:
    """Assign the t-th costliest item to the agent in position t mod n."""
    n = len(permutation)
    return [(item, permutation[t % n]) for t, item in enumerate(sorted_items)]


def rand_chore(
    instance: Instance,
    reported: ValuationProfile,
    *,
    support_cap: int | None = None,
    permutation: Sequence[int] | None = None,
) -> MechanismOutput:
    """Randomized chore assignment for 1-restricted instances.

    Items some agent reported as worthless (value 0) each go to one of
    their zero-reporters, chosen independently and uniformly. The rest
    are handed out round-robin under a uniformly random agent order,
    most costly first, ties broken by smallest item index.

    `permutation` pins the round-robin order to a single permutation
    instead of averaging over all n!; it exists for deterministic
    replays and tests only.
    """
    _require_kind(instance, Kind.CHORES1, "rand_chore")
    _require_shape(instance, reported)
    cap = support_cap if support_cap is not None else support_cap_default()
    n, m = instance.n_agents, instance.m

    zero_reporters = {
        q: tuple(i for i in range(n) if reported.value(i, q) == 0) for q in range(m)
    }
    q_zero = tuple(q for q in range(m) if zero_reporters[q])
    q_bar = tuple(q for q in range(m) if not zero_reporters[q])

    pinned = _check_permutation(permutation, n)
    permutations: list[tuple[int, ...]]
    if pinned is not None:
        permutations = [pinned]
    else:
        permutations = list(itertools.permutations(range(n)))

    atoms = len(permutations)
    for q in q_zero:
        atoms *= len(zero_reporters[q])
    if atoms > cap:
        raise SupportTooLarge(atoms, cap)

    # Most costly first means largest inherent value last: sort descending.
    ordered_q_bar = sorted(q_bar, key=lambda q: (-instance.items[q].inherent_values[0], q))
    atom_probability = Fraction(1, atoms)

    pairs = []
    for perm in permutations:
        base = [-1] * m
        for item, agent in _round_robin_owners(ordered_q_bar, perm):
            base[item] = agent
        for choice in itertools.product(*(zero_reporters[q] for q in q_zero)):
            owner = list(base)
            for q, agent in zip(q_zero, choice):
                owner[q] = agent
            pairs.append((atom_probability, tuple(owner)))

    distribution = make_randomized(pairs)
    return MechanismOutput(
        mechanism="randchore",
        instance=instance,
        trace={"Q": q_zero, "Qbar": q_bar},
        distribution=distribution,
    )


def rand_chore_expected_utilities(
    instance: Instance, reported: ValuationProfile, truth: ValuationProfile
) -> tuple[Fraction, ...]:
    """Expected utilities of rand_chore in closed form, without enumeration.

    Agent i collects truth_i(e_q)/|Z_q| for each zero-reported item q it
    volunteered for, plus a 1/n share of its truth value of everything
    handed out round-robin.
    """
    _require_kind(instance, Kind.CHORES1, "rand_chore_expected_utilities")
    _require_shape(instance, reported)
    _require_shape(instance, truth)
    n, m = instance.n_agents, instance.m

    utilities = [Fraction(0) for _ in range(n)]
    q_bar: list[int] = []
    for q in range(m):
        zero = [i for i in range(n) if reported.value(i, q) == 0]
        if zero:
            share = Fraction(1, len(zero))
            for i in zero:
                utilities[i] += truth.value(i, q) * share
        else:
            q_bar.append(q)
    for i in range(n):
        utilities[i] += bundle_value(truth, i, q_bar) / n
    return tuple(utilities)


def _mixed_partition(
    instance: Instance, reported: ValuationProfile
) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    q0, q1, q2, q3 = [], [], [], []
    for q in range(instance.m):
        first, second = reported.value(0, q), reported.value(1, q)
        if first == second == 0:
            q0.append(q)
        elif first > second:
            q1.append(q)
        elif first < second:
            q2.append(q)
        else:
            q3.append(q)
    return tuple(q0), tuple(q1), tuple(q2), tuple(q3)


def rand_mixed(
    instance: Instance,
    reported: ValuationProfile,
    *,
    support_cap: int | None = None,
    permutation: Sequence[int] | None = None,
) -> MechanismOutput:
    """Randomized two-agent assignment of mixed items.

    Items both agents report as worthless are coin-flipped one by one.
    An item one agent reports strictly higher goes to that agent. Items
    with a common non-zero report are handed out round-robin under a
    random order of the two agents, largest common value first, ties by
    smallest item index.
    """
    _require_kind(instance, Kind.MIXED2, "rand_mixed")
    _require_shape(instance, reported)
    cap = support_cap if support_cap is not None else support_cap_default()
    m = instance.m

    q0, q1, q2, q3 = _mixed_partition(instance, reported)

    pinned = _check_permutation(permutation, 2)
    permutations = [pinned] if pinned is not None else [(0, 1), (1, 0)]

    atoms = len(permutations) * (2 ** len(q0))
    if atoms > cap:
        raise SupportTooLarge(atoms, cap)

    ordered_q3 = sorted(q3, key=lambda q: (-reported.value(0, q), q))
    atom_probability = Fraction(1, atoms)

    pairs = []
    for perm in permutations:
        base = [-1] * m
        for q in q1:
            base[q] = 0
        for q in q2:
            base[q] = 1
        for item, agent in _round_robin_owners(ordered_q3, perm):
            base[item] = agent
        for coins in itertools.product((0, 1), repeat=len(q0)):
            owner = list(base)
            for q, agent in zip(q0, coins):
                owner[q] = agent
            pairs.append((atom_probability, tuple(owner)))

    distribution = make_randomized(pairs)
    return MechanismOutput(
        mechanism="randmixed",
        instance=instance,
        trace={"Q0": q0, "Q1": q1, "Q2": q2, "Q3": q3},
        distribution=distribution,
    )


def rand_mixed_expected_utilities(
    instance: Instance, reported: ValuationProfile, truth: ValuationProfile
) -> tuple[Fraction, ...]:
    """Expected utilities of rand_mixed in closed form.

    Agent i gets half its truth value of the coin-flipped and round-robin
    items, plus everything routed to it outright.
    """
    _require_kind(instance, Kind.MIXED2, "rand_mixed_expected_utilities")
    _require_shape(instance, reported)
    _require_shape(instance, truth)
    q0, q1, q2, q3 = _mixed_partition(instance, reported)
    halved = q0 + q3
    own = (q1, q2)
    return tuple(
        bundle_value(truth, i, halved) / 2 + bundle_value(truth, i, own[i]) for i in range(2)
    )


def sequential_picking(
    instance: Instance,
    reported: ValuationProfile,
    seq: PickSequence | Sequence[int],
    order: Sequence[int] | None = None,
) -> DeterministicAllocation:
    """Agents take turns picking their preset number of items.

    In its turn each agent greedily takes the remaining item with the
    highest reported value, ties broken by smallest item index. The
    picking strategy is a convention of this implementation; the
    procedure is deterministic given (reports, counts, order).
    """
    _require_shape(instance, reported)
    picks = seq if isinstance(seq, PickSequence) else PickSequence(counts=tuple(seq))
    picks.check(instance.n_agents, instance.m)
    agent_order = _check_permutation(order, instance.n_agents) or tuple(range(instance.n_agents))

    remaining = list(range(instance.m))
    owner = [-1] * instance.m
    for agent in agent_order:
        for _ in range(picks.counts[agent]):
            best = max(remaining, key=lambda q: (reported.value(agent, q), -q))
            owner[best] = agent
            remaining.remove(best)
    return DeterministicAllocation(owner=tuple(owner))


def sample_allocation(
    output: MechanismOutput | RandomizedAllocation, seed: int
) -> DeterministicAllocation:
    """Draw one support element; identical seeds give identical draws.

    The draw inverts the exact cumulative distribution over the
    canonically sorted support with a single integer drawn from a
    seeded generator, so frequencies converge to the support
    probabilities without any floating point.
    """
    distribution = output.distribution if isinstance(output, MechanismOutput) else output
    denominator = math.lcm(*(p.denominator for p, _ in distribution.support))
    ticket = random.Random(seed).randrange(denominator)
    cumulative = 0
    for probability, allocation in distribution.support:
        cumulative += probability.numerator * (denominator // probability.denominator)
        if ticket < cumulative:
            return allocation
    raise AssertionError("support probabilities did not cover the ticket range")


def serialize_output(output: MechanismOutput) -> str:
    """Canonical text: the trace, then (probability, owners) atoms in order."""
    lines = [f"mechanism {output.mechanism}"]
    for name, items in output.trace.items():
        lines.append(("trace " + name + " " + " ".join(str(q) for q in items)).rstrip())
    lines.append(f"support {output.distribution.size}")
    for probability, allocation in output.distribution.support:
        owners = " ".join(str(o) for o in allocation.owner)
        lines.append((f"atom {probability} " + owners).rstrip())
    return "\n".join(lines) + "\n"


def output_to_json(output: MechanismOutput) -> dict:
    from .serial import InstanceDocument, serialize_document

    return {
        "mechanism": output.mechanism,
        "instance": serialize_document(InstanceDocument(instance=output.instance)),
        "trace": {name: list(items) for name, items in output.trace.items()},
        "support": [
            {"probability": str(p), "owner": list(a.owner)}
            for p, a in output.distribution.support
        ],
    }


def output_from_json(data: dict) -> MechanismOutput:
    from .serial import parse_document

    instance = parse_document(data["instance"]).instance
    distribution = make_randomized(
        (Fraction(atom["probability"]), tuple(atom["owner"])) for atom in data["support"]
    )
    return MechanismOutput(
        mechanism=data["mechanism"],
        instance=instance,
        trace={name: tuple(items) for name, items in data["trace"].items()},
        distribution=distribution,
    )
