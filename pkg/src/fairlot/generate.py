"""Seeded random instance and profile generation.

A single seeded generator drives every draw in a fixed order (item
values first, then the true profile row by row, then the reported
profile), so a seed fully determines the emitted document bytes.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .core import FairlotError, Instance, Kind, ValuationProfile, make_instance, validate_profile
from .serial import InstanceDocument


class InvalidSpec(FairlotError):
    """The generator request cannot produce a valid instance."""


def _negative(rng: random.Random, max_num: int, max_den: int) -> Fraction:
    return -Fraction(rng.randint(1, max_num), rng.randint(1, max_den))


def _positive(rng: random.Random, max_num: int, max_den: int) -> Fraction:
    return Fraction(rng.randint(1, max_num), rng.randint(1, max_den))


def generate_instance(
    kind: Kind | str,
    n_agents: int,
    m: int,
    rng: random.Random,
    *,
    k: int = 2,
    max_num: int = 9,
    max_den: int = 1,
) -> Instance:
    kind = Kind(kind)
    if n_agents < 1:
        raise InvalidSpec(f"n_agents must be positive, got {n_agents}")
    if m < 0:
        raise InvalidSpec(f"m must be non-negative, got {m}")
    if kind is Kind.MIXED2 and n_agents != 2:
        raise InvalidSpec("mixed2 instances require exactly 2 agents")
    if kind is Kind.CHORESK and k < 2:
        raise InvalidSpec(f"choresk instances need k >= 2 inherent values, got {k}")
    if max_num < 1 or max_den < 1:
        raise InvalidSpec("value bounds must be at least 1")

    values: list[list[Fraction]] = []
    for _ in range(m):
        if kind is Kind.CHORES1:
            values.append([_negative(rng, max_num, max_den)])
        elif kind is Kind.CHORESK:
            values.append([_negative(rng, max_num, max_den) for _ in range(k)])
        else:
            values.append([_negative(rng, max_num, max_den), _positive(rng, max_num, max_den)])
    return make_instance(kind, n_agents, values)


def generate_profile(instance: Instance, rng: random.Random) -> ValuationProfile:
    """A uniformly random valid profile: each entry drawn from its allowed set."""
    rows = [
        [rng.choice(instance.allowed_values(j)) for j in range(instance.m)]
        for _ in range(instance.n_agents)
    ]
    return validate_profile(instance, rows)


def generate_document(
    kind: Kind | str,
    n_agents: int,
    m: int,
    seed: int,
    *,
    k: int = 2,
    max_num: int = 9,
    max_den: int = 1,
    reports: str = "truthful",
) -> InstanceDocument:
    """A valid instance with a random true profile and a reported profile.

    reports="truthful" copies the true profile; "independent" draws a
    second random valid profile.
    """
    if reports not in ("truthful", "independent"):
        raise InvalidSpec(f"reports must be 'truthful' or 'independent', got {reports!r}")
    rng = random.Random(seed)
    instance = generate_instance(kind, n_agents, m, rng, k=k, max_num=max_num, max_den=max_den)
    true_profile = generate_profile(instance, rng)
    reported = true_profile if reports == "truthful" else generate_profile(instance, rng)
    return InstanceDocument(instance=instance, true_profile=true_profile, reported_profile=reported)
