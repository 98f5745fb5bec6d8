"""Brute-force ground truth and finite impossibility replays.

Everything here is deliberately independent of the mechanisms' own
reasoning: welfare optima and Pareto verdicts come from exhaustive
enumeration of owner sequences, strategyproofness from exhaustive
deviation search over the restricted report domains, and the replay
cases re-derive known negative results from scratch at their fixed
sizes.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import weakref
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Sequence

from .core import (
    DeterministicAllocation,
    FairlotError,
    Instance,
    Kind,
    ValuationProfile,
    chores_instance,
    make_instance,
    mixed_instance,
    validate_profile,
)
from .mechanisms import WrongInstanceKind, rand_chore, rand_chore_expected_utilities, rand_mixed_expected_utilities, sequential_picking
from .properties import Notion, check_fair, welfare
from .serial import InstanceDocument, serialize_document

DEFAULT_ENUM_CAP = 10**7


class EnumerationTooLarge(FairlotError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"enumeration of size {size} exceeds cap {cap}")


def enum_cap_default() -> int:
    """Default enumeration cap, overridable via FAIRLOT_ENUM_CAP."""
    raw = os.environ.get("FAIRLOT_ENUM_CAP")
    return int(raw) if raw else DEFAULT_ENUM_CAP


def _plain(value: Fraction) -> int | Fraction:
    # Integral rationals become ints: same exact comparisons, much faster loops.
    return value.numerator if value.denominator == 1 else value


def _check_cap(size: int, cap: int | None) -> None:
    limit = cap if cap is not None else enum_cap_default()
    if size > limit:
        raise EnumerationTooLarge(size, limit)


def enumerate_allocations(
    n_agents: int, m: int, *, cap: int | None = None
) -> Iterator[DeterministicAllocation]:
    """All n^m owner sequences in lexicographic order, each exactly once."""
    _check_cap(n_agents**m, cap)
    for owner in itertools.product(range(n_agents), repeat=m):
        yield DeterministicAllocation(owner=owner)


def _utility_vector(owner: Sequence[int], values: Sequence[Sequence]) -> tuple:
    totals = [0] * len(values)
    for item, agent in enumerate(owner):
        totals[agent] += values[agent][item]
    return tuple(totals)


def _value_table(profile: ValuationProfile) -> list[list]:
    return [[_plain(v) for v in row] for row in profile.values]


def opt_welfare(
    kind: str, instance: Instance, profile: ValuationProfile, *, cap: int | None = None
) -> tuple[Fraction, DeterministicAllocation]:
    """Exact optimum of UW or EW over all deterministic allocations, with witness."""
    aggregate = {"UW": sum, "EW": min}[kind.upper()]
    values = _value_table(profile)
    best: tuple | None = None
    witness: tuple[int, ...] | None = None
    _check_cap(instance.n_agents**instance.m, cap)
    for owner in itertools.product(range(instance.n_agents), repeat=instance.m):
        u = _utility_vector(owner, values)
        score = aggregate(u) if u else 0
        if best is None or score > best:
            best = score
            witness = owner
    assert witness is not None
    return Fraction(best), DeterministicAllocation(owner=witness)


def is_pareto_optimal(
    alloc: DeterministicAllocation,
    instance: Instance,
    profile: ValuationProfile,
    *,
    cap: int | None = None,
) -> tuple[bool, DeterministicAllocation | None]:
    """TRUE iff no enumerated allocation weakly improves everyone, one strictly."""
    values = _value_table(profile)
    mine = _utility_vector(alloc.owner, values)
    _check_cap(instance.n_agents**instance.m, cap)
    for owner in itertools.product(range(instance.n_agents), repeat=instance.m):
        theirs = _utility_vector(owner, values)
        strict = False
        weak = True
        for a, b in zip(theirs, mine):
            if a < b:
                weak = False
                break
            if a > b:
                strict = True
        if weak and strict:
            return False, DeterministicAllocation(owner=owner)
    return True, None


class AllocationScanner:
    """Cached utility table for repeated dominance and optimum queries.

    Builds the full n^m utility table once; every later query is a scan
    over precomputed vectors. Intended for evaluating many allocations
    against one (instance, profile) pair.
    """

    def __init__(self, instance: Instance, profile: ValuationProfile, *, cap: int | None = None):
        self.instance = instance
        self.n = instance.n_agents
        self.m = instance.m
        _check_cap(self.n**self.m, cap)
        values = _value_table(profile)
        self._values = values
        self.utilities = [
            _utility_vector(owner, values)
            for owner in itertools.product(range(self.n), repeat=self.m)
        ]

    def _owner_of_index(self, index: int) -> tuple[int, ...]:
        owner = [0] * self.m
        for j in range(self.m - 1, -1, -1):
            index, owner[j] = divmod(index, self.n)
        return tuple(owner)

    def opt_welfare(self, kind: str) -> tuple[Fraction, DeterministicAllocation]:
        aggregate = {"UW": sum, "EW": min}[kind.upper()]
        best_index = 0
        best = None
        for index, u in enumerate(self.utilities):
            score = aggregate(u) if u else 0
            if best is None or score > best:
                best = score
                best_index = index
        return Fraction(best), DeterministicAllocation(owner=self._owner_of_index(best_index))

    def is_pareto_optimal(
        self, alloc: DeterministicAllocation
    ) -> tuple[bool, DeterministicAllocation | None]:
        mine = _utility_vector(alloc.owner, self._values)
        for index, theirs in enumerate(self.utilities):
            strict = False
            weak = True
            for a, b in zip(theirs, mine):
                if a < b:
                    weak = False
                    break
                if a > b:
                    strict = True
            if weak and strict:
                return False, DeterministicAllocation(owner=self._owner_of_index(index))
        return True, None


# --- mechanism expected-utility registry -----------------------------------

def fewest_zeros_expected_utilities(
    instance: Instance, reported: ValuationProfile, truth: ValuationProfile
) -> tuple[Fraction, ...]:
    """Negative control: every chore to the agent with fewest zero reports."""
    if instance.kind is not Kind.CHORES1:
        raise WrongInstanceKind("fewest-zeros requires kind chores1")
    winner = _fewest_zeros_winner(tuple(reported.values))
    return tuple(
        sum(truth.row(i), Fraction(0)) if i == winner else Fraction(0)
        for i in range(instance.n_agents)
    )


def _fewest_zeros_winner(reported_rows: tuple[tuple[Fraction, ...], ...]) -> int:
    counts = [sum(1 for v in row if v == 0) for row in reported_rows]
    return min(range(len(counts)), key=lambda i: (counts[i], i))


@lru_cache(maxsize=None)
def _chore_structure(instance: Instance, reported_rows: tuple):
    if instance.kind is not Kind.CHORES1:
        raise WrongInstanceKind("randchore requires kind chores1")
    zero_items = []
    q_bar = []
    for q in range(instance.m):
        members = tuple(i for i in range(instance.n_agents) if reported_rows[i][q] == 0)
        if members:
            zero_items.append((q, members, Fraction(1, len(members))))
        else:
            q_bar.append(q)
    return tuple(zero_items), tuple(q_bar)


def _eu_chore_agent(instance: Instance, reported_rows: tuple, agent: int, truth_row: tuple) -> Fraction:
    zero_items, q_bar = _chore_structure(instance, reported_rows)
    total = Fraction(0)
    for q, members, share in zero_items:
        if agent in members:
            total += truth_row[q] * share
    round_robin = sum((truth_row[q] for q in q_bar), Fraction(0))
    return total + round_robin / instance.n_agents


@lru_cache(maxsize=None)
def _mixed_structure(instance: Instance, reported_rows: tuple):
    if instance.kind is not Kind.MIXED2:
        raise WrongInstanceKind("randmixed requires kind mixed2")
    halved = []
    own: tuple[list[int], list[int]] = ([], [])
    for q in range(instance.m):
        first, second = reported_rows[0][q], reported_rows[1][q]
        if first == second:
            # coin-flipped and round-robin items both end up half-half in expectation
            halved.append(q)
        elif first > second:
            own[0].append(q)
        else:
            own[1].append(q)
    return tuple(halved), (tuple(own[0]), tuple(own[1]))


def _eu_mixed_agent(instance: Instance, reported_rows: tuple, agent: int, truth_row: tuple) -> Fraction:
    halved, own = _mixed_structure(instance, reported_rows)
    half = sum((truth_row[q] for q in halved), Fraction(0)) / 2
    return half + sum((truth_row[q] for q in own[agent]), Fraction(0))


def _eu_fewest_zeros_agent(instance: Instance, reported_rows: tuple, agent: int, truth_row: tuple) -> Fraction:
    if instance.kind is not Kind.CHORES1:
        raise WrongInstanceKind("fewest-zeros requires kind chores1")
    if _fewest_zeros_winner(reported_rows) == agent:
        return sum(truth_row, Fraction(0))
    return Fraction(0)


@dataclass(frozen=True)
class _Mechanism:
    eu_vector: Callable[[Instance, ValuationProfile, ValuationProfile], tuple]
    eu_agent: Callable[[Instance, tuple, int, tuple], Fraction]


MECHANISMS: dict[str, _Mechanism] = {
    "randchore": _Mechanism(rand_chore_expected_utilities, _eu_chore_agent),
    "randmixed": _Mechanism(rand_mixed_expected_utilities, _eu_mixed_agent),
    "fewest-zeros": _Mechanism(fewest_zeros_expected_utilities, _eu_fewest_zeros_agent),
}


def _mechanism(mechanism_id: str) -> _Mechanism:
    try:
        return MECHANISMS[mechanism_id]
    except KeyError:
        raise ValueError(f"unknown mechanism {mechanism_id!r}; known: {sorted(MECHANISMS)}") from None


@dataclass(frozen=True)
class DeviationReport:
    """Outcome of an exhaustive deviation search, with a replayable witness."""

    mechanism: str
    verdict: str  # "TRUTHFUL-OPTIMAL" | "VIOLATION"
    truth: ValuationProfile
    coalition: tuple[int, ...]
    truthful_reports: ValuationProfile | None
    deviating_reports: ValuationProfile | None
    eu_truthful: tuple[Fraction, ...] | None
    eu_deviating: tuple[Fraction, ...] | None
    search_bounds: dict

    @property
    def truthful_optimal(self) -> bool:
        return self.verdict == "TRUTHFUL-OPTIMAL"


def _report_space(instance: Instance) -> list[tuple[Fraction, ...]]:
    """Every report row an agent may submit, in lexicographic value order."""
    per_item = [instance.allowed_values(j) for j in range(instance.m)]
    return list(itertools.product(*per_item))


# Per-instance memo of single-agent expected utilities, keyed by small-int
# report ids so the hot verification loops never hash rational matrices.
_EU_CACHES: "weakref.WeakKeyDictionary[Instance, dict]" = weakref.WeakKeyDictionary()


class _EuIndex:
    def __init__(self, mechanism_id: str, mech: _Mechanism, instance: Instance, truth: ValuationProfile):
        self.mech = mech
        self.mechanism_id = mechanism_id
        self.instance = instance
        self.space = _report_space(instance)
        index_of = {row: k for k, row in enumerate(self.space)}
        try:
            self.truth_ids = tuple(index_of[row] for row in truth.values)
        except KeyError:
            raise ValueError("truth profile lies outside the instance's restricted domain") from None
        cache = _EU_CACHES.get(instance)
        if cache is None:
            cache = {}
            _EU_CACHES[instance] = cache
        self.cache = cache
        self.evaluations = 0

    def eu(self, agent: int, report_ids: tuple[int, ...]) -> Fraction:
        self.evaluations += 1
        key = (self.mechanism_id, agent, report_ids, self.truth_ids[agent])
        value = self.cache.get(key)
        if value is None:
            rows = tuple(self.space[k] for k in report_ids)
            value = self.mech.eu_agent(self.instance, rows, agent, self.space[self.truth_ids[agent]])
            self.cache[key] = value
        return value

    def profile(self, report_ids: tuple[int, ...]) -> ValuationProfile:
        return ValuationProfile(values=tuple(self.space[k] for k in report_ids))


def verify_spie(
    mechanism_id: str,
    instance: Instance,
    truth: ValuationProfile,
    *,
    others: str = "all",
    cap: int | None = None,
) -> DeviationReport:
    """Exhaustively test single-agent deviations against the closed forms.

    For each agent and each deviation in the restricted report domain
    (and, with others="all", each combination of the other agents'
    reports) the agent's expected utility under truthful reporting must
    weakly dominate. The first strict violation in loop order is the
    lexicographically smallest witness.
    """
    mech = _mechanism(mechanism_id)
    mode = others.lower()
    if mode not in ("all", "truthful"):
        raise ValueError(f"others must be 'all' or 'truthful', got {others!r}")
    n = instance.n_agents
    index = _EuIndex(mechanism_id, mech, instance, truth)
    d = len(index.space)
    per_agent = d ** (n - 1) * d if mode == "all" else d
    _check_cap(n * per_agent, cap)

    for agent in range(n):
        other_agents = [i for i in range(n) if i != agent]
        if mode == "all":
            others_iter = itertools.product(range(d), repeat=len(other_agents))
        else:
            others_iter = iter([tuple(index.truth_ids[i] for i in other_agents)])
        for other_ids in others_iter:
            ids = [0] * n
            for i, rid in zip(other_agents, other_ids):
                ids[i] = rid
            ids[agent] = index.truth_ids[agent]
            baseline_ids = tuple(ids)
            baseline = index.eu(agent, baseline_ids)
            for deviation in range(d):
                if deviation == index.truth_ids[agent]:
                    continue
                ids[agent] = deviation
                deviating_ids = tuple(ids)
                if index.eu(agent, deviating_ids) > baseline:
                    bounds = {"mode": "spie", "others": mode, "evaluations": index.evaluations}
                    truthful = index.profile(baseline_ids)
                    deviating = index.profile(deviating_ids)
                    return DeviationReport(
                        mechanism=mechanism_id,
                        verdict="VIOLATION",
                        truth=truth,
                        coalition=(agent,),
                        truthful_reports=truthful,
                        deviating_reports=deviating,
                        eu_truthful=mech.eu_vector(instance, truthful, truth),
                        eu_deviating=mech.eu_vector(instance, deviating, truth),
                        search_bounds=bounds,
                    )
    return DeviationReport(
        mechanism=mechanism_id,
        verdict="TRUTHFUL-OPTIMAL",
        truth=truth,
        coalition=(),
        truthful_reports=None,
        deviating_reports=None,
        eu_truthful=None,
        eu_deviating=None,
        search_bounds={"mode": "spie", "others": mode, "evaluations": index.evaluations},
    )


def verify_gspie(
    mechanism_id: str,
    instance: Instance,
    truth: ValuationProfile,
    *,
    max_coalition: int | None = None,
    others: str = "truthful",
    cap: int | None = None,
) -> DeviationReport:
    """Search coalitions for a weakly improving joint deviation, one strict.

    With others="truthful" the agents outside the coalition report their
    true values (a single-agent coalition then matches verify_spie with
    truthful others); others="all" additionally enumerates every report
    of the outsiders.
    """
    mech = _mechanism(mechanism_id)
    mode = others.lower()
    if mode not in ("all", "truthful"):
        raise ValueError(f"others must be 'all' or 'truthful', got {others!r}")
    n = instance.n_agents
    limit = max_coalition if max_coalition is not None else n
    limit = min(limit, n)
    index = _EuIndex(mechanism_id, mech, instance, truth)
    d = len(index.space)

    estimate = 0
    for size in range(1, limit + 1):
        combos = math.comb(n, size)
        outside = d ** (n - size) if mode == "all" else 1
        estimate += combos * outside * d**size * size
    _check_cap(estimate, cap)

    for size in range(1, limit + 1):
        for coalition in itertools.combinations(range(n), size):
            outsiders = [i for i in range(n) if i not in coalition]
            if mode == "all":
                outside_iter = itertools.product(range(d), repeat=len(outsiders))
            else:
                outside_iter = iter([tuple(index.truth_ids[i] for i in outsiders)])
            truthful_joint = tuple(index.truth_ids[i] for i in coalition)
            for outside_ids in outside_iter:
                ids = [0] * n
                for i, rid in zip(outsiders, outside_ids):
                    ids[i] = rid
                for i in coalition:
                    ids[i] = index.truth_ids[i]
                baseline_ids = tuple(ids)
                baselines = {i: index.eu(i, baseline_ids) for i in coalition}
                for joint in itertools.product(range(d), repeat=size):
                    if joint == truthful_joint:
                        continue
                    for i, rid in zip(coalition, joint):
                        ids[i] = rid
                    deviating_ids = tuple(ids)
                    weak = True
                    strict = False
                    for i in coalition:
                        value = index.eu(i, deviating_ids)
                        if value < baselines[i]:
                            weak = False
                            break
                        if value > baselines[i]:
                            strict = True
                    if weak and strict:
                        bounds = {
                            "mode": "gspie",
                            "others": mode,
                            "max_coalition": limit,
                            "evaluations": index.evaluations,
                        }
                        truthful = index.profile(baseline_ids)
                        deviating = index.profile(deviating_ids)
                        return DeviationReport(
                            mechanism=mechanism_id,
                            verdict="VIOLATION",
                            truth=truth,
                            coalition=coalition,
                            truthful_reports=truthful,
                            deviating_reports=deviating,
                            eu_truthful=mech.eu_vector(instance, truthful, truth),
                            eu_deviating=mech.eu_vector(instance, deviating, truth),
                            search_bounds=bounds,
                        )
                for i in coalition:
                    ids[i] = index.truth_ids[i]
    return DeviationReport(
        mechanism=mechanism_id,
        verdict="TRUTHFUL-OPTIMAL",
        truth=truth,
        coalition=(),
        truthful_reports=None,
        deviating_reports=None,
        eu_truthful=None,
        eu_deviating=None,
        search_bounds={
            "mode": "gspie",
            "others": mode,
            "max_coalition": limit,
            "evaluations": index.evaluations,
        },
    )


def reverify(report: DeviationReport, instance: Instance) -> bool:
    """Recompute a VIOLATION witness from scratch and confirm it still holds."""
    if report.verdict != "VIOLATION":
        return False
    mech = _mechanism(report.mechanism)
    assert report.truthful_reports is not None and report.deviating_reports is not None
    before = mech.eu_vector(instance, report.truthful_reports, report.truth)
    after = mech.eu_vector(instance, report.deviating_reports, report.truth)
    if before != tuple(report.eu_truthful) or after != tuple(report.eu_deviating):
        return False
    weak = all(after[i] >= before[i] for i in report.coalition)
    strict = any(after[i] > before[i] for i in report.coalition)
    return weak and strict


# --- finite replays of the impossibility results ----------------------------

@dataclass(frozen=True)
class ReplayReport:
    case: str
    confirmed: bool
    certificate: dict

    @property
    def verdict(self) -> str:
        return "CONFIRMED" if self.confirmed else "REFUTED"


def _profile_rows(profile: ValuationProfile) -> list[list[str]]:
    return [[str(v) for v in row] for row in profile.values]


def _instance_text(instance: Instance, **profiles: ValuationProfile | None) -> str:
    return serialize_document(InstanceDocument(instance=instance, **profiles))


def _replay_theorem1() -> ReplayReport:
    """No fixed picking-count mechanism is always Pareto optimal for chores."""
    instance = chores_instance(2, [-1, -1, -1])
    zeros = [Fraction(0)] * 3
    costs = [Fraction(-1)] * 3
    profile_a = validate_profile(instance, [zeros, costs])
    profile_b = validate_profile(instance, [costs, zeros])

    sequences = []
    confirmed = True
    for t0 in range(4):
        seq = (t0, 3 - t0)
        failure = None
        for label, profile in (("I1", profile_a), ("I2", profile_b)):
            allocation = sequential_picking(instance, profile, seq)
            optimal, dominator = is_pareto_optimal(allocation, instance, profile)
            if not optimal:
                failure = {
                    "counts": list(seq),
                    "non_po_on": label,
                    "allocation": list(allocation.owner),
                    "dominated_by": list(dominator.owner),
                }
                break
        if failure is None:
            confirmed = False
            failure = {"counts": list(seq), "non_po_on": None}
        sequences.append(failure)

    return ReplayReport(
        case="theorem1",
        confirmed=confirmed,
        certificate={
            "instance": _instance_text(instance),
            "profiles": {"I1": _profile_rows(profile_a), "I2": _profile_rows(profile_b)},
            "sequences": sequences,
        },
    )


def _theorem2_domains(instance: Instance, patterns: list[tuple[Fraction, ...]]):
    """Per reported pattern, the allocations that are EQ1 and PO under it."""
    minus_one = tuple([Fraction(-1)] * 4)
    domains = {}
    for pattern in patterns:
        profile = ValuationProfile(values=(pattern, minus_one))
        allowed = []
        for owner in itertools.product(range(2), repeat=4):
            allocation = DeterministicAllocation(owner=owner)
            if not check_fair(Notion.EQ1, allocation, profile).holds:
                continue
            if not is_pareto_optimal(allocation, instance, profile)[0]:
                continue
            allowed.append(owner)
        domains[pattern] = allowed
    return domains


def _replay_theorem2() -> ReplayReport:
    """No deterministic mechanism on the 16-pattern slice is SP, PO and EQ1.

    One variable per reported pattern of the first agent (the second is
    pinned to reporting every chore), ranging over that pattern's EQ1
    and PO allocations; the constraints say no pattern may envy the
    bundle another pattern's allocation gives the first agent.
    Backtracking with forward checking decides satisfiability.
    """
    instance = chores_instance(2, [-1, -1, -1, -1])
    patterns = list(itertools.product((Fraction(-1), Fraction(0)), repeat=4))
    domains = _theorem2_domains(instance, patterns)

    # first-agent bundle value of each candidate allocation under each pattern
    def bundle0_value(pattern: tuple, owner: tuple[int, ...]) -> Fraction:
        return sum((pattern[j] for j, o in enumerate(owner) if o == 0), Fraction(0))

    nodes = 0

    def solve(with_sp: bool):
        nonlocal nodes
        order = sorted(patterns, key=lambda p: (len(domains[p]), patterns.index(p)))
        assignment: dict[tuple, tuple[int, ...]] = {}

        def consistent(p, owner_p, q, owner_q) -> bool:
            # truth p must not gain by reporting q, and vice versa
            if bundle0_value(p, owner_q) > bundle0_value(p, owner_p):
                return False
            if bundle0_value(q, owner_p) > bundle0_value(q, owner_q):
                return False
            return True

        def backtrack(index: int, live: dict[tuple, list[tuple[int, ...]]]):
            nonlocal nodes
            if index == len(order):
                return dict(assignment)
            var = order[index]
            for owner in live[var]:
                nodes += 1
                assignment[var] = owner
                pruned = {}
                empty = False
                for later in order[index + 1 :]:
                    if with_sp:
                        kept = [b for b in live[later] if consistent(var, owner, later, b)]
                    else:
                        kept = live[later]
                    pruned[later] = kept
                    if not kept:
                        empty = True
                        break
                if not empty:
                    result = backtrack(index + 1, {**live, **pruned})
                    if result is not None:
                        return result
                del assignment[var]
            return None

        live = {p: list(domains[p]) for p in patterns}
        if any(not d for d in live.values()):
            return None
        return backtrack(0, live)

    sp_solution = solve(with_sp=True)
    sp_nodes = nodes
    nodes = 0
    free_solution = solve(with_sp=False)

    def pattern_key(pattern: tuple) -> str:
        return " ".join(str(v) for v in pattern)

    truthful = tuple([Fraction(-1)] * 4)
    confirmed = sp_solution is None and free_solution is not None and bool(domains[truthful])
    certificate = {
        "instance": _instance_text(instance),
        "pinned_report": ["-1", "-1", "-1", "-1"],
        "patterns": len(patterns),
        "domain_sizes": {pattern_key(p): len(domains[p]) for p in patterns},
        "sp_unsat": sp_solution is None,
        "sp_nodes": sp_nodes,
        "no_sp_sat": free_solution is not None,
        "no_sp_assignment": None
        if free_solution is None
        else {pattern_key(p): list(owner) for p, owner in sorted(free_solution.items())},
        "truthful_domain": [list(owner) for owner in domains[truthful]],
    }
    return ReplayReport(case="theorem2", confirmed=confirmed, certificate=certificate)


def _replay_freeman() -> ReplayReport:
    """Four agents, eight chores: nothing is EF1, EQ1 and PO at once."""
    instance = make_instance(Kind.CHORESK, 4, [[-10, -73]] + [[-10, -1]] * 7)
    rows = [
        [-10] * 8,
        [-10] * 8,
        [-73] + [-1] * 7,
        [-73] + [-1] * 7,
    ]
    profile = validate_profile(instance, rows)
    values = _value_table(profile)
    n, m = 4, 8

    utilities: list[tuple] = []
    survivors: list[int] = []
    ef1_count = 0
    eq1_count = 0
    for index, owner in enumerate(itertools.product(range(n), repeat=m)):
        bundles: list[list[int]] = [[] for _ in range(n)]
        for j, agent in enumerate(owner):
            bundles[agent].append(j)
        own = [sum(values[i][e] for e in bundles[i]) for i in range(n)]
        utilities.append(tuple(own))
        ef1 = _up_to_one_fast(values, bundles, own, equitable=False)
        eq1 = _up_to_one_fast(values, bundles, own, equitable=True)
        ef1_count += ef1
        eq1_count += eq1
        if ef1 and eq1:
            survivors.append(index)

    def owner_of(index: int) -> tuple[int, ...]:
        owner = [0] * m
        for j in range(m - 1, -1, -1):
            index, owner[j] = divmod(index, n)
        return tuple(owner)

    po_survivors = []
    refutations = []
    for index in survivors:
        mine = utilities[index]
        dominator = None
        for other_index, theirs in enumerate(utilities):
            weak = True
            strict = False
            for a, b in zip(theirs, mine):
                if a < b:
                    weak = False
                    break
                if a > b:
                    strict = True
            if weak and strict:
                dominator = other_index
                break
        if dominator is None:
            po_survivors.append(index)
        elif len(refutations) < 5:
            refutations.append(
                {"allocation": list(owner_of(index)), "dominated_by": list(owner_of(dominator))}
            )

    confirmed = not po_survivors
    certificate = {
        "instance": _instance_text(instance, true_profile=profile),
        "allocations": n**m,
        "ef1_survivors": ef1_count,
        "eq1_survivors": eq1_count,
        "ef1_eq1_survivors": len(survivors),
        "ef1_eq1_po_survivors": len(po_survivors),
        "sample_refutations": refutations,
        "po_counterexamples": [list(owner_of(i)) for i in po_survivors[:5]],
    }
    return ReplayReport(case="freeman", confirmed=confirmed, certificate=certificate)


def _up_to_one_fast(values, bundles, own, *, equitable: bool) -> bool:
    """EF1 (or EQ1) via the best single removal; matches the literal scan.

    Removing an item from the pair's union helps most when it is the
    viewer's worst own item, or the most valuable item of the other
    bundle as seen by whoever values that side of the comparison.
    """
    n = len(bundles)
    for i in range(n):
        row = values[i]
        mine = bundles[i]
        best_own_removal = own[i] - min((row[e] for e in mine), default=0)
        for j in range(n):
            if i == j:
                continue
            others = bundles[j]
            if not mine and not others:
                continue
            if equitable:
                right_base = own[j]
                right_row = values[j]
            else:
                right_base = sum(row[e] for e in others)
                right_row = row
            ok = bool(mine) and best_own_removal >= right_base
            if not ok and others:
                ok = own[i] >= right_base - max(right_row[e] for e in others)
            if not ok:
                return False
    return True


def _replay_ewm_bound(n: int, *, cap: int | None = None) -> ReplayReport:
    """The round-robin tail loses a factor 2 - 1/n on egalitarian welfare."""
    m = n * (n - 1) + 1
    inherent = [-1] * (n * (n - 1)) + [-n]
    instance = chores_instance(n, inherent)
    profile = validate_profile(instance, [inherent] * n)

    output = rand_chore(instance, profile, permutation=tuple(range(n)))
    assert output.distribution.size == 1
    allocation = output.distribution.support[0][1]
    ew = welfare("EW", allocation, profile)

    opt_e, opt_witness = opt_welfare("EW", instance, profile, cap=cap)
    ratio = ew / opt_e if opt_e != 0 else None

    expected_ew = Fraction(-(2 * n - 1))
    expected_opt = Fraction(-n)
    expected_ratio = 2 - Fraction(1, n)
    confirmed = ew == expected_ew and opt_e == expected_opt and ratio == expected_ratio
    certificate = {
        "instance": _instance_text(instance, true_profile=profile),
        "pinned_permutation": list(range(n)),
        "allocation": list(allocation.owner),
        "ew": str(ew),
        "opt_egalitarian": str(opt_e),
        "opt_witness": list(opt_witness.owner),
        "ratio": None if ratio is None else str(ratio),
        "expected_ratio": str(expected_ratio),
    }
    return ReplayReport(case="ewm-bound", confirmed=confirmed, certificate=certificate)


def _replay_mixed_eq() -> ReplayReport:
    """Two mirrored agents: every Pareto optimal split violates EQ and EQ1."""
    instance = mixed_instance([(-1, 1), (-1, 1)])
    profile = validate_profile(instance, [[1, 1], [-1, -1]])

    po_entries = []
    confirmed = True
    for allocation in enumerate_allocations(2, 2):
        optimal, _ = is_pareto_optimal(allocation, instance, profile)
        if not optimal:
            continue
        eq = check_fair(Notion.EQ, allocation, profile)
        eq1 = check_fair(Notion.EQ1, allocation, profile)
        if eq.holds or eq1.holds:
            confirmed = False
        po_entries.append(
            {
                "allocation": list(allocation.owner),
                "eq": eq.status,
                "eq_witness": eq.witness,
                "eq1": eq1.status,
                "eq1_witness": eq1.witness,
            }
        )

    certificate = {
        "instance": _instance_text(instance, true_profile=profile),
        "po_allocations": po_entries,
    }
    return ReplayReport(case="mixed-eq", confirmed=confirmed, certificate=certificate)


REPLAY_CASES = ("theorem1", "theorem2", "freeman", "ewm-bound", "mixed-eq")


def replay(case: str, *, n: int = 3, cap: int | None = None) -> ReplayReport:
    """Re-derive one of the fixed negative results; see REPLAY_CASES."""
    name = case.lower().replace("_", "-")
    if name == "theorem1":
        return _replay_theorem1()
    if name == "theorem2":
        return _replay_theorem2()
    if name == "freeman":
        return _replay_freeman()
    if name == "ewm-bound":
        return _replay_ewm_bound(n, cap=cap)
    if name == "mixed-eq":
        return _replay_mixed_eq()
    raise ValueError(f"unknown replay case {case!r}; known: {REPLAY_CASES}")


# --- report serialization ----------------------------------------------------

def deviation_report_to_text(report: DeviationReport) -> str:
    lines = [f"mechanism {report.mechanism}", f"verdict {report.verdict}"]
    if report.coalition:
        lines.append("coalition " + " ".join(str(i) for i in report.coalition))
    lines.append("truth")
    for row in report.truth.values:
        lines.append(" ".join(str(v) for v in row))
    for label, profile in (
        ("reports-truthful", report.truthful_reports),
        ("reports-deviating", report.deviating_reports),
    ):
        if profile is not None:
            lines.append(label)
            for row in profile.values:
                lines.append(" ".join(str(v) for v in row))
    if report.eu_truthful is not None:
        lines.append("eu-truthful " + " ".join(str(v) for v in report.eu_truthful))
    if report.eu_deviating is not None:
        lines.append("eu-deviating " + " ".join(str(v) for v in report.eu_deviating))
    for key in sorted(report.search_bounds):
        lines.append(f"bound {key} {json.dumps(report.search_bounds[key], sort_keys=True)}")
    return "\n".join(lines) + "\n"


def deviation_report_to_json(report: DeviationReport) -> dict:
    def profile_json(profile: ValuationProfile | None):
        return None if profile is None else _profile_rows(profile)

    return {
        "mechanism": report.mechanism,
        "verdict": report.verdict,
        "coalition": list(report.coalition),
        "truth": _profile_rows(report.truth),
        "reports_truthful": profile_json(report.truthful_reports),
        "reports_deviating": profile_json(report.deviating_reports),
        "eu_truthful": None if report.eu_truthful is None else [str(v) for v in report.eu_truthful],
        "eu_deviating": None if report.eu_deviating is None else [str(v) for v in report.eu_deviating],
        "search_bounds": report.search_bounds,
    }


def _profile_from_rows(rows) -> ValuationProfile:
    return ValuationProfile(values=tuple(tuple(Fraction(v) for v in row) for row in rows))


def deviation_report_from_json(data: dict) -> DeviationReport:
    return DeviationReport(
        mechanism=data["mechanism"],
        verdict=data["verdict"],
        truth=_profile_from_rows(data["truth"]),
        coalition=tuple(data["coalition"]),
        truthful_reports=None if data["reports_truthful"] is None else _profile_from_rows(data["reports_truthful"]),
        deviating_reports=None if data["reports_deviating"] is None else _profile_from_rows(data["reports_deviating"]),
        eu_truthful=None if data["eu_truthful"] is None else tuple(Fraction(v) for v in data["eu_truthful"]),
        eu_deviating=None if data["eu_deviating"] is None else tuple(Fraction(v) for v in data["eu_deviating"]),
        search_bounds=data["search_bounds"],
    )


def replay_report_to_text(report: ReplayReport) -> str:
    lines = [f"case {report.case}", f"verdict {report.verdict}"]
    for key in sorted(report.certificate):
        lines.append(f"cert {key} {json.dumps(report.certificate[key], sort_keys=True)}")
    return "\n".join(lines) + "\n"


def replay_report_to_json(report: ReplayReport) -> dict:
    return {"case": report.case, "confirmed": report.confirmed, "certificate": report.certificate}


def replay_report_from_json(data: dict) -> ReplayReport:
    return ReplayReport(case=data["case"], confirmed=data["confirmed"], certificate=data["certificate"])
