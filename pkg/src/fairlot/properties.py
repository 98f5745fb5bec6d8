"""Fairness and efficiency predicates on allocations, exact arithmetic only.

Exact notions (EF, EQ, PROP) apply to deterministic and fractional
allocations alike; the up-to-one relaxations (EF1, EQ1, PROP1) are
defined on deterministic allocations only. Every FALSE verdict carries
a concrete witness naming the failing pair and inequality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable

from .core import (
    DeterministicAllocation,
    FairlotError,
    FractionalAllocation,
    RandomizedAllocation,
    ValuationProfile,
    bundle_value,
)
from .mechanisms import MechanismOutput
from .core import Kind


class NotionRequiresDeterministic(FairlotError):
    """Up-to-one notions are undefined for fractional allocations."""


class Notion(str, Enum):
    EF = "ef"
    EF1 = "ef1"
    EQ = "eq"
    EQ1 = "eq1"
    PROP = "prop"
    PROP1 = "prop1"


RELAXED_NOTIONS = frozenset({Notion.EF1, Notion.EQ1, Notion.PROP1})


@dataclass(frozen=True)
class Verdict:
    status: str  # "TRUE" | "FALSE" | "NOT_EVALUATED"
    witness: str | None = None

    @property
    def holds(self) -> bool:
        return self.status == "TRUE"


TRUE = Verdict("TRUE")
NOT_EVALUATED = Verdict("NOT_EVALUATED")


def _false(witness: str) -> Verdict:
    return Verdict("FALSE", witness)


def implemented_fraction(
    randomized: RandomizedAllocation, n_agents: int
) -> FractionalAllocation:
    """The m x n ownership-probability matrix the lottery implements."""
    if not randomized.support:
        raise ValueError("randomized allocation has an empty support")
    m = randomized.support[0][1].m
    shares = [[Fraction(0)] * n_agents for _ in range(m)]
    for probability, allocation in randomized.support:
        for j, owner in enumerate(allocation.owner):
            shares[j][owner] += probability
    return FractionalAllocation(shares=tuple(tuple(row) for row in shares))


def _bundle_values(
    alloc: DeterministicAllocation | FractionalAllocation, profile: ValuationProfile
) -> list[list[Fraction]]:
    """values[i][j] = agent i's valuation of agent j's (possibly fractional) bundle."""
    n = profile.n_agents
    values = [[Fraction(0)] * n for _ in range(n)]
    if isinstance(alloc, DeterministicAllocation):
        for item, owner in enumerate(alloc.owner):
            for i in range(n):
                values[i][owner] += profile.value(i, item)
    else:
        for item, row in enumerate(alloc.shares):
            for j, share in enumerate(row):
                if share:
                    for i in range(n):
                        values[i][j] += share * profile.value(i, item)
    return values


def expected_utilities(
    randomized: RandomizedAllocation, profile: ValuationProfile
) -> tuple[Fraction, ...]:
    """Support-weighted truth utilities, one exact rational per agent."""
    totals = [Fraction(0)] * profile.n_agents
    for probability, allocation in randomized.support:
        for item, owner in enumerate(allocation.owner):
            totals[owner] += probability * profile.value(owner, item)
    return tuple(totals)


def check_fair(
    notion: Notion | str,
    alloc: DeterministicAllocation | FractionalAllocation,
    profile: ValuationProfile,
) -> Verdict:
    """Evaluate a fairness notion literally; FALSE verdicts name the pair."""
    notion = Notion(notion)
    if notion in RELAXED_NOTIONS and not isinstance(alloc, DeterministicAllocation):
        raise NotionRequiresDeterministic(f"{notion.value} needs a deterministic allocation")
    n = profile.n_agents
    values = _bundle_values(alloc, profile)

    if notion is Notion.EF:
        for i in range(n):
            for j in range(n):
                if i != j and values[i][i] < values[i][j]:
                    return _false(f"agent {i} values own bundle {values[i][i]} < bundle of agent {j} {values[i][j]}")
        return TRUE

    if notion is Notion.EQ:
        for i in range(n):
            for j in range(n):
                if i != j and values[i][i] != values[j][j]:
                    return _false(f"agent {i} receives {values[i][i]} but agent {j} receives {values[j][j]}")
        return TRUE

    if notion is Notion.PROP:
        for i in range(n):
            fair_share = sum(profile.row(i), Fraction(0)) / n
            if values[i][i] < fair_share:
                return _false(f"agent {i} receives {values[i][i]} < fair share {fair_share}")
        return TRUE

    assert isinstance(alloc, DeterministicAllocation)
    bundles = alloc.bundles(n)

    if notion in (Notion.EF1, Notion.EQ1):
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                left_base = values[i][i]
                right_base = values[i][j] if notion is Notion.EF1 else values[j][j]
                right_viewer = i if notion is Notion.EF1 else j
                union = bundles[i] + bundles[j]
                if not union:
                    if left_base >= right_base:
                        continue
                    return _false(f"agents ({i},{j}): {left_base} >= {right_base} fails with nothing to remove")
                ok = False
                for e in union:
                    left = left_base - (profile.value(i, e) if e in bundles[i] else 0)
                    right = right_base - (profile.value(right_viewer, e) if e in bundles[j] else 0)
                    if left >= right:
                        ok = True
                        break
                if not ok:
                    return _false(
                        f"agents ({i},{j}): {left_base} >= {right_base} fails for every removable item"
                    )
        return TRUE

    if notion is Notion.PROP1:
        m = profile.m
        for i in range(n):
            fair_share = sum(profile.row(i), Fraction(0)) / n
            own = values[i][i]
            if own >= fair_share:
                continue
            others = [e for e in range(m) if e not in bundles[i]]
            if any(own + profile.value(i, e) >= fair_share for e in others):
                continue
            if any(own - profile.value(i, e) >= fair_share for e in bundles[i]):
                continue
            return _false(f"agent {i} stays below fair share {fair_share} after any single adjustment")
        return TRUE

    raise AssertionError(f"unhandled notion {notion}")


def welfare(
    kind: str,
    alloc: DeterministicAllocation | FractionalAllocation,
    profile: ValuationProfile,
) -> Fraction:
    """Utilitarian ("UW", the sum) or egalitarian ("EW", the minimum) welfare."""
    values = _bundle_values(alloc, profile)
    own = [values[i][i] for i in range(profile.n_agents)]
    if kind.upper() == "UW":
        return sum(own, Fraction(0))
    if kind.upper() == "EW":
        return min(own) if own else Fraction(0)
    raise ValueError(f"unknown welfare kind {kind!r}")


def itemwise_uw_bound(profile: ValuationProfile) -> Fraction:
    """Max utilitarian welfare: each item independently to a maximizer."""
    return sum((max(profile.value(i, j) for i in range(profile.n_agents)) for j in range(profile.m)), Fraction(0))


def is_uwm(
    alloc: DeterministicAllocation | FractionalAllocation, profile: ValuationProfile
) -> Verdict:
    """TRUE iff the allocation attains the itemwise utilitarian optimum.

    The bound is tight over deterministic and fractional allocations
    alike, so the same test serves ex-ante and ex-post.
    """
    bound = itemwise_uw_bound(profile)
    value = welfare("UW", alloc, profile)
    if value == bound:
        return TRUE
    return _false(f"utilitarian welfare {value} < itemwise optimum {bound}")


def chores_fractional_ew_bound(instance, profile: ValuationProfile) -> Fraction:
    """Optimal egalitarian welfare over fractional allocations, 1-restricted chores.

    Items someone values at 0 can be parked there for free; the rest cost
    everyone their inherent value, so the best any minimum can be is a
    1/n share of their total.
    """
    total = Fraction(0)
    for q in range(instance.m):
        if all(profile.value(i, q) != 0 for i in range(instance.n_agents)):
            total += instance.items[q].inherent_values[0]
    return total / instance.n_agents


@dataclass(frozen=True)
class SupportReport:
    probability: Fraction
    allocation: DeterministicAllocation
    verdicts: dict[str, Verdict]
    uw: Fraction
    ew: Fraction
    ewm_ratio: Fraction | None = None


@dataclass(frozen=True)
class EvaluationReport:
    """Ex-ante verdicts on the implemented fraction, ex-post per support atom."""

    ex_ante: dict[str, Verdict]
    ex_ante_uw: Fraction
    ex_ante_ew: Fraction
    ex_post: tuple[SupportReport, ...]

    def all_hold(self) -> bool:
        if not all(v.holds for v in self.ex_ante.values() if v.status != "NOT_EVALUATED"):
            return False
        return all(
            v.holds for element in self.ex_post for v in element.verdicts.values() if v.status != "NOT_EVALUATED"
        )


EX_ANTE_NOTIONS = ("EF", "EQ", "PROP", "UWM", "PO", "EWM")
EX_POST_NOTIONS = ("EF1", "EQ1", "PROP1", "UWM", "PO")


def evaluate_randomized(
    output: MechanismOutput,
    profile: ValuationProfile,
    *,
    pareto: Callable[[DeterministicAllocation], Verdict] | None = None,
    opt_egalitarian: Fraction | None = None,
) -> EvaluationReport:
    """Full ex-ante and ex-post report for a mechanism output.

    Ex-ante PO is certified through the utilitarian optimum (a UWM
    lottery is PO); no general fractional Pareto decision is attempted.
    Ex-ante EWM uses the closed-form fractional optimum available for
    1-restricted chores and is NOT_EVALUATED elsewhere. Ex-post PO uses
    the `pareto` callback when supplied (typically the brute-force
    oracle), falling back to the UWM implication. `opt_egalitarian`
    enables the per-element egalitarian approximation ratio.
    """
    n = output.instance.n_agents
    fraction = implemented_fraction(output.distribution, n)

    ex_ante: dict[str, Verdict] = {}
    for notion in (Notion.EF, Notion.EQ, Notion.PROP):
        ex_ante[notion.name] = check_fair(notion, fraction, profile)
    uwm = is_uwm(fraction, profile)
    ex_ante["UWM"] = uwm
    ex_ante["PO"] = TRUE if uwm.holds else NOT_EVALUATED
    if output.instance.kind is Kind.CHORES1:
        bound = chores_fractional_ew_bound(output.instance, profile)
        ew = welfare("EW", fraction, profile)
        ex_ante["EWM"] = TRUE if ew == bound else _false(f"egalitarian welfare {ew} < fractional optimum {bound}")
    else:
        ex_ante["EWM"] = NOT_EVALUATED

    elements = []
    for probability, allocation in output.distribution.support:
        verdicts: dict[str, Verdict] = {}
        for notion in (Notion.EF1, Notion.EQ1, Notion.PROP1):
            verdicts[notion.name] = check_fair(notion, allocation, profile)
        element_uwm = is_uwm(allocation, profile)
        verdicts["UWM"] = element_uwm
        if pareto is not None:
            verdicts["PO"] = pareto(allocation)
        else:
            verdicts["PO"] = TRUE if element_uwm.holds else NOT_EVALUATED
        ew = welfare("EW", allocation, profile)
        ratio: Fraction | None = None
        if opt_egalitarian is not None and opt_egalitarian != 0:
            ratio = ew / opt_egalitarian
        elements.append(
            SupportReport(
                probability=probability,
                allocation=allocation,
                verdicts=verdicts,
                uw=welfare("UW", allocation, profile),
                ew=ew,
                ewm_ratio=ratio,
            )
        )

    return EvaluationReport(
        ex_ante=ex_ante,
        ex_ante_uw=welfare("UW", fraction, profile),
        ex_ante_ew=welfare("EW", fraction, profile),
        ex_post=tuple(elements),
    )


def _verdict_text(verdict: Verdict) -> str:
    if verdict.witness:
        return f"{verdict.status} witness: {verdict.witness}"
    return verdict.status


def report_to_text(report: EvaluationReport) -> str:
    lines = []
    for name, verdict in report.ex_ante.items():
        lines.append(f"ex-ante {name} {_verdict_text(verdict)}")
    lines.append(f"ex-ante UW {report.ex_ante_uw}")
    lines.append(f"ex-ante EW {report.ex_ante_ew}")
    for index, element in enumerate(report.ex_post):
        owners = " ".join(str(o) for o in element.allocation.owner)
        lines.append((f"element {index} probability {element.probability} owners " + owners).rstrip())
        for name, verdict in element.verdicts.items():
            lines.append(f"element {index} {name} {_verdict_text(verdict)}")
        lines.append(f"element {index} UW {element.uw}")
        lines.append(f"element {index} EW {element.ew}")
        if element.ewm_ratio is not None:
            lines.append(f"element {index} EWM-ratio {element.ewm_ratio}")
    return "\n".join(lines) + "\n"


def _verdict_to_json(verdict: Verdict) -> dict:
    data: dict = {"status": verdict.status}
    if verdict.witness is not None:
        data["witness"] = verdict.witness
    return data


def _verdict_from_json(data: dict) -> Verdict:
    return Verdict(status=data["status"], witness=data.get("witness"))


def report_to_json(report: EvaluationReport) -> dict:
    return {
        "ex_ante": {name: _verdict_to_json(v) for name, v in report.ex_ante.items()},
        "ex_ante_uw": str(report.ex_ante_uw),
        "ex_ante_ew": str(report.ex_ante_ew),
        "ex_post": [
            {
                "probability": str(e.probability),
                "owner": list(e.allocation.owner),
                "verdicts": {name: _verdict_to_json(v) for name, v in e.verdicts.items()},
                "uw": str(e.uw),
                "ew": str(e.ew),
                "ewm_ratio": None if e.ewm_ratio is None else str(e.ewm_ratio),
            }
            for e in report.ex_post
        ],
    }


def report_from_json(data: dict) -> EvaluationReport:
    return EvaluationReport(
        ex_ante={name: _verdict_from_json(v) for name, v in data["ex_ante"].items()},
        ex_ante_uw=Fraction(data["ex_ante_uw"]),
        ex_ante_ew=Fraction(data["ex_ante_ew"]),
        ex_post=tuple(
            SupportReport(
                probability=Fraction(e["probability"]),
                allocation=DeterministicAllocation(owner=tuple(e["owner"])),
                verdicts={name: _verdict_from_json(v) for name, v in e["verdicts"].items()},
                uw=Fraction(e["uw"]),
                ew=Fraction(e["ew"]),
                ewm_ratio=None if e["ewm_ratio"] is None else Fraction(e["ewm_ratio"]),
            )
            for e in data["ex_post"]
        ),
    )
