import math
import random
from fractions import Fraction

import pytest

from fairlot import (
    SupportTooLarge,
    ValuationProfile,
    WrongInstanceKind,
    chores_instance,
    mixed_instance,
    rand_chore,
    rand_chore_expected_utilities,
    rand_mixed,
    rand_mixed_expected_utilities,
    sample_allocation,
    sequential_picking,
    validate_profile,
)
from fairlot.generate import generate_document
from fairlot.mechanisms import (
    PickSequence,
    SequenceLengthMismatch,
    output_from_json,
    output_to_json,
    serialize_output,
)
from fairlot.properties import expected_utilities


def test_rand_chore_no_items_gives_the_empty_allocation():
    inst = chores_instance(3, [])
    profile = validate_profile(inst, [[], [], []])
    out = rand_chore(inst, profile)
    assert [(p, a.owner) for p, a in out.distribution.support] == [(Fraction(1), ())]
    assert out.trace == {"Q": (), "Qbar": ()}


def test_rand_chore_two_agents_two_chores_truthful():
    inst = chores_instance(2, [-1, -1])
    profile = validate_profile(inst, [[-1, -1], [-1, -1]])
    out = rand_chore(inst, profile)
    assert [(p, a.owner) for p, a in out.distribution.support] == [
        (Fraction(1, 2), (0, 1)),
        (Fraction(1, 2), (1, 0)),
    ]
    assert rand_chore_expected_utilities(inst, profile, profile) == (Fraction(-1), Fraction(-1))


def test_rand_chore_zero_reports_pin_items_and_rest_splits():
    # one agent opts out of the first two chores; the others round-robin
    inst = chores_instance(2, [-1, -1, -1, -1])
    reported = validate_profile(inst, [[0, 0, -1, -1], [-1, -1, -1, -1]])
    out = rand_chore(inst, reported)
    assert out.trace == {"Q": (0, 1), "Qbar": (2, 3)}
    assert [(p, a.owner) for p, a in out.distribution.support] == [
        (Fraction(1, 2), (0, 0, 0, 1)),
        (Fraction(1, 2), (0, 0, 1, 0)),
    ]


def test_rand_chore_rejects_other_kinds():
    inst = mixed_instance([(-1, 1)])
    profile = validate_profile(inst, [[1], [-1]])
    with pytest.raises(WrongInstanceKind):
        rand_chore(inst, profile)


def test_rand_chore_support_cap():
    inst = chores_instance(2, [-1, -1, -1])
    profile = validate_profile(inst, [[0, 0, 0], [0, 0, 0]])
    with pytest.raises(SupportTooLarge):
        rand_chore(inst, profile, support_cap=7)


def test_rand_chore_expected_utilities_all_zero_reports():
    inst = chores_instance(2, [-1, -2])
    zeros = validate_profile(inst, [[0, 0], [0, 0]])
    assert rand_chore_expected_utilities(inst, zeros, zeros) == (Fraction(0), Fraction(0))


def test_rand_chore_misreporting_zero_is_worse_on_single_chore():
    inst = chores_instance(2, [-1])
    truth = validate_profile(inst, [[-1], [-1]])
    misreport = validate_profile(inst, [[0], [-1]])
    assert rand_chore_expected_utilities(inst, truth, truth)[0] == Fraction(-1, 2)
    assert rand_chore_expected_utilities(inst, misreport, truth)[0] == Fraction(-1)


def test_rand_chore_pinned_permutation_is_deterministic():
    inst = chores_instance(3, [-3, -1, -2])
    profile = validate_profile(inst, [[-3, -1, -2]] * 3)
    out = rand_chore(inst, profile, permutation=(2, 0, 1))
    # descending inherent value: e1 (-1), e2 (-2), e0 (-3)
    assert [(p, a.owner) for p, a in out.distribution.support] == [(Fraction(1), (1, 2, 0))]


def test_rand_mixed_no_items():
    inst = mixed_instance([])
    profile = validate_profile(inst, [[], []])
    out = rand_mixed(inst, profile)
    assert [(p, a.owner) for p, a in out.distribution.support] == [(Fraction(1), ())]


def test_rand_mixed_spec_partition_example():
    inst = mixed_instance([(-1, 1), (-1, 2)])
    reported = validate_profile(inst, [[1, 2], [-1, 2]])
    out = rand_mixed(inst, reported)
    assert out.trace == {"Q0": (), "Q1": (0,), "Q2": (), "Q3": (1,)}
    assert [(p, a.owner) for p, a in out.distribution.support] == [
        (Fraction(1, 2), (0, 0)),
        (Fraction(1, 2), (0, 1)),
    ]
    assert rand_mixed_expected_utilities(inst, reported, reported) == (Fraction(2), Fraction(1))


def test_rand_mixed_coin_flip_on_common_zero():
    inst = mixed_instance([(-1, 1)])
    reported = validate_profile(inst, [[0], [0]])
    out = rand_mixed(inst, reported)
    assert [(p, a.owner) for p, a in out.distribution.support] == [
        (Fraction(1, 2), (0,)),
        (Fraction(1, 2), (1,)),
    ]


def test_rand_mixed_all_zero_expected_utilities():
    inst = mixed_instance([(-1, 1), (-2, 2)])
    zeros = validate_profile(inst, [[0, 0], [0, 0]])
    assert rand_mixed_expected_utilities(inst, zeros, zeros) == (Fraction(0), Fraction(0))


@pytest.mark.parametrize(
    "other_report,drop",
    [(Fraction(-1), Fraction(1, 2)), (Fraction(0), Fraction(1)), (Fraction(1), Fraction(1, 2))],
)
def test_rand_mixed_misreporting_a_good_as_a_chore_never_helps(other_report, drop):
    inst = mixed_instance([(-1, 1)])
    truth = validate_profile(inst, [[1], [other_report]])
    misreport = validate_profile(inst, [[-1], [other_report]])
    honest = rand_mixed_expected_utilities(inst, truth, truth)[0]
    deviant = rand_mixed_expected_utilities(inst, misreport, truth)[0]
    assert honest - deviant == drop


def test_rand_mixed_rejects_chores_instances():
    inst = chores_instance(2, [-1])
    profile = validate_profile(inst, [[-1], [-1]])
    with pytest.raises(WrongInstanceKind):
        rand_mixed(inst, profile)


def test_sequential_picking_greedy_with_index_tie_break():
    inst = chores_instance(2, [-1, -1])
    profile = validate_profile(inst, [[0, 0], [-1, -1]])
    alloc = sequential_picking(inst, profile, (1, 1))
    assert alloc.owner == (0, 1)


def test_sequential_picking_first_agent_takes_everything():
    inst = chores_instance(3, [-1, -2, -3])
    profile = validate_profile(inst, [[-1, -2, -3]] * 3)
    alloc = sequential_picking(inst, profile, (3, 0, 0))
    assert alloc.owner == (0, 0, 0)


def test_sequential_picking_on_mixed_goods():
    inst = mixed_instance([(-1, 3), (-3, 1)])
    reported = validate_profile(inst, [[3, 1], [0, 1]])
    alloc = sequential_picking(inst, reported, PickSequence((1, 1)), order=(0, 1))
    assert alloc.owner == (0, 1)


def test_sequential_picking_rejects_bad_sequences():
    inst = chores_instance(2, [-1, -1])
    profile = validate_profile(inst, [[-1, -1], [-1, -1]])
    with pytest.raises(SequenceLengthMismatch):
        sequential_picking(inst, profile, (1,))
    with pytest.raises(SequenceLengthMismatch):
        sequential_picking(inst, profile, (2, 1))


def test_sequential_picking_always_allocates_everything():
    rng = random.Random(5)
    for _ in range(40):
        doc = generate_document("chores1", rng.randint(1, 4), rng.randint(0, 6), seed=rng.randrange(10**9))
        inst = doc.instance
        counts = [0] * inst.n_agents
        for _ in range(inst.m):
            counts[rng.randrange(inst.n_agents)] += 1
        alloc = sequential_picking(inst, doc.reported_profile, tuple(counts))
        assert sorted(j for i in range(inst.n_agents) for j in alloc.bundle(i)) == list(range(inst.m))
        assert all(len(alloc.bundle(i)) == counts[i] for i in range(inst.n_agents))


def test_sample_allocation_single_support_and_determinism():
    inst = chores_instance(2, [-1, -1])
    reported = validate_profile(inst, [[0, 0], [-1, -1]])
    out = rand_chore(inst, reported)
    assert out.distribution.size == 1
    assert all(sample_allocation(out, seed).owner == (0, 0) for seed in range(5))

    truthful = validate_profile(inst, [[-1, -1], [-1, -1]])
    out = rand_chore(inst, truthful)
    assert sample_allocation(out, 123) == sample_allocation(out, 123)


def test_sample_allocation_frequencies_match_probabilities():
    inst = chores_instance(2, [-1, -1])
    profile = validate_profile(inst, [[-1, -1], [-1, -1]])
    out = rand_chore(inst, profile)
    hits = sum(1 for seed in range(10_000) if sample_allocation(out, seed).owner == (0, 1))
    assert abs(hits / 10_000 - 0.5) < 0.02


def _round_robin_consistent(out, inst) -> bool:
    order = sorted(
        out.trace["Qbar"], key=lambda q: (-inst.items[q].inherent_values[0], q)
    )
    n = inst.n_agents
    for _, alloc in out.distribution.support:
        owners = [alloc.owner[q] for q in order]
        if len(set(owners[:n])) != min(n, len(owners)):
            return False
        if any(owners[t] != owners[t - n] for t in range(n, len(owners))):
            return False
    return True


def test_rand_chore_support_structure_invariants():
    rng = random.Random(99)
    for _ in range(60):
        doc = generate_document(
            "chores1", rng.randint(1, 4), rng.randint(0, 6), seed=rng.randrange(10**9), reports="independent"
        )
        inst, reported = doc.instance, doc.reported_profile
        out = rand_chore(inst, reported)
        zero_sets = {
            q: {i for i in range(inst.n_agents) if reported.value(i, q) == 0} for q in range(inst.m)
        }
        assert set(out.trace["Q"]) | set(out.trace["Qbar"]) == set(range(inst.m))
        assert not set(out.trace["Q"]) & set(out.trace["Qbar"])
        for _, alloc in out.distribution.support:
            for q in out.trace["Q"]:
                assert alloc.owner[q] in zero_sets[q]
        assert _round_robin_consistent(out, inst)
        atoms = math.factorial(inst.n_agents)
        for q in out.trace["Q"]:
            atoms *= len(zero_sets[q])
        assert atoms % out.distribution.size == 0


def test_rand_mixed_support_size_divides_atom_count():
    rng = random.Random(7)
    for _ in range(60):
        doc = generate_document("mixed2", 2, rng.randint(0, 6), seed=rng.randrange(10**9), reports="independent")
        out = rand_mixed(doc.instance, doc.reported_profile)
        atoms = 2 * 2 ** len(out.trace["Q0"])
        assert atoms % out.distribution.size == 0
        assert set().union(*(set(v) for v in out.trace.values())) == set(range(doc.instance.m))


@pytest.mark.parametrize("kind,mech,closed", [
    ("chores1", rand_chore, rand_chore_expected_utilities),
    ("mixed2", rand_mixed, rand_mixed_expected_utilities),
])
def test_closed_form_matches_support_expectation(kind, mech, closed):
    rng = random.Random(3)
    for _ in range(60):
        n = 2 if kind == "mixed2" else rng.randint(1, 4)
        doc = generate_document(kind, n, rng.randint(0, 6), seed=rng.randrange(10**9), reports="independent")
        out = mech(doc.instance, doc.reported_profile)
        assert expected_utilities(out.distribution, doc.true_profile) == closed(
            doc.instance, doc.reported_profile, doc.true_profile
        )


def test_output_serialization_round_trip():
    inst = chores_instance(2, [-1, -1])
    profile = validate_profile(inst, [[-1, -1], [-1, -1]])
    out = rand_chore(inst, profile)
    text = serialize_output(out)
    assert text.splitlines()[0] == "mechanism randchore"
    assert "support 2" in text
    assert output_from_json(output_to_json(out)) == out
