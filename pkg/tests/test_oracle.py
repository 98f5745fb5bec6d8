import itertools
import random
from fractions import Fraction

import pytest

from fairlot import (
    ValuationProfile,
    chores_instance,
    enumerate_allocations,
    is_pareto_optimal,
    mixed_instance,
    opt_welfare,
    rand_chore,
    rand_chore_expected_utilities,
    rand_mixed_expected_utilities,
    reverify,
    validate_profile,
    verify_gspie,
    verify_spie,
    welfare,
)
from fairlot.core import DeterministicAllocation
from fairlot.generate import generate_document, generate_profile
from fairlot.oracle import (
    AllocationScanner,
    EnumerationTooLarge,
    deviation_report_from_json,
    deviation_report_to_json,
    deviation_report_to_text,
    fewest_zeros_expected_utilities,
)
from fairlot.properties import itemwise_uw_bound


def test_enumeration_counts_and_order():
    allocations = list(enumerate_allocations(2, 2))
    assert [a.owner for a in allocations] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert sum(1 for _ in enumerate_allocations(3, 7)) == 2187
    assert sum(1 for _ in enumerate_allocations(4, 8)) == 65536


def test_enumeration_cap():
    with pytest.raises(EnumerationTooLarge):
        list(enumerate_allocations(4, 8, cap=1000))


def test_opt_uw_equals_itemwise_bound():
    rng = random.Random(13)
    for _ in range(50):
        kind = rng.choice(["chores1", "mixed2"])
        n = 2 if kind == "mixed2" else rng.randint(1, 3)
        doc = generate_document(kind, n, rng.randint(0, 5), seed=rng.randrange(10**9))
        value, witness = opt_welfare("UW", doc.instance, doc.true_profile)
        assert value == itemwise_uw_bound(doc.true_profile)
        assert welfare("UW", witness, doc.true_profile) == value


def test_opt_ew_on_reference_instances():
    inst = chores_instance(3, [-1] * 6 + [-3])
    profile = validate_profile(inst, [[-1] * 6 + [-3]] * 3)
    value, witness = opt_welfare("EW", inst, profile)
    assert value == -3
    assert welfare("EW", witness, profile) == -3

    inst = chores_instance(2, [-1] * 4)
    profile = validate_profile(inst, [[-1] * 4] * 2)
    assert opt_welfare("EW", inst, profile)[0] == -2


def test_pareto_examples():
    inst = chores_instance(2, [-1, -1, -1])
    profile = validate_profile(inst, [[0, 0, 0], [-1, -1, -1]])
    bad = DeterministicAllocation(owner=(0, 0, 1))
    optimal, dominator = is_pareto_optimal(bad, inst, profile)
    assert not optimal
    assert dominator.owner == (0, 0, 0)
    assert is_pareto_optimal(DeterministicAllocation(owner=(0, 0, 0)), inst, profile)[0]

    single = chores_instance(1, [-1])
    single_profile = validate_profile(single, [[-1]])
    assert is_pareto_optimal(DeterministicAllocation(owner=(0,)), single, single_profile)[0]


def test_scanner_agrees_with_streaming_oracle():
    rng = random.Random(29)
    for _ in range(25):
        kind = rng.choice(["chores1", "mixed2"])
        n = 2 if kind == "mixed2" else rng.randint(1, 3)
        doc = generate_document(kind, n, rng.randint(0, 5), seed=rng.randrange(10**9))
        scanner = AllocationScanner(doc.instance, doc.true_profile)
        assert scanner.opt_welfare("EW")[0] == opt_welfare("EW", doc.instance, doc.true_profile)[0]
        assert scanner.opt_welfare("UW")[0] == opt_welfare("UW", doc.instance, doc.true_profile)[0]
        for _ in range(5):
            owner = tuple(rng.randrange(n) for _ in range(doc.instance.m))
            alloc = DeterministicAllocation(owner=owner)
            assert (
                scanner.is_pareto_optimal(alloc)[0]
                == is_pareto_optimal(alloc, doc.instance, doc.true_profile)[0]
            )


def test_verify_spie_randchore_small_all_others():
    inst = chores_instance(2, [-1, -2, -3])
    truth = validate_profile(inst, [[-1, 0, -3], [-1, -2, 0]])
    report = verify_spie("randchore", inst, truth, others="all")
    assert report.truthful_optimal
    assert report.search_bounds["evaluations"] > 0


def test_verify_spie_randmixed_small_all_others():
    inst = mixed_instance([(-1, 2), (-2, 1)])
    truth = validate_profile(inst, [[2, -2], [0, 1]])
    report = verify_spie("randmixed", inst, truth, others="all")
    assert report.truthful_optimal


def test_verify_spie_flags_the_fewest_zeros_control():
    inst = chores_instance(2, [-1])
    truth = validate_profile(inst, [[-1], [-1]])
    report = verify_spie("fewest-zeros", inst, truth, others="all")
    assert report.verdict == "VIOLATION"
    assert report.coalition == (0,)
    assert report.eu_deviating[0] > report.eu_truthful[0]
    assert reverify(report, inst)


def test_verify_spie_rejects_truth_outside_domain():
    inst = chores_instance(2, [-1])
    bad_truth = ValuationProfile(values=((Fraction(-2),), (Fraction(0),)))
    with pytest.raises(ValueError):
        verify_spie("randchore", inst, bad_truth)


def test_verify_spie_cap():
    inst = chores_instance(4, [-1] * 6)
    truth = validate_profile(inst, [[-1] * 6] * 4)
    with pytest.raises(EnumerationTooLarge):
        verify_spie("randchore", inst, truth, others="all", cap=100)


def test_verify_gspie_single_agent_matches_spie_truthful():
    rng = random.Random(41)
    for _ in range(20):
        doc = generate_document("chores1", rng.randint(2, 3), rng.randint(1, 3), seed=rng.randrange(10**9))
        spie = verify_spie("randchore", doc.instance, doc.true_profile, others="truthful")
        gspie = verify_gspie("randchore", doc.instance, doc.true_profile, max_coalition=1)
        assert spie.verdict == gspie.verdict
        broken_spie = verify_spie("fewest-zeros", doc.instance, doc.true_profile, others="truthful")
        broken_gspie = verify_gspie("fewest-zeros", doc.instance, doc.true_profile, max_coalition=1)
        assert broken_spie.verdict == broken_gspie.verdict


def test_verify_gspie_randchore_three_agents():
    inst = chores_instance(3, [-1, -2, -1])
    truth = validate_profile(inst, [[-1, 0, -1], [0, -2, -1], [-1, -2, 0]])
    report = verify_gspie("randchore", inst, truth, max_coalition=3)
    assert report.truthful_optimal


def test_verify_gspie_all_others_small():
    inst = chores_instance(2, [-1, -2])
    truth = validate_profile(inst, [[-1, -2], [0, -2]])
    report = verify_gspie("randchore", inst, truth, max_coalition=2, others="all")
    assert report.truthful_optimal


def test_verify_gspie_flags_the_control_with_singleton_coalition():
    inst = chores_instance(2, [-1])
    truth = validate_profile(inst, [[-1], [-1]])
    report = verify_gspie("fewest-zeros", inst, truth)
    assert report.verdict == "VIOLATION"
    assert len(report.coalition) == 1
    assert reverify(report, inst)


def test_unknown_mechanism_id():
    inst = chores_instance(2, [-1])
    truth = validate_profile(inst, [[-1], [-1]])
    with pytest.raises(ValueError):
        verify_spie("nope", inst, truth)


def test_deviation_report_json_round_trip():
    inst = chores_instance(2, [-1])
    truth = validate_profile(inst, [[-1], [-1]])
    report = verify_spie("fewest-zeros", inst, truth, others="all")
    data = deviation_report_to_json(report)
    assert deviation_report_from_json(data) == report
    text = deviation_report_to_text(report)
    assert "verdict VIOLATION" in text


def test_fewest_zeros_closed_form():
    inst = chores_instance(3, [-1, -2])
    reported = validate_profile(inst, [[0, -2], [0, 0], [-1, -2]])
    truth = validate_profile(inst, [[-1, -2], [-1, 0], [-1, -2]])
    # agent 2 reported no zeros and receives everything
    assert fewest_zeros_expected_utilities(inst, reported, truth) == (
        Fraction(0),
        Fraction(0),
        Fraction(-3),
    )


def test_chore_zero_correction_never_hurts_the_coalition():
    # setting reports to 0 on items truly valued 0 weakly helps every member
    rng = random.Random(53)
    for n, m in [(2, 3), (3, 2), (3, 4)]:
        doc = generate_document("chores1", n, m, seed=rng.randrange(10**9))
        inst, truth = doc.instance, doc.true_profile
        space = list(itertools.product(*[inst.allowed_values(j) for j in range(m)]))
        agents = range(n)
        for coalition_size in range(1, n + 1):
            for coalition in itertools.combinations(agents, coalition_size):
                for rows in itertools.product(space, repeat=n):
                    corrected = list(rows)
                    for i in coalition:
                        corrected[i] = tuple(
                            Fraction(0) if truth.value(i, j) == 0 else rows[i][j] for j in range(m)
                        )
                    before = rand_chore_expected_utilities(inst, ValuationProfile(values=tuple(rows)), truth)
                    after = rand_chore_expected_utilities(
                        inst, ValuationProfile(values=tuple(corrected)), truth
                    )
                    for i in coalition:
                        assert after[i] >= before[i]


def test_mixed_single_item_correction_never_hurts():
    # correcting one item's report toward the truth weakly helps that agent
    rng = random.Random(59)
    for m in (1, 2, 3, 4):
        doc = generate_document("mixed2", 2, m, seed=rng.randrange(10**9))
        inst, truth = doc.instance, doc.true_profile
        space = list(itertools.product(*[inst.allowed_values(j) for j in range(m)]))
        for agent in (0, 1):
            other = 1 - agent
            for own_row in space:
                for other_row in space:
                    for k in range(m):
                        if own_row[k] == truth.value(agent, k):
                            continue
                        corrected = tuple(
                            truth.value(agent, k) if j == k else own_row[j] for j in range(m)
                        )
                        rows = [None, None]
                        rows[agent], rows[other] = own_row, other_row
                        before = rand_mixed_expected_utilities(
                            inst, ValuationProfile(values=tuple(rows)), truth
                        )[agent]
                        rows[agent] = corrected
                        after = rand_mixed_expected_utilities(
                            inst, ValuationProfile(values=tuple(rows)), truth
                        )[agent]
                        assert after >= before


def test_rand_chore_support_elements_are_two_approx_egalitarian():
    rng = random.Random(61)
    for _ in range(40):
        doc = generate_document("chores1", rng.randint(1, 4), rng.randint(0, 5), seed=rng.randrange(10**9))
        inst, truth = doc.instance, doc.true_profile
        opt_e, _ = opt_welfare("EW", inst, truth)
        out = rand_chore(inst, truth)
        for _, alloc in out.distribution.support:
            assert welfare("EW", alloc, truth) >= 2 * opt_e
