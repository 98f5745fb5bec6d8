from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairlot import (
    Kind,
    ValidationError,
    bundle_value,
    chores_instance,
    make_instance,
    make_randomized,
    mixed_instance,
    validate_allocation,
    validate_instance,
    validate_profile,
)
from fairlot.core import DeterministicAllocation, FractionalAllocation, as_rational


def test_minimal_chores_instance_is_valid():
    inst = validate_instance(Kind.CHORES1, 2, [(0, [-1])])
    assert inst.n_agents == 2
    assert inst.m == 1
    assert inst.allowed_values(0) == (Fraction(-1), Fraction(0))


def test_zero_inherent_chore_value_rejected():
    with pytest.raises(ValidationError) as exc:
        validate_instance(Kind.CHORES1, 2, [(0, [0])])
    assert "NonNegativeInherentChoreValue" in exc.value.codes()


def test_mixed_requires_two_agents():
    with pytest.raises(ValidationError) as exc:
        validate_instance(Kind.MIXED2, 3, [(0, [-1, 1])])
    assert "MixedRequiresTwoAgents" in exc.value.codes()


def test_duplicate_item_ids_rejected():
    with pytest.raises(ValidationError) as exc:
        validate_instance(Kind.CHORES1, 2, [(0, [-1]), (0, [-2])])
    assert "DuplicateItemId" in exc.value.codes()


def test_validation_reports_all_violations_at_once():
    with pytest.raises(ValidationError) as exc:
        validate_instance(Kind.MIXED2, 3, [(0, [-1, 0]), (0, [-1, 1])])
    codes = exc.value.codes()
    assert "MixedRequiresTwoAgents" in codes
    assert "NonPositiveInherentGoodValue" in codes
    assert "DuplicateItemId" in codes


def test_floats_are_rejected():
    with pytest.raises(TypeError):
        as_rational(0.5)
    with pytest.raises(TypeError):
        chores_instance(2, [-0.5])


def test_profile_entry_must_be_allowed():
    inst = chores_instance(1, [-1])
    assert validate_profile(inst, [[0]]).value(0, 0) == 0
    with pytest.raises(ValidationError) as exc:
        validate_profile(inst, [[-2]])
    assert "ValueOutsideAllowedSet" in exc.value.codes()


def test_mixed_profile_accepts_the_good_value():
    inst = mixed_instance([(-3, 5)])
    profile = validate_profile(inst, [[5], [-3]])
    assert profile.value(0, 0) == 5
    assert profile.value(1, 0) == -3


def test_choresk_allows_any_inherent_value():
    inst = make_instance(Kind.CHORESK, 2, [[-10, -73], [-10, -1]])
    profile = validate_profile(inst, [[-73, -1], [0, -10]])
    assert profile.value(0, 0) == -73
    with pytest.raises(ValidationError):
        validate_profile(inst, [[-73, -2], [0, -10]])


def test_bundle_value_examples():
    inst = chores_instance(1, [-1, -1])
    profile = validate_profile(inst, [[-1, -1]])
    assert bundle_value(profile, 0, [0, 1]) == -2
    assert bundle_value(profile, 0, []) == 0

    mixed = mixed_instance([(-1, 1), (-2, 3), (-1, 2)])
    profile = validate_profile(mixed, [[1, -2, 0], [0, 0, 0]])
    assert bundle_value(profile, 0, [0, 2]) == 1


@given(st.lists(st.integers(min_value=-9, max_value=-1), min_size=1, max_size=6), st.data())
def test_bundle_value_is_additive_over_disjoint_bundles(values, data):
    inst = chores_instance(2, values)
    profile = validate_profile(
        inst, [[data.draw(st.sampled_from(inst.allowed_values(j))) for j in range(inst.m)] for _ in range(2)]
    )
    items = list(range(inst.m))
    split = data.draw(st.integers(min_value=0, max_value=len(items)))
    left, right = items[:split], items[split:]
    assert bundle_value(profile, 0, left) + bundle_value(profile, 0, right) == bundle_value(
        profile, 0, items
    )


def test_allocation_validation():
    inst = chores_instance(2, [-1, -1])
    alloc = validate_allocation(inst, [0, 1])
    assert alloc.bundle(0) == (0,)
    with pytest.raises(ValidationError):
        validate_allocation(inst, [0, 2])
    with pytest.raises(ValidationError):
        validate_allocation(inst, [0])


def test_fractional_rows_must_sum_to_one():
    with pytest.raises(ValueError):
        FractionalAllocation(shares=((Fraction(1, 2), Fraction(1, 3)),))


def test_randomized_support_merges_and_sorts():
    a = DeterministicAllocation(owner=(0, 1))
    b = DeterministicAllocation(owner=(1, 0))
    dist = make_randomized(
        [(Fraction(1, 4), b), (Fraction(1, 2), a), (Fraction(1, 4), b)]
    )
    assert [(p, al.owner) for p, al in dist.support] == [
        (Fraction(1, 2), (0, 1)),
        (Fraction(1, 2), (1, 0)),
    ]


def test_randomized_probabilities_must_sum_to_one():
    with pytest.raises(ValueError):
        make_randomized([(Fraction(1, 2), DeterministicAllocation(owner=(0,)))])
