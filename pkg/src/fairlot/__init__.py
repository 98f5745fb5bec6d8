"""Exact randomized allocation of indivisible chores and mixed items.

Mechanisms output exact lotteries over deterministic allocations;
fairness, efficiency and strategyproofness are checked with rational
arithmetic throughout, backed by brute-force oracles and finite
replays of the known impossibility results.
"""

from .core import (
    DeterministicAllocation,
    FairlotError,
    FractionalAllocation,
    Instance,
    ItemSpec,
    Kind,
    RandomizedAllocation,
    ValidationError,
    ValuationProfile,
    bundle_value,
    chores_instance,
    make_instance,
    make_randomized,
    mixed_instance,
    validate_allocation,
    validate_instance,
    validate_profile,
)
from .mechanisms import (
    MechanismOutput,
    PickSequence,
    SequenceLengthMismatch,
    SupportTooLarge,
    WrongInstanceKind,
    rand_chore,
    rand_chore_expected_utilities,
    rand_mixed,
    rand_mixed_expected_utilities,
    sample_allocation,
    sequential_picking,
)
from .properties import (
    EvaluationReport,
    Notion,
    NotionRequiresDeterministic,
    Verdict,
    check_fair,
    evaluate_randomized,
    expected_utilities,
    implemented_fraction,
    is_uwm,
    welfare,
)
from .oracle import (
    DeviationReport,
    EnumerationTooLarge,
    ReplayReport,
    enumerate_allocations,
    is_pareto_optimal,
    opt_welfare,
    replay,
    reverify,
    verify_gspie,
    verify_spie,
)
from .serial import InstanceDocument, ParseError, parse_document, serialize_document

__version__ = "0.1.0"
