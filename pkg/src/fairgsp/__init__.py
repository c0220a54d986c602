"""Fairness-constrained sponsored-search auction simulator."""

from .model import (
    AuctionInstance,
    BidProfile,
    DegenerateInstanceError,
    Group,
    Mechanism,
    Outcome,
    ValuationProfile,
    utility,
    validate_instance,
)
from .gsp import (
    EffectiveBid,
    allocate_gsp,
    effective_bid,
    gsp_value,
    gsp_value_by_group,
    social_welfare,
    social_welfare_by_group,
)
from .fair_division import (
    Beta,
    GroupAllocation,
    gece_efx,
    gece_partition,
    group_allocation_of,
    group_value,
    round_robin_ef1,
    verify_ef1,
    verify_efx,
)
from .composite import (
    BetaFairGsp,
    CompositeResult,
    GspEfx,
    PlainGsp,
    Scheme,
    budget_balance_fraction,
    compose,
)
from .bandits import (
    BayesianLearner,
    Exp3State,
    RegretLedger,
    exp3_probabilities,
    exp3_sample,
    exp3_update,
    regret,
)
from .simulation import (
    Discrete,
    Distributions,
    RoundLog,
    RunMetrics,
    bcce_gap,
    poc_estimate,
    replay_round,
    run_dynamic,
)

__version__ = "0.1.0"
