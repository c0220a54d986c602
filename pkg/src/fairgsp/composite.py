"""GSP composed with a fair division stage and compensating payments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .fair_division import Beta, gece_efx, round_robin_ef1
from .gsp import allocate_gsp, gsp_value, gsp_value_by_group
from .model import TOL, AuctionInstance, BidProfile, Group, Mechanism, Outcome


@dataclass(frozen=True)
class PlainGsp:
    """No re-ranking stage; the auction outcome is final."""


@dataclass(frozen=True)
class BetaFairGsp:
    """Round-robin re-ranking with interleave ratio ``beta``."""

    beta: Beta


@dataclass(frozen=True)
class GspEfx:
    """Envy-cycle-elimination re-ranking with envy scale ``beta_value``."""

    beta_value: float = 1.0


Scheme = Union[PlainGsp, BetaFairGsp, GspEfx]

_SCHEME_TAGS = {
    PlainGsp: Mechanism.GSP,
    BetaFairGsp: Mechanism.BETA_FAIR_GSP,
    GspEfx: Mechanism.GSP_EFX,
}


def mechanism_of(scheme: Scheme) -> Mechanism:
    return _SCHEME_TAGS[type(scheme)]


@dataclass(frozen=True)
class CompositeResult:
    """Everything one composite run produces: both outcomes, the per-bidder
    compensation, value accounting, and the two observed assumptions
    (minority value did not drop; the top slot went to group H)."""

    scheme: Scheme
    gsp_outcome: Outcome
    fair_outcome: Outcome
    compensation: tuple[float, ...]
    value_gsp: float
    value_fair: float
    value_gsp_by_group: Mapping[Group, float]
    value_fair_by_group: Mapping[Group, float]
    assumption_minority_value: bool
    assumption_top_slot: bool

    @property
    def assumptions_hold(self) -> tuple[bool, bool]:
        return (self.assumption_minority_value, self.assumption_top_slot)


def fair_assignment(
    inst: AuctionInstance, bids: BidProfile, gsp_out: Outcome, scheme: Scheme
) -> tuple[int, ...]:
    """The re-ranked slot -> bidder assignment for one scheme."""
    if isinstance(scheme, PlainGsp):
        return gsp_out.slot_to_bidder
    if isinstance(scheme, BetaFairGsp):
        return round_robin_ef1(inst, gsp_out, scheme.beta)
    if isinstance(scheme, GspEfx):
        return gece_efx(inst, bids, gsp_out, scheme.beta_value)
    raise TypeError(f"unknown scheme: {scheme!r}")


def composite_payments(
    inst: AuctionInstance,
    bids: BidProfile,
    gsp_out: Outcome,
    assignment: Sequence[int],
) -> tuple[list[float], list[float]]:
    """Adjusted payments plus per-bidder compensation.

    A bidder pushed to a worse slot has its payment reduced by twice the
    bid-weighted click value it lost; everyone else keeps the original
    payment. The result can be negative (a net payout).
    """
    n = inst.n_bidders
    new_slot = [0] * n
    for j, i in enumerate(assignment):
        new_slot[i] = j
    payments = [0.0] * n
    compensation = [0.0] * n
    for i in range(n):
        old = gsp_out.bidder_to_slot[i]
        new = new_slot[i]
        p = gsp_out.payments[i]
        if new > old:
            curve = inst.ctr_of[i]
            compensation[i] = 2.0 * bids[i] * inst.gamma_of[i] * (curve[old] - curve[new])
            p -= compensation[i]
        payments[i] = p
    return payments, compensation


def compose(inst: AuctionInstance, bids: BidProfile, scheme: Scheme) -> CompositeResult:
    """Run the auction, re-rank with the scheme, and settle payments."""
    gsp_out = allocate_gsp(inst, bids)
    assignment = fair_assignment(inst, bids, gsp_out, scheme)
    payments, compensation = composite_payments(inst, bids, gsp_out, assignment)
    tag = mechanism_of(scheme)
    if isinstance(scheme, PlainGsp):
        fair_out = gsp_out
    else:
        fair_out = Outcome(tuple(assignment), tuple(payments), tag)

    value_gsp_by_group = gsp_value_by_group(inst, bids, gsp_out)
    value_fair_by_group = gsp_value_by_group(inst, bids, fair_out)
    top_bidder = gsp_out.slot_to_bidder[0]
    return CompositeResult(
        scheme=scheme,
        gsp_outcome=gsp_out,
        fair_outcome=fair_out,
        compensation=tuple(compensation),
        value_gsp=gsp_value(inst, bids, gsp_out),
        value_fair=gsp_value(inst, bids, fair_out),
        value_gsp_by_group=value_gsp_by_group,
        value_fair_by_group=value_fair_by_group,
        assumption_minority_value=(
            value_fair_by_group[Group.L] >= value_gsp_by_group[Group.L] - TOL
        ),
        assumption_top_slot=inst.group_of[top_bidder] is Group.H,
    )


def budget_balance_fraction(res: CompositeResult) -> float:
    """Total compensation over total auction revenue.

    Zero revenue with zero compensation is 0; zero revenue with positive
    compensation is reported as infinity.
    """
    revenue = sum(res.gsp_outcome.payments)
    paid_out = sum(res.compensation)
    if revenue <= TOL:
        return 0.0 if paid_out <= TOL else math.inf
    return paid_out / revenue
