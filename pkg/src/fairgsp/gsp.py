"""Greedy slot auction with next-bidder pricing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import (
    TOL,
    AuctionInstance,
    BidProfile,
    DegenerateInstanceError,
    Group,
    Mechanism,
    Outcome,
    ValuationProfile,
)


@dataclass(frozen=True)
class EffectiveBid:
    """A bid weighted by quality factor and slot click-through rate."""

    bidder: int
    slot: int
    value: float


def effective_bid(inst: AuctionInstance, bids: BidProfile, i: int, j: int) -> EffectiveBid:
    return EffectiveBid(i, j, inst.gamma_of[i] * inst.ctr_of[i][j] * bids[i])


def greedy_assignment(
    gamma_of: Sequence[float],
    ctr_of: Sequence[Sequence[float]],
    bids: Sequence[float],
) -> list[int]:
    """Assign slots in order, each to the unassigned bidder with the highest
    effective bid at that slot. Ties go to the lowest bidder index."""
    n = len(bids)
    gb = [gamma_of[i] * bids[i] for i in range(n)]
    remaining = list(range(n))
    slot_to_bidder = []
    for j in range(n):
        best = remaining[0]
        best_eff = gb[best] * ctr_of[best][j]
        for i in remaining[1:]:
            eff = gb[i] * ctr_of[i][j]
            if eff > best_eff + TOL:
                best = i
                best_eff = eff
        remaining.remove(best)
        slot_to_bidder.append(best)
    return slot_to_bidder


def greedy_payments(
    gamma_of: Sequence[float],
    ctr_of: Sequence[Sequence[float]],
    bids: Sequence[float],
    slot_to_bidder: Sequence[int],
) -> list[float]:
    """Next-bidder prices: the occupant of slot j pays the effective bid that
    the next assigned bidder would place on slot j, normalized by the payer's
    own quality factor. The last occupant pays nothing."""
    n = len(bids)
    payments = [0.0] * n
    for j in range(n - 1):
        i = slot_to_bidder[j]
        k = slot_to_bidder[j + 1]
        if gamma_of[i] == 0.0:
            raise DegenerateInstanceError(
                f"cannot price bidder {i}: zero quality factor for its group"
            )
        payments[i] = gamma_of[k] * ctr_of[k][j] * bids[k] / gamma_of[i]
    return payments


def allocate_gsp(inst: AuctionInstance, bids: BidProfile) -> Outcome:
    """Run the slot auction on one bid profile."""
    if len(bids) != inst.n_bidders:
        raise ValueError(f"expected {inst.n_bidders} bids, got {len(bids)}")
    assignment = greedy_assignment(inst.gamma_of, inst.ctr_of, bids)
    payments = greedy_payments(inst.gamma_of, inst.ctr_of, bids, assignment)
    return Outcome(tuple(assignment), tuple(payments), Mechanism.GSP)


def _weighted_value(inst: AuctionInstance, amounts: Sequence[float], out: Outcome) -> float:
    return sum(
        inst.gamma_of[i] * amounts[i] * inst.ctr_of[i][out.bidder_to_slot[i]]
        for i in range(inst.n_bidders)
    )


def _weighted_value_by_group(
    inst: AuctionInstance, amounts: Sequence[float], out: Outcome
) -> dict[Group, float]:
    totals = {Group.H: 0.0, Group.L: 0.0}
    for i in range(inst.n_bidders):
        totals[inst.group_of[i]] += (
            inst.gamma_of[i] * amounts[i] * inst.ctr_of[i][out.bidder_to_slot[i]]
        )
    return totals


def gsp_value(inst: AuctionInstance, bids: BidProfile, out: Outcome) -> float:
    """Total bid-weighted value extracted by the allocation."""
    return _weighted_value(inst, bids, out)


def gsp_value_by_group(
    inst: AuctionInstance, bids: BidProfile, out: Outcome
) -> dict[Group, float]:
    return _weighted_value_by_group(inst, bids, out)


def social_welfare(inst: AuctionInstance, out: Outcome, vals: ValuationProfile) -> float:
    """Realized welfare of an allocation under true valuations."""
    return _weighted_value(inst, vals, out)


def social_welfare_by_group(
    inst: AuctionInstance, out: Outcome, vals: ValuationProfile
) -> dict[Group, float]:
    return _weighted_value_by_group(inst, vals, out)
