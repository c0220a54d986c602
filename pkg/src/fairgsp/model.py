"""Shared domain types for position auctions with two advertiser groups."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

# Grid values (bids, types, CTRs) are floats on small exact grids; all
# value comparisons use this absolute tolerance to absorb accumulated
# rounding in sums.
TOL = 1e-12


class Group(enum.Enum):
    """The two advertiser groups: ``H`` (majority) and ``L`` (minority)."""

    H = "H"
    L = "L"


class Mechanism(enum.Enum):
    GSP = "gsp"
    BETA_FAIR_GSP = "beta-fair"
    GSP_EFX = "gsp-efx"


class DegenerateInstanceError(ValueError):
    """A pricing formula hit a zero quality factor."""


BidProfile = Sequence[float]
ValuationProfile = Sequence[float]


@dataclass(frozen=True)
class AuctionInstance:
    """Static market data for one auction market.

    Slots are indexed ``0..n-1`` in decreasing order of click-through rate;
    the number of slots always equals the number of bidders. ``ctr`` maps
    each group to its per-slot click-through curve and ``quality`` to its
    current quality factor realization.
    """

    group_of: tuple[Group, ...]
    ctr: Mapping[Group, tuple[float, ...]]
    quality: Mapping[Group, float]
    bid_grids: tuple[tuple[float, ...], ...]
    type_grids: tuple[tuple[float, ...], ...]

    n_bidders: int = field(init=False, repr=False, compare=False)
    # Per-bidder views of the group-level data, precomputed because the
    # auction loops touch them once per (slot, bidder) pair.
    gamma_of: tuple[float, ...] = field(init=False, repr=False, compare=False)
    ctr_of: tuple[tuple[float, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        group_of = tuple(self.group_of)
        if not group_of:
            raise ValueError("instance needs at least one bidder")
        if any(not isinstance(g, Group) for g in group_of):
            raise ValueError("group_of entries must be Group members")
        n = len(group_of)

        ctr = {g: tuple(float(a) for a in curve) for g, curve in self.ctr.items()}
        if set(ctr) != set(Group):
            raise ValueError("ctr must provide a curve for both groups")
        for g, curve in ctr.items():
            if len(curve) != n:
                raise ValueError(
                    f"ctr curve for group {g.value} has {len(curve)} slots, expected {n}"
                )
        quality = {g: float(self.quality[g]) for g in Group}

        bid_grids = tuple(tuple(float(b) for b in grid) for grid in self.bid_grids)
        type_grids = tuple(tuple(float(v) for v in grid) for grid in self.type_grids)
        if len(bid_grids) != n or len(type_grids) != n:
            raise ValueError("need one bid grid and one type grid per bidder")
        if any(not grid for grid in bid_grids) or any(not grid for grid in type_grids):
            raise ValueError("bid and type grids must be nonempty")

        object.__setattr__(self, "group_of", group_of)
        object.__setattr__(self, "ctr", ctr)
        object.__setattr__(self, "quality", quality)
        object.__setattr__(self, "bid_grids", bid_grids)
        object.__setattr__(self, "type_grids", type_grids)
        object.__setattr__(self, "n_bidders", n)
        object.__setattr__(self, "gamma_of", tuple(quality[g] for g in group_of))
        object.__setattr__(self, "ctr_of", tuple(ctr[g] for g in group_of))

    @property
    def n_slots(self) -> int:
        return self.n_bidders

    def bidders_in(self, group: Group) -> tuple[int, ...]:
        return tuple(i for i, g in enumerate(self.group_of) if g is group)


@dataclass(frozen=True)
class Outcome:
    """An allocation (slot -> bidder) plus per-bidder payments.

    Payments may be negative for composite mechanisms, where a negative
    payment is a net compensation to the bidder.
    """

    slot_to_bidder: tuple[int, ...]
    payments: tuple[float, ...]
    mechanism: Mechanism
    bidder_to_slot: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        assignment = tuple(int(i) for i in self.slot_to_bidder)
        payments = tuple(float(p) for p in self.payments)
        n = len(assignment)
        if sorted(assignment) != list(range(n)):
            raise ValueError("assignment must be a perfect matching of slots to bidders")
        if len(payments) != n:
            raise ValueError("need one payment per bidder")
        if self.mechanism is Mechanism.GSP and any(p < 0.0 for p in payments):
            raise ValueError("plain GSP payments cannot be negative")
        inverse = [0] * n
        for slot, bidder in enumerate(assignment):
            inverse[bidder] = slot
        object.__setattr__(self, "slot_to_bidder", assignment)
        object.__setattr__(self, "payments", payments)
        object.__setattr__(self, "bidder_to_slot", tuple(inverse))


def validate_instance(inst: AuctionInstance) -> list[str]:
    """Return every violated instance invariant; an empty list means valid."""
    problems: list[str] = []
    for g in Group:
        curve = inst.ctr[g]
        if any(curve[j] + TOL < curve[j + 1] for j in range(len(curve) - 1)):
            problems.append(f"ctr not monotone for group {g.value}")
        if any(a < -TOL or a > 1.0 + TOL for a in curve):
            problems.append(f"ctr out of [0, 1] for group {g.value}")
        gamma = inst.quality[g]
        if gamma <= 0.0:
            problems.append(f"quality factor for group {g.value} must be positive")
        elif gamma > 1.0 + TOL:
            problems.append(f"quality factor for group {g.value} exceeds 1")
    for i in range(inst.n_bidders):
        for kind, grid in (("bid", inst.bid_grids[i]), ("type", inst.type_grids[i])):
            if any(x < -TOL for x in grid):
                problems.append(f"{kind} grid has negative entries for bidder {i}")
            if any(grid[k + 1] <= grid[k] + TOL for k in range(len(grid) - 1)):
                problems.append(f"{kind} grid not ascending for bidder {i}")
        if max(inst.bid_grids[i]) + TOL < max(inst.type_grids[i]):
            problems.append(f"bid grid does not dominate type grid for bidder {i}")
    return problems


def _on_grid(x: float, grid: Sequence[float]) -> bool:
    return any(abs(x - g) <= TOL for g in grid)


def validate_bid_profile(inst: AuctionInstance, bids: BidProfile) -> list[str]:
    problems = []
    if len(bids) != inst.n_bidders:
        return [f"bid profile has length {len(bids)}, expected {inst.n_bidders}"]
    for i, b in enumerate(bids):
        if not _on_grid(b, inst.bid_grids[i]):
            problems.append(f"bid {b} not on the grid of bidder {i}")
    return problems


def validate_valuation_profile(inst: AuctionInstance, vals: ValuationProfile) -> list[str]:
    problems = []
    if len(vals) != inst.n_bidders:
        return [f"valuation profile has length {len(vals)}, expected {inst.n_bidders}"]
    for i, v in enumerate(vals):
        if not _on_grid(v, inst.type_grids[i]):
            problems.append(f"type {v} not on the grid of bidder {i}")
    return problems


def utility(inst: AuctionInstance, out: Outcome, vals: ValuationProfile, i: int) -> float:
    """Click value of bidder ``i``'s slot minus their payment."""
    slot = out.bidder_to_slot[i]
    return inst.ctr_of[i][slot] * inst.gamma_of[i] * vals[i] - out.payments[i]
