"""Group fair division of auction slots and brute-force fairness verifiers.

Two schemes re-rank the slot auction's output between the groups: a
round-robin interleave (envy bounded after removing some one slot) and a
sequential envy-cycle elimination (envy bounded after removing any one
slot). Both operate on slot *sets* per group; bidders within a group keep
their auction order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import TOL, AuctionInstance, BidProfile, Group, Outcome


@dataclass(frozen=True)
class Beta:
    """Interleaving ratio: xi_h slots for group H per xi_l slots for group L."""

    xi_h: int
    xi_l: int

    def __post_init__(self) -> None:
        if not (isinstance(self.xi_h, int) and isinstance(self.xi_l, int)):
            raise ValueError("interleave counts must be integers")
        if not self.xi_h >= self.xi_l >= 1:
            raise ValueError("need xi_h >= xi_l >= 1")

    @property
    def value(self) -> float:
        return self.xi_l / self.xi_h


@dataclass(frozen=True)
class GroupAllocation:
    """Disjoint slot sets held by the two groups, stored in ascending order."""

    slots_h: tuple[int, ...]
    slots_l: tuple[int, ...]

    def __post_init__(self) -> None:
        slots_h = tuple(sorted(self.slots_h))
        slots_l = tuple(sorted(self.slots_l))
        if set(slots_h) & set(slots_l):
            raise ValueError("slot sets of the two groups must be disjoint")
        object.__setattr__(self, "slots_h", slots_h)
        object.__setattr__(self, "slots_l", slots_l)

    def slots_of(self, group: Group) -> tuple[int, ...]:
        return self.slots_h if group is Group.H else self.slots_l


def group_value(
    inst: AuctionInstance, bids: BidProfile, group: Group, slots: Iterable[int]
) -> float:
    """Best value the group can extract from a slot set on the given bids.

    Slots sorted by decreasing click-through rate are paired rank-by-rank
    with the group's bids in decreasing order; slots beyond the group's
    roster contribute nothing.
    """
    curve = inst.ctr[group]
    gamma = inst.quality[group]
    top_bids = sorted((bids[i] for i in inst.bidders_in(group)), reverse=True)
    ordered = sorted(slots, key=lambda j: (-curve[j], j))
    return sum(curve[j] * gamma * b for j, b in zip(ordered, top_bids))


def gsp_group_order(inst: AuctionInstance, gsp_out: Outcome, group: Group) -> tuple[int, ...]:
    """The group's bidders by ascending auction slot (descending effective bid)."""
    return tuple(sorted(inst.bidders_in(group), key=lambda i: gsp_out.bidder_to_slot[i]))


def group_orders(
    group_of: Sequence[Group], slot_to_bidder: Sequence[int]
) -> tuple[list[int], list[int]]:
    """Both groups' bidders in ascending slot order, in one pass."""
    order_h: list[int] = []
    order_l: list[int] = []
    for i in slot_to_bidder:
        (order_h if group_of[i] is Group.H else order_l).append(i)
    return order_h, order_l


def interleave_orders(
    order_h: Sequence[int], order_l: Sequence[int], n: int, xi_h: int, xi_l: int
) -> list[int]:
    """Alternate blocks of xi_h group-H and xi_l group-L bidders down the
    slots; once one group runs out, the other fills the remainder."""
    slot_to_bidder = [-1] * n
    j = ih = il = 0
    while ih < len(order_h) and il < len(order_l):
        block = 0
        while j < n and block < xi_h and ih < len(order_h):
            slot_to_bidder[j] = order_h[ih]
            ih += 1
            j += 1
            block += 1
        block = 0
        while j < n and block < xi_l and il < len(order_l):
            slot_to_bidder[j] = order_l[il]
            il += 1
            j += 1
            block += 1
    while j < n and ih < len(order_h):
        slot_to_bidder[j] = order_h[ih]
        ih += 1
        j += 1
    while j < n and il < len(order_l):
        slot_to_bidder[j] = order_l[il]
        il += 1
        j += 1
    return slot_to_bidder


def round_robin_ef1(inst: AuctionInstance, gsp_out: Outcome, beta: Beta) -> tuple[int, ...]:
    """Round-robin re-ranking of the auction outcome.

    Returns the slot -> bidder assignment.
    """
    order_h, order_l = group_orders(inst.group_of, gsp_out.slot_to_bidder)
    return tuple(interleave_orders(order_h, order_l, inst.n_slots, beta.xi_h, beta.xi_l))


def _value_on_sorted(
    curve: Sequence[float], gamma: float, bids_desc: Sequence[float], slots: Sequence[int]
) -> float:
    # Slot lists are kept in ascending index order, which is descending CTR
    # for both groups' monotone curves.
    return sum(curve[j] * gamma * b for j, b in zip(slots, bids_desc))


def envy_partition(
    curve_h: Sequence[float],
    curve_l: Sequence[float],
    gamma_h: float,
    gamma_l: float,
    bids_h_desc: Sequence[float],
    bids_l_desc: Sequence[float],
    n: int,
    beta_value: float,
) -> tuple[list[int], list[int]]:
    """Envy-cycle-elimination slot split on pre-sorted per-group bids.

    Slot 0 seeds group H, slot 1 group L. Each later slot first triggers a
    bundle swap when both groups strictly envy each other (scaled by
    ``beta_value``), then goes to group H unless group L envies H's bundle.
    """
    slots_h = [0]
    slots_l = [1] if n >= 2 else []
    for j in range(2, n):
        hh = _value_on_sorted(curve_h, gamma_h, bids_h_desc, slots_h)
        hl = _value_on_sorted(curve_h, gamma_h, bids_h_desc, slots_l)
        ll = _value_on_sorted(curve_l, gamma_l, bids_l_desc, slots_l)
        lh = _value_on_sorted(curve_l, gamma_l, bids_l_desc, slots_h)
        if hh < beta_value * hl - TOL and ll < beta_value * lh - TOL:
            slots_h, slots_l = slots_l, slots_h
            ll, lh = lh, ll
        if ll >= beta_value * lh - TOL:
            slots_h.append(j)
        else:
            slots_l.append(j)
    return slots_h, slots_l


def gece_partition(
    inst: AuctionInstance, bids: BidProfile, gsp_out: Outcome, beta_value: float
) -> GroupAllocation:
    """The slot split the envy-cycle-elimination scheme assigns each group."""
    bids_h = sorted((bids[i] for i in inst.bidders_in(Group.H)), reverse=True)
    bids_l = sorted((bids[i] for i in inst.bidders_in(Group.L)), reverse=True)
    slots_h, slots_l = envy_partition(
        inst.ctr[Group.H],
        inst.ctr[Group.L],
        inst.quality[Group.H],
        inst.quality[Group.L],
        bids_h,
        bids_l,
        inst.n_slots,
        beta_value,
    )
    return GroupAllocation(tuple(slots_h), tuple(slots_l))


def fill_partition(
    order_h: Sequence[int],
    order_l: Sequence[int],
    slots_h: Sequence[int],
    slots_l: Sequence[int],
    n: int,
) -> list[int]:
    """Staff each group's slots with its bidders in auction order.

    Slots a group cannot staff are handed to the other group (each group
    keeps its best slots), so the result is always a perfect matching.
    """
    slots_h = list(slots_h)
    slots_l = list(slots_l)
    if len(slots_h) > len(order_h):
        slots_l = sorted(slots_l + slots_h[len(order_h):])
        slots_h = slots_h[: len(order_h)]
    if len(slots_l) > len(order_l):
        slots_h = sorted(slots_h + slots_l[len(order_l):])
        slots_l = slots_l[: len(order_l)]
    slot_to_bidder = [-1] * n
    for rank, j in enumerate(slots_h):
        slot_to_bidder[j] = order_h[rank]
    for rank, j in enumerate(slots_l):
        slot_to_bidder[j] = order_l[rank]
    return slot_to_bidder


def assignment_from_partition(
    inst: AuctionInstance, gsp_out: Outcome, alloc: GroupAllocation
) -> tuple[int, ...]:
    order_h, order_l = group_orders(inst.group_of, gsp_out.slot_to_bidder)
    return tuple(fill_partition(order_h, order_l, alloc.slots_h, alloc.slots_l, inst.n_slots))


def gece_efx(
    inst: AuctionInstance, bids: BidProfile, gsp_out: Outcome, beta_value: float
) -> tuple[int, ...]:
    """Envy-cycle-elimination split followed by within-group fill.

    Returns the slot -> bidder assignment.
    """
    alloc = gece_partition(inst, bids, gsp_out, beta_value)
    return assignment_from_partition(inst, gsp_out, alloc)


def group_allocation_of(inst: AuctionInstance, slot_to_bidder: Sequence[int]) -> GroupAllocation:
    """The slot sets occupied by each group under an assignment."""
    slots_h = tuple(j for j, i in enumerate(slot_to_bidder) if inst.group_of[i] is Group.H)
    slots_l = tuple(j for j, i in enumerate(slot_to_bidder) if inst.group_of[i] is Group.L)
    return GroupAllocation(slots_h, slots_l)


def _envy_bounded_after_removal(
    inst: AuctionInstance,
    bids: BidProfile,
    group: Group,
    own_slots: Sequence[int],
    other_slots: Sequence[int],
    beta_value: float,
    every_removal: bool,
) -> bool:
    own = group_value(inst, bids, group, own_slots)
    if not other_slots:
        return own >= -TOL
    checks = (
        own
        >= beta_value
        * group_value(inst, bids, group, [j for j in other_slots if j != removed])
        - TOL
        for removed in other_slots
    )
    return all(checks) if every_removal else any(checks)


def verify_ef1(
    inst: AuctionInstance, bids: BidProfile, alloc: GroupAllocation, beta_value: float
) -> bool:
    """Exhaustive check that group H's envy toward group L's bundle is
    covered, scaled by ``beta_value``, after removing some single slot.

    Only the majority group's envy is constrained: the interleave
    deliberately favors H by ratio 1/beta, so group L's reverse envy can
    exceed any beta-scaled bound on steep click-through curves.
    """
    return _envy_bounded_after_removal(
        inst, bids, Group.H, alloc.slots_h, alloc.slots_l, beta_value, every_removal=False
    )


def verify_efx(
    inst: AuctionInstance, bids: BidProfile, alloc: GroupAllocation, beta_value: float
) -> bool:
    """Exhaustive check that neither group's envy of the other's bundle,
    scaled by ``beta_value``, survives the removal of every single slot."""
    return _envy_bounded_after_removal(
        inst, bids, Group.H, alloc.slots_h, alloc.slots_l, beta_value, every_removal=True
    ) and _envy_bounded_after_removal(
        inst, bids, Group.L, alloc.slots_l, alloc.slots_h, beta_value, every_removal=True
    )
