"""Independent reference implementations used to cross-check the package.

Everything here is deliberately naive (enumeration, permutations, direct
transcription) and shares no code with the production paths it checks.
"""

from itertools import permutations

from fairgsp.model import Group


def ref_greedy(inst, bids):
    """Slot-by-slot argmax over explicit effective-bid lists."""
    unassigned = set(range(inst.n_bidders))
    assignment = []
    for j in range(inst.n_slots):
        scored = [
            (inst.quality[inst.group_of[i]] * inst.ctr[inst.group_of[i]][j] * bids[i], -i, i)
            for i in sorted(unassigned)
        ]
        winner = max(scored)[2]
        assignment.append(winner)
        unassigned.remove(winner)
    return assignment


def ref_group_value(inst, bids, group, slots):
    """Brute-force best assignment of the group's bidders to the slots."""
    members = [i for i in range(inst.n_bidders) if inst.group_of[i] is group]
    slots = list(slots)
    gamma = inst.quality[group]
    curve = inst.ctr[group]
    if not slots or not members:
        return 0.0
    best = 0.0
    if len(slots) <= len(members):
        for perm in permutations(members, len(slots)):
            best = max(
                best, sum(curve[j] * gamma * bids[i] for j, i in zip(slots, perm))
            )
    else:
        for perm in permutations(slots, len(members)):
            best = max(
                best, sum(curve[j] * gamma * bids[i] for j, i in zip(perm, members))
            )
    return best


def ref_gece_partition(inst, bids, beta_value):
    """Fresh transcription of the envy-driven split, recomputing every
    group value from scratch with explicit sorting."""

    def value(group, slots):
        curve = inst.ctr[group]
        gamma = inst.quality[group]
        member_bids = sorted(
            (bids[i] for i in range(inst.n_bidders) if inst.group_of[i] is group),
            reverse=True,
        )
        by_ctr = sorted(slots, key=lambda j: (-curve[j], j))
        return sum(curve[j] * gamma * b for j, b in zip(by_ctr, member_bids))

    n = inst.n_slots
    j_h, j_l = {0}, ({1} if n >= 2 else set())
    for j in range(2, n):
        h_envies = value(Group.H, j_h) < beta_value * value(Group.H, j_l) - 1e-12
        l_envies = value(Group.L, j_l) < beta_value * value(Group.L, j_h) - 1e-12
        if h_envies and l_envies:
            j_h, j_l = j_l, j_h
        if value(Group.L, j_l) >= beta_value * value(Group.L, j_h) - 1e-12:
            j_h = j_h | {j}
        else:
            j_l = j_l | {j}
    return tuple(sorted(j_h)), tuple(sorted(j_l))


def ref_regret(trace, n_bids):
    """Regret per type from a raw trace of (type, played_index, utilities).

    ``utilities`` holds the full-information utility of every bid that
    round. Returns {type: max over fixed bids of (its sum - played sum)}.
    """
    by_type = {}
    for realized_type, played_idx, utilities in trace:
        count, played, sums = by_type.setdefault(
            realized_type, [0, 0.0, [0.0] * n_bids]
        )
        by_type[realized_type][0] = count + 1
        by_type[realized_type][1] = played + utilities[played_idx]
        for k in range(n_bids):
            sums[k] += utilities[k]
    return {
        v: max(sums) - played for v, (count, played, sums) in by_type.items()
    }
