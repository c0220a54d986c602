"""Synthetic market generators: instances, curves, grids, distributions."""

from __future__ import annotations

import numpy as np

from .model import AuctionInstance, Group
from .simulation import Discrete


def uniform_grid(low: float = 0.0, high: float = 1.0, points: int = 11) -> tuple[float, ...]:
    if points < 1:
        raise ValueError("grid needs at least one point")
    if points == 1:
        return (float(low),)
    return tuple(low + (high - low) * k / (points - 1) for k in range(points))


def geometric_ctr(n_slots: int, ratio: float) -> tuple[float, ...]:
    """Monotone curve 1, ratio, ratio^2, ..."""
    if not 0.0 < ratio <= 1.0:
        raise ValueError("ratio must lie in (0, 1]")
    return tuple(ratio**j for j in range(n_slots))


def random_monotone_ctr(rng: np.random.Generator, n_slots: int) -> tuple[float, ...]:
    """Random nonincreasing curve normalized so the top slot has rate 1."""
    raw = sorted(rng.random(n_slots), reverse=True)
    top = raw[0] if raw[0] > 0 else 1.0
    return tuple(x / top for x in raw)


def random_instance(
    rng: np.random.Generator,
    *,
    n: int | None = None,
    n_min: int = 2,
    n_max: int = 12,
    grid_points: int = 11,
    randomize_quality: bool = False,
) -> AuctionInstance:
    """A random market with both groups nonempty and monotone random curves."""
    if n is None:
        n = int(rng.integers(max(n_min, 2), n_max + 1))
    while True:
        groups = tuple(Group.H if rng.random() < 0.5 else Group.L for _ in range(n))
        if any(g is Group.H for g in groups) and any(g is Group.L for g in groups):
            break
    if randomize_quality:
        quality = {
            Group.H: float(rng.uniform(0.3, 1.0)),
            Group.L: float(rng.uniform(0.3, 1.0)),
        }
    else:
        quality = {Group.H: 1.0, Group.L: 1.0}
    grid = uniform_grid(points=grid_points)
    return AuctionInstance(
        group_of=groups,
        ctr={Group.H: random_monotone_ctr(rng, n), Group.L: random_monotone_ctr(rng, n)},
        quality=quality,
        bid_grids=(grid,) * n,
        type_grids=(grid,) * n,
    )


def random_bids(rng: np.random.Generator, inst: AuctionInstance) -> tuple[float, ...]:
    return tuple(
        inst.bid_grids[i][int(rng.integers(len(inst.bid_grids[i])))]
        for i in range(inst.n_bidders)
    )


def random_valuations(rng: np.random.Generator, inst: AuctionInstance) -> tuple[float, ...]:
    return tuple(
        inst.type_grids[i][int(rng.integers(len(inst.type_grids[i])))]
        for i in range(inst.n_bidders)
    )


def point_mass(value) -> Discrete:
    return Discrete((value,), (1.0,))


def skewed_discrete(grid, decay: float = 0.9) -> Discrete:
    """Grid distribution with geometrically decaying mass from the lowest
    value up, mimicking a long-tailed empirical bid distribution."""
    if not 0.0 < decay < 1.0:
        raise ValueError("decay must lie in (0, 1)")
    weights = [decay**k for k in range(len(grid))]
    total = sum(weights)
    return Discrete(tuple(grid), tuple(w / total for w in weights))
