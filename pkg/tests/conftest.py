import sys
from pathlib import Path

import numpy as np
import pytest

from fairgsp.model import AuctionInstance, Group

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def two_bidder_instance():
    """Two bidders in different groups with distinct curves and qualities."""
    return AuctionInstance(
        group_of=(Group.H, Group.L),
        ctr={Group.H: (1.0, 0.4), Group.L: (0.8, 0.6)},
        quality={Group.H: 1.0, Group.L: 0.5},
        bid_grids=((0.0, 0.5, 1.0),) * 2,
        type_grids=((0.0, 0.5, 1.0),) * 2,
    )


def flat_instance(n, curve_h, curve_l=None, groups=None, quality=(1.0, 1.0), grid=None):
    """Shorthand builder for small hand-crafted markets."""
    if curve_l is None:
        curve_l = curve_h
    if groups is None:
        groups = tuple(Group.H if i < n // 2 else Group.L for i in range(n))
    if grid is None:
        grid = tuple(x / 10 for x in range(11))
    return AuctionInstance(
        group_of=groups,
        ctr={Group.H: tuple(curve_h), Group.L: tuple(curve_l)},
        quality={Group.H: quality[0], Group.L: quality[1]},
        bid_grids=(grid,) * n,
        type_grids=(grid,) * n,
    )
