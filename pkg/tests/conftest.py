"""Shared fixtures: simulated scans are expensive, so they are cached per session."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from svcreg import room_pair, pillar_room_pair


@pytest.fixture(scope="session")
def shared_room_pair():
    """One mid-overlap room scan pair with exact ground truth."""
    return room_pair(7)


@pytest.fixture(scope="session")
def corner_room_pair():
    """Room pair whose target sensor looks into a corner (two wall planes)."""
    return room_pair(11, corner_facing=True, yaw_spread=0.25)


@pytest.fixture(scope="session")
def low_overlap_pair():
    """Low-overlap pair from the occluded-room generator."""
    return pillar_room_pair(3)


@pytest.fixture()
def rng():
    """Fresh deterministic generator per test."""
    return np.random.default_rng(20240817)
