"""Shared fixtures: the full-scale unguided ring baselines are expensive
enough to compute once per session."""

from dataclasses import replace

import pytest

from temporal_transfer.ringsim import RingConfig, simulate

RING = RingConfig()
RING_UNGUIDED = replace(RING, n_guided=0)


@pytest.fixture(scope="session")
def ring_baselines():
    return [simulate(RING_UNGUIDED, None, seed) for seed in range(10)]
