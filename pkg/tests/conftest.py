import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from adaptslam.graph import EdgeCategory, PoseGraph

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def connected_graphs(draw, min_nodes=2, max_nodes=7, w_max=500.0, imu=True):
    """Random connected multigraph on ``0..n-1`` (covis tree + extras, optional IMU)."""
    n = draw(st.integers(min_nodes, max_nodes))
    weight = st.floats(1.0, w_max, allow_nan=False)
    pairs = set()
    for i in range(1, n):
        j = draw(st.integers(0, i - 1))
        pairs.add((j, i))
    for a in range(n):
        for b in range(a + 1, n):
            if draw(st.booleans()):
                pairs.add((a, b))
    edges = [(a, b, EdgeCategory.COVIS, draw(weight)) for a, b in sorted(pairs)]
    if imu:
        for a in range(n - 1):
            if draw(st.booleans()):
                edges.append((a, a + 1, EdgeCategory.IMU, draw(weight)))
    return PoseGraph.from_edges(range(n), edges)


@pytest.fixture
def triangle():
    return PoseGraph.from_edges(range(3), [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
