import numpy as np
import pytest

from gnsum.datamodel import FrameSurvey, HiddenSurvey, KnownPopulationRegistry, ProbeGroup
from gnsum.netsim import from_edges


@pytest.fixture
def registry():
    """Two probe groups: ``a`` is partly off the frame, ``b`` is fully on it."""
    return KnownPopulationRegistry(
        (ProbeGroup("a", 100, 80), ProbeGroup("b", 50, 50)), frame_size=60, universe_size=100
    )


@pytest.fixture
def frame(registry):
    """Four respondents whose weights sum to the frame size (60).

    Hand totals: y_FH = 30; ties to a and b = 150; ties to a alone = 90.
    """
    return FrameSurvey(
        ids=("r1", "r2", "r3", "r4"),
        weight=np.array([10.0, 10.0, 20.0, 20.0]),
        stratum=("s1", "s1", "s2", "s2"),
        psu=("p1", "p2", "p3", "p4"),
        y_hidden=np.array([1, 0, 1, 0]),
        group_ids=("a", "b"),
        y_probe=np.array([[2, 1], [1, 1], [0, 2], [3, 0]]),
        membership=np.array([[True, False], [False, False], [False, True], [True, True]]),
    )


@pytest.fixture
def hidden():
    """Three hidden respondents.

    Hand totals with weights (1, 2, 1): sum w = 4, sum w v = 12, sum w y = 16.
    """
    return HiddenSurvey(
        ids=("h1", "h2", "h3"),
        rel_weight=np.array([1.0, 2.0, 1.0]),
        group_ids=("a", "b"),
        y_probe=np.array([[4, 2], [2, 2], [0, 2]]),
        vis=np.array([[2, 2], [1, 2], [0, 2]]),
    )


@pytest.fixture
def toy_graph():
    """Eight people; 1-5 are on the frame, 5 and 6 are hidden.

    Person 5 knows hidden person 6 (one out-report) and is known to be
    hidden by frame members 1, 2 and 3 (three in-reports from the frame).
    """
    in_frame = np.zeros(8, dtype=bool)
    in_frame[[1, 2, 3, 4, 5]] = True
    in_hidden = np.zeros(8, dtype=bool)
    in_hidden[[5, 6]] = True
    social = np.array([[1, 5], [2, 5], [3, 5], [5, 6], [1, 6], [4, 7], [0, 4], [0, 6], [2, 3]])
    return from_edges(8, in_frame, in_hidden, social)
