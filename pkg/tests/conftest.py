import numpy as np
import pytest

from dramaforge.model import StoryCore
from dramaforge.providers.mocks import MockWriter, mock_suite


@pytest.fixture
def suite():
    return mock_suite(seed=0)


@pytest.fixture
def registry(suite):
    return suite.registry


def make_story_core(n_scenes: int = 3, logline: str = "A fired engineer returns as the client.") -> StoryCore:
    raw = MockWriter(seed=0).handle({"task": "story_core", "logline": logline, "n_scenes": n_scenes})
    return StoryCore.from_dict(raw)


@pytest.fixture
def story_core():
    return make_story_core()


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))
