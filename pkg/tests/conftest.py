"""Shared fixtures: the bundled demo model and its observation series.

Session-scoped because tests treat models as immutable (interventions and
overrides always return modified copies).
"""

import pytest

from plotsmith.schema import load_demo, load_demo_observations


@pytest.fixture(scope="session")
def demo_model():
    return load_demo()


@pytest.fixture(scope="session")
def demo_observations():
    return load_demo_observations()
