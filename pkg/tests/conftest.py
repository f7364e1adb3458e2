from pathlib import Path

import pytest

from app.core.network import SpinNetwork, load_network_file

ROOT = Path(__file__).resolve().parent.parent
NETWORKS = ROOT / "networks"
RECIPES = ROOT / "recipes"


@pytest.fixture
def two_spin() -> SpinNetwork:
    return load_network_file(NETWORKS / "two_spin.toml")


@pytest.fixture
def three_chain() -> SpinNetwork:
    return load_network_file(NETWORKS / "three_chain.toml")


@pytest.fixture
def leucine() -> SpinNetwork:
    return load_network_file(NETWORKS / "leucine.toml")


@pytest.fixture
def uniform_chain() -> SpinNetwork:
    """Three sites, equal couplings, distinct shifts."""
    return SpinNetwork.build(["A", "B", "C"], [0.0, 700.0, 1900.0], {(0, 1): 50.0, (1, 2): 50.0})
