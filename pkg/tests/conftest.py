import pytest

from energyseg.synthetic import GeneratorConfig, generate_synthetic


@pytest.fixture(scope="session")
def synth_table():
    """Default-size synthetic dataset; treat as read-only in tests."""
    return generate_synthetic(GeneratorConfig(players_per_class=(2, 2, 2), n_days=7), seed=0)


@pytest.fixture(scope="session")
def tiny_table():
    """Three players, two days; cheap fixture for structural tests."""
    return generate_synthetic(GeneratorConfig(players_per_class=(1, 1, 1), n_days=2), seed=3)
