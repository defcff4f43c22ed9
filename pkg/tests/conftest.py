"""Shared fixtures."""

import pytest

from temporal_spotting.data.synthetic import SyntheticSpec, gen_synthetic_dataset


@pytest.fixture
def tiny_spec():
    """A small synthetic dataset that generates in well under a second."""
    return SyntheticSpec(
        seed=3,
        train_games=2,
        val_games=1,
        test_games=1,
        duration_s=120.0,
        dim=8,
        actions_per_game=3,
        min_gap_s=10.0,
    )


@pytest.fixture
def tiny_dataset(tmp_path, tiny_spec):
    return gen_synthetic_dataset(tiny_spec, tmp_path / "synthetic")
