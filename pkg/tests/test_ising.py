import itertools
import math

import numpy as np
import pytest

from pathchain.errors import ParameterError
from pathchain.ising import (
    SpinLattice,
    _sweep_lattice,
    _sweep_stack,
    energy,
    exact_distribution,
    metropolis_sample,
    sample_chains,
)


def brute_force_energy(spins: np.ndarray) -> float:
    L = spins.shape[0]
    total = 0
    for i, j in itertools.product(range(L), repeat=2):
        total -= spins[i, j] * spins[(i + 1) % L, j]
        total -= spins[i, j] * spins[i, (j + 1) % L]
    return float(total)


@pytest.mark.parametrize("L", [2, 4, 6])
def test_energy_of_ordered_lattices(L):
    assert energy(SpinLattice(L, np.ones((L, L), dtype=np.int8))) == -2 * L * L
    checkerboard = np.where(np.add.outer(np.arange(L), np.arange(L)) % 2 == 0, 1, -1).astype(np.int8)
    assert energy(SpinLattice(L, checkerboard)) == 2 * L * L


def test_energy_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(10):
        spins = rng.choice(np.array([-1, 1], dtype=np.int8), size=(4, 4))
        assert energy(SpinLattice(4, spins)) == brute_force_energy(spins)


def test_energy_is_flip_symmetric_and_even():
    rng = np.random.default_rng(1)
    spins = rng.choice(np.array([-1, 1], dtype=np.int8), size=(5, 5))
    e = energy(SpinLattice(5, spins))
    assert e == energy(SpinLattice(5, -spins))
    assert e % 2 == 0


def test_spin_lattice_validation():
    with pytest.raises(ParameterError):
        SpinLattice(2, np.zeros((2, 2)))
    with pytest.raises(ParameterError):
        SpinLattice(3, np.ones((2, 2)))
    lattice = SpinLattice.from_vector([1, -1, -1, -1])
    assert lattice.L == 2
    assert lattice.magnetization == -0.5


def test_sample_shapes_and_consistency():
    sample = metropolis_sample(L=4, k_BT=2.4, n_samples=50, burn_in=10, thinning=2, seed=3)
    assert sample.configurations.shape == (50, 16)
    assert sample.configurations.dtype == np.int8
    assert set(np.unique(sample.configurations).tolist()) <= {-1, 1}
    for config, e, m in zip(sample.configurations, sample.energies, sample.magnetizations):
        lattice = SpinLattice(4, config.reshape(4, 4))
        assert e == energy(lattice)
        assert m == pytest.approx(lattice.magnetization)
        assert -1 <= m <= 1
    cloud = sample.to_point_cloud()
    assert cloud.size == 50 and cloud.dimension == 16
    assert cloud.ids[0] == "s00000"


def test_sampling_is_deterministic_given_seed():
    a = metropolis_sample(L=4, k_BT=2.4, n_samples=20, burn_in=5, thinning=1, seed=42)
    b = metropolis_sample(L=4, k_BT=2.4, n_samples=20, burn_in=5, thinning=1, seed=42)
    c = metropolis_sample(L=4, k_BT=2.4, n_samples=20, burn_in=5, thinning=1, seed=43)
    np.testing.assert_array_equal(a.configurations, b.configurations)
    assert not np.array_equal(a.configurations, c.configurations)


def test_single_lattice_sweep_matches_stacked_sweep():
    start = np.random.default_rng(5).choice(np.array([-1, 1], dtype=np.int8), size=(1, 6, 6))
    a, b = start.copy(), start.copy()
    rng_a, rng_b = np.random.default_rng(6), np.random.default_rng(6)
    for _ in range(20):
        _sweep_lattice(a, 1.0 / 2.4, rng_a)
        _sweep_stack(b, 1.0 / 2.4, rng_b)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, start)


def test_frozen_lattice_stays_ordered():
    sample = metropolis_sample(L=6, k_BT=1e-6, n_samples=20, burn_in=10, thinning=1, seed=0, start="up")
    np.testing.assert_array_equal(sample.magnetizations, 1.0)
    np.testing.assert_array_equal(sample.energies, -72.0)


def test_hot_lattice_has_zero_mean_magnetization():
    sample = metropolis_sample(L=8, k_BT=1e6, n_samples=500, burn_in=10, thinning=5, seed=1)
    m = sample.magnetizations
    assert abs(m.mean()) < 3 * m.std(ddof=1) / math.sqrt(m.size)


def test_parallel_chains_match_serial_runs():
    kwargs = dict(L=4, k_BT=2.4, n_samples=10, burn_in=5, thinning=1)
    samples = sample_chains([7, 8, 9], max_workers=3, **kwargs)
    for seed, sample in zip([7, 8, 9], samples):
        np.testing.assert_array_equal(sample.configurations, metropolis_sample(seed=seed, **kwargs).configurations)


def test_sampler_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        metropolis_sample(L=1)
    with pytest.raises(ParameterError):
        metropolis_sample(L=4, k_BT=0.0)
    with pytest.raises(ParameterError):
        metropolis_sample(L=4, thinning=0)
    with pytest.raises(ParameterError):
        metropolis_sample(L=4, start="down", n_samples=1, burn_in=0)


def test_exact_distribution_of_two_by_two():
    states, probabilities = exact_distribution(2, 2.4)
    assert states.shape == (16, 4)
    assert probabilities.sum() == pytest.approx(1.0, abs=1e-14)
    # all-down and all-up are the ground states
    assert probabilities[0] == pytest.approx(probabilities[-1])
    assert probabilities[0] == probabilities.max()
    with pytest.raises(ParameterError):
        exact_distribution(5, 2.4)


def test_two_by_two_sampler_matches_boltzmann():
    k_BT = 4.0
    states, probabilities = exact_distribution(2, k_BT)
    sample = metropolis_sample(
        L=2, k_BT=k_BT, n_samples=1_000_000, burn_in=50, thinning=10, seed=2024, n_chains=1000,
    )
    bits = (sample.configurations > 0).astype(np.int64)
    index = bits @ (1 << np.arange(3, -1, -1))
    counts = np.bincount(index, minlength=16)
    n = sample.size

    level_energies = -np.sum(
        states.reshape(-1, 2, 2) * np.roll(states.reshape(-1, 2, 2), -1, axis=1)
        + states.reshape(-1, 2, 2) * np.roll(states.reshape(-1, 2, 2), -1, axis=2),
        axis=(1, 2),
    )
    for level in np.unique(level_energies):
        mask = level_energies == level
        p = probabilities[mask].sum()
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(counts[mask].sum() - n * p) <= 3 * sigma

    sigma = np.sqrt(n * probabilities * (1 - probabilities))
    assert np.all(np.abs(counts - n * probabilities) <= 4 * sigma)
