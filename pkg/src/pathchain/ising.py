"""2-D Ising configurations sampled with single-spin-flip Metropolis.

Ferromagnetic convention E = -sum_<ij> s_i s_j over nearest neighbours on a
periodic L x L lattice, each bond counted once as the (right, down) pair of a site.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from pathchain.errors import ParameterError
from pathchain.geometry import PointCloud

logger = logging.getLogger(__name__)

DEFAULT_L = 16
DEFAULT_BURN_IN = 1000
DEFAULT_THINNING = 10

# Exhaustive enumeration is 2^(L*L) states.
_MAX_EXACT_L = 4


@dataclass(frozen=True)
class SpinLattice:
    L: int
    spins: np.ndarray
    rng_seed: int | None = None

    def __post_init__(self):
        spins = np.asarray(self.spins)
        if spins.shape != (self.L, self.L):
            raise ParameterError(f"spins must be {self.L} x {self.L}, got {spins.shape}")
        if not np.all(np.abs(spins) == 1):
            raise ParameterError("spins must be -1 or +1")

    @classmethod
    def from_vector(cls, vector, seed: int | None = None) -> SpinLattice:
        vector = np.asarray(vector)
        L = int(round(np.sqrt(vector.size)))
        return cls(L, vector.reshape(L, L), seed)

    @property
    def magnetization(self) -> float:
        return float(np.mean(self.spins))


@dataclass(frozen=True)
class IsingSample:
    configurations: np.ndarray
    energies: np.ndarray
    magnetizations: np.ndarray
    temperature: float
    L: int
    seed: int | None = None

    @property
    def size(self) -> int:
        return self.configurations.shape[0]

    def to_point_cloud(self) -> PointCloud:
        ids = [f"s{i:05d}" for i in range(self.size)]
        return PointCloud(self.configurations.astype(float), tuple(ids))


def _lattice_energy(spins: np.ndarray) -> np.ndarray:
    """Energy of one lattice or of a stack of lattices along the leading axes."""
    s = spins.astype(np.int64)
    bonds = s * np.roll(s, -1, axis=-2) + s * np.roll(s, -1, axis=-1)
    return -bonds.sum(axis=(-2, -1))


def energy(lattice: SpinLattice) -> float:
    return float(_lattice_energy(lattice.spins))


def _initial_spins(rng: np.random.Generator, n_chains: int, L: int, start: str) -> np.ndarray:
    if start == "up":
        return np.ones((n_chains, L, L), dtype=np.int8)
    if start == "random":
        return rng.choice(np.array([-1, 1], dtype=np.int8), size=(n_chains, L, L))
    raise ParameterError(f"start must be 'random' or 'up', got {start!r}")


def _sweep(spins: np.ndarray, beta: float, rng: np.random.Generator) -> None:
    """L*L proposed single-spin flips on every chain of the stack, in place."""
    if spins.shape[0] == 1:
        _sweep_lattice(spins, beta, rng)
    else:
        _sweep_stack(spins, beta, rng)


def _sweep_lattice(spins: np.ndarray, beta: float, rng: np.random.Generator) -> None:
    # Same draws and acceptance rule as _sweep_stack, on plain ints
    L = spins.shape[1]
    rows = rng.integers(0, L, size=L * L).tolist()
    cols = rng.integers(0, L, size=L * L).tolist()
    uniforms = rng.random(L * L).tolist()
    boltzmann = {4: math.exp(-4.0 * beta), 8: math.exp(-8.0 * beta)}
    lattice = spins[0].tolist()
    for i, j, u in zip(rows, cols, uniforms):
        s = lattice[i][j]
        d_energy = 2 * s * (lattice[(i + 1) % L][j] + lattice[i - 1][j] + lattice[i][(j + 1) % L] + lattice[i][j - 1])
        if d_energy <= 0 or u < boltzmann[d_energy]:
            lattice[i][j] = -s
    spins[0] = lattice


def _sweep_stack(spins: np.ndarray, beta: float, rng: np.random.Generator) -> None:
    n_chains, L, _ = spins.shape
    chains = np.arange(n_chains)
    rows = rng.integers(0, L, size=(L * L, n_chains))
    cols = rng.integers(0, L, size=(L * L, n_chains))
    uniforms = rng.random((L * L, n_chains))
    for step in range(L * L):
        i, j = rows[step], cols[step]
        s = spins[chains, i, j].astype(np.int64)
        neighbours = (
            spins[chains, (i + 1) % L, j].astype(np.int64)
            + spins[chains, (i - 1) % L, j]
            + spins[chains, i, (j + 1) % L]
            + spins[chains, i, (j - 1) % L]
        )
        d_energy = 2 * s * neighbours
        # exp of a non-positive exponent only; downhill moves are always accepted
        accept = (d_energy <= 0) | (uniforms[step] < np.exp(-beta * np.maximum(d_energy, 0)))
        flip = chains[accept]
        spins[flip, i[accept], j[accept]] *= -1


def metropolis_sample(
    L: int = DEFAULT_L,
    k_BT: float = 2.4,
    n_samples: int = 1000,
    burn_in: int = DEFAULT_BURN_IN,
    thinning: int = DEFAULT_THINNING,
    seed: int | None = None,
    start: str = "random",
    n_chains: int = 1,
) -> IsingSample:
    """Record one configuration every `thinning` sweeps after `burn_in` sweeps.

    With `n_chains > 1` independent chains advance together and their records
    are interleaved (chain-major within each recording step); the result is the
    first `n_samples` of that sequence. Deterministic given `seed`.
    """
    if L < 2:
        raise ParameterError(f"lattice side must be at least 2, got {L}")
    if not k_BT > 0:
        raise ParameterError(f"temperature must be positive, got {k_BT}")
    if n_samples < 1 or n_chains < 1:
        raise ParameterError("n_samples and n_chains must be at least 1")
    if burn_in < 0 or thinning < 1:
        raise ParameterError("burn_in must be >= 0 and thinning >= 1")

    rng = np.random.default_rng(seed)
    beta = 1.0 / k_BT
    spins = _initial_spins(rng, n_chains, L, start)

    for _ in range(burn_in):
        _sweep(spins, beta, rng)
    logger.info("ising/L=%d: burn-in of %d sweeps done at k_BT=%g", L, burn_in, k_BT)

    n_records = -(-n_samples // n_chains)
    records = np.empty((n_records, n_chains, L * L), dtype=np.int8)
    for r in range(n_records):
        for _ in range(thinning):
            _sweep(spins, beta, rng)
        records[r] = spins.reshape(n_chains, L * L)

    configurations = records.reshape(-1, L * L)[:n_samples]
    energies = _lattice_energy(configurations.reshape(-1, L, L)).astype(float)
    magnetizations = configurations.mean(axis=1, dtype=float)
    logger.info(
        "ising/L=%d: %d samples, mean |m| = %.3f", L, n_samples, float(np.mean(np.abs(magnetizations))),
    )
    return IsingSample(
        configurations=configurations, energies=energies, magnetizations=magnetizations,
        temperature=float(k_BT), L=L, seed=seed,
    )


def sample_chains(seeds: list[int], max_workers: int | None = None, **kwargs) -> list[IsingSample]:
    """Independent single-threaded chains, one per seed, run on a thread pool."""
    with ThreadPoolExecutor(max_workers=max_workers or len(seeds)) as executor:
        futures = [executor.submit(metropolis_sample, seed=seed, **kwargs) for seed in seeds]
        return [future.result() for future in futures]


def exact_distribution(L: int, k_BT: float) -> tuple[np.ndarray, np.ndarray]:
    """All 2^(L*L) configurations and their Gibbs-Boltzmann probabilities."""
    if not 2 <= L <= _MAX_EXACT_L:
        raise ParameterError(f"exhaustive enumeration supports 2 <= L <= {_MAX_EXACT_L}, got {L}")
    states = np.array(list(itertools.product((-1, 1), repeat=L * L)), dtype=np.int8)
    energies = _lattice_energy(states.reshape(-1, L, L)).astype(float)
    weights = np.exp(-(energies - energies.min()) / k_BT)
    return states, weights / weights.sum()
