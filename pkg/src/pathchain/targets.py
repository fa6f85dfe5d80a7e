"""User-prescribed stationary distributions."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, softmax, xlogy

from pathchain.errors import DegenerateInputError, InputError, ParameterError

logger = logging.getLogger(__name__)

PROVENANCES = ("uniform", "energy_bias", "entropy_logistic", "custom")


@dataclass(frozen=True)
class StationaryTarget:
    p: np.ndarray
    provenance: str
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise InputError(f"a target needs a vector of at least 2 entries, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise InputError("target probabilities must be finite and strictly positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise InputError(f"target probabilities sum to {p.sum():.15g}, not 1")
        if self.provenance not in PROVENANCES:
            raise InputError(f"unknown target provenance {self.provenance!r}")
        if self.ids is not None and len(self.ids) != p.size:
            raise InputError(f"{len(self.ids)} ids for a target of {p.size} entries")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def size(self) -> int:
        return self.p.size


def uniform_target(n: int, ids=None) -> StationaryTarget:
    if n < 2:
        raise ParameterError(f"a uniform target needs N >= 2, got {n}")
    return StationaryTarget(np.full(n, 1.0 / n), "uniform", _ids(ids))


def energy_bias_target(energies, beta_new: float, beta_old: float, ids=None) -> StationaryTarget:
    """Reweight samples drawn at inverse temperature beta_old towards beta_new.

    p_a is proportional to exp(-(beta_new - beta_old) E_a); softmax shifts the
    exponent by its maximum so large energies do not overflow.
    """
    energies = np.asarray(energies, dtype=float)
    if not np.all(np.isfinite(energies)):
        raise InputError("energies must be finite")
    if not (beta_new > 0 and beta_old > 0):
        raise ParameterError(f"inverse temperatures must be positive, got {beta_new}, {beta_old}")
    p = softmax(-(beta_new - beta_old) * energies)
    if np.any(p <= 0):
        raise DegenerateInputError(
            "energy spread too large: some reweighted probabilities underflow to zero",
            index=int(np.argmin(p)),
        )
    return StationaryTarget(p / p.sum(), "energy_bias", _ids(ids))


def profile_entropy(profiles) -> np.ndarray:
    """Shannon entropy (natural log) of each row after normalizing it to sum 1."""
    x = np.asarray(profiles, dtype=float)
    if x.ndim != 2:
        raise InputError(f"profiles must be an N x F matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise InputError("profiles must be finite and nonnegative")
    totals = x.sum(axis=1)
    empty = np.flatnonzero(totals <= 0)
    if empty.size:
        raise DegenerateInputError(f"profile row {int(empty[0])} is all zero", index=int(empty[0]))
    x = x / totals[:, None]
    return -np.sum(xlogy(x, x), axis=1)


def entropy_logistic_target(profiles, ids=None) -> StationaryTarget:
    weights = expit(profile_entropy(profiles))
    return StationaryTarget(weights / weights.sum(), "entropy_logistic", _ids(ids))


def custom_target(p, ids=None) -> StationaryTarget:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or not np.all(np.isfinite(p)) or np.any(p <= 0):
        bad = int(np.flatnonzero(~(np.isfinite(p) & (p > 0)))[0]) if p.ndim == 1 else None
        raise InputError(f"custom target entries must be finite and positive (entry {bad})")
    total = p.sum()
    if abs(total - 1.0) > 1e-6:
        logger.warning("targets: custom target sums to %.6g, renormalizing", total)
    return StationaryTarget(p / total, "custom", _ids(ids))


def _ids(ids) -> tuple[str, ...] | None:
    return tuple(str(i) for i in ids) if ids is not None else None
