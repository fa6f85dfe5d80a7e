"""Row-normalized Markov chains and the audit machinery shared by all chains."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import xlogy

from pathchain.errors import InputError
from pathchain.geometry import KernelMatrix

logger = logging.getLogger(__name__)

PROVENANCES = ("rnmc", "pnmc_free", "pnmc_prescribed", "pnmc_update", "oracle", "loaded")

DEFAULT_AUDIT_TOL = 1e-8


@dataclass(frozen=True)
class MarkovChain:
    """Transition matrix `q` with its stationary vector `p`.

    Constructors are responsible for consistency; `validate()` is the audit.
    """

    q: np.ndarray
    p: np.ndarray
    reversible: bool
    provenance: str
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        p = np.array(self.p, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise InputError(f"transition matrix must be square, got shape {q.shape}")
        if p.shape != (q.shape[0],):
            raise InputError(f"stationary vector of length {p.size} for a {q.shape[0]}-state chain")
        if self.provenance not in PROVENANCES:
            raise InputError(f"unknown chain provenance {self.provenance!r}")
        if self.ids is not None and len(self.ids) != q.shape[0]:
            raise InputError(f"{len(self.ids)} ids for a {q.shape[0]}-state chain")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def size(self) -> int:
        return self.q.shape[0]


@dataclass
class ChainReport:
    row_sum_deviation: float
    worst_row: int
    stationarity_residual: float
    detailed_balance_residual: float
    min_entry: float
    column_sum_deviation: float
    symmetry_residual: float
    tol: float
    passed: bool
    worst_row_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "row_sum_deviation": self.row_sum_deviation,
            "worst_row": self.worst_row,
            "worst_row_id": self.worst_row_id,
            "stationarity_residual": self.stationarity_residual,
            "detailed_balance_residual": self.detailed_balance_residual,
            "min_entry": self.min_entry,
            "column_sum_deviation": self.column_sum_deviation,
            "symmetry_residual": self.symmetry_residual,
            "tol": self.tol,
            "passed": self.passed,
        }


def rnmc(kernel: KernelMatrix) -> MarkovChain:
    z = kernel.delta.sum(axis=1)
    q = kernel.delta / z[:, None]
    p = z / z.sum()
    return MarkovChain(q, p, reversible=True, provenance="rnmc", ids=kernel.ids)


def validate(chain: MarkovChain, tol: float = DEFAULT_AUDIT_TOL) -> ChainReport:
    """Audit row sums, stationarity and detailed balance in the max norm."""
    q, p = chain.q, chain.p
    row_dev = np.abs(q.sum(axis=1) - 1.0)
    worst = int(np.argmax(row_dev))
    stationarity = float(np.max(np.abs(p @ q - p)))
    flux = p[:, None] * q
    balance = float(np.max(np.abs(flux - flux.T)))
    col_dev = float(np.max(np.abs(q.sum(axis=0) - 1.0)))
    symmetry = float(np.max(np.abs(q - q.T)))
    min_entry = float(q.min())

    passed = bool(
        row_dev[worst] <= tol
        and stationarity <= tol
        and min_entry >= 0
        and (balance <= tol or not chain.reversible)
    )
    report = ChainReport(
        row_sum_deviation=float(row_dev[worst]),
        worst_row=worst,
        stationarity_residual=stationarity,
        detailed_balance_residual=balance,
        min_entry=min_entry,
        column_sum_deviation=col_dev,
        symmetry_residual=symmetry,
        tol=tol,
        passed=passed,
        worst_row_id=chain.ids[worst] if chain.ids is not None else None,
    )
    if not passed:
        logger.warning(
            "validate/%s: audit failed (row %.3g, stationarity %.3g, balance %.3g, tol %.1g)",
            chain.provenance, report.row_sum_deviation, stationarity, balance, tol,
        )
    return report


def _check_square(chain: MarkovChain, r: np.ndarray, name: str) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != chain.q.shape:
        raise InputError(f"{name} has shape {r.shape}, chain has {chain.q.shape}")
    return r


def path_average(chain: MarkovChain, r) -> float:
    """Stationary path-ensemble average of a per-step observable r[a][b]."""
    r = _check_square(chain, r, "observable")
    return float(np.sum(chain.p[:, None] * chain.q * r))


def mean_squared_step(chain: MarkovChain, d) -> float:
    d = _check_square(chain, d, "distance matrix")
    return path_average(chain, d ** 2)


def entropy_rate(chain: MarkovChain) -> float:
    return float(-np.sum(chain.p[:, None] * xlogy(chain.q, chain.q)))


def kl_divergence_rate(chain: MarkovChain, prior: MarkovChain) -> float:
    k = _check_square(chain, prior.q, "prior transition matrix")
    q = chain.q
    if np.any((q > 0) & (k <= 0)):
        return float("inf")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(q > 0, q * np.log(q / np.where(k > 0, k, 1.0)), 0.0)
    return float(np.sum(chain.p[:, None] * terms))


def stationary_distribution(q) -> np.ndarray:
    """Left eigenvector of a row-stochastic matrix for its eigenvalue closest to 1."""
    q = np.asarray(q, dtype=float)
    w, vl = scipy.linalg.eig(q, left=True, right=False)
    top = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(vl[:, top])
    pi = pi / pi.sum()
    return np.abs(pi)


def sample_trajectory(
    chain: MarkovChain, n_steps: int, seed: int | None = None, start: int | None = None,
) -> np.ndarray:
    """Simulate `n_steps` transitions; the start is drawn from `p` unless given."""
    rng = np.random.default_rng(seed)
    cumulative = np.cumsum(chain.q, axis=1)
    cumulative[:, -1] = 1.0
    states = np.empty(n_steps + 1, dtype=np.int64)
    states[0] = rng.choice(chain.size, p=chain.p / chain.p.sum()) if start is None else start
    draws = rng.random(n_steps)
    for t in range(n_steps):
        states[t + 1] = np.searchsorted(cumulative[states[t]], draws[t], side="right")
    return states
