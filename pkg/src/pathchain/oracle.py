"""Brute-force references for tiny chains.

Reversible chains are parameterized by the symmetric edge measure
mu_ab = p_a q_ab: any symmetric nonnegative mu summing to one is a detailed-
balanced chain with p = mu 1 and q = mu / p. The objective

    S(q, p) - lam * sum_ab p_a q_ab d2_ab,   lam = 1 / (2 eps^2)

is maximized numerically without going through any Perron or scaling solve, so
agreement with the closed forms in `pathchain.maxent` is a real check.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, root
from scipy.special import softmax, xlogy

from pathchain.chains import MarkovChain, entropy_rate, path_average
from pathchain.errors import InputError, ParameterError
from pathchain.geometry import KernelMatrix
from pathchain.maxent import pnmc_prescribed
from pathchain.targets import custom_target

logger = logging.getLogger(__name__)

MAX_ORACLE_SIZE = 4
DEFAULT_RESTARTS = 50


@dataclass(frozen=True)
class ChainObjective:
    epsilon: float
    d2: np.ndarray
    fixed_p: np.ndarray | None = None

    def __post_init__(self):
        d2 = np.asarray(self.d2, dtype=float)
        if d2.ndim != 2 or d2.shape[0] != d2.shape[1]:
            raise InputError(f"cost matrix must be square, got shape {d2.shape}")
        if not np.allclose(d2, d2.T, rtol=0, atol=1e-12) or np.any(d2 < 0) or np.any(np.diag(d2) != 0):
            raise InputError("cost matrix must be symmetric, nonnegative, with zero diagonal")
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        object.__setattr__(self, "d2", d2)
        if self.fixed_p is not None:
            p = np.asarray(self.fixed_p, dtype=float)
            if p.shape != (d2.shape[0],) or not np.all(np.isfinite(p)) or np.any(p <= 0):
                raise InputError("fixed stationary distribution must be strictly positive")
            object.__setattr__(self, "fixed_p", p / p.sum())

    @property
    def size(self) -> int:
        return self.d2.shape[0]

    @property
    def multiplier(self) -> float:
        """1 / (2 eps^2); zero in the infinite-bandwidth limit."""
        return 0.0 if math.isinf(self.epsilon) else 1.0 / (2 * self.epsilon ** 2)


@dataclass(frozen=True)
class OracleResult:
    chain: MarkovChain
    objective: float
    restarts: int


@dataclass(frozen=True)
class LocalMaxentCheck:
    q: np.ndarray
    numerical: np.ndarray
    deviation: float


def chain_objective(chain: MarkovChain, obj: ChainObjective) -> float:
    return entropy_rate(chain) - obj.multiplier * path_average(chain, obj.d2)


def _measure_objective(mu: np.ndarray, d2: np.ndarray, lam: float) -> float:
    p = mu.sum(axis=1)
    return float(-np.sum(xlogy(mu, mu)) + np.sum(xlogy(p, p)) - lam * np.sum(mu * d2))


def _chain_from_measure(mu: np.ndarray) -> MarkovChain:
    mu = (mu + mu.T) / 2
    p = mu.sum(axis=1)
    return MarkovChain(mu / p[:, None], p, reversible=True, provenance="oracle")


def _upper_rows(n: int, iu) -> np.ndarray:
    """Incidence of upper-triangle measure entries on the row sums of mu."""
    rows = np.zeros((n, iu[0].size))
    for k, (a, b) in enumerate(zip(*iu)):
        rows[a, k] += 1.0
        if a != b:
            rows[b, k] += 1.0
    return rows


def _measure(n: int, iu, x: np.ndarray) -> np.ndarray:
    mu = np.zeros((n, n))
    mu[iu] = np.exp(x)
    mu[iu[1], iu[0]] = np.exp(x)
    return mu


def _free_restart(obj: ChainObjective, w0: np.ndarray, tol: float) -> np.ndarray:
    """SLSQP on the log of the upper-triangle measure with total mass one, then a Newton polish."""
    n = obj.size
    iu = np.triu_indices(n)
    mult = np.where(iu[0] == iu[1], 1.0, 2.0)
    lam = obj.multiplier
    d2 = obj.d2[iu]
    rows = _upper_rows(n, iu)

    def negative(x: np.ndarray) -> tuple[float, np.ndarray]:
        w = np.exp(x)
        p = rows @ w
        value = np.sum(mult * w * (x + lam * d2)) - np.sum(xlogy(p, p))
        grad = w * (mult * (x + lam * d2) - rows.T @ np.log(p))
        return float(value), grad

    constraint = {
        "type": "eq",
        "fun": lambda x: np.array([mult @ np.exp(x) - 1.0]),
        "jac": lambda x: (mult * np.exp(x))[None, :],
    }
    result = minimize(
        negative, np.log(w0), jac=True, method="SLSQP",
        constraints=[constraint], options={"ftol": tol, "maxiter": 5_000},
    )
    x = _polish_free(result.x, d2, lam, mult, rows)
    return _measure(n, iu, x)


def _polish_free(x: np.ndarray, d2: np.ndarray, lam: float, mult: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Newton solve of the free stationarity conditions from an approximate maximizer.

    At an interior maximum log mu_ab = (log p_a + log p_b) / 2 - lam d2_ab - nu
    for every edge, with nu the multiplier of the total mass.
    """

    def conditions(z: np.ndarray) -> np.ndarray:
        x, nu = z[:-1], z[-1]
        w = np.exp(x)
        log_p = np.log(rows @ w)
        return np.concatenate([(rows.T @ log_p) / mult - x - lam * d2 - nu, [mult @ w - 1.0]])

    nu0 = float(np.mean(conditions(np.append(x, 0.0))[:-1]))
    result = root(conditions, np.append(x, nu0), method="hybr", options={"xtol": 1e-15})
    polished = result.x[:-1]
    if not np.all(np.isfinite(polished)) or np.max(np.abs(conditions(result.x))) > 1e-10:
        logger.debug("oracle: Newton polish rejected (%s)", result.message)
        return x
    return polished


def _fixed_restart(obj: ChainObjective, w0: np.ndarray, tol: float) -> np.ndarray:
    """SLSQP on the log of the upper-triangle measure with the row sums pinned to fixed_p."""
    n = obj.size
    iu = np.triu_indices(n)
    mult = np.where(iu[0] == iu[1], 1.0, 2.0)
    lam = obj.multiplier
    p = obj.fixed_p
    d2 = obj.d2[iu]
    rows = _upper_rows(n, iu)

    def negative(x: np.ndarray) -> tuple[float, np.ndarray]:
        # p is fixed, so the sum p log p term is a constant and drops out
        w = np.exp(x)
        value = np.sum(mult * w * (x + lam * d2))
        grad = mult * w * (x + 1.0 + lam * d2)
        return float(value), grad

    constraint = {
        "type": "eq",
        "fun": lambda x: rows @ np.exp(x) - p,
        "jac": lambda x: rows * np.exp(x)[None, :],
    }
    result = minimize(
        negative, np.log(w0), jac=True, method="SLSQP",
        constraints=[constraint], options={"ftol": tol, "maxiter": 5_000},
    )
    return _measure(n, iu, result.x)


def maximize_objective(
    obj: ChainObjective, restarts: int = DEFAULT_RESTARTS, tol: float = 1e-14, seed: int = 0,
) -> OracleResult:
    """Best reversible chain over `restarts` random starts (N <= 4 only)."""
    n = obj.size
    if n > MAX_ORACLE_SIZE:
        raise ParameterError(f"the oracle is limited to N <= {MAX_ORACLE_SIZE}, got {n}")
    if restarts < 1:
        raise ParameterError("restarts must be at least 1")
    rng = np.random.default_rng(seed)
    solve = _free_restart if obj.fixed_p is None else _fixed_restart

    # SLSQP's Fortran core is not re-entrant, so restarts run one after another
    measures = []
    for _ in range(restarts):
        mu = rng.uniform(0.5, 1.5, size=(n, n))
        mu = (mu + mu.T) / 2
        measures.append(solve(obj, mu[np.triu_indices(n)] / mu.sum(), tol))

    lam = obj.multiplier
    best = max(measures, key=lambda mu: _measure_objective(mu, obj.d2, lam))
    chain = _chain_from_measure(best)
    value = chain_objective(chain, obj)
    logger.debug("oracle: N=%d best objective %.12g over %d restarts", n, value, restarts)
    return OracleResult(chain=chain, objective=value, restarts=restarts)


def local_maxent_check(d2_row, epsilon: float, tol: float = 1e-14) -> LocalMaxentCheck:
    """Single-step maximum entropy row under a mean squared-distance multiplier.

    The closed form q_b proportional to exp(-d2_b / 2 eps^2) is compared with a
    constrained maximization of -sum q log q - sum q d2 / 2 eps^2 over the
    simplex (SLSQP in log q), finished by a Newton solve of the stationarity
    conditions log q_b + d2_b / 2 eps^2 + nu = 0, sum q = 1.
    """
    d2 = np.asarray(d2_row, dtype=float)
    if d2.ndim != 1 or d2.size < 1 or not np.all(np.isfinite(d2)):
        raise InputError("distance row must be a finite 1-D array")
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    lam = 1.0 / (2 * epsilon ** 2)
    analytic = softmax(-lam * d2)
    if d2.size == 1:
        return LocalMaxentCheck(q=analytic, numerical=np.ones(1), deviation=0.0)

    def negative(x: np.ndarray) -> tuple[float, np.ndarray]:
        q = np.exp(x)
        return float(np.sum(q * (x + lam * d2))), q * (x + 1.0 + lam * d2)

    constraint = {
        "type": "eq",
        "fun": lambda x: np.array([np.exp(x).sum() - 1.0]),
        "jac": lambda x: np.exp(x)[None, :],
    }
    start = np.full(d2.size, -math.log(d2.size))
    result = minimize(
        negative, start, jac=True, method="SLSQP", constraints=[constraint],
        options={"ftol": tol, "maxiter": 5_000},
    )

    def conditions(z: np.ndarray) -> np.ndarray:
        x, nu = z[:-1], z[-1]
        return np.concatenate([x + lam * d2 + nu, [np.exp(x).sum() - 1.0]])

    x0 = result.x
    solved = root(conditions, np.append(x0, -np.mean(x0 + lam * d2)), method="hybr", options={"xtol": tol})
    if np.max(np.abs(conditions(solved.x))) > 1e-12:
        logger.warning("local maxent solve: %s", solved.message)
    numerical = np.exp(solved.x[:-1])
    deviation = float(np.max(np.abs(numerical - analytic)))
    return LocalMaxentCheck(q=analytic, numerical=numerical, deviation=deviation)


def sample_feasible_chains(
    n: int, count: int, seed: int = 0, fixed_p=None,
) -> list[MarkovChain]:
    """Random reversible chains; with `fixed_p` their stationary vector is exactly fixed_p."""
    rng = np.random.default_rng(seed)
    chains = []
    for _ in range(count):
        w = rng.uniform(0.05, 1.0, size=(n, n))
        w = (w + w.T) / 2
        if fixed_p is None:
            chains.append(_chain_from_measure(w / w.sum()))
        else:
            kernel = KernelMatrix(w, "random")
            chains.append(pnmc_prescribed(kernel, custom_target(fixed_p), tol=1e-13))
    return chains
