"""Path-entropy maximized Markov chains (PNMC).

Three constructions share one kernel:

* free stationary distribution: the chain is a Doob transform of the kernel
  by its Perron-Frobenius pair,
* prescribed stationary distribution `p`: q_ab = rho_a rho_b Delta(a,b) / p_a
  where rho solves the symmetric scaling equation R Delta R 1 = p,
* update of a prior chain k: the same two constructions applied to
  Delta*(a,b) = Delta(a,b) sqrt(k_ab k_ba), which minimizes the path
  Kullback-Leibler divergence to the prior instead of maximizing entropy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from pathchain.chains import MarkovChain
from pathchain.errors import ConvergenceError, DegenerateInputError, InputError, NumericalError, ParameterError
from pathchain.geometry import KERNEL_FLOOR, KernelMatrix
from pathchain.targets import StationaryTarget

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000

# Slack on the monotone log-residual check; the map is non-expansive so only
# rounding can make the residual grow.
_MONOTONE_SLACK = 1e-12


@dataclass(frozen=True)
class PerronPair:
    eta: float
    nu: np.ndarray
    residual: float
    iterations: int = 0
    method: str = "eigh"

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "residual": self.residual,
            "iterations": self.iterations,
            "method": self.method,
        }


@dataclass(frozen=True)
class ScalingVector:
    rho: np.ndarray
    residual: float
    relative_residual: float
    iterations: int
    history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "relative_residual": self.relative_residual,
            "iterations": self.iterations,
            "history": self.history,
        }


def _check_tol(tol: float) -> None:
    if not tol > 0:
        raise ParameterError(f"solver tolerance must be positive, got {tol}")


def _orient(nu: np.ndarray) -> np.ndarray:
    if nu[np.argmax(np.abs(nu))] < 0:
        nu = -nu
    return nu


def perron(
    kernel: KernelMatrix, tol: float = DEFAULT_TOL, method: str = "eigh", max_iter: int | None = None,
) -> PerronPair:
    """Perron-Frobenius eigenvalue and unit eigenvector of a positive symmetric kernel.

    "power" runs power iteration with a Rayleigh-quotient estimate and stops when
    ||Delta nu - eta nu||_inf <= tol * eta (cap 100 N iterations by default);
    "eigh" takes the top pair of a dense symmetric eigensolve, which stays
    accurate when the spectral gap is tiny.
    """
    _check_tol(tol)
    delta = kernel.delta
    n = kernel.size

    if method == "eigh":
        w, v = scipy.linalg.eigh(delta, subset_by_index=[n - 1, n - 1])
        eta = float(w[0])
        nu = _orient(v[:, 0])
        iterations = 1
    elif method == "power":
        cap = max_iter if max_iter is not None else 100 * n
        nu = np.full(n, 1.0 / math.sqrt(n))
        eta = float(nu @ delta @ nu)
        residual = float(np.max(np.abs(delta @ nu - eta * nu)))
        iterations = 0
        while residual > tol * eta:
            if iterations >= cap:
                raise ConvergenceError(
                    f"power iteration did not converge in {cap} iterations", residual=residual,
                )
            nu = delta @ nu
            nu /= np.linalg.norm(nu)
            eta = float(nu @ delta @ nu)
            residual = float(np.max(np.abs(delta @ nu - eta * nu)))
            iterations += 1
    else:
        raise ParameterError(f"unknown Perron method {method!r}")

    # Entries of a Perron vector are positive; sign noise on tiny entries is rounding.
    nu = np.abs(nu)
    nu /= np.linalg.norm(nu)
    if np.any(nu <= 0) or not np.all(np.isfinite(nu)):
        raise NumericalError("Perron vector has non-positive entries; kernel entries underflow")
    residual = float(np.max(np.abs(delta @ nu - eta * nu)))
    if residual > tol * eta:
        raise ConvergenceError(
            f"Perron residual {residual:.3g} exceeds {tol:.1g} * eta", residual=residual,
        )
    logger.debug("perron: eta=%.6g residual=%.3g via %s", eta, residual, method)
    return PerronPair(eta=eta, nu=nu, residual=residual, iterations=iterations, method=method)


def pnmc_free(
    kernel: KernelMatrix, tol: float = DEFAULT_TOL, method: str = "eigh", provenance: str = "pnmc_free",
) -> MarkovChain:
    pair = perron(kernel, tol=tol, method=method)
    return chain_from_perron(kernel, pair, provenance)


def chain_from_perron(kernel: KernelMatrix, pair: PerronPair, provenance: str) -> MarkovChain:
    """q_ab = nu_b Delta(a,b) / (eta nu_a) and p_a proportional to nu_a^2.

    Evaluated as the row-normalization of the kernel nu_a Delta(a,b) nu_b, where
    (Delta nu)_a stands in for eta nu_a; the two agree at the exact eigenpair,
    and this form keeps rows stochastic and detailed balance exact even where
    nu has tiny entries with large relative error.
    """
    nu = pair.nu
    flux = nu[:, None] * kernel.delta * nu[None, :]
    z = flux.sum(axis=1)
    q = flux / z[:, None]
    p = z / z.sum()
    return MarkovChain(q, p, reversible=True, provenance=provenance, ids=kernel.ids)


def sinkhorn_scale(
    kernel: KernelMatrix,
    target: StationaryTarget,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ScalingVector:
    """Solve R Delta R 1 = p for a positive diagonal R = diag(rho).

    Geometric-mean damped update rho <- sqrt(rho * p / (Delta rho)), started at
    rho_a = sqrt(p_a / sum_b Delta(a,b)). Stops when every row of the induced
    chain sums to one within `tol`, i.e. max |rho (Delta rho) / p - 1| <= tol,
    which also bounds the absolute marginal residual by `tol`.
    """
    _check_tol(tol)
    delta = kernel.delta
    p = target.p
    if p.shape != (kernel.size,):
        raise InputError(f"target has {p.size} entries for a {kernel.size}-point kernel")

    rho = np.sqrt(p / delta.sum(axis=1))
    history: list[float] = []
    best_log_residual = math.inf

    for iteration in range(max_iter + 1):
        marginal = rho * (delta @ rho)
        if not np.all(np.isfinite(marginal)) or np.any(rho <= 0):
            raise NumericalError(f"scaling vector left the positive orthant at iteration {iteration}")
        ratio = marginal / p
        residual = float(np.max(np.abs(marginal - p)))
        relative = float(np.max(np.abs(ratio - 1.0)))
        log_residual = float(np.max(np.abs(np.log(ratio))))
        history.append(residual)

        if log_residual > best_log_residual + _MONOTONE_SLACK:
            raise NumericalError(
                f"scaling residual increased at iteration {iteration}: "
                f"{log_residual:.3g} > {best_log_residual:.3g}; history tail {history[-5:]}"
            )
        best_log_residual = min(best_log_residual, log_residual)

        if relative <= tol:
            logger.info("sinkhorn: converged in %d iterations (residual %.3g)", iteration, residual)
            return ScalingVector(
                rho=rho, residual=residual, relative_residual=relative,
                iterations=iteration, history=history,
            )
        if iteration == max_iter:
            break
        rho = rho / np.sqrt(ratio)
        logger.debug("sinkhorn: iteration %d residual %.3g", iteration, residual)

    raise ConvergenceError(
        f"symmetric scaling did not converge in {max_iter} iterations", residual=residual, history=history,
    )


def pnmc_prescribed(
    kernel: KernelMatrix,
    target: StationaryTarget,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    provenance: str = "pnmc_prescribed",
) -> MarkovChain:
    scaling = sinkhorn_scale(kernel, target, tol=tol, max_iter=max_iter)
    return chain_from_scaling(kernel, target, scaling, provenance)


def chain_from_scaling(
    kernel: KernelMatrix, target: StationaryTarget, scaling: ScalingVector, provenance: str,
) -> MarkovChain:
    rho = scaling.rho
    q = np.outer(rho, rho) * kernel.delta / target.p[:, None]
    return MarkovChain(q, target.p, reversible=True, provenance=provenance, ids=kernel.ids)


def prior_kernel(kernel: KernelMatrix, prior: MarkovChain) -> KernelMatrix:
    """Delta*(a,b) = Delta(a,b) sqrt(k_ab k_ba), floored like any kernel."""
    k = prior.q
    if k.shape != kernel.delta.shape:
        raise InputError(f"prior has {prior.size} states for a {kernel.size}-point kernel")
    if np.any(k < 0):
        raise InputError("prior transition matrix has negative entries")
    weight = np.sqrt(k * k.T)
    empty = np.flatnonzero(~np.any(weight > 0, axis=1))
    if empty.size:
        a = int(empty[0])
        point_id = kernel.ids[a] if kernel.ids is not None else None
        raise DegenerateInputError(
            f"prior leaves state {a} with no reciprocated transitions", index=a, point_id=point_id,
        )
    delta = kernel.delta * weight
    np.maximum(delta, KERNEL_FLOOR, out=delta)
    meta = dict(kernel.meta, prior=prior.provenance)
    return KernelMatrix(
        delta, kernel.family, ids=kernel.ids, epsilon=kernel.epsilon,
        alpha=kernel.alpha, beta=kernel.beta, k=kernel.k, meta=meta,
    )


def pnmc_update_free(
    kernel: KernelMatrix, prior: MarkovChain, tol: float = DEFAULT_TOL, method: str = "eigh",
) -> MarkovChain:
    return pnmc_free(prior_kernel(kernel, prior), tol=tol, method=method, provenance="pnmc_update")


def pnmc_update_prescribed(
    kernel: KernelMatrix,
    prior: MarkovChain,
    target: StationaryTarget,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> MarkovChain:
    return pnmc_prescribed(
        prior_kernel(kernel, prior), target, tol=tol, max_iter=max_iter, provenance="pnmc_update",
    )
