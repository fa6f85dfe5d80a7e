"""Diffusion-map coordinates of a reversible Markov chain."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from pathchain.chains import MarkovChain
from pathchain.errors import ContractError, ParameterError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray
    eigenvalues: np.ndarray
    residuals: np.ndarray
    psi: np.ndarray
    ids: tuple[str, ...] | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return self.coords.shape[1]

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "residuals": self.residuals.tolist(),
            "warnings": list(self.warnings),
        }


def diffusion_map(chain: MarkovChain, m: int = 2, tol: float = DEFAULT_TOL) -> Embedding:
    """First `m` non-trivial diffusion coordinates D_i = lambda_i psi_i.

    The symmetric conjugate S = P^1/2 q P^-1/2 is diagonalized; psi_i = P^-1/2 v_i
    are right eigenvectors of q, orthonormal in the p-weighted inner product.
    Each psi is oriented so that its largest-magnitude entry is positive.
    """
    n = chain.size
    if not 1 <= m <= n - 1:
        raise ParameterError(f"m must be in [1, {n - 1}], got {m}")
    if not chain.reversible:
        raise ContractError("diffusion maps need a reversible chain")
    p = chain.p
    if np.any(p <= 0):
        raise ContractError("diffusion maps need a strictly positive stationary distribution")

    root = np.sqrt(p)
    s = root[:, None] * chain.q / root[None, :]
    asymmetry = float(np.max(np.abs(s - s.T)))
    if asymmetry > tol:
        raise ContractError(f"chain violates detailed balance: conjugate asymmetry {asymmetry:.3g}")
    s = (s + s.T) / 2

    w, v = scipy.linalg.eigh(s)
    order = np.argsort(-w, kind="stable")[: m + 1]
    w, v = w[order], v[:, order]
    residuals = np.max(np.abs(s @ v - v * w[None, :]), axis=0)

    psi = v / root[:, None]
    for i in range(psi.shape[1]):
        if psi[np.argmax(np.abs(psi[:, i])), i] < 0:
            psi[:, i] = -psi[:, i]

    warnings = []
    if abs(w[0] - 1.0) > tol:
        warnings.append(f"leading eigenvalue {w[0]:.12g} differs from 1")
    gaps = np.flatnonzero(np.abs(np.diff(w)) <= tol)
    for i in gaps:
        warnings.append(f"eigenvalues {i} and {i + 1} are degenerate within {tol:g}")
    for message in warnings:
        logger.warning("embedding: %s", message)

    coords = w[None, 1:] * psi[:, 1:]
    return Embedding(
        coords=coords, eigenvalues=w, residuals=residuals, psi=psi,
        ids=chain.ids, warnings=warnings,
    )
