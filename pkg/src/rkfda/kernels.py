"""Covariance kernels, Gram matrices, regularized SPD solves, eigensystems.

The analytic kernels are the classical ones for the processes simulated in
this package:

    Brownian motion          K(s, t) = min(s, t)
    Brownian bridge on [0,T] K(s, t) = min(s, t) - s*t/T
    Ornstein-Uhlenbeck       K(s, t) = sigma2 * exp(-theta * |s - t|)

``EmpiricalKernel`` wraps a covariance matrix estimated on a fixed grid, so
covariance eigendecompositions of sample data go through the same code path
as the analytic families.

All solves against covariance matrices route through :func:`solve_spd`, which
tries a plain Cholesky factorization first and escalates through a small,
explicit ridge before declaring the matrix singular.  The ridge actually used
is reported back to the caller.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
import scipy.linalg

from .core import Grid, SingularMatrixError, _frozen_array

logger = logging.getLogger(__name__)

__all__ = [
    "BrownianKernel",
    "BrownianBridgeKernel",
    "OrnsteinUhlenbeckKernel",
    "EmpiricalKernel",
    "KernelSpec",
    "kernel_eval",
    "gram",
    "RidgePolicy",
    "SpdSolution",
    "solve_spd",
    "mahalanobis_psi",
    "EigenSystem",
    "discretized_eigen",
]


@dataclass(frozen=True)
class BrownianKernel:
    """Standard Brownian motion covariance min(s, t)."""

    def pairwise(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        return np.minimum(s[:, None], t[None, :])


@dataclass(frozen=True)
class BrownianBridgeKernel:
    """Brownian bridge pinned to zero at 0 and at ``t_max``."""

    t_max: float = 1.0

    def pairwise(self, s, t):
        return np.minimum(s[:, None], t[None, :]) - s[:, None] * t[None, :] / self.t_max


@dataclass(frozen=True)
class OrnsteinUhlenbeckKernel:
    """Stationary Ornstein-Uhlenbeck covariance sigma2 * exp(-theta*|s-t|)."""

    theta: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if self.theta <= 0 or self.sigma2 <= 0:
            raise ValueError("theta and sigma2 must be positive")

    def pairwise(self, s, t):
        return self.sigma2 * np.exp(-self.theta * np.abs(s[:, None] - t[None, :]))


@dataclass(frozen=True, eq=False)
class EmpiricalKernel:
    """Covariance matrix given on a fixed grid; queries must hit grid points."""

    matrix: np.ndarray
    grid: Grid

    def __post_init__(self):
        m = _frozen_array(self.matrix)
        if m.shape != (self.grid.count, self.grid.count):
            raise ValueError("matrix shape must match the grid")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(m).max()))):
            raise ValueError("empirical covariance must be symmetric")
        object.__setattr__(self, "matrix", m)

    def pairwise(self, s, t):
        i = self.grid.indices_of(s)
        j = self.grid.indices_of(t)
        return self.matrix[np.ix_(i, j)]


KernelSpec = Union[
    BrownianKernel, BrownianBridgeKernel, OrnsteinUhlenbeckKernel, EmpiricalKernel
]


def kernel_eval(spec: KernelSpec, s: float, t: float) -> float:
    """Covariance value K(s, t)."""
    return float(spec.pairwise(np.atleast_1d(float(s)), np.atleast_1d(float(t)))[0, 0])


def gram(spec: KernelSpec, points) -> np.ndarray:
    """Covariance matrix with entry (i, j) = K(points[i], points[j]).

    Points must be distinct; the result is symmetrized to machine precision.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if pts.ndim != 1 or pts.size == 0:
        raise ValueError("points must be a nonempty 1-d sequence")
    if np.unique(pts).size != pts.size:
        raise ValueError("points must be distinct")
    k = spec.pairwise(pts, pts)
    return (k + k.T) / 2.0


@dataclass(frozen=True)
class RidgePolicy:
    """Diagonal regularization schedule for nearly singular covariances.

    First attempt is a plain Cholesky (ridge 0).  On failure the ridge is
    ``base_scale * trace / d`` and, once more on failure, that value times
    ``escalation``.  Anything still failing raises SingularMatrixError.
    """

    base_scale: float = 1e-8
    escalation: float = 100.0


DEFAULT_RIDGE = RidgePolicy()


class SpdSolution(NamedTuple):
    x: np.ndarray
    ridge: float


def _cho_factor(matrix: np.ndarray):
    try:
        return scipy.linalg.cho_factor(matrix, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError:
        return None


def solve_spd(matrix: np.ndarray, rhs: np.ndarray, policy: RidgePolicy = DEFAULT_RIDGE) -> SpdSolution:
    """Solve (matrix + ridge*I) x = rhs for a symmetric PSD-intended matrix.

    Returns the solution together with the ridge that was actually needed
    (0.0 when the plain factorization succeeds).
    """
    a = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if b.shape[0] != a.shape[0]:
        raise ValueError("rhs length must match matrix")
    d = a.shape[0]
    base = policy.base_scale * abs(float(np.trace(a))) / d
    for ridge in (0.0, base, base * policy.escalation):
        factor = _cho_factor(a if ridge == 0.0 else a + ridge * np.eye(d))
        if factor is not None:
            if ridge > 0.0:
                logger.debug("spd solve of order %d needed ridge %.3e", d, ridge)
            return SpdSolution(scipy.linalg.cho_solve(factor, b, check_finite=False), ridge)
    raise SingularMatrixError(f"covariance matrix of order {d} is numerically singular")


def mahalanobis_psi(mean_vec, gram_matrix, policy: RidgePolicy = DEFAULT_RIDGE) -> float:
    """Squared Mahalanobis separation m^T K^{-1} m; nonnegative.

    Propagates SingularMatrixError when the matrix cannot be factorized.
    """
    m = np.asarray(mean_vec, dtype=float)
    x, _ = solve_spd(gram_matrix, m, policy)
    return max(float(m @ x), 0.0)


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Discretized eigendecomposition of a covariance function on a grid.

    ``eigenvalues`` are sorted in nonincreasing order, clipped at zero.
    ``eigenfunctions[j]`` is the j-th eigenfunction sampled on the grid;
    the family is orthonormal under the quadrature weight ``grid.spacing``.
    """

    grid: Grid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _frozen_array(self.eigenvalues))
        object.__setattr__(self, "eigenfunctions", _frozen_array(self.eigenfunctions))

    def truncated_kernel(self, order: int) -> np.ndarray:
        """Rank-``order`` reconstruction sum_{j<order} theta_j phi_j phi_j^T."""
        lam = self.eigenvalues[:order]
        v = self.eigenfunctions[:order]
        return (v.T * lam) @ v


def discretized_eigen(spec: KernelSpec, grid: Grid) -> EigenSystem:
    """Eigensystem of the covariance operator discretized on ``grid``.

    The integral operator is approximated by the Gram matrix scaled by the
    grid spacing; eigenvectors are rescaled by 1/sqrt(spacing) so that the
    eigenfunctions are orthonormal under quadrature.  Signs are fixed so
    each eigenfunction is positive at its first nonnegligible grid entry.
    """
    dt = grid.spacing
    k = gram(spec, grid.points) * dt
    w, v = scipy.linalg.eigh(k, check_finite=False)
    order = np.argsort(w)[::-1]
    w = np.clip(w[order], 0.0, None)
    phi = v[:, order].T / np.sqrt(dt)
    for row in phi:
        nz = np.nonzero(np.abs(row) > 1e-12 * np.abs(row).max())[0]
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return EigenSystem(grid=grid, eigenvalues=w, eigenfunctions=phi)
