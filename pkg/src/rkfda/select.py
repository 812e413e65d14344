"""Greedy variable selection maximizing the squared Mahalanobis separation.

At each step the search adds the admissible grid time that maximizes

    psi_hat(t_1, ..., t_k) = mhat^T Chat^{-1} mhat

over candidates at least ``delta`` away from every point already chosen,
where mhat is the estimated class mean difference at the points and Chat is
either the pooled sample covariance (empirical mode) or an analytic kernel
Gram (oracle mode).  The first step reduces to maximizing the pointwise
signal-to-noise ratio mhat(t)^2 / var_hat(t).

Candidates whose covariance submatrix stays singular after ridge escalation
are skipped, which keeps the scan alive near coincident or degenerate points
(e.g. a pinned endpoint with zero variance).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, LabeledDataset, SelectionResult, SingularMatrixError
from .estimate import ClassMoments, class_moments, pooled_cov
from .kernels import DEFAULT_RIDGE, KernelSpec, RidgePolicy, gram, mahalanobis_psi

__all__ = [
    "SelectionConfig",
    "OracleSource",
    "oracle_source",
    "oracle_source_from_dataset",
    "oracle_gram_provider",
    "psi_hat",
    "greedy_select",
]


@dataclass(frozen=True, eq=False)
class SelectionConfig:
    """Knobs of the greedy search.

    ``delta`` is the minimum time separation between selected points and
    defaults to one grid step, the smallest value that keeps grid points
    distinct.  ``candidate_mask`` restricts the search to a subset of grid
    indices (useful to exclude degenerate endpoints).  The search stops at
    ``d_max`` points or when the best candidate improves the score by less
    than ``rel_tol`` relative to its current level.
    """

    d_max: int
    delta: float | None = None
    ridge_policy: RidgePolicy = DEFAULT_RIDGE
    candidate_mask: np.ndarray | None = None
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.d_max < 1:
            raise ValueError("d_max must be at least 1")
        if self.delta is not None and self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True, eq=False)
class OracleSource:
    """Selection inputs when the covariance (and possibly the mean) is known.

    ``mean_diff`` holds the class mean difference m1 - m0 on the grid; use
    :func:`oracle_source_from_dataset` to estimate it from data while keeping
    the analytic covariance.
    """

    kernel: KernelSpec
    grid: Grid
    mean_diff: np.ndarray


def oracle_source(kernel: KernelSpec, grid: Grid, mean_diff) -> OracleSource:
    if callable(mean_diff):
        values = np.asarray([mean_diff(t) for t in grid.points], dtype=float)
    else:
        values = np.asarray(mean_diff, dtype=float)
    if values.shape != (grid.count,):
        raise ValueError("mean_diff must provide one value per grid point")
    return OracleSource(kernel=kernel, grid=grid, mean_diff=values)


def oracle_source_from_dataset(dataset: LabeledDataset, kernel: KernelSpec) -> OracleSource:
    """Analytic covariance with the mean difference estimated from the sample."""
    return oracle_source(kernel, dataset.grid, class_moments(dataset).diff)


def oracle_gram_provider(kernel: KernelSpec):
    """Covariance provider evaluating analytic Grams instead of the pooled estimate."""
    return lambda points: gram(kernel, points)


def psi_hat(points, moments: ClassMoments, cov, policy: RidgePolicy = DEFAULT_RIDGE) -> float:
    """Estimated squared Mahalanobis separation at the given grid times."""
    idx = moments.grid.indices_of(points)
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (idx.size, idx.size):
        raise ValueError("covariance must match the number of points")
    return mahalanobis_psi(moments.diff_at(idx), cov, policy)


def _materialize(source) -> tuple[Grid, np.ndarray, np.ndarray]:
    """Full-grid mean difference and covariance for the greedy scan."""
    if isinstance(source, OracleSource):
        return source.grid, source.mean_diff, gram(source.kernel, source.grid.points)
    if isinstance(source, LabeledDataset):
        moments = class_moments(source)
        return source.grid, moments.diff, pooled_cov(source)
    raise TypeError("source must be a LabeledDataset or an OracleSource")


def greedy_select(source, config: SelectionConfig) -> SelectionResult:
    """Forward selection of grid times, one per step, in selection order.

    Ties in the score go to the smallest time.  Raises ValueError when no
    admissible candidate exists at the first step; later steps simply stop.
    """
    grid, mean, cov = _materialize(source)
    if config.candidate_mask is not None:
        candidates = np.asarray(config.candidate_mask, dtype=int)
        if candidates.size == 0 or candidates.min() < 0 or candidates.max() >= grid.count:
            raise ValueError("candidate_mask must hold valid grid indices")
        candidates = np.unique(candidates)
    else:
        candidates = np.arange(grid.count)
    delta = grid.spacing if config.delta is None else float(config.delta)
    if delta < grid.spacing * (1.0 - 1e-9):
        raise ValueError("delta must be at least one grid step")
    sep_tol = delta - 1e-12 * max(1.0, delta)

    chosen: list[int] = []
    trace: list[float] = []
    prev_psi = 0.0
    for step in range(config.d_max):
        t_chosen = grid.points[chosen] if chosen else np.empty(0)
        best_idx = -1
        best_psi = -np.inf
        for i in candidates:
            if chosen and np.min(np.abs(grid.points[i] - t_chosen)) < sep_tol:
                continue
            idx = chosen + [i]
            try:
                psi = mahalanobis_psi(mean[idx], cov[np.ix_(idx, idx)], config.ridge_policy)
            except SingularMatrixError:
                continue
            if psi > best_psi:
                best_idx, best_psi = i, psi
        if best_idx < 0:
            if step == 0:
                raise ValueError("no admissible candidate point at the first step")
            break
        if step > 0 and best_psi - prev_psi < config.rel_tol * max(prev_psi, 1.0):
            break
        chosen.append(best_idx)
        trace.append(best_psi)
        prev_psi = best_psi
    return SelectionResult(
        points=grid.points[chosen], indices=np.array(chosen, dtype=int), psi_trace=trace
    )
