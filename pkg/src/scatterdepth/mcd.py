"""Minimum covariance determinant scatter estimation (FastMCD style).

Random elemental starts are grown into h-point subsets and improved by
concentration steps (recompute Mahalanobis distances, keep the h closest,
refit) until the determinant stops decreasing; the best subset over all
starts wins.  The returned scatter is the subset covariance rescaled so the
median squared Mahalanobis distance of the full sample matches the chi-square
median, which calibrates the estimate at elliptical models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .data import Dataset
from .spd import SpdMatrix

__all__ = ["McdFit", "fast_mcd", "default_subset_size"]

_DET_RTOL = 1e-12
_MAX_C_STEPS = 60


@dataclass(frozen=True)
class McdFit:
    """Result of a minimum covariance determinant fit.

    ``raw_scatter`` is the covariance of the selected h-subset multiplied by
    ``consistency_factor``; dividing it back recovers the plain subset
    covariance.
    """

    subset_indices: np.ndarray
    raw_scatter: SpdMatrix
    location: np.ndarray
    consistency_factor: float

    @property
    def h(self) -> int:
        return self.subset_indices.size


def default_subset_size(n: int, k: int) -> int:
    return (n + k + 1) // 2


def _subset_fit(obs: np.ndarray, idx: np.ndarray):
    sub = obs[idx]
    mean = sub.mean(axis=0)
    centered = sub - mean
    cov = centered.T @ centered / (idx.size - 1)
    return mean, cov


def _log_det(cov: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        return -np.inf
    return float(logdet)


def _mahalanobis_sq(obs: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    centered = obs - mean
    solved = np.linalg.solve(cov, centered.T).T
    return np.einsum("ij,ij->i", centered, solved)


def fast_mcd(
    data: Dataset,
    h: int | None = None,
    n_starts: int = 40,
    seed: int = 0,
) -> McdFit:
    """Minimum covariance determinant fit of the sample.

    Parameters
    ----------
    data : Dataset
        Observations, n must exceed k.
    h : int, optional
        Subset size, defaulting to floor((n + k + 1) / 2); must lie in
        [floor((n + k + 1) / 2), n].
    n_starts : int
        Number of random elemental starts.
    seed : int
        Seeds the start subsets, making the fit reproducible.

    Raises
    ------
    ValueError
        If ``h`` is out of range or every start hits a singular subset
        covariance.
    """
    obs = data.obs
    n, k = data.n, data.k
    if n <= k:
        raise ValueError("need more observations than dimensions")
    h_min = default_subset_size(n, k)
    if h is None:
        h = h_min
    if not h_min <= h <= n:
        raise ValueError(f"subset size must lie in [{h_min}, {n}], got {h}")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    best: tuple[float, tuple, np.ndarray, np.ndarray, np.ndarray] | None = None

    if h == n:
        start_sets = [np.arange(n)]
    else:
        start_sets = []
        for _ in range(max(1, n_starts)):
            start_sets.append(np.sort(rng.choice(n, size=k + 1, replace=False)))

    for start in start_sets:
        idx = np.array(start)
        # Grow an elemental start until its covariance is invertible.
        mean, cov = _subset_fit(obs, idx)
        grow_guard = 0
        while _log_det(cov) == -np.inf and idx.size < n:
            pool = np.setdiff1d(np.arange(n), idx)
            idx = np.sort(np.append(idx, rng.choice(pool)))
            mean, cov = _subset_fit(obs, idx)
            grow_guard += 1
            if grow_guard > n:
                break
        if _log_det(cov) == -np.inf:
            continue

        logdet = np.inf
        for _ in range(_MAX_C_STEPS):
            dist = _mahalanobis_sq(obs, mean, cov)
            order = np.argsort(dist, kind="stable")
            idx = np.sort(order[:h])
            mean, cov = _subset_fit(obs, idx)
            new_logdet = _log_det(cov)
            if new_logdet == -np.inf:
                break
            if logdet - new_logdet < _DET_RTOL * max(1.0, abs(logdet)):
                logdet = new_logdet
                break
            logdet = new_logdet
        if logdet == -np.inf or not np.isfinite(logdet):
            continue
        key = (logdet, tuple(idx.tolist()))
        if best is None or key < (best[0], best[1]):
            best = (logdet, key[1], idx, mean, cov)

    if best is None:
        raise ValueError("all starts produced singular subset covariances")

    _, _, idx, mean, cov = best
    dist = _mahalanobis_sq(obs, mean, cov)
    factor = float(np.median(dist)) / float(chi2.ppf(0.5, df=k))
    if factor <= 0.0:
        factor = 1.0
    return McdFit(
        subset_indices=idx,
        raw_scatter=SpdMatrix(factor * cov),
        location=mean,
        consistency_factor=factor,
    )
