"""Empirical halfspace depth of scatter and concentration matrices.

Every depth here is the minimum over projection directions ``u`` of the
smaller of the two slab probabilities ``#{|u'(x - T)| <= sqrt(u' S u)}/n``
and ``#{|u'(x - T)| >= sqrt(u' S u)}/n``.  Observations landing exactly on a
slab boundary count in both probabilities (both inequalities are non-strict),
which keeps empirical values exact multiples of 1/n.  Direction evaluations
are independent, and the reduction is an exact integer-count minimum, so
results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import (
    Dataset,
    DirectionBudget,
    DirectionScheme,
    LocationSpec,
    generate_directions,
    tukey_median,
    _candidate_scale,
    _nelder_mead,
)
from .spd import SpdMatrix

__all__ = [
    "Side",
    "DepthEvaluation",
    "ScatterDepthEvaluator",
    "ExactScatterDepth2D",
    "make_evaluator",
    "scatter_depth",
    "concentration_depth",
    "scatter_depth_sup_location",
    "pairwise_difference_depth",
    "region_contains",
]

# Storage block target for the |projection| table, in elements.
_BLOCK_ELEMENTS = 4_000_000


class Side(Enum):
    INNER = "inner"
    OUTER = "outer"


@dataclass(frozen=True)
class DepthEvaluation:
    """Depth value, the direction attaining it, and which slab side bound."""

    value: float
    argmin_direction: np.ndarray
    binding_side: Side
    n_directions_used: int


def _as_entries(sigma) -> np.ndarray:
    if isinstance(sigma, SpdMatrix):
        return sigma.entries
    return SpdMatrix(sigma).entries


class ScatterDepthEvaluator:
    """Sampled-direction depth engine bound to one sample, center and direction set.

    Precomputes the absolute projections of the centered observations on each
    direction once, so that evaluating many candidate matrices (along paths,
    scale profiles or during search) costs one quadratic form and one count
    per direction.  The sampled estimate is an upper bound of the true depth;
    ``n_directions_used`` is reported so callers can tighten it.
    """

    def __init__(
        self,
        data: Dataset,
        location: LocationSpec,
        dirs: DirectionBudget | np.ndarray,
    ):
        self.data = data
        self.center = location.resolve(data, dirs)
        self.directions = generate_directions(dirs, data.k)
        centered = data.obs - self.center[None, :]
        n_total = self.directions.shape[0]
        block = max(1, min(n_total, _BLOCK_ELEMENTS // max(1, data.n)))
        self._blocks: list[np.ndarray] = []
        self._block_dirs: list[np.ndarray] = []
        for start in range(0, n_total, block):
            u = self.directions[start : start + block]
            self._blocks.append(np.abs(centered @ u.T))
            self._block_dirs.append(u)

    @property
    def n_directions(self) -> int:
        return self.directions.shape[0]

    def per_direction_counts(self, sigma) -> tuple[np.ndarray, np.ndarray]:
        """Inner and outer slab counts for every direction."""
        entries = _as_entries(sigma)
        if entries.shape[0] != self.data.k:
            raise ValueError("matrix dimension does not match the data")
        inner_parts = []
        outer_parts = []
        for proj, u in zip(self._blocks, self._block_dirs):
            thr = np.sqrt(np.einsum("ij,jk,ik->i", u, entries, u))
            inner_parts.append(np.count_nonzero(proj <= thr[None, :], axis=0))
            outer_parts.append(np.count_nonzero(proj >= thr[None, :], axis=0))
        return np.concatenate(inner_parts), np.concatenate(outer_parts)

    def value(self, sigma) -> float:
        inner, outer = self.per_direction_counts(sigma)
        return float(np.minimum(inner, outer).min()) / self.data.n

    def scale_knots(self, entries: np.ndarray, lo: float, hi: float, cap: int = 2048) -> np.ndarray:
        """Scales in [lo, hi] where the depth along the ray {s * entries} can jump.

        The per-direction counts change only where some |u'(x - T)| equals
        sqrt(s u' entries u); the corresponding knot scales are
        (u'(x - T))^2 / (u' entries u).  The profile supremum along the ray is
        always attained at one of these knots.  At most ``cap`` distinct knots
        are returned (an evenly strided subset beyond that).
        """
        found: list[np.ndarray] = []
        budget_per_block = max(1, 8 * cap // max(1, len(self._blocks)))
        for proj, u in zip(self._blocks, self._block_dirs):
            qf = np.einsum("ij,jk,ik->i", u, entries, u)
            knots = (proj * proj) / qf[None, :]
            inside = knots[(knots >= lo) & (knots <= hi)]
            if inside.size > budget_per_block:
                inside = np.sort(inside)[:: inside.size // budget_per_block]
            if inside.size:
                found.append(np.unique(inside))
        if not found:
            return np.empty(0)
        merged = np.unique(np.concatenate(found))
        if merged.size > cap:
            idx = np.unique(np.linspace(0, merged.size - 1, cap).round().astype(int))
            merged = merged[idx]
        return merged

    def evaluate(self, sigma) -> DepthEvaluation:
        inner, outer = self.per_direction_counts(sigma)
        objective = np.minimum(inner, outer)
        idx = int(objective.argmin())
        side = Side.INNER if inner[idx] <= outer[idx] else Side.OUTER
        return DepthEvaluation(
            value=float(objective[idx]) / self.data.n,
            argmin_direction=self.directions[idx].copy(),
            binding_side=side,
            n_directions_used=self.n_directions,
        )


class ExactScatterDepth2D:
    """Exact bivariate depth via critical-angle enumeration.

    For a direction ``u(phi) = (cos phi, sin phi)`` the per-direction counts
    change only where ``u'((x_i - T)(x_i - T)' - S)u = 0``.  Each observation
    contributes a binary quadratic in ``tan phi``, solved in closed form; the
    objective is evaluated at every root and at the midpoints of consecutive
    arcs, whose minimum is the true infimum over the sphere.
    """

    def __init__(
        self,
        data: Dataset,
        location: LocationSpec,
        dirs: DirectionBudget | np.ndarray | None = None,
    ):
        if data.k != 2:
            raise ValueError("exact enumeration requires bivariate data")
        if dirs is None:
            dirs = DirectionBudget(count=1, scheme=DirectionScheme.ANTIPODAL)
        self.data = data
        self.center = location.resolve(data, dirs)
        self._centered = data.obs - self.center[None, :]
        self.last_n_angles = 0

    def _critical_angles(self, entries: np.ndarray) -> np.ndarray:
        angles = [0.0]
        y = self._centered
        # Coefficients of u'Mu with M = y y' - Sigma, in (cos, sin) terms.
        a = y[:, 0] ** 2 - entries[0, 0]
        b = y[:, 0] * y[:, 1] - entries[0, 1]
        c = y[:, 1] ** 2 - entries[1, 1]
        for ai, bi, ci in zip(a, b, c):
            if ci != 0.0:
                disc = bi * bi - ai * ci
                if disc < 0.0:
                    continue
                root = np.sqrt(disc)
                for tan_phi in ((-bi + root) / ci, (-bi - root) / ci):
                    angles.append(np.arctan(tan_phi) % np.pi)
            else:
                # u = (0, 1) solves c = 0 directly; the linear branch covers
                # the remaining root when b is nonzero.
                angles.append(0.5 * np.pi)
                if bi != 0.0:
                    angles.append(np.arctan(-ai / (2.0 * bi)) % np.pi)
                elif ai == 0.0:
                    continue
        out = np.unique(np.round(np.asarray(angles, dtype=float), 12))
        return out

    def per_angle_counts(self, sigma) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        entries = _as_entries(sigma)
        if entries.shape != (2, 2):
            raise ValueError("matrix dimension does not match the data")
        angles = self._critical_angles(entries)
        gaps = np.diff(np.concatenate([angles, [angles[0] + np.pi]]))
        eval_angles = np.concatenate([angles, angles + 0.5 * gaps])
        n = self.data.n
        block = max(1, _BLOCK_ELEMENTS // n)
        inner_parts = []
        outer_parts = []
        for start in range(0, eval_angles.size, block):
            phis = eval_angles[start : start + block]
            u = np.column_stack([np.cos(phis), np.sin(phis)])
            proj = np.abs(self._centered @ u.T)
            thr = np.sqrt(np.einsum("ij,jk,ik->i", u, entries, u))
            inner_parts.append(np.count_nonzero(proj <= thr[None, :], axis=0))
            outer_parts.append(np.count_nonzero(proj >= thr[None, :], axis=0))
        return eval_angles, np.concatenate(inner_parts), np.concatenate(outer_parts)

    def value(self, sigma) -> float:
        _, inner, outer = self.per_angle_counts(sigma)
        return float(np.minimum(inner, outer).min()) / self.data.n

    def evaluate(self, sigma) -> DepthEvaluation:
        angles, inner, outer = self.per_angle_counts(sigma)
        objective = np.minimum(inner, outer)
        idx = int(objective.argmin())
        side = Side.INNER if inner[idx] <= outer[idx] else Side.OUTER
        self.last_n_angles = angles.size
        return DepthEvaluation(
            value=float(objective[idx]) / self.data.n,
            argmin_direction=np.array([np.cos(angles[idx]), np.sin(angles[idx])]),
            binding_side=side,
            n_directions_used=angles.size,
        )


def make_evaluator(
    data: Dataset,
    location: LocationSpec,
    dirs: DirectionBudget | np.ndarray,
):
    """Build the sampled or exact evaluator implied by the budget."""
    if isinstance(dirs, DirectionBudget) and dirs.scheme is DirectionScheme.EXACT_2D:
        return ExactScatterDepth2D(data, location)
    return ScatterDepthEvaluator(data, location, dirs)


def scatter_depth(
    data: Dataset,
    location: LocationSpec,
    sigma,
    dirs: DirectionBudget | np.ndarray,
) -> DepthEvaluation:
    """Halfspace depth of the scatter matrix ``sigma`` in the sample."""
    return make_evaluator(data, location, dirs).evaluate(sigma)


def concentration_depth(
    data: Dataset,
    location: LocationSpec,
    gamma,
    dirs: DirectionBudget | np.ndarray,
) -> DepthEvaluation:
    """Halfspace depth of the concentration matrix ``gamma``.

    Definitional identity: the depth of an inverse-scatter matrix is the
    scatter depth of its inverse.
    """
    gamma = gamma if isinstance(gamma, SpdMatrix) else SpdMatrix(gamma)
    return scatter_depth(data, location, gamma.inverse(), dirs)


def scatter_depth_sup_location(
    data: Dataset,
    sigma,
    dirs: DirectionBudget | np.ndarray,
    theta_budget: int = 32,
) -> DepthEvaluation:
    """Scatter depth maximized over the centering point.

    Runs the fixed-location depth over a candidate set (the halfspace median,
    the coordinatewise median, then sample points, capped at ``theta_budget``
    candidates) with Nelder-Mead refinements from the five deepest ones, and
    returns the best evaluation found, a lower bound of the true supremum.
    With ``theta_budget == 1`` only the halfspace median is evaluated.
    """
    if theta_budget < 1:
        raise ValueError("theta budget must be positive")
    u = generate_directions(dirs, data.k) if not isinstance(dirs, np.ndarray) else dirs
    entries = _as_entries(sigma)

    candidates = [tukey_median(data, u)]
    if theta_budget > 1:
        candidates.append(np.median(data.obs, axis=0))
        remaining = theta_budget - len(candidates)
        if remaining > 0:
            idx = np.unique(
                np.linspace(0, data.n - 1, min(remaining, data.n)).round().astype(int)
            )
            candidates.extend(np.asarray(row, dtype=float) for row in data.obs[idx])

    def value_at(theta: np.ndarray) -> float:
        return ScatterDepthEvaluator(data, LocationSpec.fixed(theta), u).value(entries)

    depths = np.array([value_at(c) for c in candidates])
    if theta_budget > 1:
        scale = _candidate_scale(data.obs)
        for i in np.argsort(-depths, kind="stable")[:5]:
            refined = _nelder_mead(lambda t: -value_at(t), candidates[i], scale)
            candidates.append(refined)
            depths = np.append(depths, value_at(refined))

    best = int(np.argmax(depths))
    return ScatterDepthEvaluator(data, LocationSpec.fixed(candidates[best]), u).evaluate(entries)


def pairwise_difference_depth(
    data: Dataset,
    sigma,
    dirs: DirectionBudget | np.ndarray,
    pair_budget: int | None = None,
    seed: int = 0,
) -> DepthEvaluation:
    """Fixed-origin scatter depth over the sample of pairwise differences.

    Builds the difference sample ``{x_i - x_j, i != j}``; when ``pair_budget``
    is smaller than n(n-1), a seeded uniform subsample of ordered pairs is
    used instead of the full set.
    """
    if data.n < 2:
        raise ValueError("pairwise differences need at least two observations")
    n = data.n
    total = n * (n - 1)
    if pair_budget is not None and pair_budget < 1:
        raise ValueError("pair budget must be positive")
    if pair_budget is None or pair_budget >= total:
        ii, jj = np.divmod(np.arange(total), n - 1)
        jj = jj + (jj >= ii)
    else:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        flat = rng.choice(total, size=pair_budget, replace=False)
        ii, jj = np.divmod(flat, n - 1)
        jj = jj + (jj >= ii)
    diffs = Dataset(data.obs[ii] - data.obs[jj])
    return scatter_depth(diffs, LocationSpec.fixed(np.zeros(data.k)), sigma, dirs)


def region_contains(
    data: Dataset,
    location: LocationSpec,
    sigma,
    alpha: float,
    dirs: DirectionBudget | np.ndarray,
) -> bool:
    """Whether ``sigma`` belongs to the order-``alpha`` scatter depth region."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return scatter_depth(data, location, sigma, dirs).value >= alpha
