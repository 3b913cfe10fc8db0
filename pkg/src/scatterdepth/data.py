"""Empirical samples, location functionals and direction generation.

Holds the observation container, the three location strategies (halfspace
median, fixed point, coordinatewise median), the univariate median-squared-
deviation interval, and the estimate of the largest hyperplane mass through
the location, which controls when depth regions stay bounded.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "Dataset",
    "LocationKind",
    "LocationSpec",
    "DirectionScheme",
    "DirectionBudget",
    "generate_directions",
    "location_depth",
    "tukey_median",
    "MsdInterval",
    "msd_interval",
    "estimate_alpha",
]


@dataclass(frozen=True)
class Dataset:
    """An n x k observation matrix with optional per-row timestamps."""

    obs: np.ndarray
    timestamps: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.array(self.obs, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError("observations must form a non-empty 2-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("observations must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "obs", arr)
        if self.timestamps is not None:
            ts = tuple(self.timestamps)
            if len(ts) != arr.shape[0]:
                raise ValueError("one timestamp per observation row is required")
            object.__setattr__(self, "timestamps", ts)

    @property
    def n(self) -> int:
        return self.obs.shape[0]

    @property
    def k(self) -> int:
        return self.obs.shape[1]

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        """Read a header-led CSV, with an optional leading ``timestamp`` column.

        The header row is required.  When the first column is named
        ``timestamp`` its values are kept as RFC 3339 strings; all remaining
        columns must be numeric.
        """
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ValueError(f"{path}: empty file") from None
            has_ts = header and header[0].strip().lower() == "timestamp"
            timestamps: list[str] = []
            rows: list[list[float]] = []
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if has_ts:
                    timestamps.append(row[0].strip())
                    values = row[1:]
                else:
                    values = row
                try:
                    rows.append([float(x) for x in values])
                except ValueError as exc:
                    raise ValueError(f"{path}:{line_no}: non-numeric value") from exc
        if not rows:
            raise ValueError(f"{path}: no data rows")
        return cls(np.asarray(rows, dtype=float), tuple(timestamps) if has_ts else None)

    def to_csv(self, path, columns: Sequence[str] | None = None) -> None:
        names = list(columns) if columns is not None else [f"x{j + 1}" for j in range(self.k)]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            if self.timestamps is not None:
                writer.writerow(["timestamp"] + names)
                for ts, row in zip(self.timestamps, self.obs):
                    writer.writerow([ts] + [repr(float(x)) for x in row])
            else:
                writer.writerow(names)
                for row in self.obs:
                    writer.writerow([repr(float(x)) for x in row])


class LocationKind(Enum):
    TUKEY_MEDIAN = "tukey"
    FIXED = "fixed"
    COORD_MEDIAN = "coordmedian"


@dataclass(frozen=True)
class LocationSpec:
    """Strategy for centering a sample.

    Use the constructors ``LocationSpec.tukey()``, ``LocationSpec.fixed(theta)``
    or ``LocationSpec.coord_median()``.
    """

    kind: LocationKind
    theta: np.ndarray | None = None

    def __post_init__(self):
        if self.kind is LocationKind.FIXED:
            if self.theta is None:
                raise ValueError("fixed location requires a point")
            arr = np.array(self.theta, dtype=float).ravel()
            if not np.all(np.isfinite(arr)):
                raise ValueError("fixed location must be finite")
            arr.setflags(write=False)
            object.__setattr__(self, "theta", arr)
        elif self.theta is not None:
            raise ValueError("only fixed locations carry a point")

    @classmethod
    def tukey(cls) -> "LocationSpec":
        return cls(LocationKind.TUKEY_MEDIAN)

    @classmethod
    def fixed(cls, theta) -> "LocationSpec":
        return cls(LocationKind.FIXED, theta)

    @classmethod
    def coord_median(cls) -> "LocationSpec":
        return cls(LocationKind.COORD_MEDIAN)

    def resolve(self, data: Dataset, dirs: "DirectionBudget | np.ndarray") -> np.ndarray:
        """Concrete center for ``data`` under this strategy."""
        if self.kind is LocationKind.FIXED:
            if self.theta.shape != (data.k,):
                raise ValueError("fixed location has the wrong dimension")
            return np.asarray(self.theta, dtype=float)
        if self.kind is LocationKind.COORD_MEDIAN:
            return np.median(data.obs, axis=0)
        return tukey_median(data, dirs)


class DirectionScheme(Enum):
    UNIFORM_SPHERE = "uniform"
    ANTIPODAL = "antipodal"
    EXACT_2D = "exact2d"


@dataclass(frozen=True)
class DirectionBudget:
    """How many projection directions to draw and from which stream.

    ``UNIFORM_SPHERE`` draws ``count`` standard Gaussian vectors normalized to
    unit length.  ``ANTIPODAL`` additionally appends the antipode of every
    draw, which symmetrizes sign-sensitive criteria.  ``EXACT_2D`` enumerates
    all critical angles of the objective instead of sampling and is only valid
    in dimension two.
    """

    count: int = 10000
    seed: int = 0
    scheme: DirectionScheme = DirectionScheme.UNIFORM_SPHERE

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("direction count must be positive")

    def generate(self, k: int) -> np.ndarray:
        if self.scheme is DirectionScheme.EXACT_2D:
            raise ValueError("exact 2-D handling enumerates angles; no sampled directions exist")
        rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        raw = rng.standard_normal((self.count, k))
        norms = np.linalg.norm(raw, axis=1)
        # Degenerate draws of effectively zero length are replaced by e_1.
        bad = norms < 1e-300
        if np.any(bad):
            raw[bad] = 0.0
            raw[bad, 0] = 1.0
            norms[bad] = 1.0
        dirs = raw / norms[:, None]
        if self.scheme is DirectionScheme.ANTIPODAL:
            dirs = np.vstack([dirs, -dirs])
        return dirs


def generate_directions(dirs: "DirectionBudget | np.ndarray", k: int) -> np.ndarray:
    """Resolve a budget or an explicit direction array to an (N, k) array.

    Explicit arrays are used exactly as given (no renormalization): the slab
    comparison is invariant under positive rescaling of a direction, and
    matched-direction invariance tests rely on bitwise-exact inputs.
    """
    if isinstance(dirs, DirectionBudget):
        return dirs.generate(k)
    arr = np.asarray(dirs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != k:
        raise ValueError(f"direction array must have shape (N, {k})")
    return arr


def _location_counts(proj: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Per-direction counts of observations in the closed upper halfspace."""
    return np.count_nonzero(proj >= shifts[None, :], axis=0)


def location_depth(
    data: Dataset,
    theta,
    dirs: DirectionBudget | np.ndarray,
) -> float:
    """Halfspace depth of the point ``theta`` in the sample.

    The depth is the minimum over the generated directions ``u`` of the
    fraction of observations with ``u'(x - theta) >= 0``; with exact 2-D
    handling the minimum is taken over all critical angles, so the result is
    the true infimum and an exact multiple of 1/n.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.shape != (data.k,):
        raise ValueError("point has the wrong dimension")
    if not np.all(np.isfinite(theta)):
        raise ValueError("point must be finite")
    if isinstance(dirs, DirectionBudget) and dirs.scheme is DirectionScheme.EXACT_2D:
        return _location_depth_exact2d(data, theta)
    u = generate_directions(dirs, data.k)
    proj = data.obs @ u.T
    shifts = u @ theta
    return float(_location_counts(proj, shifts).min()) / data.n


def _location_depth_exact2d(data: Dataset, theta: np.ndarray) -> float:
    if data.k != 2:
        raise ValueError("exact 2-D handling requires bivariate data")
    centered = data.obs - theta[None, :]
    norms = np.linalg.norm(centered, axis=1)
    nonzero = centered[norms > 0.0]
    # The count of u'(x - theta) >= 0 only changes where u is orthogonal to
    # some centered observation; sweep those angles plus arc midpoints.
    crit = (np.arctan2(nonzero[:, 1], nonzero[:, 0]) + 0.5 * np.pi) % (2.0 * np.pi)
    angles = np.concatenate([crit, (crit + np.pi) % (2.0 * np.pi), [0.0]])
    angles = np.unique(np.round(angles, 12))
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2.0 * np.pi]]))
    midpoints = angles + 0.5 * gaps
    eval_angles = np.concatenate([angles, midpoints])
    u = np.column_stack([np.cos(eval_angles), np.sin(eval_angles)])
    counts = np.count_nonzero(centered @ u.T >= 0.0, axis=0)
    return float(counts.min()) / data.n


def _nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    scale: np.ndarray,
    max_iter: int = 120,
    xatol: float = 1e-8,
) -> np.ndarray:
    """Minimize ``f`` with a deterministic Nelder-Mead simplex.

    The initial simplex offsets each coordinate by 5 percent of its scale in
    the direction of the start's sign, so the whole trajectory commutes
    exactly with a global sign flip of the problem; this is what makes the
    halfspace median centro-equivariant in floating point.
    """
    k = x0.size
    simplex = [np.array(x0, dtype=float)]
    for j in range(k):
        v = np.array(x0, dtype=float)
        off = 0.05 * scale[j]
        v[j] += off if x0[j] >= 0.0 else -off
        simplex.append(v)
    simplex = np.asarray(simplex)
    values = np.array([f(v) for v in simplex])

    rho, chi, gamma, sigma = 1.0, 2.0, 0.5, 0.5
    for _ in range(max_iter):
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        if np.max(np.abs(simplex[1:] - simplex[0])) <= xatol * float(scale.max()):
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        reflected = centroid + rho * (centroid - worst)
        fr = f(reflected)
        if fr < values[0]:
            expanded = centroid + chi * (reflected - centroid)
            fe = f(expanded)
            if fe < fr:
                simplex[-1], values[-1] = expanded, fe
            else:
                simplex[-1], values[-1] = reflected, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = reflected, fr
        else:
            contracted = centroid + gamma * (worst - centroid)
            fc = f(contracted)
            if fc < values[-1]:
                simplex[-1], values[-1] = contracted, fc
            else:
                for i in range(1, len(simplex)):
                    simplex[i] = simplex[0] + sigma * (simplex[i] - simplex[0])
                    values[i] = f(simplex[i])
    order = np.argsort(values, kind="stable")
    return simplex[order[0]]


def _candidate_scale(obs: np.ndarray) -> np.ndarray:
    spread = obs.max(axis=0) - obs.min(axis=0)
    return np.where(spread > 0.0, spread, 1.0)


def tukey_median(
    data: Dataset,
    dirs: DirectionBudget | np.ndarray,
    max_candidates: int | None = None,
    refine_top: int = 5,
) -> np.ndarray:
    """Approximate barycenter of the maximal location-depth region.

    Maximizes :func:`location_depth` over a candidate set made of the sample
    points, the coordinatewise median and Nelder-Mead refinements started from
    the ``refine_top`` deepest candidates, then averages every evaluated
    candidate attaining the maximum.  Deterministic for a fixed direction
    budget.  ``max_candidates`` caps how many sample points enter the pool
    (an evenly spaced, deterministic subset is used beyond the cap), which
    keeps large-sample calls affordable.
    """
    u = generate_directions(dirs, data.k)
    proj = data.obs @ u.T

    def depth_of(theta: np.ndarray) -> float:
        return float(_location_counts(proj, u @ theta).min()) / data.n

    points = data.obs
    if max_candidates is not None and data.n > max_candidates:
        idx = np.unique(np.linspace(0, data.n - 1, max_candidates).round().astype(int))
        points = data.obs[idx]
    candidates = [np.asarray(row, dtype=float) for row in points]
    candidates.append(np.median(data.obs, axis=0))
    depths = np.array([depth_of(c) for c in candidates])

    scale = _candidate_scale(data.obs)
    top = np.argsort(-depths, kind="stable")[:refine_top]
    for i in top:
        refined = _nelder_mead(lambda t: -depth_of(t), candidates[i], scale)
        candidates.append(refined)
        depths = np.append(depths, depth_of(refined))

    best = depths.max()
    winners = [c for c, v in zip(candidates, depths) if v == best]
    return np.mean(np.asarray(winners), axis=0)


class MsdInterval(NamedTuple):
    """Closed argmax interval of the univariate dispersion objective."""

    lower: float
    upper: float

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def msd_interval(x, center: float) -> MsdInterval:
    """Median-squared-deviation interval of a univariate sample about ``center``.

    Returns the closed interval of dispersion values maximizing
    ``min(#{(x - center)^2 <= s}, #{(x - center)^2 >= s}) / n``, boundary ties
    counting on both sides.  The interval midpoint is the MSD; its square root
    is the MAD whenever the interval is a singleton.
    """
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size < 1:
        raise ValueError("need at least one observation")
    if not np.isfinite(center):
        raise ValueError("center must be finite")
    sq = np.sort((arr - center) ** 2)
    values = np.unique(sq)
    n = arr.size

    def objective(s: float) -> int:
        inner = int(np.count_nonzero(sq <= s))
        outer = int(np.count_nonzero(sq >= s))
        return min(inner, outer)

    # The objective is piecewise constant with breakpoints at the squared
    # deviations; probing the breakpoints and the open gaps between them
    # covers every attained value.
    probes = list(values)
    probes.extend(0.5 * (values[:-1] + values[1:]))
    scores = {float(p): objective(float(p)) for p in probes}
    best = max(scores.values())
    attaining = [p for p, v in scores.items() if v == best]
    return MsdInterval(min(attaining), max(attaining))


def estimate_alpha(
    data: Dataset,
    location: LocationSpec,
    dirs: DirectionBudget | np.ndarray,
) -> tuple[float, float]:
    """Largest hyperplane mass through the center, and its boundedness index.

    Returns ``(s, alpha)`` where ``s`` is the maximal fraction of observations
    lying on a hyperplane through the resolved center and
    ``alpha = min(s, 1 - s)``.  In dimension two the maximum is exact: only
    directions orthogonal to some centered observation can carry mass.  In
    other dimensions the sampled directions give a lower bound on ``s``.
    A point count is registered when ``|u'(x - T)|`` is below 1e-12 times the
    data scale, since exact-zero tests are brittle in floating point.
    """
    center = location.resolve(data, dirs)
    centered = data.obs - center[None, :]
    norms = np.linalg.norm(centered, axis=1)
    scale = float(norms.max())
    tol = 1e-12 * (scale if scale > 0.0 else 1.0)

    if data.k == 1:
        candidates = np.array([[1.0]])
    elif data.k == 2:
        nonzero = centered[norms > tol]
        if nonzero.size == 0:
            return 1.0, 0.0
        perp = np.column_stack([-nonzero[:, 1], nonzero[:, 0]])
        perp /= np.linalg.norm(perp, axis=1)[:, None]
        candidates = np.vstack([perp, [[1.0, 0.0]]])
    else:
        candidates = generate_directions(dirs, data.k)

    masses = np.count_nonzero(np.abs(centered @ candidates.T) <= tol, axis=0)
    s = float(masses.max()) / data.n
    return s, min(s, 1.0 - s)
