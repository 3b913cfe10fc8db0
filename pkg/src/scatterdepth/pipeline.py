"""Time-windowed dispersion outlier detection for multivariate return series.

Each retained window gets a robust scatter fit and six outlyingness measures
against a pooled global baseline: the depths of the global scatter and shape
in the window, and the Frobenius and geodesic distances between the window
fit and the global fit, for both scatter and shape.  A window is flagged when
its depth falls below the lower Tukey fence (first quartile minus 1.5 IQR) of
the corresponding depth collection.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset, DirectionBudget, LocationKind, LocationSpec
from .empirical import ScatterDepthEvaluator
from .mcd import fast_mcd
from .search import parallel_map
from .shape import (
    ScaleFunctional,
    ShapeMatrix,
    profile_scale_depth,
    scale_and_shape,
)
from .spd import SpdMatrix, frobenius_distance, geodesic_distance

__all__ = [
    "WindowedSeries",
    "GlobalBaseline",
    "WindowReport",
    "DetectionReport",
    "DetectConfig",
    "global_baseline",
    "detect",
    "load_windowed_csv",
]

SCATTER_FLAG = "ScatterOutlier"
SHAPE_FLAG = "ShapeOutlier"


@dataclass(frozen=True)
class WindowedSeries:
    """Ordered labelled windows, with short windows dropped at construction."""

    windows: tuple[tuple[str, Dataset], ...]
    min_rows: int = 70

    def __post_init__(self):
        if self.min_rows < 1:
            raise ValueError("minimum rows per window must be positive")
        kept = tuple((label, d) for label, d in self.windows if d.n >= self.min_rows)
        object.__setattr__(self, "windows", kept)
        dims = {d.k for _, d in kept}
        if len(dims) > 1:
            raise ValueError("windows must share one dimension")

    @property
    def n_windows(self) -> int:
        return len(self.windows)

    def pooled(self) -> Dataset:
        if not self.windows:
            raise ValueError("no window satisfies the row threshold")
        return Dataset(np.vstack([d.obs for _, d in self.windows]))


def load_windowed_csv(path, min_rows: int = 70, window_column: str | None = None) -> WindowedSeries:
    """Window a CSV by calendar day of its timestamp column.

    The file must carry a leading ``timestamp`` column (RFC 3339); rows are
    grouped by the date part of the timestamp.  When ``window_column`` names a
    column, that column's values label the windows instead.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ValueError(f"{path}: empty file")
        header = [name.strip() for name in header]
        rows = [row for row in reader if row]

    label_idx = None
    if window_column is not None:
        if window_column not in header:
            raise ValueError(f"{path}: no column named {window_column!r}")
        label_idx = header.index(window_column)
    elif header[0].lower() == "timestamp":
        label_idx = 0
    else:
        raise ValueError(f"{path}: a timestamp column (or explicit window column) is required")

    numeric_idx = [
        j for j, name in enumerate(header) if j != label_idx and name.lower() != "timestamp"
    ]
    groups: dict[str, list[list[float]]] = {}
    order: list[str] = []
    for line_no, row in enumerate(rows, start=2):
        raw = row[label_idx].strip()
        # Calendar-day grouping for RFC 3339 timestamps; explicit labels as-is.
        label = raw[:10] if label_idx == 0 and window_column is None else raw
        try:
            values = [float(row[j]) for j in numeric_idx]
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}:{line_no}: bad numeric row") from exc
        if label not in groups:
            groups[label] = []
            order.append(label)
        groups[label].append(values)

    windows = tuple(
        (label, Dataset(np.asarray(groups[label], dtype=float)))
        for label in order
        if len(groups[label]) >= min_rows
    )
    return WindowedSeries(windows=windows, min_rows=min_rows)


@dataclass(frozen=True)
class GlobalBaseline:
    """Pooled robust fit: MCD scatter, its unit-determinant shape, and the
    depth-maximizing rescale of that shape."""

    mcd_scatter: SpdMatrix
    shape: ShapeMatrix
    sigma2: float
    scatter: SpdMatrix
    scatter_depth: float
    shape_depth: float


@dataclass(frozen=True)
class DetectConfig:
    directions: int = 500
    seed: int = 0
    location: LocationKind = LocationKind.TUKEY_MEDIAN
    min_rows: int = 70
    mcd_starts: int = 40
    threads: int = 1
    scale: ScaleFunctional = ScaleFunctional.DET
    # Caps the halfspace-median candidate pool on large pooled samples.
    max_location_candidates: int = 200
    # Robust-subset fraction h/n; None keeps the MCD default floor((n+k+1)/2).
    mcd_h_fraction: float | None = None


def _mcd_h(config: DetectConfig, data: Dataset) -> int | None:
    if config.mcd_h_fraction is None:
        return None
    from .mcd import default_subset_size

    h = int(round(config.mcd_h_fraction * data.n))
    return min(data.n, max(default_subset_size(data.n, data.k), h))


def _location_spec(kind: LocationKind) -> LocationSpec:
    if kind is LocationKind.TUKEY_MEDIAN:
        return LocationSpec.tukey()
    if kind is LocationKind.COORD_MEDIAN:
        return LocationSpec.coord_median()
    raise ValueError("detection centers windows with a data-driven location")


def _resolve_center(data: Dataset, config: DetectConfig, dirs: np.ndarray) -> np.ndarray:
    from .data import tukey_median

    if config.location is LocationKind.TUKEY_MEDIAN:
        return tukey_median(data, dirs, max_candidates=config.max_location_candidates)
    return _location_spec(config.location).resolve(data, dirs)


def global_baseline(
    full: Dataset,
    config: DetectConfig | None = None,
    functional: ScaleFunctional = ScaleFunctional.DET,
) -> GlobalBaseline:
    """Robust pooled baseline for the detection pipeline.

    The pooled MCD scatter is normalized to a unit-determinant shape; its
    scale is then re-chosen to maximize the pooled scatter depth along the
    shape's ray, which by construction equates the global scatter depth and
    the global shape depth.
    """
    config = config or DetectConfig()
    budget = DirectionBudget(count=config.directions, seed=config.seed)
    dirs = budget.generate(full.k)
    center = _resolve_center(full, config, dirs)
    fit = fast_mcd(full, h=_mcd_h(config, full), n_starts=config.mcd_starts, seed=config.seed + 1)
    _, shape_mat = scale_and_shape(fit.raw_scatter, functional)
    evaluator = ScatterDepthEvaluator(full, LocationSpec.fixed(center), dirs)
    profile = profile_scale_depth(evaluator, shape_mat.entries)
    scatter = SpdMatrix(profile.scale * shape_mat.entries)
    return GlobalBaseline(
        mcd_scatter=fit.raw_scatter,
        shape=shape_mat,
        sigma2=profile.scale,
        scatter=scatter,
        scatter_depth=profile.value,
        shape_depth=profile.value,
    )


@dataclass(frozen=True)
class WindowReport:
    label: str
    scatter_depth: float
    shape_depth: float
    d_f_scatter: float
    d_f_shape: float
    d_g_scatter: float
    d_g_shape: float
    flags: frozenset[str] = frozenset()

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "scatter_depth": self.scatter_depth,
            "shape_depth": self.shape_depth,
            "frobenius_scatter": self.d_f_scatter,
            "frobenius_shape": self.d_f_shape,
            "geodesic_scatter": self.d_g_scatter,
            "geodesic_shape": self.d_g_shape,
            "flags": sorted(self.flags),
        }


@dataclass(frozen=True)
class DetectionReport:
    baseline: GlobalBaseline
    windows: tuple[WindowReport, ...]
    scatter_fence: float
    shape_fence: float

    def as_dict(self) -> dict:
        return {
            "global": {
                "mcd_scatter": self.baseline.mcd_scatter.entries.tolist(),
                "shape": self.baseline.shape.entries.tolist(),
                "sigma2": self.baseline.sigma2,
                "scatter": self.baseline.scatter.entries.tolist(),
                "scatter_depth": self.baseline.scatter_depth,
                "shape_depth": self.baseline.shape_depth,
                "scatter_fence": self.scatter_fence,
                "shape_fence": self.shape_fence,
            },
            "windows": [w.as_dict() for w in self.windows],
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.as_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "label",
                    "depth_sc",
                    "depth_sh",
                    "dF_sc",
                    "dF_sh",
                    "dg_sc",
                    "dg_sh",
                    "flag_sc",
                    "flag_sh",
                ]
            )
            for w in self.windows:
                writer.writerow(
                    [
                        w.label,
                        repr(w.scatter_depth),
                        repr(w.shape_depth),
                        repr(w.d_f_scatter),
                        repr(w.d_f_shape),
                        repr(w.d_g_scatter),
                        repr(w.d_g_shape),
                        int(SCATTER_FLAG in w.flags),
                        int(SHAPE_FLAG in w.flags),
                    ]
                )


def _tukey_fence(values: np.ndarray) -> float:
    # Linear-interpolation quartiles, lower fence at 1.5 IQR below Q1.  The
    # tolerance guards the strict comparison against quartile rounding:
    # depths are exact multiples of 1/n, and a window sitting exactly on the
    # fence must not be flagged just because 1.5 * IQR rounded up.
    q1, q3 = np.percentile(values, [25.0, 75.0])
    return float(q1 - 1.5 * (q3 - q1)) - 1e-9


def detect(series: WindowedSeries, config: DetectConfig | None = None) -> DetectionReport:
    """Run the full windowed dispersion-outlier detection.

    For every retained window the six measures are computed against the
    pooled baseline; the shape profile additionally probes the global scale
    so the window shape depth always dominates the window scatter depth of
    the global matrix.  Windows are processed independently (optionally on
    threads) and flags depend only on the multiset of depths, so the report
    is invariant under window reordering.
    """
    config = config or DetectConfig()
    if series.n_windows < 4:
        raise ValueError("need at least four retained windows to form quartiles")
    baseline = global_baseline(series.pooled(), config, config.scale)
    budget = DirectionBudget(count=config.directions, seed=config.seed)
    k = series.pooled().k
    dirs = budget.generate(k)

    def process(item):
        index, (label, window) = item
        center = _resolve_center(window, config, dirs)
        evaluator = ScatterDepthEvaluator(window, LocationSpec.fixed(center), dirs)
        depth_sc = evaluator.value(baseline.scatter.entries)
        profile = profile_scale_depth(
            evaluator, baseline.shape.entries, extra_scales=(baseline.sigma2,)
        )
        fit = fast_mcd(
            window,
            h=_mcd_h(config, window),
            n_starts=config.mcd_starts,
            seed=config.seed + 17 + index,
        )
        _, window_shape = scale_and_shape(fit.raw_scatter, config.scale)
        return label, depth_sc, profile, fit, window_shape

    rows = parallel_map(process, enumerate(series.windows), config.threads)

    depths_sc = np.array([row[1] for row in rows])
    depths_sh = np.array([row[2].value for row in rows])
    fence_sc = _tukey_fence(depths_sc)
    fence_sh = _tukey_fence(depths_sh)

    reports = []
    for label, depth_sc, profile, fit, window_shape in rows:
        flags = set()
        if depth_sc < fence_sc:
            flags.add(SCATTER_FLAG)
        if profile.value < fence_sh:
            flags.add(SHAPE_FLAG)
        reports.append(
            WindowReport(
                label=label,
                scatter_depth=float(depth_sc),
                shape_depth=float(profile.value),
                d_f_scatter=frobenius_distance(fit.raw_scatter, baseline.mcd_scatter),
                d_f_shape=frobenius_distance(window_shape.matrix, baseline.shape.matrix),
                d_g_scatter=geodesic_distance(fit.raw_scatter, baseline.mcd_scatter),
                d_g_shape=geodesic_distance(window_shape.matrix, baseline.shape.matrix),
                flags=frozenset(flags),
            )
        )
    return DetectionReport(
        baseline=baseline,
        windows=tuple(reports),
        scatter_fence=fence_sc,
        shape_fence=fence_sh,
    )
