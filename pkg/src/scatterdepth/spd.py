"""Symmetric positive definite matrix algebra.

Eigendecompositions, scalar matrix functions, the Frobenius and geodesic
distances on the cone of SPD matrices, linear/geodesic/harmonic interpolation
paths, and the Riemannian (Karcher) mean.  All values are immutable after
construction and every operation is pure, so they can be shared freely across
threads.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SpdMatrix",
    "PathKind",
    "PathSpec",
    "KarcherMeanError",
    "matrix_function",
    "frobenius_distance",
    "geodesic_distance",
    "path_point",
    "karcher_mean",
]

# Relative tolerance for the symmetry gate at construction.
_SYM_RTOL = 1e-12
# An eigenvalue below this fraction of the largest one is treated as a
# boundary (singular) matrix and rejected rather than regularized.
_PD_RTOL = 1e-12


class KarcherMeanError(RuntimeError):
    """Riemannian mean iteration failed to converge.

    The exception carries the last iterate so callers can inspect it or
    decide to accept it anyway.
    """

    def __init__(self, message: str, last_iterate: "SpdMatrix"):
        super().__init__(message)
        self.last_iterate = last_iterate


class SpdMatrix:
    """A k x k symmetric positive definite matrix with cached spectral data.

    Parameters
    ----------
    entries : array-like of shape (k, k)
        Symmetric matrix with strictly positive eigenvalues.  Symmetry is
        required up to a 1e-12 relative tolerance; the stored entries are the
        symmetrized input.  Construction fails if the smallest eigenvalue does
        not exceed 1e-12 times the largest (the boundary of the cone is
        excluded, never silently regularized).

    Attributes
    ----------
    dim : int
        Matrix dimension k.
    entries : ndarray of shape (k, k)
        Read-only symmetric entries.
    eigenvalues : ndarray of shape (k,)
        Eigenvalues sorted in decreasing order, all positive.
    eigenvectors : ndarray of shape (k, k)
        Orthonormal eigenvectors as columns, matching ``eigenvalues``.  Each
        column is sign-normalized so its first non-negligible component is
        positive, which makes the decomposition reproducible.
    """

    __slots__ = ("entries", "dim", "eigenvalues", "eigenvectors")

    def __init__(self, entries):
        arr = np.array(entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("matrix must have dimension at least one")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        scale = max(1.0, float(np.abs(arr).max()))
        if float(np.abs(arr - arr.T).max()) > _SYM_RTOL * scale:
            raise ValueError("matrix is not symmetric within tolerance")
        arr = 0.5 * (arr + arr.T)

        w, vecs = np.linalg.eigh(arr)
        w = w[::-1].copy()
        vecs = vecs[:, ::-1].copy()
        # Sign convention: first component larger than 1e-12 of the column's
        # max magnitude is made positive.
        for j in range(vecs.shape[1]):
            col = vecs[:, j]
            mags = np.abs(col)
            idx = np.flatnonzero(mags > 1e-12 * mags.max())
            if idx.size and col[idx[0]] < 0:
                vecs[:, j] = -col
        if w[0] <= 0.0 or w[-1] <= _PD_RTOL * w[0]:
            raise ValueError(
                "matrix is not positive definite: smallest eigenvalue "
                f"{w[-1]:.3e} vs largest {w[0]:.3e}"
            )

        arr.setflags(write=False)
        w.setflags(write=False)
        vecs.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "dim", arr.shape[0])
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigenvectors", vecs)

    def __setattr__(self, name, value):
        raise AttributeError("SpdMatrix is immutable")

    def __repr__(self):
        return f"SpdMatrix(dim={self.dim}, entries={self.entries.tolist()!r})"

    # -- scalar functions of the matrix ------------------------------------

    def apply(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Apply a scalar function to the spectrum, returning a plain array."""
        vals = np.asarray(f(self.eigenvalues), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("matrix function produced non-finite eigenvalues")
        out = (self.eigenvectors * vals) @ self.eigenvectors.T
        return 0.5 * (out + out.T)

    def power(self, t: float) -> "SpdMatrix":
        return SpdMatrix(self.apply(lambda w: w**t))

    def sqrt(self) -> "SpdMatrix":
        return self.power(0.5)

    def inv_sqrt(self) -> "SpdMatrix":
        return self.power(-0.5)

    def inverse(self) -> "SpdMatrix":
        return self.power(-1.0)

    def log(self) -> np.ndarray:
        return self.apply(np.log)

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))

    @property
    def det(self) -> float:
        return float(np.prod(self.eigenvalues))

    @property
    def log_det(self) -> float:
        return float(np.sum(np.log(self.eigenvalues)))

    def allclose(self, other: "SpdMatrix", rtol: float = 1e-10, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.entries, other.entries, rtol=rtol, atol=atol))

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {"dim": self.dim, "entries": self.entries.tolist()}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SpdMatrix":
        entries = np.asarray(obj["entries"], dtype=float)
        if "dim" in obj and int(obj["dim"]) != entries.shape[0]:
            raise ValueError("declared dim does not match entries")
        return cls(entries)

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "SpdMatrix":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            for row in self.entries:
                writer.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path) -> "SpdMatrix":
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
        return cls(np.asarray(rows, dtype=float))


class PathKind(Enum):
    """Interpolation rule between two SPD matrices."""

    LINEAR = "linear"
    GEODESIC = "geodesic"
    HARMONIC = "harmonic"


@dataclass(frozen=True)
class PathSpec:
    """Endpoints plus interpolation kind for a path in the SPD cone."""

    a: SpdMatrix
    b: SpdMatrix
    kind: PathKind

    def __post_init__(self):
        if self.a.dim != self.b.dim:
            raise ValueError("path endpoints must share the same dimension")


def matrix_function(a: SpdMatrix, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Evaluate f on the spectrum of ``a``.

    Returns O diag(f(lambda_1), ..., f(lambda_k)) O' as a plain symmetric
    array (the result need not be positive definite, e.g. for f = log).
    Raises ``ValueError`` if f is non-finite on the spectrum.
    """
    return a.apply(f)


def frobenius_distance(a: SpdMatrix, b: SpdMatrix) -> float:
    """Frobenius distance ||b - a||_F."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    return float(np.linalg.norm(b.entries - a.entries, "fro"))


def _pencil_eigenvalues(a: SpdMatrix, b: SpdMatrix) -> np.ndarray:
    """Eigenvalues of a^{-1/2} b a^{-1/2}, all positive."""
    ai = a.inv_sqrt().entries
    m = ai @ b.entries @ ai
    w = np.linalg.eigvalsh(0.5 * (m + m.T))
    if w[0] <= 0.0:
        raise ValueError("pencil is numerically singular")
    return w


def geodesic_distance(a: SpdMatrix, b: SpdMatrix) -> float:
    """Affine-invariant Riemannian distance ||log(a^{-1/2} b a^{-1/2})||_F."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    return float(np.sqrt(np.sum(np.log(_pencil_eigenvalues(a, b)) ** 2)))


def path_point(p: PathSpec, t: float) -> SpdMatrix:
    """Point at parameter ``t`` on the path ``p``.

    Linear is (1-t) a + t b, geodesic is a^{1/2} (a^{-1/2} b a^{-1/2})^t
    a^{1/2}, harmonic is ((1-t) a^{-1} + t b^{-1})^{-1}.  The geodesic
    parametrization is proportional to arc length, so
    ``geodesic_distance(a, path_point(p, t)) == t * geodesic_distance(a, b)``.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"path parameter must lie in [0, 1], got {t}")
    a, b = p.a, p.b
    if p.kind is PathKind.LINEAR:
        return SpdMatrix((1.0 - t) * a.entries + t * b.entries)
    if p.kind is PathKind.GEODESIC:
        ah = a.sqrt().entries
        ai = a.inv_sqrt().entries
        mid = SpdMatrix(ai @ b.entries @ ai).power(t).entries
        return SpdMatrix(ah @ mid @ ah)
    if p.kind is PathKind.HARMONIC:
        mixed = (1.0 - t) * a.inverse().entries + t * b.inverse().entries
        return SpdMatrix(mixed).inverse()
    raise ValueError(f"unknown path kind {p.kind!r}")


def _sym_exp(m: np.ndarray) -> np.ndarray:
    w, vecs = np.linalg.eigh(0.5 * (m + m.T))
    out = (vecs * np.exp(w)) @ vecs.T
    return 0.5 * (out + out.T)


def _sym_log(m: np.ndarray) -> np.ndarray:
    w, vecs = np.linalg.eigh(0.5 * (m + m.T))
    if w[0] <= 0.0:
        raise ValueError("matrix logarithm of a non positive definite matrix")
    out = (vecs * np.log(w)) @ vecs.T
    return 0.5 * (out + out.T)


def karcher_mean(
    ms: Sequence[SpdMatrix],
    weights: Sequence[float] | None = None,
    tol: float = 1e-9,
    max_iter: int = 200,
) -> SpdMatrix:
    """Weighted Riemannian center of mass of SPD matrices.

    Runs the fixed-point iteration
    ``S <- S^{1/2} exp(sum_i w_i log(S^{-1/2} m_i S^{-1/2})) S^{1/2}``
    until the tangent-mean Frobenius norm drops below ``tol``.  The natural
    step size one is used (the cone has non-positive curvature), with step
    halving whenever the weighted squared-distance objective increases.

    Raises
    ------
    KarcherMeanError
        If the iteration has not converged after ``max_iter`` steps; the
        exception carries the last iterate.
    """
    if len(ms) == 0:
        raise ValueError("need at least one matrix")
    dim = ms[0].dim
    if any(m.dim != dim for m in ms):
        raise ValueError("all matrices must share the same dimension")
    if weights is None:
        w = np.full(len(ms), 1.0 / len(ms))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(ms),):
            raise ValueError("weights must match the number of matrices")
        if np.any(w < 0.0) or abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to one")
        w = w / w.sum()

    def objective(x: SpdMatrix) -> float:
        return float(sum(wi * geodesic_distance(mi, x) ** 2 for wi, mi in zip(w, ms)))

    current = SpdMatrix(sum(wi * mi.entries for wi, mi in zip(w, ms)))
    current_obj = objective(current)
    for _ in range(max_iter):
        xh = current.sqrt().entries
        xih = current.inv_sqrt().entries
        tangent = np.zeros((dim, dim))
        for wi, mi in zip(w, ms):
            tangent += wi * _sym_log(xih @ mi.entries @ xih)
        if float(np.linalg.norm(tangent, "fro")) < tol:
            return current
        step = 1.0
        for _ in range(40):
            candidate = SpdMatrix(xh @ _sym_exp(step * tangent) @ xh)
            candidate_obj = objective(candidate)
            if candidate_obj <= current_obj + 1e-15:
                current, current_obj = candidate, candidate_obj
                break
            step *= 0.5
        else:
            raise KarcherMeanError("step halving failed to decrease the objective", current)
    raise KarcherMeanError(f"no convergence after {max_iter} iterations", current)
