"""Exact and smooth Euler characteristic transforms on sampled grids.

The transform of an embedded complex is evaluated on m unit directions and l
thresholds. A geometric simplex lies in the directional sublevel set at
threshold t exactly when all of its vertices do, i.e. when the maximum vertex
height along the direction is at most t (a linear functional on a convex hull
attains its maximum at a vertex).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .complexes import GeometricComplex, NeighborhoodSpec, hop_neighborhood, knn_neighborhood

__all__ = [
    "SamplingGrid",
    "EctMatrix",
    "LocalEctSet",
    "euler_characteristic",
    "make_grid",
    "grid_error_hint",
    "simplex_heights",
    "ect_hard",
    "ect_smooth",
    "local_ect",
    "cost_estimate",
]

DEFAULT_SHARPNESS = 100.0
FLATTEN_ORDER = "direction-major"
_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class SamplingGrid:
    """m unit directions on the sphere and l equispaced thresholds in [a, b]."""

    directions: np.ndarray  # (m, n) unit rows
    thresholds: np.ndarray  # (l,) strictly increasing, equispaced
    seed: int = 0

    def __post_init__(self):
        d = np.ascontiguousarray(np.asarray(self.directions, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.thresholds, dtype=np.float64))
        if d.ndim != 2 or d.shape[0] < 1:
            raise ValueError("directions must be a non-empty (m, n) array")
        if t.ndim != 1 or t.size < 2:
            raise ValueError("need at least two thresholds")
        norms = np.linalg.norm(d, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("directions must be unit vectors")
        steps = np.diff(t)
        if np.any(steps <= 0) or np.any(np.abs(steps - steps[0]) > 1e-12):
            raise ValueError("thresholds must be strictly increasing and equispaced")
        d.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "thresholds", t)

    @property
    def m(self) -> int:
        return self.directions.shape[0]

    @property
    def l(self) -> int:
        return self.thresholds.size

    @property
    def ambient_dim(self) -> int:
        return self.directions.shape[1]

    @property
    def bounds(self) -> tuple[float, float]:
        return float(self.thresholds[0]), float(self.thresholds[-1])


@dataclass(frozen=True)
class EctMatrix:
    """Sampled transform values, one row per direction, one column per threshold."""

    values: np.ndarray  # (m, l); int64 for "hard", float64 for "smooth"
    kind: str  # "hard" or "smooth"
    grid: SamplingGrid
    provenance: str = ""

    def __post_init__(self):
        if self.kind not in ("hard", "smooth"):
            raise ValueError("kind must be 'hard' or 'smooth'")
        v = np.ascontiguousarray(self.values)
        if v.shape != (self.grid.m, self.grid.l):
            raise ValueError("values shape must be (m, l)")
        if self.kind == "hard" and not np.issubdtype(v.dtype, np.integer):
            raise ValueError("hard values must be integers")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def flatten(self) -> np.ndarray:
        """Direction-major vector of length m*l."""
        return self.values.reshape(-1)


@dataclass(frozen=True)
class LocalEctSet:
    """Per-vertex local transform vectors, one row per vertex, length m*l each."""

    vectors: np.ndarray  # (num_vertices, m*l) float64
    grid: SamplingGrid
    spec: NeighborhoodSpec
    normalized: bool
    flatten_order: str = FLATTEN_ORDER

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vectors, dtype=np.float64))
        if v.ndim != 2 or v.shape[1] != self.grid.m * self.grid.l:
            raise ValueError("vectors must have m*l columns")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def num_vertices(self) -> int:
        return self.vectors.shape[0]

    def metadata(self) -> dict:
        a, b = self.grid.bounds
        return {
            "m": self.grid.m,
            "l": self.grid.l,
            "seed": self.grid.seed,
            "bounds": [a, b],
            "ambient_dim": self.grid.ambient_dim,
            "neighborhood": {"mode": self.spec.mode, "k": self.spec.k},
            "normalized": self.normalized,
            "flatten_order": self.flatten_order,
        }


def euler_characteristic(X: GeometricComplex) -> int:
    """Alternating sum of simplex counts across dimensions."""
    return int(sum((-1) ** k * c for k, c in enumerate(X.simplex_counts())))


def make_grid(
    n: int, m: int, l: int, bounds: tuple[float, float] = (-1.0, 1.0), seed: int = 0
) -> SamplingGrid:
    """Seeded grid: directions uniform on the sphere, thresholds equispaced.

    Directions are normalized standard Gaussian draws (exactly uniform on the
    sphere); a zero-norm draw is resampled.
    """
    a, b = float(bounds[0]), float(bounds[1])
    if m < 1 or l < 2:
        raise ValueError("need m >= 1 and l >= 2")
    if not a < b:
        raise ValueError("bounds must satisfy a < b")
    rng = np.random.default_rng(seed)
    dirs = np.empty((m, n), dtype=np.float64)
    filled = 0
    while filled < m:
        draw = rng.standard_normal((m - filled, n))
        norms = np.linalg.norm(draw, axis=1)
        ok = norms > 1e-300
        good = draw[ok] / norms[ok, None]
        dirs[filled : filled + good.shape[0]] = good
        filled += good.shape[0]
    return SamplingGrid(dirs, np.linspace(a, b, l), seed=seed)


def grid_error_hint(n: int, m: float, l: float) -> float:
    """Coarseness indicator (log m / m)^(1/(n-1)) / l for the sampled domain.

    Advisory only; shrinks as the direction and threshold counts grow.
    """
    if n < 2:
        raise ValueError("ambient dimension must be at least 2")
    if m <= 1:
        return 0.0
    return float((np.log(m) / m) ** (1.0 / (n - 1)) / l)


def simplex_heights(
    X: GeometricComplex, directions: np.ndarray
) -> list[tuple[int, np.ndarray]]:
    """Per-dimension simplex height arrays of shape (count, m).

    The height of a simplex along a direction is the max over its vertices of
    the dot product with the direction. Dimension 0 rows are the vertices
    themselves.
    """
    H = X.vertices @ directions.T  # (V, m)
    out: list[tuple[int, np.ndarray]] = [(0, H)]
    for k in sorted(X.simplices):
        idx = X.simplices[k]  # (S, k+1)
        out.append((k, H[idx].max(axis=1)))
    return out


def ect_hard(X: GeometricComplex, grid: SamplingGrid) -> EctMatrix:
    """Exact integer transform: cell (i, j) counts simplices with height at
    most t_j along direction i, signed by (-1)^dim."""
    if grid.ambient_dim != X.ambient_dim:
        raise ValueError("grid ambient dimension does not match complex")
    thr = grid.thresholds
    values = np.zeros((grid.m, grid.l), dtype=np.int64)
    for k, H in simplex_heights(X, grid.directions):
        sign = -1 if k % 2 else 1
        Hs = np.sort(H, axis=0)  # (S, m), sorted per direction
        for i in range(grid.m):
            counts = np.searchsorted(Hs[:, i], thr, side="right")
            values[i] += sign * counts.astype(np.int64)
    return EctMatrix(values, "hard", grid)


def ect_smooth(
    X: GeometricComplex, grid: SamplingGrid, sharpness: float = DEFAULT_SHARPNESS
) -> EctMatrix:
    """Logistic relaxation of the hard transform.

    Each simplex contributes sign * s(sharpness * (t - height)) with s the
    logistic function, so entries converge to the hard values as sharpness
    grows, at thresholds bounded away from simplex heights.
    """
    if sharpness <= 0:
        raise ValueError("sharpness must be positive")
    if grid.ambient_dim != X.ambient_dim:
        raise ValueError("grid ambient dimension does not match complex")
    thr = grid.thresholds
    values = np.zeros((grid.m, grid.l), dtype=np.float64)
    for k, H in simplex_heights(X, grid.directions):
        sign = -1.0 if k % 2 else 1.0
        S = H.shape[0]
        chunk = max(1, _CHUNK_CELLS // max(1, grid.m * grid.l))
        for lo in range(0, S, chunk):
            h = H[lo : lo + chunk]  # (s, m)
            values += sign * expit(sharpness * (thr[None, None, :] - h[:, :, None])).sum(axis=0)
    return EctMatrix(values, "smooth", grid)


def normalize_about(
    X: GeometricComplex, center: np.ndarray
) -> tuple[GeometricComplex, float]:
    """Translate ``center`` to the origin and scale by the max vertex norm.

    Returns the normalized complex and the scale used (1.0 when the complex
    has zero radius, in which case scaling is skipped).
    """
    verts = X.vertices - np.asarray(center, dtype=np.float64)
    radius = float(np.linalg.norm(verts, axis=1).max()) if verts.size else 0.0
    scale = radius if radius > 0 else 1.0
    return GeometricComplex(verts / scale, dict(X.simplices)), scale


def _neighborhood(X: GeometricComplex, vertex: int, spec: NeighborhoodSpec):
    if spec.mode == "hop":
        return hop_neighborhood(X, vertex, spec.k)
    return knn_neighborhood(X, vertex, spec.k)


def local_ect(
    X: GeometricComplex,
    spec: NeighborhoodSpec,
    m: int,
    l: int,
    seed: int = 0,
    normalize: bool = True,
) -> LocalEctSet:
    """Per-vertex transform of the local neighborhood, flattened to vectors.

    Every vertex shares the same seeded direction set. With ``normalize`` the
    neighborhood is re-centered on its focal vertex and scaled to the unit
    ball, and thresholds span [-1, 1]; otherwise coordinates are kept and the
    thresholds span [-R, R] for R the max vertex norm of the whole complex,
    so vectors stay comparable across vertices.
    """
    if normalize:
        bounds = (-1.0, 1.0)
    else:
        R = float(np.linalg.norm(X.vertices, axis=1).max()) if X.num_vertices else 1.0
        R = R if R > 0 else 1.0
        bounds = (-R, R)
    grid = make_grid(X.ambient_dim, m, l, bounds, seed)
    vectors = np.empty((X.num_vertices, m * l), dtype=np.float64)
    for x in range(X.num_vertices):
        patch, _ = _neighborhood(X, x, spec)
        if normalize:
            patch, _ = normalize_about(patch, X.vertices[x])
        vectors[x] = ect_hard(patch, grid).values.reshape(-1).astype(np.float64)
    return LocalEctSet(vectors, grid, spec, normalize)


def cost_estimate(X: GeometricComplex, spec: NeighborhoodSpec, m: int, l: int) -> int:
    """Total simplex-threshold tests: sum over vertices of m*l*|N_k(x)|,
    where |N_k(x)| counts the simplices of the neighborhood."""
    total = 0
    for x in range(X.num_vertices):
        patch, _ = _neighborhood(X, x, spec)
        total += patch.total_simplices()
    return int(m) * int(l) * total
