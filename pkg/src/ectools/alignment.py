"""Rotation-invariant transform distance and gradient-based alignment.

The alignment objective is the squared L2 difference between the smooth
transforms of a fixed complex and a rotated complex, minimized over the skew
parametrization of SO(n) by momentum gradient descent with seeded random
restarts. Reported distances are recomputed with the hard transform at the
best rotation found: the max-norm value is the metric estimate, an upper
bound on the true infimum over rotations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

from .complexes import GeometricComplex, NeighborhoodSpec
from .ect import SamplingGrid, ect_hard, ect_smooth, normalize_about, _neighborhood
from .rotations import (
    RotationParams,
    num_params,
    rotation_matrix,
    rotation_matrix_and_derivatives,
)

__all__ = [
    "AlignmentOptions",
    "AlignmentResult",
    "rotate",
    "align",
    "rotation_invariant_distance",
    "local_align_distance",
    "hausdorff",
]

_STEP_FLOOR = 1e-13


@dataclass(frozen=True)
class AlignmentOptions:
    sharpness: float = 100.0
    restarts: int = 8
    max_iters: int = 500
    step: float = 0.05
    momentum: float = 0.9
    seed: int = 0
    early_stop_loss: float = 1e-12
    center: bool = True  # translate both complexes to their centroids
    scale: bool = True  # divide both by the larger of the two radii
    # Near-symmetric shapes leave a residual spin in the plane of the two
    # smallest principal axes; a positive value scans that many angles there
    # and polishes from the best one.
    axis_scan: int = 0


@dataclass(frozen=True)
class AlignmentResult:
    best_rotation: RotationParams
    rotation: np.ndarray  # realized matrix exp of the best parameters
    loss_trace: list[float]  # accepted smooth objective values, best restart
    final_loss_l2sq: float  # hard transform, at the best rotation
    final_loss_linf: float  # hard transform, at the best rotation
    restarts_used: int
    center_x: np.ndarray
    center_y: np.ndarray
    scale: float
    notes: list[str] = field(default_factory=list)

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        """Map points given in the second complex's original frame onto the
        first complex's frame using the recovered rotation."""
        return (np.asarray(points, dtype=np.float64) - self.center_y) @ self.rotation.T + self.center_x


def rotate(X: GeometricComplex, rho: RotationParams) -> GeometricComplex:
    """Apply the rotation to every vertex; simplices are unchanged."""
    if rho.n != X.ambient_dim:
        raise ValueError("rotation dimension does not match complex")
    R = rho.matrix()
    return GeometricComplex(X.vertices @ R.T, dict(X.simplices))


def hausdorff(P: np.ndarray, Q: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point sets, exact O(|P||Q|)."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.size == 0 or Q.size == 0:
        raise ValueError("point sets must be non-empty")
    D = cdist(P, Q)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


class _SimplexTable:
    """Vertex coordinates plus per-dimension simplex index arrays."""

    def __init__(self, X: GeometricComplex):
        self.vertices = np.ascontiguousarray(X.vertices)
        self.dims: list[tuple[int, np.ndarray | None]] = [(0, None)]
        for k in sorted(X.simplices):
            self.dims.append((k, X.simplices[k]))


def _smooth_matrix(table: _SimplexTable, W: np.ndarray, thr: np.ndarray, lam: float):
    """Smooth transform of the table's complex with vertex heights verts @ W.T.

    Returns the (m, l) matrix and per-dimension caches used by the gradient.
    """
    Hv = table.vertices @ W.T  # (V, m)
    m = W.shape[0]
    values = np.zeros((m, thr.size), dtype=np.float64)
    caches = []
    for k, idx in table.dims:
        sign = -1.0 if k % 2 else 1.0
        if idx is None:
            h = Hv
            vid = None
        else:
            gathered = Hv[idx]  # (S, k+1, m)
            amax = gathered.argmax(axis=1)  # (S, m)
            h = np.take_along_axis(gathered, amax[:, None, :], axis=1)[:, 0, :]
            vid = np.take_along_axis(idx[:, :, None], amax[:, None, :], axis=1)[:, 0, :]
        E = expit(lam * (thr[None, None, :] - h[:, :, None]))  # (S, m, l)
        values += sign * E.sum(axis=0)
        caches.append((sign, vid, E))
    return values, caches


def _loss_and_cache(table, W, thr, lam, target):
    values, caches = _smooth_matrix(table, W, thr, lam)
    diff = target - values
    return float((diff * diff).sum()), diff, caches


def _gradient(table, dirs, dRs, diff, caches, lam):
    """Analytic gradient of the squared-L2 objective w.r.t. skew parameters."""
    n = dirs.shape[1]
    M = np.zeros((dirs.shape[0], n), dtype=np.float64)
    for (k, idx), (sign, vid, E) in zip(table.dims, caches):
        sprime = E * (1.0 - E)  # logistic derivative / lam
        g = 2.0 * lam * sign * np.einsum("ml,sml->sm", diff, sprime)
        if vid is None:
            M += g.T @ table.vertices  # (m, V) @ (V, n)
        else:
            M += np.einsum("sm,smd->md", g, table.vertices[vid])
    dLdR = dirs.T @ M  # (n, n)
    return np.array([float((dLdR * dR).sum()) for dR in dRs])


def alignment_gradient(
    X: GeometricComplex,
    Y: GeometricComplex,
    grid: SamplingGrid,
    params: np.ndarray,
    sharpness: float = 100.0,
) -> np.ndarray:
    """Gradient of ||smooth(X) - smooth(rotate(Y))||_2^2 at the given skew
    parameters. Exposed for derivative checks against finite differences."""
    target = ect_smooth(X, grid, sharpness).values
    table = _SimplexTable(Y)
    R, dRs = rotation_matrix_and_derivatives(Y.ambient_dim, params)
    W = grid.directions @ R
    _, diff, caches = _loss_and_cache(table, W, grid.thresholds, sharpness, target)
    return _gradient(table, grid.directions, dRs, diff, caches, sharpness)


def alignment_loss(
    X: GeometricComplex,
    Y: GeometricComplex,
    grid: SamplingGrid,
    params: np.ndarray,
    sharpness: float = 100.0,
) -> float:
    """Smooth squared-L2 objective at the given skew parameters."""
    target = ect_smooth(X, grid, sharpness).values
    table = _SimplexTable(Y)
    R = rotation_matrix(Y.ambient_dim, params)
    W = grid.directions @ R
    loss, _, _ = _loss_and_cache(table, W, grid.thresholds, sharpness, target)
    return loss


def _preprocess(X, Y, opts):
    cx = X.vertices.mean(axis=0) if opts.center else np.zeros(X.ambient_dim)
    cy = Y.vertices.mean(axis=0) if opts.center else np.zeros(Y.ambient_dim)
    vx = X.vertices - cx
    vy = Y.vertices - cy
    scale = 1.0
    if opts.scale:
        rx = float(np.linalg.norm(vx, axis=1).max()) if vx.size else 0.0
        ry = float(np.linalg.norm(vy, axis=1).max()) if vy.size else 0.0
        scale = max(rx, ry)
        scale = scale if scale > 0 else 1.0
    Xp = GeometricComplex(vx / scale, dict(X.simplices))
    Yp = GeometricComplex(vy / scale, dict(Y.simplices))
    return Xp, Yp, cx, cy, scale


def align(
    X: GeometricComplex,
    Y: GeometricComplex,
    grid: SamplingGrid,
    opts: AlignmentOptions = AlignmentOptions(),
) -> AlignmentResult:
    """Find the rotation of Y whose smooth transform best matches X's.

    Momentum gradient descent on the skew parameters with step halving on any
    loss increase; one restart starts at the identity and the rest at seeded
    uniform-random parameters. The best restart is selected by lowest loss,
    ties by restart index, so the result is independent of scheduling.
    """
    if X.ambient_dim != Y.ambient_dim:
        raise ValueError("complexes must share ambient dimension")
    n = X.ambient_dim
    Xp, Yp, cx, cy, scale = _preprocess(X, Y, opts)
    target = ect_smooth(Xp, grid, opts.sharpness).values
    table = _SimplexTable(Yp)
    thr = grid.thresholds
    lam = opts.sharpness
    rng = np.random.default_rng(opts.seed)
    p = num_params(n)

    notes: list[str] = []
    best = None  # (loss, restart_index, params, trace)
    restarts_used = 0
    for r in range(max(1, opts.restarts)):
        theta = np.zeros(p) if r == 0 else rng.uniform(-np.pi, np.pi, size=p)
        restarts_used += 1
        try:
            loss, trace, theta = _descend(
                table, grid.directions, thr, lam, target, theta, opts
            )
        except FloatingPointError:
            notes.append(f"restart {r}: non-finite loss, aborted")
            continue
        if loss is None:
            notes.append(f"restart {r}: non-finite loss, aborted")
            continue
        if best is None or loss < best[0]:
            best = (loss, r, theta, trace)
        if best[0] <= opts.early_stop_loss:
            break
    if best is None:
        raise RuntimeError("alignment failed: every restart hit a non-finite loss")

    if opts.axis_scan > 0 and best[0] > opts.early_stop_loss:
        refined = _symmetry_plane_refine(Xp, table, grid, target, best, opts)
        if refined is not None and refined[0] < best[0]:
            best = refined

    loss, _, theta, trace = best
    params = RotationParams(n, theta)
    R = params.matrix()
    hx = ect_hard(Xp, grid).values
    rotated = GeometricComplex(Yp.vertices @ R.T, dict(Yp.simplices))
    hy = ect_hard(rotated, grid).values
    delta = (hx - hy).astype(np.float64)
    return AlignmentResult(
        best_rotation=params,
        rotation=R,
        loss_trace=trace,
        final_loss_l2sq=float((delta * delta).sum()),
        final_loss_linf=float(np.abs(delta).max()),
        restarts_used=restarts_used,
        center_x=cx,
        center_y=cy,
        scale=scale,
        notes=notes,
    )


def _symmetry_plane_refine(Xp, table, grid, target, best, opts):
    """Scan the residual spin in the near-symmetry plane of the target and
    polish from the best angle found."""
    from .rotations import params_from_matrix

    n = Xp.ambient_dim
    loss0, r0, theta0, _ = best
    V = Xp.vertices - Xp.vertices.mean(axis=0)
    _, vecs = np.linalg.eigh(V.T @ V)
    u, w = vecs[:, 0], vecs[:, 1]  # two smallest principal directions
    v = vecs[:, -1]  # dominant axis
    P = np.outer(u, u) + np.outer(w, w)
    Q = np.outer(w, u) - np.outer(u, w)
    # End-swap of the dominant axis, still orientation preserving.
    F = np.eye(n) - 2.0 * np.outer(v, v) - 2.0 * np.outer(w, w)
    R_best = rotation_matrix(n, theta0)
    thr = grid.thresholds
    scan_best = None
    for phi in np.linspace(0.0, 2.0 * np.pi, opts.axis_scan, endpoint=False):
        spin = np.eye(n) + (np.cos(phi) - 1.0) * P + np.sin(phi) * Q
        for R_cand in (spin @ R_best, F @ spin @ R_best):
            loss, _, _ = _loss_and_cache(
                table, grid.directions @ R_cand, thr, opts.sharpness, target
            )
            if scan_best is None or loss < scan_best[0]:
                scan_best = (loss, R_cand)
    if scan_best is None or not np.isfinite(scan_best[0]):
        return None
    theta_start = params_from_matrix(n, scan_best[1])
    loss, trace, theta = _descend(
        table, grid.directions, thr, opts.sharpness, target, theta_start, opts
    )
    if loss is None:
        return None
    return (loss, r0, theta, trace)


def _descend(table, dirs, thr, lam, target, theta, opts):
    R, dRs = rotation_matrix_and_derivatives(dirs.shape[1], theta)
    loss, diff, caches = _loss_and_cache(table, dirs @ R, thr, lam, target)
    if not np.isfinite(loss):
        return None, [], theta
    trace = [loss]
    vel = np.zeros_like(theta)
    step = opts.step
    grad = None
    iters = 0
    window = 30  # accepted-step window for the plateau break
    while iters < opts.max_iters and loss > opts.early_stop_loss:
        if len(trace) > window and trace[-window - 1] - loss <= 1e-9 * max(loss, 1.0):
            break
        if grad is None:
            grad = _gradient(table, dirs, dRs, diff, caches, lam)
            if not np.all(np.isfinite(grad)):
                return None, trace, theta
        vel_new = opts.momentum * vel - step * grad
        cand = theta + vel_new
        R, dRs_new = rotation_matrix_and_derivatives(dirs.shape[1], cand)
        cand_loss, cand_diff, cand_caches = _loss_and_cache(
            table, dirs @ R, thr, lam, target
        )
        iters += 1
        if not np.isfinite(cand_loss):
            return None, trace, theta
        if cand_loss <= loss:
            theta, loss, vel = cand, cand_loss, vel_new
            diff, caches, dRs = cand_diff, cand_caches, dRs_new
            grad = None
            trace.append(loss)
        else:
            step *= 0.5
            vel = np.zeros_like(theta)
            if step < _STEP_FLOOR:
                break
    return loss, trace, theta


def rotation_invariant_distance(
    X: GeometricComplex,
    Y: GeometricComplex,
    grid: SamplingGrid,
    opts: AlignmentOptions = AlignmentOptions(),
) -> float:
    """Max-norm hard-transform difference at the best rotation found; an
    upper bound on the infimum over all rotations."""
    return align(X, Y, grid, opts).final_loss_linf


def local_align_distance(
    X: GeometricComplex,
    x: int,
    y: int,
    spec: NeighborhoodSpec,
    grid: SamplingGrid,
    opts: AlignmentOptions = AlignmentOptions(),
) -> AlignmentResult:
    """Align the normalized neighborhood of y onto that of x within the same
    complex. Neighborhoods are centered on their focal vertices and unit
    scaled, so the rotation acts about the focal point."""
    px, _ = _neighborhood(X, x, spec)
    py, _ = _neighborhood(X, y, spec)
    px, _ = normalize_about(px, X.vertices[x])
    py, _ = normalize_about(py, X.vertices[y])
    local_opts = AlignmentOptions(
        sharpness=opts.sharpness,
        restarts=opts.restarts,
        max_iters=opts.max_iters,
        step=opts.step,
        momentum=opts.momentum,
        seed=opts.seed,
        early_stop_loss=opts.early_stop_loss,
        center=False,
        scale=False,
    )
    return align(px, py, grid, local_opts)
