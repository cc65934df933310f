"""Node-feature assembly, baseline classifier, and structural property checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.special import expit

from .complexes import (
    FeaturedGraph,
    GeometricComplex,
    NeighborhoodSpec,
    embed_graph,
    hop_neighborhood,
    is_isomorphic_featured,
)
from .ect import SamplingGrid, cost_estimate, ect_hard, local_ect, make_grid

__all__ = [
    "ColumnInfo",
    "FeatureTable",
    "SplitSpec",
    "make_splits",
    "build_features",
    "subsample_features",
    "TrainOptions",
    "LinearModel",
    "train_linear",
    "feature_importance",
    "ReconstructionReport",
    "probe_neighborhood_recovery",
    "IsoAgreementReport",
    "check_ect_isomorphism_agreement",
]

DEFAULT_BUDGET = 200_000_000
GRID_FLOOR_M = 8


@dataclass(frozen=True)
class ColumnInfo:
    """Provenance of one feature column."""

    name: str
    kind: str  # "raw" or "lect"
    k: int | None = None  # hop depth of the block
    dir_index: int | None = None
    thr_index: int | None = None
    direction: tuple | None = None
    threshold: float | None = None


@dataclass(frozen=True)
class FeatureTable:
    """Rows are nodes; columns are raw features followed by local-transform
    blocks, with per-column provenance metadata."""

    values: np.ndarray  # (n_nodes, n_cols) float64
    columns: tuple[ColumnInfo, ...]
    labels: np.ndarray | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if v.ndim != 2 or v.shape[1] != len(self.columns):
            raise ValueError("values shape must match column metadata")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def num_columns(self) -> int:
        return self.values.shape[1]

    def lect_column_indices(self) -> np.ndarray:
        return np.array(
            [i for i, c in enumerate(self.columns) if c.kind == "lect"], dtype=np.int64
        )


@dataclass(frozen=True)
class SplitSpec:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    seed: int

    def __post_init__(self):
        parts = [np.asarray(p, dtype=np.int64) for p in (self.train, self.val, self.test)]
        allidx = np.concatenate(parts)
        if np.unique(allidx).size != allidx.size:
            raise ValueError("splits must be disjoint")
        for name, arr in zip(("train", "val", "test"), parts):
            object.__setattr__(self, name, arr)


def make_splits(
    n: int,
    seed: int = 0,
    test_frac: float = 0.25,
    val_frac_of_train: float = 0.1,
) -> SplitSpec:
    """Random 75-25 train/test split with a tenth of train held out as
    validation."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_test = int(round(test_frac * n))
    rest = perm[n_test:]
    n_val = int(round(val_frac_of_train * rest.size))
    return SplitSpec(train=rest[n_val:], val=rest[:n_val], test=perm[:n_test], seed=seed)


def build_features(
    graph: FeaturedGraph,
    ks: list[int],
    m: int = 64,
    l: int = 64,
    seed: int = 0,
    jitter_sigma: float = 0.0,
    budget: int = DEFAULT_BUDGET,
) -> FeatureTable:
    """Concatenate raw node features with one local-transform block per hop
    depth in ``ks``. Deterministic for a fixed seed; the same direction set
    is shared by every block."""
    X = embed_graph(graph, jitter_sigma, seed)
    cols = [ColumnInfo(name=f"raw_{j}", kind="raw") for j in range(graph.feat_dim)]
    blocks = [graph.features]
    for k in ks:
        spec = NeighborhoodSpec("hop", k)
        cost = cost_estimate(X, spec, m, l)
        if cost > budget:
            raise ValueError(
                f"estimated cost {cost} = m*l*sum_x |N_k(x)| simplex-threshold "
                f"tests exceeds budget {budget}"
            )
        ls = local_ect(X, spec, m, l, seed=seed, normalize=True)
        dirs = ls.grid.directions
        thr = ls.grid.thresholds
        for di in range(m):
            for ti in range(l):
                cols.append(
                    ColumnInfo(
                        name=f"lect{k}_d{di}_t{ti}",
                        kind="lect",
                        k=k,
                        dir_index=di,
                        thr_index=ti,
                        direction=tuple(float(v) for v in dirs[di]),
                        threshold=float(thr[ti]),
                    )
                )
        blocks.append(ls.vectors)
    return FeatureTable(np.hstack(blocks), tuple(cols), labels=graph.labels)


def subsample_features(table: FeatureTable, count: int, seed: int = 0) -> FeatureTable:
    """Keep every raw column and a seeded uniform sample of ``count``
    local-transform columns (original order, metadata preserved)."""
    lect_idx = table.lect_column_indices()
    if count > lect_idx.size:
        raise ValueError(f"count {count} exceeds {lect_idx.size} available columns")
    rng = np.random.default_rng(seed)
    keep_lect = np.sort(rng.choice(lect_idx, size=count, replace=False))
    raw_idx = np.array(
        [i for i, c in enumerate(table.columns) if c.kind == "raw"], dtype=np.int64
    )
    keep = np.concatenate([raw_idx, keep_lect])
    return FeatureTable(
        table.values[:, keep],
        tuple(table.columns[i] for i in keep),
        labels=table.labels,
    )


@dataclass(frozen=True)
class TrainOptions:
    lr: float = 0.3
    iters: int = 2000
    l2: float = 0.05
    seed: int = 0
    # Checkpoint cadence for validation-based model selection; the returned
    # model is the state with the best validation accuracy (earliest wins on
    # ties, so training stays deterministic).
    val_every: int = 25


@dataclass(frozen=True)
class LinearModel:
    """One-vs-rest logistic regression on standardized columns."""

    weights: np.ndarray  # (n_classes, n_cols)
    bias: np.ndarray  # (n_classes,)
    mean: np.ndarray
    std: np.ndarray
    classes: np.ndarray

    def scores(self, X: np.ndarray) -> np.ndarray:
        Z = (X - self.mean) / self.std
        return Z @ self.weights.T + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.scores(X), axis=1)]


def train_linear(
    table: FeatureTable, splits: SplitSpec, opts: TrainOptions = TrainOptions()
) -> tuple[LinearModel, dict]:
    """Full-batch gradient descent on the one-vs-rest logistic loss with L2
    regularization. Deterministic given the options."""
    if table.labels is None:
        raise ValueError("feature table has no labels")
    y = table.labels
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("single-class data")
    Xtr = table.values[splits.train]
    ytr = y[splits.train]
    mean = Xtr.mean(axis=0)
    std = Xtr.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    Z = (Xtr - mean) / std
    n, d = Z.shape
    W = np.zeros((classes.size, d))
    b = np.zeros(classes.size)
    T = (ytr[None, :] == classes[:, None]).astype(np.float64)  # (C, n)
    checkpoint = None
    Zval = yval = None
    if splits.val.size:
        Zval = (table.values[splits.val] - mean) / std
        yval = y[splits.val]
    for it in range(1, opts.iters + 1):
        P = expit(W @ Z.T + b[:, None])  # (C, n)
        G = (P - T) / n
        W -= opts.lr * (G @ Z + opts.l2 * W)
        b -= opts.lr * G.sum(axis=1)
        if Zval is not None and (it % opts.val_every == 0 or it == opts.iters):
            pred = classes[np.argmax(Zval @ W.T + b, axis=1)]
            acc = float((pred == yval).mean())
            if checkpoint is None or acc > checkpoint[0]:
                checkpoint = (acc, W.copy(), b.copy())
    if checkpoint is not None:
        _, W, b = checkpoint
    model = LinearModel(W, b, mean, std, classes)

    metrics: dict = {}
    for name, idx in (("train", splits.train), ("val", splits.val), ("test", splits.test)):
        if idx.size == 0:
            continue
        pred = model.predict(table.values[idx])
        metrics[f"{name}_accuracy"] = float((pred == y[idx]).mean())
    pred = model.predict(table.values[splits.test])
    per_class = {}
    for c in classes.tolist():
        tp = int(((pred == c) & (y[splits.test] == c)).sum())
        fp = int(((pred == c) & (y[splits.test] != c)).sum())
        fn = int(((pred != c) & (y[splits.test] == c)).sum())
        per_class[str(c)] = {
            "precision": tp / (tp + fp) if tp + fp else 0.0,
            "recall": tp / (tp + fn) if tp + fn else 0.0,
            "support": int((y[splits.test] == c).sum()),
        }
    metrics["per_class"] = per_class
    return model, metrics


def feature_importance(model: LinearModel, table: FeatureTable) -> list[dict]:
    """Columns ranked by the max absolute class weight, ties by index.

    Local-transform columns carry their (k, direction, threshold) so the
    ranking can be read geometrically.
    """
    scores = np.abs(model.weights).max(axis=0)
    order = sorted(range(len(table.columns)), key=lambda j: (-scores[j], j))
    out = []
    for j in order:
        c = table.columns[j]
        out.append(
            {
                "column": j,
                "name": c.name,
                "weight": float(scores[j]),
                "kind": c.kind,
                "k": c.k,
                "direction": c.direction,
                "threshold": c.threshold,
            }
        )
    return out


@dataclass(frozen=True)
class ReconstructionReport:
    n_candidates: int
    n_matches: int
    unique: bool
    truth_matched: bool


def _patch_signature(verts: np.ndarray, edges: list[tuple[int, int]]):
    pos = sorted(map(tuple, verts.tolist()))
    epos = sorted(
        tuple(sorted((tuple(verts[a]), tuple(verts[b])))) for a, b in edges
    )
    return tuple(pos), tuple(epos)


def probe_neighborhood_recovery(
    graph: FeaturedGraph,
    vertex: int,
    grid: SamplingGrid,
    lattice_axes: list[np.ndarray],
    max_neighbors: int = 3,
    budget: int = 500_000,
) -> ReconstructionReport:
    """Desk-scale invertibility probe for 1-hop neighborhoods.

    Node features must sit on the given coordinate lattice. The focal node's
    position is taken as known, and every placement of 1..max_neighbors
    neighbors on lattice sites (with every neighbor-neighbor edge subset) is
    scanned; a candidate matches when its hard transform equals the patch's,
    cell for cell. Reports whether the true configuration is the unique
    match.
    """
    X = embed_graph(graph, 0.0, 0)
    patch, _ = hop_neighborhood(X, vertex, 1)
    if patch.num_vertices > 10:
        raise ValueError("patch too large for the probe")
    target = ect_hard(patch, grid).values
    center = X.vertices[vertex]

    mesh = np.meshgrid(*lattice_axes, indexing="ij")
    sites = np.stack([g.reshape(-1) for g in mesh], axis=1).astype(np.float64)
    sites = sites[~np.all(np.isclose(sites, center, atol=1e-12), axis=1)]
    n_sites = sites.shape[0]

    dirs, thr = grid.directions, grid.thresholds
    site_h = sites @ dirs.T  # (n_sites, m)
    center_h = center @ dirs.T  # (m,)

    truth_sig = _patch_signature(
        patch.vertices,
        [tuple(e) for e in patch.simplices.get(1, np.empty((0, 2), int)).tolist()],
    )

    n_candidates = 0
    n_matches = 0
    truth_matched = False
    for j in range(1, max_neighbors + 1):
        pair_ids = list(combinations(range(j), 2))
        for subset in combinations(range(n_sites), j):
            nb_h = site_h[list(subset)]  # (j, m)
            all_h = np.vstack([center_h[None, :], nb_h])  # vertices
            star_h = np.maximum(center_h[None, :], nb_h)  # center-neighbor edges
            for mask in range(1 << len(pair_ids)):
                n_candidates += 1
                if n_candidates > budget:
                    raise ValueError("search budget exceeded")
                extra = [pair_ids[i] for i in range(len(pair_ids)) if mask >> i & 1]
                edge_h = star_h
                if extra:
                    edge_h = np.vstack(
                        [star_h] + [np.maximum(nb_h[a], nb_h[b])[None, :] for a, b in extra]
                    )
                values = (all_h[:, :, None] <= thr[None, None, :]).sum(axis=0) - (
                    edge_h[:, :, None] <= thr[None, None, :]
                ).sum(axis=0)
                if np.array_equal(values, target):
                    n_matches += 1
                    cand_verts = np.vstack([center[None, :], sites[list(subset)]])
                    cand_edges = [(0, i + 1) for i in range(j)] + [
                        (a + 1, b + 1) for a, b in extra
                    ]
                    if _patch_signature(cand_verts, cand_edges) == truth_sig:
                        truth_matched = True
    return ReconstructionReport(
        n_candidates=n_candidates,
        n_matches=n_matches,
        unique=(n_matches == 1),
        truth_matched=truth_matched,
    )


@dataclass(frozen=True)
class IsoAgreementReport:
    ect_equal: bool
    isomorphic: bool
    agree: bool
    below_grid_floor: bool


def check_ect_isomorphism_agreement(
    g1: FeaturedGraph,
    g2: FeaturedGraph,
    m: int = 64,
    l: int = 64,
    seed: int = 0,
    grid_floor_m: int = GRID_FLOOR_M,
) -> IsoAgreementReport:
    """Compare transform-vector equality on a shared grid with the exhaustive
    featured-isomorphism oracle.

    Disagreements on grids below the direction floor are flagged as grid
    artifacts rather than failures (too few directions cannot separate
    rotationally coincident height data).
    """
    iso = is_isomorphic_featured(g1, g2)
    if g1.feat_dim != g2.feat_dim:
        return IsoAgreementReport(False, iso, not iso, m < grid_floor_m)
    X1 = embed_graph(g1, 0.0, 0)
    X2 = embed_graph(g2, 0.0, 0)
    R = max(
        float(np.linalg.norm(X1.vertices, axis=1).max()),
        float(np.linalg.norm(X2.vertices, axis=1).max()),
        1e-9,
    )
    grid = make_grid(g1.feat_dim, m, l, (-R, R), seed)
    equal = bool(
        np.array_equal(ect_hard(X1, grid).values, ect_hard(X2, grid).values)
    )
    return IsoAgreementReport(
        ect_equal=equal,
        isomorphic=iso,
        agree=(equal == iso),
        below_grid_floor=m < grid_floor_m,
    )
