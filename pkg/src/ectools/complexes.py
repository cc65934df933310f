"""Embedded simplicial complexes, featured graphs, and neighborhood extraction.

All container types are immutable after construction (arrays are frozen), so
every operation in this module is a pure function that is safe to call
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GeometricComplex",
    "FeaturedGraph",
    "NeighborhoodSpec",
    "embed_graph",
    "hop_neighborhood",
    "knn_neighborhood",
    "is_isomorphic_featured",
]

ISO_ORACLE_MAX_NODES = 12
_MAX_JITTER_ATTEMPTS = 8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GeometricComplex:
    """A finite simplicial complex with vertices embedded in R^n.

    ``simplices`` maps dimension k >= 1 to an integer array of shape
    (count, k + 1) whose rows are strictly increasing vertex indices.
    Every vertex is implicitly a 0-simplex and is not listed explicitly.
    """

    vertices: np.ndarray  # (num_vertices, ambient_dim) float64
    simplices: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        verts = _frozen(np.asarray(self.vertices, dtype=np.float64))
        if verts.ndim != 2 or verts.shape[1] < 1:
            raise ValueError("vertices must be a (num_vertices, ambient_dim) array")
        object.__setattr__(self, "vertices", verts)
        cleaned: dict[int, np.ndarray] = {}
        for k in sorted(self.simplices):
            arr = np.asarray(self.simplices[k], dtype=np.int64)
            if arr.size == 0:
                continue
            if arr.ndim != 2 or arr.shape[1] != k + 1:
                raise ValueError(f"{k}-simplices must have shape (count, {k + 1})")
            cleaned[k] = _frozen(arr)
        object.__setattr__(self, "simplices", cleaned)
        self._validate()

    def _validate(self):
        n_verts = self.num_vertices
        seen: dict[int, set[tuple[int, ...]]] = {}
        for k, arr in self.simplices.items():
            if arr.min(initial=0) < 0 or arr.max(initial=-1) >= n_verts:
                raise ValueError(f"{k}-simplex vertex index out of bounds")
            if k >= 1 and not np.all(arr[:, 1:] > arr[:, :-1]):
                raise ValueError(f"{k}-simplex indices must be strictly increasing")
            rows = set(map(tuple, arr.tolist()))
            if len(rows) != arr.shape[0]:
                raise ValueError(f"duplicate {k}-simplices")
            seen[k] = rows
        # Closure under faces: every (k-1)-face of a k-simplex must be present.
        for k in sorted(seen, reverse=True):
            if k < 2:
                continue  # faces of edges are vertices, which are implicit
            faces = seen.get(k - 1, set())
            for row in seen[k]:
                for drop in range(k + 1):
                    face = row[:drop] + row[drop + 1 :]
                    if face not in faces:
                        raise ValueError(
                            f"missing {k - 1}-face {face} of {k}-simplex {row}"
                        )

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def dimension(self) -> int:
        return max(self.simplices) if self.simplices else 0

    def simplex_counts(self) -> list[int]:
        """Number of simplices per dimension, k = 0..dimension."""
        counts = [self.num_vertices]
        for k in range(1, self.dimension + 1):
            arr = self.simplices.get(k)
            counts.append(0 if arr is None else arr.shape[0])
        return counts

    def total_simplices(self) -> int:
        return sum(self.simplex_counts())

    def adjacency(self) -> list[list[int]]:
        """Vertex adjacency from the 1-skeleton only."""
        adj: list[list[int]] = [[] for _ in range(self.num_vertices)]
        edges = self.simplices.get(1)
        if edges is not None:
            for u, v in edges.tolist():
                adj[u].append(v)
                adj[v].append(u)
        return adj

    def induced(self, vertex_ids) -> tuple["GeometricComplex", np.ndarray]:
        """Full subcomplex on ``vertex_ids`` plus the old-index map.

        Keeps every simplex all of whose vertices lie in the selected set;
        vertex indices are remapped to 0..len-1 in increasing original order.
        """
        keep = np.unique(np.asarray(vertex_ids, dtype=np.int64))
        if keep.size and (keep[0] < 0 or keep[-1] >= self.num_vertices):
            raise IndexError("vertex id out of range")
        remap = -np.ones(self.num_vertices, dtype=np.int64)
        remap[keep] = np.arange(keep.size)
        sub: dict[int, np.ndarray] = {}
        for k, arr in self.simplices.items():
            mask = np.all(np.isin(arr, keep), axis=1)
            if mask.any():
                sub[k] = remap[arr[mask]]
        return GeometricComplex(self.vertices[keep], sub), keep


@dataclass(frozen=True)
class FeaturedGraph:
    """Undirected graph whose nodes carry feature vectors in R^n."""

    features: np.ndarray  # (num_nodes, feat_dim) float64
    edges: np.ndarray  # (num_edges, 2) int64, u < v, unique
    labels: np.ndarray | None = None  # (num_nodes,) int64 class ids

    def __post_init__(self):
        feats = _frozen(np.asarray(self.features, dtype=np.float64))
        if feats.ndim != 2:
            raise ValueError("features must be a (num_nodes, feat_dim) array")
        object.__setattr__(self, "features", feats)
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        e = np.sort(e, axis=1)
        if e.size:
            if e.min() < 0 or e.max() >= feats.shape[0]:
                raise ValueError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loops are not allowed")
            e = np.unique(e, axis=0)
        object.__setattr__(self, "edges", _frozen(e))
        if self.labels is not None:
            lab = _frozen(np.asarray(self.labels, dtype=np.int64))
            if lab.shape != (feats.shape[0],):
                raise ValueError("labels must be one class id per node")
            object.__setattr__(self, "labels", lab)

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def feat_dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for u, v in self.edges.tolist():
            adj[u].append(v)
            adj[v].append(u)
        return adj


@dataclass(frozen=True)
class NeighborhoodSpec:
    """How to extract the local neighborhood of a vertex."""

    mode: str  # "hop" or "knn"
    k: int

    def __post_init__(self):
        if self.mode not in ("hop", "knn"):
            raise ValueError("mode must be 'hop' or 'knn'")
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.mode == "knn" and self.k < 1:
            raise ValueError("knn mode requires k >= 1")


def embed_graph(
    graph: FeaturedGraph, jitter_sigma: float = 0.0, seed: int = 0
) -> GeometricComplex:
    """Embed a featured graph in R^n using node features as coordinates.

    Gaussian jitter with std ``jitter_sigma`` is added to break exact
    coincidences; on a collision the jitter is resampled from a fresh seed
    stream, a bounded number of times.
    """
    if jitter_sigma < 0:
        raise ValueError("jitter_sigma must be non-negative")
    rng = np.random.default_rng(seed)
    attempts = _MAX_JITTER_ATTEMPTS if jitter_sigma > 0 else 1
    for _ in range(attempts):
        pos = graph.features.copy()
        if jitter_sigma > 0:
            pos = pos + rng.normal(0.0, jitter_sigma, size=pos.shape)
        if np.unique(pos, axis=0).shape[0] == graph.num_nodes:
            simplices = {1: graph.edges} if graph.num_edges else {}
            return GeometricComplex(pos, simplices)
    raise ValueError("non-injective embedding")


def hop_neighborhood(
    X: GeometricComplex, vertex: int, k: int
) -> tuple[GeometricComplex, np.ndarray]:
    """Full subcomplex on all vertices within graph distance k of ``vertex``.

    Adjacency comes from the 1-skeleton. Returns the remapped subcomplex and
    the array of original vertex indices (position i holds the original id of
    new vertex i).
    """
    if not 0 <= vertex < X.num_vertices:
        raise IndexError("vertex out of range")
    if k < 0:
        raise ValueError("k must be non-negative")
    adj = X.adjacency()
    dist = {vertex: 0}
    frontier = [vertex]
    for d in range(1, k + 1):
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in dist:
                    dist[w] = d
                    nxt.append(w)
        if not nxt:
            break
        frontier = nxt
    return X.induced(sorted(dist))


def knn_neighborhood(
    X: GeometricComplex, vertex: int, k: int
) -> tuple[GeometricComplex, np.ndarray]:
    """Full subcomplex on ``vertex`` plus its k nearest vertices.

    Euclidean distance; ties broken by smaller vertex index so repeated calls
    are identical.
    """
    if not 0 <= vertex < X.num_vertices:
        raise IndexError("vertex out of range")
    if k > X.num_vertices - 1:
        raise ValueError("k exceeds number of other vertices")
    d = np.linalg.norm(X.vertices - X.vertices[vertex], axis=1)
    order = np.lexsort((np.arange(X.num_vertices), d))
    order = order[order != vertex]
    chosen = np.concatenate(([vertex], order[:k]))
    return X.induced(chosen)


def _feature_key(row: np.ndarray) -> bytes:
    return np.ascontiguousarray(row).tobytes()


def is_isomorphic_featured(
    g1: FeaturedGraph, g2: FeaturedGraph, max_nodes: int = ISO_ORACLE_MAX_NODES
) -> bool:
    """Exact featured-graph isomorphism test by pruned exhaustive search.

    A bijection must preserve edges in both directions and match feature
    vectors exactly. Intended as a desk-scale oracle; sizes above
    ``max_nodes`` raise.
    """
    if g1.num_nodes > max_nodes or g2.num_nodes > max_nodes:
        raise ValueError("oracle too large")
    if g1.num_nodes != g2.num_nodes or g1.num_edges != g2.num_edges:
        return False
    if g1.feat_dim != g2.feat_dim:
        return False

    n = g1.num_nodes
    by_feat: dict[bytes, list[int]] = {}
    for j in range(n):
        by_feat.setdefault(_feature_key(g2.features[j]), []).append(j)
    candidates = []
    for i in range(n):
        cand = by_feat.get(_feature_key(g1.features[i]), [])
        if not cand:
            return False
        candidates.append(cand)

    deg1 = np.zeros(n, dtype=int)
    deg2 = np.zeros(n, dtype=int)
    for u, v in g1.edges:
        deg1[u] += 1
        deg1[v] += 1
    for u, v in g2.edges:
        deg2[u] += 1
        deg2[v] += 1
    if sorted(deg1) != sorted(deg2):
        return False

    adj1 = [set() for _ in range(n)]
    adj2 = [set() for _ in range(n)]
    for u, v in g1.edges.tolist():
        adj1[u].add(v)
        adj1[v].add(u)
    for u, v in g2.edges.tolist():
        adj2[u].add(v)
        adj2[v].add(u)

    # Assign the most constrained vertices first.
    order = sorted(range(n), key=lambda i: len(candidates[i]))
    mapping = [-1] * n
    used = [False] * n

    def backtrack(pos: int) -> bool:
        if pos == n:
            return True
        i = order[pos]
        for j in candidates[i]:
            if used[j] or deg1[i] != deg2[j]:
                continue
            ok = True
            for i2 in range(n):
                j2 = mapping[i2]
                if j2 < 0:
                    continue
                if (i2 in adj1[i]) != (j2 in adj2[j]):
                    ok = False
                    break
            if not ok:
                continue
            mapping[i] = j
            used[j] = True
            if backtrack(pos + 1):
                return True
            mapping[i] = -1
            used[j] = False
        return False

    return backtrack(0)
