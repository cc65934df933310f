"""Seeded synthetic instance generators for experiments and property tests."""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .complexes import FeaturedGraph, GeometricComplex

__all__ = [
    "gen_k_star",
    "gen_point_cloud",
    "gen_wedged_spheres",
    "gen_random_complex",
    "gen_heterophily_graph",
    "measure_edge_homophily",
    "degree_bucket",
]


def gen_k_star(k: int, radius: float = 1.0, seed: int | None = None) -> GeometricComplex:
    """Star tree embedded in the plane: one center at the origin and k leaves
    equally spaced on a circle. A seed rotates the whole star by a random
    phase; without one the first leaf sits at angle zero."""
    if k < 2:
        raise ValueError("need at least two leaves")
    phase = 0.0
    if seed is not None:
        phase = float(np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi))
    angles = phase + 2.0 * np.pi * np.arange(k) / k
    verts = np.zeros((k + 1, 2))
    verts[1:, 0] = radius * np.cos(angles)
    verts[1:, 1] = radius * np.sin(angles)
    edges = np.array([[0, i] for i in range(1, k + 1)], dtype=np.int64)
    return GeometricComplex(verts, {1: edges})


def gen_point_cloud(n_points: int, ambient_dim: int = 2, seed: int = 0) -> GeometricComplex:
    """Uniform points in [-1, 1]^n as a 0-dimensional complex."""
    rng = np.random.default_rng(seed)
    return GeometricComplex(rng.uniform(-1.0, 1.0, size=(n_points, ambient_dim)), {})


def _octahedron(center: np.ndarray) -> tuple[np.ndarray, list, list]:
    verts = center + np.array(
        [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
        dtype=np.float64,
    )
    antipodal = {(0, 1), (2, 3), (4, 5)}
    edges = [p for p in combinations(range(6), 2) if p not in antipodal]
    tris = [(a, b, c) for a in (0, 1) for b in (2, 3) for c in (4, 5)]
    return verts, edges, tris


def gen_wedged_spheres(
    points_per_sphere: int,
    noise_sigma: float = 0.0,
    outliers: int = 0,
    seed: int = 0,
) -> tuple[GeometricComplex, GeometricComplex]:
    """Samples from two unit spheres tangent at the origin, plus a
    triangulated variant (two octahedral sphere boundaries glued at the
    tangency vertex).

    Returns (point_cloud, triangulated). Noise and outliers only affect the
    point cloud; outliers are uniform in the cloud's bounding box inflated by
    1.5x about its center.
    """
    if points_per_sphere < 10:
        raise ValueError("need at least 10 points per sphere")
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    parts = []
    for c in centers:
        g = rng.standard_normal((points_per_sphere, 3))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        parts.append(c + g)
    pts = np.vstack(parts)
    if noise_sigma > 0:
        pts = pts + rng.normal(0.0, noise_sigma, size=pts.shape)
    if outliers > 0:
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        pts = np.vstack(
            [pts, rng.uniform(mid - 1.5 * half, mid + 1.5 * half, size=(outliers, 3))]
        )
    cloud = GeometricComplex(pts, {})

    all_verts: list[tuple[float, ...]] = []
    index: dict[tuple[float, ...], int] = {}
    edges, tris = [], []
    for c in centers:
        verts, e, t = _octahedron(c)
        local = []
        for row in verts:
            key = tuple(row)
            if key not in index:
                index[key] = len(all_verts)
                all_verts.append(key)
            local.append(index[key])
        edges += [tuple(sorted((local[a], local[b]))) for a, b in e]
        tris += [tuple(sorted((local[a], local[b], local[c2]))) for a, b, c2 in t]
    triangulated = GeometricComplex(
        np.array(all_verts),
        {1: np.array(sorted(set(edges)), dtype=np.int64),
         2: np.array(sorted(set(tris)), dtype=np.int64)},
    )
    return cloud, triangulated


def gen_random_complex(
    n_vertices: int,
    max_dim: int = 2,
    density: float = 0.3,
    ambient_dim: int = 2,
    seed: int = 0,
) -> GeometricComplex:
    """Random points with a random face-closed simplex set at the given
    density. Density 0 yields a bare point cloud."""
    if max_dim > 3:
        raise ValueError("max_dim above 3 is out of desk scale")
    rng = np.random.default_rng(seed)
    verts = rng.uniform(-1.0, 1.0, size=(n_vertices, ambient_dim))
    chosen: set[tuple[int, ...]] = set()
    for k in range(max_dim, 0, -1):
        for combo in combinations(range(n_vertices), k + 1):
            if rng.random() < density:
                chosen.add(combo)
    # Close under faces so the complex is valid by construction.
    stack = list(chosen)
    while stack:
        s = stack.pop()
        if len(s) <= 2:
            continue
        for drop in range(len(s)):
            face = s[:drop] + s[drop + 1 :]
            if face not in chosen:
                chosen.add(face)
                stack.append(face)
    grouped: dict[int, list] = {}
    for s in chosen:
        grouped.setdefault(len(s) - 1, []).append(s)
    simplices = {k: np.array(sorted(v), dtype=np.int64) for k, v in grouped.items()}
    return GeometricComplex(verts, simplices)


def degree_bucket(degree: int, n_classes: int) -> int:
    """Class id of a node by its degree band {4+2c, 5+2c}."""
    return int(np.clip((degree - 4) // 2, 0, n_classes - 1))


def measure_edge_homophily(graph: FeaturedGraph) -> float:
    """Fraction of edges joining same-label nodes, counted exactly."""
    if graph.labels is None:
        raise ValueError("graph has no labels")
    if graph.num_edges == 0:
        raise ValueError("graph has no edges")
    same = int((graph.labels[graph.edges[:, 0]] == graph.labels[graph.edges[:, 1]]).sum())
    return same / graph.num_edges


def _wire_quota(rng, planned, n_classes, m_intra, m_inter, deg_target):
    """Stub matching with exact intra/inter edge quotas.

    Every node carries exactly deg_target stubs, so realized degrees equal
    their targets except for the rare stub pair that cannot be placed
    (self-loop or duplicate late in the process), which is dropped.
    """
    stubs = [list(np.flatnonzero(planned == c).repeat(deg_target[planned == c])) for c in range(n_classes)]
    for s in stubs:
        rng.shuffle(s)
    edges: set[tuple[int, int]] = set()

    def add_edge(u, v):
        key = (min(u, v), max(u, v))
        if u == v or key in edges:
            return False
        edges.add(key)
        return True

    # Intra quota split across classes proportionally to their stub mass;
    # a class can host at most half its stubs as intra edges.
    mass = np.array([len(s) for s in stubs], dtype=float)
    cap = (mass // 2).astype(int)
    if cap.sum() < m_intra:
        return None
    alloc = np.minimum(np.floor(m_intra * mass / mass.sum()).astype(int), cap) if m_intra else np.zeros(n_classes, int)
    while alloc.sum() < m_intra:
        room = cap - alloc
        c = int(np.argmax(np.where(room > 0, mass - 2.0 * alloc, -np.inf)))
        alloc[c] += 1
    for c in range(n_classes):
        placed = 0
        tries = 0
        while placed < alloc[c] and len(stubs[c]) >= 2 and tries < 200:
            u, v = stubs[c][-1], stubs[c][-2]
            if add_edge(u, v):
                stubs[c].pop()
                stubs[c].pop()
                placed += 1
                tries = 0
            else:
                rng.shuffle(stubs[c])
                tries += 1
        if placed < alloc[c]:
            return None

    # Inter edges: always draw from the fullest class to keep matching feasible.
    placed = 0
    tries = 0
    while placed < m_inter and tries < 200:
        sizes = np.array([len(s) for s in stubs], dtype=float)
        if np.count_nonzero(sizes) < 2:
            break
        a = int(np.argmax(sizes))
        w = sizes.copy()
        w[a] = 0
        b = int(rng.choice(n_classes, p=w / w.sum()))
        u, v = stubs[a][-1], stubs[b][-1]
        if add_edge(u, v):
            stubs[a].pop()
            stubs[b].pop()
            placed += 1
            tries = 0
        else:
            rng.shuffle(stubs[a])
            rng.shuffle(stubs[b])
            tries += 1
    if placed < m_inter - max(2, m_inter // 200):
        return None
    return np.array(sorted(edges), dtype=np.int64)


def gen_heterophily_graph(
    n_nodes: int,
    n_classes: int,
    feat_dim: int = 2,
    homophily_target: float = 0.1,
    seed: int = 0,
    tolerance: float = 0.05,
) -> FeaturedGraph:
    """Planted-partition graph with a prescribed edge-homophily level.

    Classes are degree bands: class c aims for degrees {4+2c, 5+2c}, and the
    label of every node is defined by the realized degree band of its
    neighborhood (a structural rule, independent of the node's own feature
    vector). Features are uniform ring positions carrying no label signal, so
    only neighborhood structure is informative. Intra/inter edge counts are
    fixed up front, which pins the realized homophily at the target up to the
    small drift caused by nodes whose realized degree slips a band.
    """
    if not 0.0 <= homophily_target <= 1.0:
        raise ValueError("homophily target must lie in [0, 1]")
    if n_classes < 1:
        raise ValueError("need at least one class")
    if n_classes == 1 and homophily_target < 1.0:
        raise ValueError("infeasible target for the class count: one class forces homophily 1")
    if feat_dim < 1:
        raise ValueError("feat_dim must be positive")
    if n_nodes < 4 * n_classes:
        raise ValueError("too few nodes for the requested class count")

    for attempt in range(12):
        rng = np.random.default_rng(np.random.SeedSequence((seed, attempt)))
        # Class sizes inversely proportional to their degree band equalize the
        # per-class stub mass, keeping every homophily level reachable.
        weights = 1.0 / (4.5 + 2.0 * np.arange(n_classes))
        sizes = np.maximum(np.floor(n_nodes * weights / weights.sum()).astype(int), 2)
        while sizes.sum() < n_nodes:
            sizes[int(np.argmax(n_nodes * weights / weights.sum() - sizes))] += 1
        while sizes.sum() > n_nodes:
            sizes[int(np.argmax(sizes))] -= 1
        planned = np.repeat(np.arange(n_classes), sizes)
        rng.shuffle(planned)
        deg_target = 4 + 2 * planned + (np.arange(n_nodes) % 2)
        if deg_target.sum() % 2:
            deg_target[0] += 1  # node 0 has the low band value; +1 stays in band
        m_total = int(deg_target.sum()) // 2
        pairable = sum(int(deg_target[planned == c].sum()) // 2 for c in range(n_classes))
        m_intra = min(int(round(homophily_target * m_total)), pairable)
        # At target 1.0 odd stub masses can strand one stub per class; drop the
        # short edges instead of letting them cross classes.
        m_inter = 0 if homophily_target == 1.0 else m_total - m_intra
        edges = _wire_quota(rng, planned, n_classes, m_intra, m_inter, deg_target)
        if edges is None:
            continue
        deg = np.zeros(n_nodes, dtype=np.int64)
        for u, v in edges:
            deg[u] += 1
            deg[v] += 1
        labels = np.array([degree_bucket(d, n_classes) for d in deg], dtype=np.int64)
        angles = rng.uniform(0.0, 2.0 * np.pi, size=n_nodes)
        radii = rng.uniform(0.75, 1.25, size=n_nodes)
        feats = np.zeros((n_nodes, feat_dim))
        if feat_dim >= 2:
            feats[:, 0] = radii * np.cos(angles)
            feats[:, 1] = radii * np.sin(angles)
            if feat_dim > 2:
                feats[:, 2:] = rng.uniform(-0.1, 0.1, size=(n_nodes, feat_dim - 2))
        else:
            feats[:, 0] = rng.uniform(-1.0, 1.0, size=n_nodes)
        graph = FeaturedGraph(feats, edges, labels)
        if abs(measure_edge_homophily(graph) - homophily_target) <= tolerance:
            return graph
    raise ValueError("infeasible target for the class count")
