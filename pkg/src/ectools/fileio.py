"""Text and binary file formats for graphs, complexes, and transform sets.

Text files are line oriented; lines starting with '#' are comments and may
carry an embedded run configuration as '# config: {json}'. Floats are written
with shortest round-trip precision so a write/read cycle is bit exact.
Transform sets and matrices are stored as one JSON metadata line followed by
a little-endian binary block.
"""

from __future__ import annotations

import json

import numpy as np

from .complexes import FeaturedGraph, GeometricComplex, NeighborhoodSpec
from .ect import EctMatrix, LocalEctSet, SamplingGrid
from .pipeline import FeatureTable

__all__ = [
    "FileFormatError",
    "write_graph",
    "read_graph",
    "write_complex",
    "read_complex",
    "write_lect_set",
    "read_lect_set",
    "write_ect_matrix",
    "read_ect_matrix",
    "lect_set_to_csv",
    "feature_table_to_csv",
    "read_embedded_config",
]


class FileFormatError(ValueError):
    """Parse failure with a 1-based line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def _fmt(x: float) -> str:
    return repr(float(x))


def _config_lines(config: dict | None) -> list[str]:
    if config is None:
        return []
    return ["# config: " + json.dumps(config, sort_keys=True)]


def _read_text_lines(path):
    """Yields (line_no, stripped_line) skipping comments and blanks."""
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            s = raw.strip()
            if not s or s.startswith("#"):
                continue
            yield ln, s


def read_embedded_config(path) -> dict | None:
    """Extract the embedded run configuration from any output file."""
    with open(path, "rb") as fh:
        head = fh.readline()
    try:
        text = head.decode("utf-8").strip()
    except UnicodeDecodeError:
        return None
    if text.startswith("{"):
        meta = json.loads(text)
        return meta.get("config")
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            s = raw.strip()
            if s.startswith("# config: "):
                return json.loads(s[len("# config: ") :])
            if s and not s.startswith("#"):
                break
    return None


def write_graph(path, graph: FeaturedGraph, config: dict | None = None) -> None:
    lines = _config_lines(config)
    lines.append(f"{graph.num_nodes} {graph.num_edges} {graph.feat_dim}")
    for i in range(graph.num_nodes):
        parts = [str(i)] + [_fmt(v) for v in graph.features[i]]
        if graph.labels is not None:
            parts.append(str(int(graph.labels[i])))
        lines.append(" ".join(parts))
    for u, v in graph.edges.tolist():
        lines.append(f"{u} {v}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_graph(path) -> FeaturedGraph:
    it = _read_text_lines(path)
    try:
        ln, header = next(it)
    except StopIteration:
        raise FileFormatError(path, 1, "empty file")
    try:
        n_nodes, n_edges, feat_dim = map(int, header.split())
    except ValueError:
        raise FileFormatError(path, ln, "expected header 'n_nodes n_edges feat_dim'")
    feats = np.zeros((n_nodes, feat_dim))
    labels: list[int] = []
    has_labels = None
    for _ in range(n_nodes):
        try:
            ln, s = next(it)
        except StopIteration:
            raise FileFormatError(path, ln, "unexpected end of file in node section")
        tok = s.split()
        if len(tok) == 1 + feat_dim:
            row_labeled = False
        elif len(tok) == 2 + feat_dim:
            row_labeled = True
        else:
            raise FileFormatError(path, ln, f"expected {1 + feat_dim} or {2 + feat_dim} fields")
        if has_labels is None:
            has_labels = row_labeled
        elif has_labels != row_labeled:
            raise FileFormatError(path, ln, "inconsistent label columns")
        try:
            idx = int(tok[0])
            feats[idx] = [float(v) for v in tok[1 : 1 + feat_dim]]
            if row_labeled:
                labels.append(int(tok[-1]))
        except (ValueError, IndexError):
            raise FileFormatError(path, ln, "malformed node line")
    edges = np.zeros((n_edges, 2), dtype=np.int64)
    for e in range(n_edges):
        try:
            ln, s = next(it)
        except StopIteration:
            raise FileFormatError(path, ln, "unexpected end of file in edge section")
        tok = s.split()
        if len(tok) != 2:
            raise FileFormatError(path, ln, "expected edge line 'u v'")
        try:
            edges[e] = [int(tok[0]), int(tok[1])]
        except ValueError:
            raise FileFormatError(path, ln, "malformed edge line")
    lab = np.array(labels, dtype=np.int64) if has_labels else None
    try:
        return FeaturedGraph(feats, edges, lab)
    except ValueError as exc:
        raise FileFormatError(path, ln, str(exc))


def write_complex(path, X: GeometricComplex, config: dict | None = None) -> None:
    lines = _config_lines(config)
    lines.append(f"{X.ambient_dim} {X.num_vertices}")
    for row in X.vertices:
        lines.append(" ".join(_fmt(v) for v in row))
    for k in sorted(X.simplices):
        for s in X.simplices[k].tolist():
            lines.append(f"{k} " + " ".join(map(str, s)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_complex(path) -> GeometricComplex:
    it = _read_text_lines(path)
    try:
        ln, header = next(it)
    except StopIteration:
        raise FileFormatError(path, 1, "empty file")
    try:
        ambient_dim, n_vertices = map(int, header.split())
    except ValueError:
        raise FileFormatError(path, ln, "expected header 'ambient_dim n_vertices'")
    verts = np.zeros((n_vertices, ambient_dim))
    for i in range(n_vertices):
        try:
            ln, s = next(it)
        except StopIteration:
            raise FileFormatError(path, ln, "unexpected end of file in vertex section")
        tok = s.split()
        if len(tok) != ambient_dim:
            raise FileFormatError(path, ln, f"expected {ambient_dim} coordinates")
        try:
            verts[i] = [float(v) for v in tok]
        except ValueError:
            raise FileFormatError(path, ln, "malformed vertex line")
    simplices: dict[int, list] = {}
    for ln, s in it:
        tok = s.split()
        try:
            k = int(tok[0])
            ids = [int(t) for t in tok[1:]]
        except ValueError:
            raise FileFormatError(path, ln, "malformed simplex line")
        if k < 0 or len(ids) != k + 1:
            raise FileFormatError(path, ln, f"simplex of dimension {k} needs {k + 1} vertex ids")
        if k >= 1:
            simplices.setdefault(k, []).append(ids)
    try:
        return GeometricComplex(
            verts, {k: np.array(v, dtype=np.int64) for k, v in simplices.items()}
        )
    except ValueError as exc:
        raise FileFormatError(path, ln if n_vertices else 1, str(exc))


def write_lect_set(path, ls: LocalEctSet, config: dict | None = None) -> None:
    meta = ls.metadata()
    meta["num_vertices"] = ls.num_vertices
    if config is not None:
        meta["config"] = config
    with open(path, "wb") as fh:
        fh.write((json.dumps(meta, sort_keys=True) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(ls.vectors, dtype="<f8").tobytes())


def read_lect_set(path) -> tuple[LocalEctSet, dict]:
    with open(path, "rb") as fh:
        meta = json.loads(fh.readline().decode("utf-8"))
        block = fh.read()
    m, l, nv = meta["m"], meta["l"], meta["num_vertices"]
    vectors = np.frombuffer(block, dtype="<f8").reshape(nv, m * l)
    grid = _grid_from_meta(meta)
    spec = NeighborhoodSpec(meta["neighborhood"]["mode"], meta["neighborhood"]["k"])
    return LocalEctSet(vectors, grid, spec, meta["normalized"]), meta


def _grid_from_meta(meta) -> SamplingGrid:
    from .ect import make_grid

    a, b = meta["bounds"]
    n = meta.get("ambient_dim")
    if n is None:
        n = len(meta["first_direction"]) if "first_direction" in meta else 2
    return make_grid(n, meta["m"], meta["l"], (a, b), meta["seed"])


def write_ect_matrix(path, em: EctMatrix, config: dict | None = None) -> None:
    a, b = em.grid.bounds
    meta = {
        "kind": em.kind,
        "m": em.grid.m,
        "l": em.grid.l,
        "seed": em.grid.seed,
        "bounds": [a, b],
        "ambient_dim": em.grid.ambient_dim,
        "provenance": em.provenance,
        "dtype": "<i8" if em.kind == "hard" else "<f8",
    }
    if config is not None:
        meta["config"] = config
    with open(path, "wb") as fh:
        fh.write((json.dumps(meta, sort_keys=True) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(em.values, dtype=meta["dtype"]).tobytes())


def read_ect_matrix(path) -> tuple[EctMatrix, dict]:
    with open(path, "rb") as fh:
        meta = json.loads(fh.readline().decode("utf-8"))
        block = fh.read()
    values = np.frombuffer(block, dtype=meta["dtype"]).reshape(meta["m"], meta["l"])
    grid = _grid_from_meta(meta)
    return EctMatrix(values, meta["kind"], grid, meta.get("provenance", "")), meta


def lect_set_to_csv(path, ls: LocalEctSet) -> None:
    cols = ["node_id"] + [f"d{di}_t{ti}" for di in range(ls.grid.m) for ti in range(ls.grid.l)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(ls.num_vertices):
            fh.write(",".join([str(i)] + [_fmt(v) for v in ls.vectors[i]]) + "\n")


def feature_table_to_csv(path, table: FeatureTable) -> None:
    header = ["node_id", "y"] + [c.name for c in table.columns]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(table.num_nodes):
            y = "" if table.labels is None else str(int(table.labels[i]))
            fh.write(",".join([str(i), y] + [_fmt(v) for v in table.values[i]]) + "\n")
