"""Command-line entry point.

One binary with subcommands; flags mirror the run configuration one-to-one
and may be defaulted through environment variables with the ECTOOLS_ prefix
(for example ECTOOLS_M=128 sets --m). Every output file embeds the full run
configuration, and `ectools rerun <output>` re-executes that configuration;
numeric outputs reproduce bitwise.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import experiments
from .alignment import AlignmentOptions, align, hausdorff
from .complexes import NeighborhoodSpec, embed_graph
from .datagen import (
    gen_heterophily_graph,
    gen_k_star,
    gen_point_cloud,
    gen_random_complex,
    gen_wedged_spheres,
    measure_edge_homophily,
)
from .ect import cost_estimate, ect_hard, ect_smooth, grid_error_hint, local_ect, make_grid
from .fileio import (
    FileFormatError,
    feature_table_to_csv,
    lect_set_to_csv,
    read_complex,
    read_embedded_config,
    read_graph,
    write_complex,
    write_ect_matrix,
    write_graph,
    write_lect_set,
)
from .pipeline import TrainOptions, build_features, feature_importance, make_splits, subsample_features, train_linear

ENV_PREFIX = "ECTOOLS_"
COARSE_GRID_HINT = 0.05

EXPERIMENTS = ("kstar-align", "wedge-align", "hetero-class", "ablation-subsample")


class CliError(RuntimeError):
    pass


def _env(name: str, default):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return default
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def _write_report(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True) + "\n")


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _check_grid_warning(n, m, l):
    try:
        hint = grid_error_hint(n, m, l)
    except ValueError:
        return
    if hint > COARSE_GRID_HINT:
        _warn(f"coarse grid: domain error hint {hint:.3g} above {COARSE_GRID_HINT}")


def _sniff_input(path) -> str:
    """Graph headers have three integer fields, complex headers two."""
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            s = raw.strip()
            if not s or s.startswith("#"):
                continue
            return "graph" if len(s.split()) == 3 else "complex"
    raise CliError(f"{path}: empty input file")


def cmd_ect(cfg: dict) -> None:
    X = read_complex(cfg["input"])
    a, b = cfg["bounds"]
    grid = make_grid(X.ambient_dim, cfg["m"], cfg["l"], (a, b), cfg["seed"])
    _check_grid_warning(X.ambient_dim, cfg["m"], cfg["l"])
    cost = cfg["m"] * cfg["l"] * X.total_simplices()
    if cost > cfg["budget"]:
        raise CliError(
            f"budget exceeded: m*l*#simplices = {cost} > {cfg['budget']}"
        )
    if cfg["kind"] == "hard":
        em = ect_hard(X, grid)
    else:
        em = ect_smooth(X, grid, cfg["sharpness"])
    write_ect_matrix(cfg["out"], em, config=cfg)


def cmd_lect(cfg: dict) -> None:
    kind = cfg.get("input_kind") or _sniff_input(cfg["input"])
    if kind == "graph":
        graph = read_graph(cfg["input"])
        X = embed_graph(graph, cfg["jitter"], cfg["seed"])
    else:
        X = read_complex(cfg["input"])
    spec = NeighborhoodSpec(cfg["mode"], cfg["k"])
    cost = cost_estimate(X, spec, cfg["m"], cfg["l"])
    if cost > cfg["budget"]:
        raise CliError(
            f"budget exceeded: m*l*sum_x |N_k(x)| = {cost} > {cfg['budget']}"
        )
    _check_grid_warning(X.ambient_dim, cfg["m"], cfg["l"])
    ls = local_ect(X, spec, cfg["m"], cfg["l"], seed=cfg["seed"], normalize=cfg["normalize"])
    write_lect_set(cfg["out"], ls, config=cfg)
    if cfg.get("csv"):
        lect_set_to_csv(cfg["csv"], ls)


def cmd_align(cfg: dict) -> None:
    X = read_complex(cfg["input_x"])
    Y = read_complex(cfg["input_y"])
    a, b = cfg["bounds"]
    grid = make_grid(X.ambient_dim, cfg["m"], cfg["l"], (a, b), cfg["seed"])
    opts = AlignmentOptions(
        sharpness=cfg["sharpness"],
        restarts=cfg["restarts"],
        max_iters=cfg["max_iters"],
        seed=cfg["seed"],
    )
    res = align(X, Y, grid, opts)
    pre_h = hausdorff(X.vertices, Y.vertices)
    post_h = hausdorff(X.vertices, res.transform_points(Y.vertices))
    report = {
        "config": cfg,
        "rotation_row_major": [float(v) for v in res.rotation.reshape(-1)],
        "final_loss_l2sq": res.final_loss_l2sq,
        "final_loss_linf": res.final_loss_linf,
        "smooth_loss_final": res.loss_trace[-1],
        "restarts_used": res.restarts_used,
        "hausdorff_before": pre_h,
        "hausdorff_after": post_h,
        "notes": res.notes,
    }
    _write_report(cfg["out"], report)
    if cfg.get("trace_csv"):
        with open(cfg["trace_csv"], "w", encoding="utf-8") as fh:
            fh.write("iter,loss\n")
            for i, v in enumerate(res.loss_trace):
                fh.write(f"{i},{v!r}\n")


def cmd_classify(cfg: dict) -> None:
    graph = read_graph(cfg["input"])
    if graph.labels is None:
        raise CliError("classification needs a labeled graph file")
    table = build_features(
        graph,
        cfg["ks"],
        cfg["m"],
        cfg["l"],
        seed=cfg["seed"],
        jitter_sigma=cfg["jitter"],
        budget=cfg["budget"],
    )
    if cfg.get("subsample") is not None:
        table = subsample_features(table, cfg["subsample"], seed=cfg["seed"])
    splits = make_splits(graph.num_nodes, seed=cfg["seed"])
    opts = TrainOptions(lr=cfg["lr"], iters=cfg["iters"], l2=cfg["l2"], seed=cfg["seed"])
    model, metrics = train_linear(table, splits, opts)
    report = {
        "config": cfg,
        "metrics": metrics,
        "columns": table.num_columns,
        "top_features": feature_importance(model, table)[:10],
    }
    _write_report(cfg["out"], report)
    print(f"test accuracy: {metrics['test_accuracy']:.4f}")
    if cfg.get("features_csv"):
        feature_table_to_csv(cfg["features_csv"], table)


def cmd_generate(cfg: dict) -> None:
    kind = cfg["kind"]
    seed = cfg["seed"]
    if kind == "k_star":
        X = gen_k_star(cfg["k"], cfg["radius"], seed if cfg["random_phase"] else None)
        write_complex(cfg["out"], X, config=cfg)
    elif kind == "point_cloud":
        X = gen_point_cloud(cfg["n_points"], cfg["ambient_dim"], seed)
        write_complex(cfg["out"], X, config=cfg)
    elif kind == "random_complex":
        X = gen_random_complex(
            cfg["n_points"], cfg["max_dim"], cfg["density"], cfg["ambient_dim"], seed
        )
        write_complex(cfg["out"], X, config=cfg)
    elif kind == "wedged_spheres":
        cloud, tri = gen_wedged_spheres(cfg["points"], cfg["noise"], cfg["outliers"], seed)
        write_complex(cfg["out"], cloud, config=cfg)
        write_complex(cfg["out"] + ".triangulated", tri, config=cfg)
    elif kind == "heterophily_graph":
        g = gen_heterophily_graph(
            cfg["n_nodes"], cfg["n_classes"], cfg["feat_dim"], cfg["homophily"], seed
        )
        write_graph(cfg["out"], g, config=cfg)
        print(f"edge homophily: {measure_edge_homophily(g):.4f}")
    else:
        raise CliError(f"unknown kind {kind!r}")


def cmd_repro(cfg: dict) -> None:
    exp = cfg["experiment"]
    jobs = cfg["jobs"]
    if exp == "kstar-align":
        summary = experiments.kstar_alignment_experiment(
            ks=tuple(cfg["ks"]),
            trials=cfg["trials"],
            m=cfg["m"],
            l=cfg["l"],
            seed=cfg["seed"],
            restarts=cfg["restarts"],
            max_iters=cfg["max_iters"],
            jobs=jobs,
        )
    elif exp == "wedge-align":
        if cfg["noise"] > 0 or cfg["outliers_frac"] > 0:
            kind = "noise" if cfg["noise"] > 0 else "outliers"
            summary = experiments.robustness_experiment(
                kind,
                trials=cfg["trials"],
                points_per_sphere=cfg["points"],
                noise_sigma=cfg["noise"],
                outlier_frac=cfg["outliers_frac"],
                m=cfg["m"],
                l=cfg["l"],
                seed=cfg["seed"],
                restarts=cfg["restarts"],
                max_iters=cfg["max_iters"],
                jobs=jobs,
            )
        else:
            summary = experiments.wedge_alignment_experiment(
                trials=cfg["trials"],
                points_per_sphere=cfg["points"],
                m=cfg["m"],
                l=cfg["l"],
                seed=cfg["seed"],
                restarts=cfg["restarts"],
                max_iters=cfg["max_iters"],
                jobs=jobs,
            )
    elif exp == "hetero-class":
        summary = experiments.hetero_classification_experiment(
            n_nodes=cfg["n_nodes"],
            n_classes=cfg["n_classes"],
            homophily=cfg["homophily"],
            seeds=cfg["seeds"],
            m=cfg["m"],
            l=cfg["l"],
            seed=cfg["seed"],
            jobs=jobs,
        )
    elif exp == "ablation-subsample":
        summary = experiments.subsample_ablation_experiment(
            counts=tuple(cfg["counts"]),
            n_nodes=cfg["n_nodes"],
            n_classes=cfg["n_classes"],
            homophily=cfg["homophily"],
            seeds=cfg["seeds"],
            m=cfg["m"],
            l=cfg["l"],
            seed=cfg["seed"],
            jobs=jobs,
        )
    else:
        raise CliError(f"unknown experiment {exp!r}; choose from {EXPERIMENTS}")
    _write_report(cfg["out"], {"config": cfg, "summary": summary})
    for key, value in summary.items():
        if isinstance(value, (int, float, str)):
            print(f"{key}: {value}")


def cmd_rerun(cfg: dict) -> None:
    embedded = read_embedded_config(cfg["input"])
    if embedded is None:
        raise CliError(f"{cfg['input']}: no embedded configuration found")
    embedded = dict(embedded)
    embedded["out"] = cfg["out"]
    command = embedded.get("command")
    handler = _HANDLERS.get(command)
    if handler is None:
        raise CliError(f"embedded configuration has unknown command {command!r}")
    handler(embedded)


_HANDLERS = {
    "ect": cmd_ect,
    "lect": cmd_lect,
    "align": cmd_align,
    "classify": cmd_classify,
    "generate": cmd_generate,
    "repro": cmd_repro,
}


def _add_grid_flags(p, m=64, l=64):
    p.add_argument("--m", type=int, default=_env("m", m), help="number of directions")
    p.add_argument("--l", type=int, default=_env("l", l), help="number of thresholds")
    p.add_argument("--seed", type=int, default=_env("seed", 0))
    p.add_argument(
        "--bounds", type=float, nargs=2, default=(-1.0, 1.0), metavar=("A", "B")
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ectools",
        description="Euler characteristic transforms of embedded complexes: "
        "exact and smooth evaluation, local node features, rotation "
        "alignment, and experiment reproduction.",
        epilog=f"Any flag can be defaulted via {ENV_PREFIX}<NAME> environment variables.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ect", help="transform of a complex file")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    _add_grid_flags(p)
    p.add_argument("--kind", choices=("hard", "smooth"), default="hard")
    p.add_argument("--lambda", dest="sharpness", type=float, default=_env("lambda", 100.0))
    p.add_argument("--budget", type=int, default=_env("budget", 200_000_000))

    p = sub.add_parser("lect", help="per-vertex local transforms")
    p.add_argument("input", help="graph or complex file (sniffed by header)")
    p.add_argument("--out", required=True)
    _add_grid_flags(p)
    p.add_argument("--k", type=int, default=_env("k", 1))
    p.add_argument("--mode", choices=("hop", "knn"), default=_env("mode", "hop"))
    p.add_argument("--no-normalize", dest="normalize", action="store_false")
    p.add_argument("--jitter", type=float, default=_env("jitter", 0.0))
    p.add_argument("--budget", type=int, default=_env("budget", 200_000_000))
    p.add_argument("--csv", help="also export as CSV")

    p = sub.add_parser("align", help="rotation alignment of two complexes")
    p.add_argument("input_x")
    p.add_argument("input_y")
    p.add_argument("--out", required=True)
    _add_grid_flags(p, m=32, l=32)
    p.add_argument("--lambda", dest="sharpness", type=float, default=_env("lambda", 100.0))
    p.add_argument("--restarts", type=int, default=_env("restarts", 8))
    p.add_argument("--max-iters", type=int, default=_env("max_iters", 500))
    p.add_argument("--trace-csv", dest="trace_csv", help="write the loss trace as CSV")

    p = sub.add_parser("classify", help="node classification on transform features")
    p.add_argument("input", help="labeled graph file")
    p.add_argument("--out", required=True)
    _add_grid_flags(p)
    p.add_argument("--ks", type=int, nargs="*", default=[1], help="hop depths, empty for raw only")
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--jitter", type=float, default=_env("jitter", 0.0))
    p.add_argument("--budget", type=int, default=_env("budget", 200_000_000))
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--iters", type=int, default=400)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--features-csv", dest="features_csv")

    p = sub.add_parser("generate", help="write synthetic datasets")
    p.add_argument(
        "--kind",
        required=True,
        choices=("k_star", "point_cloud", "random_complex", "wedged_spheres", "heterophily_graph"),
    )
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=_env("seed", 0))
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--random-phase", action="store_true")
    p.add_argument("--n-points", type=int, default=100)
    p.add_argument("--ambient-dim", type=int, default=2)
    p.add_argument("--max-dim", type=int, default=2)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--points", type=int, default=500, help="points per sphere")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--outliers", type=int, default=0)
    p.add_argument("--n-nodes", type=int, default=600)
    p.add_argument("--n-classes", type=int, default=3)
    p.add_argument("--feat-dim", type=int, default=2)
    p.add_argument("--homophily", type=float, default=0.1)

    p = sub.add_parser("repro", help="run a packaged experiment protocol")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--out", required=True)
    _add_grid_flags(p, m=32, l=32)
    p.add_argument("--trials", type=int, default=_env("trials", 50))
    p.add_argument("--seeds", type=int, default=_env("seeds", 10))
    p.add_argument("--jobs", type=int, default=_env("jobs", 1))
    p.add_argument("--restarts", type=int, default=_env("restarts", 8))
    p.add_argument("--max-iters", type=int, default=_env("max_iters", 300))
    p.add_argument("--ks", type=int, nargs="*", default=[2, 3, 5, 11])
    p.add_argument("--points", type=int, default=500, help="points per sphere")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--outliers-frac", type=float, default=0.0)
    p.add_argument("--n-nodes", type=int, default=600)
    p.add_argument("--n-classes", type=int, default=3)
    p.add_argument("--homophily", type=float, default=0.1)
    p.add_argument("--counts", type=int, nargs="*", default=[0, 50, 500, 4096])

    p = sub.add_parser("rerun", help="re-execute the configuration embedded in an output file")
    p.add_argument("input")
    p.add_argument("--out", required=True)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    cfg = {k: v for k, v in vars(args).items()}
    if isinstance(cfg.get("bounds"), tuple):
        cfg["bounds"] = list(cfg["bounds"])
    command = cfg["command"]
    try:
        if command == "rerun":
            cmd_rerun(cfg)
        else:
            _HANDLERS[command](cfg)
    except (CliError, FileFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
