"""Command-line front end.

One command per invocation, selected with --command; every run resolves its
full configuration, executes against the library modules, and writes a
deterministic JSON report (config included, so `--command rerun` on a report
reproduces it byte for byte).  Wall-clock timing goes to stderr, never into
the report.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import colour as colour_mod
from . import concentration as conc_mod
from .histogram import (
    Histogram,
    KantorovichDistance,
    QuadraticFormDistance,
    parse_histogram_record,
    qbic_form,
)
from .index import BuildConfig, build_vp_tree, load_index, save_index
from .metrics import (
    DissimilarityMeasure,
    EditDistance,
    EuclideanDistance,
    HammingDistance,
    L1Distance,
    TransformFn,
    metric_transform,
)
from .prefilter import false_hit_profile, project_measure
from .workloads import Workload

REPORT_FORMAT = "metricsearch/1"

COMMANDS = (
    "ingest", "build-index", "query", "prefilter-run",
    "concentration", "cover", "colour-experiment", "rerun",
)


class CliError(ValueError):
    pass


# ---------------------------------------------------------------------------
# ingestion

def _parse_vector_row(line: str, row: int) -> tuple:
    raw = line.replace(",", " ").split()
    out = []
    for col, tok in enumerate(raw):
        try:
            out.append(float(tok))
        except ValueError:
            raise CliError(f"row {row}, column {col}: could not parse {tok!r}") from None
    return tuple(out)


def ingest_file(path: str, format: str, ground_spec: Optional[str] = None):
    """Parse a dataset file; row numbers become point ids.

    Returns (points, meta) where meta records arity / alphabet / ground id.
    """
    lines = Path(path).read_text().splitlines()
    rows = [(i, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not rows:
        raise CliError(f"{path}: empty dataset")

    if format == "vectors-delimited":
        points = []
        arity = None
        for row, ln in rows:
            p = _parse_vector_row(ln, row)
            if arity is None:
                arity = len(p)
                if arity == 0:
                    raise CliError(f"row {row}: no values")
            elif len(p) != arity:
                raise CliError(f"row {row}: arity {len(p)} != {arity} of earlier rows")
            points.append(p)
        return points, {"arity": arity}

    if format == "strings-lines":
        points = [ln.strip() for _, ln in rows]
        lengths = sorted({len(p) for p in points})
        alphabet = "".join(sorted({c for p in points for c in p}))
        return points, {"lengths": lengths, "alphabet": alphabet}

    if format == "histograms":
        if not ground_spec:
            raise CliError("histogram ingestion needs --ground")
        ground = resolve_ground(ground_spec)
        points = []
        for row, ln in rows:
            try:
                points.append(parse_histogram_record(ln, ground))
            except ValueError as exc:
                raise CliError(f"row {row}: {exc}") from None
        # the ground instance itself rides along (underscore keys never
        # reach a report) so the measure and query share it
        return points, {"ground": ground.name, "ground_size": len(ground),
                        "_ground": ground}

    raise CliError(f"unknown input format {format!r}")


def resolve_ground(spec: str):
    if spec.startswith("colour-lattice:"):
        return colour_mod.build_lattice(float(spec.split(":", 1)[1])).ground
    raise CliError(f"cannot resolve ground space {spec!r}")


def resolve_measure(spec: str, meta: dict, transform: Optional[str] = None) -> DissimilarityMeasure:
    name, _, param = spec.partition(":")
    if name == "euclidean":
        m: DissimilarityMeasure = EuclideanDistance(int(param) if param else meta["arity"])
    elif name == "l1":
        m = L1Distance(int(param) if param else meta["arity"])
    elif name == "hamming":
        length = int(param) if param else meta["lengths"][0]
        if meta.get("lengths") and meta["lengths"] != [length]:
            raise CliError("hamming needs equal-length strings")
        m = HammingDistance(length, meta.get("alphabet"))
    elif name == "edit":
        m = EditDistance(meta.get("alphabet"))
    elif name == "kantorovich":
        if "_ground" not in meta:
            raise CliError("kantorovich needs a histogram dataset (--format histograms)")
        m = KantorovichDistance(meta["_ground"])
    elif name == "quadratic":
        if "_ground" not in meta:
            raise CliError("quadratic needs a histogram dataset (--format histograms)")
        ground = meta["_ground"]
        m = QuadraticFormDistance(ground, qbic_form(ground))
    else:
        raise CliError(f"unknown measure {spec!r}")
    if transform:
        fam, _, p = transform.partition(":")
        m = metric_transform(m, TransformFn(fam, float(p) if p else None))
    return m


def _bounding_box_sampler(points):
    lo = np.min(np.asarray(points), axis=0)
    hi = np.max(np.asarray(points), axis=0)

    def sample(rng, count):
        return [tuple(p) for p in rng.uniform(lo, hi, size=(count, len(lo)))]
    return sample


def _string_sampler(meta):
    letters = list(meta["alphabet"]) or ["a"]
    lengths = meta["lengths"]

    def sample(rng, count):
        return ["".join(rng.choice(letters, size=int(rng.choice(lengths))))
                for _ in range(count)]
    return sample


def build_workload(points, meta, measure: DissimilarityMeasure) -> Workload:
    if "arity" in meta:
        sampler = _bounding_box_sampler(points)
    elif "alphabet" in meta:
        sampler = _string_sampler(meta)
    else:
        def sampler(rng, count):  # histograms: resample dataset entries
            idx = rng.integers(0, len(points), size=count)
            return [points[i] for i in idx]
    return Workload(measure, list(points), sampler)


def parse_query_point(raw: str, meta: dict):
    if "arity" in meta:
        return _parse_vector_row(raw, -1)
    if "_ground" in meta:
        try:
            return parse_histogram_record(raw, meta["_ground"])
        except ValueError as exc:
            raise CliError(f"query: {exc}") from None
    return raw


# ---------------------------------------------------------------------------
# execution

def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def execute(config: dict) -> dict:
    command = config["command"]
    if command == "ingest":
        points, meta = ingest_file(config["input"], config["format"], config.get("ground"))
        results = {"rows": len(points),
                   "meta": {k: v for k, v in meta.items() if not k.startswith("_")}}

    elif command == "build-index":
        points, meta = ingest_file(config["input"], config["format"], config.get("ground"))
        measure = resolve_measure(config["measure"], meta, config.get("transform"))
        workload = build_workload(points, meta, measure)
        tree = build_vp_tree(workload, BuildConfig(
            leaf_capacity=config["leaf_capacity"], branching=config["branching"],
            seed=config["seed"]))
        if not config.get("index"):
            raise CliError("build-index needs --index for the output index file")
        save_index(tree, config["index"])
        results = {
            "nodes": len(tree.nodes),
            "leaves": sum(1 for n in tree.nodes if n.is_leaf),
            "dataset_size": len(tree.dataset),
        }

    elif command == "query":
        points, meta = ingest_file(config["input"], config["format"], config.get("ground"))
        measure = resolve_measure(config["measure"], meta, config.get("transform"))
        workload = build_workload(points, meta, measure)
        if config.get("index"):
            tree = load_index(config["index"], workload)
        else:
            tree = build_vp_tree(workload, BuildConfig(
                leaf_capacity=config["leaf_capacity"], branching=config["branching"],
                seed=config["seed"]))
        centre = parse_query_point(config["query"], meta)
        if config.get("epsilon") is not None:
            ids, stats = tree.range_query(centre, config["epsilon"])
            results = {
                "mode": "range",
                "ids": ids.tolist(),
                "stats": {
                    "nodes_visited": stats.nodes_visited,
                    "nodes_pruned": stats.nodes_pruned,
                    "distance_evaluations": stats.distance_evaluations,
                },
            }
        elif config.get("k") is not None:
            ids = tree.knn_query(centre, config["k"])
            results = {"mode": "knn", "ids": ids}
        else:
            raise CliError("query needs --epsilon or --k")

    elif command == "prefilter-run":
        points, meta = ingest_file(config["input"], config["format"], config.get("ground"))
        measure = resolve_measure(config["measure"], meta, config.get("transform"))
        if not isinstance(measure, EuclideanDistance):
            raise CliError("prefilter-run projects a Euclidean measure")
        workload = build_workload(points, meta, measure)
        coords = [int(c) for c in config["coords"].split(",")]
        approx = project_measure(measure, coords)
        profile = false_hit_profile(workload, approx, config["epsilon"],
                                    config["samples"], seed=config["seed"])
        results = {
            "records": profile.records,
            "worst_rate": profile.worst_rate,
            "worst_query_index": profile.worst_query_index,
            "mean_rate": float(profile.rates.mean()),
        }

    elif command == "concentration":
        points, meta = ingest_file(config["input"], config["format"], config.get("ground"))
        measure = resolve_measure(config["measure"], meta, config.get("transform"))
        space = conc_mod.FiniteSpace.uniform(points, measure)
        est = conc_mod.estimate_concentration(
            space, method=config["method"], seed=config["seed"],
            sample_count=config["samples"])
        results = {"estimate": conc_mod.format_estimate_record(est).splitlines()}

    elif command == "cover":
        points, meta = ingest_file(config["input"], config["format"], config.get("ground"))
        measure = resolve_measure(config["measure"], meta, config.get("transform"))
        report = conc_mod.covering_number(points, measure, config["epsilon"])
        results = {
            "epsilon": report.epsilon,
            "n_balls": report.n_balls,
            "entropy": report.entropy,
            "method": report.method,
            "centers": report.centers,
        }

    elif command == "colour-experiment":
        lattice = colour_mod.build_lattice(config["spacing"])
        rep = colour_mod.qbic_blowup_experiment(
            lattice, k=config["k"], epsilon=config["epsilon"],
            sample_count=config["samples"], seed=config["seed"])
        results = rep.record()

    else:
        raise CliError(f"unknown command {command!r}")

    return {"report": REPORT_FORMAT, "config": _jsonable(config), "results": _jsonable(results)}


def render_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# argument handling

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="metricsearch",
        description="Metric-space similarity search toolkit")
    p.add_argument("--command", required=True, choices=COMMANDS)
    p.add_argument("--input", help="dataset file (or report file for rerun)")
    p.add_argument("--output", help="report file (stdout when omitted)")
    p.add_argument("--format", default="vectors-delimited",
                   choices=["vectors-delimited", "strings-lines", "histograms"])
    p.add_argument("--measure", default="euclidean",
                   help="euclidean[:arity] | l1[:arity] | hamming[:length] | edit | "
                        "kantorovich | quadratic (the last two need --format histograms)")
    p.add_argument("--transform", help="family[:param], e.g. power:0.5")
    p.add_argument("--ground", help="ground space id for histograms, e.g. colour-lattice:0.1")
    p.add_argument("--query", help="query point: comma-separated reals, or a string")
    p.add_argument("--index", help="index file (output of build-index, input of query)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spacing", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--leaf-capacity", type=int, default=16)
    p.add_argument("--branching", type=int, default=2)
    p.add_argument("--coords", help="projection coordinates, comma-separated, 0-based")
    p.add_argument("--method", default="auto",
                   help="concentration estimator: auto | exact-enumeration | "
                        "ball-family | lipschitz-family")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """The full resolved configuration that gets embedded in the report.

    The output path is deliberately excluded: a report must not depend on
    where it is written.
    """
    keys = ("command", "input", "format", "measure", "transform", "ground",
            "query", "index", "epsilon", "k", "seed", "spacing", "samples",
            "leaf_capacity", "branching", "coords", "method")
    return {k: getattr(args, k) for k in keys}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        if args.command == "rerun":
            if not args.input:
                raise CliError("rerun needs --input pointing at a report")
            old = json.loads(Path(args.input).read_text())
            if old.get("report") != REPORT_FORMAT:
                raise CliError(f"{args.input} is not a {REPORT_FORMAT} report")
            report = execute(old["config"])
        else:
            config = resolve_config(args)
            report = execute(config)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = render_report(report)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    elapsed = time.perf_counter() - started
    print(f"{args.command}: done in {elapsed:.3f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
