"""Vantage-point tree index with certified pruning.

The tree is a hierarchical cover of the dataset: the root block is the whole
dataset and each internal node's children partition its block.  Every node
carries a certificate (a vantage point id and precomputed bounds [a, b] on
the distances from that vantage to the node's block).  Distance-to-a-point
functions are 1-Lipschitz, so a query centre whose vantage distance falls
outside (a - eps, b + eps) cannot have an eps-neighbour inside the block and
the subtree is pruned; no other pruning is ever applied, which makes range
queries exact.

Trees are immutable after build and safe for concurrent queries.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .histogram import Histogram
from .metrics import DissimilarityMeasure, validate_metric
from .workloads import Workload

INDEX_FORMAT = "metricsearch-index/1"


class IndexBuildError(ValueError):
    """Raised when the dataset is empty or the measure fails validation."""


@dataclass(frozen=True)
class NodeCertificate:
    """1-Lipschitz certification data: f = d(vantage, .), f(block) in [a, b]."""

    vantage_id: int
    lower: float
    upper: float


@dataclass
class Node:
    node_id: int
    block: np.ndarray  # dataset ids, in split order
    certificate: NodeCertificate
    children: list[int] = field(default_factory=list)
    split_vantage: Optional[int] = None  # internal nodes: vantage its children share

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class BuildConfig:
    leaf_capacity: int = 16
    branching: int = 2
    vantage_policy: str = "max_spread"  # max_spread | random | first
    seed: int = 0
    validation_sample: int = 16

    def __post_init__(self):
        if self.leaf_capacity < 1:
            raise ValueError("leaf_capacity must be >= 1")
        if self.branching < 2:
            raise ValueError("branching must be >= 2")
        if self.vantage_policy not in ("max_spread", "random", "first"):
            raise ValueError(f"unknown vantage policy {self.vantage_policy!r}")


@dataclass
class QueryStats:
    nodes_visited: int = 0
    nodes_pruned: int = 0
    distance_evaluations: int = 0
    pruned_nodes: Optional[list[int]] = None


def _points_equal(a, b) -> bool:
    if isinstance(a, Histogram) or isinstance(b, Histogram):
        return a == b
    if isinstance(a, str) or isinstance(b, str):
        return a == b
    return len(a) == len(b) and all(x == y for x, y in zip(a, b))


class IndexTree:
    """Built by `build_vp_tree`; query through `range_query` / `knn_query`."""

    def __init__(self, workload: Workload, config: BuildConfig, nodes: list[Node]):
        self.workload = workload
        self.measure = workload.measure
        self.dataset = workload.dataset
        self.config = config
        self.nodes = nodes

    @property
    def root(self) -> Node:
        return self.nodes[0]

    def __len__(self) -> int:
        return len(self.dataset)

    # -- queries ----------------------------------------------------------

    def range_query(self, centre, epsilon: float,
                    collect_pruned: bool = False) -> tuple[np.ndarray, QueryStats]:
        """All dataset ids strictly within epsilon of the centre, exactly.

        A node is pruned only when its certificate already proves the centre
        has no eps-neighbour in the block, so nothing is ever missed.
        """
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.measure.check_point(centre)
        stats = QueryStats(pruned_nodes=[] if collect_pruned else None)
        vantage_cache: dict[int, float] = {}
        hits: list[np.ndarray] = []

        def vantage_distance(vid: int) -> float:
            if vid not in vantage_cache:
                vantage_cache[vid] = self.measure._dist(self.dataset[vid], centre)
                stats.distance_evaluations += 1
            return vantage_cache[vid]

        stack = [0]
        while stack:
            node = self.nodes[stack.pop()]
            stats.nodes_visited += 1
            cert = node.certificate
            f = vantage_distance(cert.vantage_id)
            if not (cert.lower - epsilon < f < cert.upper + epsilon):
                stats.nodes_pruned += 1
                if collect_pruned:
                    stats.pruned_nodes.append(node.node_id)
                continue
            if node.is_leaf:
                d = self.measure.batch_to([self.dataset[i] for i in node.block], centre)
                stats.distance_evaluations += len(node.block)
                hits.append(node.block[d < epsilon])
            else:
                stack.extend(reversed(node.children))

        if hits:
            result = np.sort(np.concatenate(hits))
        else:
            result = np.empty(0, dtype=np.int64)
        return result, stats

    def knn_query(self, centre, k: int) -> list[int]:
        """Ids of the k dataset points closest to the centre, excluding
        points equal to it; ties broken by ascending id.

        Realized as range queries with a geometrically expanding radius: the
        search stops once a strict range query of radius r returns at least
        k eligible points, because every unreturned point is then at
        distance >= r > (k-th best), certifying completeness.
        """
        self.measure.check_point(centre)
        excluded = {i for i, p in enumerate(self.dataset) if _points_equal(p, centre)}
        available = len(self.dataset) - len(excluded)
        if not 1 <= k <= available:
            raise ValueError(f"k={k} exceeds the {available} available points")

        rng = np.random.default_rng(self.config.seed)
        probe = int(rng.integers(len(self.dataset)))
        radius = self.measure._dist(self.dataset[probe], centre)
        if radius <= 0:
            radius = 1.0

        while True:
            ids, _ = self.range_query(centre, radius)
            eligible = [i for i in ids.tolist() if i not in excluded]
            if len(eligible) >= k:
                dists = self.measure.batch_to([self.dataset[i] for i in eligible], centre)
                ranked = sorted(zip(dists.tolist(), eligible))
                kth = ranked[k - 1][0]
                if kth >= radius:  # cannot happen: strict query returned it
                    raise AssertionError("k-th distance not certified complete")
                return [i for _, i in ranked[:k]]
            radius *= 2.0

    # -- audits ------------------------------------------------------------

    def audit(self) -> None:
        """Re-verify the structural invariants over the whole tree."""
        root = self.root
        if sorted(root.block.tolist()) != list(range(len(self.dataset))):
            raise AssertionError("root block is not the full dataset")
        for node in self.nodes:
            cert = node.certificate
            d = self.measure.batch_to([self.dataset[i] for i in node.block],
                                      self.dataset[cert.vantage_id])
            if d.min() < cert.lower - 1e-12 or d.max() > cert.upper + 1e-12:
                raise AssertionError(f"certificate bounds wrong at node {node.node_id}")
            if node.is_leaf:
                if len(node.block) > self.config.leaf_capacity:
                    raise AssertionError(f"oversized leaf {node.node_id}")
            else:
                union = np.sort(np.concatenate(
                    [self.nodes[c].block for c in node.children]))
                if not np.array_equal(union, np.sort(node.block)):
                    raise AssertionError(f"children do not cover node {node.node_id}")


def exact_set_distance(dataset: Sequence, block: Sequence[int], x,
                       measure: DissimilarityMeasure) -> float:
    """min over the block of rho(x, a): the exact certification function.

    Too expensive for query-time use; kept as the oracle that pruning
    decisions are replayed against.
    """
    block = list(block)
    if not block:
        raise ValueError("exact_set_distance needs a nonempty block")
    return float(measure.batch_to([dataset[i] for i in block], x).min())


def _select_vantage(block: np.ndarray, dataset: Sequence,
                    measure: DissimilarityMeasure, policy: str,
                    rng: np.random.Generator) -> int:
    if policy == "first" or len(block) == 1:
        return int(block[0])
    if policy == "random":
        return int(rng.choice(block))
    # max_spread: the candidate farthest on average from a reference sample
    cand = rng.choice(block, size=min(8, len(block)), replace=False)
    ref = rng.choice(block, size=min(16, len(block)), replace=False)
    ref_points = [dataset[i] for i in ref]
    best_id, best_score = int(cand[0]), -1.0
    for c in sorted(int(c) for c in cand):
        score = float(measure.batch_to(ref_points, dataset[c]).mean())
        if score > best_score + 1e-15:
            best_id, best_score = c, score
    return best_id


def build_vp_tree(workload: Workload, config: Optional[BuildConfig] = None) -> IndexTree:
    """Build the tree: validate the measure on a sample, then split blocks
    at distance quantiles around chosen vantage points.

    Children partition their parent's block (a disjoint cover), so no point
    is visited twice.  A non-triangle measure detected during validation
    aborts the build with the witnessing triple.
    """
    config = config or BuildConfig()
    dataset = workload.dataset
    if not dataset:
        raise IndexBuildError("cannot index an empty dataset")
    measure = workload.measure

    if len(dataset) >= 3:
        rng = np.random.default_rng(config.seed)
        size = min(len(dataset), max(3, config.validation_sample))
        sample_ids = rng.choice(len(dataset), size=size, replace=False)
        report = validate_metric(measure, [dataset[i] for i in sample_ids],
                                 pseudo_allowed=True)
        if not report.passed:
            raise IndexBuildError(
                f"measure failed metric validation: {report.violations[0]}")

    rng = np.random.default_rng(config.seed)
    nodes: list[Node] = []

    def new_node(block: np.ndarray, cert: NodeCertificate) -> Node:
        node = Node(node_id=len(nodes), block=block, certificate=cert)
        nodes.append(node)
        return node

    def split(node: Node) -> None:
        block = node.block
        if len(block) <= config.leaf_capacity:
            return
        v = _select_vantage(block, dataset, measure, config.vantage_policy, rng)
        d = measure.batch_to([dataset[i] for i in block], dataset[v])
        order = np.argsort(d, kind="stable")
        groups = np.array_split(order, min(config.branching, len(block)))
        node.split_vantage = v
        for g in groups:
            child_block = block[g]
            cert = NodeCertificate(vantage_id=v,
                                   lower=float(d[g].min()),
                                   upper=float(d[g].max()))
            child = new_node(child_block, cert)
            node.children.append(child.node_id)
            split(child)

    all_ids = np.arange(len(dataset), dtype=np.int64)
    root_v = _select_vantage(all_ids, dataset, measure, config.vantage_policy, rng)
    root_d = measure.batch_to(dataset, dataset[root_v])
    root = new_node(all_ids, NodeCertificate(root_v, float(root_d.min()),
                                             float(root_d.max())))
    split(root)
    return IndexTree(workload, config, nodes)


# ---------------------------------------------------------------------------
# persistence

def _point_repr(p) -> str:
    if isinstance(p, str):
        return p
    if isinstance(p, Histogram):
        return p.ground.name + ":" + p.weights.tobytes().hex()
    return repr(tuple(float(x) for x in p))


def dataset_fingerprint(dataset: Sequence) -> str:
    h = hashlib.sha256()
    for p in dataset:
        h.update(_point_repr(p).encode())
        h.update(b"\x00")
    return h.hexdigest()


def save_index(tree: IndexTree, path) -> None:
    """Structured-text dump: config, measure signature, dataset fingerprint,
    and per node the block, certificate, and children."""
    doc = {
        "format": INDEX_FORMAT,
        "config": {
            "leaf_capacity": tree.config.leaf_capacity,
            "branching": tree.config.branching,
            "vantage_policy": tree.config.vantage_policy,
            "seed": tree.config.seed,
            "validation_sample": tree.config.validation_sample,
        },
        "measure": tree.measure.signature(),
        "dataset_size": len(tree.dataset),
        "dataset_sha256": dataset_fingerprint(tree.dataset),
        "nodes": [
            {
                "id": n.node_id,
                "block": n.block.tolist(),
                "vantage": n.certificate.vantage_id,
                "a": n.certificate.lower,
                "b": n.certificate.upper,
                "children": n.children,
                "split_vantage": n.split_vantage,
            }
            for n in tree.nodes
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_index(path, workload: Workload) -> IndexTree:
    """Rebuild a tree over `workload`; refuses mismatched data or measures.

    Round-trips reproduce identical query results and pruning statistics.
    """
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != INDEX_FORMAT:
        raise ValueError(f"not a {INDEX_FORMAT} file")
    if doc["measure"] != workload.measure.signature():
        raise ValueError(
            f"index was built for measure {doc['measure']}, "
            f"workload uses {workload.measure.signature()}")
    if doc["dataset_sha256"] != dataset_fingerprint(workload.dataset):
        raise ValueError("index was built over a different dataset")
    config = BuildConfig(**doc["config"])
    nodes = [
        Node(
            node_id=nd["id"],
            block=np.asarray(nd["block"], dtype=np.int64),
            certificate=NodeCertificate(nd["vantage"], nd["a"], nd["b"]),
            children=list(nd["children"]),
            split_vantage=nd["split_vantage"],
        )
        for nd in sorted(doc["nodes"], key=lambda nd: nd["id"])
    ]
    return IndexTree(workload, config, nodes)
