"""CLI: ingestion, command execution, report determinism and reruns."""

import json

import numpy as np
import pytest

from metricsearch.cli import CliError, ingest_file, main
from metricsearch.metrics import EuclideanDistance

from oracles import linear_range


def run_cli(*args):
    return main(list(args))


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_ingest_vectors(tmp_path):
    path = write(tmp_path, "pts.tsv", "0.0 1.0\n2.0,3.0\n4 5\n")
    points, meta = ingest_file(path, "vectors-delimited")
    assert points == [(0.0, 1.0), (2.0, 3.0), (4.0, 5.0)]
    assert meta == {"arity": 2}


def test_ingest_errors(tmp_path):
    empty = write(tmp_path, "empty.tsv", "\n\n")
    with pytest.raises(CliError, match="empty"):
        ingest_file(empty, "vectors-delimited")
    bad = write(tmp_path, "bad.tsv", "0.0 1.0\n0.0 x\n")
    with pytest.raises(CliError, match="row 1, column 1"):
        ingest_file(bad, "vectors-delimited")
    ragged = write(tmp_path, "ragged.tsv", "0.0 1.0\n0.0 1.0 2.0\n")
    with pytest.raises(CliError, match="arity"):
        ingest_file(ragged, "vectors-delimited")


def test_ingest_strings(tmp_path):
    path = write(tmp_path, "words.txt", "kitten\nsitting\nmitten\n")
    points, meta = ingest_file(path, "strings-lines")
    assert points == ["kitten", "sitting", "mitten"]
    assert meta["lengths"] == [6, 7]


def test_ingest_histograms(tmp_path):
    good = write(tmp_path, "h.txt",
                 "colour-lattice:0.5 0.5 0.5 0 0 0 0\n"
                 "colour-lattice:0.5 0.1667 0.1667 0.1667 0.1667 0.1666 0.1666\n")
    points, meta = ingest_file(good, "histograms", "colour-lattice:0.5")
    assert len(points) == 2 and meta["ground_size"] == 6
    bad = write(tmp_path, "bad.txt", "colour-lattice:0.5 0.5 0.4 0 0 0 0\n")
    with pytest.raises(CliError, match="row 0"):
        ingest_file(bad, "histograms", "colour-lattice:0.5")


def test_query_command_matches_oracle(tmp_path):
    rng = np.random.default_rng(0)
    pts = rng.uniform(size=(40, 2))
    data = write(tmp_path, "d.tsv", "\n".join(" ".join(repr(float(x)) for x in p) for p in pts))
    out = tmp_path / "report.json"
    assert run_cli("--command", "query", "--input", data, "--measure", "euclidean",
                   "--epsilon", "0.25", "--query", "0.5,0.5",
                   "--output", str(out)) == 0
    report = json.loads(out.read_text())
    expect = linear_range([tuple(p) for p in pts], EuclideanDistance(2),
                          (0.5, 0.5), 0.25)
    assert report["results"]["ids"] == expect
    assert report["results"]["stats"]["distance_evaluations"] > 0


def test_knn_command(tmp_path):
    data = write(tmp_path, "d.tsv", "0\n1\n3\n")
    out = tmp_path / "r.json"
    assert run_cli("--command", "query", "--input", data, "--measure", "euclidean",
                   "--k", "1", "--query", "0.9", "--output", str(out)) == 0
    assert json.loads(out.read_text())["results"]["ids"] == [1]


def test_build_then_load_matches_in_memory(tmp_path):
    rng = np.random.default_rng(1)
    pts = rng.uniform(size=(60, 3))
    data = write(tmp_path, "d.tsv", "\n".join(" ".join(repr(float(x)) for x in p) for p in pts))
    index = str(tmp_path / "index.json")
    out1, out2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    assert run_cli("--command", "build-index", "--input", data, "--index", index,
                   "--leaf-capacity", "4", "--output", str(tmp_path / "build.json")) == 0
    # query through the loaded index vs the in-memory build (same config)
    assert run_cli("--command", "query", "--input", data, "--index", index,
                   "--epsilon", "0.4", "--query", "0.5,0.5,0.5",
                   "--leaf-capacity", "4", "--output", out1) == 0
    assert run_cli("--command", "query", "--input", data,
                   "--epsilon", "0.4", "--query", "0.5,0.5,0.5",
                   "--leaf-capacity", "4", "--output", out2) == 0
    r1 = json.loads(open(out1).read())["results"]
    r2 = json.loads(open(out2).read())["results"]
    assert r1["ids"] == r2["ids"]
    assert r1["stats"] == r2["stats"]


def test_reports_are_deterministic_and_rerunnable(tmp_path):
    commands = []
    rng = np.random.default_rng(2)
    pts = rng.uniform(size=(30, 4))
    data = write(tmp_path, "d.tsv", "\n".join(" ".join(repr(float(x)) for x in p) for p in pts))
    words = write(tmp_path, "w.txt", "\n".join(
        "".join(rng.choice(list("ab"), size=5)) for _ in range(20)))
    commands.append(["--command", "query", "--input", data, "--epsilon", "0.6",
                     "--query", "0.5,0.5,0.5,0.5"])
    commands.append(["--command", "query", "--input", words, "--format",
                     "strings-lines", "--measure", "edit", "--k", "3",
                     "--query", "abab"])
    commands.append(["--command", "prefilter-run", "--input", data,
                     "--coords", "0,1", "--epsilon", "0.5", "--samples", "10"])
    commands.append(["--command", "concentration", "--input", data,
                     "--method", "ball-family", "--samples", "64"])
    commands.append(["--command", "cover", "--input", data, "--epsilon", "0.7"])
    commands.append(["--command", "colour-experiment", "--spacing", "0.5",
                     "--k", "50", "--epsilon", "0.2", "--samples", "200",
                     "--seed", "7"])
    hists = write(tmp_path, "h.txt",
                  "colour-lattice:1 1 0 0\ncolour-lattice:1 0 1 0\n"
                  "colour-lattice:1 0.25 0.75 0\n")
    commands.append(["--command", "query", "--input", hists, "--format",
                     "histograms", "--ground", "colour-lattice:1",
                     "--measure", "kantorovich", "--epsilon", "0.9",
                     "--query", "colour-lattice:1 0 0 1"])
    for i, cmd in enumerate(commands):
        out1 = str(tmp_path / f"r{i}a.json")
        out2 = str(tmp_path / f"r{i}b.json")
        out3 = str(tmp_path / f"r{i}c.json")
        assert run_cli(*cmd, "--output", out1) == 0, cmd
        assert run_cli(*cmd, "--output", out2) == 0
        assert open(out1, "rb").read() == open(out2, "rb").read(), cmd
        # rerun from the embedded config reproduces the report byte for byte
        assert run_cli("--command", "rerun", "--input", out1, "--output", out3) == 0
        assert open(out1, "rb").read() == open(out3, "rb").read(), cmd


def test_transform_flag_wraps_measure(tmp_path):
    rng = np.random.default_rng(3)
    pts = rng.uniform(size=(30, 2))
    data = write(tmp_path, "d.tsv",
                 "\n".join(" ".join(repr(float(x)) for x in p) for p in pts))
    out = str(tmp_path / "r.json")
    assert run_cli("--command", "query", "--input", data, "--measure", "euclidean",
                   "--transform", "power:0.5", "--epsilon", "0.6",
                   "--query", "0.5,0.5", "--output", out) == 0
    got = json.loads(open(out).read())["results"]["ids"]
    base = EuclideanDistance(2)
    expect = sorted(i for i, p in enumerate(pts)
                    if np.sqrt(base.distance(tuple(p), (0.5, 0.5))) < 0.6)
    assert got == expect


def test_commands_do_not_mutate_inputs(tmp_path):
    data = write(tmp_path, "d.tsv", "0.1 0.2\n0.5 0.5\n0.9 0.1\n")
    before = open(data, "rb").read()
    run_cli("--command", "query", "--input", data, "--epsilon", "0.5",
            "--query", "0.5,0.5", "--output", str(tmp_path / "r.json"))
    run_cli("--command", "cover", "--input", data, "--epsilon", "0.7",
            "--output", str(tmp_path / "c.json"))
    assert open(data, "rb").read() == before


def test_cli_error_paths(tmp_path):
    data = write(tmp_path, "d.tsv", "0 0\n1 1\n")
    assert run_cli("--command", "query", "--input", data,
                   "--query", "0,0") == 1  # neither epsilon nor k
    assert run_cli("--command", "rerun", "--input", data) == 1  # not a report
    missing = str(tmp_path / "nope.tsv")
    assert run_cli("--command", "query", "--input", missing,
                   "--epsilon", "1", "--query", "0,0") == 1


def test_histogram_query_through_cli(tmp_path):
    h = write(tmp_path, "h.txt",
              "colour-lattice:1 1 0 0\ncolour-lattice:1 0 1 0\n"
              "colour-lattice:1 0.5 0.5 0\n")
    out = str(tmp_path / "ing.json")
    assert run_cli("--command", "ingest", "--input", h, "--format", "histograms",
                   "--ground", "colour-lattice:1", "--output", out) == 0
    rep = json.loads(open(out).read())
    assert rep["results"]["rows"] == 3

    # transport-distance range query: the point masses at two vertices are at
    # distance 1, the even blend at distance 1/2 from each
    out = str(tmp_path / "q.json")
    assert run_cli("--command", "query", "--input", h, "--format", "histograms",
                   "--ground", "colour-lattice:1", "--measure", "kantorovich",
                   "--epsilon", "0.6", "--query", "colour-lattice:1 1 0 0",
                   "--output", out) == 0
    rep = json.loads(open(out).read())
    assert rep["results"]["ids"] == [0, 2]

    # quadratic-form distance over the same records
    out = str(tmp_path / "q2.json")
    assert run_cli("--command", "query", "--input", h, "--format", "histograms",
                   "--ground", "colour-lattice:1", "--measure", "quadratic",
                   "--k", "2", "--query", "colour-lattice:1 1 0 0",
                   "--output", out) == 0
    rep = json.loads(open(out).read())
    assert rep["results"]["ids"][0] == 2  # the blend is nearer than the far vertex
