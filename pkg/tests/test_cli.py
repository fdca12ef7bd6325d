import filecmp
import json

import numpy as np
import pytest

import ssbm
from ssbm.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def bundle(tmp_path):
    out = tmp_path / "bundle"
    assert run("generate", "--n", 2, "--vertices", 60, "--blocks", 3,
               "--shared", 2, "--seed", 5, "--out", out) == 0
    return out


def graph_args(bundle, n=2):
    return [bundle / f"graph_{k}.edges" for k in range(1, n + 1)]


def truth_args(bundle, n=2):
    return [bundle / f"true_partition_{k}.txt" for k in range(1, n + 1)]


class TestGenerate:
    def test_bundle_contents(self, bundle):
        names = {p.name for p in bundle.iterdir()}
        assert names == {"graph_1.edges", "graph_2.edges", "true_partition_1.txt",
                         "true_partition_2.txt", "true_mapping.txt", "manifest.json"}
        manifest = json.loads((bundle / "manifest.json").read_text())
        assert manifest["command"] == "generate"
        assert manifest["params"]["seed"] == 5

    def test_zero_shared_empty_mapping(self, tmp_path):
        out = tmp_path / "b0"
        assert run("generate", "--n", 2, "--vertices", 20, "--blocks", 2,
                   "--shared", 0, "--seed", 1, "--out", out) == 0
        mapping = ssbm.load_mapping(out / "true_mapping.txt")
        assert mapping.num_shared == 0

    def test_same_seed_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("generate", "--n", 2, "--vertices", 30, "--blocks", 3,
                       "--shared", 1, "--seed", 9, "--out", out) == 0
        for name in ("graph_1.edges", "graph_2.edges", "true_partition_1.txt",
                     "true_mapping.txt"):
            assert filecmp.cmp(a / name, b / name, shallow=False)


class TestFit:
    def test_ml_shared_outputs(self, bundle, tmp_path):
        out = tmp_path / "fit"
        assert run("fit", "--graphs", *graph_args(bundle), "--strategy", "ml_shared",
                   "--blocks", 3, "--shared", 2, "--sweeps", 20, "--seed", 3,
                   "--out", out) == 0
        mapping = ssbm.load_mapping(out / "mapping.txt")
        assert mapping.num_shared == 2
        assert all(np.array_equal(m, np.arange(2)) for m in mapping.maps)
        scores = (out / "scores.txt").read_text()
        assert "log_likelihood" in scores and "bic" in scores

    def test_single_rejects_shared_flag(self, bundle, tmp_path):
        code = run("fit", "--graphs", *graph_args(bundle), "--strategy", "single",
                   "--blocks", 3, "--shared", 1, "--out", tmp_path / "x")
        assert code == 2

    def test_rerun_identical(self, bundle, tmp_path):
        outs = [tmp_path / "f1", tmp_path / "f2"]
        for out in outs:
            assert run("fit", "--graphs", *graph_args(bundle), "--strategy", "multilevel",
                       "--blocks", 3, "--sweeps", 10, "--seed", 7, "--out", out) == 0
        for name in ("partition_1.txt", "partition_2.txt", "scores.txt"):
            assert filecmp.cmp(outs[0] / name, outs[1] / name, shallow=False)

    def test_trace_csv(self, bundle, tmp_path):
        out = tmp_path / "tr"
        assert run("fit", "--graphs", *graph_args(bundle), "--strategy", "shared",
                   "--blocks", 3, "--shared", 1, "--sweeps", 8, "--seed", 2,
                   "--trace", "--out", out) == 0
        rows = (out / "trace.csv").read_text().splitlines()
        assert rows[0] == "sweep,beta,llh,best_llh"
        assert len(rows) == 1 + 8

    def test_ml_shared_rerun_identical(self, bundle, tmp_path):
        outs = [tmp_path / "m1", tmp_path / "m2"]
        for out in outs:
            assert run("fit", "--graphs", *graph_args(bundle), "--strategy", "ml_shared",
                       "--blocks", 3, "--shared", 2, "--sweeps", 12, "--seed", 8,
                       "--out", out) == 0
        for name in ("partition_1.txt", "partition_2.txt", "mapping.txt", "scores.txt"):
            assert filecmp.cmp(outs[0] / name, outs[1] / name, shallow=False)

    def test_undirected_round_trip(self, tmp_path):
        bundle = tmp_path / "ub"
        assert run("generate", "--n", 2, "--vertices", 50, "--blocks", 3,
                   "--shared", 2, "--undirected", "--seed", 3, "--out", bundle) == 0
        out = tmp_path / "ufit"
        assert run("fit", "--graphs", *graph_args(bundle), "--strategy", "ml_shared",
                   "--blocks", 3, "--shared", 2, "--sweeps", 15, "--undirected",
                   "--seed", 3, "--out", out) == 0
        scores = dict(line.split(" ", 1) for line in
                      (out / "scores.txt").read_text().splitlines())
        graphs = [ssbm.load_edge_list(p, directed=False) for p in graph_args(bundle)]
        parts = [ssbm.load_partition(out / f"partition_{k}.txt") for k in (1, 2)]
        counts = [ssbm.compute_block_counts(g, p) for g, p in zip(graphs, parts)]
        mapping = ssbm.load_mapping(out / "mapping.txt")
        want = ssbm.shared_log_likelihood(counts, mapping)
        assert float(scores["log_likelihood"]) == pytest.approx(want, abs=1e-6)


class TestSelect:
    def test_exact_on_truth_recovers_sharing(self, bundle, tmp_path):
        out = tmp_path / "sel"
        assert run("select", "--graphs", *graph_args(bundle),
                   "--partitions", *truth_args(bundle), "--shared", 2,
                   "--solver", "exact", "--out", out) == 0
        inferred = ssbm.load_mapping(out / "mapping.txt")
        truth = ssbm.load_mapping(bundle / "true_mapping.txt")
        parts = [ssbm.load_partition(p) for p in truth_args(bundle)]
        score = ssbm.shared_ari(parts, inferred, parts, truth)
        assert score == 1.0

    def test_greedy_not_above_exact(self, bundle, tmp_path):
        values = {}
        for solver in ("exact", "greedy"):
            out = tmp_path / solver
            assert run("select", "--graphs", *graph_args(bundle),
                       "--partitions", *truth_args(bundle), "--shared", 2,
                       "--solver", solver, "--out", out) == 0
            text = dict(line.split(" ", 1) for line in
                        (out / "scores.txt").read_text().splitlines())
            values[solver] = float(text["log_likelihood"])
        assert values["greedy"] <= values["exact"] + 1e-9

    def test_zero_shared(self, bundle, tmp_path):
        out = tmp_path / "s0"
        assert run("select", "--graphs", *graph_args(bundle),
                   "--partitions", *truth_args(bundle), "--shared", 0,
                   "--out", out) == 0
        mapping = ssbm.load_mapping(out / "mapping.txt")
        assert mapping.num_shared == 0

    def test_rerun_identical_outputs(self, bundle, tmp_path):
        outs = [tmp_path / "r1", tmp_path / "r2"]
        for out in outs:
            assert run("select", "--graphs", *graph_args(bundle),
                       "--partitions", *truth_args(bundle), "--shared", 2,
                       "--solver", "greedy", "--out", out) == 0
        for name in ("mapping.txt", "scores.txt", "manifest.json"):
            assert filecmp.cmp(outs[0] / name, outs[1] / name, shallow=False)


class TestBicScan:
    def test_single_row(self, bundle, tmp_path):
        out = tmp_path / "scan0"
        assert run("bic-scan", "--graphs", *graph_args(bundle),
                   "--partitions", *truth_args(bundle),
                   "--s-min", 0, "--s-max", 0, "--out", out) == 0
        rows = (out / "bic_scan.csv").read_text().splitlines()
        assert rows[0] == "s,llh,params,bic"
        assert len(rows) == 2
        # consistent with the likelihood module
        graphs = [ssbm.load_edge_list(p, True) for p in graph_args(bundle)]
        parts = [ssbm.load_partition(p) for p in truth_args(bundle)]
        counts = [ssbm.compute_block_counts(g, p) for g, p in zip(graphs, parts)]
        score = ssbm.bic(counts, ssbm.SharedMapping.identity(2, 0))
        s, llh, params, bic = rows[1].split(",")
        assert float(llh) == pytest.approx(score.log_likelihood, abs=1e-9)
        assert float(bic) == pytest.approx(score.bic, abs=1e-9)

    def test_llh_non_increasing_with_exact(self, bundle, tmp_path):
        out = tmp_path / "scan"
        assert run("bic-scan", "--graphs", *graph_args(bundle),
                   "--partitions", *truth_args(bundle), "--solver", "exact",
                   "--out", out) == 0
        rows = (out / "bic_scan.csv").read_text().splitlines()[1:]
        llhs = [float(r.split(",")[1]) for r in rows]
        assert all(b <= a + 1e-9 for a, b in zip(llhs, llhs[1:]))

    def test_strategy_path_fits_partitions_first(self, bundle, tmp_path):
        out = tmp_path / "scanfit"
        assert run("bic-scan", "--graphs", *graph_args(bundle),
                   "--strategy", "multilevel", "--blocks", 3, "--seed", 6,
                   "--s-max", 2, "--out", out) == 0
        rows = (out / "bic_scan.csv").read_text().splitlines()
        assert len(rows) == 1 + 3

    def test_blocks_required_without_partitions(self, bundle, tmp_path):
        assert run("bic-scan", "--graphs", *graph_args(bundle),
                   "--out", tmp_path / "x") == 2


class TestEval:
    def test_eval_truth_scores_one(self, bundle, capsys):
        assert run("eval", "--partitions", *truth_args(bundle),
                   "--mapping", bundle / "true_mapping.txt",
                   "--true-partitions", *truth_args(bundle),
                   "--true-mapping", bundle / "true_mapping.txt") == 0
        lines = dict(line.split(" ", 1) for line in
                     capsys.readouterr().out.strip().splitlines())
        assert float(lines["mean_partition_ari"]) == 1.0
        assert float(lines["shared_ari"]) == 1.0


class TestBenchmark:
    def test_selectors_mode(self, tmp_path):
        out = tmp_path / "bench"
        assert run("benchmark", "--mode", "selectors", "--vertices", 40,
                   "--blocks", 3, "--shared", 1, "--max-graphs", 3,
                   "--seed", 1, "--out", out) == 0
        rows = (out / "selector_times.csv").read_text().splitlines()
        assert rows[0] == "n,solver,seconds,llh"
        assert len(rows) == 1 + 2 * 3

    def test_noise_mode(self, tmp_path):
        out = tmp_path / "noise"
        assert run("benchmark", "--mode", "noise", "--vertices", 40, "--blocks", 3,
                   "--shared", 1, "--n", 2, "--repeats", 2,
                   "--noise", "0.0,0.3", "--seed", 2, "--out", out) == 0
        rows = (out / "noise_shared_ari.csv").read_text().splitlines()
        assert rows[0] == "seed,noise,solver,shared_ari"
        assert len(rows) == 1 + 2 * 2 * 3

    def test_noise_sweep_solver_ordering(self, tmp_path):
        out = tmp_path / "noise_order"
        assert run("benchmark", "--mode", "noise", "--vertices", 150, "--blocks", 5,
                   "--shared", 3, "--n", 2, "--repeats", 5,
                   "--noise", "0.0,0.4", "--seed", 4, "--out", out) == 0
        rows = [r.split(",") for r in
                (out / "noise_shared_ari.csv").read_text().splitlines()[1:]]
        means = {}
        for _, noise, solver, score in rows:
            means.setdefault((float(noise), solver), []).append(float(score))
        mean = {k: float(np.mean(v)) for k, v in means.items()}
        assert mean[(0.0, "exact")] >= mean[(0.0, "greedy")] - 1e-9
        assert mean[(0.0, "greedy")] >= mean[(0.0, "random")] - 1e-9
        assert mean[(0.4, "exact")] < mean[(0.0, "exact")]

    def test_mcmc_mode_small(self, tmp_path):
        out = tmp_path / "mcmc"
        assert run("benchmark", "--mode", "mcmc", "--edges", "2000,4000",
                   "--avg-degree", 20, "--repeats", 2, "--seed", 3,
                   "--out", out) == 0
        rows = (out / "mcmc_times.csv").read_text().splitlines()
        assert rows[0] == "edges,vertices,sweep_seconds"
        assert len(rows) == 3


class TestExitCodes:
    def test_invalid_arguments(self):
        assert run("fit", "--graphs", "x.txt") == 2  # missing required flags

    def test_parse_failure(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("0 1\n1 zebra\n", encoding="utf-8")
        assert run("fit", "--graphs", bad, "--strategy", "single", "--blocks", 2,
                   "--out", tmp_path / "o") == 3

    def test_infeasible_shared(self, bundle, tmp_path):
        code = run("select", "--graphs", *graph_args(bundle),
                   "--partitions", *truth_args(bundle), "--shared", 9,
                   "--out", tmp_path / "o")
        assert code == 4

    def test_missing_file(self, tmp_path):
        assert run("fit", "--graphs", tmp_path / "nope.txt", "--strategy", "single",
                   "--blocks", 2, "--out", tmp_path / "o") == 2
