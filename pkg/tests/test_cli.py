import json

import numpy as np
import pytest

from sparseprefill.cli import main
from sparseprefill.patterns import load_pattern_configs
from sparseprefill.workload import PlantedLine, WorkloadSpec, save_workload

S, D = 512, 32


@pytest.fixture
def workload_path(tmp_path):
    heads = [
        WorkloadSpec(S, D, seed=1, planted=(PlantedLine("vertical", 12.0, column=200),)),
        WorkloadSpec(S, D, seed=2, planted=(PlantedLine("sink", 12.0, width=16),)),
    ]
    path = tmp_path / "wl.json"
    save_workload(path, S, D, heads)
    return path


def run_search(workload_path, tmp_path, name="cfg.json"):
    out = tmp_path / name
    rc = main([
        "search", "--workload", str(workload_path), "--out", str(out),
        "--budget-ashape", "16,64", "--vs-seeds", "4:16,8:8", "--bs-seeds", "4",
        "--step", "1", "--last-q", "32",
    ])
    assert rc == 0
    return out


class TestSearchCommand:
    def test_writes_config_for_every_head(self, workload_path, tmp_path):
        out = run_search(workload_path, tmp_path)
        entries = load_pattern_configs(out)
        assert sorted(e["head"] for e in entries) == [0, 1]

    def test_report_csv_lists_all_candidates(self, workload_path, tmp_path):
        out = tmp_path / "cfg.json"
        report = tmp_path / "report.csv"
        rc = main([
            "search", "--workload", str(workload_path), "--out", str(out),
            "--report", str(report), "--budget-ashape", "16,64",
            "--vs-seeds", "4:16", "--bs-seeds", "4", "--step", "1", "--last-q", "32",
        ])
        assert rc == 0
        lines = report.read_text().splitlines()
        # header + 2 heads x 3 candidates
        assert len(lines) == 7
        assert lines[0].startswith("head,candidate,pattern")


class TestRunCommand:
    def test_run_produces_reports(self, workload_path, tmp_path):
        cfg = run_search(workload_path, tmp_path)
        out = tmp_path / "rep.csv"
        out_json = tmp_path / "rep.json"
        rc = main([
            "run", "--config", str(cfg), "--workload", str(workload_path),
            "--out", str(out), "--json", str(out_json),
        ])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 3
        assert "t_estimate" not in lines[0]
        rows = json.loads(out_json.read_text())
        assert len(rows) == 2 and "t_sparse" in rows[0]

    def test_missing_head_config_fails(self, workload_path, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"format_version": 1, "heads": [
            {"layer": 0, "head": 0, "pattern": "a_shape",
             "params": {"global_tokens": 16, "local_window": 64}},
        ]}))
        rc = main([
            "run", "--config", str(cfg), "--workload", str(workload_path),
            "--out", str(tmp_path / "rep.csv"),
        ])
        assert rc == 1

    def test_threaded_run_matches_serial(self, workload_path, tmp_path, monkeypatch):
        cfg = run_search(workload_path, tmp_path)
        serial, threaded = tmp_path / "s.csv", tmp_path / "t.csv"
        rc = main(["run", "--config", str(cfg), "--workload", str(workload_path),
                   "--out", str(serial)])
        assert rc == 0
        monkeypatch.setenv("SPARSEPREFILL_THREADS", "4")
        rc = main(["run", "--config", str(cfg), "--workload", str(workload_path),
                   "--out", str(threaded)])
        assert rc == 0
        assert serial.read_bytes() == threaded.read_bytes()


class TestPipelineDeterminism:
    def test_search_and_run_byte_identical(self, workload_path, tmp_path):
        outputs = []
        for tag in ("one", "two"):
            cfg = run_search(workload_path, tmp_path, name=f"cfg_{tag}.json")
            rep = tmp_path / f"rep_{tag}.csv"
            rc = main(["run", "--config", str(cfg), "--workload", str(workload_path),
                       "--out", str(rep)])
            assert rc == 0
            outputs.append((cfg.read_bytes(), rep.read_bytes()))
        assert outputs[0] == outputs[1]


class TestRecallCommand:
    def test_sweep_monotone(self, workload_path, tmp_path):
        out = tmp_path / "recall.csv"
        rc = main([
            "recall", "--workload", str(workload_path), "--pattern", "vertical_slash",
            "--sweep", "kv=2..32", "--ks", "4", "--last-q", "32", "--out", str(out),
        ])
        assert rc == 0
        rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
        by_head = {}
        for head, _, value, recall, _ in rows:
            by_head.setdefault(head, []).append(float(recall))
        for recalls in by_head.values():
            assert all(a <= b + 1e-9 for a, b in zip(recalls, recalls[1:]))

    def test_explicit_step_sweep(self, workload_path, tmp_path):
        out = tmp_path / "recall.csv"
        rc = main([
            "recall", "--workload", str(workload_path), "--pattern", "block_sparse",
            "--sweep", "kb=1..3:1", "--out", str(out),
        ])
        assert rc == 0
        assert len(out.read_text().splitlines()) == 1 + 2 * 3

    def test_bad_sweep_param_fails(self, workload_path, tmp_path):
        rc = main([
            "recall", "--workload", str(workload_path), "--pattern", "vertical_slash",
            "--sweep", "bogus=1..4", "--out", str(tmp_path / "r.csv"),
        ])
        assert rc == 1


class TestOracleCommand:
    def test_dumps_one_file_per_head(self, workload_path, tmp_path):
        out_dir = tmp_path / "oracle"
        rc = main(["oracle", "--workload", str(workload_path), "--out-dir", str(out_dir)])
        assert rc == 0
        files = sorted(p.name for p in out_dir.iterdir())
        assert files == ["head_000.csv", "head_001.csv"]
        dense = np.loadtxt(out_dir / "head_000.csv", delimiter=",")
        assert dense.shape == (S, D)


class TestErrors:
    def test_missing_workload_file(self, tmp_path):
        rc = main(["oracle", "--workload", str(tmp_path / "nope.json"),
                   "--out-dir", str(tmp_path / "o")])
        assert rc == 1
