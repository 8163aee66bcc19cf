import json
import pathlib

import numpy as np
import pytest

from lutbnn import core
from lutbnn.cli import main
from lutbnn.ga import read_metrics_csv
from lutbnn.sim import load_dataset

HERE = pathlib.Path(__file__).parent
EXAMPLE_GENOME = HERE.parent / "demos" / "data" / "example_genome.txt"


@pytest.fixture
def tiny_config(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(
        "shape: 16-8-2\n"
        "sim: {frame_len: 16, rng_seed: 3}\n"
        "ga: {population_size: 8, generations: 2, eval_good: 10,"
        " eval_ugly: 10, elite_count: 1, rng_seed: 3}\n"
    )
    return cfg


def small_genome_file(tmp_path, shape="16-8-2", seed=0):
    sh = core.NetworkShape.parse(shape)
    rng = np.random.default_rng(seed)
    g = core.Genome(sh, rng.integers(0, 4, sh.total_weights, dtype=np.uint8))
    path = tmp_path / "genome.txt"
    core.save_genome(g, path)
    return path, g


class TestSimulate:
    def test_writes_counts(self, tmp_path, tiny_config, capsys):
        out = tmp_path / "data.txt"
        rc = main(["simulate", "--config", str(tiny_config),
                   "--out", str(out), "--good", "20", "--ugly", "20",
                   "--noise", "0"])
        assert rc == 0
        frames, _ = load_dataset(out)
        assert len(frames) == 40
        assert "40 frames" in capsys.readouterr().out

    def test_empty_dataset_is_valid(self, tmp_path, tiny_config):
        out = tmp_path / "empty.txt"
        assert main(["simulate", "--config", str(tiny_config),
                     "--out", str(out), "--good", "0", "--ugly", "0",
                     "--noise", "0"]) == 0
        frames, _ = load_dataset(out)
        assert frames == []

    def test_same_seed_identical_files(self, tmp_path, tiny_config):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        for out in (a, b):
            main(["simulate", "--config", str(tiny_config), "--out", str(out),
                  "--good", "5", "--ugly", "5", "--noise", "5",
                  "--seed", "17"])
        assert a.read_bytes() == b.read_bytes()

    def test_unwritable_path_fails(self, tiny_config, capsys):
        rc = main(["simulate", "--config", str(tiny_config),
                   "--out", "/nonexistent-dir/x.txt", "--good", "1",
                   "--ugly", "1"])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestTrain:
    def test_outputs_written(self, tmp_path, tiny_config):
        out = tmp_path / "run"
        assert main(["train", "--config", str(tiny_config),
                     "--out", str(out)]) == 0
        genome = core.load_genome(out / "best_genome.txt")
        assert str(genome.shape) == "16-8-2"
        records = read_metrics_csv(out / "metrics.csv")
        assert [r.generation for r in records] == [0, 1, 2]
        assert (out / "checkpoint.json").exists()

    def test_zero_generations(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(
            "shape: 16-8-2\nsim: {frame_len: 16}\n"
            "ga: {population_size: 6, generations: 0, eval_good: 5,"
            " eval_ugly: 5, elite_count: 1}\n")
        out = tmp_path / "run0"
        assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
        assert len(read_metrics_csv(out / "metrics.csv")) == 1

    def test_resume_matches_uninterrupted(self, tmp_path):
        import hashlib

        base = ("shape: 16-8-2\nsim: {frame_len: 16, rng_seed: 4}\n"
                "ga: {population_size: 8, generations: %d, eval_good: 8,"
                " eval_ugly: 8, elite_count: 1, rng_seed: 4}\n")
        full_cfg = tmp_path / "full.yaml"
        full_cfg.write_text(base % 6)
        ref = tmp_path / "ref"
        main(["train", "--config", str(full_cfg), "--out", str(ref)])

        # "interrupt" after generation 3: run the same seed with a shorter
        # horizon, then widen the horizon in its checkpoint and resume
        short_cfg = tmp_path / "short.yaml"
        short_cfg.write_text(base % 3)
        part = tmp_path / "part"
        main(["train", "--config", str(short_cfg), "--out", str(part)])
        doc = json.loads((part / "checkpoint.json").read_text())
        doc["payload"]["ga_config"]["generations"] = 6
        body = json.dumps(doc["payload"], sort_keys=True)
        doc["sha256"] = hashlib.sha256(body.encode()).hexdigest()
        (part / "checkpoint.json").write_text(json.dumps(doc, sort_keys=True))

        cont = tmp_path / "cont"
        main(["resume", str(part / "checkpoint.json"), "--out", str(cont)])
        assert (cont / "best_genome.txt").read_bytes() == \
            (ref / "best_genome.txt").read_bytes()
        ref_rows = read_metrics_csv(ref / "metrics.csv")
        cont_rows = read_metrics_csv(cont / "metrics.csv")
        assert [r.best_scalar for r in cont_rows] == \
            [r.best_scalar for r in ref_rows]

    def test_metrics_row_count(self, tmp_path, tiny_config):
        out = tmp_path / "rows"
        main(["train", "--config", str(tiny_config), "--out", str(out)])
        records = read_metrics_csv(out / "metrics.csv")
        assert len(records) == 3  # generations 0..2


class TestEvaluate:
    def test_report_layout(self, tmp_path, tiny_config, capsys):
        genome_path, _ = small_genome_file(tmp_path)
        data = tmp_path / "data.txt"
        main(["simulate", "--config", str(tiny_config), "--out", str(data),
              "--good", "10", "--ugly", "10", "--noise", "10"])
        report = tmp_path / "report.json"
        rc = main(["evaluate", "--genome", str(genome_path),
                   "--dataset", str(data), "--report", str(report)])
        assert rc == 0
        doc = json.loads(report.read_text())
        mat = np.array(doc["confusion"]["counts"])
        assert mat.shape == (3, 3)
        assert mat.sum(axis=1).tolist() == [10, 10, 10]
        out = capsys.readouterr().out
        assert "Good" in out and "Either" in out

    def test_empty_dataset_errors(self, tmp_path, tiny_config, capsys):
        genome_path, _ = small_genome_file(tmp_path)
        data = tmp_path / "empty.txt"
        main(["simulate", "--config", str(tiny_config), "--out", str(data),
              "--good", "0", "--ugly", "0", "--noise", "0"])
        rc = main(["evaluate", "--genome", str(genome_path),
                   "--dataset", str(data)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_deterministic_fresh_sim(self, tmp_path, tiny_config, capsys):
        genome_path, _ = small_genome_file(tmp_path)
        outs = []
        for _ in range(2):
            main(["evaluate", "--genome", str(genome_path),
                  "--config", str(tiny_config), "--good", "20", "--ugly",
                  "20", "--noise", "20", "--seed", "5"])
            outs.append(capsys.readouterr().out)
        assert outs[0] == outs[1]


class TestInfer:
    def test_flat_frame_all_block_is_either(self, tmp_path, capsys):
        sh = core.NetworkShape.parse("16-8-2")
        g = core.Genome(sh, np.zeros(sh.total_weights, dtype=np.uint8))
        gp = tmp_path / "blocked.txt"
        core.save_genome(g, gp)
        frame = tmp_path / "frame.txt"
        frame.write_text(",".join(["200"] * 16))
        assert main(["infer", "--genome", str(gp),
                     "--frame", str(frame)]) == 0
        out = capsys.readouterr().out
        assert "Either" in out and "(0, 0)" in out

    def test_same_frame_same_label(self, tmp_path, capsys):
        gp, _ = small_genome_file(tmp_path)
        frame = tmp_path / "frame.txt"
        frame.write_text(" ".join(str(100 + 13 * i) for i in range(16)))
        outs = []
        for _ in range(2):
            main(["infer", "--genome", str(gp), "--frame", str(frame)])
            outs.append(capsys.readouterr().out)
        assert outs[0] == outs[1]

    def test_out_of_range_sample(self, tmp_path, capsys):
        gp, _ = small_genome_file(tmp_path)
        frame = tmp_path / "frame.txt"
        frame.write_text(",".join(["5000"] * 16))
        assert main(["infer", "--genome", str(gp),
                     "--frame", str(frame)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_wrong_sample_count(self, tmp_path, capsys):
        gp, _ = small_genome_file(tmp_path)
        frame = tmp_path / "frame.txt"
        frame.write_text("1,2,3")
        assert main(["infer", "--genome", str(gp),
                     "--frame", str(frame)]) == 1

    def test_trace_prints_layers(self, tmp_path, capsys):
        gp, _ = small_genome_file(tmp_path)
        frame = tmp_path / "frame.txt"
        frame.write_text(",".join(["1000"] * 16))
        main(["infer", "--genome", str(gp), "--frame", str(frame),
              "--trace"])
        out = capsys.readouterr().out
        assert "layer 1 sums" in out and "layer 2 activations" in out


class TestEmit:
    def test_writes_pair_and_summary(self, tmp_path, capsys):
        out = tmp_path / "hdl"
        rc = main(["emit", "--genome", str(EXAMPLE_GENOME),
                   "--out", str(out), "--name", "example_net"])
        assert rc == 0
        assert (out / "example_net_pkg.vhd").exists()
        assert (out / "example_net.vhd").exists()
        assert "input port 112 bits" in capsys.readouterr().out

    def test_idempotent(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            main(["emit", "--genome", str(EXAMPLE_GENOME), "--out", str(out)])
        assert (a / "lutbnn_net.vhd").read_bytes() == \
            (b / "lutbnn_net.vhd").read_bytes()

    def test_all_block_summary(self, tmp_path, capsys):
        sh = core.NetworkShape.parse("16-8-2")
        g = core.Genome(sh, np.zeros(sh.total_weights, dtype=np.uint8))
        gp = tmp_path / "blocked.txt"
        core.save_genome(g, gp)
        main(["emit", "--genome", str(gp), "--out", str(tmp_path / "o")])
        assert "nonzero weights 0" in capsys.readouterr().out
