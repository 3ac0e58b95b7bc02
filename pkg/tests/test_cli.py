import json

import pytest

from kromfac.cli import run_command
from kromfac.graph import load_edge_list

FAST_EM = ["--em-iters", "2", "--grad-steps", "4", "--mcmc-samples", "40"]
FAST_DETECT = ["--max-iters", "40"]


def two_cliques_file(tmp_path, name="g.txt", size=4):
    lines = []
    for base in (0, size):
        for u in range(size):
            for v in range(u + 1, size):
                lines.append(f"{base + u} {base + v}")
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestUsageErrors:
    def test_no_arguments(self):
        assert run_command([]) == 2

    def test_unknown_subcommand(self):
        assert run_command(["frobnicate"]) == 2

    def test_missing_required_flag(self, tmp_path):
        edges = two_cliques_file(tmp_path)
        assert run_command(["detect", "--edges", str(edges)]) == 2

    def test_help_exits_zero(self):
        assert run_command(["--help"]) == 0


class TestRuntimeErrors:
    def test_missing_input_file(self, tmp_path):
        args = [
            "baseline1", "--edges", str(tmp_path / "nope.txt"),
            "--out", str(tmp_path), "--communities", "2", "--seed", "0",
        ]
        assert run_command(args) == 1

    def test_malformed_edge_list(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("0 1 2\n", encoding="utf-8")
        args = [
            "baseline1", "--edges", str(bad),
            "--out", str(tmp_path), "--communities", "2", "--seed", "0",
        ]
        assert run_command(args) == 1


class TestSample:
    def test_outputs_and_determinism(self, tmp_path):
        edges = two_cliques_file(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            code = run_command([
                "sample", "--edges", str(edges), "--out", str(out),
                "--strategy", "rn", "--fraction", "0.75", "--seed", "5",
            ])
            assert code == 0
        assert (out1 / "sampled.txt").read_bytes() == (out2 / "sampled.txt").read_bytes()
        assert (out1 / "kept.txt").read_bytes() == (out2 / "kept.txt").read_bytes()
        kept = (out1 / "kept.txt").read_text().split()
        assert len(kept) == 6
        with open(out1 / "sampled.txt", encoding="utf-8") as f:
            sub, id_map = load_edge_list(f)
        assert sub.n <= 6
        assert set(id_map.to_external) <= set(kept)

    def test_ff_strategy(self, tmp_path):
        edges = two_cliques_file(tmp_path)
        out = tmp_path / "ff"
        code = run_command([
            "sample", "--edges", str(edges), "--out", str(out),
            "--strategy", "ff", "--fraction", "0.5", "--seed", "1",
        ])
        assert code == 0
        assert len((out / "kept.txt").read_text().split()) == 4


class TestBaseline1:
    def test_recovers_cliques(self, tmp_path, capsys):
        edges = two_cliques_file(tmp_path)
        out = tmp_path / "out"
        code = run_command([
            "baseline1", "--edges", str(edges), "--out", str(out),
            "--communities", "2", "--seed", "0", *FAST_DETECT,
        ])
        assert code == 0
        assert "baseline1:" in capsys.readouterr().out
        groups = [
            frozenset(line.split())
            for line in (out / "cover.txt").read_text().splitlines()
        ]
        assert len(groups) == 2


class TestDetect:
    def detect_args(self, edges, out, seed="3"):
        return [
            "detect", "--edges", str(edges), "--out", str(out),
            "--communities", "2", "--missing", "2", "--seed", seed,
            *FAST_DETECT, *FAST_EM,
        ]

    def test_artifacts_and_byte_identical_rerun(self, tmp_path):
        edges = two_cliques_file(tmp_path)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert run_command(self.detect_args(edges, out1)) == 0
        assert run_command(self.detect_args(edges, out2)) == 0
        for name in ("cover.txt", "trace.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        trace = json.loads((out1 / "trace.json").read_text())
        assert {"i_hat", "h", "trace", "lambda"} <= set(trace)

    def test_random_seed_announced_when_omitted(self, tmp_path, capsys):
        edges = two_cliques_file(tmp_path)
        args = [
            "detect", "--edges", str(edges), "--out", str(tmp_path / "o"),
            "--communities", "2", "--missing", "0", *FAST_DETECT, *FAST_EM,
        ]
        assert run_command(args) == 0
        assert "seed:" in capsys.readouterr().out


class TestComplete:
    def test_artifacts(self, tmp_path):
        edges = two_cliques_file(tmp_path)
        out = tmp_path / "c"
        code = run_command([
            "complete", "--edges", str(edges), "--out", str(out),
            "--missing", "2", "--seed", "1", *FAST_EM,
        ])
        assert code == 0
        theta = json.loads((out / "theta.json").read_text())
        assert theta["n0"] == 2
        assert (out / "mapping.json").exists()
        text = (out / "recovered.txt").read_text()
        assert "#BASE" in text and "#Z1" in text and "#Z2" in text


class TestEval:
    def test_perfect_agreement(self, tmp_path, capsys):
        cover = tmp_path / "cover.txt"
        cover.write_text("0 1 2\n3 4 5\n", encoding="utf-8")
        code = run_command(["eval", "--pred", str(cover), "--truth", str(cover)])
        assert code == 0
        assert "nmi=1.000000" in capsys.readouterr().out

    def test_universe_override(self, tmp_path, capsys):
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        a.write_text("0 1\n", encoding="utf-8")
        b.write_text("0 1\n2 3\n", encoding="utf-8")
        code = run_command([
            "eval", "--pred", str(a), "--truth", str(b), "--universe", "6",
        ])
        assert code == 0
        out = capsys.readouterr().out
        score = float(out.strip().split("nmi=")[1])
        assert 0.0 <= score <= 1.0


class TestExperiment:
    def test_report_and_determinism(self, tmp_path):
        edges = two_cliques_file(tmp_path, size=5)
        truth = tmp_path / "truth.txt"
        truth.write_text(
            " ".join(str(u) for u in range(5)) + "\n"
            + " ".join(str(u) for u in range(5, 10)) + "\n",
            encoding="utf-8",
        )
        outs = []
        for label in ("e1", "e2"):
            out = tmp_path / label
            code = run_command([
                "experiment", "--edges", str(edges), "--truth", str(truth),
                "--out", str(out), "--communities", "2", "--seed", "7",
                "--strategy", "rn", "--fraction", "0.8",
                *FAST_DETECT, *FAST_EM,
            ])
            assert code == 0
            outs.append(out)
        for name in ("report.json", "curves.csv"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
        report = json.loads((outs[0] / "report.json").read_text())
        assert set(report["scores"]) == {"kromfac", "baseline1", "baseline2"}
        header = (outs[0] / "curves.csv").read_text().splitlines()[0]
        assert header == "i,loss,reg_loss"
