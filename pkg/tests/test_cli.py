"""Command line behaviour: golden outputs, exit codes, determinism."""

import io
import json
import os
import subprocess
import sys
from pathlib import Path

from padic_cf.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run_cli(argv):
    buf = io.StringIO()
    code = main(argv, out=buf)
    return code, buf.getvalue()


def golden_text(name):
    return (GOLDEN / name).read_text(encoding="utf-8")


class TestExpand:
    def test_schneider_golden(self):
        code, out = run_cli(["expand", "--p", "2", "--system", "schneider", "2/3"])
        assert code == 0
        assert out == golden_text("expand_schneider_p2_2_3.jsonl")

    def test_ruban_golden(self):
        code, out = run_cli(["expand", "--p", "2", "--system", "ruban", "2/3"])
        assert code == 0
        assert out == golden_text("expand_ruban_p2_2_3.jsonl")

    def test_random_point_golden(self):
        code, out = run_cli(
            [
                "expand", "--p", "3", "--system", "jacobi-perron", "--m", "2",
                "random:40", "--steps", "8", "--seed", "5",
            ]
        )
        assert code == 0
        assert out == golden_text("expand_jp_p3_random.jsonl")

    def test_random_run_emits_requested_steps(self):
        code, out = run_cli(
            [
                "expand", "--p", "3", "--system", "jacobi-perron", "--m", "2",
                "random:500", "--steps", "50", "--seed", "1",
            ]
        )
        assert code == 0
        lines = out.strip().splitlines()
        status = json.loads(lines[-1])
        assert status["status"] in ("running", "precision-exhausted")
        if status["status"] == "running":
            assert len(lines) == 51

    def test_parse_error_exit_code(self):
        code, _ = run_cli(["expand", "--p", "2", "--system", "schneider", "junk"])
        assert code == 2

    def test_point_outside_phase_space(self):
        code, _ = run_cli(["expand", "--p", "2", "--system", "schneider", "1/3"])
        assert code == 2

    def test_determinism(self):
        argv = [
            "expand", "--p", "2", "--system", "ruban", "random:64",
            "--steps", "10", "--seed", "99",
        ]
        assert run_cli(argv) == run_cli(argv)


class TestConvergents:
    def test_round_trip_with_ord_column(self, tmp_path):
        _, digits = run_cli(["expand", "--p", "2", "--system", "schneider", "2/3"])
        path = tmp_path / "digits.jsonl"
        path.write_text(digits, encoding="utf-8")
        code, out = run_cli(
            [
                "convergents", "--p", "2", "--system", "schneider",
                str(path), "--point", "2/3",
            ]
        )
        assert code == 0
        assert out == "0\t2/1\t2\n1\t2/3\tinf\n"

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        code, out = run_cli(["convergents", "--p", "2", "--system", "schneider", str(path)])
        assert code == 0 and out == ""

    def test_invalid_digit_file(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("not json\n", encoding="utf-8")
        code, _ = run_cli(["convergents", "--p", "2", "--system", "schneider", str(path)])
        assert code == 2

    def test_invalid_digit_for_system(self, tmp_path):
        path = tmp_path / "digits.jsonl"
        path.write_text('{"j":0,"digit":{"k":1,"v":"1/1"},"ord_consumed":1}\n', encoding="utf-8")
        code, _ = run_cli(["convergents", "--p", "2", "--system", "ruban", str(path)])
        assert code == 2


class TestStats:
    def test_iota_sum_golden(self):
        code, out = run_cli(
            ["stats", "--p", "2", "--system", "schneider", "--check", "iota-sum", "--bound", "2^20"]
        )
        assert code == 0
        assert out == golden_text("stats_iota_sum_schneider_p2.csv")

    def test_mixing_golden(self):
        code, out = run_cli(
            [
                "stats", "--p", "2", "--system", "schneider", "--check", "mixing",
                "--wordA", "(1,1)", "--wordB", "(2,1)", "--n", "3",
            ]
        )
        assert code == 0
        assert out == golden_text("stats_mixing_schneider_p2.csv")

    def test_digit_means_small_run(self):
        code, out = run_cli(
            [
                "stats", "--p", "3", "--system", "schneider", "--check", "digit-means",
                "--samples", "200", "--steps", "50", "--seed", "2",
            ]
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "check,p,l,m,estimate,stderr,theoretical,pass"
        assert len(lines) == 3
        assert lines[1].startswith("digit-mean-a,3,0,1,")
        assert all(line.endswith(",true") for line in lines[1:])

    def test_digit_means_json_format(self):
        code, out = run_cli(
            [
                "stats", "--p", "3", "--system", "schneider", "--check", "digit-means",
                "--samples", "50", "--steps", "20", "--seed", "2", "--format", "json",
            ]
        )
        assert code == 0
        rows = [json.loads(line) for line in out.strip().splitlines()]
        assert [r["check"] for r in rows] == ["digit-mean-a", "digit-mean-b"]
        assert rows[0]["theoretical"] == 1.5

    def test_invariance_small_run(self):
        code, out = run_cli(
            [
                "stats", "--p", "2", "--system", "schneider", "--check", "invariance",
                "--samples", "2000", "--cylinders", "3", "--seed", "6",
            ]
        )
        assert code == 0
        assert len(out.strip().splitlines()) == 4

    def test_threads_do_not_change_output(self):
        base = [
            "stats", "--p", "3", "--system", "ruban", "--check", "digit-means",
            "--samples", "60", "--steps", "20", "--seed", "3",
        ]
        assert run_cli(base) == run_cli(base + ["--threads", "3"])

    def test_config_error_exit_code(self):
        code, _ = run_cli(["stats", "--p", "2", "--system", "tl", "--check", "iota-sum"])
        assert code == 2
        code, _ = run_cli(
            ["stats", "--p", "2", "--system", "jacobi-perron", "--check", "digit-means",
             "--samples", "10", "--steps", "5"]
        )
        assert code == 2

    def test_env_seed_fallback(self):
        argv = [
            "stats", "--p", "3", "--system", "schneider", "--check", "digit-means",
            "--samples", "40", "--steps", "20",
        ]
        old = os.environ.get("PADIC_CF_SEED")
        try:
            os.environ["PADIC_CF_SEED"] = "2"
            _, with_env = run_cli(argv)
            os.environ.pop("PADIC_CF_SEED")
            _, with_flag = run_cli(argv + ["--seed", "2"])
        finally:
            if old is not None:
                os.environ["PADIC_CF_SEED"] = old
            else:
                os.environ.pop("PADIC_CF_SEED", None)
        assert with_env == with_flag


class TestBranches:
    def test_schneider_listing(self):
        code, out = run_cli(
            ["branches", "--p", "2", "--system", "schneider", "--bound", "2^3"]
        )
        assert code == 0
        rows = [json.loads(line) for line in out.strip().splitlines()]
        assert [r["digit"]["k"] for r in rows] == [1, 2, 3]
        assert rows[0]["iota"] == "2/1"
        assert rows[0]["lft"] == {"m": 1, "i": 1, "sigma": [1], "p": ["2/1"], "q": ["1/1"]}

    def test_brun_rejected(self):
        code, _ = run_cli(["branches", "--p", "2", "--system", "brun"])
        assert code == 2


class TestExitOnFailedCheck:
    def test_stats_exit_one_when_tolerance_missed(self, monkeypatch):
        from fractions import Fraction

        from padic_cf import ergodics
        from padic_cf.ergodics import StatReport

        def fake(spec, samples, steps, seed, precision=None, threads=1):
            bad = StatReport(9.9, 0.001, samples, steps, Fraction(3, 2), seed=seed)
            return bad, bad

        monkeypatch.setattr(ergodics, "digit_mean_reports", fake)
        code, out = run_cli(
            ["stats", "--p", "3", "--system", "schneider", "--check", "digit-means",
             "--samples", "10", "--steps", "5"]
        )
        assert code == 1
        assert out.strip().splitlines()[1].endswith(",false")


class TestSubprocessEntry:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "padic_cf.cli", "expand", "--p", "2",
             "--system", "schneider", "2/3"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout == golden_text("expand_schneider_p2_2_3.jsonl")
