import json

import pytest

from tccr.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExitCodes:
    def test_all_pass_is_zero(self, capsys):
        code, out, _ = run(capsys, "verify", "--d", "2", "--mu", "0.5", "--cap", "6")
        assert code == 0
        doc = json.loads(out)
        assert doc["summary"]["passed"] == doc["summary"]["total"]

    def test_failing_check_is_one(self, capsys):
        code, out, _ = run(
            capsys, "verify", "--d", "2", "--mu", "0.5", "--cap", "6", "--tol", "1e-30"
        )
        assert code == 1
        doc = json.loads(out)
        assert doc["summary"]["passed"] < doc["summary"]["total"]

    def test_usage_error_is_two(self):
        with pytest.raises(SystemExit) as err:
            main(["verify", "--mu", "1.5"])
        assert err.value.code == 2

    def test_unknown_flag_rejected(self):
        with pytest.raises(SystemExit) as err:
            main(["verify", "--frobnicate"])
        assert err.value.code == 2

    def test_capacity_error_is_two(self, capsys):
        code, _, err = run(capsys, "verify", "--d", "5", "--cap", "9")
        assert code == 2
        assert "exceeds limit" in err

    def test_unwritable_output_is_two(self, capsys, tmp_path):
        target = tmp_path / "missing" / "report.json"
        code, _, err = run(capsys, "qccr", "--q", "0.3", "--cap", "6", "--out", str(target))
        assert code == 2
        assert "cannot write" in err


class TestFormats:
    def test_csv_header(self, capsys):
        code, out, _ = run(capsys, "qccr", "--q", "0.3", "--cap", "8", "--format", "csv")
        assert code == 0
        assert out.splitlines()[0] == "id,description,residual,tolerance,pass"

    def test_markdown_table(self, capsys):
        code, out, _ = run(capsys, "qccr", "--q", "0.3", "--cap", "8", "--format", "md")
        assert code == 0
        assert "| id | description | residual | tolerance | pass |" in out

    def test_json_params_make_run_reproducible(self, capsys):
        code, out, _ = run(capsys, "faithfulness", "--d", "2", "--cap", "6",
                           "--words", "5", "--max-len", "3", "--seed", "11")
        assert code == 0
        params = json.loads(out)["params"]
        assert params == {
            "cap": 6, "d": 2, "max_len": 3, "phase": 0.0, "seed": 11,
            "tol": 1e-08, "words": 5,
        }

    def test_report_file_written(self, capsys, tmp_path):
        target = tmp_path / "report.json"
        code, out, _ = run(capsys, "qccr", "--q", "0.3", "--cap", "8", "--out", str(target))
        assert code == 0
        assert out == ""
        doc = json.loads(target.read_text())
        assert doc["command"] == "qccr"


class TestDeterminism:
    def test_demo_is_byte_identical(self, capsys, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        assert run(capsys, "demo", "--out", str(first))[0] == 0
        assert run(capsys, "demo", "--out", str(second))[0] == 0
        assert first.read_bytes() == second.read_bytes()

    def test_jobs_flag_does_not_change_output(self, capsys):
        _, serial, _ = run(capsys, "irreps", "--d", "2", "--cap", "5")
        _, threaded, _ = run(capsys, "irreps", "--d", "2", "--cap", "5", "--jobs", "4")
        assert serial == threaded


class TestSubcommands:
    def test_roundtrip_undeformed_is_exact_throughout(self, capsys):
        code, out, _ = run(capsys, "roundtrip", "--d", "2", "--mu", "0", "--cap", "6")
        assert code == 0
        doc = json.loads(out)
        assert all(c["residual"] <= 1e-12 for c in doc["checks"])

    def test_irreps_covers_all_classes_and_phases(self, capsys):
        code, out, _ = run(capsys, "irreps", "--d", "2", "--cap", "5")
        assert code == 0
        doc = json.loads(out)
        ids = {c["id"] for c in doc["checks"]}
        for j in (0, 1, 2):
            assert any(i.startswith(f"j{j}/") for i in ids)
        assert len({i.split("/")[1] for i in ids}) == 3  # three phases

    def test_irreps_phase_list_parsing(self, capsys):
        import math

        code, out, _ = run(capsys, "irreps", "--d", "1", "--cap", "5", "--phases", "0,pi/2,2pi/3")
        assert code == 0
        phases = json.loads(out)["params"]["phases"]
        assert phases == pytest.approx([0.0, math.pi / 2, 2 * math.pi / 3], abs=1e-13)

    def test_gram_prints_exact_polynomials(self, capsys):
        code, out, _ = run(capsys, "gram", "--d", "1", "--level", "2", "--bridge-count", "2")
        assert code == 0
        text = out[: out.index("{")]
        assert "1 + mu^2" in text
        assert "<a1 a1>" in text

    def test_gram_report_checks(self, capsys):
        code, out, _ = run(capsys, "gram", "--d", "2", "--level", "2", "--bridge-count", "3")
        assert code == 0
        doc = json.loads(out[out.index("{"):])
        ids = {c["id"] for c in doc["checks"]}
        assert any(i.startswith("positivity/") for i in ids)
        assert any(i.startswith("bridge/") for i in ids)

    def test_demo_touches_every_module(self, capsys):
        code, out, _ = run(capsys, "demo")
        assert code == 0
        ids = {c["id"] for c in json.loads(out)["checks"]}
        for prefix in ("tccr/", "pi/", "bound/", "roundtrip/", "stages/", "qccr/",
                       "collapse/", "domination/", "gram/"):
            assert any(i.startswith(prefix) for i in ids), prefix
