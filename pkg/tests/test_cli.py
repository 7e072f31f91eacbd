import json
import os

import pytest

from calderon import cli
from calderon.cli import ConfigError, main, parse_config


def segment_config(output_dir, tasks=("double", "calderon")):
    return {
        "algebra": {"kind": "matrix", "n": 2},
        "model": {
            "base": "segment",
            "r": 1,
            "v": {"kind": "diag", "values": [1.0, -0.5]},
        },
        "grid": {"n_u": 16, "n_y": 1, "kind": "chebyshev"},
        "tasks": list(tasks),
        "seed": 777,
        "output_dir": str(output_dir),
    }


def write_config(tmp_path, raw, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


# -- strict schema ------------------------------------------------------


def test_unknown_top_level_key_rejected(tmp_path):
    raw = segment_config(tmp_path / "out")
    raw["extra"] = 1
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_unknown_nested_key_rejected(tmp_path):
    raw = segment_config(tmp_path / "out")
    raw["model"]["typo"] = True
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_unknown_task_rejected(tmp_path):
    raw = segment_config(tmp_path / "out", tasks=["frobnicate"])
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_base_grid_mismatch_rejected(tmp_path):
    raw = segment_config(tmp_path / "out")
    raw["grid"]["n_y"] = 8
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_bad_config_exits_2_without_outputs(tmp_path):
    out = tmp_path / "out"
    raw = segment_config(out)
    raw["surprise"] = {}
    code = main(["run", write_config(tmp_path, raw)])
    assert code == 2
    assert not out.exists()


def test_malformed_json_exits_2(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["run", str(path)]) == 2


# -- running scenarios --------------------------------------------------


def test_run_minimal_scenario(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", write_config(tmp_path, segment_config(out))])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "pass"
    assert report["schema_version"] == cli.REPORT_SCHEMA_VERSION
    names = [t["name"] for t in report["tasks"]]
    assert names == ["double", "calderon"]
    for fname in (
        "calderon_projector.npy",
        "calderon_projector.csv",
        "calderon_projector_diagnostics.txt",
    ):
        assert (out / fname).exists()
    text = capsys.readouterr().out
    assert "overall: pass" in text


def test_repeat_runs_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        raw = segment_config(out, tasks=["calderon"])
        assert main(["run", write_config(tmp_path, raw)]) == 0
    csv1 = (out1 / "calderon_projector.csv").read_bytes()
    csv2 = (out2 / "calderon_projector.csv").read_bytes()
    assert csv1 == csv2
    diag1 = (out1 / "calderon_projector_diagnostics.txt").read_bytes()
    assert diag1 == (out2 / "calderon_projector_diagnostics.txt").read_bytes()


def test_convergence_repeat_runs_byte_identical(tmp_path):
    outs = [tmp_path / "c1", tmp_path / "c2"]
    for out in outs:
        raw = {
            "algebra": {"kind": "matrix", "n": 2},
            "model": {
                "base": "cylinder",
                "v": {"kind": "diag", "values": [1.0, 0.5]},
            },
            "grid": {"n_u": 8, "n_y": 8, "kind": "uniform"},
            "tasks": ["convergence"],
            "seed": 20240819,
            "output_dir": str(out),
        }
        assert main(["run", write_config(tmp_path, raw)]) == 0
    assert (outs[0] / "convergence.csv").read_bytes() == (
        outs[1] / "convergence.csv"
    ).read_bytes()


def test_report_json_excludes_timing_from_tables(tmp_path):
    out = tmp_path / "out"
    raw = segment_config(out, tasks=["calderon"])
    main(["run", write_config(tmp_path, raw)])
    report = json.loads((out / "report.json").read_text())
    assert "wall_time_s" in report
    csv_text = (out / "calderon_projector.csv").read_text()
    assert "time" not in csv_text


def test_convergence_rejects_spectral_grid(tmp_path):
    out = tmp_path / "out"
    raw = segment_config(out, tasks=["convergence"])
    code = main(["run", write_config(tmp_path, raw)])
    # structural failure inside the task is reported, not crashed
    assert code == 1
    report = json.loads((out / "report.json").read_text())
    assert report["tasks"][0]["status"] == "fail"
    assert "dense path" in report["tasks"][0]["metrics"]["error"]


def test_convergence_levels_validation(tmp_path):
    raw = {
        "algebra": {"kind": "matrix", "n": 2},
        "model": {"base": "cylinder", "v": {"kind": "zero"}},
        "grid": {"n_u": 8, "n_y": 8, "kind": "uniform"},
        "tasks": ["convergence"],
        "output_dir": str(tmp_path / "out"),
    }
    path = write_config(tmp_path, raw)
    assert main(["convergence", path, "--levels", "2"]) == 2


# -- selfcheck and plumbing ---------------------------------------------


def test_selfcheck_passes(tmp_path, capsys):
    code = main(["selfcheck", "--output-dir", str(tmp_path / "sc")])
    assert code == 0
    text = capsys.readouterr().out
    assert text.count("overall: pass") == 3


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "calderon" in capsys.readouterr().out


def test_no_command_prints_help(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().out.lower()
