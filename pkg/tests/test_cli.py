import json
import os

import pytest
import yaml

from phckit import iofmt
from phckit.cli import _workers, main
from phckit.geometry import CavityDesign, LatticeSpec, l3_sr3


@pytest.fixture
def small_design(tmp_path):
    """A reduced-extent cavity that resolves in ~2 s at resolution 8."""
    design = CavityDesign(defect_length_x=3,
                          modifications=l3_sr3().modifications,
                          crystal_extent=(10, 7))
    path = tmp_path / "small.yaml"
    iofmt.write_design(LatticeSpec(), design, path)
    return path


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / "job.yaml"
    path.write_text(yaml.safe_dump({
        "simulation": {"broadband_steps": 2048, "narrowband_steps": 8192},
    }))
    return path


def test_simulate_writes_artifacts_and_is_deterministic(
        tmp_path, small_design, fast_config):
    outs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        code = main(["--config", str(fast_config), "--out", str(out),
                     "simulate", "--design", str(small_design),
                     "--resolution", "8"])
        assert code == 0
        for f in ("grid.phcgrid", "probe.csv", "resonances.csv", "manifest.json"):
            assert (out / f).exists()
        outs.append(out)
    assert (outs[0] / "probe.csv").read_bytes() == (outs[1] / "probe.csv").read_bytes()
    assert (outs[0] / "grid.phcgrid").read_bytes() == (outs[1] / "grid.phcgrid").read_bytes()
    manifest = json.loads((outs[0] / "manifest.json").read_text())
    assert manifest["seed"] == 0
    assert manifest["config_sha256"]


def test_simulate_missing_design_is_config_error(tmp_path):
    code = main(["--out", str(tmp_path / "o"), "simulate",
                 "--design", str(tmp_path / "nope.yaml")])
    assert code == 2


def test_simulate_without_design_is_config_error(tmp_path):
    code = main(["--out", str(tmp_path / "o"), "simulate"])
    assert code == 2


def test_resonances_report(tmp_path, small_design, fast_config, capsys):
    out = tmp_path / "o"
    code = main(["--config", str(fast_config), "--out", str(out),
                 "resonances", "--design", str(small_design),
                 "--resolution", "8"])
    assert code == 0
    text = (out / "report.txt").read_text()
    assert "dominant_frequency_a_over_lambda" in text
    assert "band_gap_a_over_lambda" in text
    assert (out / "resonances.csv").exists()


def test_modevolume_report(tmp_path, small_design, fast_config):
    out = tmp_path / "o"
    code = main(["--config", str(fast_config), "--out", str(out),
                 "modevolume", "--design", str(small_design),
                 "--resolution", "8"])
    assert code == 0
    assert "mode_area" in (out / "report.txt").read_text()


def test_bands_command(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["--out", str(out), "--units", "320", "bands",
                 "--design", "l3_sr3"])
    assert code == 0
    assert (out / "bands.csv").exists()
    stdout = capsys.readouterr().out
    assert "TE gap" in stdout
    assert "nm" in stdout  # physical-unit conversion via --units


def test_cqed_command_headline_numbers(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["--out", str(out), "cqed", "--Q", "7134", "--V", "1.22",
                 "--emitter", "divacancy-3c"])
    assert code == 0
    text = capsys.readouterr().out
    assert "purcell_factor: 444." in text
    assert "indistinguishability: 0.48" in text
    assert "indistinguishability[divacancy-4h]: 0.9" in text
    assert "beta_factor: 0.969" in text
    assert "strong_coupling_threshold_Q: 11" in text
    assert (out / "cqed_report.txt").exists()
    assert (out / "threshold_curve.csv").exists()


def test_cqed_flags_strong_coupling_onset(capsys):
    code = main(["cqed", "--Q", "11000", "--V", "1.22"])
    assert code == 0
    assert "strong-coupling onset" in capsys.readouterr().out


def test_cqed_unknown_emitter(capsys):
    assert main(["cqed", "--Q", "1000", "--V", "1.0",
                 "--emitter", "nitrogen-vacancy"]) == 2


def test_fit_fano_bundled_example(tmp_path, capsys):
    from importlib import resources
    src = resources.files("phckit.data").joinpath("example_fano_spectrum.csv")
    spec_path = tmp_path / "spectrum.csv"
    spec_path.write_text(src.read_text())
    out = tmp_path / "o"
    code = main(["--out", str(out), "fit-fano", "--in", str(spec_path)])
    assert code == 0
    text = capsys.readouterr().out
    q = float([l for l in text.splitlines() if l.startswith("Q:")][0].split()[1])
    assert abs(q - 7134.0) / 7134.0 < 0.02
    assert (out / "fano_curve.csv").exists()


def test_fit_fano_missing_file(tmp_path):
    assert main(["fit-fano", "--in", str(tmp_path / "nope.csv")]) == 2


def test_fit_fano_malformed_file(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("wavelength,counts\n1,1\n2,1\n")
    assert main(["fit-fano", "--in", str(bad)]) == 2


def test_sweep_empty_grid(tmp_path):
    out = tmp_path / "o"
    code = main(["--out", str(out), "sweep", "--designs", ""])
    assert code == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines == ["design,status,frequency,Q,V_normalized"]


def test_sweep_serial_matches_parallel(tmp_path, small_design, fast_config):
    designs = str(small_design)
    results = {}
    for label, workers in (("serial", "1"), ("parallel", "2")):
        out = tmp_path / label
        code = main(["--config", str(fast_config), "--out", str(out),
                     "--workers", workers, "sweep",
                     "--designs", f"{designs},{designs}",
                     "--resolution", "8"])
        assert code == 0
        results[label] = (out / "sweep.csv").read_bytes()
    assert results["serial"] == results["parallel"]
    body = results["serial"].decode().splitlines()
    assert len(body) == 3
    assert all(",ok," in row for row in body[1:])


def test_workers_env_default(monkeypatch):
    class Args:
        workers = None
    monkeypatch.setenv("PHC_WORKERS", "7")
    assert _workers(Args()) == 7
    monkeypatch.delenv("PHC_WORKERS")
    assert _workers(Args()) == 1
    Args.workers = 3
    assert _workers(Args()) == 3


def test_optimize_budget_flag(tmp_path):
    out = tmp_path / "o"
    code = main(["--out", str(out), "optimize", "--budget", "10",
                 "--resolution", "8", "--steps", "2048"])
    assert code == 4  # budget exhausted before convergence
    doc = json.loads((out / "optimize_result.json").read_text())
    assert doc["evaluations"] == 10
    assert doc["budget_exhausted"]
    trace = (out / "optimize_trace.jsonl").read_text().splitlines()
    assert len(trace) == 10
    # monotone improvement property: best is at least the starting point
    first = json.loads(trace[0])["value"]
    assert doc["best_Q"] >= first


def test_optimize_rejects_small_budget(tmp_path):
    assert main(["--out", str(tmp_path / "o"), "optimize", "--budget", "5"]) == 2


def test_bad_job_config(tmp_path):
    bad = tmp_path / "job.yaml"
    bad.write_text("- not\n- a\n- mapping\n")
    assert main(["--config", str(bad), "bands"]) == 2
