import os

import numpy as np
import orjson
import pytest
import yaml

from rotopat.cli import main
from rotopat.config import load_config
from rotopat.geometry import BoundaryParametrization, Grid
from rotopat.gridio import read_trace

SMALL = {
    "geometry": {"n_cells": 32},
    "acquisition": {"rotations": 2},
    "solver": {"max_iter": 2, "n_dirs": 8},
    "experiment": {"pairs": 2, "coarse_cells": [24], "domination_samples": 1},
}


def write_config(tmp_path, **sections):
    doc = {k: dict(v) for k, v in SMALL.items()}
    for k, v in sections.items():
        doc.setdefault(k, {}).update(v)
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def boundary():
    return BoundaryParametrization.for_grid(Grid.from_cells(1.0, 0.25, 32))


def test_simulate_zero_absorption(tmp_path):
    cfg = write_config(tmp_path, medium={"phantom": {"bumps": []}})
    out = tmp_path / "sim"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    for i in range(2):
        assert not np.any(read_trace(str(out / f"trace_{i:02d}.bin"), boundary()).values)
    manifest = orjson.loads((out / "manifest.json").read_bytes())
    assert manifest["mode"] == "simulate"
    assert "trace_00.bin" in manifest["artifacts"]
    assert set(manifest["versions"]) >= {"rotopat", "numpy", "scipy"}


def test_simulate_is_deterministic_and_rerunnable(tmp_path):
    cfg = write_config(tmp_path, solver={"noise_level": 0.01})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(a), "--seed", "5"]) == 0
    assert main(["simulate", "--config", str(a / "manifest.json"), "--out", str(b)]) == 0
    for name in ("trace_00.bin", "trace_01.bin", "sigma.bin", "sigma.png"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert load_config(str(b / "manifest.json")).experiment.seed == 5


def test_reconstruct_from_simulated_data(tmp_path):
    cfg = write_config(tmp_path)
    sim, rec = tmp_path / "sim", tmp_path / "rec"
    assert main(["simulate", "--config", cfg, "--out", str(sim)]) == 0
    assert main(["reconstruct", "--config", cfg, "--data", str(sim), "--out", str(rec)]) == 0
    lines = (rec / "history.csv").read_text().splitlines()
    assert lines[0] == "k,residual,l2_error,h1_error"
    assert len(lines) >= 2
    assert (rec / "sigma_hat.bin").exists()


def test_reconstruct_with_missing_data_is_config_error(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["reconstruct", "--config", cfg, "--data", str(tmp_path / "nope"),
                 "--out", str(tmp_path / "rec")]) == 2


def test_check_geometry_full_circle(tmp_path):
    cfg = write_config(tmp_path, acquisition={"transducer": {"width": 7.0}})
    out = tmp_path / "geo"
    assert main(["check-geometry", "--config", cfg, "--out", str(out)]) == 0
    report = orjson.loads((out / "visibility.json").read_bytes())
    assert report["stability_ok"] is True
    assert "stability_ok: true" in (out / "visibility.txt").read_text()


def test_analyze_operator_and_sweep(tmp_path):
    cfg = write_config(tmp_path)
    op, st = tmp_path / "op", tmp_path / "st"
    assert main(["analyze-operator", "--config", cfg, "--out", str(op), "--threads", "2"]) == 0
    doc = orjson.loads((op / "operator.json").read_bytes())
    assert doc["kappa"]["24"]["size"] == 5
    assert (op / "spectrum_24.csv").exists() and (op / "measurement_spectrum.csv").exists()
    assert main(["stability-sweep", "--config", cfg, "--out", str(st)]) == 0
    assert orjson.loads((st / "stability.json").read_bytes())["pairs_tested"] == 2


def test_config_errors_exit_2(tmp_path):
    cfg = write_config(tmp_path, geometry={"omega": {"radius": 0.95}})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert main(["selftest", "--config", write_config(tmp_path), "--only", "nonsense",
                 "--out", str(tmp_path / "s")]) == 2


def test_selftest_writes_report(tmp_path):
    out = tmp_path / "self"
    code = main(["selftest", "--config", write_config(tmp_path), "--only", "poincare_constant",
                 "--out", str(out)])
    assert code in (0, 4)
    doc = orjson.loads((out / "selftest.json").read_bytes())
    assert [r["name"] for r in doc["results"]] == ["poincare_constant"]
    assert os.path.exists(out / "manifest.json")


def test_bad_subcommand():
    with pytest.raises(SystemExit):
        main(["explode"])
