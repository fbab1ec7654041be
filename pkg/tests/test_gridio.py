import numpy as np
import pytest
from PIL import Image

from rotopat.acoustics import propagate
from rotopat.errors import ConfigError
from rotopat.geometry import Grid, ScalarField
from rotopat.gridio import read_grid, read_trace, write_grid, write_preview, write_trace, write_trace_csv
from rotopat.inverse import IterationRecord
from rotopat.oracles import gaussian_source
from rotopat.report import write_history_csv, write_spectrum_csv


def test_grid_file_layout(tmp_path, grid):
    X, Y = grid.mesh()
    f = ScalarField(grid, X + 2 * Y)
    path = tmp_path / "f.bin"
    write_grid(str(path), f)
    raw = path.read_bytes()
    assert raw[:8] == b"ROTOPAT1"
    assert len(raw) == 32 + 8 * grid.node_count
    assert np.frombuffer(raw[8:24], dtype="<i8").tolist() == list(grid.shape)
    assert np.frombuffer(raw[24:32], dtype="<f8")[0] == grid.h
    assert np.frombuffer(raw[32:40], dtype="<f8")[0] == f.values[0, 0]
    assert np.frombuffer(raw[40:48], dtype="<f8")[0] == f.values[0, 1]
    np.testing.assert_array_equal(read_grid(str(path), grid).values, f.values)


def test_read_grid_rejects_mismatch(tmp_path, grid):
    path = tmp_path / "f.bin"
    write_grid(str(path), ScalarField.zeros(grid))
    with pytest.raises(ConfigError):
        read_grid(str(path), Grid.from_cells(1.0, 0.25, 40))
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"NOTAGRID" + path.read_bytes()[8:])
    with pytest.raises(ConfigError):
        read_grid(str(bad), grid)
    (tmp_path / "short.bin").write_bytes(b"ROTO")
    with pytest.raises(ConfigError):
        read_grid(str(tmp_path / "short.bin"), grid)


def test_traces_on_disk(tmp_path, grid, c):
    tr = propagate(gaussian_source(grid), c, 0.5).trace
    write_trace(str(tmp_path / "t.bin"), tr)
    back = read_trace(str(tmp_path / "t.bin"), tr.boundary)
    np.testing.assert_array_equal(back.values, tr.values)
    assert back.dt == tr.dt
    write_trace_csv(str(tmp_path / "t.csv"), tr)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "time,angle_index,value"
    assert len(lines) == 1 + tr.values.size
    assert lines[1].split(",")[1] == "0"


def test_preview(tmp_path, grid):
    X, _ = grid.mesh()
    write_preview(str(tmp_path / "p.png"), X)
    img = Image.open(tmp_path / "p.png")
    assert img.mode == "L"
    assert img.size == (grid.shape[0], grid.shape[1])
    px = np.asarray(img)
    assert px.min() == 0 and px.max() == 255
    write_preview(str(tmp_path / "flat.png"), np.zeros(grid.shape))
    assert np.asarray(Image.open(tmp_path / "flat.png")).max() == 0


def test_report_csvs(tmp_path):
    write_spectrum_csv(str(tmp_path / "s.csv"), np.array([3.0, 0.5, 1e-20]))
    rows = np.loadtxt(tmp_path / "s.csv", delimiter=",", skiprows=1)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "index,singular_value"
    np.testing.assert_array_equal(rows[:, 0], [0, 1, 2])
    np.testing.assert_array_equal(rows[:, 1], [3.0, 0.5, 1e-20])
    history = [IterationRecord(k=0, residual=1.0), IterationRecord(k=1, residual=0.25, l2_error=0.5)]
    write_history_csv(str(tmp_path / "h.csv"), history)
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "k,residual,l2_error,h1_error"
    assert lines[1].split(",")[:2] == ["0", "1"]
    rows = np.genfromtxt(tmp_path / "h.csv", delimiter=",", skip_header=1)
    assert np.isnan(rows[0, 2]) and rows[1, 2] == 0.5
