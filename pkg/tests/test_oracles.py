import numpy as np
import pytest
from scipy import special

from rotopat.geometry import AcquisitionSetup, Arc, ScalarField
from rotopat.norms import h1_norm_field, w1inf_norm
from rotopat.oracles import (J0_FIRST_ZERO, chord_exits, disk_poincare_constant, euclidean_uniqueness,
                             gaussian_source, line_arc_coverage, poisson_gaussian_trace,
                             radial_bessel_solution)


def test_bessel_profile(grid):
    u = radial_bessel_solution(grid, sigma=4.0, g=2.0)
    mid = grid.n_cells_per_side // 2
    assert u.values[mid, mid] == pytest.approx(2.0 / special.i0(2.0))
    assert u.values[0, 0] == 0.0
    assert u.values.max() <= 2.0 + 1e-9


def test_poincare_constant_of_disk():
    assert J0_FIRST_ZERO == pytest.approx(2.404825557695773)
    assert disk_poincare_constant(0.35) == pytest.approx(0.35 / 2.404825557695773)


def test_gaussian_source_peak(grid):
    src = gaussian_source(grid, width=0.2)
    mid = grid.n_cells_per_side // 2
    assert src.values[mid, mid] == pytest.approx(1.0)
    assert src.values[0, 0] == 0.0


def test_poisson_trace_shape():
    a, w = 1.0, 0.15
    tr = poisson_gaussian_trace([0.0, 0.4], a, w)
    assert tr[0] == pytest.approx(np.exp(-a * a / (w * w)))
    assert abs(tr[1]) < 1e-3
    front = poisson_gaussian_trace(np.linspace(0.7, 1.3, 25), a, w)
    assert front.max() > 0.05


def test_chord_exits():
    tp, tm, ep, em = chord_exits([[0.0, 0.0], [0.5, 0.0]], [[0.0, 1.0], [1.0, 0.0]], 1.0)
    np.testing.assert_allclose(tp, [1.0, 0.5])
    np.testing.assert_allclose(tm, [1.0, 1.5])
    np.testing.assert_allclose(ep, [[0.0, 1.0], [1.0, 0.0]], atol=1e-15)
    np.testing.assert_allclose(em, [[0.0, -1.0], [-1.0, 0.0]], atol=1e-15)


def test_full_arc_covers_every_line():
    setup = AcquisitionSetup(transducer=Arc(width=7.0), rotations=(0.0,))
    pts = np.array([[0.0, 0.0], [0.2, -0.1]])
    dirs = np.array([[np.cos(t), np.sin(t)] for t in np.linspace(0, np.pi, 8, endpoint=False)])
    assert line_arc_coverage(setup, pts, dirs, 1.0).all()
    assert euclidean_uniqueness(setup, pts, 0, 1.0)


def test_short_recording_breaks_uniqueness():
    setup = AcquisitionSetup(rotations=(0.0,), duration=0.3, total_time=2.4)
    assert not euclidean_uniqueness(setup, np.zeros((1, 2)), 0, 1.0)


def test_norms_of_simple_fields(grid):
    const = ScalarField.constant(grid, -2.0)
    assert w1inf_norm(const) == pytest.approx(2.0)
    X, _ = grid.mesh()
    ramp = ScalarField(grid, 3.0 * X)
    assert w1inf_norm(ramp) == pytest.approx(np.abs(3.0 * X).max() + 3.0)
    assert h1_norm_field(ScalarField.zeros(grid)) == 0.0
    assert h1_norm_field(const) == pytest.approx(2.0 * grid.h * (grid.n_cells_per_side + 1))
