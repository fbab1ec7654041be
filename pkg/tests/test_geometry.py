import numpy as np
import pytest
from pydantic import ValidationError

from rotopat.errors import ConfigError, GeometryError, ShapeMismatchError
from rotopat.geometry import (AcquisitionSetup, Arc, BoundaryFunction, BoundaryParametrization, Grid,
                              Illumination, ScalarField, build_cutoff, build_mask, cutoff_value,
                              equispaced_rotations, in_plateau, inside_closed_disk, rotate_boundary_function,
                              rotate_field)


def test_grid_from_spacing_is_centred():
    g = Grid.from_spacing(1.0, 0.25, 0.05)
    assert g.n_cells_per_side == 54
    assert g.shape == (55, 55)
    assert g.coords[27] == 0.0
    np.testing.assert_allclose(g.coords, -g.coords[::-1], atol=1e-12)
    assert g.coords[0] < -1.25 and g.coords[-1] > 1.25


def test_grid_from_cells_validates():
    g = Grid.from_cells(1.0, 0.25, 32)
    assert g.h == pytest.approx(2.5 / 28)
    with pytest.raises(GeometryError):
        Grid.from_cells(1.0, 0.25, 33)
    with pytest.raises(GeometryError):
        Grid.from_cells(1.0, 0.25, 8)


def test_on_circle_nodes_are_inside_closed_disk():
    g = Grid.from_spacing(1.0, 0.25, 1 / 8)
    inside = inside_closed_disk(g, 1.0)
    i = int(np.argmin(np.abs(g.coords - 1.0)))
    j = int(np.argmin(np.abs(g.coords)))
    assert g.coords[i] == 1.0
    assert inside[i, j]
    assert not inside[i + 1, j]


def test_build_mask(grid):
    m = build_mask(grid, 0.35)
    assert m.omega_count > 0
    assert not np.any(m.inside_omega & ~m.inside_ball)
    assert build_mask(grid, 0.0).omega_count == 0
    with pytest.raises(GeometryError):
        build_mask(grid, 0.95)
    with pytest.raises(GeometryError):
        build_mask(grid, 0.3, (0.6, 0.0))


def test_scalar_field_checks(grid):
    with pytest.raises(ShapeMismatchError):
        ScalarField(grid, np.zeros((3, 3)))
    bad = np.zeros(grid.shape)
    bad[0, 0] = np.nan
    with pytest.raises(ConfigError):
        ScalarField(grid, bad)
    f = ScalarField.constant(grid, 2.0)
    assert np.all((f * 3 - f).values == 4.0)


def test_rotate_field_quarter_turn(grid):
    X, Y = grid.mesh()
    f = ScalarField(grid, X.copy())
    np.testing.assert_allclose(rotate_field(f, 0.0).values, X, atol=1e-12)
    out = rotate_field(f, np.pi / 2)
    np.testing.assert_allclose(out.values[2:-2, 2:-2], -Y[2:-2, 2:-2], atol=1e-9)


def test_boundary_parametrization(grid):
    b = BoundaryParametrization.for_grid(grid)
    assert b.n_boundary_points == max(16, 2 * round(np.pi / grid.h))
    assert b.angles[0] == 0.0
    assert b.arc_length_step == pytest.approx(2 * np.pi / b.n_boundary_points)
    np.testing.assert_allclose(np.hypot(*b.points().T), 1.0)


def test_rotate_boundary_function(boundary):
    f = BoundaryFunction.from_callable(boundary, np.cos)
    theta = boundary.angles[3]
    g = rotate_boundary_function(f, theta)
    np.testing.assert_allclose(g.values, np.cos(boundary.angles + theta), atol=1e-9)
    np.testing.assert_allclose(f.evaluate(2 * np.pi + boundary.angles[5]), f.values[5], atol=1e-12)


def test_arc_contains():
    arc = Arc(center=0.0, width=np.pi / 3)
    got = arc.contains([0.0, np.pi / 6 - 1e-9, np.pi / 6 + 1e-3, np.pi, 2 * np.pi - 0.1])
    assert got.tolist() == [True, True, False, False, True]
    assert Arc(width=2 * np.pi).contains([1.0, 4.0]).all()
    assert arc.rotated(-np.pi / 2).center == pytest.approx(3 * np.pi / 2)


def test_setup_validation():
    with pytest.raises(ValidationError):
        AcquisitionSetup(illumination=Illumination(center=0.0), rotations=(0.0,))
    with pytest.raises(ValidationError):
        AcquisitionSetup(taper_angle=np.pi / 4, rotations=(0.0,))
    with pytest.raises(ValidationError):
        AcquisitionSetup(duration=3.0, total_time=2.4, rotations=(0.0,))
    with pytest.raises(ValidationError):
        AcquisitionSetup(rotations=())
    with pytest.raises(ConfigError):
        equispaced_rotations(0)


def test_arcs_and_illumination_corotate(boundary):
    setup = AcquisitionSetup.default(1.0, rotations=(0.0, np.pi / 2))
    assert setup.m == 2
    assert setup.arc(1).center == pytest.approx(3 * np.pi / 2)
    g1 = setup.illumination_for(1, boundary)
    peak = boundary.angles[np.argmax(g1.values)]
    assert abs(peak - np.pi / 2) <= boundary.arc_length_step
    np.testing.assert_allclose(setup.illumination_for(0, boundary).values,
                               setup.illumination(boundary.angles))


def test_cutoff_values(boundary):
    setup = AcquisitionSetup.default(1.0, m=1)
    assert cutoff_value(setup, 0, 0.0, 0.0) == 1.0
    assert cutoff_value(setup, 0, setup.duration, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert cutoff_value(setup, 0, 0.0, np.pi) == 0.0
    mid = cutoff_value(setup, 0, 0.0, np.pi / 6 - setup.taper_angle / 2)
    assert 0.0 < mid < 1.0
    assert in_plateau(setup, 0, 0.5, 0.0)
    assert not in_plateau(setup, 0, setup.duration - setup.taper_time / 2, 0.0)
    times = np.linspace(0, setup.total_time, 11)
    chi = build_cutoff(setup, 0, boundary, times)
    assert chi.shape == (11, boundary.n_boundary_points)
    assert chi.min() >= 0.0 and chi.max() <= 1.0


def test_time_taper_must_fit():
    setup = AcquisitionSetup.default(1.0, m=1, duration=0.1, taper_time=0.1)
    with pytest.raises(ConfigError):
        cutoff_value(setup, 0, 0.0, 0.0)


def test_rotate_field_round_trip_is_second_order():
    errors = []
    for h in (1 / 16, 1 / 32):
        g = Grid.from_spacing(1.0, 0.25, h)
        X, Y = g.mesh()
        f = ScalarField(g, np.exp(-((X - 0.2) ** 2 + Y ** 2) / 0.3 ** 2))
        back = rotate_field(rotate_field(f, 0.37), -0.37)
        errors.append((back - f).l2() / f.l2())
    assert errors[1] < 0.35 * errors[0]
    assert errors[1] < 5 * (1 / 32) ** 2 / 0.3 ** 2


def test_mask_grows_with_omega_radius(grid):
    radii = (0.0, 0.1, 0.3, 0.5, 0.7)
    masks = [build_mask(grid, r).inside_omega for r in radii]
    for small, big in zip(masks, masks[1:]):
        assert not np.any(small & ~big)
    assert [m.sum() for m in masks] == sorted(m.sum() for m in masks)


def test_per_angle_duration(boundary):
    setup = AcquisitionSetup.default(1.0, m=1).with_duration([2.0, 1.0, 2.0, 1.0])
    assert setup.max_duration == 2.0 and setup.min_duration == 1.0
    got = setup.duration_at([0.0, np.pi / 4, np.pi / 2, 7 * np.pi / 4, 2 * np.pi])
    np.testing.assert_allclose(got, [2.0, 1.5, 1.0, 1.5, 2.0])
    # the cutoff closes earlier where s is shorter
    assert cutoff_value(setup, 0, 1.85, 0.0) == 1.0
    assert cutoff_value(setup, 0, 1.85, 0.3) == 0.0
    assert 0.0 < cutoff_value(setup, 0, 1.75, 0.3) < 1.0
    chi = build_cutoff(setup, 0, boundary, np.linspace(0, setup.total_time, 7))
    assert chi.min() >= 0.0 and chi.max() <= 1.0


def test_per_angle_duration_from_callable():
    base = AcquisitionSetup.default(1.0, m=2)
    setup = base.with_duration(lambda a: 1.5 + 0.5 * np.cos(a), n_samples=720)
    assert len(setup.duration_profile) == 720
    assert setup.duration_at(np.pi / 3) == pytest.approx(1.75, abs=1e-4)
    assert setup.rotations == base.rotations
    constant = base.with_duration(lambda a: 2.0)
    np.testing.assert_allclose(constant.duration_at([0.1, 3.0]), 2.0)
    assert base.duration_at(1.0) == pytest.approx(2.2)


def test_per_angle_duration_validation():
    base = AcquisitionSetup.default(1.0, m=1)
    with pytest.raises(ValidationError):
        base.with_duration([1.0, 3.0])
    with pytest.raises(ValidationError):
        base.with_duration([1.0, -0.5])
    with pytest.raises(ValidationError):
        base.with_duration([1.0])
    short = base.with_duration([2.0, 0.1])
    with pytest.raises(ConfigError):
        cutoff_value(short, 0, 0.0, 0.0)
