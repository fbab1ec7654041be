import numpy as np
import pytest

from rotopat.acoustics import SoundSpeedMap
from rotopat.errors import AssemblyBudgetError, ConfigError, GeometryError, ShapeMismatchError
from rotopat.geometry import AcquisitionSetup, Arc, Grid, ScalarField, build_mask
from rotopat.inverse import (LinearizedOperator, MeasurementModel, assemble_kappa, data_derivative, hat_basis,
                             measurement_matrix, poincare_constant, power_iteration, symbol_weight,
                             time_reversal_norm, visibility_factors)
from rotopat.optics import AbsorptionMap
from rotopat.oracles import disk_poincare_constant, gaussian_source
from rotopat.phantom import Bump, PhantomSpec, generate_phantom
from rotopat.rays import trace_fan


@pytest.fixture
def model(setup, c):
    return MeasurementModel(setup, c)


@pytest.fixture
def sigma(mask):
    return generate_phantom(PhantomSpec(bumps=(Bump(amplitude=0.3),)), mask).sigma


def test_zero_absorption_gives_zero_data(mask, model):
    data = model.data(AbsorptionMap.zeros(mask))
    assert len(data) == 2
    assert all(not np.any(d.values) for d in data)


def test_cutoffs_follow_the_rotated_arcs(model):
    for i in range(model.m):
        chi = model.cutoff(i)
        assert chi.shape == (model.n_steps + 1, model.boundary.n_boundary_points)
        k = int(np.argmax(chi[0]))
        assert model.setup.arc(i).contains(model.boundary.angles[k])


def test_check_data(model, sigma):
    data = model.data(sigma)
    model.check_data(data)
    with pytest.raises(ShapeMismatchError):
        model.check_data(data[:1])


def test_kappa_is_linear(model, sigma, mask):
    op = LinearizedOperator(sigma, model)
    delta = generate_phantom(PhantomSpec(bumps=(Bump(center=(0.1, 0.0), radius=0.2, amplitude=1.0),)),
                             mask).sigma.field
    a = op(delta)
    np.testing.assert_allclose(op(delta * 2.0).values, 2 * a.values, rtol=1e-9, atol=1e-14)
    assert not np.any(op(ScalarField.zeros(mask.grid)).values)
    assert np.all(a.values[~mask.inside_omega] == 0.0)


def test_data_derivative_matches_finite_difference(setup, c, sigma, mask):
    model = MeasurementModel(setup, c, tol=1e-13)
    delta = generate_phantom(PhantomSpec(bumps=(Bump(center=(0.0, 0.1), radius=0.2, amplitude=1.0),)),
                             mask).sigma.field
    eps = 1e-4
    base = model.data(sigma)
    moved = model.data(AbsorptionMap(sigma.field + delta * eps, mask))
    deriv = data_derivative(sigma, delta, model)
    for b, m, d in zip(base, moved, deriv):
        fd = (m.values - b.values) / eps
        assert np.abs(fd - d.values).max() <= 1e-3 * np.abs(d.values).max()


def test_hat_basis(grid, mask):
    basis, nodes = hat_basis(grid, Grid.from_cells(1.0, 0.25, 24), mask)
    assert basis.shape == (grid.node_count, len(nodes))
    assert len(nodes) == 5
    support = np.asarray(abs(basis).sum(axis=1)).ravel() > 0
    assert not np.any(support & ~mask.inside_omega.ravel())
    with pytest.raises(GeometryError):
        hat_basis(grid, Grid.from_cells(1.0, 0.25, 16), build_mask(grid, 0.2))
    with pytest.raises(AssemblyBudgetError):
        hat_basis(grid, Grid.from_cells(1.0, 0.25, 128), build_mask(grid, 0.7))


def test_kappa_matrix(mask, c):
    setup = AcquisitionSetup.default(1.0, m=2)
    K = assemble_kappa(AbsorptionMap.zeros(mask), setup, c, Grid.from_cells(1.0, 0.25, 24), threads=2)
    assert K.matrix.shape == (5, 5)
    assert np.all(np.isfinite(K.matrix))
    s = K.singular_values()
    assert np.all(np.diff(s) <= 0) and s[-1] >= 0
    coef = np.arange(1.0, 6.0)
    np.testing.assert_allclose(K.project(K.to_field(coef)), coef, rtol=1e-10)


def test_measurement_matrix_shape(mask, c):
    setup = AcquisitionSetup.default(1.0, m=2)
    model = MeasurementModel(setup, c)
    M = measurement_matrix(AbsorptionMap.zeros(mask), setup, c, Grid.from_cells(1.0, 0.25, 24), j=1)
    assert M.shape == ((model.n_steps + 1) * model.boundary.n_boundary_points, 5)


def test_power_iteration():
    d = np.array([3.0, -1.0, 0.5])
    lam, x, iters = power_iteration(lambda v: d * v, np.ones(3), tol=1e-12, max_iter=500)
    assert lam == pytest.approx(3.0, rel=1e-8)
    assert abs(x[0]) == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(ConfigError):
        power_iteration(lambda v: v, np.zeros(3))


def test_poincare_constant_of_disk():
    grid = Grid.from_spacing(1.0, 0.25, 1 / 64)
    value = poincare_constant(build_mask(grid, 0.35))
    assert value == pytest.approx(disk_poincare_constant(0.35), rel=3e-2)
    with pytest.raises(ConfigError):
        poincare_constant(build_mask(grid, 0.0))


def test_symbol_weight_with_full_aperture(mask, c, setup):
    full = AcquisitionSetup.default(1.0, m=2, transducer=Arc(width=2 * np.pi))
    fan = trace_fan(mask, c, n_dirs=8)
    factors = visibility_factors(full, fan)
    assert factors.shape == (2, len(fan.nodes))
    np.testing.assert_allclose(factors, 1.0)
    model = MeasurementModel(full, c)
    fields = model.illuminate(AbsorptionMap.zeros(mask))
    w = symbol_weight(fields, full, fan)
    total = sum(f.field.values for f in fields)
    np.testing.assert_allclose(w.w.values.ravel()[fan.nodes], total.ravel()[fan.nodes])
    assert w.floor > 0
    assert w.floored(0.05).min() > 0
    partial = visibility_factors(setup, fan)
    assert partial.min() >= 0.0 and partial.max() <= 1.0


def full_arc_model(grid):
    setup = AcquisitionSetup.default(grid.rho, m=1, transducer=Arc(width=2 * np.pi))
    return MeasurementModel(setup, SoundSpeedMap.constant(grid))


def test_full_arc_time_reversal_recovers_bumps():
    grid = Grid.from_spacing(1.0, 0.25, 1 / 48)
    model = full_arc_model(grid)
    for center in ((0.05, 0.0), (-0.2, 0.3)):
        H = gaussian_source(grid, center=center, width=0.15)
        back = model.back_project([model.observe(0, H)])
        assert (H - back).l2() <= 0.5 * H.l2()


def test_time_reversal_norm_is_stable_under_refinement():
    coarse = Grid.from_cells(1.0, 0.25, 24)
    norms = []
    for n in (48, 96):
        grid = Grid.from_cells(1.0, 0.25, n)
        norms.append(time_reversal_norm(full_arc_model(grid), build_mask(grid, 0.35), coarse))
    assert 0.7 <= norms[1] <= 1.3
    assert norms[0] == pytest.approx(norms[1], rel=0.2)
