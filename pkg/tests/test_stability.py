import numpy as np
import pytest

from rotopat.geometry import AcquisitionSetup
from rotopat.inverse import MeasurementModel, domination_ratio, poincare_constant, smallness_margin, stability_experiment
from rotopat.optics import AbsorptionMap
from rotopat.phantom import Bump, PhantomSpec, generate_phantom, random_phantom_spec


def test_smallness_margin(mask):
    assert smallness_margin(AbsorptionMap.zeros(mask)) == 0.0
    sigma = generate_phantom(PhantomSpec(bumps=(Bump(amplitude=0.1),)), mask).sigma
    C = poincare_constant(mask)
    assert smallness_margin(sigma, C) == pytest.approx(C * sigma.w1inf())


def test_stability_experiment(mask, c, rng):
    setup = AcquisitionSetup.default(1.0, m=2)
    model = MeasurementModel(setup, c)
    a = generate_phantom(random_phantom_spec(rng, mask), mask).sigma
    b = generate_phantom(random_phantom_spec(rng, mask), mask).sigma
    report = stability_experiment([(a, b), (a, a)], setup, c, model)
    assert report.pairs_tested == 2
    assert report.excluded == [1]
    assert report.injectivity_violations == []
    assert report.ratios[0] is not None and report.ratios[0] > 0
    assert report.c_star == report.ratios[0]
    assert report.poincare > 0
    assert set(report.to_dict()) >= {"ratios", "c_star", "margins", "excluded"}


def test_empty_sweep(c):
    report = stability_experiment([], AcquisitionSetup.default(1.0, m=1), c)
    assert report.pairs_tested == 0 and report.c_star is None


def test_background_term_is_dominated(mask, c, rng):
    setup = AcquisitionSetup.default(1.0, m=2)
    background = generate_phantom(PhantomSpec(bumps=(Bump(amplitude=0.05),)), mask).sigma
    delta = generate_phantom(random_phantom_spec(rng, mask), mask).sigma.field
    ratio = domination_ratio(background, delta, setup, c)
    assert 0.0 < ratio <= 0.5
    zero_bg = domination_ratio(AbsorptionMap.zeros(mask), delta, setup, c)
    assert zero_bg == 0.0
    assert np.isfinite(ratio)
