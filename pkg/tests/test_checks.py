import pytest

from rotopat.checks import DEFAULT_CHECKS, CheckContext, select_checks
from rotopat.checks.diffusion import bessel_error
from rotopat.checks.operator import ELLIPTICITY_ANGLES
from rotopat.errors import ConfigError
from rotopat.geometry import AcquisitionSetup
from rotopat.rays import check_stability


def test_registry():
    names = [c.name for c in DEFAULT_CHECKS]
    assert len(names) == 9 and len(set(names)) == 9
    assert all(c.criterion for c in DEFAULT_CHECKS)


def test_select_checks():
    assert select_checks(None) == DEFAULT_CHECKS
    picked = select_checks(["rays_visibility", "poincare_constant"])
    assert [c.name for c in picked] == ["rays_visibility", "poincare_constant"]
    with pytest.raises(ConfigError, match="unknown checks"):
        select_checks(["nope"])


def test_context_scale_and_memo(grid):
    ctx = CheckContext(scale="full")
    assert ctx.pick(1, 2) == 2
    assert ctx.medium(grid) is ctx.medium(grid)
    assert CheckContext().rng().integers(1 << 30) == CheckContext().rng().integers(1 << 30)


def test_poincare_check_reports_metrics():
    res = select_checks(["poincare_constant"])[0](CheckContext())
    assert res.name == "poincare_constant"
    assert res.metrics["exact"] == pytest.approx(0.35 / 2.404825557695773)
    assert res.seconds >= 0
    assert res.to_dict()["metrics"]["value"] > 0


def test_bessel_error_shrinks():
    assert bessel_error(1 / 32) > bessel_error(1 / 64) > 0


@pytest.mark.slow
@pytest.mark.parametrize("check", DEFAULT_CHECKS, ids=lambda c: c.name)
def test_acceptance(check):
    res = check(CheckContext(scale="full"))
    assert res.passed, res.model_dump()


def test_ellipticity_acquisition_sees_every_direction(mask, c):
    setup = AcquisitionSetup.default(mask.grid.rho, m=ELLIPTICITY_ANGLES)
    assert check_stability(setup, mask, c, n_dirs=16).stability_ok
    # half the rotations leave the diagonals unseen at the centre
    sparse = AcquisitionSetup.default(mask.grid.rho, m=ELLIPTICITY_ANGLES // 2)
    assert not check_stability(sparse, mask, c, n_dirs=16).stability_ok
