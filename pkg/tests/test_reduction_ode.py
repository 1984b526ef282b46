import math

import numpy as np
import pytest

from eulerlab.errors import BlowUpError, DomainError, SingularityError
from eulerlab.reduction_ode import (
    IntegratorConfig,
    OdePath,
    build_numeric_reduction,
    integrate_fg,
    integrate_W,
    reconstruct_and_verify,
    rk4,
    sampled_closed_form,
)
from eulerlab.residuals import residual_norms
from eulerlab.solutions import SolutionParams, profile, temporal_coefficients

from conftest import box_lattice

DTS = (4e-3, 2e-3, 1e-3)


def _order(dts, errs):
    return float(np.polyfit(np.log(dts), np.log(errs), 1)[0])


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")


def test_rk4_lands_on_endpoint():
    s, y, dy = rk4(lambda s, y: -y, 0.0, [1.0], 1.0, 0.3)  # 4 steps, last one shortened
    assert s[-1] == 1.0 and len(s) == 5
    assert y[-1, 0] == pytest.approx(math.exp(-1), abs=1e-3)
    np.testing.assert_allclose(dy[:, 0], -y[:, 0])


def test_fg_case4_endpoint():
    f, g = integrate_fg(SolutionParams(2, 1), 1.0, -1.0, 0.0, 2.0)
    assert abs(f(2.0) + 0.5) < 1e-10
    assert abs(g(2.0) + math.log(2)) < 1e-9


def test_fg_constant_for_c1_1():
    f, _ = integrate_fg(SolutionParams(1, 0.5), 0.5, 5.0, 0.0, 3.0)
    assert np.abs(f.y - 5.0).max() < 1e-13


def test_fg_backwards():
    f, g = integrate_fg(SolutionParams(2, 1), 2.0, -0.5, -math.log(2), 1.0)
    assert f.bounds == (1.0, 2.0)
    assert abs(f(1.0) + 1.0) < 1e-10 and abs(g(1.0)) < 1e-9


def test_fg_rk4_order():
    # Case 5 (3, 1) from t = 0.1, where f and g vary fast, to t = 1
    prm = SolutionParams(3, 1)
    p0, p1 = temporal_coefficients(prm, 0.1), temporal_coefficients(prm, 1.0)
    ef, eg = [], []
    for dt in DTS:
        f, g = integrate_fg(prm, 0.1, p0.f, p0.g, 1.0, IntegratorConfig(dt))
        ef.append(abs(f(1.0) - p1.f))
        eg.append(abs(g(1.0) - p1.g))
    assert _order(DTS, ef) >= 3.9 and _order(DTS, eg) >= 3.9
    assert 14 < ef[1] / ef[2] < 18


def test_fg_pole_standoff():
    with pytest.raises(SingularityError):
        integrate_fg(SolutionParams(2, 1), 0.005, -200.0, 0.0, 1.0)


def test_fg_blowup_reports_time():
    # f' = 2 f^2 with f(1) = 1 blows up at t = 1.5
    with pytest.raises(BlowUpError) as exc:
        integrate_fg(SolutionParams(3, 0), 1.0, 1.0, 0.0, 2.0, IntegratorConfig(1e-4))
    assert 1.49 < exc.value.at < 1.51


def test_W_sqrt_profile():
    W = integrate_W(SolutionParams(2, 0), 1.0, 1.0, 4.0)
    assert abs(W(4.0) - 2.0) < 1e-9


def test_W_exponential_profile():
    W = integrate_W(SolutionParams(0, 1), 0.0, 1.0, 1.0)
    assert abs(W(1.0) - math.e) < 1e-8


def test_W_zero_stays_zero():
    W = integrate_W(SolutionParams(3, 1), 0.0, 0.0, 2.0)
    assert np.all(W.y == 0.0) and W(1.234) == 0.0


def test_W_rk4_order():
    exact = math.exp(2 / 0.5)
    errs = [abs(integrate_W(SolutionParams(0, 0.5), 0.0, 1.0, 2.0, IntegratorConfig(dt))(2.0) - exact)
            for dt in DTS]
    assert _order(DTS, errs) >= 3.9


def test_W_singular_point():
    with pytest.raises(SingularityError):
        integrate_W(SolutionParams(2, -2), 0.0, 1.0, 2.0)  # z = 1 is singular
    with pytest.raises(SingularityError):
        integrate_W(SolutionParams(0, 0), 0.0, 1.0, 2.0)


def test_path_interpolation():
    s = np.linspace(0, 1, 11)
    path = OdePath.from_function(s, np.sin, np.cos)
    np.testing.assert_array_equal(path(s), np.sin(s))
    mid = s[:-1] + 0.05
    assert np.abs(path(mid) - np.sin(mid)).max() < 1e-6
    assert path.derivative(0.5) == pytest.approx(math.cos(0.5), abs=1e-4)
    with pytest.raises(DomainError):
        path(1.5)
    with pytest.raises(ValueError):
        OdePath([0, 1, 1], [0, 0, 0], [0, 0, 0])


def test_hermite_error_is_fourth_order():
    errs = []
    hs = (0.04, 0.02, 0.01)
    for h in hs:
        s = np.arange(0, 1 + h / 2, h)
        path = OdePath.from_function(s, np.exp, np.exp)
        mid = s[:-1] + h / 2
        errs.append(np.abs(path(mid) - np.exp(mid)).max())
    assert _order(hs, errs) >= 3.9


def test_path_descending_input():
    s = np.linspace(2, 1, 5)
    path = OdePath(s, s**2, 2 * s)
    assert path.bounds == (1.0, 2.0)
    assert path(1.5) == pytest.approx(2.25)


def _verify(prm, lattice, dt=1e-3, amplitude=1.0):
    flow = build_numeric_reduction(prm, lattice, IntegratorConfig(dt), amplitude)
    return reconstruct_and_verify(prm, (flow.f, flow.g), flow.W, lattice)


@pytest.mark.parametrize("prm", [SolutionParams(2, 1), SolutionParams(3, 1), SolutionParams(0, 2)])
@pytest.mark.parametrize("amplitude", [1.0, 2.0])
def test_reconstruction(prm, amplitude):
    rep = _verify(prm, box_lattice(11, 5), amplitude=amplitude)
    assert rep.max_abs < 1e-6 and rep.n_points == 605


def test_reconstruction_with_closed_forms():
    prm = SolutionParams(2, 1)
    lat = box_lattice(11, 5)
    paths = sampled_closed_form(prm, (1.0, 2.0), (0.2, 4.5), 1e-3)
    rep = reconstruct_and_verify(prm, paths[:2], paths[2], lat)
    direct = residual_norms(prm, lat)
    assert rep.max_abs < 1e-9
    assert abs(rep.max_abs - direct.max_abs) < 1e-9


def test_reconstruction_order():
    prm = SolutionParams(3, 1)
    lat = box_lattice(11, 5)
    dts = (8e-3, 4e-3, 2e-3, 1e-3)
    errs = [_verify(prm, lat, dt).max_abs for dt in dts]
    assert _order(dts, errs) >= 3


def test_reconstruction_out_of_range():
    prm = SolutionParams(2, 1)
    paths = sampled_closed_form(prm, (1.0, 1.5), (0.2, 4.5), 1e-3)
    with pytest.raises(DomainError):
        reconstruct_and_verify(prm, paths[:2], paths[2], box_lattice(5, 3))


def test_numeric_profile_amplitude_family():
    prm = SolutionParams(2, 1)
    W = integrate_W(prm, 0.0, 2.0 * profile(prm, 0.0).W, 3.0)
    assert abs(W(3.0) - 2.0 * profile(prm, 3.0).W) < 1e-9
