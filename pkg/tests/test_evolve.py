from dataclasses import replace

import numpy as np
import pytest

from eulerlab import evolve as ev
from eulerlab.errors import CFLError, ConvergenceError, DomainError
from eulerlab.evolve import (
    EvolveConfig,
    NeumannPoisson,
    PatchGrid,
    advection,
    convergence_study,
    divergence,
    init_from_solution,
    run,
    stable_dt,
    step,
)
from eulerlab.solutions import SolutionParams, evaluate_case

CASE3 = SolutionParams(1, 0, 1)
CASE1 = SolutionParams(0, 0)
CASE2 = SolutionParams(0, 2)
CASE4 = SolutionParams(2, 1)


def _cfg(prm=CASE3, n=32, t=(0.0, 0.1), rng=(0.0, 1.0), **kw):
    return EvolveConfig(prm, PatchGrid.on(n, n, rng, rng), *t, **kw)


def test_grid_layout():
    g = PatchGrid.on(8, 10, (0, 2), (-1, 0))
    assert (g.dx, g.dy) == (0.25, 0.1)
    X, Y = g.u1_points()
    assert X.shape == (9, 10) and X[0, 0] == 0 and Y[0, 0] == pytest.approx(-0.95)
    X, Y = g.u2_points()
    assert X.shape == (8, 11) and X[0, 0] == 0.125 and Y[0, -1] == 0
    assert g.centers()[0].shape == (8, 10)


def test_grid_and_config_validation():
    with pytest.raises(ValueError):
        PatchGrid.on(4)
    g = PatchGrid.on(8)
    with pytest.raises(ValueError):
        EvolveConfig(CASE3, g, 0, 1, cfl=0.95)
    with pytest.raises(ValueError):
        EvolveConfig(CASE3, g, 0, 1, omega=2.0)
    with pytest.raises(ValueError):
        EvolveConfig(CASE3, g, 0, 1, scheme="bdf")


def test_init_case3_divergence():
    cfg = _cfg()
    s = init_from_solution(cfg)
    assert s.t == 0.0
    assert np.abs(divergence(s.u1, s.u2, cfg.grid)).max() < 1e-3 * cfg.grid.dx


def test_init_case1_u1_independent_of_x():
    s = init_from_solution(_cfg(CASE1, t=(1.0, 1.1)))
    assert s.t == 1.0
    np.testing.assert_allclose(s.u1, np.broadcast_to(s.u1[0], s.u1.shape), atol=1e-15)


def test_patch_outside_domain():
    with pytest.raises(DomainError):
        init_from_solution(_cfg(CASE4, t=(1.0, 1.1)))
    with pytest.raises(DomainError):
        run(_cfg(CASE1, t=(0.0, 0.1)))


def test_one_step_projection():
    cfg = _cfg()
    s = step(init_from_solution(cfg), cfg)
    assert s.max_div < 1e-8
    assert s.t == pytest.approx(stable_dt(init_from_solution(cfg), cfg))


def test_zero_state_stays_zero():
    # c3 = 0, c2 = -1 and zero amplitude give the trivial flow
    cfg = _cfg(SolutionParams(1, -1, 0), n=16, amplitude=0.0)
    s = init_from_solution(cfg)
    assert not s.u1.any() and not s.u2.any()
    s = step(s, cfg, dt=1e-2)
    assert not s.u1.any() and not s.u2.any() and s.max_div == 0


def test_case1_one_step_taylor():
    for scheme, bound in (("chorin", lambda dt, h: 5 * dt**2 + h**2), ("projected", lambda dt, h: 5 * dt**2)):
        cfg = _cfg(CASE1, t=(1.0, 1.1), scheme=scheme)
        s = init_from_solution(cfg)
        dt = stable_dt(s, cfg)
        s2 = step(s, cfg, dt)
        X, Y = cfg.grid.u1_points()
        # dt * du1/dt at t = 1; the Taylor remainder is at most 4 dt^2 here
        pred = s.u1 + dt * (-Y - 2.0)
        assert np.abs(s2.u1 - pred)[1:-1].max() < bound(dt, cfg.grid.dx), scheme


def test_cfl_violation():
    cfg = _cfg(n=16)
    s = init_from_solution(cfg)
    with pytest.raises(CFLError):
        step(s, cfg, dt=2 * stable_dt(s, cfg))


def test_poisson_failure_reports_residual():
    cfg = _cfg(CASE1, n=16, t=(1.0, 1.1), poisson_max_iter=10)
    with pytest.raises(ConvergenceError) as exc:
        run(cfg)
    assert exc.value.residual > 0


def test_poisson_solver():
    g = PatchGrid.on(16, 12)
    P = NeumannPoisson(g, tol=1e-12)
    rng = np.random.default_rng(0)
    b = rng.normal(size=(16, 12))
    phi, it = P.solve(b)
    assert it > 0 and abs(phi.mean()) < 1e-14
    assert np.abs(P.apply(phi) - (b - b.mean())).max() < 1e-11 * np.abs(b).max()
    assert P.solve(np.zeros((16, 12)))[1] == 0


def test_advection_of_uniform_flow_is_zero():
    g = PatchGrid.on(8)
    a1, a2 = advection(np.full((9, 8), 2.0), np.full((8, 9), -1.0), g)
    assert not a1.any() and not a2.any()


def test_run_case3_regression_and_refinement():
    r32 = run(_cfg())
    r64 = run(_cfg(n=64))
    assert r32.l2_u < 5e-3
    assert r32.l2_u / r64.l2_u >= 1.8
    assert max(r32.div_history) < 1e-8 and max(r64.div_history) < 1e-8
    assert r32.t == 0.1 and r32.steps == len(r32.div_history)


def test_run_case1():
    rep = run(_cfg(CASE1, t=(1.0, 1.1)))
    assert rep.l2_u < 5e-3 and rep.max_div < 1e-8


def test_zero_steps_exact():
    rep = run(_cfg(CASE2, n=16, t=(1.0, 1.0)))
    assert rep.steps == 0 and rep.l2_u == 0 and rep.l2_p_gauge_free < 1e-15


def test_convergence_study_case3():
    study = convergence_study(_cfg(n=16), [16, 32, 64])
    assert 0.8 <= study["order"] <= 2.2
    assert study["monotone"] and study["div_ok"] and not study["degraded"]
    assert all("order" in r for r in study["rows"][1:])


def test_convergence_study_loose_poisson_flagged():
    study = convergence_study(_cfg(n=16, poisson_tol=1e-7), [16, 32, 64])
    assert study["degraded"]
    assert not study["div_ok"]


def test_convergence_study_needs_three():
    with pytest.raises(ValueError):
        convergence_study(_cfg(n=16), [16, 32])


@pytest.mark.parametrize("prm, t, rng", [(CASE1, (1.0, 1.1), (0.0, 1.0)),
                                         (CASE2, (1.0, 1.1), (0.0, 1.0)),
                                         (CASE4, (1.0, 1.1), (-2.0, -1.0))])
@pytest.mark.parametrize("scheme", ["chorin", "projected"])
def test_error_decreases_under_refinement(prm, t, rng, scheme):
    errs = [run(_cfg(prm, n, t, rng, scheme=scheme)).l2_u for n in (16, 32)]
    if errs[0] < 1e-11:  # affine fields are reproduced to roundoff
        assert errs[1] < 1e-11
    else:
        assert errs[1] < 1.1 * errs[0] * 0.6


def test_projected_scheme_second_order_case2():
    study = convergence_study(_cfg(CASE2, 16, (1.0, 1.1), scheme="projected"), [16, 32, 64])
    assert study["order"] > 1.8


def test_halving_cfl_temporal_error_subdominant():
    cfg = _cfg(CASE2, 32, (1.0, 1.1), scheme="projected")
    a = run(cfg).l2_u
    b = run(replace(cfg, cfl=0.25)).l2_u
    assert abs(a - b) < b


def test_reproducible():
    cfg = _cfg(CASE2, 16, (1.0, 1.05))
    s1, s2 = [], []
    run(cfg, dump=lambda s, n: s1.append(s.u1.copy()))
    run(cfg, dump=lambda s, n: s2.append(s.u1.copy()))
    assert len(s1) == len(s2) and all(np.array_equal(a, b) for a, b in zip(s1, s2))


def test_cell_records():
    cfg = _cfg(CASE3, 16)
    s = init_from_solution(cfg)
    X, Y, u1, u2, p, div, vort = ev.cell_records(s, cfg.grid)
    assert X.shape == (16, 16)
    ref = evaluate_case(CASE3, X, Y, 0.0)
    np.testing.assert_allclose(u1, ref.u1, atol=1e-12)
    np.testing.assert_allclose(vort, ref.vort, atol=1e-10)
