import numpy as np
import pytest
from scipy.special import i0

from nscale.bounds import (BoundReport, TrialFieldSet, check_bound_chain, ellipticity_floor, log_quadratic_value,
                           optimal_trials, quadratic_value, random_trials, slow_point, solver_log_value,
                           zero_trials)
from nscale.effective import tabulate
from nscale.errors import InputError
from nscale.potential import make_potential
from nscale.torus import solve_hierarchy

from conftest import cat


def test_direction_must_be_unit():
    with pytest.raises(InputError):
        TrialFieldSet(0, [1.0, 1.0], {})


def test_fields_are_made_mean_zero():
    t = TrialFieldSet(0, [1.0], {1: np.arange(8.0)})
    assert abs(t.fields[1].mean()) < 1e-15


def test_zero_trials_give_arithmetic_mean():
    p = cat(alpha=1.0)
    val = quadratic_value(p, 1.0, 0, [0.0], [], zero_trials(p, 0, [1.0]), 64)
    assert val == pytest.approx(i0(1.0), rel=1e-12)
    assert val >= 1 / i0(1.0)


def test_level_out_of_range_and_dimension_checks():
    p = cat()
    with pytest.raises(InputError):
        quadratic_value(p, 1.0, 1, [0.0], [[0.0]], zero_trials(p, 1, [1.0]), 16)
    p2 = make_potential({"dim": 2, "n_scales": 1, "V1": {"name": "egg_crate"}})
    with pytest.raises(InputError):
        quadratic_value(p2, 1.0, 0, [0.0, 0.0], [], zero_trials(p2, 0, [1.0]), 16)


@pytest.mark.parametrize("dim,N,name,level", [(1, 2, "nonseparable", 0), (1, 2, "nonseparable", 1),
                                              (2, 2, "nonseparable", 0), (2, 1, "egg_crate", 0)])
def test_optimal_trials_reach_solver_value(dim, N, name, level):
    p = make_potential({"dim": dim, "n_scales": N, "V1": {"name": name,
                        "params": {"coupling": {"kind": "lorentzian"}}}})
    n = 16 if dim == 2 else 32
    H = solve_hierarchy(p, 1.0, np.array([[0.3] * dim]), n)
    e = np.ones(dim) / np.sqrt(dim)
    node = (3,) * (dim * level)
    x0, ys = slow_point(H, level, 0, node)
    t = optimal_trials(H, level, 0, node, e)
    gap = log_quadratic_value(p, 1.0, level, x0, ys, t, n) - solver_log_value(H, level, 0, node, e)
    assert abs(gap) <= 10 * max(H.residual, 1e-12)


def test_random_trials_never_beat_solver(rng):
    p = make_potential({"dim": 2, "n_scales": 2, "V1": {"name": "nonseparable",
                        "params": {"coupling": {"kind": "lorentzian"}}}})
    H = solve_hierarchy(p, 1.0, np.array([[0.1, -0.4]]), 16)
    for _ in range(20):
        e = rng.standard_normal(2)
        e /= np.linalg.norm(e)
        ref = solver_log_value(H, 0, 0, (), e)
        opt = optimal_trials(H, 0, 0, (), e)
        for base in (None, opt):
            t = random_trials(rng, p, 0, 16, direction=e, base=base, amplitude=0.05 if base else None)
            val = log_quadratic_value(p, 1.0, 0, H.x0[0], [], t, 16)
            assert np.expm1(val - ref) >= -1e-9


def test_bound_chain_cosine_values():
    p = cat(alpha=1.0)
    m = tabulate(p, 1.0, box=[[-5, 5]], nodes=9, grids=64)
    rep = check_bound_chain(m, p, n_random=8)
    assert rep.passed
    r = rep.rows[0]
    assert r["lower"] == pytest.approx(np.exp(-2.0), rel=1e-12)
    assert r["closed_form"] == pytest.approx(1 / i0(1.0) ** 2, rel=1e-12)
    assert r["M_value"] == pytest.approx(r["closed_form"], rel=1e-12)
    assert len(rep.rows) == 9 * 9


def test_bound_chain_zero_fluctuation_collapses():
    p = cat(v1="zero")
    m = tabulate(p, 1.0, box=[[-5, 5]], nodes=9, grids=8)
    rep = check_bound_chain(m, p)
    assert rep.passed
    assert all(r["lower"] == 1.0 and abs(r["M_value"] - 1) < 1e-15 for r in rep.rows)


@pytest.mark.parametrize("sigma", [1.0, 0.5, 0.25])
def test_bound_chain_low_temperature(sigma):
    p = cat(alpha=1.0)
    m = tabulate(p, sigma, box=[[-5, 5]], nodes=9, grids=64)
    rep = check_bound_chain(m, p, n_random=0)
    assert rep.passed
    assert rep.rows[0]["lower"] == pytest.approx(np.exp(-2 / sigma), rel=1e-12)


def test_bound_violation_is_reported_not_raised():
    p = cat(alpha=1.0)
    m = tabulate(p, 1.0, box=[[-5, 5]], nodes=9, grids=32)
    m.M = m.M * 1.7  # pushes e.M e above one
    rep = check_bound_chain(m, p, n_random=0)
    assert not rep.passed and rep.worst["M_to_upper"] < 0


def test_bound_csv(tmp_path):
    p = cat(alpha=1.0)
    m = tabulate(p, 1.0, box=[[-5, 5]], nodes=5, grids=16)
    path = tmp_path / "b.csv"
    check_bound_chain(m, p, n_random=1).to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[1] == "node,direction,x,e,lower,closed_form,M_value,upper,margin"
    assert len(lines) == 2 + 5 * 2


def test_ellipticity_floor_equality_without_fluctuation():
    H = solve_hierarchy(cat(n_scales=2, v1="zero"), 1.0, np.array([[0.5]]), 8)
    rep = ellipticity_floor(H)
    assert rep.passed and all(abs(m) < 1e-12 for m in rep.margins.values())


def test_ellipticity_floor_attained_in_one_dimension():
    # in 1D the level tensor is the harmonic mean, which equals the floor exactly
    H = solve_hierarchy(cat(alpha=1.0), 1.0, np.array([[0.5]]), 64)
    rep = ellipticity_floor(H)
    assert rep.passed and abs(rep.margins[0]) < 1e-12


def test_ellipticity_floor_strict_for_two_dimensional_cosine():
    p = make_potential({"dim": 2, "n_scales": 1, "V1": {"name": "cosine", "params": {"alpha": 1.0}}})
    H = solve_hierarchy(p, 1.0, np.array([[0.5, 0.0]]), 32)
    rep = ellipticity_floor(H)
    assert rep.margins[0] > 0.1


def test_ellipticity_floor_nonseparable_random_points(rng):
    p = cat(n_scales=2, v1="nonseparable", coupling={"kind": "lorentzian"})
    H = solve_hierarchy(p, 1.0, rng.uniform(-3, 3, (16, 1)), 32)
    rep = ellipticity_floor(H)
    assert rep.passed


def test_layered_two_dimensional_attains_closed_form():
    # V1 depends on one coordinate only: the mobility along that axis is the 1D harmonic value
    p = make_potential({"dim": 2, "n_scales": 1, "V1": {"name": "layered", "params": {"alpha": 1.0}}})
    m = tabulate(p, 1.0, box=[[-4, 4], [-4, 4]], nodes=5, grids=32)
    rep = check_bound_chain(m, p, n_random=0)
    row = next(r for r in rep.rows if r["direction"] == 0)
    assert row["M_value"] == pytest.approx(row["closed_form"], rel=1e-10)
