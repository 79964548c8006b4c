import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import i0, i1

from nscale import equilibrium as eq
from nscale.effective import manufactured_model, tabulate
from nscale.errors import BlowUpError, InputError, NotPSDError, StabilityError
from nscale.sde import (InitialLaw, SimulationSpec, _sqrt_clamped, chunk_rng, psd_sqrt, simulate_full,
                        simulate_homogenized, weak_error, weak_error_csv)

from conftest import cat


def test_psd_sqrt_examples():
    assert np.allclose(psd_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-15)


def test_psd_sqrt_random_spd(rng):
    for _ in range(20):
        B = rng.standard_normal((3, 3))
        A = B @ B.T + 0.1 * np.eye(3)
        S = psd_sqrt(A)
        assert np.allclose(S, S.T, atol=0)
        assert np.linalg.norm(S @ S - A) <= 1e-12 * np.linalg.norm(A)
        assert np.all(np.linalg.eigvalsh(S) >= 0)


def test_psd_sqrt_clamps_tiny_negative_and_rejects_large():
    S = psd_sqrt(np.diag([1.0, -1e-13]))
    assert np.allclose(S, np.diag([1.0, 0.0]))
    with pytest.raises(NotPSDError):
        psd_sqrt(np.diag([1.0, -1e-6]))


@settings(max_examples=60, deadline=None)
@given(a=st.floats(1e-3, 1.0), c=st.floats(1e-3, 1.0), t=st.floats(-0.99, 0.99))
def test_analytic_2x2_root_matches_eigen_root(a, c, t):
    b = t * np.sqrt(a * c)
    M = np.array([[[a, b], [b, c]]])
    S, bad = _sqrt_clamped(M)
    assert bad == 0
    assert np.allclose(S[0], psd_sqrt(M[0]), atol=1e-12)


def test_initial_law_config():
    law = InitialLaw.from_config({"kind": "gaussian", "mean": [1.0, 2.0], "std": 0.5})
    x = law.sample(np.random.default_rng(0), 5000, 2)
    assert np.allclose(x.mean(axis=0), [1, 2], atol=0.05)
    assert InitialLaw.from_config({"x": 3.0}).mean == (3.0,)
    with pytest.raises(InputError):
        InitialLaw("uniform").sample(np.random.default_rng(0), 2, 1)


def test_spec_validation():
    p = cat(v1="zero")
    for kw in ({"T": 0.0}, {"dt": -1.0}, {"n_paths": 0}, {"epsilon": 0.0}, {"chunk": 0}):
        args = dict(potential=p, sigma=1.0, T=1.0, n_paths=10)
        args.update(kw)
        with pytest.raises(InputError):
            SimulationSpec(**args)


def test_ou_terminal_variance():
    spec = SimulationSpec(cat(v1="zero"), 1.0, T=1.0, n_paths=100_000, seed=3, epsilon=1.0)
    ens = simulate_full(spec)
    v = ens.terminal[:, 0]
    var = v.var(ddof=1)
    se = np.sqrt(np.mean((v - v.mean()) ** 4) - var**2) / np.sqrt(len(v))
    assert abs(var - (1 - np.exp(-2.0))) < 3 * se


def test_zero_noise_decay():
    spec = SimulationSpec(cat(v1="zero"), 0.0, T=1.0, n_paths=4, epsilon=1.0, initial={"mean": 1.0})
    ens = simulate_full(spec)
    assert np.allclose(ens.terminal, np.exp(-1.0), atol=1e-3)
    assert np.allclose(ens.terminal, (1 - ens.dt) ** round(1 / ens.dt), rtol=1e-12)


def test_fast_variable_time_average_is_ergodic():
    # Euler-Maruyama biases the invariant law by O(dt); check the refined step hits the Gibbs mean
    eps = 0.25
    p = cat(alpha=1.0)
    gibbs = eq.gibbs_density(p, 1.0, eps, [[-9, 9]]).expect(lambda x: np.cos(2 * np.pi * x / eps))
    assert gibbs == pytest.approx(-i1(1.0) / i0(1.0), abs=1e-6)
    bias = {}
    for c in (0.05, 0.0125):
        spec = SimulationSpec(p, 1.0, T=2.0, n_paths=256, seed=11, epsilon=eps, stability_c=c,
                              initial={"kind": "gaussian", "mean": 0.0, "std": 1.0})
        ens = simulate_full(spec, time_averages={"v1": lambda x: np.cos(2 * np.pi * x[:, 0] / eps)}, burn_in=0.25)
        tav = ens.time_averages["v1"]
        bias[c] = (tav.mean() - gibbs, tav.std(ddof=1) / np.sqrt(len(tav)))
    b, se = bias[0.0125]
    assert abs(b) < 4 * se + 3e-3
    assert abs(bias[0.05][0]) > abs(b)


def test_stability_violation_suggests_dt():
    spec = SimulationSpec(cat(alpha=1.0), 1.0, T=1.0, n_paths=8, epsilon=0.1, dt=1e-3)
    with pytest.raises(StabilityError) as info:
        simulate_full(spec)
    assert info.value.suggested_dt == pytest.approx(0.05 * 0.01 / (4 * np.pi**2))


def test_blow_up_names_step():
    spec = SimulationSpec(cat(v1="zero"), 1.0, T=1.0, n_paths=64, epsilon=1.0, box=[[-0.05, 0.05]])
    with pytest.raises(BlowUpError) as info:
        simulate_full(spec)
    assert info.value.step >= 1 and "step" in str(info.value)


def test_zero_fluctuation_homogenized_equals_full():
    p = cat(v1="zero")
    model = tabulate(p, 1.0, box=[[-9, 9]], nodes=33, grids=8)
    spec = SimulationSpec(p, 1.0, T=0.5, n_paths=3000, seed=4, epsilon=1.0, initial={"mean": 0.7})
    full = simulate_full(spec)
    homog = simulate_homogenized(spec, model)
    assert full.dt == homog.dt
    assert np.array_equal(full.terminal, homog.terminal)


def test_separable_case_is_constant_mobility_ou():
    p = cat(alpha=1.0)
    model = tabulate(p, 1.0, box=[[-9, 9]], nodes=33, grids=64)
    assert np.all(model.divM == 0)
    spec = SimulationSpec(p, 1.0, T=0.2, n_paths=50, seed=9, initial={"mean": 1.0})
    ens = simulate_homogenized(spec, model)
    m = model.M[0, 0, 0]
    rng = chunk_rng(9, 0)
    x = np.ones((50, 1))
    for _ in range(200):
        dw = rng.standard_normal((50, 1))
        x = x - 1e-3 * m * x + np.sqrt(2e-3) * np.sqrt(m) * dw
    assert np.allclose(ens.terminal, x, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("v1, initial, T", [
    ("cosine", {"kind": "point", "mean": 0.0}, 6.0),
    ("x_coupled_cosine", {"kind": "gaussian", "mean": 0.0, "std": 1.0}, 4.0),
])
def test_homogenized_equilibrium_second_moment(v1, initial, T):
    p = cat(v1=v1, alpha=1.0)
    model = tabulate(p, 1.0, box=[[-9, 9]], nodes=129, grids=32)
    spec = SimulationSpec(p, 1.0, T=T, n_paths=16384, seed=21, initial=initial)
    ens = simulate_homogenized(spec, model)
    x2 = ens.terminal[:, 0] ** 2
    target = eq.coarse_density(p, 1.0, [[-9, 9]], n=2049).expect(lambda x: x**2)
    assert abs(x2.mean() - target) < 3 * x2.std(ddof=1) / np.sqrt(len(x2)) + 2e-3


def test_clamp_budget_exceeded_raises():
    axes = [np.linspace(-3, 3, 61)]
    model = manufactured_model(axes, lambda X: 0.5 - X[..., 0] ** 2)  # negative for |x| > 0.7
    spec = SimulationSpec(cat(v1="zero"), 1.0, T=0.1, n_paths=200, initial={"mean": 1.5}, box=[[-3, 3]])
    with pytest.raises(NotPSDError):
        simulate_homogenized(spec, model)


def test_homogenized_rejects_wrong_temperature():
    p = cat(alpha=1.0)
    model = tabulate(p, 1.0, box=[[-9, 9]], nodes=17, grids=16)
    with pytest.raises(InputError):
        simulate_homogenized(SimulationSpec(p, 0.5, T=0.1, n_paths=4), model)


def test_seed_reproducibility_and_parallel_equivalence():
    p = cat(v1="x_coupled_cosine", alpha=1.0)
    model = tabulate(p, 1.0, box=[[-9, 9]], nodes=33, grids=16)
    spec = SimulationSpec(p, 1.0, T=0.05, n_paths=5000, seed=5, chunk=1024, epsilon=0.5,
                          initial={"kind": "gaussian", "mean": 0.0, "std": 1.0})
    a = simulate_full(spec)
    b = simulate_full(spec, workers=3)
    assert np.array_equal(a.terminal, b.terminal) and a.spec_hash == b.spec_hash
    h1 = simulate_homogenized(spec, model)
    h2 = simulate_homogenized(spec, model, workers=4)
    assert np.array_equal(h1.terminal, h2.terminal)
    other = SimulationSpec(p, 1.0, T=0.05, n_paths=5000, seed=6, chunk=1024, epsilon=0.5,
                           initial={"kind": "gaussian", "mean": 0.0, "std": 1.0})
    c = simulate_full(other)
    assert not np.array_equal(a.terminal, c.terminal) and c.spec_hash != a.spec_hash


def test_ensemble_outputs(tmp_path):
    spec = SimulationSpec(cat(v1="zero"), 1.0, T=0.1, n_paths=1000, epsilon=1.0, snapshot_stride=10)
    ens = simulate_full(spec)
    assert ens.n_paths == 1000 and ens.snapshots.shape == (11, 1000, 1)
    assert np.allclose(ens.times, np.arange(11) * 0.01)
    mom = ens.moments()
    assert set(mom) == {1, 2, 3, 4}
    counts, edges = ens.histogram(20)
    assert counts.sum() == 1000
    ens.to_csv(tmp_path / "e.csv")
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[1] == "observable,value,stderr,spec_hash" and len(lines) == 6
    ens.dump_terminal(tmp_path / "t.csv")
    assert np.loadtxt(tmp_path / "t.csv", delimiter=",").shape == (1000,)


def test_weak_error_zero_fluctuation_statistically_zero(tmp_path):
    p = cat(v1="zero")
    a = simulate_full(SimulationSpec(p, 1.0, T=0.5, n_paths=20000, seed=1, epsilon=1.0, initial={"mean": 1.0}))
    b = simulate_full(SimulationSpec(p, 1.0, T=0.5, n_paths=20000, seed=2, epsilon=1.0, initial={"mean": 1.0}))
    rows = weak_error(a, b)
    assert {r.observable for r in rows} == {"x", "x2", "x4", "bump"}
    assert all(r.gap < 4 * r.se for r in rows)
    lo, hi = rows[0].ci()
    assert lo < rows[0].full - rows[0].homog < hi
    weak_error_csv(tmp_path / "w.csv", rows, label="t")
    assert (tmp_path / "w.csv").read_text().startswith("label,observable,full,full_se")


def test_two_scale_gap_shrinks_from_04_to_025():
    # far-from-equilibrium start makes the finite-eps mobility error visible at short T
    p = cat(n_scales=2, v1="multiscale_cosine", alpha=1.0)
    model = tabulate(p, 1.0, box=[[-9, 9]], nodes=33, grids=[32, 32])
    ini = {"kind": "point", "mean": 6.0}
    homog = simulate_homogenized(SimulationSpec(p, 1.0, T=0.25, n_paths=10_000, seed=2, initial=ini), model)
    obs = {"x2": lambda x: x[:, 0] ** 2}
    rows = {e: weak_error(simulate_full(SimulationSpec(p, 1.0, T=0.25, n_paths=10_000, seed=3, epsilon=e,
                                                       initial=ini)), homog, obs)[0] for e in (0.4, 0.25)}
    assert rows[0.25].gap < rows[0.4].gap
    assert rows[0.4].gap - rows[0.25].gap > 3 * np.hypot(rows[0.4].se, rows[0.25].se)


def test_weak_error_horizon_mismatch():
    p = cat(v1="zero")
    a = simulate_full(SimulationSpec(p, 1.0, T=0.1, n_paths=10, epsilon=1.0))
    b = simulate_full(SimulationSpec(p, 1.0, T=0.2, n_paths=10, epsilon=1.0))
    with pytest.raises(InputError):
        weak_error(a, b)
