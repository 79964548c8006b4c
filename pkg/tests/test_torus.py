import numpy as np
import pytest
from scipy.special import i0

from nscale.errors import ConvergenceError, DependencyError, EllipticityError, InputError
from nscale.potential import make_potential
from nscale.torus import (CoefficientField, TorusGrid, dump_correctors_csv, harmonic_mean_corrector_1d,
                          level_tensor, solve_cell, solve_hierarchy)
from nscale.effective import inverse_partition_product

from conftest import cat


def test_grid_basics():
    g = TorusGrid(2, 8)
    assert g.shape == (8, 8) and g.size == 64 and g.spacing == 0.125
    assert g.weights().sum() == pytest.approx(1.0)
    assert g.wrap(8) == 0 and g.wrap(-1) == 7
    with pytest.raises(InputError):
        TorusGrid(1, 1)


def test_constant_coefficient_gives_zero_corrector():
    g = TorusGrid(2, 16)
    K = CoefficientField(1, np.full(g.shape, 2.5), 2, isotropic=True)
    cf = solve_cell(K, g)
    assert np.max(np.abs(cf.theta)) < 1e-14
    assert np.allclose(cf.effective, 2.5 * np.eye(2))


def _cosine_weight(n, sigma=1.0):
    y = np.arange(n) / n
    return np.exp(-np.cos(2 * np.pi * y) / sigma)


def test_1d_corrector_matches_harmonic_mean_solution():
    n = 64
    K = _cosine_weight(n)
    cf = solve_cell(CoefficientField(1, K, 1, isotropic=True), TorusGrid(1, n))
    theta_prime, keff = harmonic_mean_corrector_1d(K)
    # spectral derivative of the discrete solution vs the closed form: same up to aliasing at n=64
    assert np.max(np.abs(cf.grad[..., 0, 0] - theta_prime)) < 1e-9
    assert cf.effective[0, 0] == pytest.approx(1.0 / i0(1.0), rel=1e-12)
    assert keff == pytest.approx(1.0 / i0(1.0), rel=1e-12)


def test_2d_separable_decouples_into_1d_problems():
    n = 32
    y = np.arange(n) / n
    k1 = np.exp(-0.8 * np.cos(2 * np.pi * y))
    k2 = np.exp(-0.5 * np.sin(2 * np.pi * y))
    vals = np.zeros((n, n, 2, 2))
    vals[..., 0, 0] = k1[:, None]
    vals[..., 1, 1] = k2[None, :]
    cf = solve_cell(CoefficientField(1, vals, 2), TorusGrid(2, n))
    t1, h1 = harmonic_mean_corrector_1d(k1)
    t2, h2 = harmonic_mean_corrector_1d(k2)
    assert np.max(np.abs(cf.grad[..., 0, 0] - t1[:, None])) < 1e-9
    assert np.max(np.abs(cf.grad[..., 1, 1] - t2[None, :])) < 1e-9
    assert np.max(np.abs(cf.grad[..., 0, 1])) < 1e-9
    # each axis sees the harmonic mean of its own 1D coefficient
    assert cf.effective[0, 0] == pytest.approx(h1, rel=1e-10)
    assert cf.effective[1, 1] == pytest.approx(h2, rel=1e-10)


def test_corrector_mean_zero_and_unit_mean_gradient():
    n = 32
    g = TorusGrid(2, n)
    Y = g.nodes()
    w = np.exp(-np.cos(2 * np.pi * Y[..., 0]) * np.cos(2 * np.pi * Y[..., 1]))
    cf = solve_cell(CoefficientField(1, w, 2, isotropic=True), g)
    assert np.max(np.abs(cf.theta.mean(axis=(0, 1)))) < 1e-12
    ident = np.eye(2) + cf.grad.mean(axis=(0, 1))
    assert np.max(np.abs(ident - np.eye(2))) < 1e-10
    assert cf.residual < 1e-10


def test_energy_form_equals_flux_form():
    g = TorusGrid(2, 32)
    Y = g.nodes()
    w = np.exp(-np.cos(2 * np.pi * Y[..., 0]) - 0.5 * np.sin(2 * np.pi * (Y[..., 0] + Y[..., 1])))
    cf = solve_cell(CoefficientField(1, w, 2, isotropic=True), g)
    assert np.max(np.abs(cf.effective - cf.flux)) < 1e-9
    assert np.max(np.abs(cf.effective - cf.effective.T)) < 1e-12


def test_spectral_convergence_under_refinement():
    errs = []
    for n in (8, 16, 32):
        cf = solve_cell(CoefficientField(1, _cosine_weight(n), 1, isotropic=True), TorusGrid(1, n))
        errs.append(abs(cf.effective[0, 0] * i0(1.0) - 1.0))
    assert errs[1] < errs[0] * 1e-3 and errs[2] < 1e-13


def test_fd_scheme_second_order():
    # a smooth shifted-cosine coefficient; FD error vs the spectral value at n -> 2n drops by about 4
    sp = solve_cell(CoefficientField(1, _cosine_weight(256, 2.0), 1, isotropic=True), TorusGrid(1, 256))
    ref = sp.effective[0, 0]
    errs = []
    for n in (32, 64, 128):
        cf = solve_cell(CoefficientField(1, _cosine_weight(n, 2.0), 1, isotropic=True), TorusGrid(1, n),
                        scheme="fd")
        errs.append(abs(cf.effective[0, 0] - ref))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.0 < r < 5.0 for r in ratios), ratios


def test_non_positive_definite_rejected():
    g = TorusGrid(1, 8)
    vals = np.ones(8)
    vals[3] = -0.1
    with pytest.raises(EllipticityError):
        solve_cell(CoefficientField(1, vals, 1, isotropic=True), g)


def test_iteration_cap_raises_with_residual():
    g = TorusGrid(2, 32)
    Y = g.nodes()
    w = np.exp(-4 * np.cos(2 * np.pi * Y[..., 0]) * np.cos(2 * np.pi * Y[..., 1]))
    with pytest.raises(ConvergenceError) as info:
        solve_cell(CoefficientField(1, w, 2, isotropic=True), g, max_iter=2)
    assert info.value.residual > 0


def test_grid_mismatch():
    with pytest.raises(InputError):
        solve_cell(CoefficientField(1, np.ones(8), 1, isotropic=True), TorusGrid(1, 16))


def test_finest_level_is_boltzmann_weight():
    p = cat(n_scales=2, v1="nonseparable", coupling={"kind": "lorentzian"})
    x0 = np.array([[0.7]])
    H = solve_hierarchy(p, 1.0, x0, 16)
    K = H.levels[2].scaled()
    ys = np.arange(16) / 16
    V = p(x0.reshape(1, 1, 1, 1), (ys.reshape(1, 16, 1, 1), ys.reshape(1, 1, 16, 1)))
    assert np.allclose(K[..., 0, 0], np.exp(-V), rtol=1e-13, atol=0)


def test_zero_fluctuation_levels():
    p = cat(n_scales=2, v1="zero")
    H = solve_hierarchy(p, 1.0, np.array([[1.5]]), 8)
    for j in (0, 1, 2):
        assert np.allclose(H.levels[j].scaled(), np.exp(-1.125) * np.eye(1), rtol=1e-13)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_1d_levels_equal_inverse_exp_integral(N):
    p = cat(n_scales=N, v1="multiscale_cosine", alpha=[1.0, 0.6, 0.4][:N], coupling={"kind": "lorentzian"})
    n = [32, 32, 16][:N]
    x0 = np.array([[0.4]])
    H = solve_hierarchy(p, 1.0, x0, n)
    ys = [np.arange(k) / k for k in n]
    mesh = np.meshgrid(*ys, indexing="ij")
    V = p(x0.reshape((1,) * N + (1,)), tuple(m[..., None] for m in mesh))
    for level in range(N):
        expected = 1.0 / np.mean(np.exp(V), axis=tuple(range(level, N)))
        got = H.levels[level].scaled()[0, ..., 0, 0]
        assert np.allclose(got, expected, rtol=1e-9)


def test_nonseparable_two_scale_closed_form():
    p = cat(n_scales=2, v1="nonseparable", beta=0.5, coupling={"kind": "lorentzian"})
    x = np.linspace(-2, 2, 5)[:, None]
    H = solve_hierarchy(p, 1.0, x, 32)
    cf = inverse_partition_product(p, 1.0, x, 32)
    assert np.allclose(H.effective_tensor()[:, 0, 0], cf.M, rtol=1e-9)


def test_level_tensor_product_formula_matches_energy_form():
    p = make_potential({"dim": 2, "n_scales": 2, "V1": {"name": "nonseparable",
                        "params": {"coupling": {"kind": "lorentzian"}}}})
    x0 = np.array([[0.3, -0.2]])
    H = solve_hierarchy(p, 1.0, x0, 8)
    for level in (0, 1):
        K = level_tensor(p, 1.0, level, H.correctors, x0, 8)
        assert np.allclose(K.scaled(), H.levels[level].scaled(), rtol=1e-8, atol=1e-12)
    with pytest.raises(DependencyError):
        level_tensor(p, 1.0, 0, {2: H.correctors[2]}, x0, 8)


def test_level_tensors_symmetric_positive_definite():
    p = make_potential({"dim": 2, "n_scales": 1, "V1": {"name": "egg_crate",
                        "params": {"coupling": {"kind": "lorentzian"}}}})
    H = solve_hierarchy(p, 1.0, np.array([[0.1, 0.4], [1.0, -1.0]]), 32)
    K0 = H.levels[0].values
    assert np.max(np.abs(K0 - np.swapaxes(K0, -1, -2))) < 1e-12
    assert np.all(np.linalg.eigvalsh(K0) > 0)


def test_single_scale_is_classical_cell_problem():
    p = cat(alpha=1.0)
    H = solve_hierarchy(p, 1.0, np.array([[0.0]]), 64)
    assert H.effective_tensor()[0, 0, 0] == pytest.approx(1 / i0(1.0) ** 2, rel=1e-12)


def test_corrector_dump(tmp_path):
    p = cat(n_scales=2, v1="nonseparable")
    H = solve_hierarchy(p, 1.0, np.array([[0.0]]), 8)
    path = tmp_path / "c.csv"
    dump_correctors_csv(path, H, 2)
    data = np.loadtxt(path, delimiter=",")
    assert data.shape == (64, 2 + 1 + 1)
    header = path.read_text().splitlines()[1]
    assert "theta_0" in header and "y2_0" in header
