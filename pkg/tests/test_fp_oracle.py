"""The deterministic oracle behind the frozen dynamic weak-error targets."""
import numpy as np
import pytest

import fp_oracle

# Richardson extrapolation of nodes_per_period 96 and 192 (4000 steps), x0 = 6
FROZEN = {0.5: (-0.10471, -0.57238), 0.25: (-0.02852, -0.15591), 0.125: (-0.00729, -0.03986)}


def test_generator_has_gibbs_null_vector():
    x, diag, up, down = fp_oracle.generator(0.5, nodes_per_period=16)
    pi = np.exp(-(x**2 / 2 + np.cos(4 * np.pi * x)))
    Ap = diag * pi
    Ap[1:] += up * pi[:-1]
    Ap[:-1] += down * pi[1:]
    assert np.max(np.abs(Ap)) < 1e-12 * np.max(np.abs(diag * pi))


def test_mass_conservation():
    x, diag, up, down = fp_oracle.generator(0.5, nodes_per_period=16)
    col = diag.copy()
    col[:-1] += up
    col[1:] += down
    assert np.max(np.abs(col)) < 1e-9 * np.max(np.abs(diag))


def test_second_order_in_space_and_frozen_values():
    for eps in (0.5, 0.125):
        g1 = fp_oracle.weak_gaps(eps, 6.0, nodes_per_period=48, n_steps=1000)
        g2 = fp_oracle.weak_gaps(eps, 6.0, nodes_per_period=96, n_steps=1000)
        extrap = [b + (b - a) / 3 for a, b in zip(g1, g2)]
        assert extrap == pytest.approx(FROZEN[eps], abs=1.5e-3)


def test_gaps_shrink_with_epsilon():
    gx = [FROZEN[e][0] for e in (0.5, 0.25, 0.125)]
    assert all(abs(b) < abs(a) for a, b in zip(gx, gx[1:]))
