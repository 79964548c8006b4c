"""Equilibrium measures of the full, coarse-grained and unperturbed dynamics.

Everything here is deterministic quadrature on uniform grids over a
truncation box (1D or 2D):

* ``DensityTable`` stores log-densities and their log-normalizer;
* weak-convergence gaps, total variation and relative entropy between tables;
* ``K_of_s``, the limiting relative entropy of the sine-perturbed Gaussian;
* 1D spectral gaps of reversible generators (optionally with a mobility);
* the Muckenhoupt quantities B+(r), B-(r) for x^2 (1 + a cos(k x / eps)).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import i0e, i1e, logsumexp

from .effective import log_partition
from .errors import InputError, NScaleError, ResolutionError
from .potential import MultiscalePotential, default_box

MIN_NODES_PER_PERIOD = 8
DEFAULT_NODES_PER_PERIOD = 32


def _trapezoid_weights(axis):
    h = axis[1] - axis[0]
    w = np.full(len(axis), h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass
class DensityTable:
    """exp(log_values - log_norm) on a tensor grid; ``kind`` names the measure."""

    axes: list
    log_values: np.ndarray
    sigma: float
    kind: str = "density"
    log_norm: float = field(default=np.nan)

    def __post_init__(self):
        self.axes = [np.asarray(a, dtype=float) for a in self.axes]
        if len(self.axes) not in (1, 2):
            raise InputError("density tables are one- or two-dimensional")
        lv = np.asarray(self.log_values, dtype=float)
        if lv.shape != tuple(len(a) for a in self.axes):
            raise InputError("log values do not match the grid")
        if np.any(np.isnan(lv)):
            raise InputError("density contains NaN")
        self.log_values = lv
        if np.isnan(self.log_norm):
            self.log_norm = float(logsumexp(lv, b=self.weights))

    @property
    def dim(self):
        return len(self.axes)

    @property
    def weights(self):
        w = _trapezoid_weights(self.axes[0])
        for a in self.axes[1:]:
            w = np.multiply.outer(w, _trapezoid_weights(a))
        return w

    @property
    def log_density(self):
        return self.log_values - self.log_norm

    @property
    def values(self):
        return np.exp(self.log_density)

    def nodes(self):
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    def integral(self):
        return float(np.sum(self.values * self.weights))

    def expect(self, f: Callable):
        X = self.nodes()
        fx = np.asarray(f(X[..., 0] if self.dim == 1 else X), dtype=float)
        return float(np.sum(fx * self.values * self.weights))

    def same_grid(self, other):
        return (self.dim == other.dim
                and all(len(a) == len(b) and np.allclose(a, b, rtol=0, atol=1e-12)
                        for a, b in zip(self.axes, other.axes)))


def _uniform_axes(box, counts):
    return [np.linspace(lo, hi, int(n)) for (lo, hi), n in zip(box, counts)]


def resolution_nodes(box, epsilon, n_scales, nodes_per_period=DEFAULT_NODES_PER_PERIOD):
    """Uniform node count per dimension giving ``nodes_per_period`` per eps^N."""
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    if nodes_per_period < MIN_NODES_PER_PERIOD:
        raise ResolutionError(f"{nodes_per_period} nodes per finest period is below the minimum "
                              f"of {MIN_NODES_PER_PERIOD}")
    period = epsilon**n_scales
    return [int(np.ceil((hi - lo) / period * nodes_per_period)) + 1 for lo, hi in box]


def _check_resolution(axes, epsilon, n_scales):
    period = epsilon**n_scales
    for a in axes:
        h = a[1] - a[0]
        if period / h < MIN_NODES_PER_PERIOD:
            raise ResolutionError(f"grid spacing {h:.3g} gives {period / h:.1f} nodes per finest period "
                                  f"(minimum {MIN_NODES_PER_PERIOD})")


def _box(p, sigma, box):
    if box is None:
        return default_box(p, sigma)
    return np.asarray(box, dtype=float).reshape(p.dim, 2)


def gibbs_density(p: MultiscalePotential, sigma: float, epsilon: float, box=None,
                  nodes_per_period: int = DEFAULT_NODES_PER_PERIOD, axes=None,
                  max_nodes: int = 2**24) -> DensityTable:
    """pi^eps proportional to exp(-V^eps/sigma)."""
    if p.dim > 2:
        raise InputError("equilibrium quadrature supports d <= 2")
    box = _box(p, sigma, box)
    if axes is None:
        axes = _uniform_axes(box, resolution_nodes(box, epsilon, p.n_scales, nodes_per_period))
    _check_resolution(axes, epsilon, p.n_scales)
    if np.prod([len(a) for a in axes]) > max_nodes:
        raise InputError("equilibrium grid exceeds the node budget")
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    v = p.epsilon_view(epsilon).evaluate(X)
    return DensityTable(axes, -v / sigma, sigma, kind=f"pi_eps({epsilon:g})")


def coarse_density(p: MultiscalePotential, sigma: float, box=None, n=None, axes=None,
                   fast_n: Optional[int] = None) -> DensityTable:
    """pi^0 proportional to Z(x)."""
    box = _box(p, sigma, box)
    if axes is None:
        counts = [n or 2049] * p.dim
        axes = _uniform_axes(box, counts)
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    flat = X.reshape(-1, p.dim)
    if p.separable:
        lz1 = log_partition(p, sigma, flat[:1], fast_n)[0] + p.v0(flat[:1])[0] / sigma
        lz = lz1 - p.v0(flat) / sigma
    else:
        lz = log_partition(p, sigma, flat, fast_n)
    return DensityTable(axes, lz.reshape(X.shape[:-1]), sigma, kind="pi0")


def reference_density(p: MultiscalePotential, sigma: float, box=None, n=None, axes=None) -> DensityTable:
    """pi_ref proportional to exp(-V0/sigma)."""
    box = _box(p, sigma, box)
    if axes is None:
        axes = _uniform_axes(box, [n or 2049] * p.dim)
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return DensityTable(axes, -p.v0(X) / sigma, sigma, kind="pi_ref")


def bump(x, center=0.0, radius=1.0):
    """Smooth compactly supported test function exp(1 - 1/(1 - r^2))."""
    r2 = ((np.asarray(x, dtype=float) - center) / radius) ** 2
    out = np.zeros_like(r2)
    inside = r2 < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


DEFAULT_OBSERVABLES = {
    "x2": lambda x: x**2,
    "x4": lambda x: x**4,
    "bump": bump,
}


@dataclass
class GapTable:
    rows: list

    def gaps(self, name):
        return [r["gap"] for r in self.rows if r["f"] == name]

    def epsilons(self):
        return sorted({r["epsilon"] for r in self.rows}, reverse=True)

    def decreasing(self, name):
        g = self.gaps(name)
        return all(b < a for a, b in zip(g, g[1:]))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("epsilon,observable,value_eps,value_0,gap\n")
            for r in self.rows:
                fh.write(f"{r['epsilon']!r},{r['f']},{r['value_eps']!r},{r['value_0']!r},{r['gap']!r}\n")


def weak_convergence_test(p: MultiscalePotential, sigma: float, observables=None, epsilons=(0.2, 0.1, 0.05),
                          box=None, nodes_per_period: int = DEFAULT_NODES_PER_PERIOD,
                          fast_n: Optional[int] = None, coarse_n: Optional[int] = None) -> GapTable:
    """|int f d pi^eps - int f d pi^0| for each (f, eps) on eps-resolved grids."""
    eps = [float(e) for e in epsilons]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise InputError("epsilon list must be strictly decreasing")
    obs = observables or DEFAULT_OBSERVABLES
    box = _box(p, sigma, box)
    # pi^0 is smooth: its own moderately fine grid gives spectrally accurate moments
    p0 = coarse_density(p, sigma, box, n=coarse_n, fast_n=fast_n)
    ref = {name: p0.expect(f) for name, f in obs.items()}
    rows = []
    for e in eps:
        pe = gibbs_density(p, sigma, e, box, nodes_per_period)
        for name, f in obs.items():
            a, b = pe.expect(f), ref[name]
            rows.append({"epsilon": e, "f": name, "value_eps": a, "value_0": b, "gap": abs(a - b)})
    return GapTable(rows)


def tv_distance(a: DensityTable, b: DensityTable) -> float:
    if not a.same_grid(b):
        raise InputError("densities live on different grids")
    return float(np.sum(np.abs(a.values - b.values) * a.weights))


def kl_divergence(a: DensityTable, b: DensityTable) -> float:
    """Relative entropy of a with respect to b."""
    if not a.same_grid(b):
        raise InputError("densities live on different grids")
    la, lb = a.log_density, b.log_density
    support = np.isfinite(la)
    if np.any(support & ~np.isfinite(lb)):
        raise InputError("first density is not absolutely continuous with respect to the second")
    pa = np.where(support, np.exp(np.where(support, la, 0.0)), 0.0)
    terms = np.where(support, pa * (np.where(support, la, 0.0) - np.where(support, lb, 0.0)), 0.0)
    return float(np.sum(terms * a.weights))


def K_of_s(s):
    """-log I0(s) + s I1(s)/I0(s) using exponentially scaled Bessel functions."""
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise InputError("K(s) needs s > 0")
    a0 = i0e(s)
    out = -(np.log(a0) + s) + s * i1e(s) / a0
    return out if out.ndim else float(out)


def tv_lower_bound(s):
    """(1/6) |1 - exp(-s/2) / I0(s)|, the small-eps TV lower bound at s = alpha/sigma."""
    s = np.asarray(s, dtype=float)
    out = np.abs(1.0 - np.exp(-s / 2 - s) / i0e(s)) / 6.0
    return out if out.ndim else float(out)


# -- spectral gaps ----------------------------------------------------------


def spectral_gap_1d(density: DensityTable, sigma: Optional[float] = None, mobility=None,
                    return_all: bool = False):
    """Smallest nonzero eigenvalue of -L, L u = sigma/rho (rho m u')'.

    Finite-volume discretization with Neumann ends: face weights use the
    geometric mean of neighbouring densities, so the symmetrized operator is
    tridiagonal with off-diagonals -sigma m_face / h^2.  ``mobility`` is an
    array of nodal values or a callable of x.
    """
    if density.dim != 1:
        raise InputError("spectral gaps are computed in one dimension")
    sigma = density.sigma if sigma is None else sigma
    x = density.axes[0]
    l = density.log_values
    if not np.all(np.isfinite(l)):
        raise InputError("density must be strictly positive on the grid")
    h = x[1] - x[0]
    if mobility is None:
        m = np.ones(len(x))
    elif callable(mobility):
        m = np.asarray(mobility(x), dtype=float).reshape(len(x))
    else:
        m = np.asarray(mobility, dtype=float).reshape(len(x))
    mf = 0.5 * (m[1:] + m[:-1])
    c = sigma / h**2
    dl = np.diff(l)
    diag = np.zeros(len(x))
    diag[:-1] += c * mf * np.exp(0.5 * dl)
    diag[1:] += c * mf * np.exp(-0.5 * dl)
    off = -c * mf
    try:
        w = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, 1))
    except np.linalg.LinAlgError as exc:
        raise NScaleError(f"tridiagonal eigen-solve failed: {exc}") from exc
    return (float(w[1]), w) if return_all else float(w[1])


# -- Muckenhoupt --------------------------------------------------------------


@dataclass(frozen=True)
class OscillatingWell:
    """V(x) = x^2 (1 + alpha cos(k x / eps)); unbounded perturbation example."""

    alpha: float
    epsilon: float
    k: float = 2 * np.pi

    def __post_init__(self):
        if not abs(self.alpha) < 1:
            raise InputError("|alpha| < 1 keeps the well confining")
        if not self.epsilon > 0:
            raise InputError("epsilon must be positive")

    @property
    def period(self):
        return 2 * np.pi * self.epsilon / self.k

    def __call__(self, x):
        return x**2 * (1.0 + self.alpha * np.cos(self.k * x / self.epsilon))


def _log_trapezoid(logf, x):
    if len(x) < 2:
        return -np.inf
    return float(logsumexp(logf, b=_trapezoid_weights(x)))


def _b_plus(V, sigma, r, nodes_per_period, cut, sign=1.0):
    a = abs(V.alpha)
    R = np.sqrt(r**2 + cut * sigma / (1 - a))
    h = V.period / nodes_per_period
    # keep the exp(+V/sigma) factor resolved where it varies fastest
    h = min(h, 0.05 * sigma / (2 * (1 + a) * max(R, 1.0)))
    xt = sign * np.linspace(r, R, max(3, int(np.ceil((R - r) / h)) + 1))
    xi = sign * np.linspace(0.0, r, max(3, int(np.ceil(r / h)) + 1))
    log_tail = _log_trapezoid(-V(xt) / sigma, np.abs(xt))
    log_inner = _log_trapezoid(V(xi) / sigma, np.abs(xi))
    return 0.5 * (log_tail + log_inner)


@dataclass
class MuckenhouptProfile:
    r: np.ndarray
    log_B_plus: np.ndarray
    log_B_minus: np.ndarray

    @property
    def B_plus(self):
        return np.exp(self.log_B_plus)

    @property
    def B_minus(self):
        return np.exp(self.log_B_minus)

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.r, self.B_plus, self.B_minus, self.log_B_plus, self.log_B_minus]),
                   delimiter=",", header="r,B_plus,B_minus,log_B_plus,log_B_minus", fmt="%.17g", comments="")


def muckenhoupt_profile(alpha: float, sigma: float, epsilon: float, radii, k: float = 2 * np.pi,
                        nodes_per_period: int = 64, cut: float = 40.0) -> MuckenhouptProfile:
    """B+(r) and B-(r) for the oscillating well, evaluated in the log domain.

    The normalizing constant cancels between the two factors.  Tail integrals
    stop where the integrand bound has dropped by exp(-cut).
    """
    if not sigma > 0:
        raise InputError("sigma must be positive")
    V = OscillatingWell(alpha, epsilon, k)
    r = np.asarray(radii, dtype=float)
    if np.any(r <= 0):
        raise InputError("radii must be positive")
    bp = np.array([_b_plus(V, sigma, ri, nodes_per_period, cut, 1.0) for ri in r])
    bm = np.array([_b_plus(V, sigma, ri, nodes_per_period, cut, -1.0) for ri in r])
    return MuckenhouptProfile(r, bp, bm)


def muckenhoupt_radii(epsilon: float, n, k: float = 1.0):
    """r_n = (eps/k) (2 pi n + pi/2); with k = 1 these are the radii used in the lower bound."""
    n = np.asarray(n, dtype=float)
    return (epsilon / k) * (2 * np.pi * n + np.pi / 2)


def muckenhoupt_log_lower_bound(alpha: float, sigma: float, epsilon: float, n, k: float = 2 * np.pi):
    """log of the two-interval lower bound on B+ at r_n = (eps/k)(2 pi n + pi/2).

    On [e(2 pi n + 2 pi/3), e(2 pi n + 4 pi/3)] the cosine is <= -1/2 and on
    [e(2 pi n - pi/3), e(2 pi n + pi/3)] it is >= 1/2 (e = eps/k), which gives
    B+ >= L exp((c^2 (1 + a/2) - b^2 (1 - a/2)) / (2 sigma)) with L = 2 pi e/3.
    """
    e = epsilon / k
    n = np.asarray(n, dtype=float)
    b = e * np.pi * (2 * n + 4.0 / 3.0)
    c = e * np.pi * (2 * n - 1.0 / 3.0)
    L = 2 * np.pi * e / 3
    return np.log(L) + (c**2 * (1 + alpha / 2) - b**2 * (1 - alpha / 2)) / (2 * sigma)
