"""Periodic cell problems and the recursive level-tensor hierarchy.

Indexing follows the homogenization recursion directly.  For a potential with
N fast scales the level tensors are

    K_N(x0, y1..yN)  = exp(-V/sigma) I
    K_{k-1}(x0, y1..y_{k-1}) = mean over y_k of (I + G_k)^T K_k (I + G_k)

where the columns of ``I + G_k`` are ``e_j + grad_{y_k} theta_k^j`` and
``theta_k`` solves ``div_{y_k}(K_k (grad theta_k + I)) = 0`` with zero mean.
``K_0(x0)`` equals ``Z(x0) * M(x0)``.

Two discretizations share one batched preconditioned-CG driver:

* ``"spectral"``: Fourier-Galerkin (pseudo-spectral, Nyquist mode of the
  derivative removed so the operator stays real and symmetric);
* ``"fd"``: second order finite differences written as the average of the
  forward- and backward-difference energies, which keeps the operator
  symmetric with only constants in its kernel.

All Boltzmann weights are carried with a per-slow-point log shift so nothing
overflows at small temperature: a stored tensor ``T`` represents
``exp(log_scale) * T``.
"""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft as sfft

from .errors import ConvergenceError, DependencyError, EllipticityError, InputError
from .potential import MultiscalePotential, fast_grid

# threads used inside each batched FFT; results do not depend on this value
_FFT_WORKERS = max(1, min(8, os.cpu_count() or 1))


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid with ``n`` points per dimension on the unit torus."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim < 1 or self.n < 2:
            raise InputError("torus grid needs dim >= 1 and n >= 2")

    @property
    def spacing(self):
        return 1.0 / self.n

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def size(self):
        return self.n**self.dim

    def nodes(self):
        axes = [np.arange(self.n) / self.n] * self.dim
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def weights(self):
        return np.full(self.shape, 1.0 / self.size)

    def wrap(self, index):
        return np.mod(index, self.n)


@dataclass
class CoefficientField:
    """Level-k tensor tabulated on a block of nodes.

    ``values`` has shape ``batch + grid + (d, d)``, or ``batch + grid`` when
    ``isotropic`` (then the tensor is ``values * I``).  ``log_scale`` has the
    leading slow-batch shape and multiplies every entry by ``exp(log_scale)``.
    """

    level: int
    values: np.ndarray
    dim: int
    isotropic: bool = False
    log_scale: Optional[np.ndarray] = None
    slow: Optional[np.ndarray] = None

    def tensor(self):
        if self.isotropic:
            return self.values[..., None, None] * np.eye(self.dim)
        return self.values

    def scaled(self):
        """Tensor including ``exp(log_scale)``."""
        t = self.tensor()
        if self.log_scale is None:
            return t
        ls = np.asarray(self.log_scale)
        return t * np.exp(ls).reshape(ls.shape + (1,) * (t.ndim - ls.ndim))

    def min_eigenvalue(self):
        if self.isotropic:
            return self.values
        return np.linalg.eigvalsh(0.5 * (self.values + np.swapaxes(self.values, -1, -2)))[..., 0]

    def asymmetry(self):
        if self.isotropic:
            return 0.0
        v = self.values
        scale = max(float(np.max(np.abs(v))), np.finfo(float).tiny)
        return float(np.max(np.abs(v - np.swapaxes(v, -1, -2)))) / scale


@dataclass
class CorrectorField:
    """Mean-zero periodic corrector of one level.

    ``theta`` has shape ``batch + grid + (d,)`` (component j answers the
    right-hand side ``e_j``) and ``grad[..., a, j] = d theta_j / d y_a``.
    """

    level: int
    theta: np.ndarray
    grad: np.ndarray
    residual: float
    iterations: int
    effective: np.ndarray  # energy form, batch + (d, d)
    flux: np.ndarray  # mean K (I + G), batch + (d, d)


# -- discrete gradient schemes ---------------------------------------------


class _Scheme:
    """Per-axis Fourier symbols of the discrete derivative(s)."""

    def __init__(self, grid: TorusGrid, kind: str = "spectral"):
        self.grid = grid
        self.kind = kind
        d, n = grid.dim, grid.n
        self.axes = tuple(range(-d, 0))
        self.rshape = (n,) * (d - 1) + (n // 2 + 1,)
        ks = []
        for a in range(d):
            k = np.fft.rfftfreq(n, 1.0 / n) if a == d - 1 else np.fft.fftfreq(n, 1.0 / n)
            shape = [1] * d
            shape[a] = len(k)
            ks.append(k.reshape(shape))
        if kind == "spectral":
            syms = []
            for k in ks:
                s = 2j * np.pi * k
                s = np.where(np.abs(k) == n / 2, 0.0, s)
                syms.append([s])
            self.variants = [tuple([0] * d)]
        elif kind == "fd":
            syms = []
            for k in ks:
                theta = 2.0 * np.pi * k / n
                fwd = (np.exp(1j * theta) - 1.0) * n
                bwd = (1.0 - np.exp(-1j * theta)) * n
                syms.append([fwd, bwd])
            self.variants = list(itertools.product((0, 1), repeat=d))
        else:
            raise InputError(f"unknown discretization {kind!r}")
        self.syms = syms
        self.weight = 1.0 / len(self.variants)
        total = np.zeros(self.rshape)
        for v in self.variants:
            for a in range(d):
                total = total + self.weight * np.abs(syms[a][v[a]]) ** 2
        self.lap_symbol = total

    def fft(self, u):
        return sfft.rfftn(u, axes=self.axes, workers=_FFT_WORKERS)

    def ifft(self, uh):
        return sfft.irfftn(uh, s=self.grid.shape, axes=self.axes, workers=_FFT_WORKERS)

    def derivatives(self, uh):
        """d[a][s] = derivative along axis a with symbol choice s."""
        d = self.grid.dim
        out = []
        for a in range(d):
            used = sorted({v[a] for v in self.variants})
            row = {}
            for s in used:
                row[s] = self.ifft(self.syms[a][s] * uh)
            out.append(row)
        return out

    def gradients(self, u):
        """List over variants of per-axis gradient arrays."""
        der = self.derivatives(self.fft(u))
        return [[der[a][v[a]] for a in range(self.grid.dim)] for v in self.variants]

    def adjoint_sum(self, fluxes_per_variant):
        """sum_v w_v sum_c D_{v,c}^T q_{v,c}, returned in real space."""
        acc = None
        for v, q in zip(self.variants, fluxes_per_variant):
            for c, qc in enumerate(q):
                term = np.conj(self.syms[c][v[c]]) * self.fft(qc)
                acc = term if acc is None else acc + term
        return self.ifft(self.weight * acc)


def _apply_K(K, g, d):
    """Flux q_c = sum_a K_ca g_a.  K is (iso array) or nested list K[c][a]."""
    if not isinstance(K, list):
        return [K * ga for ga in g]
    out = []
    for c in range(d):
        acc = K[c][0] * g[0]
        for a in range(1, d):
            acc = acc + K[c][a] * g[a]
        out.append(acc)
    return out


def _batched_pcg(apply_A, b, precond, ref, tol, max_iter, sum_axes):
    x = np.zeros_like(b)
    r = b.copy()

    def dot(u, v):
        return np.sum(u * v, axis=sum_axes, keepdims=True)

    def norm(u):
        return np.sqrt(dot(u, u))

    rel = norm(r) / ref
    active = rel > tol
    if not np.any(active):
        return x, float(np.max(rel, initial=0.0)), 0
    z = precond(r)
    p = z.copy()
    rz = dot(r, z)
    it = 0
    for it in range(1, max_iter + 1):
        Ap = apply_A(p)
        pAp = dot(p, Ap)
        safe = active & (pAp > 0)
        alpha = np.where(safe, rz / np.where(safe, pAp, 1.0), 0.0)
        x += alpha * p
        r -= alpha * Ap
        rel = norm(r) / ref
        active = active & (rel > tol)
        if not np.any(active):
            break
        z = precond(r)
        rz_new = dot(r, z)
        beta = np.where(active, rz_new / np.where(rz != 0, rz, 1.0), 0.0)
        p = z + beta * p
        rz = np.where(active, rz_new, rz)
    # true residual, not the recursively updated one
    true_rel = norm(b - apply_A(x)) / ref
    return x, float(np.max(true_rel)), it


def solve_cell(K: CoefficientField, grid: TorusGrid, tol: float = 1e-10,
               scheme: str = "spectral", max_iter: int = 5000,
               check_ellipticity: bool = True) -> CorrectorField:
    """Solve div(K (grad theta + I)) = 0 on the torus for every batch entry.

    The last ``grid.dim`` grid axes of ``K.values`` are the torus axes; any
    leading axes are independent problems.
    """
    d = grid.dim
    if K.dim != d:
        raise InputError(f"coefficient dimension {K.dim} != grid dimension {d}")
    vals = np.asarray(K.values, dtype=float)
    ntail = 0 if K.isotropic else 2
    grid_shape = vals.shape[vals.ndim - ntail - d: vals.ndim - ntail]
    if grid_shape != grid.shape:
        raise InputError(f"coefficient grid {grid_shape} does not match torus grid {grid.shape}")
    batch = vals.shape[: vals.ndim - ntail - d]
    B = int(np.prod(batch)) if batch else 1

    if check_ellipticity:
        mins = K.min_eigenvalue()
        if not np.all(mins > 0) or not np.all(np.isfinite(vals)):
            raise EllipticityError(f"level-{K.level} coefficient is not positive definite "
                                   f"(min eigenvalue {float(np.min(mins)):.3e})")

    sch = _Scheme(grid, scheme)
    gaxes = tuple(range(2, 2 + d))
    if K.isotropic:
        w = vals.reshape((B, 1) + grid.shape)
        Kop = w
        kbar = np.mean(w, axis=gaxes, keepdims=True)
        cols = [[w if c == j else None for c in range(d)] for j in range(d)]
    else:
        t = vals.reshape((B,) + grid.shape + (d, d))
        Kop = [[t[..., c, a].reshape((B, 1) + grid.shape) for a in range(d)] for c in range(d)]
        kbar = np.mean(sum(Kop[c][c] for c in range(d)) / d, axis=gaxes, keepdims=True)
        cols = [[Kop[c][j] for c in range(d)] for j in range(d)]

    # right-hand sides: b_j = -sum_v w_v D_v^T (K e_j)
    zero = np.zeros((B, 1) + grid.shape)
    b = np.concatenate([
        -sch.adjoint_sum([[col if col is not None else zero for col in cols[j]]] * len(sch.variants))
        for j in range(d)
    ], axis=1)

    def apply_A(u):
        grads = sch.gradients(u)
        return sch.adjoint_sum([_apply_K(Kop, g, d) for g in grads])

    inv = np.where(sch.lap_symbol > 1e-12, 1.0 / np.where(sch.lap_symbol > 1e-12, sch.lap_symbol, 1.0), 0.0)

    def precond(r):
        return sch.ifft(sch.fft(r) * inv) / kbar

    ref = np.maximum(np.sqrt(np.sum(b * b, axis=gaxes, keepdims=True)),
                     1e-3 * 2 * np.pi * kbar * np.sqrt(grid.size))
    chi, res, its = _batched_pcg(apply_A, b, precond, ref, tol, max_iter, gaxes)
    if res > tol * 10 and its >= max_iter:
        raise ConvergenceError(f"level-{K.level} cell solve did not converge in {max_iter} iterations "
                               f"(relative residual {res:.3e})", residual=res, level=K.level)
    chi -= np.mean(chi, axis=gaxes, keepdims=True)

    grads = sch.gradients(chi)  # variants x axis a x (B, R=j, grid)
    # averaged gradient, laid out as batch + grid + (a, j)
    gavg = sum(np.stack(g, axis=-1) for g in grads) * sch.weight  # (B, j, grid, a)
    G = np.moveaxis(gavg, 1, -1)  # (B, grid, a, j)

    Kt = K.tensor().reshape((B,) + grid.shape + (d, d))
    eye = np.eye(d)
    E = np.zeros((B, d, d))
    F = np.zeros((B, d, d))
    for g in grads:
        U = eye + np.moveaxis(np.stack(g, axis=-1), 1, -1)  # (B, grid, c, j)
        KU = Kt @ U
        E += sch.weight * np.mean(np.swapaxes(U, -1, -2) @ KU, axis=tuple(range(1, 1 + d)))
        F += sch.weight * np.mean(KU, axis=tuple(range(1, 1 + d)))
    E = 0.5 * (E + np.swapaxes(E, -1, -2))

    theta = np.moveaxis(chi, 1, -1).reshape(batch + grid.shape + (d,))
    return CorrectorField(level=K.level, theta=theta, grad=G.reshape(batch + grid.shape + (d, d)),
                          residual=res, iterations=its,
                          effective=E.reshape(batch + (d, d)), flux=F.reshape(batch + (d, d)))


# -- hierarchy ---------------------------------------------------------------


def _grids(grids, dim, N):
    if isinstance(grids, (int, np.integer)):
        grids = [int(grids)] * N
    out = []
    for g in grids:
        out.append(g if isinstance(g, TorusGrid) else TorusGrid(dim, int(g)))
    if len(out) != N:
        raise InputError(f"need one torus grid per fast scale ({N}), got {len(out)}")
    if any(g.dim != dim for g in out):
        raise InputError("torus grid dimension does not match the potential")
    return out


@dataclass
class Hierarchy:
    """Output of ``solve_hierarchy`` for a batch of slow points.

    ``levels[j]`` is the tensor K_j (j = 0..N); ``correctors[k]`` is theta_k
    (k = 1..N) when fields were kept.  ``v1`` is V1 on the product grid and
    ``shift`` its per-slow-point minimum.
    """

    potential: MultiscalePotential
    sigma: float
    x0: np.ndarray
    grids: list
    scheme: str
    levels: dict
    correctors: dict
    v1: Optional[np.ndarray]
    shift: np.ndarray
    residual: float
    iterations: dict = field(default_factory=dict)
    log_z1: Optional[np.ndarray] = None
    asymmetry: float = 0.0

    @property
    def log_partition(self):
        """log Z(x0) = -V0/sigma + log int exp(-V1/sigma)."""
        return self.log_z1 - self.potential.v0(self.x0) / self.sigma

    def effective_tensor(self):
        """M(x0) = K_0 / Z; the exponential scales cancel exactly."""
        z = np.exp(self.log_z1 + self.shift / self.sigma)
        return self.levels[0].values / z[:, None, None]

    @property
    def n_scales(self):
        return self.potential.n_scales

    @property
    def effective(self) -> CoefficientField:
        return self.levels[0]

    def pairs(self):
        """(K_k, theta_k) for k = N..1."""
        return [(self.levels[k], self.correctors.get(k)) for k in range(self.n_scales, 0, -1)]

    def log_hat_partition(self, level):
        """log of Zhat_level(x0, y1..y_{level-1}) = int exp(V/sigma) over slots level..N.

        Returned relative to the tensor log scale: the true value is
        ``exp(result + V0(x0)/sigma + shift/sigma)`` where shift = min V1.
        Shape: batch + grids of slots 1..level-1.
        """
        if self.v1 is None:
            raise DependencyError("V1 samples were not kept on this hierarchy")
        d, N = self.potential.dim, self.n_scales
        if not 1 <= level <= N:
            raise InputError("Zhat level must be in 1..N")
        B = self.v1.shape[0]
        vmax = np.max(self.v1.reshape(B, -1), axis=1)
        z = np.exp((self.v1 - vmax.reshape((B,) + (1,) * (self.v1.ndim - 1))) / self.sigma)
        axes = tuple(range(1 + d * (level - 1), 1 + d * N))
        logz = np.log(np.mean(z, axis=axes))
        return logz + ((vmax - self.shift) / self.sigma).reshape((B,) + (1,) * (logz.ndim - 1))


def _v1_on_grid(p, x0, grids):
    d, N = p.dim, p.n_scales
    ys = fast_grid(d, [g.n for g in grids])
    xb = x0.reshape((len(x0),) + (1,) * (d * N) + (d,))
    v = np.asarray(p.V1(xb, *ys), dtype=float)
    full = (len(x0),) + tuple(s for g in grids for s in g.shape)
    return np.broadcast_to(v, full).copy()


def _solve_chunk(p, sigma, x0, grids, tol, scheme, keep_fields, max_iter):
    d, N = p.dim, p.n_scales
    B = len(x0)
    v1 = _v1_on_grid(p, x0, grids)
    shift = np.min(v1.reshape(B, -1), axis=1)
    w = np.exp(-(v1 - shift.reshape((B,) + (1,) * (v1.ndim - 1))) / sigma)
    log_scale = -(p.v0(x0) + shift) / sigma
    levels = {N: CoefficientField(N, w, d, isotropic=True, log_scale=log_scale, slow=x0)}
    correctors = {}
    iterations = {}
    residual = 0.0
    asym = 0.0
    log_z1 = np.log(np.mean(w.reshape(B, -1), axis=1)) - shift / sigma
    K = levels[N]
    for k in range(N, 0, -1):
        try:
            cf = solve_cell(K, grids[k - 1], tol=tol, scheme=scheme, max_iter=max_iter)
        except ConvergenceError as exc:
            raise ConvergenceError(f"hierarchy level {k}: {exc}", residual=exc.residual, level=k) from exc
        except EllipticityError as exc:
            raise EllipticityError(f"hierarchy level {k}: {exc}") from exc
        residual = max(residual, cf.residual)
        iterations[k] = cf.iterations
        f = cf.flux
        asym = max(asym, float(np.max(np.abs(f - np.swapaxes(f, -1, -2)))) / float(np.max(np.abs(f))))
        if keep_fields:
            correctors[k] = cf
        K = CoefficientField(k - 1, cf.effective, d, isotropic=False, log_scale=log_scale, slow=x0)
        levels[k - 1] = K
    if not keep_fields:
        levels = {0: levels[0]}
    return levels, correctors, (v1 if keep_fields else None), shift, residual, iterations, log_z1, asym


def solve_hierarchy(p: MultiscalePotential, sigma: float, x0, grids, tol: float = 1e-10,
                    scheme: str = "spectral", keep_fields: bool = True, max_iter: int = 5000,
                    chunk_points: int = 2**21, workers: int = 1) -> Hierarchy:
    """Solve theta_N, K_{N-1}, ..., theta_1, K_0 at each slow point in ``x0``.

    ``x0`` is a single point (``(d,)``) or a batch ``(B, d)``; ``grids`` gives
    the torus resolution per fast slot (int, list of ints or TorusGrids).
    Slow points are processed in chunks of at most ``chunk_points`` product
    grid nodes, optionally on a thread pool.
    """
    if not sigma > 0:
        raise InputError("sigma must be positive")
    d, N = p.dim, p.n_scales
    grids = _grids(grids, d, N)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    if x0.shape[-1] != d:
        raise InputError(f"slow point dimension {x0.shape[-1]} != {d}")
    per = max(1, chunk_points // int(np.prod([g.size for g in grids])))
    chunks = [x0[i:i + per] for i in range(0, len(x0), per)]

    def run(c):
        return _solve_chunk(p, sigma, c, grids, tol, scheme, keep_fields, max_iter)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]

    def cat_field(fs):
        f0 = fs[0]
        return CoefficientField(f0.level, np.concatenate([f.values for f in fs]), d, f0.isotropic,
                                np.concatenate([f.log_scale for f in fs]), x0)

    levels = {j: cat_field([pt[0][j] for pt in parts]) for j in parts[0][0]}
    correctors = {}
    for k in parts[0][1]:
        cs = [pt[1][k] for pt in parts]
        correctors[k] = CorrectorField(
            k, np.concatenate([c.theta for c in cs]), np.concatenate([c.grad for c in cs]),
            max(c.residual for c in cs), max(c.iterations for c in cs),
            np.concatenate([c.effective for c in cs]), np.concatenate([c.flux for c in cs]))
    v1 = np.concatenate([pt[2] for pt in parts]) if keep_fields else None
    shift = np.concatenate([pt[3] for pt in parts])
    residual = max(pt[4] for pt in parts)
    iterations = {k: max(pt[5][k] for pt in parts) for k in parts[0][5]}
    log_z1 = np.concatenate([pt[6] for pt in parts])
    asym = max(pt[7] for pt in parts)
    return Hierarchy(p, sigma, x0, grids, scheme, levels, correctors, v1, shift, residual, iterations,
                     log_z1, asym)


def level_tensor(p: MultiscalePotential, sigma: float, level: int, correctors: dict, x0, grids
                 ) -> CoefficientField:
    """K_level from the nested product formula

        K_i = int (I + G_N)(I + G_{N-1}) ... (I + G_{i+1}) exp(-V/sigma) dy_{i+1..N}

    evaluated by tensor-product trapezoid quadrature.  ``correctors`` maps
    level k -> CorrectorField (computed at the same ``x0`` and ``grids``).
    The result is symmetrized; the flux form equals the hierarchy's energy
    form up to the cell-solver residual.
    """
    d, N = p.dim, p.n_scales
    if not 0 <= level <= N:
        raise InputError(f"level {level} outside 0..{N}")
    grids = _grids(grids, d, N)
    missing = [k for k in range(level + 1, N + 1) if k not in correctors]
    if missing:
        raise DependencyError(f"level {level} tensor needs correctors for levels {missing}")
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    B = len(x0)
    v1 = _v1_on_grid(p, x0, grids)
    shift = np.min(v1.reshape(B, -1), axis=1)
    w = np.exp(-(v1 - shift.reshape((B,) + (1,) * (v1.ndim - 1))) / sigma)
    log_scale = -(p.v0(x0) + shift) / sigma
    if level == N:
        return CoefficientField(N, w, d, isotropic=True, log_scale=log_scale, slow=x0)
    prod = None
    eye = np.eye(d)
    for k in range(N, level, -1):
        G = correctors[k].grad
        if G.shape[0] != B:
            raise DependencyError(f"corrector level {k} was computed on a different slow batch")
        pad = (1,) * (d * (N - k))
        Gk = G.reshape(G.shape[:1 + d * k] + pad + (d, d))
        U = eye + Gk
        prod = U if prod is None else prod @ U
    integrand = w[..., None, None] * prod
    axes = tuple(range(1 + d * level, 1 + d * N))
    K = np.mean(integrand, axis=axes)
    K = 0.5 * (K + np.swapaxes(K, -1, -2))
    return CoefficientField(level, K, d, isotropic=False, log_scale=log_scale, slow=x0)


def harmonic_mean_corrector_1d(K, n=None):
    """Closed-form 1D cell solution: theta' = -1 + (1/K) <1/K>^{-1}.

    Returns (theta_prime, K_eff) for nodal coefficient samples ``K`` (last axis).
    """
    K = np.asarray(K, dtype=float)
    hm = 1.0 / np.mean(1.0 / K, axis=-1, keepdims=True)
    return hm / K - 1.0, hm[..., 0]


def dump_correctors_csv(path, hierarchy: Hierarchy, level: int, slow_index: int = 0):
    """Write node coordinates, theta components and grad theta entries of one level."""
    cf = hierarchy.correctors.get(level)
    if cf is None:
        raise DependencyError(f"no corrector fields kept for level {level}")
    d = hierarchy.potential.dim
    grids = hierarchy.grids
    theta = cf.theta[slow_index]
    G = cf.grad[slow_index]
    coords = []
    for k in range(level):
        n = grids[k].n
        for a in range(d):
            shape = [1] * (d * level)
            shape[d * k + a] = n
            coords.append(np.broadcast_to((np.arange(n) / n).reshape(shape), theta.shape[:-1]))
    cols = [c.reshape(-1) for c in coords]
    names = [f"y{k + 1}_{a}" for k in range(level) for a in range(d)]
    for j in range(d):
        cols.append(theta[..., j].reshape(-1))
        names.append(f"theta_{j}")
    for a in range(d):
        for j in range(d):
            cols.append(G[..., a, j].reshape(-1))
            names.append(f"dtheta_{j}_d{a}")
    header = (f"level={level} sigma={hierarchy.sigma} slow={hierarchy.x0[slow_index].tolist()} "
              f"scheme={hierarchy.scheme}\n" + ",".join(names))
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=header, fmt="%.17g")
