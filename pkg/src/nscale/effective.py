"""Coarse-grained coefficients: partition function, free energy and mobility.

``EffectiveModel`` tabulates, on a uniform slow grid,

* log Z(x) with Z(x) = int exp(-V(x, y1..yN)/sigma) dy,
* Psi(x) = -sigma log Z(x),
* M(x) = K_0(x) / Z(x) from the cell-problem hierarchy,
* div M (row divergence) and grad Psi by finite differences on the table.

The one-dimensional closed form M = 1/(Z1 * Zhat1), with Z1 and Zhat1 the
fast-variable integrals of exp(-V1/sigma) and exp(+V1/sigma), is provided as
an independent oracle.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from . import __version__
from .errors import ConsistencyError, ExtrapolationError, InputError
from .potential import MultiscalePotential, default_box, fast_grid
from .torus import solve_hierarchy

DEFAULT_NODES = {1: 129, 2: 65}


def _points(p, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if p.dim == 1 else x.reshape(1, -1)
    if x.shape[-1] != p.dim:
        raise InputError(f"slow points must have trailing dimension {p.dim}")
    return x


def _fast_resolution(p, n=None, budget=2**18):
    if n is not None:
        return n
    n = 128
    while n > 16 and n ** (p.dim * p.n_scales) > budget:
        n //= 2
    return n


def _log_mean_exp(v, sign, sigma, axes):
    """log mean exp(sign * v / sigma) over ``axes`` with a max shift."""
    a = sign * v / sigma
    m = np.max(a, axis=axes, keepdims=True)
    out = np.log(np.mean(np.exp(a - m), axis=axes)) + np.squeeze(m, axis=axes)
    return out


def _v1_table(p, x, n):
    d, N = p.dim, p.n_scales
    ns = [int(n)] * N if np.ndim(n) == 0 else [int(k) for k in n]
    if len(ns) != N:
        raise InputError(f"need one fast resolution per scale ({N})")
    ys = fast_grid(d, ns)
    xb = x.reshape((len(x),) + (1,) * (d * N) + (d,))
    v = np.asarray(p.V1(xb, *ys), dtype=float)
    return np.broadcast_to(v, (len(x),) + tuple(k for k in ns for _ in range(d)))


def log_partition(p: MultiscalePotential, sigma: float, x, n: Optional[int] = None):
    """log Z(x) by tensor-product trapezoid quadrature over all fast slots."""
    if not sigma > 0:
        raise InputError("sigma must be positive")
    x = _points(p, x)
    n = _fast_resolution(p, n)
    v = _v1_table(p, x, n)
    axes = tuple(range(1, v.ndim))
    return _log_mean_exp(v, -1.0, sigma, axes) - p.v0(x) / sigma


def compute_Z(p: MultiscalePotential, sigma: float, x, n: Optional[int] = None):
    return np.exp(log_partition(p, sigma, x, n))


@dataclass
class OneDimClosedForm:
    """Z1, Zhat1 and M = 1/(Z1 Zhat1) at a batch of slow points (log-stored)."""

    x: np.ndarray
    log_z1: np.ndarray
    log_zhat1: np.ndarray

    @property
    def z1(self):
        return np.exp(self.log_z1)

    @property
    def zhat1(self):
        return np.exp(self.log_zhat1)

    @property
    def M(self):
        return np.exp(-(self.log_z1 + self.log_zhat1))


def inverse_partition_product(p: MultiscalePotential, sigma: float, x, n: Optional[int] = None
                              ) -> OneDimClosedForm:
    """1/(Z1 Zhat1) in any dimension (a lower bound on the mobility)."""
    if not sigma > 0:
        raise InputError("sigma must be positive")
    x = _points(p, x)
    n = _fast_resolution(p, n)
    v = _v1_table(p, x, n)
    axes = tuple(range(1, v.ndim))
    return OneDimClosedForm(x, _log_mean_exp(v, -1.0, sigma, axes), _log_mean_exp(v, 1.0, sigma, axes))


def closed_form_1d(p: MultiscalePotential, sigma: float, x, n: Optional[int] = None) -> OneDimClosedForm:
    if p.dim != 1:
        raise InputError("the closed-form mobility exists only in one dimension")
    return inverse_partition_product(p, sigma, x, n)


def effective_tensor(p: MultiscalePotential, sigma: float, x, hierarchy=None, grids=None,
                     tol: float = 1e-10, scheme: str = "spectral", asymmetry_tol: float = 1e-6):
    """M(x) = K_0(x)/Z(x), symmetrized.  Returns (M, asymmetry)."""
    x = _points(p, x)
    if hierarchy is None:
        grids = grids if grids is not None else _fast_resolution(p, None, budget=2**16)
        hierarchy = solve_hierarchy(p, sigma, x, grids, tol=tol, scheme=scheme, keep_fields=False)
    M = hierarchy.effective_tensor()
    asym = hierarchy.asymmetry
    if asym > asymmetry_tol:
        raise ConsistencyError(f"effective tensor asymmetry {asym:.3e} exceeds {asymmetry_tol:.1e}")
    return 0.5 * (M + np.swapaxes(M, -1, -2)), asym


# -- tabulated model -------------------------------------------------------


def _row_divergence(M, axes):
    d = len(axes)
    out = np.zeros(M.shape[:-1])
    for i in range(d):
        for j in range(d):
            out[..., i] += np.gradient(M[..., i, j], axes[j], axis=j, edge_order=2)
    return out


def _gradient(f, axes):
    d = len(axes)
    return np.stack([np.gradient(f, axes[j], axis=j, edge_order=2) for j in range(d)], axis=-1)


@dataclass
class EffectiveModel:
    """Coefficients of the homogenized dynamics on a uniform slow grid.

    Arrays are indexed ``grid + component`` with ``grid = (n_0, ..., n_{d-1})``.
    ``grad_psi_fluct`` is the part of grad Psi coming from the fluctuations,
    Psi = V0 - sigma log Z1, so that the analytic grad V0 can be added back
    when the potential is at hand.
    """

    axes: list
    sigma: float
    log_Z: np.ndarray
    M: np.ndarray
    divM: np.ndarray
    grad_psi: np.ndarray
    grad_psi_fluct: Optional[np.ndarray] = None
    potential: Optional[MultiscalePotential] = None
    meta: dict = field(default_factory=dict)
    asymmetry: float = 0.0

    @property
    def dim(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def Z(self):
        return np.exp(self.log_Z)

    @property
    def psi(self):
        return -self.sigma * self.log_Z

    @property
    def box(self):
        return np.array([[a[0], a[-1]] for a in self.axes])

    @property
    def spacing(self):
        return np.array([a[1] - a[0] for a in self.axes])

    def nodes(self):
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    def _check_inside(self, x):
        lo = self.box[:, 0] + self.spacing * (1 - 1e-9)
        hi = self.box[:, 1] - self.spacing * (1 - 1e-9)
        if np.any(x < lo) or np.any(x > hi):
            raise ExtrapolationError("query point outside the tabulated region (one-node margin)")

    def _interp(self, table, x, check=True):
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        if check:
            self._check_inside(x)
        flat = table.reshape(self.shape + (-1,))
        if self.dim == 1:
            out = CubicSpline(self.axes[0], flat, axis=0)(x[:, 0])
        else:
            out = RegularGridInterpolator(self.axes, flat, method="linear")(x)
        return out.reshape((len(x),) + table.shape[self.dim:])

    def divergence_of_M(self, x):
        return self._interp(self.divM, x)

    def free_energy(self, x):
        return self._interp(self.psi, x)

    def grad_free_energy(self, x):
        return self._interp(self.grad_psi, x)

    def mobility(self, x):
        return self._interp(self.M, x)

    def coefficients(self):
        """Vectorized evaluator x -> (M(x), drift(x)) for the SDE integrator.

        Points are clamped into the table box (the box already carries a
        negligible Gibbs mass outside it).
        """
        return CoefficientEvaluator(self)

    # -- persistence -------------------------------------------------------
    def to_csv(self, path):
        d = self.dim
        X = self.nodes().reshape(-1, d)
        cols = [X, self.Z.reshape(-1, 1), self.log_Z.reshape(-1, 1), self.psi.reshape(-1, 1),
                self.M.reshape(-1, d * d), self.divM.reshape(-1, d), self.grad_psi.reshape(-1, d)]
        names = ([f"x{j}" for j in range(d)] + ["Z", "logZ", "Psi"]
                 + [f"M{i}{j}" for i in range(d) for j in range(d)]
                 + [f"divM{i}" for i in range(d)] + [f"gradPsi{i}" for i in range(d)])
        if self.grad_psi_fluct is not None:
            cols.append(self.grad_psi_fluct.reshape(-1, d))
            names += [f"gradPsiFluct{i}" for i in range(d)]
        meta = dict(self.meta)
        meta.update(sigma=self.sigma, shape=list(self.shape), box=self.box.tolist(), version=__version__,
                    asymmetry=self.asymmetry)
        header = "meta=" + json.dumps(meta, sort_keys=True) + "\n" + ",".join(names)
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=header, fmt="%.17g")

    @classmethod
    def from_csv(cls, path, potential: Optional[MultiscalePotential] = None):
        with open(path) as fh:
            text = fh.read()
        lines = text.splitlines()
        meta = json.loads(lines[0][len("# meta="):])
        names = lines[1][2:].split(",")
        data = np.loadtxt(io.StringIO(text), delimiter=",", ndmin=2)
        col = {n: data[:, i] for i, n in enumerate(names)}
        shape = tuple(meta["shape"])
        d = len(shape)
        X = np.stack([col[f"x{j}"] for j in range(d)], axis=-1).reshape(shape + (d,))
        axes = [X[(0,) * j + (slice(None),) + (0,) * (d - j - 1) + (j,)] for j in range(d)]

        def stack(prefix, keys):
            return np.stack([col[prefix + k] for k in keys], axis=-1)

        M = stack("M", [f"{i}{j}" for i in range(d) for j in range(d)]).reshape(shape + (d, d))
        fluct = None
        if "gradPsiFluct0" in col:
            fluct = stack("gradPsiFluct", [str(i) for i in range(d)]).reshape(shape + (d,))
        return cls(axes=axes, sigma=float(meta["sigma"]), log_Z=col["logZ"].reshape(shape), M=M,
                   divM=stack("divM", [str(i) for i in range(d)]).reshape(shape + (d,)),
                   grad_psi=stack("gradPsi", [str(i) for i in range(d)]).reshape(shape + (d,)),
                   grad_psi_fluct=fluct, potential=potential, meta=meta,
                   asymmetry=float(meta.get("asymmetry", 0.0)))


class CoefficientEvaluator:
    """Fast (M, drift) lookup with interpolators built once."""

    def __init__(self, model: EffectiveModel):
        self.model = model
        d = model.dim
        self.d = d
        use_analytic = model.potential is not None and model.grad_psi_fluct is not None
        self.analytic_v0 = use_analytic
        gpsi = model.grad_psi_fluct if use_analytic else model.grad_psi
        self.sep = bool(model.potential is not None and model.potential.separable)
        table = np.concatenate([model.M.reshape(model.shape + (d * d,)),
                                model.divM, gpsi], axis=-1)
        if d == 1:
            self._f = CubicSpline(model.axes[0], table, axis=0)
        else:
            rgi = RegularGridInterpolator(model.axes, table, method="linear")
            self._f = rgi
        self.lo = model.box[:, 0]
        self.hi = model.box[:, 1]
        self.const = None
        if self.sep:
            # separable: M constant and div M = 0 exactly; skip interpolation
            self.const = (model.M.reshape(-1, d, d)[0].copy(), np.zeros(d), np.zeros(d))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d = self.d
        sig = self.model.sigma
        if self.const is not None:
            M = np.broadcast_to(self.const[0], x.shape[:-1] + (d, d))
            gpsi = self.model.potential.grad_v0(x)
            drift = -np.einsum("...ij,...j->...i", M, gpsi)
            return M, drift
        xc = np.clip(x, self.lo, self.hi)
        vals = self._f(xc[..., 0]) if d == 1 else self._f(xc)
        M = vals[..., : d * d].reshape(x.shape[:-1] + (d, d))
        div = vals[..., d * d: d * d + d]
        gpsi = vals[..., d * d + d:]
        if self.analytic_v0:
            gpsi = gpsi + self.model.potential.grad_v0(x)
        drift = -np.einsum("...ij,...j->...i", M, gpsi) + sig * div
        return M, drift


def tabulate(p: MultiscalePotential, sigma: float, box=None, nodes=None, grids=None,
             tol: float = 1e-10, scheme: str = "spectral", workers: int = 1,
             asymmetry_tol: float = 1e-6, max_iter: int = 5000) -> EffectiveModel:
    """Solve the hierarchy on every node of a uniform slow grid."""
    if not sigma > 0:
        raise InputError("sigma must be positive")
    d = p.dim
    if box is None:
        box = default_box(p, sigma)
    box = np.asarray(box, dtype=float).reshape(d, 2)
    if nodes is None:
        nodes = DEFAULT_NODES.get(d, 33)
    nodes = np.broadcast_to(np.asarray(nodes, dtype=int), (d,))
    if np.any(nodes < 5):
        raise InputError("need at least 5 slow nodes per dimension")
    axes = [np.linspace(lo, hi, int(n)) for (lo, hi), n in zip(box, nodes)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    shape = X.shape[:-1]
    flat = X.reshape(-1, d)
    if grids is None:
        grids = _fast_resolution(p, None, budget=2**16)
    if p.separable:
        H = solve_hierarchy(p, sigma, flat[:1], grids, tol=tol, scheme=scheme, keep_fields=False,
                            max_iter=max_iter)
        M1 = H.effective_tensor()[0]
        M = np.broadcast_to(M1, shape + (d, d)).copy()
        log_z1 = np.full(shape, H.log_z1[0])
    else:
        H = solve_hierarchy(p, sigma, flat, grids, tol=tol, scheme=scheme, keep_fields=False, max_iter=max_iter,
                            workers=workers)
        M = H.effective_tensor().reshape(shape + (d, d))
        log_z1 = H.log_z1.reshape(shape)
    if H.asymmetry > asymmetry_tol:
        raise ConsistencyError(f"effective tensor asymmetry {H.asymmetry:.3e} exceeds {asymmetry_tol:.1e}")
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    v0 = p.v0(X)
    log_Z = log_z1 - v0 / sigma
    divM = np.zeros(shape + (d,)) if p.separable else _row_divergence(M, axes)
    fluct = np.zeros(shape + (d,)) if p.separable else -sigma * _gradient(log_z1, axes)
    grad_psi = p.grad_v0(X) + fluct
    gsizes = [g.n if hasattr(g, "n") else int(g) for g in (H.grids)]
    meta = {"potential": p.name, "params": p.params, "torus_n": gsizes, "scheme": scheme, "tol": tol,
            "residual": H.residual}
    return EffectiveModel(axes=axes, sigma=sigma, log_Z=log_Z, M=M, divM=divM, grad_psi=grad_psi,
                          grad_psi_fluct=fluct, potential=p, meta=meta, asymmetry=H.asymmetry)


def manufactured_model(axes, m, sigma=1.0, log_Z=None):
    """Model with M = m(x) I on the grid, for finite-difference checks."""
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    d = len(axes)
    mv = m(X)
    M = mv[..., None, None] * np.eye(d)
    lz = np.zeros(X.shape[:-1]) if log_Z is None else log_Z(X)
    return EffectiveModel(axes=list(axes), sigma=sigma, log_Z=lz, M=M, divM=_row_divergence(M, axes),
                          grad_psi=-sigma * _gradient(lz, axes))
