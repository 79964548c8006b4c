"""Multiscale potentials V(x0, y1, ..., yN) = V0(x0) + V1(x0, y1, ..., yN).

V0 is a confining potential on R^d and V1 is bounded and 1-periodic in every
fast slot y_i.  All callables broadcast over leading axes: points are arrays
whose last axis has length ``dim``.

The builtin catalog is assembled from two pieces:

* ``V0_CATALOG``: quadratic well, a tamed Mueller-type 2D well, zero;
* ``V1_CATALOG``: finite trigonometric series (``TrigSeries``) with optional
  coupling to the slow variable, which covers the cosine/sine single- and
  multi-scale perturbations and the product-coupled nonseparable forms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InputError

TWO_PI = 2.0 * np.pi


def _as_points(x, dim, what="point"):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != dim:
        raise InputError(f"{what} has trailing dimension {x.shape[-1]}, expected {dim}")
    return x


@dataclass(frozen=True)
class MultiscalePotential:
    """V(x0, y1, ..., yN) with per-scale gradients.

    ``v1_grads[i]`` is the analytic gradient of V1 with respect to slot ``i``
    (slot 0 is the slow variable) or ``None``, in which case a central finite
    difference with step ``fd_step * (1 + |x|)`` is used.
    """

    dim: int
    n_scales: int
    V0: Callable
    V1: Callable
    grad_V0: Optional[Callable] = None
    v1_grads: tuple = ()
    name: str = "custom"
    params: dict = field(default_factory=dict)
    v1_bound: Optional[float] = None
    hessian_bound: Optional[float] = None
    fast_curvature: Optional[float] = None
    separable: bool = False
    fd_step: float = 1e-5

    def __post_init__(self):
        if int(self.dim) < 1 or int(self.n_scales) < 1:
            raise InputError("dim and n_scales must be >= 1")
        grads = tuple(self.v1_grads) if self.v1_grads else (None,) * (self.n_scales + 1)
        if len(grads) != self.n_scales + 1:
            raise InputError("v1_grads needs one entry per slot 0..N")
        object.__setattr__(self, "v1_grads", grads)

    # -- analytic flags -------------------------------------------------
    @property
    def analytic_flags(self):
        """Per-slot flag: True if the gradient of V is analytic."""
        flags = [self.grad_V0 is not None and self.v1_grads[0] is not None]
        flags += [g is not None for g in self.v1_grads[1:]]
        return tuple(flags)

    # -- evaluation -----------------------------------------------------
    def _check(self, x0, ys):
        x0 = _as_points(x0, self.dim, "x0")
        if len(ys) != self.n_scales:
            raise InputError(f"expected {self.n_scales} fast points, got {len(ys)}")
        ys = tuple(_as_points(y, self.dim, "fast point") for y in ys)
        return x0, ys

    def v0(self, x0):
        return np.asarray(self.V0(_as_points(x0, self.dim, "x0")), dtype=float)

    def v1(self, x0, ys):
        x0, ys = self._check(x0, ys)
        return np.asarray(self.V1(x0, *ys), dtype=float)

    def __call__(self, x0, ys):
        x0, ys = self._check(x0, ys)
        return np.asarray(self.V0(x0), dtype=float) + np.asarray(self.V1(x0, *ys), dtype=float)

    def grad_v0(self, x0):
        x0 = _as_points(x0, self.dim, "x0")
        if self.grad_V0 is not None:
            return np.asarray(self.grad_V0(x0), dtype=float)
        return _central_difference(lambda z: self.V0(z), x0, self.fd_step)

    def grad_v1(self, i, x0, ys):
        """Gradient of V1 with respect to slot ``i`` (0 = slow)."""
        if not 0 <= i <= self.n_scales:
            raise InputError(f"scale index {i} outside 0..{self.n_scales}")
        x0, ys = self._check(x0, ys)
        g = self.v1_grads[i]
        if g is not None:
            return np.asarray(g(x0, *ys), dtype=float)
        args = [x0, *ys]

        def f(z):
            a = list(args)
            a[i] = z
            return self.V1(*a)

        return _central_difference(f, args[i], self.fd_step)

    def grad(self, i, x0, ys):
        """Gradient of the full V with respect to slot ``i``."""
        g = self.grad_v1(i, x0, ys)
        if i == 0:
            g = g + self.grad_v0(x0)
        return g

    def epsilon_view(self, eps):
        return EpsilonView(self, eps)


def _central_difference(f, x, step):
    x = np.asarray(x, dtype=float)
    out = np.empty(np.broadcast_shapes(np.shape(f(x)) + (x.shape[-1],), x.shape))
    for j in range(x.shape[-1]):
        h = step * (1.0 + np.abs(x[..., j]))
        xp = x.copy()
        xm = x.copy()
        xp[..., j] += h
        xm[..., j] -= h
        out[..., j] = (np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * h)
    return out


@dataclass(frozen=True)
class EpsilonView:
    """The collapsed potential V^eps(x) = V(x, x/eps, ..., x/eps^N)."""

    base: MultiscalePotential
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InputError(f"epsilon must be positive, got {self.epsilon}")

    def fast_args(self, x):
        return tuple(x / self.epsilon**i for i in range(1, self.base.n_scales + 1))

    def evaluate(self, x):
        x = _as_points(x, self.base.dim)
        return self.base(x, self.fast_args(x))

    def grad(self, x):
        x = _as_points(x, self.base.dim)
        ys = self.fast_args(x)
        p = self.base
        g = p.grad_v0(x)
        if not p.separable:
            g = g + p.grad_v1(0, x, ys)
        for i in range(1, p.n_scales + 1):
            g = g + p.grad_v1(i, x, ys) / self.epsilon**i
        return g


# -- spec-level operations ------------------------------------------------


def evaluate(p: MultiscalePotential, x0, y):
    """V0(x0) + V1(x0, y1..yN); fast points are reduced mod 1."""
    ys = tuple(np.mod(np.asarray(yi, dtype=float), 1.0) for yi in y)
    return p(x0, ys)


def grad_scale(p: MultiscalePotential, i: int, x0, y):
    ys = tuple(np.mod(np.asarray(yi, dtype=float), 1.0) for yi in y)
    return p.grad(i, x0, ys)


def epsilon_view(p: MultiscalePotential, eps: float) -> EpsilonView:
    return EpsilonView(p, eps)


def epsilon_grad(v: EpsilonView, x):
    return v.grad(x)


@dataclass(frozen=True)
class OscillationSampling:
    """Grid used to estimate osc(V1) = sup V1 - inf V1.

    ``n_torus`` points per coordinate on every fast slot and ``n_x0`` points
    per coordinate on the slow box.  Grids are uniform with the left endpoint
    included, so doubling ``n_torus`` nests the sample set.
    """

    n_torus: int = 256
    n_x0: int = 33
    box: Optional[Sequence] = None
    max_points: int = 2**22


def oscillation(p: MultiscalePotential, sampling: OscillationSampling | None = None) -> float:
    s = sampling or OscillationSampling()
    if s.n_torus < 1 or s.n_x0 < 1:
        raise InputError("oscillation sampling grid is empty")
    d, N = p.dim, p.n_scales
    n = s.n_torus
    # keep the fast tensor grid affordable but nested under refinement
    while n > 2 and n ** (d * N) > s.max_points:
        n //= 2
    box = s.box if s.box is not None else [(-5.0, 5.0)] * d
    box = np.asarray(box, dtype=float).reshape(d, 2)
    x0_axes = [np.linspace(lo, hi, s.n_x0) if s.n_x0 > 1 else np.array([0.5 * (lo + hi)])
               for lo, hi in box]
    x0 = np.stack(np.meshgrid(*x0_axes, indexing="ij"), axis=-1).reshape(-1, d)
    if p.separable:
        x0 = x0[:1]
    ys = fast_grid(d, [n] * N)
    fmax, fmin = -np.inf, np.inf
    per = max(1, s.max_points // max(1, n ** (d * N)))
    for start in range(0, len(x0), per):
        xb = x0[start:start + per]
        xb = xb.reshape((len(xb),) + (1,) * (d * N) + (d,))
        vals = p.V1(xb, *ys)
        fmax = max(fmax, float(np.max(vals)))
        fmin = min(fmin, float(np.min(vals)))
    return fmax - fmin


def fast_grid(dim, ns):
    """Broadcastable node coordinates for slots 1..N on a tensor torus grid.

    Returns a tuple of N arrays; slot ``k`` has shape
    ``(1,)*dim*(k) + (n_k,)*dim + (1,)*dim*(N-k-1) + (dim,)`` (k counted from
    0), so that V1(x0, *ys) evaluates on the full product grid.
    """
    N = len(ns)
    out = []
    for k, n in enumerate(ns):
        axes = [np.arange(n) / n] * dim
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        shape = (1,) * (dim * k) + (n,) * dim + (1,) * (dim * (N - k - 1)) + (dim,)
        out.append(mesh.reshape(shape))
    return tuple(out)


# -- trigonometric perturbations -------------------------------------------


@dataclass(frozen=True)
class Coupling:
    """Slow-variable envelope c(x0) multiplying a fluctuation term."""

    kind: str = "none"
    scale: float = 1.0
    depth: float = 0.5
    freq: float = 1.0
    axis: int = 0

    def value(self, x0):
        k = self.kind
        if k == "none":
            return np.ones(x0.shape[:-1])
        if k == "lorentzian":
            return 1.0 / (1.0 + np.sum(x0**2, axis=-1) / self.scale**2)
        if k == "gaussian":
            return np.exp(-0.5 * np.sum(x0**2, axis=-1) / self.scale**2)
        if k == "cosine":
            return 1.0 + self.depth * np.cos(self.freq * x0[..., self.axis])
        if k == "sine":
            return 1.0 + self.depth * np.sin(self.freq * x0[..., self.axis])
        raise InputError(f"unknown coupling kind {k!r}")

    def grad(self, x0):
        k = self.kind
        if k == "none":
            return np.zeros(x0.shape)
        if k == "lorentzian":
            c = self.value(x0)
            return (-2.0 / self.scale**2) * (c**2)[..., None] * x0
        if k == "gaussian":
            return (-1.0 / self.scale**2) * self.value(x0)[..., None] * x0
        g = np.zeros(x0.shape)
        arg = self.freq * x0[..., self.axis]
        if k == "cosine":
            g[..., self.axis] = -self.depth * self.freq * np.sin(arg)
        elif k == "sine":
            g[..., self.axis] = self.depth * self.freq * np.cos(arg)
        else:
            raise InputError(f"unknown coupling kind {k!r}")
        return g

    @property
    def sup(self):
        return 1.0 + abs(self.depth) if self.kind in ("cosine", "sine") else 1.0


@dataclass(frozen=True)
class TrigTerm:
    """amp * c(x0) * prod_f g_f(2 pi k_f y[slot_f][axis_f]), g in {cos, sin}."""

    amp: float
    factors: tuple  # of (slot>=1, axis, "cos"|"sin", k)
    coupling: Coupling = Coupling()


class TrigSeries:
    """Finite sum of ``TrigTerm``s with analytic gradients in every slot."""

    def __init__(self, terms, dim, n_scales):
        self.terms = tuple(terms)
        self.dim = dim
        self.n_scales = n_scales
        for t in self.terms:
            for slot, axis, fn, _k in t.factors:
                if not 1 <= slot <= n_scales:
                    raise InputError(f"trig factor slot {slot} outside 1..{n_scales}")
                if not 0 <= axis < dim:
                    raise InputError(f"trig factor axis {axis} outside 0..{dim - 1}")
                if fn not in ("cos", "sin"):
                    raise InputError(f"trig factor function {fn!r}")

    @staticmethod
    def _factor(fn, k, y):
        a = TWO_PI * k * y
        return np.cos(a) if fn == "cos" else np.sin(a)

    @staticmethod
    def _dfactor(fn, k, y):
        a = TWO_PI * k * y
        return (-TWO_PI * k) * np.sin(a) if fn == "cos" else (TWO_PI * k) * np.cos(a)

    def _parts(self, term, x0, ys):
        return [self._factor(fn, k, ys[slot - 1][..., axis]) for slot, axis, fn, k in term.factors]

    def __call__(self, x0, *ys):
        shape = np.broadcast_shapes(x0.shape[:-1], *(y.shape[:-1] for y in ys))
        out = np.zeros(shape)
        for t in self.terms:
            val = t.amp * t.coupling.value(x0)
            for part in self._parts(t, x0, ys):
                val = val * part
            out = out + val
        return out

    def gradient(self, i):
        def g(x0, *ys):
            shape = np.broadcast_shapes(x0.shape[:-1], *(y.shape[:-1] for y in ys))
            out = np.zeros(shape + (self.dim,))
            for t in self.terms:
                if i == 0:
                    if t.coupling.kind == "none":
                        continue
                    prod = t.amp * np.ones(shape)
                    for part in self._parts(t, x0, ys):
                        prod = prod * part
                    out = out + prod[..., None] * t.coupling.grad(x0)
                    continue
                hits = [j for j, f in enumerate(t.factors) if f[0] == i]
                if not hits:
                    continue
                c = t.amp if t.coupling.kind == "none" else t.amp * t.coupling.value(x0)
                parts = self._parts(t, x0, ys) if len(t.factors) > 1 else None
                for j in hits:
                    slot, axis, fn, k = t.factors[j]
                    val = c * self._dfactor(fn, k, ys[slot - 1][..., axis])
                    if parts is not None:
                        for jj, part in enumerate(parts):
                            if jj != j:
                                val = val * part
                    out[..., axis] = out[..., axis] + val
            return out

        return g

    @property
    def bound(self):
        return float(sum(abs(t.amp) * t.coupling.sup for t in self.terms))

    @property
    def x_independent(self):
        return all(t.coupling.kind == "none" for t in self.terms)

    def slot_curvature(self, slot):
        """Upper bound on the Hessian norm of V1 in the given fast slot."""
        total = 0.0
        for t in self.terms:
            wave = sum(TWO_PI * abs(k) for s, _a, _f, k in t.factors if s == slot)
            total += abs(t.amp) * t.coupling.sup * wave**2
        return total


# -- catalogs ---------------------------------------------------------------


def _quadratic(dim, stiffness=1.0, center=None):
    k = np.broadcast_to(np.asarray(stiffness, dtype=float), (dim,)).copy()
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float).reshape(dim)

    def V0(x):
        return 0.5 * np.sum(k * (x - c) ** 2, axis=-1)

    def grad(x):
        return k * (x - c)

    return V0, grad, float(np.max(k))


_MB_A = (-200.0, -100.0, -170.0)
_MB_a = (-1.0, -1.0, -6.5)
_MB_b = (0.0, 0.0, 11.0)
_MB_c = (-10.0, -10.0, -6.5)
_MB_x = (1.0, 0.0, -0.5)
_MB_y = (0.0, 0.5, 1.5)


def _mueller(dim, scale=0.05, confinement=1.0, center=(-0.25, 0.75)):
    """Mueller-Brown wells (the three decaying Gaussians) in a harmonic trap.

    The fourth, growing Mueller-Brown term is replaced by the trap so that the
    Hessian stays bounded.
    """
    if dim != 2:
        raise InputError("the Mueller-type well is two-dimensional")
    cx, cy = center

    def V0(x):
        X, Y = x[..., 0], x[..., 1]
        out = 0.5 * confinement * ((X - cx) ** 2 + (Y - cy) ** 2)
        for A, a, b, c, x0, y0 in zip(_MB_A, _MB_a, _MB_b, _MB_c, _MB_x, _MB_y):
            dx, dy = X - x0, Y - y0
            out = out + scale * A * np.exp(a * dx**2 + b * dx * dy + c * dy**2)
        return out

    def grad(x):
        X, Y = x[..., 0], x[..., 1]
        gx = confinement * (X - cx)
        gy = confinement * (Y - cy)
        for A, a, b, c, x0, y0 in zip(_MB_A, _MB_a, _MB_b, _MB_c, _MB_x, _MB_y):
            dx, dy = X - x0, Y - y0
            e = scale * A * np.exp(a * dx**2 + b * dx * dy + c * dy**2)
            gx = gx + e * (2 * a * dx + b * dy)
            gy = gy + e * (b * dx + 2 * c * dy)
        return np.stack([gx, gy], axis=-1)

    # crude but safe bound: sup of |Hessian| of each Gaussian bump
    h = confinement + scale * sum(abs(A) * (2 * (abs(a) + abs(b) + abs(c)) + (abs(a) + abs(b) + abs(c)) ** 2 * 4)
                                  for A, a, b, c in zip(_MB_A, _MB_a, _MB_b, _MB_c))
    return V0, grad, float(h)


def _zero_v0(dim):
    return (lambda x: np.zeros(x.shape[:-1])), (lambda x: np.zeros(x.shape)), 0.0


V0_CATALOG = {
    "quadratic": _quadratic,
    "mueller": _mueller,
    "zero": _zero_v0,
}


def _coupling(spec):
    if spec is None:
        return Coupling()
    if isinstance(spec, Coupling):
        return spec
    return Coupling(**spec)


def _v1_zero(dim, N, **_):
    return []


def _v1_cosine(dim, N, alpha=1.0, k=1, slot=1, axes=None, coupling=None, fn="cos"):
    c = _coupling(coupling)
    axes = range(dim) if axes is None else axes
    return [TrigTerm(alpha, ((slot, a, fn, k),), c) for a in axes]


def _v1_sine(dim, N, **kw):
    kw.setdefault("fn", "sin")
    return _v1_cosine(dim, N, **kw)


def _v1_multiscale(dim, N, alpha=1.0, k=1, coupling=None, fn="cos"):
    alphas = np.broadcast_to(np.asarray(alpha, dtype=float), (N,))
    c = _coupling(coupling)
    return [TrigTerm(float(alphas[i]), ((i + 1, a, fn, k),), c) for i in range(N) for a in range(dim)]


def _v1_product(dim, N, alpha=1.0, coupling=None, axis=0):
    fns = ["cos", "sin"]
    factors = tuple((i + 1, axis, fns[i % 2], 1) for i in range(N))
    return [TrigTerm(alpha, factors, _coupling(coupling))]


def _v1_nonseparable(dim, N, alpha=1.0, beta=0.5, coupling=None, axis=0):
    """alpha * (1 + beta cos(2 pi y1)) cos(2 pi yN), N >= 2."""
    if N < 2:
        raise InputError("nonseparable form needs at least two fast scales")
    c = _coupling(coupling)
    return [TrigTerm(alpha, ((N, axis, "cos", 1),), c),
            TrigTerm(alpha * beta, ((1, axis, "cos", 1), (N, axis, "cos", 1)), c)]


def _v1_x_coupled(dim, N, alpha=1.0, scale=1.0, slot=1):
    c = Coupling(kind="lorentzian", scale=scale)
    return [TrigTerm(alpha, ((slot, a, "cos", 1),), c) for a in range(dim)]


def _v1_egg_crate(dim, N, alpha=1.0, coupling=None, slot=1):
    if dim < 2:
        raise InputError("egg-crate form needs dim >= 2")
    return [TrigTerm(alpha, ((slot, 0, "cos", 1), (slot, 1, "cos", 1)), _coupling(coupling))]


def _v1_trig(dim, N, terms=()):
    out = []
    for t in terms:
        factors = tuple((int(f["slot"]), int(f.get("axis", 0)), f.get("fn", "cos"), float(f.get("k", 1)))
                        for f in t["factors"])
        out.append(TrigTerm(float(t.get("amp", 1.0)), factors, _coupling(t.get("coupling"))))
    return out


V1_CATALOG = {
    "zero": _v1_zero,
    "cosine": _v1_cosine,
    "sine": _v1_sine,
    "multiscale_cosine": _v1_multiscale,
    "product": _v1_product,
    "nonseparable": _v1_nonseparable,
    "x_coupled_cosine": _v1_x_coupled,
    "layered": lambda dim, N, **kw: _v1_cosine(dim, N, axes=[0], **kw),
    "egg_crate": _v1_egg_crate,
    "trig": _v1_trig,
}


def trig_potential(dim, n_scales, terms, V0="quadratic", V0_params=None, name="trig", params=None):
    """Assemble a potential from a V0 catalog entry and a list of TrigTerms."""
    if V0 not in V0_CATALOG:
        raise InputError(f"unknown V0 form {V0!r}")
    v0, g0, hess = V0_CATALOG[V0](dim, **(V0_params or {}))
    series = TrigSeries(terms, dim, n_scales)
    grads = tuple(series.gradient(i) for i in range(n_scales + 1))
    return MultiscalePotential(
        dim=dim,
        n_scales=n_scales,
        V0=v0,
        V1=series,
        grad_V0=g0,
        v1_grads=grads,
        name=name,
        params=dict(params or {}),
        v1_bound=series.bound,
        hessian_bound=hess,
        fast_curvature=series.slot_curvature(n_scales),
        separable=series.x_independent,
    )


def make_potential(spec: dict) -> MultiscalePotential:
    """Build a catalog potential from a config mapping.

    ``{"dim": 1, "n_scales": 1, "V0": {"name": "quadratic", "params": {}},
    "V1": {"name": "cosine", "params": {"alpha": 1.0}}}``
    """
    try:
        dim = int(spec.get("dim", 1))
        N = int(spec.get("n_scales", 1))
        v0 = spec.get("V0", {"name": "quadratic"})
        v1 = spec.get("V1", {"name": "zero"})
    except AttributeError as exc:
        raise InputError("potential spec must be a mapping") from exc
    if v1["name"] not in V1_CATALOG:
        raise InputError(f"unknown V1 form {v1['name']!r}")
    terms = V1_CATALOG[v1["name"]](dim, N, **dict(v1.get("params") or {}))
    name = spec.get("name") or f"{v0['name']}+{v1['name']}"
    return trig_potential(dim, N, terms, V0=v0["name"], V0_params=v0.get("params"),
                          name=name, params={"V0": v0, "V1": v1})


def callable_potential(dim, n_scales, V0, V1, grad_V0=None, v1_grads=None, name="custom",
                       v1_bound=None, hessian_bound=None, separable=False):
    """Wrap user callables; missing gradients fall back to finite differences."""
    return MultiscalePotential(dim=dim, n_scales=n_scales, V0=V0, V1=V1, grad_V0=grad_V0,
                               v1_grads=tuple(v1_grads) if v1_grads else (),
                               name=name, v1_bound=v1_bound, hessian_bound=hessian_bound,
                               separable=separable)


def catalog_names():
    return sorted(V0_CATALOG), sorted(V1_CATALOG)


def default_box(p: MultiscalePotential, sigma: float, margin_energy: float = 40.0,
                center=None, start: float = 1.0):
    """Symmetric box on which V0 rises by ``margin_energy * sigma`` at the boundary.

    Returns a ``(dim, 2)`` array of bounds.
    """
    d = p.dim
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    probe = np.linspace(-1.0, 1.0, 65)
    R = start
    for _ in range(200):
        axes = [c[j] + R * probe for j in range(d)]
        inner = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        vmin = float(np.min(p.v0(inner)))
        edge = inner[np.any(np.isclose(np.abs(inner - c), R), axis=-1)]
        if float(np.min(p.v0(edge))) >= vmin + margin_energy * sigma:
            return np.stack([c - R, c + R], axis=-1)
        R *= 1.1
    raise InputError("V0 does not appear confining on any reasonable box")


def hessian_norm_fd(p: MultiscalePotential, x0, h=1e-4):
    """Spectral norm of the finite-difference Hessian of V0 at points x0."""
    x0 = _as_points(x0, p.dim)
    d = p.dim
    H = np.empty(x0.shape[:-1] + (d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        H[..., j, :] = (p.grad_v0(x0 + e) - p.grad_v0(x0 - e)) / (2 * h)
    H = 0.5 * (H + np.swapaxes(H, -1, -2))
    return np.max(np.abs(np.linalg.eigvalsh(H)), axis=-1)


__all__ = [
    "MultiscalePotential", "EpsilonView", "OscillationSampling", "Coupling", "TrigTerm", "TrigSeries",
    "evaluate", "grad_scale", "oscillation", "epsilon_view", "epsilon_grad", "fast_grid",
    "make_potential", "trig_potential", "callable_potential", "default_box", "hessian_norm_fd",
    "V0_CATALOG", "V1_CATALOG", "catalog_names",
]
