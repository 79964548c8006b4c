"""Variational upper bounds and the exponential bound chain for the mobility.

The level-i tensor is the infimum of the quadratic functional

    J_i[v](e) = int |e + grad v_{i+1} + ... + grad v_N|^2 exp(-V/sigma) dy_{i+1..N}

where v_j is periodic in y_j and may depend on y_{i+1}, ..., y_j, and only
its y_j gradient enters.  Evaluating J on any trial set gives a certified
upper bound on e.K_i e; the minimizer is rebuilt from the correctors.

Lower bounds come from Cauchy-Schwarz:  K_j >= 1/Zhat_{j+1} and
exp(-osc/sigma) <= 1/(Z1 Zhat1) <= e.M e <= 1.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .effective import EffectiveModel, inverse_partition_product
from .errors import DependencyError, InputError
from .potential import MultiscalePotential, OscillationSampling, fast_grid, oscillation
from .torus import Hierarchy, TorusGrid, _Scheme


@dataclass
class TrialFieldSet:
    """Trial potentials v_{i+1}..v_N for the level-i functional.

    ``fields[j]`` is an array broadcastable to the node grid of slots
    i+1..j (each slot contributing ``d`` axes); the last ``d`` axes must be
    full slot-j axes.  Fields are shifted to mean zero in y_j on creation.
    """

    level: int
    direction: np.ndarray
    fields: dict

    def __post_init__(self):
        e = np.asarray(self.direction, dtype=float)
        nrm = np.linalg.norm(e)
        if not abs(nrm - 1.0) < 1e-12:
            raise InputError(f"trial direction must be a unit vector (|e| = {nrm})")
        self.direction = e
        d = e.shape[0]
        fixed = {}
        for j, v in self.fields.items():
            v = np.asarray(v, dtype=float)
            axes = tuple(range(v.ndim - d, v.ndim))
            fixed[j] = v - np.mean(v, axis=axes, keepdims=True)
        self.fields = fixed


def _slow_weights(p, sigma, level, x0, ys_fixed, grids):
    """V1 on slots level+1..N at a fixed slow point; returns (v1 table, shift)."""
    d, N = p.dim, p.n_scales
    rest = fast_grid(d, [g.n for g in grids[level:]])
    ndim = d * (N - level)
    x0 = np.asarray(x0, dtype=float).reshape((1,) * ndim + (d,))
    fixed = [np.asarray(y, dtype=float).reshape((1,) * ndim + (d,)) for y in ys_fixed]
    v = np.asarray(p.V1(x0, *fixed, *rest), dtype=float)
    v = np.broadcast_to(v, tuple(g.n for g in grids[level:] for _ in range(d)))
    return v


def _grids(p, grids):
    if isinstance(grids, (int, np.integer)):
        grids = [int(grids)] * p.n_scales
    return [g if isinstance(g, TorusGrid) else TorusGrid(p.dim, int(g)) for g in grids]


def log_quadratic_value(p: MultiscalePotential, sigma: float, level: int, x0, ys_fixed,
                        trials: TrialFieldSet, grids):
    """log J_level[trials](e) at the slow point (x0, y_1..y_level)."""
    d, N = p.dim, p.n_scales
    if not 0 <= level < N:
        raise InputError(f"functional level must lie in 0..{N - 1}")
    if trials.level != level:
        raise InputError("trial set was built for a different level")
    if trials.direction.shape != (d,):
        raise InputError("trial direction has the wrong dimension")
    if len(ys_fixed) != level:
        raise InputError(f"level {level} needs {level} fixed fast points")
    grids = _grids(p, grids)
    v1 = _slow_weights(p, sigma, level, x0, ys_fixed, grids)
    shift = float(np.min(v1))
    w = np.exp(-(v1 - shift) / sigma)
    u = np.broadcast_to(trials.direction, w.shape + (d,)).copy()
    for j in range(level + 1, N + 1):
        v = trials.fields.get(j)
        if v is None:
            continue
        g = grids[j - 1]
        lead = d * (j - level - 1)
        target = tuple(gr.n for gr in grids[level:j - 1] for _ in range(d)) + g.shape
        if v.ndim != lead + d:
            raise InputError(f"trial field v_{j} has {v.ndim} axes, expected {lead + d}")
        try:
            v = np.broadcast_to(v, target)
        except ValueError as exc:
            raise InputError(f"trial field v_{j} does not fit the level grids") from exc
        grad = np.stack(_Scheme(g, "spectral").gradients(v)[0], axis=-1)
        pad = (1,) * (d * (N - j))
        u = u + grad.reshape(grad.shape[:-1] + pad + (d,))
    val = np.mean(np.sum(u * u, axis=-1) * w)
    return float(np.log(val)) - (float(p.v0(np.asarray(x0, dtype=float).reshape(1, d))[0]) + shift) / sigma


def quadratic_value(p: MultiscalePotential, sigma: float, level: int, x0, ys_fixed,
                    trials: TrialFieldSet, grids) -> float:
    return float(np.exp(log_quadratic_value(p, sigma, level, x0, ys_fixed, trials, grids)))


def zero_trials(p: MultiscalePotential, level: int, direction) -> TrialFieldSet:
    return TrialFieldSet(level, np.asarray(direction, dtype=float), {})


def random_trials(rng: np.random.Generator, p: MultiscalePotential, level: int, grids, direction=None,
                  n_modes: int = 5, amplitude: Optional[float] = None,
                  base: Optional[TrialFieldSet] = None) -> TrialFieldSet:
    """Smooth mean-zero trials, each v_j a Fourier series in y_j alone.

    With ``base`` the random fields are added to an existing trial set (and
    its direction is reused), which probes the functional near its minimum.
    """
    if base is not None:
        direction = base.direction
    d, N = p.dim, p.n_scales
    grids = _grids(p, grids)
    if direction is None:
        direction = rng.standard_normal(d)
        direction /= np.linalg.norm(direction)
    fields = {}
    ks = np.array([k for k in np.ndindex(*(2 * n_modes + 1,) * d)]) - n_modes
    ks = ks[np.any(ks != 0, axis=1)]
    for j in range(level + 1, N + 1):
        g = grids[j - 1]
        if 2 * n_modes >= g.n:
            raise InputError("trial modes exceed the grid's resolvable band")
        y = g.nodes()
        amp = rng.uniform(0.01, 0.3) if amplitude is None else amplitude
        a = rng.standard_normal(len(ks)) * amp / (2 * np.pi * np.linalg.norm(ks, axis=1))
        b = rng.standard_normal(len(ks)) * amp / (2 * np.pi * np.linalg.norm(ks, axis=1))
        phase = 2 * np.pi * (y @ ks.T)
        v = np.cos(phase) @ a + np.sin(phase) @ b
        fields[j] = v.reshape((1,) * (d * (j - level - 1)) + g.shape)
        if base is not None and j in base.fields:
            fields[j] = base.fields[j] + fields[j]
    return TrialFieldSet(level, direction, fields)


def optimal_trials(hierarchy: Hierarchy, level: int, batch: int, node, direction) -> TrialFieldSet:
    """Rebuild the minimizing trials from the correctors.

    v_{i+1} = theta_{i+1}.e, and recursively v_{j+1} = theta_{j+1}.u_j with
    u_j = e + grad v_{i+1} + ... + grad v_j.  ``node`` indexes the fixed fast
    slots 1..level on the hierarchy grids.
    """
    p = hierarchy.potential
    d, N = p.dim, p.n_scales
    node = tuple(int(k) for k in node)
    if len(node) != d * level:
        raise InputError(f"slow node index needs {d * level} entries")
    missing = [k for k in range(level + 1, N + 1) if k not in hierarchy.correctors]
    if missing:
        raise DependencyError(f"optimal trials need correctors for levels {missing}")
    e = np.asarray(direction, dtype=float)
    fields = {}
    u = e  # shape (slots level+1..j grids) + (d,)
    for j in range(level + 1, N + 1):
        cf = hierarchy.correctors[j]
        theta = cf.theta[(batch,) + node]  # slots level+1..j grids + (d,)
        G = cf.grad[(batch,) + node]
        pad = (1,) * d
        uu = u.reshape(u.shape[:-1] + pad + (d,)) if j > level + 1 else u
        fields[j] = np.sum(theta * uu, axis=-1)
        u = uu + np.einsum("...aj,...j->...a", G, uu)
    return TrialFieldSet(level, e, fields)


def solver_log_value(hierarchy: Hierarchy, level: int, batch: int, node, direction) -> float:
    """log(e.K_level e) from the hierarchy (true scale)."""
    K = hierarchy.levels[level]
    node = tuple(int(k) for k in node)
    e = np.asarray(direction, dtype=float)
    t = K.tensor()[(batch,) + node]
    return float(np.log(e @ t @ e) + K.log_scale[batch])


def slow_point(hierarchy: Hierarchy, level: int, batch: int, node):
    """(x0, [y_1..y_level]) coordinates of a hierarchy node."""
    d = hierarchy.potential.dim
    node = tuple(int(k) for k in node)
    ys = []
    for k in range(level):
        n = hierarchy.grids[k].n
        ys.append(np.array(node[d * k: d * (k + 1)], dtype=float) / n)
    return hierarchy.x0[batch], ys


# -- bound chain ----------------------------------------------------------


@dataclass
class BoundReport:
    rows: list = field(default_factory=list)
    tol: float = 1e-8
    osc: float = 0.0

    @property
    def worst(self):
        """Smallest margin of each link of the chain."""
        names = ("lower_to_closed", "closed_to_M", "lower_to_M", "M_to_upper")
        out = {k: np.inf for k in names}
        for r in self.rows:
            for k in names:
                out[k] = min(out[k], r[k])
        return out

    @property
    def passed(self):
        return all(v >= -self.tol for v in self.worst.values())

    def to_csv(self, path):
        cols = ["node", "direction", "x", "e", "lower", "closed_form", "M_value", "upper", "margin"]
        with open(path, "w", newline="") as fh:
            fh.write(f"# osc={self.osc!r} tol={self.tol!r}\n")
            wr = csv.writer(fh)
            wr.writerow(cols)
            for r in self.rows:
                wr.writerow([r["node"], r["direction"], " ".join(map(repr, r["x"])),
                             " ".join(map(repr, r["e"])), repr(r["lower"]), repr(r["closed_form"]),
                             repr(r["M_value"]), repr(r["upper"]), repr(r["margin"])])


def check_bound_chain(model: EffectiveModel, p: MultiscalePotential, sigma: Optional[float] = None,
                      n_random: int = 8, seed: int = 0, tol: float = 1e-8,
                      sampling: Optional[OscillationSampling] = None) -> BoundReport:
    """Check exp(-osc/sigma) <= 1/(Z1 Zhat1) <= e.M e <= 1 at every node.

    Directions: the coordinate axes plus ``n_random`` random unit vectors.
    osc is the larger of the sampled oscillation and the oscillation seen on
    the model's own torus nodes, so the lower bound is never set too high.
    The middle link is reported for every dimension.
    """
    sigma = model.sigma if sigma is None else sigma
    d = p.dim
    X = model.nodes().reshape(-1, d)
    M = model.M.reshape(-1, d, d)
    ns = model.meta.get("torus_n", 64)
    cf = inverse_partition_product(p, sigma, X, ns)
    from .effective import _v1_table

    node_osc = 0.0
    for start in range(0, len(X), 256):
        v = _v1_table(p, X[start:start + 256], ns)
        node_osc = max(node_osc, float(np.max(v) - np.min(v)))
    if sampling is None:
        sampling = OscillationSampling(box=model.box.tolist())
    osc = max(oscillation(p, sampling), node_osc)
    lower = float(np.exp(-osc / sigma))
    rng = np.random.default_rng(seed)
    dirs = list(np.eye(d))
    for _ in range(n_random):
        e = rng.standard_normal(d)
        dirs.append(e / np.linalg.norm(e))
    report = BoundReport(tol=tol, osc=osc)
    cfM = cf.M
    for k, e in enumerate(dirs):
        eMe = np.einsum("i,nij,j->n", e, M, e)
        for i in range(len(X)):
            m = float(eMe[i])
            c = float(cfM[i])
            report.rows.append({
                "node": i, "direction": k, "x": X[i].tolist(), "e": e.tolist(),
                "lower": lower, "closed_form": c, "M_value": m, "upper": 1.0,
                "lower_to_closed": c - lower, "closed_to_M": m - c,
                "lower_to_M": m - lower, "M_to_upper": 1.0 - m,
                "margin": min(c - lower, m - c, 1.0 - m),
            })
    return report


@dataclass
class FloorReport:
    """Per level j = 0..N-1: min over nodes of min-eig(K_j) * Zhat_{j+1} - 1."""

    margins: dict
    tol: float = 1e-8

    @property
    def passed(self):
        return all(m >= -self.tol for m in self.margins.values())


def ellipticity_floor(hierarchy: Hierarchy, tol: float = 1e-8) -> FloorReport:
    """Compare min-eig(K_j) with 1/Zhat_{j+1} in relative form."""
    N = hierarchy.n_scales
    margins = {}
    for j in range(N):
        K = hierarchy.levels.get(j)
        if K is None:
            raise DependencyError(f"level {j} tensor not kept on this hierarchy")
        lam = K.min_eigenvalue()
        log_hat = hierarchy.log_hat_partition(j + 1)
        margins[j] = float(np.min(lam * np.exp(log_hat))) - 1.0
    return FloorReport(margins, tol)
