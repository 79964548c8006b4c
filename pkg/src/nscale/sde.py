"""Euler-Maruyama ensembles for the full multiscale and the homogenized SDE.

Full model:        dX = -grad V^eps(X) dt + sqrt(2 sigma) dW
Homogenized model: dX = (-M grad Psi + sigma div M)(X) dt + sqrt(2 sigma) M^{1/2}(X) dW

Randomness is organized in fixed-size path chunks.  Chunk ``c`` draws its
initial points and all of its Gaussian increments from a Philox
counter-based stream keyed by ``(seed, c)``, so an ensemble does not depend
on the order in which chunks run and parallel execution reproduces serial
execution bit for bit.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .effective import EffectiveModel
from .equilibrium import bump
from .errors import BlowUpError, InputError, NotPSDError, StabilityError
from .potential import MultiscalePotential, default_box

DEFAULT_CHUNK = 16384
PSD_TOL = 1e-12
MAX_CLAMP_FRACTION = 1e-3
# explicit Euler on the stiffest scale: dt * L / eps^(2N) must stay below 2;
# we reject anything past a quarter of that
STABILITY_LIMIT = 0.5


@dataclass(frozen=True)
class InitialLaw:
    kind: str = "point"  # "point" | "gaussian"
    mean: tuple = (0.0,)
    std: tuple = (1.0,)

    def sample(self, rng, n, d):
        mean = np.broadcast_to(np.asarray(self.mean, dtype=float), (d,))
        if self.kind == "point":
            return np.broadcast_to(mean, (n, d)).copy()
        if self.kind == "gaussian":
            std = np.broadcast_to(np.asarray(self.std, dtype=float), (d,))
            return mean + std * rng.standard_normal((n, d))
        raise InputError(f"unknown initial law {self.kind!r}")

    @classmethod
    def from_config(cls, cfg):
        if cfg is None:
            return cls()
        if isinstance(cfg, InitialLaw):
            return cfg
        kind = cfg.get("kind", "point")
        mean = tuple(np.atleast_1d(np.asarray(cfg.get("mean", cfg.get("x", 0.0)), dtype=float)).tolist())
        std = tuple(np.atleast_1d(np.asarray(cfg.get("std", 1.0), dtype=float)).tolist())
        return cls(kind, mean, std)


@dataclass
class SimulationSpec:
    """Everything that determines an ensemble (together with the code version)."""

    potential: MultiscalePotential
    sigma: float
    T: float
    n_paths: int
    seed: int = 0
    epsilon: Optional[float] = None
    dt: Optional[float] = None
    initial: InitialLaw = field(default_factory=InitialLaw)
    stability_c: float = 0.05
    chunk: int = DEFAULT_CHUNK
    box: Optional[np.ndarray] = None
    snapshot_stride: int = 0

    def __post_init__(self):
        if not self.T > 0:
            raise InputError("horizon T must be positive")
        if self.dt is not None and not self.dt > 0:
            raise InputError("time step must be positive")
        if self.n_paths < 1:
            raise InputError("ensemble needs at least one path")
        if self.sigma < 0:
            raise InputError("sigma must be nonnegative")
        if self.epsilon is not None and not self.epsilon > 0:
            raise InputError("epsilon must be positive")
        if self.chunk < 1:
            raise InputError("chunk size must be positive")
        self.initial = InitialLaw.from_config(self.initial) if not isinstance(self.initial, InitialLaw) \
            else self.initial

    @property
    def safety_box(self):
        if self.box is not None:
            return np.asarray(self.box, dtype=float).reshape(self.potential.dim, 2)
        return default_box(self.potential, self.sigma if self.sigma > 0 else 1.0)

    def stiffness(self):
        p = self.potential
        L = p.fast_curvature
        if L is None or L <= 0:
            L = p.hessian_bound if p.hessian_bound else 1.0
        return float(L)

    def full_dt(self):
        """Default and validated time step of the full model."""
        if self.epsilon is None:
            raise InputError("the full model needs epsilon")
        stiff = self.epsilon ** (2 * self.potential.n_scales) / self.stiffness()
        suggested = min(1e-3, self.stability_c * stiff)
        dt = suggested if self.dt is None else self.dt
        if self.potential.fast_curvature and dt > STABILITY_LIMIT * stiff:
            raise StabilityError(f"dt={dt:.3g} exceeds the explicit stability bound "
                                 f"{STABILITY_LIMIT * stiff:.3g} of the finest scale; try dt={suggested:.3g}",
                                 suggested_dt=suggested)
        return dt

    def homog_dt(self):
        return 1e-3 if self.dt is None else self.dt

    def digest(self, kind, extra=None):
        p = self.potential
        payload = {
            "kind": kind, "potential": p.name, "params": p.params, "dim": p.dim, "N": p.n_scales,
            "sigma": self.sigma, "T": self.T, "n_paths": self.n_paths, "seed": self.seed,
            "epsilon": self.epsilon, "dt": self.dt, "initial": asdict(self.initial),
            "stability_c": self.stability_c, "chunk": self.chunk,
            "box": None if self.box is None else np.asarray(self.box).tolist(),
            "snapshot_stride": self.snapshot_stride, "extra": extra,
        }
        text = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(chunk),))))


@dataclass
class TrajectoryEnsemble:
    kind: str
    terminal: np.ndarray
    seed: int
    spec_hash: str
    T: float
    dt: float
    times: Optional[np.ndarray] = None
    snapshots: Optional[np.ndarray] = None
    time_averages: dict = field(default_factory=dict)
    clamp_fraction: float = 0.0

    @property
    def n_paths(self):
        return len(self.terminal)

    def moments(self):
        """Per-component raw moments 1..4 with standard errors."""
        out = {}
        for k in range(1, 5):
            v = self.terminal**k
            out[k] = (np.mean(v, axis=0), np.std(v, axis=0, ddof=1) / np.sqrt(self.n_paths))
        return out

    def histogram(self, bins, component=0):
        counts, edges = np.histogram(self.terminal[:, component], bins=bins)
        return counts, edges

    def summary_rows(self, observables=None):
        obs = observables or default_observables(self.terminal.shape[1])
        rows = []
        for name, f in obs.items():
            v = np.asarray(f(self.terminal), dtype=float)
            rows.append((name, float(np.mean(v)), float(np.std(v, ddof=1) / np.sqrt(len(v)))))
        return rows

    def to_csv(self, path, observables=None):
        with open(path, "w") as fh:
            fh.write(f"# kind={self.kind} seed={self.seed} T={self.T!r} dt={self.dt!r} n_paths={self.n_paths}\n")
            fh.write("observable,value,stderr,spec_hash\n")
            for name, v, se in self.summary_rows(observables):
                fh.write(f"{name},{v!r},{se!r},{self.spec_hash}\n")

    def dump_terminal(self, path):
        d = self.terminal.shape[1]
        np.savetxt(path, self.terminal, delimiter=",", fmt="%.17g",
                   header=f"kind={self.kind} spec_hash={self.spec_hash}\n" + ",".join(f"x{j}" for j in range(d)))


def default_observables(d=1):
    return {
        "x": lambda x: x[:, 0],
        "x2": lambda x: np.sum(x**2, axis=1),
        "x4": lambda x: np.sum(x**2, axis=1) ** 2,
        "bump": lambda x: bump(np.sqrt(np.sum(x**2, axis=1))),
    }


# -- matrix square root -----------------------------------------------------


def psd_sqrt(A, tol: float = PSD_TOL):
    """Symmetric PSD square root; eigenvalues in [-tol, 0) are clamped to 0."""
    A = np.asarray(A, dtype=float)
    if A.shape[-1] != A.shape[-2]:
        raise InputError("psd_sqrt needs square matrices")
    S = 0.5 * (A + np.swapaxes(A, -1, -2))
    lam, Q = np.linalg.eigh(S)
    if np.any(lam < -tol):
        raise NotPSDError(f"matrix has eigenvalue {float(np.min(lam)):.3e} below -{tol:g}")
    r = np.sqrt(np.clip(lam, 0.0, None))
    return (Q * r[..., None, :]) @ np.swapaxes(Q, -1, -2)


def _sqrt_clamped(M):
    """Batched square root with clamping; returns (S, number of clamped rows)."""
    d = M.shape[-1]
    if d == 1:
        m = M[..., 0, 0]
        neg = m < 0
        return np.sqrt(np.where(neg, 0.0, m))[..., None, None], int(np.count_nonzero(neg))
    if d == 2:
        a, b, c = M[..., 0, 0], 0.5 * (M[..., 0, 1] + M[..., 1, 0]), M[..., 1, 1]
        det = a * c - b * b
        tr = a + c
        bad = (det < 0) | (tr < 0)
        sd = np.sqrt(np.where(bad, 0.0, det))
        s = np.sqrt(np.where(bad, 1.0, tr + 2 * sd))
        S = np.empty(M.shape)
        S[..., 0, 0] = (a + sd) / s
        S[..., 1, 1] = (c + sd) / s
        S[..., 0, 1] = S[..., 1, 0] = b / s
        nbad = int(np.count_nonzero(bad))
        if nbad:
            Msym = 0.5 * (M[bad] + np.swapaxes(M[bad], -1, -2))
            lam, Q = np.linalg.eigh(Msym)
            S[bad] = (Q * np.sqrt(np.clip(lam, 0, None))[..., None, :]) @ np.swapaxes(Q, -1, -2)
        return S, nbad
    Msym = 0.5 * (M + np.swapaxes(M, -1, -2))
    lam, Q = np.linalg.eigh(Msym)
    neg = np.any(lam < 0, axis=-1)
    return (Q * np.sqrt(np.clip(lam, 0, None))[..., None, :]) @ np.swapaxes(Q, -1, -2), int(np.count_nonzero(neg))


# -- integrators ---------------------------------------------------------------


def _chunks(n_paths, chunk):
    return [(c, c * chunk, min(n_paths, (c + 1) * chunk)) for c in range((n_paths + chunk - 1) // chunk)]


def _steps(T, dt):
    n = int(np.ceil(T / dt - 1e-9))
    return n, T / n


def _run_chunks(run, items, workers):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(run, items))
    return [run(it) for it in items]


def _assemble(kind, spec, parts, dt, n_steps, stride, extra=None):
    terminal = np.concatenate([pt["x"] for pt in parts])
    snaps = times = None
    if stride:
        snaps = np.concatenate([pt["snaps"] for pt in parts], axis=1)
        times = np.arange(0, n_steps + 1, stride)[: snaps.shape[0]] * dt
    tavg = {}
    if parts and parts[0]["tavg"]:
        for name in parts[0]["tavg"]:
            tavg[name] = np.concatenate([pt["tavg"][name] for pt in parts])
    return TrajectoryEnsemble(kind=kind, terminal=terminal, seed=spec.seed, spec_hash=spec.digest(kind, extra),
                              T=spec.T, dt=dt, times=times, snapshots=snaps, time_averages=tavg,
                              clamp_fraction=sum(pt.get("clamped", 0) for pt in parts) / max(1, spec.n_paths * n_steps))


def simulate_full(spec: SimulationSpec, time_averages: Optional[dict] = None, burn_in: float = 0.0,
                  workers: int = 1) -> TrajectoryEnsemble:
    """Euler-Maruyama for the full multiscale dynamics.

    ``time_averages`` maps names to callables f(x) whose running average over
    ``(burn_in, T]`` is recorded per path.
    """
    p = spec.potential
    d = p.dim
    dt0 = spec.full_dt()
    n_steps, dt = _steps(spec.T, dt0)
    view = p.epsilon_view(spec.epsilon)
    noise = np.sqrt(2.0 * spec.sigma * dt)
    limit = 4.0 * float(np.max(np.abs(spec.safety_box)))
    stride = spec.snapshot_stride
    first_avg = int(np.floor(burn_in / dt))
    tav = time_averages or {}

    def run(item):
        c, lo, hi = item
        rng = chunk_rng(spec.seed, c)
        n = hi - lo
        x = spec.initial.sample(rng, n, d)
        snaps = [x.copy()] if stride else None
        acc = {k: np.zeros(n) for k in tav}
        for step in range(1, n_steps + 1):
            dw = rng.standard_normal((n, d))
            x = x - dt * view.grad(x) + noise * dw
            if np.max(np.abs(x)) > limit:
                raise BlowUpError(f"full-model path left the safety box at step {step}", step=step)
            if step > first_avg:
                for k, f in tav.items():
                    acc[k] += f(x)
            if stride and step % stride == 0:
                snaps.append(x.copy())
        count = max(1, n_steps - first_avg)
        return {"x": x, "snaps": np.stack(snaps) if stride else None,
                "tavg": {k: v / count for k, v in acc.items()}}

    parts = _run_chunks(run, _chunks(spec.n_paths, spec.chunk), workers)
    return _assemble("full", spec, parts, dt, n_steps, stride)


def simulate_homogenized(spec: SimulationSpec, model: EffectiveModel, workers: int = 1,
                         max_clamp_fraction: float = MAX_CLAMP_FRACTION) -> TrajectoryEnsemble:
    """Euler-Maruyama for the homogenized multiplicative-noise dynamics (Ito)."""
    p = spec.potential
    d = p.dim
    if model.dim != d:
        raise InputError("model and potential dimensions differ")
    if not spec.sigma > 0:
        raise InputError("the homogenized model needs sigma > 0")
    if abs(model.sigma - spec.sigma) > 1e-12 * max(1.0, spec.sigma):
        raise InputError("model was tabulated at a different temperature")
    n_steps, dt = _steps(spec.T, spec.homog_dt())
    noise = np.sqrt(2.0 * spec.sigma * dt)
    evaluator = model.coefficients()
    limit = 4.0 * float(np.max(np.abs(spec.safety_box)))
    stride = spec.snapshot_stride
    const = evaluator.const is not None
    if const:
        S_const = psd_sqrt(evaluator.const[0])

    def run(item):
        c, lo, hi = item
        rng = chunk_rng(spec.seed, c)
        n = hi - lo
        x = spec.initial.sample(rng, n, d)
        snaps = [x.copy()] if stride else None
        clamped = 0
        for step in range(1, n_steps + 1):
            dw = rng.standard_normal((n, d))
            M, drift = evaluator(x)
            if const:
                S = S_const
                x = x + dt * drift + noise * (dw @ S.T)
            else:
                S, bad = _sqrt_clamped(M)
                clamped += bad
                x = x + dt * drift + noise * np.einsum("nij,nj->ni", S, dw)
            if np.max(np.abs(x)) > limit:
                raise BlowUpError(f"homogenized path left the safety box at step {step}", step=step)
            if stride and step % stride == 0:
                snaps.append(x.copy())
        return {"x": x, "snaps": np.stack(snaps) if stride else None, "tavg": {}, "clamped": clamped}

    parts = _run_chunks(run, _chunks(spec.n_paths, spec.chunk), workers)
    ens = _assemble("homogenized", spec, parts, dt, n_steps, stride,
                    extra={"model": model.meta.get("potential"), "shape": list(model.shape)})
    if ens.clamp_fraction > max_clamp_fraction:
        raise NotPSDError(f"PSD repair needed on {ens.clamp_fraction:.2%} of path steps "
                          f"(limit {max_clamp_fraction:.2%})")
    return ens


# -- weak error -------------------------------------------------------------------


@dataclass
class WeakErrorRow:
    observable: str
    full: float
    full_se: float
    homog: float
    homog_se: float

    @property
    def gap(self):
        return abs(self.full - self.homog)

    @property
    def se(self):
        return float(np.hypot(self.full_se, self.homog_se))

    def ci(self, z=1.96):
        return (self.full - self.homog - z * self.se, self.full - self.homog + z * self.se)


def weak_error(full: TrajectoryEnsemble, homog: TrajectoryEnsemble, observables: Optional[dict] = None,
               rtol: float = 1e-9) -> list:
    """|E f(X_T^eps) - E f(X_T^0)| with standard errors per observable."""
    if abs(full.T - homog.T) > rtol * max(full.T, homog.T):
        raise InputError(f"ensembles end at different times ({full.T} vs {homog.T})")
    if full.terminal.shape[1] != homog.terminal.shape[1]:
        raise InputError("ensembles have different dimensions")
    obs = observables or default_observables(full.terminal.shape[1])
    rows = []
    for name, f in obs.items():
        a = np.asarray(f(full.terminal), dtype=float)
        b = np.asarray(f(homog.terminal), dtype=float)
        rows.append(WeakErrorRow(name, float(a.mean()), float(a.std(ddof=1) / np.sqrt(len(a))),
                                 float(b.mean()), float(b.std(ddof=1) / np.sqrt(len(b)))))
    return rows


def weak_error_csv(path, rows, label=""):
    with open(path, "w") as fh:
        fh.write("label,observable,full,full_se,homog,homog_se,gap,se,ci_lo,ci_hi\n")
        for r in rows:
            lo, hi = r.ci()
            fh.write(f"{label},{r.observable},{r.full!r},{r.full_se!r},{r.homog!r},{r.homog_se!r},"
                     f"{r.gap!r},{r.se!r},{lo!r},{hi!r}\n")
