"""Command-line front end: ``nscale {solve,simulate,analyze,bounds,all} CONFIG``.

Every command writes CSV files plus ``manifest.json`` into the run directory
``$NSCALE_OUTPUT_ROOT/<output>`` (the root defaults to ``./runs``).  Exit
codes: 0 success, 2 configuration/input error, 3 numerical failure,
4 bound or invariant violation.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .errors import ConfigError, InputError, NScaleError
from .potential import default_box, make_potential, oscillation, OscillationSampling

log = logging.getLogger("nscale")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VIOLATION = 0, 2, 3, 4
OUTPUT_ROOT_ENV = "NSCALE_OUTPUT_ROOT"


class InvariantViolation(NScaleError):
    """A checked bound or invariant failed; maps to exit code 4."""


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class Run:
    """Run directory, resolved config and manifest bookkeeping."""

    def __init__(self, cfg, root=None, workers=None):
        self.cfg = cfg
        base = Path(root or os.environ.get(OUTPUT_ROOT_ENV) or "runs")
        self.dir = base / (cfg.get("output") or cfg["name"])
        self.dir.mkdir(parents=True, exist_ok=True)
        self.workers = int(workers or cfg.get("workers") or 1)
        self.potential = make_potential(cfg["potential"])
        self.sigma = float(cfg["sigma"])
        self.produced = []
        self.started = _now()
        self._t0 = time.perf_counter()

    def path(self, name):
        p = self.dir / name
        self.produced.append(p)
        return p

    @property
    def box(self):
        b = self.cfg["solver"]["box"]
        return np.asarray(b, dtype=float) if b is not None else default_box(self.potential, self.sigma)

    def write_manifest(self, command):
        mpath = self.dir / "manifest.json"
        man = {}
        if mpath.exists():
            try:
                man = json.loads(mpath.read_text())
            except json.JSONDecodeError:
                man = {}
        files = man.get("files", {})
        for p in self.produced:
            files[p.name] = {"sha256": _sha256(p), "bytes": p.stat().st_size}
        runs = man.get("runs", {})
        elapsed = time.perf_counter() - self._t0
        budget = self.cfg.get("time_budget_s")
        runs[command] = {"started": self.started, "finished": _now(), "elapsed_s": round(elapsed, 3),
                         "within_budget": None if budget is None else bool(elapsed <= budget),
                         "outputs": sorted({p.name for p in self.produced})}
        if budget is not None and elapsed > budget:
            log.warning("%s took %.1fs, over the declared budget of %gs", command, elapsed, budget)
        man.update(config_hash=cfgmod.config_hash(self.cfg), version=__version__,
                   config=self.cfg, files=dict(sorted(files.items())), runs=runs)
        mpath.write_text(json.dumps(man, indent=2, sort_keys=True, default=str) + "\n")
        self.produced = []
        return mpath


# -- stages -------------------------------------------------------------------


def stage_solve(run: Run):
    from .effective import tabulate

    s = run.cfg["solver"]
    t0 = time.perf_counter()
    model = tabulate(run.potential, run.sigma, box=run.box, nodes=s["x_nodes"], grids=s["torus_n"],
                     tol=s["tol"], scheme=s["scheme"], workers=run.workers, max_iter=s["max_iter"])
    model.to_csv(run.path("model.csv"))
    log.info("solve: %d nodes in %.1fs, residual %.2e", model.M[..., 0, 0].size,
             time.perf_counter() - t0, model.meta.get("residual", float("nan")))
    return model


def _load_or_solve(run: Run, model_path=None):
    from .effective import EffectiveModel

    path = Path(model_path) if model_path else run.dir / "model.csv"
    if path.exists():
        return EffectiveModel.from_csv(path, potential=run.potential)
    if model_path:
        raise ConfigError(f"model file not found: {model_path}")
    return stage_solve(run)


def _eps_tag(e):
    return f"{e:g}".replace(".", "p")


def stage_simulate(run: Run, model_path=None):
    from .sde import SimulationSpec, simulate_full, simulate_homogenized, weak_error, weak_error_csv

    c = run.cfg["sde"]
    common = dict(potential=run.potential, sigma=run.sigma, T=c["T"], n_paths=c["n_paths"],
                  seed=run.cfg["seed"], initial=c["initial"], chunk=c["chunk"], box=run.box)
    homog = None
    if c["homogenized"]:
        model = _load_or_solve(run, model_path)
        spec = SimulationSpec(dt=c["dt_homog"], **common)
        homog = simulate_homogenized(spec, model, workers=run.workers)
        homog.to_csv(run.path("ensemble_homog.csv"))
        if c["dump_terminal"]:
            homog.dump_terminal(run.path("terminal_homog.csv"))
    fulls = []
    if c["full"]:
        for e in run.cfg["epsilons"]:
            spec = SimulationSpec(epsilon=e, dt=c["dt"], stability_c=c["stability_c"], **common)
            ens = simulate_full(spec, workers=run.workers)
            tag = _eps_tag(e)
            ens.to_csv(run.path(f"ensemble_full_eps{tag}.csv"))
            if c["dump_terminal"]:
                ens.dump_terminal(run.path(f"terminal_full_eps{tag}.csv"))
            fulls.append((e, ens))
    if homog is not None and fulls:
        path = run.path("weak_error.csv")
        with open(path, "w") as fh:
            fh.write("epsilon,observable,full,full_se,homog,homog_se,gap,se,ci_lo,ci_hi\n")
        for e, ens in fulls:
            rows = weak_error(ens, homog)
            tmp = run.dir / ".weak_error.part"
            weak_error_csv(tmp, rows, label=repr(e))
            with open(tmp) as src, open(path, "a") as fh:
                fh.writelines(src.readlines()[1:])
            tmp.unlink()
    return homog, fulls


def _v1_alpha(p):
    params = (p.params.get("V1") or {}).get("params") or {}
    if (p.params.get("V1") or {}).get("name") == "cosine" and not params.get("coupling"):
        return float(params.get("alpha", 1.0))
    return None


def stage_analyze(run: Run):
    from . import equilibrium as eq
    from .effective import closed_form_1d

    a = run.cfg["analysis"]
    p, sigma = run.potential, run.sigma
    box = np.asarray(a["box"], dtype=float) if a["box"] is not None else run.box
    npp = a["nodes_per_period"]
    eps = sorted((float(e) for e in run.cfg["epsilons"]), reverse=True)
    violations = []
    if a["weak_convergence"] and p.dim <= 2:
        table = eq.weak_convergence_test(p, sigma, epsilons=eps, box=box, nodes_per_period=npp)
        table.to_csv(run.path("equilibrium_gaps.csv"))
    if a["tv_kl"]:
        s = None if _v1_alpha(p) is None else _v1_alpha(p) / sigma
        path = run.path("tv_kl.csv")
        with open(path, "w") as fh:
            fh.write("epsilon,tv,kl,tv_lower_bound,K_limit\n")
            for e in sorted(set(eps + [float(a["tv_kl_epsilon"])]), reverse=True):
                pe = eq.gibbs_density(p, sigma, e, box, npp)
                p0 = eq.coarse_density(p, sigma, axes=pe.axes)
                lb = float(eq.tv_lower_bound(s)) if s else float("nan")
                kl_lim = float(eq.K_of_s(s)) if s else float("nan")
                fh.write(f"{e!r},{eq.tv_distance(pe, p0)!r},{eq.kl_divergence(pe, p0)!r},{lb!r},{kl_lim!r}\n")
    if a["k_curve"]:
        s = np.geomspace(0.01, 20.0, 200)
        np.savetxt(run.path("k_curve.csv"), np.column_stack([s, eq.K_of_s(s), eq.tv_lower_bound(s)]),
                   delimiter=",", header="s,K,tv_lower_bound", fmt="%.17g", comments="")
    if a["spectral_gap"] and p.dim == 1:
        e = float(a["spectral_gap_epsilon"])
        osc = oscillation(p, OscillationSampling(box=box.tolist()))
        ref = eq.reference_density(p, sigma, box, n=8001)
        rho = eq.spectral_gap_1d(ref)
        g_eps = eq.spectral_gap_1d(eq.gibbs_density(p, sigma, e, box, npp))
        p0 = eq.coarse_density(p, sigma, box, n=4001)
        m = closed_form_1d(p, sigma, p0.axes[0]).M
        g0 = eq.spectral_gap_1d(p0, mobility=m)
        rows = [("reference", rho, rho), ("full", g_eps, float(rho * np.exp(-2 * osc / sigma))),
                ("homogenized", g0, float(rho * np.exp(-3 * osc / sigma)))]
        with open(run.path("spectral_gap.csv"), "w") as fh:
            fh.write(f"# epsilon={e!r} osc={osc!r}\nmeasure,gap,lower_bound\n")
            for name, g, lb in rows:
                fh.write(f"{name},{g!r},{lb!r}\n")
        for name, g, lb in rows[1:]:
            if g < lb:
                violations.append(f"spectral gap of {name} measure {g:.4g} below bound {lb:.4g}")
    if a["muckenhoupt"]:
        e = float(a["muckenhoupt_epsilon"])
        n = np.arange(1, int(a["muckenhoupt_n"]) + 1)
        prof = eq.muckenhoupt_profile(float(a["muckenhoupt_alpha"]), sigma, e, eq.muckenhoupt_radii(e, n))
        prof.to_csv(run.path("muckenhoupt.csv"))
    if violations:
        raise InvariantViolation("; ".join(violations))


def stage_bounds(run: Run, model_path=None):
    from .bounds import check_bound_chain, ellipticity_floor
    from .torus import solve_hierarchy

    b = run.cfg["bounds"]
    s = run.cfg["solver"]
    model = _load_or_solve(run, model_path)
    report = check_bound_chain(model, run.potential, run.sigma, n_random=b["n_random"],
                               seed=run.cfg["seed"], tol=b["tol"])
    report.to_csv(run.path("bounds.csv"))
    rng = np.random.default_rng(run.cfg["seed"])
    box = run.box
    pts = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((b["floor_points"], run.potential.dim))
    grids = s["torus_n"] if s["torus_n"] is not None else model.meta.get("torus_n")
    H = solve_hierarchy(run.potential, run.sigma, pts, grids, tol=s["tol"], scheme=s["scheme"],
                        max_iter=s["max_iter"], workers=run.workers)
    floor = ellipticity_floor(H, tol=b["tol"])
    with open(run.path("ellipticity.csv"), "w") as fh:
        fh.write("level,margin\n")
        for j, m in sorted(floor.margins.items()):
            fh.write(f"{j},{m!r}\n")
    problems = []
    if not report.passed:
        problems.append(f"bound chain violated: {report.worst}")
    if not floor.passed:
        problems.append(f"ellipticity floor violated: {floor.margins}")
    if problems:
        raise InvariantViolation("; ".join(problems))
    return report, floor


# -- entry point ------------------------------------------------------------


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="YAML experiment file")
    common.add_argument("--output-root", help=f"run root (default ${OUTPUT_ROOT_ENV} or ./runs)")
    common.add_argument("--workers", type=int, help="cap on worker threads")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field, e.g. sde.n_paths=1000 (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")
    ap = argparse.ArgumentParser(prog="nscale", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"nscale {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="tabulate the effective model")
    sp = sub.add_parser("simulate", parents=[common], help="run full and homogenized ensembles")
    sp.add_argument("--model", help="existing model CSV (default: run dir, else solve)")
    sub.add_parser("analyze", parents=[common], help="equilibrium analyses")
    bp = sub.add_parser("bounds", parents=[common], help="bound chain and ellipticity floors")
    bp.add_argument("--model", help="existing model CSV")
    sub.add_parser("all", parents=[common], help="solve, bounds, simulate, analyze")
    sc = sub.add_parser("schema", help="print the configuration JSON schema")
    sc.set_defaults(config=None)
    return ap


def _resolve_config(args):
    raw = cfgmod.load_raw(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    raw = cfgmod.apply_overrides(raw, args.set)
    cfg = cfgmod.validate(raw)
    if not cfg.get("output"):
        cfg["output"] = cfg["name"]
    return cfg


def run_command(command, cfg, output_root=None, workers=None, model_path=None):
    """Run one command on a validated config; returns the run directory."""
    run = Run(cfg, root=output_root, workers=workers)
    stages = {
        "solve": lambda: stage_solve(run),
        "simulate": lambda: stage_simulate(run, model_path),
        "analyze": lambda: stage_analyze(run),
        "bounds": lambda: stage_bounds(run, model_path),
    }
    order = ["solve", "bounds", "simulate", "analyze"] if command == "all" else [command]
    try:
        for name in order:
            stages[name]()
    finally:
        run.write_manifest(command)
    return run.dir


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "schema":
        print(json.dumps(cfgmod.schema(), indent=2))
        return EXIT_OK
    try:
        cfg = _resolve_config(args)
        out = run_command(args.command, cfg, args.output_root, args.workers, getattr(args, "model", None))
    except InvariantViolation as exc:
        print(f"nscale: invariant violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (ConfigError, InputError) as exc:
        suggestion = getattr(exc, "suggested_dt", None)
        extra = f" (suggested dt={suggestion:.3g})" if suggestion else ""
        print(f"nscale: {type(exc).__module__}.{type(exc).__name__}: {exc}{extra}", file=sys.stderr)
        return EXIT_CONFIG
    except NScaleError as exc:
        print(f"nscale: numerical failure [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
