"""Command-line front end.

    glvortex eigen --config run.json --out results/
    glvortex verify

Exit status is 0 on success, 2 when a result contradicts the theory
(count, index, edge, kernel-dimension or rule mismatches) and 1 for any
other failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load
from .errors import ConfigError, TheoremContradiction, VortexError
from .io import config_hash, envelope, write_csv, write_json
from .settings import Settings, use_settings

COMMANDS = ("eigen", "equilibria", "diagram", "attractor", "spiral", "evolve", "verify")
THREADS_ENV = "GLVORTEX_THREADS"


def _threads(arg) -> int:
    if arg is not None:
        return max(1, int(arg))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


class Run:
    """Shared state of one invocation: config, output directory, settings."""

    def __init__(self, command, cfg: RunConfig, out: Path, threads: int, settings: Settings):
        self.command, self.cfg, self.out = command, cfg, out
        self.threads, self.settings = threads, settings
        raw = dict(cfg.raw)
        raw["_settings"] = settings.__dict__
        self.key = raw
        self.hash = config_hash(raw)

    def json(self, name, result):
        return write_json(self.out / name, envelope(self.command, self.key, result))

    def csv(self, name, header, rows):
        return write_csv(self.out / name, header, rows,
                         comment=f"config_hash={self.hash} version={__version__}")


# -- commands -----------------------------------------------------------------------

def cmd_eigen(run: Run):
    from .sturm import bifurcation_points
    cfg = run.cfg
    spectrum = bifurcation_points(cfg.surface, cfg.m, cfg.count)
    run.json("eigen.json", {"surface": cfg.surface.ident, "m": cfg.m,
                            "lambdas": [float(x) for x in spectrum.lambdas]})


def _equilibria(run: Run, lam=None, mesh=None):
    from .discretize import build_mesh
    from .equilibria import solve_all
    from .shooting import ScanConfig
    cfg = run.cfg
    lam = cfg.require_lambda() if lam is None else lam
    nodes = build_mesh(cfg.surface, mesh or cfg.mesh)
    return solve_all(cfg.surface, cfg.m, lam, nodes=nodes, scan=ScanConfig(**cfg.scan))


def cmd_equilibria(run: Run):
    eqs = _equilibria(run)
    run.json("equilibria.json", {"surface": run.cfg.surface.ident, "m": run.cfg.m,
                                 "lambda": run.cfg.lam, "equilibria": [e.summary() for e in eqs]})
    header = ["s"] + [e.label for e in eqs]
    run.csv("equilibria.csv", header, np.column_stack([eqs[0].s] + [e.u for e in eqs]).tolist())


def cmd_diagram(run: Run):
    from .equilibria import diagram
    cfg = run.cfg
    if cfg.lam_range is None:
        raise ConfigError("field 'lambda_range': required for diagram")
    dia = diagram(cfg.surface, cfg.m, cfg.lam_range, cfg.steps, threads=run.threads, mesh=cfg.mesh)
    run.json("diagram.json", dia.to_json())


def cmd_attractor(run: Run):
    from .attractor import connection_graph, is_chafee_infante
    eqs = _equilibria(run)
    graph = connection_graph(eqs, run.cfg.surface.ident)
    k = max(e.branch[0] for e in eqs if not e.trivial) if len(eqs) > 1 else -1
    result = graph.to_json()
    result["k"] = k
    result["chafee_infante"] = bool(k >= 0 and is_chafee_infante(graph, k))
    run.json("attractor.json", result)
    (run.out / "attractor.dot").write_text(graph.to_dot())


def cmd_spiral(run: Run):
    from .spiral import sweep
    cfg = run.cfg
    eqs = [e for e in _equilibria(run) if not e.trivial]
    wanted = cfg.sources or [e.label for e in eqs]
    unknown = set(wanted) - {e.label for e in eqs}
    if unknown:
        raise ConfigError(f"field 'sources': no equilibria labelled {sorted(unknown)}")
    path = cfg.path or [(0.0, 0.0), (0.05, 0.02)]
    result = {}
    for src in (e for e in eqs if e.label in wanted):
        res = sweep(src, cfg.surface, path)
        result[src.label] = [w.summary() for w in res.waves]
        last = res.waves[-1]
        run.csv(f"spiral_{src.label}.csv", ["s", "uR", "uI"],
                np.column_stack([last.s, last.uR, last.uI]).tolist())
    run.json("spiral.json", {"lambda": cfg.lam, "path": [list(p) for p in path], "sweeps": result})


def cmd_evolve(run: Run):
    from . import evolve
    cfg = run.cfg
    lam = cfg.require_lambda()
    eqs = evolve.evolve_equilibria(cfg.surface, cfg.m, lam, cfg.evolve_mesh)
    if cfg.initial is None:
        report, traces = evolve.harvest(eqs, lam, cfg.surface, threads=run.threads, keep_traces=True)
        run.json("harvest.json", report.to_json())
        header = ["t"] + [f"u{i}" for i in range(len(eqs[0].s))] + ["E"]
        for dep, tr in zip(report.departures, traces):
            name = f"trace_{dep.src}_mode{dep.mode}_{'plus' if dep.sign > 0 else 'minus'}.csv"
            run.csv(Path("traces") / name, header, tr.rows())
        return
    init = cfg.initial
    op = evolve.FVOperator.build(cfg.surface, cfg.m, eqs[0].s)
    lib = evolve.discrete_library(eqs, op)
    try:
        base = next(e for e in lib if e.label == init.get("from", "0"))
    except StopIteration:
        raise ConfigError(f"field 'initial': no equilibrium labelled {init.get('from')!r}") from None
    mode = int(init.get("mode", 0))
    eps = float(init.get("eps", run.settings.perturbation))
    if mode >= len(base.eigenvectors):
        vals, vecs = evolve.linearized_spectrum(op, base.u, lam, mode + 1)
        direction = vecs[mode]
    else:
        direction = base.eigenvectors[mode]
    trace = evolve.integrate(base.u + eps * direction, lam, cfg.T or run.settings.t_max, op)
    summary = {"lambda": lam, "from": base.label, "mode": mode, "eps": eps,
               "t_end": float(trace.times[-1]), "stationary": trace.stationary,
               "max_energy_increase": trace.max_energy_increase}
    if trace.stationary:
        label, dist = evolve.omega_limit(trace, lib, op)
        summary.update(omega_limit=label, match_distance=dist)
    run.json("evolve.json", summary)
    run.csv("trace.csv", ["t"] + [f"u{i}" for i in range(len(op.nodes))] + ["E"], trace.rows())


def cmd_verify(run: Run) -> int:
    from .acceptance import run_all
    outcomes = run_all()
    run.json("verify.json", [{"criterion": o.number, "title": o.title, "passed": o.passed,
                              "detail": o.detail} for o in outcomes])
    if any(o.contradiction for o in outcomes):
        return 2
    return 0 if all(o.passed for o in outcomes) else 1


HANDLERS = {"eigen": cmd_eigen, "equilibria": cmd_equilibria, "diagram": cmd_diagram,
            "attractor": cmd_attractor, "spiral": cmd_spiral, "evolve": cmd_evolve,
            "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration (JSON)")
    common.add_argument("--out", type=Path, help="output directory (default: config 'out' or ./out)")
    common.add_argument("--threads", type=int, help=f"worker processes (default ${THREADS_ENV} or 1)")
    common.add_argument("--tol-scale", type=float, default=1.0,
                        help="multiply every error tolerance by this factor")
    parser = argparse.ArgumentParser(prog="glvortex", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HANDLERS[name].__name__.replace("cmd_", ""))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.tol_scale is None or not args.tol_scale > 0:
            raise ConfigError("--tol-scale must be positive")
        if args.command == "verify" and args.config is None:
            from .geometry import make_sphere
            cfg = RunConfig(make_sphere(), 1, raw={"command": "verify"})
        elif args.config is None:
            raise ConfigError(f"{args.command} needs --config")
        else:
            cfg = load(args.config)
        settings = cfg.settings().scaled(args.tol_scale)
        out = args.out or Path(cfg.out)
        run = Run(args.command, cfg, out, _threads(args.threads), settings)
        with use_settings(settings):
            status = HANDLERS[args.command](run)
        return int(status or 0)
    except TheoremContradiction as exc:
        print(f"glvortex: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (VortexError, OSError, ValueError) as exc:
        print(f"glvortex: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
