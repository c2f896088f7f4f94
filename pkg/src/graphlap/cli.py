"""Command-line entry point: ``graphlap <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import io
from .bayes import posterior_summary
from .graph import build_graph
from .harness import (
    ExperimentConfig,
    emit_plots,
    parse_override,
    prior2_spec,
    run_diagnostics,
    run_experiment,
    tuned_jh,
)
from .manifold import ManifoldSpec, sample_cloud
from .spectral import decompose

log = logging.getLogger("graphlap")


def _config(args) -> ExperimentConfig:
    overrides = [parse_override(s) for s in (args.set or [])]
    if args.seed is not None:
        overrides.append(("seed", args.seed))
    if args.out is not None:
        overrides.append(("output_dir", args.out))
    if args.jobs is not None:
        overrides.append(("jobs", args.jobs))
    if args.config:
        return ExperimentConfig.from_file(args.config, overrides)
    return ExperimentConfig.from_dict({}, overrides)


def _out(args, default: str) -> Path:
    return Path(args.out) if args.out else Path(default)


def cmd_sample(args) -> int:
    cfg = _config(args)
    spec = cfg.manifold_spec(cfg["seed"])
    cloud = sample_cloud(spec, args.N, args.family or cfg["truth"]["family"])
    path = io.save_cloud(cloud, _out(args, "cloud.csv"))
    print(f"wrote {cloud.n_points} points to {path}")
    return 0


def cmd_graph(args) -> int:
    cloud = io.load_cloud(args.cloud)
    g = build_graph(cloud, args.h)
    path = io.save_graph(g, _out(args, "graph.txt"))
    print(f"N={g.n_vertices} edges={len(g.edges())} components={g.n_components} -> {path}")
    return 0


def cmd_spectrum(args) -> int:
    cloud = io.load_cloud(args.cloud)
    g = build_graph(cloud, args.h)
    basis = decompose(g, min(args.J, g.n_vertices))
    csv_path, _ = io.save_spectrum(basis, _out(args, "spectrum"))
    print(f"{basis.J_max} eigenpairs, max residual {basis.residuals.max():.2e} -> {csv_path}")
    return 0


def _dataset_for(cfg: ExperimentConfig, n: int):
    from .estimators import make_dataset

    N = cfg.N_of(n)
    rng = np.random.SeedSequence([cfg["seed"], n]).generate_state(2)
    cloud = sample_cloud(cfg.manifold_spec(int(rng[0])), N, cfg["truth"]["family"])
    return make_dataset(cloud, n, cfg["sigma"], int(rng[1]))


def cmd_fit(args) -> int:
    from .estimators import pcr_le

    cfg = _config(args)
    n = args.n or cfg["n_grid"][0]
    data = _dataset_for(cfg, n)
    J, h = tuned_jh(cfg, n, data.N)
    if args.J:
        J = args.J
    if args.h:
        h = args.h
    basis = decompose(build_graph(data.cloud, h), min(J, data.N))
    fit = pcr_le(data, basis, min(J, basis.J_max))
    out = _out(args, "fit.json")
    io.write_json(out, {"estimator": fit.estimator, "n": n, "N": data.N, "J": fit.J, "h": fit.h,
                        "loss_n": fit.loss_n, "loss_N": fit.loss_N, "runtime": fit.runtime})
    print(f"pcr-le n={n} J={fit.J} h={fit.h:.4g} loss_n={fit.loss_n:.4g} -> {out}")
    return 0


def cmd_posterior(args) -> int:
    from .bayes import BasisProvider, default_J_cap, posterior_gaussian

    cfg = _config(args)
    n = args.n or cfg["n_grid"][0]
    data = _dataset_for(cfg, n)
    J_cap = cfg["prior"].get("J_cap") or default_J_cap(n, data.N, cfg.d)
    spec = prior2_spec(cfg, n)
    res = posterior_gaussian(data, spec, BasisProvider(data.cloud, J_cap),
                             S=cfg["prior"]["draws"], J_cap=J_cap, seed=cfg["seed"])
    summary = posterior_summary(res, data)
    path = io.save_posterior(summary, res.posterior_mean, _out(args, "posterior"),
                             draws=res.f_draws if args.save_draws else None)
    print(f"modal J={res.modal_J} mean loss_n={summary.get('mean_loss_n', math.nan):.4g} "
          f"-> {path}")
    return 0


def cmd_diagnose(args) -> int:
    cfg = _config(args)
    if args.checks:
        cfg.data["diagnostics"]["checks"] = args.checks.split(",")
        cfg.validate()
    report = run_diagnostics(cfg)
    print(report.table())
    out = _out(args, "diagnostics.json")
    io.write_json(out, report.to_dict())
    return 0 if report.all_passed else 1


def cmd_rates(args) -> int:
    cfg = _config(args)
    reports = run_experiment(cfg)
    ok = True
    for est, rep in reports.items():
        verdict = {True: "PASS", False: "FAIL", None: "info"}[rep.passed]
        print(f"{est:8s} slope {rep.slope:+.3f} +- {rep.stderr:.3f} "
              f"(target {rep.target:+.3f}, band {rep.band}) {verdict}")
        ok = ok and rep.passed is not False
    return 0 if ok else 1


def cmd_plots(args) -> int:
    cfg = _config(args)
    src = Path(args.run_dir or cfg["output_dir"])
    for p in emit_plots(src, render=not args.no_render):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--jobs", type=int, help="worker processes for sweeps")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key, e.g. --set tuning.J_const=4")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="graphlap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="sample a point cloud")
    p.add_argument("-N", type=int, default=1000)
    p.add_argument("--family", help="truth family, e.g. trig-2 or holder-kink(0.5)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("graph", parents=[common], help="build the radius graph of a cloud")
    p.add_argument("cloud")
    p.add_argument("--h", type=float, required=True)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("spectrum", parents=[common], help="smallest Laplacian eigenpairs")
    p.add_argument("cloud")
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--J", type=int, default=50)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("fit", parents=[common], help="PCR-LE fit at one n")
    p.add_argument("--n", type=int)
    p.add_argument("--J", type=int)
    p.add_argument("--h", type=float)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("posterior", parents=[common], help="adaptive posterior at one n")
    p.add_argument("--n", type=int)
    p.add_argument("--save-draws", action="store_true")
    p.set_defaults(func=cmd_posterior)

    p = sub.add_parser("diagnose", parents=[common], help="run diagnostic checks")
    p.add_argument("--checks", help="comma-separated subset of checks")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("rates", parents=[common], help="run the rate sweep")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("plots", parents=[common], help="emit plot data for a finished sweep")
    p.add_argument("run_dir", nargs="?")
    p.add_argument("--no-render", action="store_true")
    p.set_defaults(func=cmd_plots)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except jsonschema.ValidationError as exc:
        print(f"error: invalid configuration: {exc.message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
