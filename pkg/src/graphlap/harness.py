"""Configuration-driven experiment sweeps, diagnostics runs and plot data.

A configuration is a single JSON document validated against
``config_schema.json``; missing keys fall back to :data:`DEFAULT_CONFIG`,
which describes the standard circle experiment.
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import io
from .bayes import (
    BasisProvider,
    DyadicH,
    FixedH,
    FixedJ,
    GaussianPsi,
    GeometricJ,
    PoissonJ,
    PriorSpec,
    credible_radius,
    default_J_cap,
    dyadic_levels,
    h_star,
    posterior_gaussian,
    posterior_summary,
)
from .diagnostics import (
    CheckResult,
    DiagnosticsReport,
    EmptyWindowError,
    check_approximation,
    check_concentration,
    check_heat_bounds,
    check_norm_comparison,
    check_volume_regularity,
    check_weyl,
    concentration_trend,
    weyl_bandwidth,
    weyl_spectrum,
    weyl_window,
)
from .estimators import RateReport, empirical_losses, empirical_rate, make_dataset, pcr_le, tune_jh
from .graph import build_graph
from .manifold import ManifoldSpec, family_smoothness, sample_cloud
from .spectral import decompose

log = logging.getLogger(__name__)

LEDGER_FIELDS = ["n", "N", "J", "h", "beta", "replicate", "loss_n", "loss_N", "estimator"]
POSTERIOR_FIELDS = ["n", "replicate", "estimator", "modal_J", "modal_h",
                    "radius_n_90", "radius_N_90"]

DEFAULT_CONFIG: dict = {
    "name": "standard-circle",
    "manifold": {"kind": "circle", "ambient_dim": 3, "density": "uniform", "tilt": [],
                 "rotation_seed": 0},
    "truth": {"family": "trig-2", "beta": 2.0},
    "sigma": 0.1,
    "n_grid": [100, 200, 400, 800, 1600],
    "N_rule": {"kind": "equal"},
    "estimators": ["pcr-le"],
    "tuning": {"mode": "theorem", "tau": 1.0, "h_log_exponent": 0.0, "J_log_exponent": 0.0,
               "h_const": 1.0, "J_const": 5.0},
    "prior": {"s2": 1.0, "j_prior": {"kind": "geometric", "p": 0.5},
              "h_grid": {"m_n": 1.0, "h_max": 1.0, "mass": "inverse-gamma", "a": 1.0,
                         "lam": 1.0, "include_tuned_h": False},
              "J_cap": None, "draws": 200},
    "replicates": 20,
    "seed": 0,
    "jobs": 1,
    "output_dir": "runs/standard-circle",
    "rate_bands": {"pcr-le": [-0.55, -0.25], "prior1": [-0.55, -0.25],
                   "prior2": [-0.55, -0.20]},
    "diagnostics": {
        "checks": ["weyl", "heat_bounds", "concentration", "approximation",
                   "norm_comparison", "volume_regularity"],
        "N": 2000, "h": None,
        "concentration_Ns": [250, 500, 1000, 2000], "concentration_h_const": 1.5,
        "concentration_family": "trig-1", "M_mc": 200_000, "concentration_tol": 0.3,
        "heat_a0": 64.0, "heat_slope_tol": 0.35, "heat_band_factor": 50.0,
        "weyl_tol": 0.4, "weyl_window_ratio": 3.0,
        "approximation_c": 4.0, "approximation_J_grid": [4, 8, 16, 32],
        "approximation_band": 0.10, "norm_trials": 200, "volume_bound": 10.0,
    },
}


def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("config_schema.json").read_text())


def deep_merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_path(cfg: dict, dotted: str, value) -> None:
    """Set ``cfg['a']['b'] = value`` for ``dotted = 'a.b'``."""
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def parse_override(text: str) -> tuple[str, object]:
    """``'a.b=1.5'`` -> ``('a.b', 1.5)``; values are JSON, falling back to strings."""
    key, sep, raw = text.partition("=")
    if not sep:
        raise ValueError(f"override {text!r} is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


@dataclass
class ExperimentConfig:
    data: dict

    @classmethod
    def from_dict(cls, data: dict | None = None, overrides=()) -> "ExperimentConfig":
        cfg = deep_merge(DEFAULT_CONFIG, data or {})
        for key, value in overrides:
            set_path(cfg, key, value)
        out = cls(cfg)
        out.validate()
        return out

    @classmethod
    def from_file(cls, path, overrides=()) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()), overrides)

    def validate(self) -> None:
        jsonschema.validate(self.data, load_schema())
        ns = self.data["n_grid"]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if self.data["N_rule"]["kind"] == "power" and self.data["N_rule"].get("b", 1) < 1:
            raise ValueError("N_rule exponent b must be >= 1")
        self.manifold_spec(0)

    def __getitem__(self, key):
        return self.data[key]

    def manifold_spec(self, seed: int) -> ManifoldSpec:
        m = dict(self.data["manifold"])
        m["tilt"] = tuple(m.get("tilt", ()))
        return ManifoldSpec(seed=seed, **m)

    @property
    def d(self) -> int:
        return self.manifold_spec(0).intrinsic_dim

    @property
    def beta(self) -> float:
        b = self.data["truth"].get("beta")
        return float(b) if b is not None else family_smoothness(self.data["truth"]["family"])

    def N_of(self, n: int) -> int:
        rule = self.data["N_rule"]
        if rule["kind"] == "equal":
            return int(n)
        return int(math.ceil(n ** float(rule.get("b", 1.0))))

    def target_exponent(self) -> float:
        return -self.beta / (2 * self.beta + self.d)

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2)


# ---------------------------------------------------------------- cells


def cell_seeds(master: int, n: int, replicate: int) -> dict:
    """Independent integer seeds for one (n, replicate) cell."""
    ss = np.random.SeedSequence([int(master), int(n), int(replicate)])
    cloud, noise, post = ss.generate_state(3)
    return {"cloud": int(cloud), "noise": int(noise), "posterior": int(post)}


def tuned_jh(cfg: ExperimentConfig, n: int, N: int) -> tuple[int, float]:
    t = cfg["tuning"]
    if t["mode"] == "explicit":
        return int(min(t["J"], N)), float(t["h"])
    return tune_jh(n, N, cfg.d, cfg.beta, t.get("tau", 1.0), t.get("h_log_exponent"),
                   t.get("J_log_exponent"), t.get("h_const", 1.0), t.get("J_const", 1.0))


def _j_prior(spec: dict):
    if spec["kind"] == "geometric":
        return GeometricJ(spec.get("p", 0.5))
    return PoissonJ(spec.get("lam", 5.0))


def prior2_spec(cfg: ExperimentConfig, n: int, tuned_h: float | None = None) -> PriorSpec:
    p = cfg["prior"]
    g = p["h_grid"]
    D = cfg["manifold"]["ambient_dim"]
    hs = h_star(n, D, g.get("m_n", 1.0))
    L = dyadic_levels(hs, g.get("h_max", 1.0))
    h_prior = DyadicH(hs, L, lam=g.get("lam", 1.0), a=g.get("a", 1.0),
                      mass=g.get("mass", "inverse-gamma"), d=cfg.d)
    if tuned_h is not None and g.get("include_tuned_h"):
        h_prior = h_prior.with_point(tuned_h, 1.0 / (L + 2))
    return PriorSpec(GaussianPsi(p["s2"]), _j_prior(p["j_prior"]), h_prior, cfg["sigma"])


def run_cell(cfg_data: dict, n: int, replicate: int, estimators, save_dir: str | None = None):
    """Fit the requested estimators on one (n, replicate) draw.

    Returns ``(ledger_rows, posterior_rows, failures)``. Any exception inside
    an estimator becomes a failure row and does not stop the others.
    """
    cfg = ExperimentConfig(cfg_data)
    N = cfg.N_of(n)
    seeds = cell_seeds(cfg["seed"], n, replicate)
    rows, post_rows, failures = [], [], []
    beta = cfg.beta
    save = Path(save_dir) if save_dir is not None else None
    try:
        cloud = sample_cloud(cfg.manifold_spec(seeds["cloud"]), N, cfg["truth"]["family"])
        data = make_dataset(cloud, n, cfg["sigma"], seeds["noise"])
        J, h = tuned_jh(cfg, n, N)
    except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
        for est in estimators:
            rows.append(_row(n, N, "", "", beta, replicate, math.nan, math.nan, est))
            failures.append({"n": n, "replicate": replicate, "estimator": est,
                             "error": repr(exc)})
        return rows, post_rows, failures
    if save is not None:
        io.save_cloud(cloud, save / f"cloud_n{n}.csv")

    basis = None
    for est in estimators:
        try:
            if est in ("pcr-le", "prior1"):
                if basis is None:
                    basis = decompose(build_graph(cloud, h), J)
                    if save is not None:
                        io.save_spectrum(basis, save / f"spectrum_n{n}")
                if est == "pcr-le":
                    fit = pcr_le(data, basis, J)
                    rows.append(_row(n, N, J, h, beta, replicate, fit.loss_n, fit.loss_N, est))
                else:
                    provider = BasisProvider(cloud, J)
                    provider._cache[float(h)] = basis
                    spec = PriorSpec(GaussianPsi(cfg["prior"]["s2"]), FixedJ(J), FixedH(h),
                                     cfg["sigma"])
                    res = posterior_gaussian(data, spec, provider, S=cfg["prior"]["draws"],
                                             J_cap=J, seed=seeds["posterior"])
                    ln, lN = empirical_losses(res.posterior_mean, data)
                    rows.append(_row(n, N, J, h, beta, replicate, ln, lN, est))
                    post_rows.append(_post_row(n, replicate, est, res, data))
            elif est == "prior2":
                spec = prior2_spec(cfg, n, h)
                d = cfg.d
                J_cap = cfg["prior"].get("J_cap") or default_J_cap(n, N, d)
                if cfg["prior"]["h_grid"].get("include_tuned_h"):
                    J_cap = max(J_cap, J)
                J_cap = min(J_cap, N)
                provider = BasisProvider(cloud, J_cap)
                res = posterior_gaussian(data, spec, provider, S=cfg["prior"]["draws"],
                                         J_cap=J_cap, seed=seeds["posterior"])
                ln, lN = empirical_losses(res.posterior_mean, data)
                mh = res.marginal_h()
                rows.append(_row(n, N, res.modal_J, max(mh, key=mh.get), beta, replicate,
                                 ln, lN, est))
                post_rows.append(_post_row(n, replicate, est, res, data))
                if save is not None:
                    io.save_posterior(posterior_summary(res, data), res.posterior_mean,
                                      save / f"posterior_n{n}")
            else:
                raise ValueError(f"unknown estimator {est!r}")
        except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
            log.warning("cell n=%s replicate=%s %s failed: %r", n, replicate, est, exc)
            rows.append(_row(n, N, "", "", beta, replicate, math.nan, math.nan, est))
            failures.append({"n": n, "replicate": replicate, "estimator": est,
                             "error": repr(exc)})
    return rows, post_rows, failures


def _row(n, N, J, h, beta, replicate, loss_n, loss_N, estimator) -> dict:
    return {"n": n, "N": N, "J": J, "h": h, "beta": beta, "replicate": replicate,
            "loss_n": loss_n, "loss_N": loss_N, "estimator": estimator}


def _post_row(n, replicate, est, res, data) -> dict:
    mh = res.marginal_h()
    ok = res.n_draws >= 50
    return {"n": n, "replicate": replicate, "estimator": est, "modal_J": res.modal_J,
            "modal_h": max(mh, key=mh.get),
            "radius_n_90": credible_radius(res, data, 0.9) if ok else math.nan,
            "radius_N_90": credible_radius(res, data, 0.9, "N") if ok else math.nan}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _run_cell_args(args):
    return run_cell(*args)


# ---------------------------------------------------------------- ledger


def read_ledger(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            out.append(r)
    return out


def completed_keys(rows) -> set:
    done = set()
    for r in rows:
        try:
            ok = math.isfinite(float(r["loss_n"]))
        except (TypeError, ValueError):
            ok = False
        if ok:
            done.add((int(r["n"]), int(r["replicate"]), r["estimator"]))
    return done


class LedgerWriter:
    """Append-only CSV writer; the single point through which rows are persisted."""

    def __init__(self, path, fields):
        self.path = Path(path)
        self.fields = fields
        self.path.parent.mkdir(parents=True, exist_ok=True)
        new = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = open(self.path, "a", newline="")
        self._w = csv.DictWriter(self._fh, fieldnames=fields, lineterminator="\n")
        if new:
            self._w.writeheader()
            self._fh.flush()

    def write(self, rows):
        for r in rows:
            self._w.writerow({k: _fmt(r[k]) for k in self.fields})
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def losses_by_estimator(rows) -> dict:
    """``{estimator: {n: [loss_n per replicate]}}`` keeping one row per key."""
    latest: dict = {}
    for r in rows:
        try:
            loss = float(r["loss_n"])
        except (TypeError, ValueError):
            continue
        if not math.isfinite(loss):
            continue
        latest[(r["estimator"], int(r["n"]), int(r["replicate"]))] = loss
    out: dict = {}
    for (est, n, _), loss in sorted(latest.items()):
        out.setdefault(est, {}).setdefault(n, []).append(loss)
    return out


def rate_reports(cfg: ExperimentConfig, rows) -> dict:
    reports = {}
    bands = cfg["rate_bands"]
    for est, table in losses_by_estimator(rows).items():
        ns = sorted(table)
        reps = min(len(table[n]) for n in ns)
        try:
            rep = empirical_rate(ns, [table[n] for n in ns], target=cfg.target_exponent(),
                                 band=tuple(bands[est]) if est in bands else None,
                                 estimator=est, min_replicates=min(10, cfg["replicates"]))
            rep.extra["underpowered"] = reps < 10
        except ValueError as exc:
            rep = RateReport(math.nan, math.nan, math.nan, ns,
                             [float(np.mean(table[n])) for n in ns], reps,
                             cfg.target_exponent(), None, est, False, {"error": str(exc)})
        reports[est] = rep
    return reports


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs: int | None = None) -> dict:
    """Run (or resume) the sweep and write ledger, rate report and run metadata.

    Completed ``(n, replicate, estimator)`` keys found in an existing ledger
    are skipped. Cells run in a process pool when ``jobs > 1``; their rows are
    written by this process in submission order.
    """
    out = Path(out_dir or cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    jobs = int(jobs or cfg["jobs"])
    (out / "config.json").write_text(cfg.to_json() + "\n")
    ledger_path = out / "ledger.csv"
    done = completed_keys(read_ledger(ledger_path))
    tasks = []
    for n in cfg["n_grid"]:
        for r in range(cfg["replicates"]):
            todo = [e for e in cfg["estimators"] if (n, r, e) not in done]
            if todo:
                save = str(out / "artifacts") if r == 0 else None
                tasks.append((cfg.data, n, r, todo, save))
    start = time.perf_counter()
    failures = []
    with LedgerWriter(ledger_path, LEDGER_FIELDS) as ledger, \
            LedgerWriter(out / "posterior.csv", POSTERIOR_FIELDS) as post:
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = pool.map(_run_cell_args, tasks)
                for rows, prows, fails in results:
                    ledger.write(rows)
                    post.write(prows)
                    failures.extend(fails)
        else:
            for task in tasks:
                rows, prows, fails = run_cell(*task)
                ledger.write(rows)
                post.write(prows)
                failures.extend(fails)
    if failures:
        with open(out / "failures.jsonl", "a") as fh:
            for f in failures:
                fh.write(json.dumps(f) + "\n")
    reports = rate_reports(cfg, read_ledger(ledger_path))
    io.write_json(out / "rates.json", {k: v.to_dict() for k, v in reports.items()})
    log.info("sweep finished in %.1fs (%d cells)", time.perf_counter() - start, len(tasks))
    return reports


# ---------------------------------------------------------------- diagnostics


def _default_h(N: int, d: int) -> float:
    return 10.0 * (math.log(N) / N) ** (1.0 / d)


def run_diagnostics(cfg: ExperimentConfig) -> DiagnosticsReport:
    """Run the configured checks on a cloud of ``diagnostics.N`` points."""
    dcfg = cfg["diagnostics"]
    report = DiagnosticsReport()
    checks = list(dcfg.get("checks", []))
    if not checks:
        return report
    d = cfg.d
    N = int(dcfg["N"])
    seed = int(cfg["seed"])
    family = cfg["truth"]["family"]
    cloud = sample_cloud(cfg.manifold_spec(seed), N, family)
    h = dcfg.get("h") or _default_h(N, d)

    def attempt(name, fn):
        try:
            report.add(fn())
        except EmptyWindowError as exc:
            report.add(CheckResult(name, math.nan, None, None, "", {"status": str(exc)}))
        except Exception as exc:  # noqa: BLE001 - reported as a failed check
            report.add(CheckResult(name, math.nan, None, False, "", {"error": repr(exc)}))

    graph = build_graph(cloud, h)
    J_grid = [j for j in dcfg["approximation_J_grid"] if j <= N]
    basis = None

    def get_basis():
        nonlocal basis
        if basis is None:
            _, hi = weyl_window(N, h, d)
            basis = decompose(graph, min(N, max(J_grid + [hi, 2])))
        return basis

    for name in checks:
        if name == "weyl":
            def weyl():
                b = weyl_spectrum(cloud, weyl_bandwidth(N, d, dcfg["weyl_window_ratio"]), d)
                return check_weyl(b, d, dcfg["weyl_tol"])
            attempt(name, weyl)
        elif name == "heat_bounds":
            attempt(name, lambda: check_heat_bounds(
                graph, d, a0=dcfg["heat_a0"], slope_tol=dcfg["heat_slope_tol"],
                band_factor=dcfg["heat_band_factor"]))
        elif name == "concentration":
            def conc():
                Ns, ratios = dcfg["concentration_Ns"], []
                fam = dcfg["concentration_family"]
                for i, n_c in enumerate(Ns):
                    c = sample_cloud(cfg.manifold_spec(seed + 1 + i), n_c, fam)
                    h_c = dcfg["concentration_h_const"] * (math.log(n_c) / n_c) ** (1 / (2 + d))
                    ratios.append(check_concentration(c, h_c, fam, dcfg["M_mc"],
                                                      seed=seed + 1000 + i).statistic)
                return concentration_trend(Ns, ratios, dcfg["concentration_tol"])
            attempt(name, conc)
        elif name == "approximation":
            attempt(name, lambda: check_approximation(
                graph, get_basis(), cloud.true_values, cfg.beta, J_grid,
                dcfg["approximation_c"], d=d, band=dcfg["approximation_band"]))
        elif name == "norm_comparison":
            def norm():
                b = get_basis()
                _, hi = weyl_window(N, h, d)
                top = max(2, min(hi, b.J_max))
                grid = sorted({int(j) for j in np.geomspace(1, top, 6).round()})
                return check_norm_comparison(b, grid, dcfg["norm_trials"], d, seed)
            attempt(name, norm)
        elif name == "volume_regularity":
            attempt(name, lambda: check_volume_regularity(cloud, d, bound=dcfg["volume_bound"]))
    return report


# ---------------------------------------------------------------- plot data


def _mean_losses(rows) -> list[tuple[str, int, float]]:
    out = []
    for est, table in losses_by_estimator(rows).items():
        for n in sorted(table):
            out.append((est, n, float(np.mean(table[n]))))
    return out


def emit_plots(out_dir, render: bool = True) -> list[Path]:
    """Tidy CSVs (``x,y,series``) for rate, spectrum and posterior-weight plots.

    Reads the sweep outputs in ``out_dir`` and writes into ``out_dir/plots``.
    When matplotlib is importable and ``render`` is set, an SVG of the rate
    plot is written as well.
    """
    out = Path(out_dir)
    plots = out / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    written = []
    rows = read_ledger(out / "ledger.csv")
    rate_path = plots / "rate_plot.csv"
    means = _mean_losses(rows)
    with open(rate_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["log_n", "log_loss", "series"])
        for est, n, m in means:
            w.writerow([repr(math.log(n)), repr(math.log(m)), est])
    written.append(rate_path)

    spec_path = plots / "spectrum_plot.csv"
    with open(spec_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["log_j", "log_lambda", "series"])
        for f in sorted((out / "artifacts").glob("spectrum_n*.csv")):
            data = np.loadtxt(f, delimiter=",", skiprows=1, ndmin=2)
            for j, lam in data:
                if lam > 0:
                    w.writerow([repr(math.log(j)), repr(math.log(lam)), f.stem])
    written.append(spec_path)

    weight_path = plots / "posterior_weights.csv"
    with open(weight_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["J", "weight", "series"])
        for f in sorted((out / "artifacts").glob("posterior_n*.json")):
            summary = io.read_json(f)
            for J, weight in summary.get("marginal_J", {}).items():
                w.writerow([J, repr(float(weight)), f.stem])
    written.append(weight_path)

    if render and means:
        try:
            import matplotlib

            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            return written
        fig, ax = plt.subplots(figsize=(5, 4))
        for est in sorted({m[0] for m in means}):
            xs = [math.log(n) for e, n, _ in means if e == est]
            ys = [math.log(m) for e, _, m in means if e == est]
            ax.plot(xs, ys, "o-", label=est)
        ax.set_xlabel("log n")
        ax.set_ylabel("log mean loss")
        ax.legend()
        svg = plots / "rate_plot.svg"
        fig.savefig(svg)
        plt.close(fig)
        written.append(svg)
    return written
