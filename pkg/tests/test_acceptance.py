"""Acceptance criteria 1-10.

Every criterion is a function returning ``(passed, detail)``. Under pytest
each one also prints a single ``criterion k: PASS|FAIL ...`` line, collected
in the terminal summary. Runnable as a script:
``python tests/test_acceptance.py [k ...]``.
"""

import math
import statistics
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, stats

from graphlap.bayes import (
    BasisProvider,
    FixedH,
    FixedJ,
    GaussianPsi,
    LaplacePsi,
    PriorSpec,
    batch_means_se,
    conjugate_posterior,
    log_evidence_gaussian,
    posterior_mh,
    sieve_tail_probability,
)
from graphlap.diagnostics import (
    check_approximation,
    check_concentration,
    check_heat_bounds,
    check_weyl,
    concentration_trend,
    weyl_bandwidth,
    weyl_spectrum,
)
from graphlap.estimators import RegressionDataset, make_dataset
from graphlap.graph import build_graph, laplacian
from graphlap.harness import ExperimentConfig, read_ledger, run_cell, run_experiment
from graphlap.manifold import ManifoldSpec, PointCloud, sample_cloud
from graphlap.spectral import decompose, heat_diagonal, heat_kernel, heat_apply, heat_operator

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # running as a script from elsewhere
    ACCEPTANCE_LINES = []

pytestmark = pytest.mark.slow


def _timed(limit):
    """Decorator adding the runtime budget to the pass condition."""

    def wrap(fn):
        def run():
            start = time.perf_counter()
            ok, detail = fn()
            secs = time.perf_counter() - start
            within = secs < limit
            return ok and within, f"{detail}; {secs:.1f}s (budget {limit:.0f}s)"

        run.__name__ = fn.__name__
        return run

    return wrap


# ---------------------------------------------------------------- 1


@_timed(60)
def criterion_1():
    rng = np.random.default_rng(1)
    worst_orth = worst_res = 0.0
    for k in range(40):
        n = int(rng.integers(5, 400))
        D = int(rng.integers(1, 4))
        pts = rng.standard_normal((n, D))
        g = build_graph(pts, float(rng.uniform(0.2, 2.0)))
        b = decompose(g, n)
        worst_orth = max(worst_orth, b.orthonormality_defect())
        worst_res = max(worst_res, float(np.max(b.residuals / np.maximum(1, b.eigenvalues))))
    # the iterative path on a large sparse graph
    cloud = sample_cloud(ManifoldSpec("circle", 3, seed=2), 5000)
    b = decompose(build_graph(cloud, 0.01), 40, method="sparse")
    worst_orth = max(worst_orth, b.orthonormality_defect())
    worst_res = max(worst_res, float(np.max(b.residuals / np.maximum(1, b.eigenvalues))))
    worst_complete = 0.0
    for n in range(1, 51):
        h = float(rng.uniform(0.1, 5.0))
        pts = rng.uniform(0, h / 3, (n, 2))
        b = decompose(build_graph(pts, h), n)
        dense = h**-2 * (np.eye(n) - np.ones((n, n)) / n)
        oracle = np.linalg.eigvalsh(dense)
        closed = np.r_[0.0, np.full(n - 1, h**-2)]
        worst_complete = max(worst_complete, float(np.abs(b.eigenvalues - oracle).max()),
                             float(np.abs(b.eigenvalues - closed).max()))
    ok = worst_orth <= 1e-8 and worst_res <= 1e-6 and worst_complete <= 1e-10
    return ok, (f"orthonormality {worst_orth:.1e} (<=1e-8), residual {worst_res:.1e} (<=1e-6), "
                f"complete-graph spectrum {worst_complete:.1e} (<=1e-10)")


# ---------------------------------------------------------------- 2


@_timed(60)
def criterion_2():
    rng = np.random.default_rng(2)
    row = semi = sym = 0.0
    mono = True
    cases = [(ManifoldSpec("circle", 2, seed=3), 400, 0.1),
             (ManifoldSpec("sphere2", 3, seed=4), 600, 0.3),
             (ManifoldSpec("interval", 1, seed=5), 300, 0.03)]
    for spec, n, h in cases:
        b = decompose(build_graph(sample_cloud(spec, n), h), n)
        for t in (0.1 * h**2, h**2, 10 * h**2, 1.0):
            row = max(row, float(np.abs(heat_operator(b, t).sum(axis=1) - 1).max()))
            K = heat_kernel(b, t)
            sym = max(sym, float(np.abs(K - K.T).max()))
            f = rng.standard_normal(n)
            s = float(rng.uniform(0, 2)) * h**2
            semi = max(semi, float(np.abs(heat_apply(b, s, heat_apply(b, t, f))
                                          - heat_apply(b, s + t, f)).max()))
        diag = heat_diagonal(b, np.geomspace(1e-3 * h**2, 10.0, 60))
        mono = mono and bool(np.all(np.diff(diag, axis=0) <= 1e-12 * diag.max()))
    ok = row <= 1e-8 and semi <= 1e-7 and sym <= 1e-10 and mono
    return ok, (f"row sums {row:.1e} (<=1e-8), semigroup {semi:.1e} (<=1e-7), "
                f"symmetry {sym:.1e} (<=1e-10), p_t(x,x) nonincreasing {mono}")


# ---------------------------------------------------------------- 3 and 4

_SWEEP: dict = {}


def _standard_sweep():
    if "reports" not in _SWEEP:
        cfg = ExperimentConfig.from_dict({"estimators": ["pcr-le", "prior2"]})
        out = Path(tempfile.mkdtemp(prefix="graphlap-accept-"))
        start = time.perf_counter()
        reports = run_experiment(cfg, out)
        _SWEEP.update(reports=reports, seconds=time.perf_counter() - start,
                      posterior=read_ledger(out / "posterior.csv"), cfg=cfg)
    return _SWEEP


def criterion_3():
    sw = _standard_sweep()
    rep = sw["reports"]["pcr-le"]
    ok = bool(rep.passed) and rep.n_replicates >= 20 and sw["seconds"] < 15 * 60
    return ok, (f"slope {rep.slope:+.3f} +- {rep.stderr:.3f} in [-0.55, -0.25], target "
                f"{rep.target:+.2f}, {rep.n_replicates} replicates; sweep {sw['seconds']:.1f}s "
                f"(budget 900s)")


def criterion_4():
    sw = _standard_sweep()
    rep = sw["reports"]["prior2"]
    rad = {}
    for r in sw["posterior"]:
        if r["estimator"] == "prior2":
            rad.setdefault(int(r["n"]), []).append(float(r["radius_n_90"]))
    ns = sw["cfg"]["n_grid"]
    lo, hi = statistics.median(rad[ns[0]]), statistics.median(rad[ns[-1]])
    ok = bool(rep.passed) and hi < lo and sw["seconds"] < 30 * 60
    return ok, (f"posterior-mean slope {rep.slope:+.3f} +- {rep.stderr:.3f} in [-0.55, -0.20]; "
                f"median 90% radius n={ns[-1]}: {hi:.4f} < n={ns[0]}: {lo:.4f}; "
                f"sweep {sw['seconds']:.1f}s (budget 1800s)")


# ---------------------------------------------------------------- 5


def _modal_J_growth(family, beta):
    cfg = ExperimentConfig.from_dict({"truth": {"family": family, "beta": beta},
                                      "estimators": ["prior2"]})
    wins, pairs = 0, []
    for r in range(20):
        modal = {}
        for n in (100, 1600):
            _, post, fails = run_cell(cfg.data, n, r, ["prior2"])
            if fails:
                raise RuntimeError(fails[0]["error"])
            modal[n] = post[0]["modal_J"]
        pairs.append((modal[100], modal[1600]))
        wins += modal[1600] > modal[100]
    return wins, pairs


@_timed(20 * 60)
def criterion_5():
    wins, pairs = _modal_J_growth("holder-kink(0.75)", 0.75)
    lo = statistics.median(p[0] for p in pairs)
    hi = statistics.median(p[1] for p in pairs)
    return wins >= 15, (f"holder-kink(0.75) truth: modal J grows in {wins}/20 replicates "
                        f"(>=15), median modal J {lo:g} -> {hi:g}")


def trig2_adaptivity_info():
    wins, pairs = _modal_J_growth("trig-2", 2.0)
    lo = statistics.median(p[0] for p in pairs)
    hi = statistics.median(p[1] for p in pairs)
    return f"info: trig-2 truth: modal J grows in {wins}/20 replicates, median {lo:g} -> {hi:g}"


# ---------------------------------------------------------------- 6


@_timed(5 * 60)
def criterion_6():
    out = []
    ok = True
    for spec, N, d, ratio in [(ManifoldSpec("circle", 2, seed=6), 20_000, 1, 3.0),
                              (ManifoldSpec("sphere2", 3, seed=7), 80_000, 2, 2.0)]:
        cloud = sample_cloud(spec, N)
        b = weyl_spectrum(cloud, weyl_bandwidth(N, d, ratio), d)
        c = check_weyl(b, d, tol=0.4, N=N)
        ok = ok and bool(c.passed)
        out.append(f"{spec.kind} slope {c.statistic:.3f} (target {2 / d:.1f} +- 0.4, "
                   f"window {c.metadata['window']})")
    return ok, "; ".join(out)


# ---------------------------------------------------------------- 7


@_timed(5 * 60)
def criterion_7():
    out = []
    ok = True
    for spec, N, d, h in [(ManifoldSpec("circle", 2, seed=8), 20_000, 1, 0.02),
                          (ManifoldSpec("sphere2", 3, seed=9), 80_000, 2, 0.03)]:
        g = build_graph(sample_cloud(spec, N), h)
        c = check_heat_bounds(g, d, slope_tol=0.35, band_factor=50.0)
        ok = ok and bool(c.passed)
        out.append(f"{spec.kind} slope {c.statistic:.3f} (target {-d / 2:.1f} +- 0.35, "
                   f"t in [{c.metadata['t0']:.3g}, 1])")
    return ok, "; ".join(out)


# ---------------------------------------------------------------- 8


@_timed(10 * 60)
def criterion_8():
    Ns = [250, 500, 1000, 2000]
    ratios = []
    for i, N in enumerate(Ns):
        h = 1.5 * (math.log(N) / N) ** (1 / 3)
        reps = []
        for r in range(5):
            cloud = sample_cloud(ManifoldSpec("circle", 3, seed=100 * i + r), N, "trig-1")
            reps.append(check_concentration(cloud, h, "trig-1", M_mc=200_000,
                                            seed=1000 * i + r).statistic)
        ratios.append(float(np.mean(reps)))
    c = concentration_trend(Ns, ratios, tol=0.3)
    return bool(c.passed), (f"log-log slope {c.statistic:+.3f} in [-0.3, 0.3], ratios "
                            + ", ".join(f"{x:.3g}" for x in ratios))


# ---------------------------------------------------------------- 9


@_timed(10 * 60)
def criterion_9():
    cloud = sample_cloud(ManifoldSpec("circle", 3, seed=10), 200, "trig-2")
    provider = BasisProvider(cloud, 10)
    h = 0.2
    data = make_dataset(cloud, 200, 0.1, seed=11)
    spec = PriorSpec(GaussianPsi(1.0), FixedJ(5), FixedH(h), 0.1)
    res = posterior_mh(data, spec, provider, S=10_000, burn_in=2000, seed=12)
    z = np.array(res.z_draws)
    se = batch_means_se(z)
    mean, _ = conjugate_posterior(data, provider(h), 5, 1.0)
    zscore = float(np.max(np.abs(z.mean(axis=0) - mean) / se))

    a, y1, sigma, s2 = 0.8, -0.3, 0.25, 1.7
    from graphlap.spectral import SpectralBasis

    basis = SpectralBasis(np.zeros(1), np.array([[a]]), np.ones(1), 1.0)
    ds = RegressionDataset(PointCloud(np.zeros((1, 1)), ManifoldSpec("interval", 1)), [y1], sigma)
    val, _ = integrate.quad(
        lambda t: stats.norm.pdf(y1, a * t, sigma) * stats.norm.pdf(t, 0, math.sqrt(s2)),
        -np.inf, np.inf, epsabs=1e-14, epsrel=1e-12)
    ev_err = abs(log_evidence_gaussian(ds, basis, 1, s2) - math.log(val))

    tail_ok = True
    worst = -math.inf
    for psi in (GaussianPsi(1.0), LaplacePsi(1.0)):
        for J in (1, 10):
            for zz in (2.0, 3.0, 4.0):
                p, pse, bound = sieve_tail_probability(psi, J, zz, 200_000, seed=int(zz) + J)
                tail_ok = tail_ok and p <= bound + 3 * pse
                worst = max(worst, p - bound - 3 * pse)
    ok = zscore <= 3 and ev_err <= 1e-8 and tail_ok
    return ok, (f"MH vs conjugate max |diff|/s.e. {zscore:.2f} (<=3); evidence vs quadrature "
                f"{ev_err:.1e} (<=1e-8); sieve tail max excess {worst:.3g} (<=0)")


# ---------------------------------------------------------------- 10


@_timed(2 * 60)
def criterion_10():
    cloud = sample_cloud(ManifoldSpec("circle", 3, seed=13), 2000, "trig-2")
    h = 10 * math.log(2000) / 2000
    g = build_graph(cloud, h)
    assert g.is_connected
    b = decompose(g, 64)
    c = check_approximation(laplacian(g), b, cloud.true_values, 2.0, [4, 8, 16, 32, 64],
                            band=0.10)
    small = sample_cloud(ManifoldSpec("circle", 3, seed=14), 300, "holder-kink(0.5)")
    gs = build_graph(small, 0.1)
    full = decompose(gs, 300)
    z = check_approximation(laplacian(gs), full, small.true_values, 0.5, [300], c=0.0)
    zero_err = float(z.metadata["errors"][0])
    errs = ", ".join(f"{e:.2g}" for e in c.metadata["errors"])
    ok = bool(c.passed) and zero_err <= 1e-8
    return ok, f"errors over J=4..64: {errs} (10% band); error at J=N, t=0: {zero_err:.1e}"


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 11)}


def report(k):
    ok, detail = CRITERIA[k]()
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok, line


@pytest.mark.parametrize("k", list(range(1, 11)))
def test_criterion(k):
    ok, line = report(k)
    if k == 5:
        info = trig2_adaptivity_info()
        print(info)
        ACCEPTANCE_LINES.append(f"criterion 5: {info}")
    assert ok, line


if __name__ == "__main__":
    ks = [int(a) for a in sys.argv[1:]] or list(range(1, 11))
    results = [report(k)[0] for k in ks]
    sys.exit(0 if all(results) else 1)
