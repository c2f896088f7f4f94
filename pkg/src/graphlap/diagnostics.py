"""Empirical checks of spectral-geometric properties of radius-graph Laplacians.

Theoretical constants are unknown, so each check reduces to a scaling
exponent or a boundedness statement that can be measured: a statistic, a
target or band, and a pass flag. Statistics are reported even on failure.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .estimators import ols_slope
from .graph import LaplacianOperator, RadiusGraph, build_graph, laplacian, local_degrees
from .manifold import ManifoldSpec, PointCloud, eval_truth, sample_cloud
from .spectral import (
    SpectralBasis,
    decompose,
    heat_apply,
    heat_diagonal,
    heat_diagonal_chain,
    heat_time,
    project,
    taylor_lift,
)


class EmptyWindowError(ValueError):
    """No admissible parameter values at this (N, h)."""


@dataclass
class CheckResult:
    name: str
    statistic: float
    target: float | None
    passed: bool | None
    anchor: str
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class DiagnosticsReport:
    checks: list = field(default_factory=list)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def __len__(self):
        return len(self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def all_passed(self) -> bool:
        """True when no asserted check failed (unasserted ones are ignored)."""
        return all(c.passed is not False for c in self.checks)

    def to_dict(self) -> dict:
        return {"checks": [c.to_dict() for c in self.checks], "all_passed": self.all_passed}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "DiagnosticsReport":
        checks = []
        for c in data.get("checks", []):
            stat = c["statistic"]
            checks.append(CheckResult(
                c["name"], float(stat) if stat is not None else math.nan,
                c.get("target"), c.get("passed"), c.get("anchor", ""), c.get("metadata", {})))
        return cls(checks)

    @classmethod
    def from_json(cls, text: str) -> "DiagnosticsReport":
        return cls.from_dict(json.loads(text))

    def table(self) -> str:
        rows = [("check", "statistic", "target", "result")]
        for c in self.checks:
            verdict = {True: "PASS", False: "FAIL", None: "info"}[c.passed]
            tgt = "-" if c.target is None else f"{c.target:.4g}"
            rows.append((c.name, f"{c.statistic:.4g}", tgt, verdict))
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = ["  ".join(s.ljust(w) for s, w in zip(r, widths)) for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines)


# ---------------------------------------------------------------- T_h oracle


@dataclass
class OracleResult:
    values: np.ndarray
    stderr: np.ndarray
    empty: np.ndarray
    counts: np.ndarray


def t_h_oracle(spec: ManifoldSpec, family, h: float, query_points, M_mc: int = 100_000,
               seed=None) -> OracleResult:
    """Monte Carlo ``T_h f(x) = (1/h^2) E[f(x) - f(Y) | ||Y - x|| < h]``, ``Y ~ p0``.

    One sample of ``M_mc`` fresh draws serves every query point, and the
    numerator and the ball mass are estimated from the same draws, so the
    estimate is the average of ``f(x) - f(Y)`` over the draws inside the ball.
    Points whose ball is empty are flagged and get NaN.
    """
    if M_mc < 1:
        raise ValueError("M_mc must be positive")
    q = np.atleast_2d(np.asarray(query_points, dtype=float))
    mc_seed = np.random.SeedSequence(seed).generate_state(1)[0]
    sample = sample_cloud(spec.with_seed(int(mc_seed)), M_mc)
    fy = eval_truth(spec, sample.points, family)
    fx = eval_truth(spec, q, family)
    tree = cKDTree(sample.points)
    balls = tree.query_ball_point(q, np.nextafter(h, 0), return_sorted=False)
    vals = np.full(q.shape[0], np.nan)
    se = np.full(q.shape[0], np.nan)
    counts = np.zeros(q.shape[0], dtype=np.int64)
    for i, idx in enumerate(balls):
        k = len(idx)
        counts[i] = k
        if k == 0:
            continue
        diff = fx[i] - fy[idx]
        vals[i] = diff.mean() / h**2
        se[i] = (diff.std(ddof=1) / math.sqrt(k) / h**2) if k > 1 else np.inf
    return OracleResult(vals, se, counts == 0, counts)


def circle_cos_t_h(theta, h: float) -> np.ndarray:
    """Exact ``T_h cos`` on the uniform unit circle.

    The chord ball of radius ``h`` is the arc ``|u| < a`` with
    ``a = 2 arcsin(h/2)`` and the mean of ``cos(theta + u)`` over it is
    ``cos(theta) sin(a) / a``.
    """
    if h >= 2:
        return np.cos(theta) / h**2
    a = 2 * math.asin(h / 2)
    return np.cos(theta) * (1 - math.sin(a) / a) / h**2


# ---------------------------------------------------------------- concentration


def concentration_rate(N: int, h: float, d: int) -> float:
    return math.sqrt(math.log(N) / N) * h ** (-(1 + d / 2))


def check_concentration(cloud: PointCloud, h: float, family, M_mc: int = 100_000,
                        seed=None, graph: RadiusGraph | None = None) -> CheckResult:
    """``||calL f - T_h f||_inf`` against ``(ln N / N)^{1/2} h^{-(1 + d/2)}``."""
    spec = cloud.manifold
    N, d = cloud.n_points, spec.intrinsic_dim
    g = build_graph(cloud, h) if graph is None else graph
    f = eval_truth(spec, cloud.points, family)
    lf = laplacian(g).apply(f)
    oracle = t_h_oracle(spec, family, h, cloud.points, M_mc, seed)
    ok = ~oracle.empty
    dev = float(np.max(np.abs(lf[ok] - oracle.values[ok]))) if ok.any() else math.nan
    rate = concentration_rate(N, h, d)
    return CheckResult(
        "concentration", dev / rate, None, None,
        "uniform deviation of the graph Laplacian from its nonlocal continuum operator",
        {"N": N, "h": h, "deviation": dev, "rate_factor": rate,
         "n_empty": int(oracle.empty.sum()), "max_oracle_se": float(np.nanmax(oracle.stderr))},
    )


def concentration_trend(Ns, ratios, tol: float = 0.3) -> CheckResult:
    """Log-log slope of the concentration ratio in ``N``; bounded ratio means slope ~ 0."""
    slope, se, _ = ols_slope(np.log(Ns), np.log(ratios))
    return CheckResult(
        "concentration_trend", slope, 0.0, bool(abs(slope) <= tol),
        "uniform deviation of the graph Laplacian from its nonlocal continuum operator",
        {"Ns": list(map(int, Ns)), "ratios": list(map(float, ratios)), "stderr": se, "tol": tol},
    )


# ---------------------------------------------------------------- approximation


def approximation_rate(J: int, h: float, N: int, d: int, beta: float) -> float:
    """Theoretical order of the projected heat-smoothing approximation error."""
    lnN = math.log(N)
    k = math.ceil(beta / 2) - 1
    growth = max(1.0, J ** (-2 / d) * lnN / h**2) ** (k + 1)
    tail = h**beta + (math.sqrt(lnN / (N * h**d)) * h if beta > 1 else 0.0)
    return lnN ** math.ceil(beta / 2) * growth * tail


def approximation_errors(op, basis: SpectralBasis, f0, beta: float, J_grid, c: float = 4.0):
    """``||f0 - p_J(e^{-t calL} f_t)||_inf`` with ``t = c ln N / lambda_J``.

    Entries with ``lambda_J = 0`` and ``c > 0`` have no finite heat time and
    are NaN.
    """
    if isinstance(op, RadiusGraph):
        op = laplacian(op)
    f0 = np.asarray(f0, dtype=float)
    errs, times = [], []
    for J in J_grid:
        lam = basis.eigenvalues[J - 1]
        if c != 0 and lam <= 0:
            errs.append(math.nan)
            times.append(math.inf)
            continue
        t = heat_time(basis, J, c)
        approx = project(basis, J, heat_apply(basis, t, taylor_lift(op, t, f0, beta)))
        errs.append(float(np.max(np.abs(f0 - approx))))
        times.append(t)
    return np.array(errs), np.array(times)


def check_approximation(op, basis: SpectralBasis, f0, beta: float, J_grid, c: float = 4.0,
                        d: int = 1, band: float = 0.10, atol: float = 1e-10) -> CheckResult:
    """Approximation error must not increase in ``J`` beyond a relative band."""
    J_grid = [int(j) for j in J_grid]
    errs, times = approximation_errors(op, basis, f0, beta, J_grid, c)
    rates = [approximation_rate(J, basis.h, basis.n, d, beta) for J in J_grid]
    ok = np.isfinite(errs)
    e = errs[ok]
    viol = [float(e[i + 1] / e[i]) if e[i] > 0 else math.inf
            for i in range(len(e) - 1) if e[i + 1] > (1 + band) * e[i] + atol]
    worst = max((e[i + 1] - e[i]) / max(e[i], atol) for i in range(len(e) - 1)) if len(e) > 1 else 0.0
    return CheckResult(
        "approximation", float(worst), band, not viol,
        "projected heat-smoothing approximation of a Holder function",
        {"J_grid": J_grid, "errors": errs, "t": times, "c": c, "beta": beta,
         "rate_expression": rates, "violations": viol},
    )


# ---------------------------------------------------------------- heat bounds


def heat_window(N: int, h: float, d: int, a0: float = 64.0) -> tuple[float, float]:
    """``[t0, 1]`` with ``t0 = a0 h^2 ln(N h^d)``."""
    return a0 * h**2 * math.log(N * h**d), 1.0


def check_heat_bounds(source, d: int, t_grid=None, vertices=None, a0: float = 64.0,
                      n_t: int = 8, band_factor: float = 50.0, slope_tol: float = 0.35,
                      N: int | None = None) -> CheckResult:
    """On-diagonal heat kernel ``p_t(x, x)`` against ``t^{-d/2}``.

    ``source`` is a :class:`SpectralBasis` (spectral evaluation) or a
    :class:`RadiusGraph` (random-walk return probabilities, suited to large
    graphs). Records ``max_x p_t t^{d/2}`` and ``min_x p_t t^{d/2} ln^d N``
    over the grid; both must stay within ``band_factor`` and the log-log slope
    must be ``-d/2 +- slope_tol``.
    """
    if isinstance(source, SpectralBasis):
        n_vert, h = source.n, source.h
    elif isinstance(source, RadiusGraph):
        n_vert, h = source.n_vertices, source.h
    else:
        raise TypeError("source must be a SpectralBasis or a RadiusGraph")
    N = n_vert if N is None else N
    t0, t1 = heat_window(N, h, d, a0)
    t0 = max(t0, 0.0)
    if t_grid is None:
        if not t0 < t1 or t0 <= 0:
            raise EmptyWindowError(f"heat window [{t0:.3g}, {t1}] is empty")
        ts = np.geomspace(t0, t1, n_t)
    else:
        ts = np.asarray(t_grid, dtype=float)
        ts = ts[(ts >= t0) & (ts <= t1)]
    if ts.size < 2:
        raise EmptyWindowError(f"fewer than two times inside [{t0:.3g}, {t1}]")
    if isinstance(source, SpectralBasis):
        if not source.is_complete:
            warnings.warn("partial basis: heat kernel is a rank truncation", RuntimeWarning,
                          stacklevel=2)
        verts = np.arange(n_vert) if vertices is None else np.asarray(vertices)
        diag = heat_diagonal(source, ts, verts)
    else:
        verts = np.arange(min(4, n_vert)) if vertices is None else np.asarray(vertices)
        diag = heat_diagonal_chain(source, ts, verts)
    lnN = math.log(N)
    upper = diag.max(axis=1) * ts ** (d / 2)
    lower = diag.min(axis=1) * ts ** (d / 2) * lnN**d
    up_spread = float(upper.max() / upper.min())
    lo_spread = float(lower.max() / lower.min())
    logt = np.log(ts)
    per_vertex = [ols_slope(logt, np.log(diag[:, i]))[0] for i in range(diag.shape[1])]
    slope = ols_slope(logt, np.log(diag).mean(axis=1))[0]
    target = -d / 2
    passed = (abs(slope - target) <= slope_tol and up_spread <= band_factor
              and lo_spread <= band_factor)
    return CheckResult(
        "heat_bounds", slope, target, bool(passed),
        "two-sided on-diagonal heat kernel bound of order t^{-d/2}",
        {"t": ts, "t0": t0, "upper": upper, "lower": lower, "upper_spread": up_spread,
         "lower_spread": lo_spread, "vertex_slopes": per_vertex, "slope_tol": slope_tol,
         "band_factor": band_factor, "vertices": verts},
    )


# ---------------------------------------------------------------- norm comparison


def check_norm_comparison(basis: SpectralBasis, J_grid, trials: int = 200, d: int = 1,
                          seed=None, slope_max: float = 1.35) -> CheckResult:
    """Sup-norm to ``L^2(nu)``-norm ratio on spectral subspaces.

    For ``f`` in the span of ``u_1..u_J`` with unit ``L^2(nu)`` norm the exact
    supremum of ``||f||_inf^2`` is ``max_x sum_{j<=J} u_j(x)^2``. Random trial
    directions give a lower estimate; trials for smaller ``J`` are reused for
    larger ``J`` so the running maximum is monotone. The normalized ratio
    ``sup / (J ln^{3d/2} N)`` is reported, and its growth exponent in ``J``
    must not exceed ``slope_max``.
    """
    J_grid = sorted(int(j) for j in J_grid)
    if not J_grid or J_grid[-1] > basis.J_max:
        raise ValueError("J grid must be nonempty and within the basis")
    rng = np.random.default_rng(seed)
    u = basis.eigenvectors
    lnN = math.log(basis.n)
    cum = np.cumsum(u**2, axis=1)
    exact, trial, running = [], [], 0.0
    for J in J_grid:
        a = rng.standard_normal((J, trials))
        a /= np.linalg.norm(a, axis=0)
        f = u[:, :J] @ a
        running = max(running, float((f**2).max()))
        trial.append(running)
        exact.append(float(cum[:, J - 1].max()))
    exact = np.array(exact)
    norm = exact / (np.array(J_grid) * lnN ** (1.5 * d))
    slope = ols_slope(np.log(J_grid), np.log(exact))[0] if len(J_grid) > 1 else math.nan
    passed = None if len(J_grid) < 2 else bool(slope <= slope_max)
    return CheckResult(
        "norm_comparison", float(norm.max()), None, passed,
        "sup-norm versus L2(nu)-norm on low-frequency eigenspaces",
        {"J_grid": J_grid, "exact_sup": exact, "trial_max": trial, "normalized": norm,
         "growth_exponent": slope, "coarse_bound": float(basis.n**2 / basis.nu.min())},
    )


# ---------------------------------------------------------------- Weyl


def weyl_window(N: int, h: float, d: int) -> tuple[int, int]:
    """``[max(10, ln^d N), floor(h^{-d} / ln^{d/2} N)]``."""
    lnN = math.log(N)
    lo = math.ceil(max(10.0, lnN**d))
    hi = math.floor(h ** (-d) / lnN ** (d / 2))
    return lo, hi


def weyl_bandwidth(N: int, d: int, ratio: float = 3.0) -> float:
    """Bandwidth whose Weyl window ``[lo, hi]`` has ``hi = ratio * lo``."""
    lnN = math.log(N)
    lo = max(10.0, lnN**d)
    return (ratio * lo * lnN ** (d / 2)) ** (-1.0 / d)


def weyl_spectrum(cloud, h: float, d: int, largest_component: bool = True,
                  method: str = "auto") -> SpectralBasis:
    """Eigenvalues up to the top of the Weyl window (plus two).

    With ``largest_component`` the graph is restricted to its largest
    connected component, whose spectrum is free of the extra zero
    eigenvalues contributed by stray fragments.
    """
    g = build_graph(cloud, h)
    if largest_component and not g.is_connected:
        g = g.subgraph(g.largest_component())
    n = g.n_vertices
    _, hi = weyl_window(n, h, d)
    J = min(max(hi + 2, 3), n)
    if J >= n - 1:
        method = "dense"
    return decompose(g, J, method=method)


def check_weyl(basis: SpectralBasis, d: int, tol: float = 0.4, N: int | None = None) -> CheckResult:
    """Slope of ``log lambda_j`` against ``log j`` over the Weyl window; target ``2/d``."""
    N = basis.n if N is None else N
    lo, hi = weyl_window(N, basis.h, d)
    hi_eff = min(hi, basis.J_max)
    j = np.arange(1, basis.J_max + 1)
    lam = basis.eigenvalues
    mask = (j >= lo) & (j <= hi_eff) & (lam > 0)
    target = 2.0 / d
    anchor = "Weyl-type growth lambda_j ~ j^{2/d} up to log factors"
    meta = {"window": [lo, hi], "used_max": int(hi_eff), "tol": tol, "n_points": int(mask.sum())}
    if mask.sum() < 3:
        meta["status"] = "window empty"
        return CheckResult("weyl", math.nan, target, None, anchor, meta)
    slope, se, _ = ols_slope(np.log(j[mask]), np.log(lam[mask]))
    meta.update(stderr=se, status="ok")
    return CheckResult("weyl", slope, target, bool(abs(slope - target) <= tol), anchor, meta)


# ---------------------------------------------------------------- volume


def cloud_diameter(points) -> float:
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 2:
        return 0.0
    if pts.shape[0] <= 3000:
        return float(pdist(pts).max())
    # double sweep: a lower bound within a factor of two, exact on spheres
    far = np.argmax(np.linalg.norm(pts - pts[0], axis=1))
    return float(np.linalg.norm(pts - pts[far], axis=1).max())


def check_volume_regularity(cloud, d: int, r_min: float | None = None, r_max: float | None = None,
                            bound: float = 10.0) -> CheckResult:
    """Spread of ``mu_i^{(r)} / (N r^d)`` across points, for dyadic ``r``."""
    pts = getattr(cloud, "points", cloud)
    N = len(pts)
    r_max = cloud_diameter(pts) / 4 if r_max is None else r_max
    r_min = 8 * (math.log(N) / N) ** (1.0 / d) if r_min is None else r_min
    if not 0 < r_min <= r_max:
        raise EmptyWindowError("radius grid is empty")
    rs = r_max / 2.0 ** np.arange(0, 64)
    rs = np.sort(rs[rs >= r_min])
    ratios = []
    for r in rs:
        dens = local_degrees(pts, r) / (N * r**d)
        ratios.append(float(dens.max() / dens.min()))
    worst = max(ratios)
    return CheckResult(
        "volume_regularity", worst, bound, bool(worst < bound),
        "two-sided volume regularity of empirical balls",
        {"radii": rs, "ratios": ratios},
    )
