"""Frequentist spectral estimators: PCR-LE and kernel regression."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .manifold import PointCloud
from .spectral import SpectralBasis, chi_kernel_regress, exp_chi


@dataclass(eq=False)
class RegressionDataset:
    """Responses on the first ``n`` points of an ``N``-point cloud."""

    cloud: PointCloud
    y: np.ndarray
    sigma: float

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if self.y.ndim != 1 or not 1 <= self.y.size <= self.cloud.n_points:
            raise ValueError("need 1 <= n <= N labeled responses")
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def N(self) -> int:
        return self.cloud.n_points

    @property
    def labeled_idx(self) -> np.ndarray:
        return np.arange(self.n)

    @property
    def f0(self) -> np.ndarray | None:
        return self.cloud.true_values

    def padded(self) -> np.ndarray:
        """``Y`` extended by zeros on unlabeled vertices."""
        out = np.zeros(self.N)
        out[: self.n] = self.y
        return out


def make_dataset(cloud: PointCloud, n: int, sigma: float, seed=None) -> RegressionDataset:
    """Label the first ``n`` points with ``f0(x_i) + sigma * eps_i``."""
    if cloud.true_values is None:
        raise ValueError("cloud has no ground truth attached")
    if not 1 <= n <= cloud.n_points:
        raise ValueError("need 1 <= n <= N")
    rng = np.random.default_rng(seed)
    y = cloud.true_values[:n] + sigma * rng.standard_normal(n)
    return RegressionDataset(cloud, y, float(sigma))


def empirical_losses(estimate, dataset: RegressionDataset) -> tuple[float, float]:
    """``(||f - f0||_n, ||f - f0||_N)``; NaN when the truth is unknown."""
    f0 = dataset.f0
    if f0 is None:
        return math.nan, math.nan
    diff = np.asarray(estimate) - f0
    return float(np.sqrt(np.mean(diff[: dataset.n] ** 2))), float(np.sqrt(np.mean(diff**2)))


@dataclass(frozen=True, eq=False)
class FitReport:
    estimate: np.ndarray
    J: int | None
    h: float
    loss_n: float
    loss_N: float
    runtime: float
    estimator: str = "pcr-le"


def pcr_le(dataset: RegressionDataset, basis: SpectralBasis, J: int) -> FitReport:
    """``f_hat = sum_{j<=J} <u_j|Y>_nu u_j``.

    When ``N > n`` the inner product runs over labeled vertices only, each
    with its own ``nu`` weight (equivalently ``Y`` is zero-padded).
    """
    if not 1 <= J <= basis.J_max:
        raise ValueError(f"J={J} outside [1, {basis.J_max}]")
    if basis.n != dataset.N:
        raise ValueError("basis and dataset disagree on N")
    start = time.perf_counter()
    n = dataset.n
    u = basis.eigenvectors[:, :J]
    coef = u[:n].T @ (dataset.y * basis.nu[:n])
    est = u @ coef
    loss_n, loss_N = empirical_losses(est, dataset)
    return FitReport(est, J, basis.h, loss_n, loss_N, time.perf_counter() - start, "pcr-le")


def kernel_regress(
    dataset: RegressionDataset, basis: SpectralBasis, t: float, k: int = 0, chi=exp_chi
) -> FitReport:
    """Spectral kernel regression with the ``chi_t^{(k)}`` kernel."""
    start = time.perf_counter()
    est = chi_kernel_regress(basis, t, k, chi, dataset.y, dataset.labeled_idx)
    loss_n, loss_N = empirical_losses(est, dataset)
    return FitReport(est, None, basis.h, loss_n, loss_N, time.perf_counter() - start, "kernel")


def default_h_log_exponent(beta: float, d: int, tau: float) -> float:
    return -(1 - tau - 2 * (1 + 2 * tau / d) * math.ceil(beta / 2)) / (2 * beta + d)


def tune_jh(
    n: float,
    N: float,
    d: int,
    beta: float,
    tau: float,
    h_log_exponent: float | None = None,
    J_log_exponent: float | None = None,
    h_const: float = 1.0,
    J_const: float = 1.0,
) -> tuple[int, float]:
    """Theory-driven ``(J, h)``.

    ``h = h_const n^{-1/(2 beta + d)} (ln n)^{e_h}`` and
    ``J = ceil(J_const h^{-d} / (ln N)^{e_J})`` clamped to ``[1, N]``, with
    ``e_h = -(1 - tau - 2 (1 + 2 tau/d) ceil(beta/2)) / (2 beta + d)`` and
    ``e_J = tau`` unless overridden.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if tau <= d / 2:
        raise ValueError("tau must exceed d/2")
    eh = default_h_log_exponent(beta, d, tau) if h_log_exponent is None else h_log_exponent
    ej = tau if J_log_exponent is None else J_log_exponent

    def logpow(x, e):
        if e == 0:
            return 1.0
        lx = math.log(x)
        if lx <= 0:
            raise ValueError("log factor undefined for this n or N; set its exponent to 0")
        return lx**e

    h = h_const * n ** (-1.0 / (2 * beta + d)) * logpow(n, eh)
    J_real = J_const * h ** (-d) / logpow(N, ej)
    # guard against ceil(2.0000000000000004) = 3
    J = math.ceil(J_real - 1e-9 * max(1.0, J_real))
    return int(min(max(J, 1), int(N))), float(h)


class DegenerateGridError(ValueError):
    pass


@dataclass
class RateReport:
    slope: float
    stderr: float
    intercept: float
    ns: list
    mean_losses: list
    n_replicates: int
    target: float | None = None
    band: tuple | None = None
    estimator: str = ""
    passed: bool | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["band"] = None if self.band is None else list(self.band)
        return out


def ols_slope(x, y) -> tuple[float, float, float]:
    """Least-squares slope, its standard error and intercept."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - intercept - slope * x
    dof = x.size - 2
    stderr = float(np.sqrt((resid @ resid) / dof / sxx)) if dof > 0 else math.nan
    return slope, stderr, intercept


def empirical_rate(
    ns,
    losses,
    target: float | None = None,
    band: tuple[float, float] | None = None,
    estimator: str = "",
    min_points: int = 4,
    min_replicates: int = 10,
) -> RateReport:
    """Fit ``log(mean loss) = a + slope * log n``.

    ``losses`` is a sequence (one entry per ``n``) of replicate losses.
    ``band`` is an inclusive interval for the slope that decides ``passed``.
    """
    ns = np.asarray(ns, dtype=float)
    reps = [np.atleast_1d(np.asarray(l, dtype=float)) for l in losses]
    if len(reps) != ns.size:
        raise DegenerateGridError("one loss sample per n is required")
    if np.unique(ns).size < min_points:
        raise DegenerateGridError(f"need at least {min_points} distinct n values")
    if np.any(ns <= 0):
        raise DegenerateGridError("n values must be positive")
    n_rep = min(r.size for r in reps)
    if n_rep < min_replicates:
        raise DegenerateGridError(f"need at least {min_replicates} replicates per n")
    means = np.array([r.mean() for r in reps])
    if np.any(~np.isfinite(means)) or np.any(means <= 0):
        raise DegenerateGridError("mean losses must be positive and finite")
    slope, se, icpt = ols_slope(np.log(ns), np.log(means))
    passed = None if band is None else bool(band[0] <= slope <= band[1])
    return RateReport(
        slope, se, icpt, ns.tolist(), means.tolist(), int(n_rep), target,
        None if band is None else tuple(band), estimator, passed,
    )
