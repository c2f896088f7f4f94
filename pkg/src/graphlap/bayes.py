"""Random eigenbasis-expansion priors and their posteriors.

A prior draw is ``f = sum_{j<=J} Z_j u_j^{(h)}`` with ``Z_j`` i.i.d. from a
density ``psi``; ``(J, h)`` are either fixed or carry hyperpriors. With a
Gaussian ``psi`` every ``(J, h)`` model is conjugate and the mixture posterior
over a finite grid is computed exactly. Other ``psi`` go through a
Metropolis-within-Gibbs sampler.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sl
from scipy import stats
from scipy.special import logsumexp

from .estimators import RegressionDataset
from .graph import build_graph
from .spectral import SpectralBasis, decompose

# ---------------------------------------------------------------- psi


class GaussianPsi:
    """``N(0, s2)``; tail ``P(|Z| > z) <= exp(-z^2 / (2 s2))``."""

    name = "gaussian"

    def __init__(self, s2: float = 1.0):
        if not s2 > 0:
            raise ValueError("s2 must be positive")
        self.s2 = float(s2)

    @property
    def tail_params(self) -> tuple[float, float]:
        return 1.0 / (2 * self.s2), 2.0

    def logpdf(self, z):
        return stats.norm.logpdf(z, scale=math.sqrt(self.s2))

    def sample(self, rng, size):
        return math.sqrt(self.s2) * rng.standard_normal(size)

    def cdf(self, z):
        return stats.norm.cdf(z, scale=math.sqrt(self.s2))

    def to_dict(self):
        return {"kind": "gaussian", "s2": self.s2}


class LaplacePsi:
    """Laplace with scale ``b``; ``P(|Z| > z) = exp(-z / b)``."""

    name = "laplace"

    def __init__(self, b: float = 1.0):
        if not b > 0:
            raise ValueError("b must be positive")
        self.b = float(b)

    @property
    def tail_params(self) -> tuple[float, float]:
        return 1.0 / self.b, 1.0

    def logpdf(self, z):
        return stats.laplace.logpdf(z, scale=self.b)

    def sample(self, rng, size):
        return rng.laplace(0.0, self.b, size)

    def cdf(self, z):
        return stats.laplace.cdf(z, scale=self.b)

    def to_dict(self):
        return {"kind": "laplace", "b": self.b}


class CustomPsi:
    """User density with declared tail parameters ``(b1, b2)`` valid for ``z >= z0``."""

    name = "custom"

    def __init__(self, logpdf: Callable, sampler: Callable, b1: float, b2: float, z0: float = 0.0):
        self._logpdf = logpdf
        self._sampler = sampler
        self.b1, self.b2, self.z0 = float(b1), float(b2), float(z0)

    @property
    def tail_params(self) -> tuple[float, float]:
        return self.b1, self.b2

    def logpdf(self, z):
        return np.asarray(self._logpdf(z), dtype=float)

    def sample(self, rng, size):
        return np.asarray(self._sampler(rng, size), dtype=float)

    def to_dict(self):
        return {"kind": "custom", "b1": self.b1, "b2": self.b2, "z0": self.z0}


def sieve_tail_probability(psi, J: int, z: float, draws: int = 100_000, seed=None):
    """Monte Carlo ``P(max_{j<=J} |Z_j| > z)``, its s.e. and ``J exp(-b1 z^b2)``."""
    rng = np.random.default_rng(seed)
    zs = psi.sample(rng, (draws, J))
    hit = np.abs(zs).max(axis=1) > z
    p = float(hit.mean())
    se = math.sqrt(max(p * (1 - p), 1.0 / draws) / draws)
    b1, b2 = psi.tail_params
    return p, se, J * math.exp(-b1 * z**b2)


# ---------------------------------------------------------------- J priors


class FixedJ:
    def __init__(self, J: int):
        if int(J) != J or J < 1:
            raise ValueError("J must be a positive integer")
        self.J = int(J)

    def logpmf(self, j):
        j = np.asarray(j)
        return np.where(j == self.J, 0.0, -np.inf)

    def sample(self, rng):
        return self.J

    def to_dict(self):
        return {"kind": "fixed", "J": self.J}


class PoissonJ:
    """Poisson(lam) conditioned on ``J >= 1``."""

    def __init__(self, lam: float):
        if not lam > 0:
            raise ValueError("lam must be positive")
        self.lam = float(lam)

    def logpmf(self, j):
        j = np.asarray(j)
        out = stats.poisson.logpmf(j, self.lam) - math.log(-math.expm1(-self.lam))
        return np.where(j >= 1, out, -np.inf)

    def sample(self, rng):
        while True:
            j = int(rng.poisson(self.lam))
            if j >= 1:
                return j

    def to_dict(self):
        return {"kind": "poisson", "lam": self.lam}


class GeometricJ:
    """``P(J = j) = (1 - p)^{j-1} p`` on ``j >= 1``."""

    def __init__(self, p: float):
        if not 0 < p <= 1:
            raise ValueError("p must lie in (0, 1]")
        self.p = float(p)

    def logpmf(self, j):
        return stats.geom.logpmf(j, self.p)

    def sample(self, rng):
        return int(rng.geometric(self.p))

    def to_dict(self):
        return {"kind": "geometric", "p": self.p}


# ---------------------------------------------------------------- h priors


def h_star(n: int, D: int, m_n: float = 1.0) -> float:
    """Smallest grid bandwidth ``m_n (ln n / n)^{1/D}``."""
    return m_n * (math.log(n) / n) ** (1.0 / D)


def dyadic_levels(hstar: float, h_max: float = 1.0) -> int:
    """Largest ``L`` with ``2^L h_* <= h_max`` (at least 0)."""
    return max(0, int(math.floor(math.log2(h_max / hstar) + 1e-12)))


def inverse_gamma_discretized_h(a: float, lam: float, hstar: float, L: int) -> np.ndarray:
    """Masses of ``h = 2^l h_*`` obtained by binning ``h~ ~ IG(a, lam)``.

    Bins are ``[0, 2 h_*]`` for ``l = 0``, ``(2^l h_*, 2^{l+1} h_*]`` in
    between and ``(2^L h_*, inf)`` for ``l = L``, so they partition the
    half-line and the masses telescope to one.
    """
    if not a > 0:
        raise ValueError("the inverse-gamma shape a must be positive")
    if not lam > 0 or not hstar > 0 or L < 0:
        raise ValueError("need lam > 0, h_* > 0, L >= 0")
    if L == 0:
        return np.ones(1)
    edges = hstar * 2.0 ** np.arange(1, L + 1)
    cdf = stats.invgamma.cdf(edges, a, scale=lam)
    masses = np.diff(np.concatenate([[0.0], cdf, [1.0]]))
    return masses / masses.sum()


class FixedH:
    def __init__(self, h: float):
        if not h > 0:
            raise ValueError("h must be positive")
        self.h = float(h)

    def grid(self, J: int):
        return np.array([self.h]), np.zeros(1)

    def all_h(self):
        return [self.h]

    def to_dict(self):
        return {"kind": "fixed", "h": self.h}


class DeterministicH:
    """``h = h0 J^{-1/d} / ln^{tau/d} N`` given ``J``."""

    def __init__(self, tau: float, h0: float, d: int, N: int):
        self.tau, self.h0, self.d, self.N = float(tau), float(h0), int(d), int(N)

    def h_of(self, J: int) -> float:
        return self.h0 * J ** (-1.0 / self.d) / math.log(self.N) ** (self.tau / self.d)

    def grid(self, J: int):
        return np.array([self.h_of(J)]), np.zeros(1)

    def all_h(self, J_cap: int):
        return [self.h_of(j) for j in range(1, J_cap + 1)]

    def to_dict(self):
        return {"kind": "deterministic", "tau": self.tau, "h0": self.h0, "d": self.d, "N": self.N}


class GridH:
    """Arbitrary finite grid of bandwidths with J-independent masses."""

    def __init__(self, values, probs):
        values = np.asarray(values, dtype=float)
        probs = np.asarray(probs, dtype=float)
        if values.shape != probs.shape or values.size == 0 or np.any(probs < 0):
            raise ValueError("need matching nonempty values and nonnegative masses")
        order = np.argsort(values)
        self.values = values[order]
        self.probs = probs[order] / probs.sum()
        with np.errstate(divide="ignore"):
            self.logprobs = np.log(self.probs)

    def grid(self, J: int):
        return self.values, self.logprobs

    def all_h(self):
        return list(self.values)

    def with_point(self, h: float, mass: float) -> "GridH":
        """Add ``h`` with probability ``mass``, scaling the others by ``1 - mass``."""
        if h in self.values:
            return self
        return GridH(np.append(self.values, h), np.append(self.probs * (1 - mass), mass))

    def to_dict(self):
        return {"kind": "grid", "values": self.values.tolist(), "probs": self.probs.tolist()}


class DyadicH(GridH):
    """Grid ``h_l = 2^l h_*, l = 0..L`` with J-independent masses.

    ``mass="inverse-gamma"`` bins an ``IG(a, lam)`` variable; ``mass="power"``
    uses weights proportional to ``exp(-lam h^{-d}) h^a``.
    """

    def __init__(self, hstar: float, L: int, lam: float = 1.0, a: float = 1.0,
                 mass: str = "inverse-gamma", d: int = 1):
        self.hstar, self.L, self.lam, self.a, self.mass, self.d = (
            float(hstar), int(L), float(lam), float(a), mass, int(d))
        self.values = self.hstar * 2.0 ** np.arange(self.L + 1)
        if mass == "inverse-gamma":
            probs = inverse_gamma_discretized_h(a, lam, hstar, L)
        elif mass == "power":
            logw = -lam * self.values ** (-self.d) + a * np.log(self.values)
            probs = np.exp(logw - logsumexp(logw))
        else:
            raise ValueError(f"unknown mass {mass!r}")
        self.probs = probs
        with np.errstate(divide="ignore"):
            self.logprobs = np.log(probs)

    def to_dict(self):
        return {"kind": "dyadic", "h_star": self.hstar, "L": self.L, "lam": self.lam,
                "a": self.a, "mass": self.mass, "d": self.d}


@dataclass
class PriorSpec:
    psi: object
    j_prior: object
    h_prior: object
    sigma: float

    def to_dict(self):
        return {"psi": self.psi.to_dict(), "j_prior": self.j_prior.to_dict(),
                "h_prior": self.h_prior.to_dict(), "sigma": self.sigma}


class BasisProvider:
    """Maps ``h`` to the spectral basis of the radius graph at ``h`` (cached)."""

    def __init__(self, cloud, J_max: int, method: str = "auto"):
        self.cloud = cloud
        self.J_max = int(min(J_max, cloud.n_points))
        self.method = method
        self._cache: dict[float, SpectralBasis] = {}

    def __call__(self, h: float) -> SpectralBasis:
        key = float(h)
        if key not in self._cache:
            g = build_graph(self.cloud, key)
            self._cache[key] = decompose(g, self.J_max, method=self.method)
        return self._cache[key]

    def __len__(self):
        return len(self._cache)


def sample_prior(spec: PriorSpec, provider: BasisProvider, seed=None):
    """Draw ``(J, h, f)`` from the prior."""
    rng = np.random.default_rng(seed)
    J = int(spec.j_prior.sample(rng))
    hs, logp = spec.h_prior.grid(J)
    h = float(hs[rng.choice(hs.size, p=np.exp(logp - logsumexp(logp)))])
    basis = provider(h)
    if J > basis.J_max:
        warnings.warn(f"J={J} exceeds the {basis.J_max} available eigenpairs; truncating",
                      RuntimeWarning, stacklevel=2)
        J = basis.J_max
    z = spec.psi.sample(rng, J)
    return J, h, basis.eigenvectors[:, :J] @ z


# ---------------------------------------------------------------- conjugate path


def _labeled_design(dataset: RegressionDataset, basis: SpectralBasis, J: int) -> np.ndarray:
    if basis.n != dataset.N:
        raise ValueError("basis and dataset disagree on N")
    if not 1 <= J <= basis.J_max:
        raise ValueError(f"J={J} outside [1, {basis.J_max}]")
    return basis.eigenvectors[: dataset.n, :J]


@dataclass(frozen=True, eq=False)
class _ConjugateSystem:
    """Cholesky data of ``B = I + (s2/sigma^2) Phi^T Phi`` for the largest J.

    Leading blocks of the factor are the factors of the leading blocks of
    ``B``, so every smaller ``J`` reuses the same decomposition.
    """

    R: np.ndarray  # lower triangular
    c: np.ndarray  # R^{-1} Phi^T y
    yy: float
    n: int
    s2: float
    sigma: float

    def log_evidence(self, J: int | None = None) -> np.ndarray | float:
        s2, sig2 = self.s2, self.sigma**2
        logdiag = np.log(np.diag(self.R))
        logdet = self.n * math.log(2 * math.pi * sig2) + 2 * np.cumsum(logdiag)
        quad = self.yy / sig2 - (s2 / sig2**2) * np.cumsum(self.c**2)
        vals = -0.5 * (logdet + quad)
        return vals if J is None else float(vals[J - 1])

    def mean(self, J: int) -> np.ndarray:
        R = self.R[:J, :J]
        return (self.s2 / self.sigma**2) * sl.solve_triangular(R.T, self.c[:J], lower=False)

    def draw(self, J: int, rng, size=None) -> np.ndarray:
        xi = rng.standard_normal(J if size is None else (size, J))
        R = self.R[:J, :J]
        noise = sl.solve_triangular(R.T, xi.T, lower=False).T
        return self.mean(J) + math.sqrt(self.s2) * noise


def _conjugate_system(dataset, basis, J, s2, sigma) -> _ConjugateSystem:
    phi = _labeled_design(dataset, basis, J)
    B = np.eye(J) + (s2 / sigma**2) * (phi.T @ phi)
    try:
        R = np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise ValueError("evidence system is not positive definite") from exc
    b = phi.T @ dataset.y
    c = sl.solve_triangular(R, b, lower=True)
    return _ConjugateSystem(R, c, float(dataset.y @ dataset.y), dataset.n, float(s2), float(sigma))


def log_evidence_gaussian(dataset: RegressionDataset, basis: SpectralBasis, J: int,
                          s2: float, sigma: float | None = None) -> float:
    """``log int N(y | Phi z, sigma^2 I) N(z | 0, s2 I) dz`` with ``Phi`` the
    labeled rows of ``u_1..u_J``."""
    sigma = dataset.sigma if sigma is None else sigma
    return _conjugate_system(dataset, basis, J, s2, sigma).log_evidence(J)


def conjugate_posterior(dataset, basis, J, s2, sigma=None):
    """Posterior mean and covariance of ``z`` for a fixed ``(J, h)``."""
    sigma = dataset.sigma if sigma is None else sigma
    sys_ = _conjugate_system(dataset, basis, J, s2, sigma)
    Rinv = sl.solve_triangular(sys_.R, np.eye(J), lower=True)
    return sys_.mean(J), s2 * (Rinv.T @ Rinv)


@dataclass(eq=False)
class PosteriorResult:
    table: list
    J_draws: np.ndarray
    h_draws: np.ndarray
    z_draws: list
    f_draws: np.ndarray
    posterior_mean: np.ndarray
    method: str = "gaussian"
    acceptance: dict = field(default_factory=dict)
    step_sizes: np.ndarray | None = None

    @property
    def n_draws(self) -> int:
        return self.f_draws.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.array([row["weight"] for row in self.table])

    def marginal_J(self) -> dict:
        out: dict = {}
        if self.table and "weight" in self.table[0]:
            for row in self.table:
                out[row["J"]] = out.get(row["J"], 0.0) + row["weight"]
        else:
            js, counts = np.unique(self.J_draws, return_counts=True)
            out = {int(j): c / self.J_draws.size for j, c in zip(js, counts)}
        return out

    def marginal_h(self) -> dict:
        out: dict = {}
        if self.table and "weight" in self.table[0]:
            for row in self.table:
                out[row["h"]] = out.get(row["h"], 0.0) + row["weight"]
        else:
            hs, counts = np.unique(self.h_draws, return_counts=True)
            out = {float(h): c / self.h_draws.size for h, c in zip(hs, counts)}
        return out

    @property
    def modal_J(self) -> int:
        m = self.marginal_J()
        return int(max(m, key=m.get))

    def draws_mean(self) -> np.ndarray:
        return self.f_draws.mean(axis=0)


def model_grid(spec: PriorSpec, J_cap: int):
    """``(J, h, log prior)`` over ``J <= J_cap``, unnormalized."""
    rows = []
    for J in range(1, J_cap + 1):
        lpj = float(spec.j_prior.logpmf(J))
        if not np.isfinite(lpj):
            continue
        hs, lph = spec.h_prior.grid(J)
        for h, lp in zip(hs, lph):
            if np.isfinite(lp):
                rows.append((J, float(h), lpj + float(lp)))
    return rows


def default_J_cap(n: int, N: int, d: int) -> int:
    return int(max(1, min(N, math.floor(4 * n ** (d / (2 + d))))))


def posterior_gaussian(dataset: RegressionDataset, spec: PriorSpec, provider: BasisProvider,
                       S: int = 200, J_cap: int | None = None, seed=None,
                       keep_draws: bool = True) -> PosteriorResult:
    """Exact mixture posterior over the finite ``(J, h)`` grid."""
    if not isinstance(spec.psi, GaussianPsi):
        raise ValueError("the conjugate path needs a Gaussian psi")
    d = dataset.cloud.manifold.intrinsic_dim
    J_cap = default_J_cap(dataset.n, dataset.N, d) if J_cap is None else int(J_cap)
    J_cap = min(J_cap, provider.J_max)
    grid = model_grid(spec, J_cap)
    if not grid:
        raise ValueError("empty (J, h) grid")
    s2 = spec.psi.s2
    systems = {}
    for h in sorted({h for _, h, _ in grid}):
        top = max(J for J, hh, _ in grid if hh == h)
        systems[h] = (provider(h), _conjugate_system(dataset, provider(h), top, s2, spec.sigma))
    table = []
    for J, h, lp in grid:
        le = systems[h][1].log_evidence(J)
        table.append({"J": J, "h": h, "log_prior": lp, "log_evidence": le,
                      "log_weight": lp + le})
    lw = np.array([r["log_weight"] for r in table])
    w = np.exp(lw - logsumexp(lw))
    for r, wi in zip(table, w):
        r["weight"] = float(wi)

    mean = np.zeros(dataset.N)
    for r in table:
        if r["weight"] > 0:
            basis, sys_ = systems[r["h"]]
            mean += r["weight"] * (basis.eigenvectors[:, : r["J"]] @ sys_.mean(r["J"]))

    rng = np.random.default_rng(seed)
    picks = rng.choice(len(table), size=S, p=w / w.sum()) if S > 0 else np.array([], int)
    J_draws = np.array([table[i]["J"] for i in picks], dtype=int)
    h_draws = np.array([table[i]["h"] for i in picks], dtype=float)
    z_draws, f_draws = [], np.empty((S if keep_draws else 0, dataset.N))
    for s, i in enumerate(picks):
        basis, sys_ = systems[table[i]["h"]]
        z = sys_.draw(table[i]["J"], rng)
        z_draws.append(z)
        if keep_draws:
            f_draws[s] = basis.eigenvectors[:, : z.size] @ z
    return PosteriorResult(table, J_draws, h_draws, z_draws, f_draws, mean, "gaussian")


# ---------------------------------------------------------------- MCMC path


def batch_means_se(x, n_batches: int | None = None) -> np.ndarray:
    """Monte Carlo standard error of the mean by non-overlapping batch means.

    Defaults to ``floor(sqrt(S))`` batches of ``floor(sqrt(S))`` draws.
    """
    x = np.asarray(x, dtype=float)
    if n_batches is None:
        n_batches = max(2, math.isqrt(x.shape[0]))
    m = x.shape[0] // n_batches
    if m < 1:
        raise ValueError("too few draws for batch means")
    b = x[: m * n_batches].reshape(n_batches, m, *x.shape[1:]).mean(axis=1)
    return b.std(axis=0, ddof=1) / math.sqrt(n_batches)


def posterior_mh(dataset: RegressionDataset, spec: PriorSpec, provider: BasisProvider,
                 S: int = 2000, burn_in: int = 1000, thin: int = 1, J_cap: int | None = None,
                 step: float = 0.1, target_accept: float = 0.3, seed=None) -> PosteriorResult:
    """Metropolis-within-Gibbs over ``(J, h, z)``.

    The state keeps ``z`` of length ``J_cap``. Coordinates beyond the active
    ``J`` do not touch the likelihood and are refreshed from ``psi`` each
    sweep, which makes the product-space target exact. Active coordinates get
    random-walk updates with per-coordinate step sizes, adapted during burn-in
    towards ``target_accept`` and then frozen. ``(J, h)`` moves use the prior
    (restricted to ``J <= J_cap``) as independence proposal, so their
    acceptance ratio is the likelihood ratio.
    """
    d = dataset.cloud.manifold.intrinsic_dim
    J_cap = default_J_cap(dataset.n, dataset.N, d) if J_cap is None else int(J_cap)
    J_cap = min(J_cap, provider.J_max)
    grid = model_grid(spec, J_cap)
    if not grid:
        raise ValueError("empty (J, h) grid")
    lp = np.array([g[2] for g in grid])
    prior_w = np.exp(lp - logsumexp(lp))
    J_cap = max(J for J, _, _ in grid)
    designs = {h: _labeled_design(dataset, provider(h), J_cap) for h in {g[1] for g in grid}}
    y, sig2 = dataset.y, spec.sigma**2
    psi = spec.psi
    rng = np.random.default_rng(seed)

    k = int(rng.choice(len(grid), p=prior_w))
    J, h = grid[k][0], grid[k][1]
    z = psi.sample(rng, J_cap)
    phi = designs[h]
    resid = y - phi[:, :J] @ z[:J]
    log_step = np.full(J_cap, math.log(step))
    acc_z = np.zeros(J_cap)
    tries_z = np.zeros(J_cap)
    acc_m = tries_m = 0
    total = burn_in + S * thin
    J_draws, h_draws, z_draws = [], [], []
    f_draws = np.empty((S, dataset.N))
    movable = len(grid) > 1

    for it in range(total):
        adapting = it < burn_in
        for j in range(J):
            delta = math.exp(log_step[j]) * rng.standard_normal()
            col = phi[:, j]
            new_resid = resid - delta * col
            log_a = (psi.logpdf(z[j] + delta) - psi.logpdf(z[j])
                     - (new_resid @ new_resid - resid @ resid) / (2 * sig2))
            accepted = math.log(rng.uniform()) < log_a
            if accepted:
                z[j] += delta
                resid = new_resid
            if adapting:
                log_step[j] += (it + 1) ** -0.6 * (float(accepted) - target_accept)
            else:
                tries_z[j] += 1
                acc_z[j] += accepted
        if J < J_cap:
            z[J:] = psi.sample(rng, J_cap - J)
        if movable:
            k2 = int(rng.choice(len(grid), p=prior_w))
            J2, h2 = grid[k2][0], grid[k2][1]
            phi2 = designs[h2]
            resid2 = y - phi2[:, :J2] @ z[:J2]
            log_a = -(resid2 @ resid2 - resid @ resid) / (2 * sig2)
            accepted = math.log(rng.uniform()) < log_a
            if accepted:
                J, h, phi, resid = J2, h2, phi2, resid2
            if not adapting:
                tries_m += 1
                acc_m += accepted
        if not adapting and (it - burn_in) % thin == thin - 1:
            s = (it - burn_in) // thin
            J_draws.append(J)
            h_draws.append(h)
            z_draws.append(z[:J].copy())
            f_draws[s] = provider(h).eigenvectors[:, :J] @ z[:J]

    active = tries_z > 0
    rate_z = float(acc_z[active].sum() / tries_z[active].sum()) if active.any() else math.nan
    acceptance = {"z": rate_z, "z_per_coord": (acc_z / np.maximum(tries_z, 1)).tolist()}
    if movable:
        acceptance["model"] = acc_m / max(tries_m, 1)
    if not 0.05 <= rate_z <= 0.95:
        warnings.warn(f"coefficient acceptance rate {rate_z:.3f} outside [0.05, 0.95]",
                      RuntimeWarning, stacklevel=2)
    table = [{"J": J_, "h": h_, "log_prior": lp_} for J_, h_, lp_ in grid]
    return PosteriorResult(table, np.array(J_draws), np.array(h_draws), z_draws, f_draws,
                           f_draws.mean(axis=0), "mh", acceptance, np.exp(log_step))


# ---------------------------------------------------------------- summaries


def credible_radius(result: PosteriorResult, dataset: RegressionDataset, alpha: float,
                    norm: str = "n") -> float:
    """Empirical ``alpha``-quantile of ``||f^{(s)} - f0||`` over the draws."""
    if result.n_draws < 50:
        raise ValueError("need at least 50 posterior draws")
    if dataset.f0 is None:
        raise ValueError("credible radii need the ground truth")
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    diff = result.f_draws - dataset.f0
    if norm == "n":
        diff = diff[:, : dataset.n]
    elif norm != "N":
        raise ValueError("norm must be 'n' or 'N'")
    dist = np.sqrt(np.mean(diff**2, axis=1))
    return float(np.quantile(dist, alpha))


def posterior_summary(result: PosteriorResult, dataset: RegressionDataset,
                      alphas=(0.5, 0.9, 0.95)) -> dict:
    out = {
        "method": result.method,
        "n": dataset.n,
        "N": dataset.N,
        "n_draws": result.n_draws,
        "table": result.table,
        "marginal_J": {str(k): v for k, v in result.marginal_J().items()},
        "modal_J": result.modal_J,
        "acceptance": result.acceptance,
    }
    if dataset.f0 is not None and result.n_draws >= 50:
        out["credible_radius_n"] = {str(a): credible_radius(result, dataset, a) for a in alphas}
        out["credible_radius_N"] = {str(a): credible_radius(result, dataset, a, "N")
                                    for a in alphas}
    if dataset.f0 is not None:
        diff = result.posterior_mean - dataset.f0
        out["mean_loss_n"] = float(np.sqrt(np.mean(diff[: dataset.n] ** 2)))
        out["mean_loss_N"] = float(np.sqrt(np.mean(diff**2)))
    return out
