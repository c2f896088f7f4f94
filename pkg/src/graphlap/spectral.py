"""Eigenpairs of the scaled Laplacian and functional calculus built on them.

``calL = h^{-2}(I - D^{-1}A)`` is not symmetric, but it is self-adjoint in
``L^2(nu)``. With ``W = Diag(nu)^{1/2}`` the similarity transform

    S = W calL W^{-1} = h^{-2} (I - D^{-1/2} A D^{-1/2})

is a symmetric matrix with the same spectrum. If ``w`` is a Euclidean-unit
eigenvector of ``S`` then ``u = W^{-1} w = w / sqrt(nu)`` is an eigenvector of
``calL`` with ``<u|u>_nu = w.w = 1``, so orthonormality carries over exactly.

Every operator below is evaluated spectrally. With a partial basis
(``J_max < N``) results are the rank-``J_max`` truncation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sl
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh, splu
from scipy.special import factorial
from scipy.stats import poisson

from .graph import LaplacianOperator, RadiusGraph, laplacian

DENSE_LIMIT = 2000


class EigenSolverError(RuntimeError):
    """The eigensolver did not reach the residual tolerance."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Smallest eigenpairs of ``calL``, orthonormal in ``L^2(nu)``.

    ``eigenvectors[:, j]`` is ``u_{j+1}``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    nu: np.ndarray
    h: float
    residuals: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.eigenvectors.shape[0]

    @property
    def J_max(self) -> int:
        return self.eigenvectors.shape[1]

    @property
    def is_complete(self) -> bool:
        return self.J_max == self.n

    def coefficients(self, f, J: int | None = None) -> np.ndarray:
        """``<u_j | f>_nu`` for j = 1..J (works column-wise on matrices)."""
        u = self.eigenvectors if J is None else self.eigenvectors[:, :J]
        f = np.asarray(f, dtype=float)
        weighted = f * self.nu if f.ndim == 1 else f * self.nu[:, None]
        return u.T @ weighted

    def synthesize(self, coef) -> np.ndarray:
        coef = np.asarray(coef, dtype=float)
        return self.eigenvectors[:, : coef.shape[0]] @ coef

    def truncate(self, J: int) -> "SpectralBasis":
        _check_J(self, J)
        res = None if self.residuals is None else self.residuals[:J]
        return SpectralBasis(self.eigenvalues[:J], self.eigenvectors[:, :J], self.nu, self.h, res)

    def orthonormality_defect(self) -> float:
        u = self.eigenvectors
        gram = u.T @ (u * self.nu[:, None])
        return float(np.abs(gram - np.eye(self.J_max)).max())


def _check_J(basis: SpectralBasis, J: int):
    if not 1 <= J <= basis.J_max:
        raise ValueError(f"J={J} outside [1, {basis.J_max}]")


def _normalize_signs(w: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(w), axis=0)
    signs = np.sign(w[idx, np.arange(w.shape[1])])
    signs[signs == 0] = 1.0
    return w * signs


def _sparse_smallest(s: sp.spmatrix, k: int, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    n = s.shape[0]
    shifted = (s - sigma * sp.identity(n)).tocsc()
    # minimum-degree ordering on A + A^T factors these graph matrices far
    # faster than the default column ordering
    lu = splu(shifted, permc_spec="MMD_AT_PLUS_A", options=dict(SymmetricMode=True))
    opinv = LinearOperator((n, n), matvec=lu.solve, dtype=float)
    vals, vecs = eigsh(s, k=k, sigma=sigma, OPinv=opinv, which="LM")
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def decompose(
    op: LaplacianOperator | RadiusGraph,
    J_max: int,
    method: str = "auto",
    tol: float = 1e-6,
    check: bool = True,
) -> SpectralBasis:
    """The ``J_max`` smallest eigenpairs of ``calL`` via the symmetric similarity.

    ``method`` is ``"dense"`` (LAPACK), ``"sparse"`` (shift-invert Lanczos) or
    ``"auto"`` (dense for N <= 2000 or when nearly the whole spectrum is asked
    for). Raises :class:`EigenSolverError` if some residual
    ``||calL u - lambda u||_nu`` exceeds ``tol * max(1, lambda)``.
    """
    if isinstance(op, RadiusGraph):
        op = laplacian(op)
    g = op.graph
    n = g.n_vertices
    if not 1 <= J_max <= n:
        raise ValueError(f"J_max={J_max} outside [1, {n}]")
    if method == "auto":
        method = "dense" if (n <= DENSE_LIMIT or J_max >= n - 1) else "sparse"
    s = op.symmetric()
    if method == "dense":
        vals, w = sl.eigh(s.toarray(), subset_by_index=[0, J_max - 1])
    elif method == "sparse":
        if J_max >= n - 1:
            raise ValueError("sparse solver needs J_max < N - 1")
        vals, w = _sparse_smallest(s, J_max, sigma=-1e-2 * op.scale * 1e-2)
    else:
        raise ValueError(f"unknown method {method!r}")
    w = _normalize_signs(w)
    vals = np.clip(vals, 0.0, None)
    u = w / np.sqrt(g.nu)[:, None]
    resid_vec = op.matrix @ u - u * vals
    residuals = np.sqrt(np.sum(resid_vec**2 * g.nu[:, None], axis=0))
    if check:
        bad = residuals > tol * np.maximum(1.0, vals)
        if np.any(bad):
            raise EigenSolverError(
                f"{int(bad.sum())} eigenpairs above residual tolerance "
                f"(max {residuals.max():.3g})",
                residuals,
            )
    return SpectralBasis(vals, u, g.nu.copy(), g.h, residuals)


# ---------------------------------------------------------------- calculus


def spectral_apply(basis: SpectralBasis, multiplier, f, J: int | None = None) -> np.ndarray:
    """``sum_j m(lambda_j) <u_j|f>_nu u_j`` with ``multiplier`` a callable or array."""
    lam = basis.eigenvalues if J is None else basis.eigenvalues[:J]
    m = multiplier(lam) if callable(multiplier) else np.asarray(multiplier, dtype=float)
    coef = basis.coefficients(f, len(lam))
    scaled = coef * m if coef.ndim == 1 else coef * m[:, None]
    return basis.eigenvectors[:, : len(lam)] @ scaled


def heat_apply(basis: SpectralBasis, t: float, f) -> np.ndarray:
    """``e^{-t calL} f``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return spectral_apply(basis, lambda lam: np.exp(-t * lam), f)


def heat_kernel(basis: SpectralBasis, t: float, rows=None) -> np.ndarray:
    """``p_t(x, y) = sum_j e^{-t lambda_j} u_j(x) u_j(y)`` (density w.r.t. nu).

    ``rows`` restricts ``x`` to a subset; the full matrix is N x N.
    """
    u = basis.eigenvectors
    ux = u if rows is None else u[np.asarray(rows)]
    return (ux * np.exp(-t * basis.eigenvalues)) @ u.T


def heat_operator(basis: SpectralBasis, t: float) -> np.ndarray:
    """Matrix of ``e^{-t calL}``: entry ``(x, y)`` is ``p_t(x, y) nu_y``."""
    return heat_kernel(basis, t) * basis.nu[None, :]


def heat_diagonal(basis: SpectralBasis, t, vertices=None) -> np.ndarray:
    """``p_t(x, x)`` for one ``t`` (vector) or an array of ``t`` (rows per t)."""
    u = basis.eigenvectors if vertices is None else basis.eigenvectors[np.asarray(vertices)]
    sq = u**2
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.exp(-np.outer(ts, basis.eigenvalues)) @ sq.T
    return out[0] if np.ndim(t) == 0 else out


def heat_diagonal_chain(graph: RadiusGraph, ts, vertices, tail: float = 1e-14) -> np.ndarray:
    """``p_t(x, x)`` without an eigendecomposition.

    ``e^{-t calL} = e^{-s} sum_l s^l P^l / l!`` with ``s = t / h^2`` and
    ``P = D^{-1} A``, so the diagonal is a Poisson mixture of return
    probabilities ``P^l(x, x)`` of the lazy-free random walk. Returns an array
    of shape ``(len(ts), len(vertices))``.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    verts = np.atleast_1d(np.asarray(vertices))
    rates = ts / graph.h**2
    smax = rates.max()
    lmax = int(poisson.isf(tail, smax)) + 1 if smax > 0 else 0
    pt = graph.transition.T.tocsr()
    r = np.zeros((graph.n_vertices, verts.size))
    r[verts, np.arange(verts.size)] = 1.0
    returns = np.empty((lmax + 1, verts.size))
    for l in range(lmax + 1):
        returns[l] = r[verts, np.arange(verts.size)]
        if l < lmax:
            r = pt @ r
    weights = poisson.pmf(np.arange(lmax + 1)[:, None], rates[None, :])
    return (weights.T @ returns) / graph.nu[verts]


def taylor_lift(basis_or_op, t: float, f, beta: float) -> np.ndarray:
    """``f_t = sum_{l=0}^{k} (t calL)^l f / l!`` with ``k = ceil(beta/2) - 1``.

    With a :class:`LaplacianOperator` (or graph) the powers come from repeated
    sparse products; with a :class:`SpectralBasis` they are applied spectrally.
    """
    if t < 0 or beta <= 0:
        raise ValueError("need t >= 0 and beta > 0")
    k = math.ceil(beta / 2) - 1
    f = np.asarray(f, dtype=float)
    if isinstance(basis_or_op, SpectralBasis):
        if k == 0:
            return f.copy()
        return spectral_apply(
            basis_or_op,
            lambda lam: sum((t * lam) ** l / math.factorial(l) for l in range(k + 1)),
            f,
        )
    op = laplacian(basis_or_op) if isinstance(basis_or_op, RadiusGraph) else basis_or_op
    out = f.copy()
    term = f
    for l in range(1, k + 1):
        term = t * op.apply(term) / l
        out = out + term
    return out


def project(basis: SpectralBasis, J: int, g) -> np.ndarray:
    """``p_J g = sum_{j <= J} <u_j|g>_nu u_j``."""
    _check_J(basis, J)
    u = basis.eigenvectors[:, :J]
    return u @ basis.coefficients(g, J)


def q_multiplier(lam, t: float, k: int) -> np.ndarray:
    """``sum_{l<=k} (t lam)^l e^{-t lam} / l!`` (a Poisson cdf in ``t lam``)."""
    x = t * np.asarray(lam, dtype=float)
    return poisson.cdf(k, x) if t > 0 else np.ones_like(x)


def q_kernel_apply(basis: SpectralBasis, t: float, k: int, f) -> np.ndarray:
    """``Q_t^{(k)} f`` with ``Q_t^{(k)} = sum_{l<=k} (t calL)^l e^{-t calL} / l!``."""
    if t < 0 or k < 0:
        raise ValueError("need t >= 0 and k >= 0")
    return spectral_apply(basis, lambda lam: q_multiplier(lam, t, k), f)


ChiFunction = Callable[[np.ndarray, int], np.ndarray]


def exp_chi(x, order: int = 0):
    """``chi(x) = e^{-x}``; its ``order``-th derivative is ``(-1)^order e^{-x}``."""
    return (-1.0) ** order * np.exp(-np.asarray(x, dtype=float))


def chi_multiplier(chi: ChiFunction, lam, t: float, k: int) -> np.ndarray:
    """``sum_{l<=k} (-t lam)^l chi^{(l)}(t lam) / l!``."""
    x = t * np.asarray(lam, dtype=float)
    return sum((-x) ** l * np.asarray(chi(x, l), dtype=float) / factorial(l) for l in range(k + 1))


def chi_kernel_regress(
    basis: SpectralBasis, t: float, k: int, chi: ChiFunction, y, labeled_idx
) -> np.ndarray:
    """``f_hat(x) = sum_i chi_t^{(k)}(x, x_i) y_i nu_{x_i}`` over labeled vertices.

    The kernel is ``chi_t^{(k)}(x, y) = sum_j m(lambda_j) u_j(x) u_j(y)`` with
    ``m`` from :func:`chi_multiplier`. ``chi(x, l)`` returns the ``l``-th
    derivative of ``chi`` at ``x``.
    """
    if not np.isclose(float(np.asarray(chi(np.zeros(1), 0)).ravel()[0]), 1.0, rtol=0, atol=1e-12):
        raise ValueError("chi(0) must equal 1")
    if t < 0 or k < 0:
        raise ValueError("need t >= 0 and k >= 0")
    idx = np.asarray(labeled_idx)
    y = np.asarray(y, dtype=float)
    if y.shape != idx.shape:
        raise ValueError("y and labeled_idx must have equal length")
    padded = np.zeros(basis.n)
    padded[idx] = y
    return spectral_apply(basis, lambda lam: chi_multiplier(chi, lam, t, k), padded)


def heat_time(basis: SpectralBasis, J: int, c: float = 4.0, n_points: int | None = None) -> float:
    """``t = c ln(N) / lambda_J``; infinite when ``lambda_J`` is numerically zero."""
    _check_J(basis, J)
    n = basis.n if n_points is None else n_points
    lam = basis.eigenvalues[J - 1]
    if c == 0:
        return 0.0
    # eigenvalues of a connected component's constant mode come out at roundoff level
    if lam <= 1e-10 * basis.h**-2:
        warnings.warn("lambda_J is zero; heat time is infinite", RuntimeWarning, stacklevel=2)
        return math.inf
    return c * math.log(n) / lam
