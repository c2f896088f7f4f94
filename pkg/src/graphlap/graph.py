"""Unweighted radius graphs and the normalized random-walk Laplacian.

Vertices ``x`` and ``y`` are joined when ``||x - y|| < h`` (strict). Because
``||x - x|| = 0 < h`` every vertex carries a self-loop, so the degree
``mu_x = #{y : ||x - y|| < h}`` is at least one and ``D^{-1} A`` is always a
stochastic matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree


def _as_points(cloud) -> np.ndarray:
    pts = getattr(cloud, "points", cloud)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


@dataclass(frozen=True, eq=False)
class RadiusGraph:
    """Radius graph with self-loops.

    Attributes
    ----------
    h : float
        Connectivity radius.
    adjacency : scipy.sparse.csr_matrix
        Symmetric 0/1 matrix, ones on the diagonal.
    degrees : ndarray of int
        ``mu``, the row sums of ``adjacency``.
    nu : ndarray
        Normalized degree measure ``mu / mu(V)``.
    components : ndarray of int
        Component label of every vertex.
    """

    h: float
    adjacency: sp.csr_matrix
    degrees: np.ndarray
    nu: np.ndarray
    components: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.adjacency.shape[0]

    @property
    def volume(self) -> int:
        """``mu(V)``, the total degree."""
        return int(self.degrees.sum())

    @property
    def n_components(self) -> int:
        return int(self.components.max()) + 1 if self.components.size else 0

    @property
    def is_connected(self) -> bool:
        return self.n_components == 1

    def edges(self) -> np.ndarray:
        """Ordered pairs ``(i, j)`` with ``i <= j``, self-loops included."""
        coo = sp.triu(self.adjacency).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return np.column_stack([coo.row[order], coo.col[order]])

    @cached_property
    def transition(self) -> sp.csr_matrix:
        """Random-walk matrix ``P = D^{-1} A``."""
        return (sp.diags(1.0 / self.degrees) @ self.adjacency).tocsr()

    def largest_component(self) -> np.ndarray:
        """Sorted vertex indices of the largest connected component."""
        counts = np.bincount(self.components)
        return np.flatnonzero(self.components == np.argmax(counts))

    def subgraph(self, idx) -> "RadiusGraph":
        idx = np.asarray(idx)
        return graph_from_adjacency(self.adjacency[idx][:, idx], self.h)


def graph_from_adjacency(adjacency, h: float) -> RadiusGraph:
    """Wrap an existing 0/1 adjacency (with self-loops) as a :class:`RadiusGraph`."""
    a = sp.csr_matrix(adjacency, dtype=float)
    a.sum_duplicates()
    a.eliminate_zeros()
    if (a != a.T).nnz:
        raise ValueError("adjacency must be symmetric")
    if np.any(a.diagonal() != 1):
        raise ValueError("adjacency must carry self-loops")
    mu = np.asarray(a.sum(axis=1)).ravel()
    _, labels = connected_components(a, directed=False)
    return RadiusGraph(float(h), a, mu.astype(np.int64), mu / mu.sum(), labels)


def build_graph(cloud, h: float) -> RadiusGraph:
    """Build the radius graph of ``cloud`` (a PointCloud or an N x D array).

    Candidate pairs come from a k-d tree query at radius ``h``; the strict
    inequality is then enforced exactly on the returned pairs.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    pts = _as_points(cloud)
    n = pts.shape[0]
    pairs = cKDTree(pts).query_pairs(h, output_type="ndarray")
    if len(pairs):
        dist = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
        pairs = pairs[dist < h]
    rows = np.concatenate([pairs[:, 0], pairs[:, 1], np.arange(n)])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0], np.arange(n)])
    a = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    mu = np.asarray(a.sum(axis=1)).ravel()
    _, labels = connected_components(a, directed=False)
    return RadiusGraph(float(h), a, mu.astype(np.int64), mu / mu.sum(), labels)


def local_degrees(cloud, r: float) -> np.ndarray:
    """``mu^{(r)}_i``: number of points (self included) within distance < r."""
    pts = _as_points(cloud)
    tree = cKDTree(pts)
    # the tree counts closed balls; shrink by one ulp to make it strict
    return tree.query_ball_point(pts, np.nextafter(r, 0), return_length=True).astype(np.int64)


@dataclass(frozen=True, eq=False)
class LaplacianOperator:
    """``calL = h^{-2} (I - D^{-1} A)`` acting on vertex functions."""

    graph: RadiusGraph

    @property
    def scale(self) -> float:
        return self.graph.h ** -2

    @property
    def n(self) -> int:
        return self.graph.n_vertices

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        g = self.graph
        return (self.scale * (sp.identity(g.n_vertices, format="csr") - g.transition)).tocsr()

    @cached_property
    def _edges(self):
        coo = self.graph.adjacency.tocoo()
        off = coo.row != coo.col
        return coo.row[off], coo.col[off]

    def apply(self, f, scaled: bool = True) -> np.ndarray:
        """``(calL f)(x) = h^{-2} mu_x^{-1} sum_{y ~ x} (f(x) - f(y))``.

        Summed edge by edge, so constants map to exactly zero. Accepts a
        vector or an N x k matrix. ``scaled=False`` drops the ``h^{-2}``.
        """
        f = np.asarray(f, dtype=float)
        if f.shape[0] != self.n:
            raise ValueError(f"expected length {self.n}, got {f.shape[0]}")
        row, col = self._edges
        diff = f[row] - f[col]
        out = np.zeros_like(f)
        np.add.at(out, row, diff)
        mu = self.graph.degrees if f.ndim == 1 else self.graph.degrees[:, None]
        out /= mu
        return out * self.scale if scaled else out

    __matmul__ = apply

    def symmetric(self) -> sp.csr_matrix:
        """``D^{1/2} calL D^{-1/2} = h^{-2}(I - D^{-1/2} A D^{-1/2})``, symmetric."""
        g = self.graph
        s = sp.diags(1.0 / np.sqrt(g.degrees))
        n = g.n_vertices
        return (self.scale * (sp.identity(n, format="csr") - s @ g.adjacency @ s)).tocsr()


def laplacian(graph: RadiusGraph) -> LaplacianOperator:
    return LaplacianOperator(graph)


def _check_len(graph: RadiusGraph, *vecs):
    out = []
    for v in vecs:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != graph.n_vertices:
            raise ValueError(f"expected length {graph.n_vertices}, got {v.shape[0]}")
        out.append(v)
    return out


def inner_nu(graph_or_nu, f, g) -> float:
    """``<f|g>_{L^2(nu)} = sum_y f(y) g(y) nu_y``."""
    nu = graph_or_nu.nu if isinstance(graph_or_nu, RadiusGraph) else np.asarray(graph_or_nu)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape[0] != nu.shape[0] or g.shape[0] != nu.shape[0]:
        raise ValueError("vector length does not match the number of vertices")
    return float(np.sum(f * g * nu))


def norm_nu(graph_or_nu, f) -> float:
    return float(np.sqrt(inner_nu(graph_or_nu, f, f)))


def dirichlet_form(graph: RadiusGraph, f, g) -> float:
    """``(1 / 2 mu(V)) sum_{x ~ y} (f(x) - f(y)) (g(x) - g(y))`` over ordered pairs.

    Uses the unscaled ``L``; equals ``<f | L g>_nu``.
    """
    f, g = _check_len(graph, f, g)
    coo = graph.adjacency.tocoo()
    df = f[coo.row] - f[coo.col]
    dg = g[coo.row] - g[coo.col]
    return float(np.sum(df * dg) / (2.0 * graph.volume))
