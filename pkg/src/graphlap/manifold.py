"""Synthetic point clouds on known submanifolds.

Every cloud comes with a closed-form sampling density and a ground-truth
regression function of known Hölder smoothness, so downstream estimators and
diagnostics always have an oracle to compare against.

Supported kinds and their minimal embeddings::

    circle               S^1 in R^2            d = 1
    sphere2              S^2 in R^3            d = 2
    flat-torus-embedded  S^1 x S^1 in R^4      d = 2
    swiss-roll           rolled strip in R^3   d = 2
    interval             [0, 1] in R^1         d = 1

When ``ambient_dim`` exceeds the minimal dimension the coordinates are padded
with zeros and rotated by a fixed random orthogonal matrix (drawn from
``rotation_seed``), which leaves the intrinsic geometry untouched.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy import integrate
from scipy.stats import special_ortho_group

INTRINSIC_DIM = {
    "circle": 1,
    "sphere2": 2,
    "flat-torus-embedded": 2,
    "swiss-roll": 2,
    "interval": 1,
}
MIN_AMBIENT_DIM = {
    "circle": 2,
    "sphere2": 3,
    "flat-torus-embedded": 4,
    "swiss-roll": 3,
    "interval": 1,
}
DENSITIES = ("uniform", "smooth-tilted")

# swiss roll parametrisation: t in [T0, T1], height in [0, SWISS_HEIGHT]
_T0, _T1 = 1.5 * math.pi, 4.5 * math.pi
SWISS_HEIGHT = 21.0

# holder-kink cutoff: identity on r <= pi/2, zero for r >= 0.9 pi
_CUT_LO, _CUT_HI = 0.5 * math.pi, 0.9 * math.pi


class UnsupportedManifoldError(ValueError):
    """Raised for a (kind, ambient_dim) pairing or operation we cannot serve."""


@dataclass(frozen=True)
class ManifoldSpec:
    """Which manifold to sample from, and how.

    ``tilt`` carries the parameter vector of the ``smooth-tilted`` density; only
    its first entry ``a`` (with ``|a| < 1``) is used, giving a density
    proportional to ``1 + a * g`` for a kind-specific smooth ``g`` bounded by 1.
    """

    kind: str
    ambient_dim: int
    intrinsic_dim: int | None = None
    density: str = "uniform"
    tilt: tuple[float, ...] = ()
    seed: int = 0
    rotation_seed: int = 0

    def __post_init__(self):
        if self.kind not in INTRINSIC_DIM:
            raise UnsupportedManifoldError(f"unknown manifold kind {self.kind!r}")
        d = INTRINSIC_DIM[self.kind]
        if self.intrinsic_dim is None:
            object.__setattr__(self, "intrinsic_dim", d)
        elif self.intrinsic_dim != d:
            raise UnsupportedManifoldError(
                f"{self.kind} has intrinsic dimension {d}, got {self.intrinsic_dim}"
            )
        if self.ambient_dim < MIN_AMBIENT_DIM[self.kind]:
            raise UnsupportedManifoldError(
                f"{self.kind} needs ambient_dim >= {MIN_AMBIENT_DIM[self.kind]}, "
                f"got {self.ambient_dim}"
            )
        if self.density not in DENSITIES:
            raise ValueError(f"unknown density {self.density!r}")
        object.__setattr__(self, "tilt", tuple(float(a) for a in self.tilt))
        if self.density == "smooth-tilted":
            if not self.tilt or abs(self.tilt[0]) >= 1:
                raise ValueError("smooth-tilted density needs tilt=(a,) with |a| < 1")

    @property
    def tilt_amplitude(self) -> float:
        return self.tilt[0] if self.density == "smooth-tilted" else 0.0

    def with_seed(self, seed: int) -> "ManifoldSpec":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ambient_dim": self.ambient_dim,
            "intrinsic_dim": self.intrinsic_dim,
            "density": self.density,
            "tilt": list(self.tilt),
            "seed": self.seed,
            "rotation_seed": self.rotation_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ManifoldSpec":
        data = dict(data)
        data["tilt"] = tuple(data.get("tilt", ()))
        return cls(**data)


@dataclass(eq=False)
class PointCloud:
    points: np.ndarray
    manifold: ManifoldSpec
    true_values: np.ndarray | None = None
    holder_beta: float = math.inf
    family: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.shape[0] < 1:
            raise ValueError("a point cloud needs at least one point")
        if self.true_values is not None:
            self.true_values = np.asarray(self.true_values, dtype=float)
            if self.true_values.shape != (self.points.shape[0],):
                raise ValueError("true_values must have one entry per point")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def subset(self, idx) -> "PointCloud":
        idx = np.asarray(idx)
        tv = None if self.true_values is None else self.true_values[idx]
        return PointCloud(self.points[idx], self.manifold, tv, self.holder_beta, self.family)


# ---------------------------------------------------------------- embedding


@lru_cache(maxsize=64)
def _rotation(kind: str, ambient_dim: int, rotation_seed: int) -> np.ndarray | None:
    if ambient_dim == MIN_AMBIENT_DIM[kind]:
        return None
    rng = np.random.default_rng([rotation_seed, ambient_dim, 0x5EED])
    return special_ortho_group.rvs(ambient_dim, random_state=rng)


def rotation_matrix(spec: ManifoldSpec) -> np.ndarray | None:
    """Orthogonal matrix used to embed the minimal coordinates, or None."""
    return _rotation(spec.kind, spec.ambient_dim, spec.rotation_seed)


def embed(spec: ManifoldSpec, minimal: np.ndarray) -> np.ndarray:
    """Map minimal-embedding coordinates into R^D."""
    q = rotation_matrix(spec)
    if q is None:
        return minimal
    padded = np.zeros((minimal.shape[0], spec.ambient_dim))
    padded[:, : minimal.shape[1]] = minimal
    return padded @ q.T


def unembed(spec: ManifoldSpec, points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != spec.ambient_dim:
        raise ValueError(f"points have dimension {points.shape[1]}, expected {spec.ambient_dim}")
    q = rotation_matrix(spec)
    if q is None:
        return points
    return (points @ q)[:, : MIN_AMBIENT_DIM[spec.kind]]


def _swiss_minimal(t, s):
    return np.column_stack([t * np.cos(t), s, t * np.sin(t)])


def intrinsic_coords(spec: ManifoldSpec, points: np.ndarray) -> np.ndarray:
    """Intrinsic coordinates of points lying on the manifold.

    circle: angle in (-pi, pi]; sphere2: (polar angle, azimuth);
    torus: two angles; swiss-roll: (u, v) in [0, 1]^2; interval: x.
    """
    m = unembed(spec, points)
    kind = spec.kind
    if kind == "circle":
        return np.arctan2(m[:, 1], m[:, 0])[:, None]
    if kind == "sphere2":
        polar = np.arccos(np.clip(m[:, 2], -1.0, 1.0))
        return np.column_stack([polar, np.arctan2(m[:, 1], m[:, 0])])
    if kind == "flat-torus-embedded":
        return np.column_stack([np.arctan2(m[:, 1], m[:, 0]), np.arctan2(m[:, 3], m[:, 2])])
    if kind == "swiss-roll":
        t = np.hypot(m[:, 0], m[:, 2])
        return np.column_stack([(t - _T0) / (_T1 - _T0), m[:, 1] / SWISS_HEIGHT])
    return m[:, :1].copy()


# ---------------------------------------------------------------- densities


def _tilt_profile(spec: ManifoldSpec, coords: np.ndarray) -> np.ndarray:
    """The bounded function g in p0 ∝ 1 + a*g, in intrinsic coordinates."""
    kind = spec.kind
    if kind == "circle":
        return np.cos(coords[:, 0])
    if kind == "sphere2":
        return np.cos(coords[:, 0])  # = z coordinate
    if kind == "flat-torus-embedded":
        return np.cos(coords[:, 0])
    return np.cos(2 * math.pi * coords[:, 0])


def _swiss_arclength_weight(t):
    return np.sqrt(1.0 + t * t)


@lru_cache(maxsize=16)
def _normaliser(kind: str, a: float) -> float:
    if kind == "circle":
        return 2 * math.pi
    if kind == "sphere2":
        return 4 * math.pi
    if kind == "flat-torus-embedded":
        return 4 * math.pi**2
    if kind == "interval":
        return 1.0
    # swiss roll: area of the (tilted) strip, by quadrature in t
    val, _ = integrate.quad(
        lambda t: (1 + a * math.cos(2 * math.pi * (t - _T0) / (_T1 - _T0))) * math.sqrt(1 + t * t),
        _T0,
        _T1,
        limit=200,
    )
    return val * SWISS_HEIGHT


def density(spec: ManifoldSpec, points: np.ndarray) -> np.ndarray:
    """Sampling density p0 with respect to the Riemannian volume measure."""
    coords = intrinsic_coords(spec, points)
    a = spec.tilt_amplitude
    return (1.0 + a * _tilt_profile(spec, coords)) / _normaliser(spec.kind, a)


def _propose(kind: str, rng: np.random.Generator, size: int) -> np.ndarray:
    """Volume-uniform draws in minimal coordinates, plus intrinsic coordinates."""
    if kind == "circle":
        th = rng.uniform(-math.pi, math.pi, size)
        return np.column_stack([np.cos(th), np.sin(th)]), th[:, None]
    if kind == "sphere2":
        x = rng.standard_normal((size, 3))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        polar = np.arccos(np.clip(x[:, 2], -1, 1))
        return x, np.column_stack([polar, np.arctan2(x[:, 1], x[:, 0])])
    if kind == "flat-torus-embedded":
        ang = rng.uniform(-math.pi, math.pi, (size, 2))
        pts = np.column_stack(
            [np.cos(ang[:, 0]), np.sin(ang[:, 0]), np.cos(ang[:, 1]), np.sin(ang[:, 1])]
        )
        return pts, ang
    if kind == "swiss-roll":
        # area element is sqrt(1 + t^2) dt ds; rejection against its maximum
        wmax = _swiss_arclength_weight(_T1)
        ts = []
        while sum(len(c) for c in ts) < size:
            t = rng.uniform(_T0, _T1, 2 * size)
            keep = rng.uniform(0, wmax, t.size) < _swiss_arclength_weight(t)
            ts.append(t[keep])
        t = np.concatenate(ts)[:size]
        s = rng.uniform(0, SWISS_HEIGHT, size)
        coords = np.column_stack([(t - _T0) / (_T1 - _T0), s / SWISS_HEIGHT])
        return _swiss_minimal(t, s), coords
    x = rng.uniform(0.0, 1.0, size)
    return x[:, None], x[:, None]


def _sample_minimal(spec: ManifoldSpec, n: int, rng: np.random.Generator):
    a = spec.tilt_amplitude
    if a == 0.0:
        return _propose(spec.kind, rng, n)
    pts, crd, got = [], [], 0
    while got < n:
        p, c = _propose(spec.kind, rng, max(2 * (n - got), 16))
        accept = rng.uniform(0, 1 + abs(a), p.shape[0]) < 1 + a * _tilt_profile(spec, c)
        pts.append(p[accept])
        crd.append(c[accept])
        got += int(accept.sum())
    return np.concatenate(pts)[:n], np.concatenate(crd)[:n]


# ---------------------------------------------------------------- truth


TruthFamily = Union[str, Callable[[np.ndarray], np.ndarray]]

_TRIG = re.compile(r"^trig-(\d+)$")
_KINK = re.compile(r"^holder-kink\(\s*([0-9.eE+-]+)\s*\)$")


def parse_family(family: str) -> tuple[str, float]:
    """'trig-3' -> ('trig', 3); 'holder-kink(0.5)' -> ('holder-kink', 0.5)."""
    m = _TRIG.match(family)
    if m:
        return "trig", int(m.group(1))
    m = _KINK.match(family)
    if m:
        beta = float(m.group(1))
        if not 0 < beta <= 2:
            raise ValueError(f"holder-kink needs beta in (0, 2], got {beta}")
        return "holder-kink", beta
    raise ValueError(f"unknown truth family {family!r}")


def family_smoothness(family: str) -> float:
    name, par = parse_family(family)
    return math.inf if name == "trig" else float(par)


def _smooth_cutoff(r: np.ndarray) -> np.ndarray:
    """C-infinity function equal to 1 on [0, pi/2] and 0 on [0.9 pi, inf)."""

    def psi(x):
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = np.exp(-1.0 / x[pos])
        return out

    s = (r - _CUT_LO) / (_CUT_HI - _CUT_LO)
    return psi(1.0 - s) / (psi(1.0 - s) + psi(s))


def eval_truth(spec: ManifoldSpec, points: np.ndarray, family: TruthFamily) -> np.ndarray:
    """Ground-truth regression function at ``points``.

    ``trig-k`` is C-infinity (cos of k times the first intrinsic angle, or of
    k*pi times the first unit coordinate on the interval and the swiss roll).
    ``holder-kink(beta)`` behaves like ``r**beta`` in a geodesic-type coordinate
    ``r`` around a base point, so it is C^beta there and no smoother.
    """
    if callable(family):
        return np.asarray(family(points), dtype=float)
    name, par = parse_family(family)
    coords = intrinsic_coords(spec, points)
    kind = spec.kind
    first = coords[:, 0]
    if name == "trig":
        k = int(par)
        if kind in ("interval", "swiss-roll"):
            return np.cos(k * math.pi * first)
        return np.cos(k * first)
    beta = float(par)
    if kind in ("interval", "swiss-roll"):
        return np.abs(first - 0.5) ** beta
    r = np.abs(first)  # |angle| on circle/torus, polar angle on the sphere
    return r**beta * _smooth_cutoff(r)


# ---------------------------------------------------------------- sampling


def sample_cloud(spec: ManifoldSpec, n_points: int, family: TruthFamily | None = None) -> PointCloud:
    """Draw ``n_points`` i.i.d. points from the declared density.

    Deterministic given ``spec.seed``; the ground truth is attached when
    ``family`` is supplied.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    rng = np.random.default_rng(spec.seed)
    minimal, _ = _sample_minimal(spec, int(n_points), rng)
    points = embed(spec, minimal)
    if family is None:
        return PointCloud(points, spec)
    values = eval_truth(spec, points, family)
    beta = family_smoothness(family) if isinstance(family, str) else math.nan
    name = family if isinstance(family, str) else getattr(family, "__name__", "custom")
    return PointCloud(points, spec, values, beta, name)


def geodesic_dist(spec: ManifoldSpec, a, b) -> float:
    """Exact geodesic distance for the kinds with a closed form."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if spec.kind in ("circle", "sphere2"):
        cos = np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))
        return float(np.arccos(np.clip(cos, -1.0, 1.0)))
    if spec.kind == "interval":
        return float(np.linalg.norm(a - b))
    raise UnsupportedManifoldError(f"no closed-form geodesic for {spec.kind}")


def on_manifold_residual(spec: ManifoldSpec, points: np.ndarray) -> np.ndarray:
    """Distance-like defect of each point from the manifold (0 when exact)."""
    m = unembed(spec, points)
    q = rotation_matrix(spec)
    off = np.zeros(len(m))
    if q is not None:
        full = np.atleast_2d(points) @ q
        off = np.linalg.norm(full[:, MIN_AMBIENT_DIM[spec.kind]:], axis=1)
    kind = spec.kind
    if kind in ("circle", "sphere2"):
        return np.abs(np.linalg.norm(m, axis=1) - 1.0) + off
    if kind == "flat-torus-embedded":
        return (
            np.abs(np.hypot(m[:, 0], m[:, 1]) - 1.0)
            + np.abs(np.hypot(m[:, 2], m[:, 3]) - 1.0)
            + off
        )
    if kind == "swiss-roll":
        t = np.hypot(m[:, 0], m[:, 2])
        return np.hypot(m[:, 0] - t * np.cos(t), m[:, 2] - t * np.sin(t)) + off
    outside = np.maximum(0.0, -m[:, 0]) + np.maximum(0.0, m[:, 0] - 1.0)
    return outside + off
