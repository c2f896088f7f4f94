"""Plain-text and raw-binary persistence for clouds, graphs, spectra and posteriors."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .graph import RadiusGraph, graph_from_adjacency
from .manifold import ManifoldSpec, PointCloud
from .spectral import SpectralBasis


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, data, indent=2):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(data), indent=indent, sort_keys=False) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def _sidecar(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".json")


# ---------------------------------------------------------------- clouds


def save_cloud(cloud: PointCloud, path) -> Path:
    """CSV ``x0..x{D-1},f0`` plus a JSON sidecar ``<path>.json``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    D = cloud.ambient_dim
    f0 = cloud.true_values if cloud.true_values is not None else np.full(cloud.n_points, np.nan)
    header = ",".join([f"x{i}" for i in range(D)] + ["f0"])
    np.savetxt(path, np.column_stack([cloud.points, f0]), delimiter=",", header=header,
               comments="", fmt="%.17g")
    meta = {"manifold": cloud.manifold.to_dict(), "n_points": cloud.n_points,
            "family": cloud.family,
            "holder_beta": cloud.holder_beta if math.isfinite(cloud.holder_beta) else "inf",
            "has_truth": cloud.true_values is not None}
    write_json(_sidecar(path), meta)
    return path


def load_cloud(path) -> PointCloud:
    path = Path(path)
    meta = read_json(_sidecar(path))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    spec = ManifoldSpec.from_dict(meta["manifold"])
    beta = meta.get("holder_beta", "inf")
    beta = math.inf if beta in ("inf", None) else float(beta)
    truth = data[:, -1] if meta.get("has_truth", True) else None
    return PointCloud(data[:, :-1], spec, truth, beta, meta.get("family"))


# ---------------------------------------------------------------- graphs


def save_graph(graph: RadiusGraph, path) -> Path:
    """Edge list ``i j`` (``i <= j``, self-loops included) plus JSON {N, h, mu, nu}."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, graph.edges(), fmt="%d")
    write_json(_sidecar(path), {"N": graph.n_vertices, "h": graph.h,
                                "mu": graph.degrees, "nu": graph.nu})
    return path


def load_graph(path) -> RadiusGraph:
    path = Path(path)
    meta = read_json(_sidecar(path))
    n = int(meta["N"])
    edges = np.loadtxt(path, dtype=np.int64, ndmin=2).reshape(-1, 2)
    i, j = edges[:, 0], edges[:, 1]
    off = i != j
    rows = np.concatenate([i, j[off]])
    cols = np.concatenate([j, i[off]])
    a = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    return graph_from_adjacency(a, float(meta["h"]))


# ---------------------------------------------------------------- arrays


def save_array(arr, path, **extra) -> Path:
    """Raw little-endian float64 C-order file plus a JSON descriptor."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.ascontiguousarray(arr, dtype="<f8")
    arr.tofile(path)
    desc = {"file": path.name, "dtype": "<f8", "shape": list(arr.shape), "order": "C"}
    desc.update(extra)
    write_json(_sidecar(path), desc)
    return path


def load_array(path) -> np.ndarray:
    path = Path(path)
    desc = read_json(_sidecar(path))
    arr = np.fromfile(path.parent / desc["file"], dtype=desc["dtype"])
    return arr.reshape(desc["shape"], order=desc.get("order", "C"))


# ---------------------------------------------------------------- spectra


def save_spectrum(basis: SpectralBasis, prefix) -> tuple[Path, Path]:
    """``<prefix>.csv`` with ``j,lambda_j`` and ``<prefix>.eigvecs.bin`` (+ descriptor)."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = prefix.with_suffix(".csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "lambda_j"])
        for j, lam in enumerate(basis.eigenvalues, start=1):
            w.writerow([j, repr(float(lam))])
    vec_path = prefix.with_suffix(".eigvecs.bin")
    save_array(basis.eigenvectors, vec_path, h=basis.h, nu=basis.nu,
               residuals=basis.residuals, layout="column j holds u_j")
    return csv_path, vec_path


def load_spectrum(prefix) -> SpectralBasis:
    prefix = Path(prefix)
    data = np.loadtxt(prefix.with_suffix(".csv"), delimiter=",", skiprows=1, ndmin=2)
    vec_path = prefix.with_suffix(".eigvecs.bin")
    desc = read_json(_sidecar(vec_path))
    vecs = load_array(vec_path)
    res = desc.get("residuals")
    return SpectralBasis(data[:, 1], vecs, np.asarray(desc["nu"], dtype=float), float(desc["h"]),
                         None if res is None else np.asarray(res, dtype=float))


# ---------------------------------------------------------------- posteriors


def save_posterior(summary: dict, posterior_mean, prefix, draws=None) -> Path:
    """Summary JSON referencing the mean vector (and optional draw matrix) files."""
    prefix = Path(prefix)
    mean_path = save_array(posterior_mean, prefix.with_suffix(".mean.bin"))
    summary = dict(summary)
    summary["mean_file"] = mean_path.name
    if draws is not None:
        draw_path = save_array(draws, prefix.with_suffix(".draws.bin"),
                               layout="row s holds draw s")
        summary["draws_file"] = draw_path.name
    return write_json(prefix.with_suffix(".json"), summary)
