"""Dataset ingestion: IDX image files, CSV vectors, subsampled kernels.

The pipeline computes similarities only for the randomly sampled pairs:
sample pairs, evaluate their distances, calibrate the kernel bandwidth as
the mean of exactly those squared distances, kernelize, center, build the
graph.  Nothing here ever touches all n^2 pairs.
"""

from __future__ import annotations

import gzip
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph, build_graph, center_weights
from .model import draw_er_pairs

__all__ = [
    "read_idx",
    "read_idx_labels",
    "read_csv_vectors",
    "pair_similarity",
    "calibrate_sigma",
    "SubsampleResult",
    "subsample_and_weight",
    "load_mnist_subset",
]

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def _open_maybe_gzip(path):
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(fh, count, what):
    buf = fh.read(count)
    if len(buf) != count:
        raise ValueError(f"truncated IDX file: expected {count} bytes of {what}")
    return buf


def read_idx(path):
    """Parse an IDX image file (big-endian, magic 0x00000803).

    Returns (count, rows, cols, pixels) with pixels scaled to [0, 1].
    Transparently decompresses gzip.
    """
    with _open_maybe_gzip(path) as fh:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(fh, 16, "header"))
        if magic != IDX_IMAGES_MAGIC:
            raise ValueError(
                f"bad IDX image magic 0x{magic:08x} (expected 0x{IDX_IMAGES_MAGIC:08x})"
            )
        raw = _read_exact(fh, count * rows * cols, "pixels")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols)
    return count, rows, cols, pixels.astype(np.float32) / 255.0


def read_idx_labels(path):
    """Parse an IDX label file (big-endian, magic 0x00000801)."""
    with _open_maybe_gzip(path) as fh:
        magic, count = struct.unpack(">II", _read_exact(fh, 8, "header"))
        if magic != IDX_LABELS_MAGIC:
            raise ValueError(
                f"bad IDX label magic 0x{magic:08x} (expected 0x{IDX_LABELS_MAGIC:08x})"
            )
        raw = _read_exact(fh, count, "labels")
    return np.frombuffer(raw, dtype=np.uint8).astype(np.int64)


def read_csv_vectors(path, header: bool = False, label_column: bool = False):
    """Load numeric row vectors from a CSV file, in file order.

    With ``label_column`` the final column is split off as integer
    labels.  Ragged rows or non-numeric cells raise ValueError.
    """
    try:
        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message=".*no data.*")
            data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except ValueError as exc:
        raise ValueError(f"cannot parse {path}: {exc}") from exc
    if data.size == 0:
        raise ValueError(f"{path} contains no data rows")
    if label_column:
        return data[:, :-1], data[:, -1].astype(np.int64)
    return data, None


def pair_similarity(x, y, metric: str = "euclidean", sigma2: float = 1.0) -> float:
    """Kernel similarity s = exp(-d(x, y)^2 / sigma2) for one pair.

    ``metric`` is "euclidean" or "cosine"; the cosine distance of a zero
    vector against anything is defined as 1.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError("vectors must have equal dimension")
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    d2 = _sq_distances(np.vstack([x, y]), np.array([[0, 1]]), metric)[0]
    return float(np.exp(-d2 / sigma2))


def calibrate_sigma(sq_distances) -> float:
    """Bandwidth = mean of the observed squared distances."""
    d2 = np.asarray(sq_distances, dtype=np.float64)
    if d2.size == 0:
        raise ValueError("cannot calibrate a bandwidth from no distances")
    return float(d2.mean())


def _sq_distances(points, pairs, metric):
    """Squared distances for exactly the given pairs (no all-pairs work)."""
    a, b = points[pairs[:, 0]], points[pairs[:, 1]]
    if metric == "euclidean":
        return ((a - b) ** 2).sum(axis=1)
    if metric == "cosine":
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        dots = np.einsum("ij,ij->i", a, b)
        ok = (na > 0) & (nb > 0)
        cos = np.zeros(pairs.shape[0])
        np.divide(dots, na * nb, out=cos, where=ok)
        d = np.where(ok, 1.0 - cos, 1.0)
        return d**2
    raise ValueError(f"unknown metric {metric!r}")


@dataclass
class SubsampleResult:
    """Subsampled similarity graph plus provenance counters."""

    graph: WeightedGraph          # centered weights
    similarities: np.ndarray      # raw kernel values, one per sampled pair
    sigma2: float                 # calibrated bandwidth
    similarity_evals: int         # distance evaluations performed

    def __iter__(self):  # allow (graph, sims) unpacking
        return iter((self.graph, self.similarities))


def subsample_and_weight(points, alpha: float, metric: str = "euclidean", rng=None) -> SubsampleResult:
    """Sample pairs at mean degree alpha, kernelize their similarities,
    and build the centered-weight graph.

    Two-pass bandwidth calibration: the sampled pairs' squared distances
    are computed first, their mean becomes sigma2, then the same
    distances are kernelized.  The total number of distance evaluations
    is exactly the sampled pair count (recorded on the result).
    """
    points = np.asarray(points, dtype=np.float64)
    if rng is None:
        rng = np.random.default_rng()
    n = points.shape[0]
    pairs = draw_er_pairs(n, alpha, rng)
    if pairs.shape[0] == 0:
        graph = build_graph(n, pairs, np.empty(0))
        return SubsampleResult(graph, np.empty(0), float("nan"), 0)
    d2 = _sq_distances(points, pairs, metric)
    sigma2 = calibrate_sigma(d2)
    sims = np.exp(-d2 / sigma2) if sigma2 > 0 else np.ones_like(d2)
    graph = build_graph(n, pairs, center_weights(sims))
    return SubsampleResult(graph, sims, sigma2, int(pairs.shape[0]))


def load_mnist_subset(images_path, labels_path, digits):
    """Flatten the images whose label is in ``digits``.

    Returns (vectors, truth) where vectors is (n, rows*cols) float64 and
    truth holds each item's index into ``digits`` (0-based classes).
    """
    digits = tuple(int(d) for d in digits)
    if len(digits) < 2:
        raise ValueError("need at least two digit classes")
    count, rows, cols, pixels = read_idx(images_path)
    labels = read_idx_labels(labels_path)
    if labels.shape[0] != count:
        raise ValueError("image and label files disagree on the item count")
    keep = np.isin(labels, digits)
    vectors = pixels[keep].reshape(-1, rows * cols).astype(np.float64)
    lookup = {d: i for i, d in enumerate(digits)}
    truth = np.array([lookup[d] for d in labels[keep]], dtype=np.int64)
    return vectors, truth
