"""Feature-vector and ground-truth file I/O plus synthetic dataset generation.

File formats:

* Feature files: per-record ``[int32 LE dim][dim x float32 LE]``, records
  concatenated. All records must share the same dimension.
* Integer-list files: same layout with int32 payloads, record lengths may vary.
* Ground truth: UTF-8 text, one query per line, ``qid: id1 id2 ...``,
  ``#`` starts a comment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DataError(Exception):
    """Malformed or inconsistent input data (bad file, bad ids, bad shapes)."""


@dataclass
class FeatureSet:
    """An ordered set of N vectors of uniform dimension D.

    Ids are implicit 0-based row positions, stable across persistence.
    """

    vectors: np.ndarray  # (N, D) float32

    def __post_init__(self):
        v = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if v.ndim != 2:
            raise DataError(f"feature matrix must be 2-d, got shape {v.shape}")
        if v.shape[1] < 1:
            raise DataError("feature dimension must be >= 1")
        if not np.all(np.isfinite(v)):
            raise DataError("feature vectors must be finite (no NaN/Inf)")
        self.vectors = v

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.n


@dataclass
class SynthSpec:
    """Parameters for the clustered synthetic dataset generator."""

    n_clusters: int
    points_per_cluster: int
    dim: int
    cluster_stddev: float
    noise_stddev: float
    seed: int

    def __post_init__(self):
        if self.n_clusters < 1 or self.points_per_cluster < 1 or self.dim < 1:
            raise DataError("n_clusters, points_per_cluster and dim must be >= 1")
        if self.cluster_stddev < 0 or self.noise_stddev < 0:
            raise DataError("stddevs must be >= 0")


# spread of cluster centers relative to unit within-cluster noise; keeps
# clusters well separated for any reasonable cluster_stddev
_CENTER_SCALE = 10.0


def read_feature_file(path) -> FeatureSet:
    """Read a binary feature file into a FeatureSet, preserving record order."""
    raw = np.fromfile(path, dtype=np.uint8)
    vectors = _parse_records(raw, np.float32, path)
    if not vectors:
        raise DataError(f"{path}: no records")
    dim = len(vectors[0])
    for i, v in enumerate(vectors):
        if len(v) != dim:
            raise DataError(f"{path}: record {i} has dim {len(v)}, expected {dim}")
    return FeatureSet(np.vstack(vectors))


def l2_normalize(fs: FeatureSet) -> FeatureSet:
    """Return a copy with every vector scaled to unit Euclidean norm.

    Feature extraction pipelines differ on whether vectors arrive normalized,
    so indexing ingests them as-is and normalization stays opt-in. Zero
    vectors are rejected rather than silently passed through.
    """
    norms = np.linalg.norm(fs.vectors, axis=1, keepdims=True)
    if np.any(norms == 0):
        bad = int(np.flatnonzero(norms[:, 0] == 0)[0])
        raise DataError(f"record {bad} is a zero vector, cannot normalize")
    return FeatureSet((fs.vectors / norms).astype(np.float32))


def write_feature_file(fs: FeatureSet, path) -> None:
    """Write a FeatureSet so that read_feature_file reconstructs it exactly."""
    if fs.n == 0:
        raise DataError("refusing to write an empty feature set")
    _write_records(fs.vectors, path)


def read_int_lists(path) -> list[np.ndarray]:
    """Read an integer-list file; record lengths may differ."""
    raw = np.fromfile(path, dtype=np.uint8)
    return _parse_records(raw, np.int32, path)


def write_int_lists(lists, path) -> None:
    """Write integer lists (e.g. retrieved ids per query) in record layout."""
    with open(path, "wb") as f:
        for ids in lists:
            ids = np.asarray(ids, dtype=np.int32)
            f.write(np.int32(len(ids)).tobytes())
            f.write(ids.astype("<i4").tobytes())


def _parse_records(raw: np.ndarray, dtype, path) -> list[np.ndarray]:
    itemsize = np.dtype(dtype).itemsize
    records = []
    off = 0
    total = raw.size
    while off < total:
        if off + 4 > total:
            raise DataError(f"{path}: record {len(records)}: truncated header")
        count = int(raw[off : off + 4].view("<i4")[0])
        if count <= 0:
            raise DataError(f"{path}: record {len(records)}: bad length {count}")
        off += 4
        nbytes = count * itemsize
        if off + nbytes > total:
            raise DataError(f"{path}: record {len(records)}: truncated payload")
        records.append(raw[off : off + nbytes].view(np.dtype(dtype).newbyteorder("<")))
        off += nbytes
    return records


def _write_records(matrix: np.ndarray, path) -> None:
    n, dim = matrix.shape
    header = np.full((n, 1), dim, dtype="<i4")
    body = matrix.astype("<f4").view(np.uint8).reshape(n, -1)
    out = np.hstack([header.view(np.uint8).reshape(n, 4), body])
    out.tofile(path)


def read_ground_truth(path, n: int | None = None) -> dict[int, set[int]]:
    """Read ground truth mapping query id -> set of relevant database ids.

    If ``n`` is given, relevant ids are validated against it.
    """
    entries: dict[int, set[int]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            head, sep, rest = line.partition(":")
            if not sep:
                raise DataError(f"{path}:{lineno}: missing ':' separator")
            try:
                qid = int(head)
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad query id {head!r}") from None
            ids = rest.split()
            if not ids:
                raise DataError(f"{path}:{lineno}: empty relevant set for query {qid}")
            try:
                relevant = {int(s) for s in ids}
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer relevant id") from None
            if n is not None and any(r < 0 or r >= n for r in relevant):
                raise DataError(f"{path}:{lineno}: relevant id out of range [0, {n})")
            entries[qid] = relevant
    if not entries:
        raise DataError(f"{path}: no ground-truth entries")
    return entries


def write_ground_truth(gt: dict[int, set[int]], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for qid in sorted(gt):
            ids = " ".join(str(i) for i in sorted(gt[qid]))
            f.write(f"{qid}: {ids}\n")


def generate_synthetic(spec: SynthSpec) -> tuple[FeatureSet, FeatureSet, dict[int, set[int]]]:
    """Generate a clustered database, one perturbed query per cluster, and
    exact ground truth (each query's relevant set = its cluster's members).

    Deterministic for a fixed seed. Queries are perturbed copies of the first
    member of each cluster, so with noise_stddev=0 each query equals a
    database vector exactly.
    """
    rng = np.random.default_rng(spec.seed)
    centers = rng.standard_normal((spec.n_clusters, spec.dim), dtype=np.float32)
    centers *= _CENTER_SCALE

    ppc = spec.points_per_cluster
    db = np.empty((spec.n_clusters * ppc, spec.dim), dtype=np.float32)
    queries = np.empty((spec.n_clusters, spec.dim), dtype=np.float32)
    gt: dict[int, set[int]] = {}
    for c in range(spec.n_clusters):
        noise = rng.standard_normal((ppc, spec.dim), dtype=np.float32)
        block = centers[c] + noise * np.float32(spec.cluster_stddev)
        db[c * ppc : (c + 1) * ppc] = block
        qnoise = rng.standard_normal(spec.dim, dtype=np.float32)
        queries[c] = block[0] + qnoise * np.float32(spec.noise_stddev)
        gt[c] = set(range(c * ppc, (c + 1) * ppc))
    return FeatureSet(db), FeatureSet(queries), gt
