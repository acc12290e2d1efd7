"""Comparison baselines: exact brute-force search over squared Euclidean
distance, and sign-random-projection LSH with exact re-ranking of bucket
candidates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .vecio import FeatureSet


@dataclass
class LshConfig:
    tables: int
    bits_per_table: int
    seed: int = 0

    def __post_init__(self):
        if self.tables < 1 or self.bits_per_table < 1:
            raise ValueError("tables and bits_per_table must be >= 1")


@dataclass
class LshIndex:
    config: LshConfig
    planes: np.ndarray  # (tables, bits, D)
    buckets: list[dict[int, np.ndarray]]  # per table: hash key -> ids
    db: FeatureSet = field(repr=False)


def brute_force(db: FeatureSet, q, top_k: int) -> list[int]:
    """Exact top_k nearest database ids, ties broken by smaller id."""
    dists = _sq_dists(db.vectors, q)
    order = np.lexsort((np.arange(db.n), dists))
    return [int(i) for i in order[:top_k]]


def brute_force_batch(db: FeatureSet, queries: FeatureSet, top_k: int) -> list[list[int]]:
    return [brute_force(db, q, top_k) for q in queries.vectors]


def _sq_dists(vectors: np.ndarray, q, chunk: int = 65536) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (vectors.shape[1],):
        raise ValueError(f"query dim {q.shape} does not match database {vectors.shape}")
    n = vectors.shape[0]
    out = np.empty(n)
    for lo in range(0, n, chunk):
        diff = vectors[lo : lo + chunk].astype(np.float64) - q
        out[lo : lo + chunk] = np.einsum("ij,ij->i", diff, diff)
    return out


def _hash_keys(vectors: np.ndarray, planes: np.ndarray) -> np.ndarray:
    """Bucket key per (vector, table): sign bits of the hyperplane projections."""
    # (T, B, D) x (N, D) -> signs (N, T, B)
    proj = np.einsum("tbd,nd->ntb", planes, np.asarray(vectors, dtype=np.float64))
    bits = proj >= 0
    weights = 1 << np.arange(planes.shape[1], dtype=np.int64)
    return bits @ weights  # (N, T)


def lsh_build(db: FeatureSet, cfg: LshConfig) -> LshIndex:
    rng = np.random.default_rng(cfg.seed)
    planes = rng.standard_normal((cfg.tables, cfg.bits_per_table, db.dim))
    keys = _hash_keys(db.vectors, planes)
    buckets: list[dict[int, np.ndarray]] = []
    for t in range(cfg.tables):
        table: dict[int, np.ndarray] = {}
        order = np.argsort(keys[:, t], kind="stable")
        sorted_keys = keys[order, t]
        uniq, starts = np.unique(sorted_keys, return_index=True)
        bounds = np.append(starts, len(order))
        for i, key in enumerate(uniq):
            table[int(key)] = order[bounds[i] : bounds[i + 1]].astype(np.int32)
        buckets.append(table)
    return LshIndex(config=cfg, planes=planes, buckets=buckets, db=db)


def lsh_query(ix: LshIndex, q, top_k: int) -> list[int]:
    """Union of the query's buckets across tables, re-ranked exactly.

    May return fewer than top_k ids when the buckets are sparse.
    """
    keys = _hash_keys(np.asarray(q, dtype=np.float64)[None, :], ix.planes)[0]
    cand: set[int] = set()
    for t, key in enumerate(keys):
        hit = ix.buckets[t].get(int(key))
        if hit is not None:
            cand.update(int(i) for i in hit)
    if not cand:
        return []
    ids = np.fromiter(cand, dtype=np.int64)
    dists = _sq_dists(ix.db.vectors[ids], q)
    order = np.lexsort((ids, dists))
    return [int(ids[i]) for i in order[:top_k]]
