"""Retrieval accuracy (AP / MAP), timing, scan-fraction and storage
measurement, plus a parameter-sweep harness over the indexing and query
knobs (L, T, S, W, K, M)."""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from . import invindex, search
from .invindex import BuildConfig, InvertedIndex
from .pq import PqConfig
from .search import QueryConfig
from .vecio import DataError, FeatureSet


def average_precision(ranked, relevant) -> float:
    """AP of one ranking: mean over |relevant| of precision at each rank that
    holds a relevant id; relevant items never retrieved contribute 0."""
    relevant = set(relevant)
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    hits = 0
    total = 0.0
    for rank, rid in enumerate(ranked, start=1):
        if rid in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


@dataclass
class EvalReport:
    map: float
    per_query_ap: dict[int, float]
    mean_query_time: float
    scan_fraction: float
    index_bytes: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "map": self.map,
            "per_query_ap": {str(k): v for k, v in sorted(self.per_query_ap.items())},
            "mean_query_time_s": self.mean_query_time,
            "scan_fraction": self.scan_fraction,
            "index_bytes": self.index_bytes,
            "config": self.config,
        }


def evaluate(results: dict[int, list[int]], gt: dict[int, set[int]],
             query_times=None, candidate_counts=None, database_size: int = 0,
             index_bytes: int = 0, config: dict | None = None,
             self_ids: dict[int, int] | None = None) -> EvalReport:
    """Aggregate per-query AP into MAP plus efficiency figures.

    ``results`` maps query id to its ranked id list; every ground-truth query
    must be present. ``self_ids`` optionally names, per query, a database id
    to exclude from both ranking and relevant set (query-in-database
    conventions keep self matches by default).
    """
    missing = sorted(set(gt) - set(results))
    if missing:
        raise DataError(f"missing results for queries {missing[:5]}")
    per_ap: dict[int, float] = {}
    for qid, relevant in gt.items():
        ranked = results[qid]
        if self_ids and qid in self_ids:
            drop = self_ids[qid]
            ranked = [r for r in ranked if r != drop]
            relevant = relevant - {drop}
            if not relevant:
                continue
        per_ap[qid] = average_precision(ranked, relevant)
    map_score = float(np.mean(list(per_ap.values()))) if per_ap else 0.0
    mean_time = float(np.mean(query_times)) if query_times else 0.0
    if candidate_counts and database_size:
        scan = float(np.mean(candidate_counts)) / database_size
    else:
        scan = 0.0
    return EvalReport(
        map=map_score,
        per_query_ap=per_ap,
        mean_query_time=mean_time,
        scan_fraction=scan,
        index_bytes=index_bytes,
        config=config or {},
    )


SWEEPABLE = ("L", "T", "S", "W", "K", "M")


@dataclass
class SweepSpec:
    """A grid over any of L/T/S/W/K/M; everything else fixed in ``base``.

    ``base`` carries scheme, top_k, defaults for non-swept parameters and
    optional seeds (kmeans_seed, virtual_seed).
    """

    grid: dict[str, list]
    base: dict

    def __post_init__(self):
        if not self.grid or any(len(v) == 0 for v in self.grid.values()):
            raise ValueError("sweep grid must be non-empty")
        unknown = set(self.grid) - set(SWEEPABLE)
        if unknown:
            raise ValueError(f"cannot sweep over {sorted(unknown)}")


def _build_for(db: FeatureSet, params: dict, training: FeatureSet | None) -> InvertedIndex:
    scheme = params["scheme"]
    pq_cfg = None
    if scheme == "ifc":
        pq_cfg = PqConfig(
            segments=int(params["M"]),
            words_per_segment=int(params["K"]),
            kmeans_seed=int(params.get("kmeans_seed", 0)),
        )
    cfg = BuildConfig(
        scheme=scheme,
        link_count=int(params["S"]),
        code_length=int(params["L"]),
        pq=pq_cfg,
        virtual_word_seed=int(params.get("virtual_seed", 0)),
    )
    return invindex.build(db, cfg, training=training)


def sweep(spec: SweepSpec, db: FeatureSet, queries: FeatureSet,
          gt: dict[int, set[int]], training: FeatureSet | None = None) -> list[dict]:
    """Run the full pipeline once per grid point; rows follow grid iteration
    order. A failing point is reported in its row and the sweep continues.

    Indexes are cached across points that share all build-side parameters.
    """
    keys = list(spec.grid)
    index_cache: dict[tuple, InvertedIndex] = {}
    rows = []
    for values in itertools.product(*(spec.grid[k] for k in keys)):
        point = dict(spec.base)
        point.update(dict(zip(keys, values)))
        row = {k: point.get(k) for k in SWEEPABLE if k in point or k in keys}
        row["scheme"] = point.get("scheme")
        try:
            build_key = tuple(point.get(k) for k in
                              ("scheme", "L", "S", "K", "M", "kmeans_seed", "virtual_seed"))
            ix = index_cache.get(build_key)
            if ix is None:
                ix = _build_for(db, point, training)
                index_cache[build_key] = ix
            qcfg = QueryConfig(
                assignment_count=int(point["W"]),
                hamming_threshold=int(point["T"]),
                top_k=int(point.get("top_k", 10)),
            )
            results, summary = search.batch_query(ix, queries, qcfg)
            report = evaluate(
                {qid: results[qid].ids for qid in range(len(results))},
                gt,
                query_times=summary.query_times,
                candidate_counts=summary.candidate_counts,
                database_size=db.n,
                index_bytes=invindex.stats(ix).estimated_file_bytes,
                config=point,
            )
            row.update(
                map=report.map,
                mean_query_time_s=report.mean_query_time,
                scan_fraction=report.scan_fraction,
                index_bytes=report.index_bytes,
                per_query_ap=report.per_query_ap,
            )
        except Exception as exc:  # keep sweeping past bad grid points
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def write_sweep_csv(rows: list[dict], path) -> None:
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key != "per_query_ap" and key not in columns:
                columns.append(key)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_sweep_json(rows: list[dict], path) -> None:
    def clean(row):
        out = dict(row)
        if "per_query_ap" in out:
            out["per_query_ap"] = {str(k): v for k, v in sorted(out["per_query_ap"].items())}
        return out

    with open(path, "w", encoding="utf-8") as f:
        json.dump([clean(r) for r in rows], f, indent=2, sort_keys=True)
        f.write("\n")
