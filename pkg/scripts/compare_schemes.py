#!/usr/bin/env python3
"""Compare TIFC, IFC, brute force and LSH on a synthetic clustered dataset:
MAP, mean query time, scan fraction and index size in one table."""

import argparse
import time

from cnnidx import baseline, evaluation, invindex, search, vecio
from cnnidx.baseline import LshConfig
from cnnidx.invindex import BuildConfig
from cnnidx.pq import PqConfig
from cnnidx.search import QueryConfig
from cnnidx.vecio import SynthSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--clusters", type=int, default=100)
    ap.add_argument("--per-cluster", type=int, default=100)
    ap.add_argument("--dim", type=int, default=64)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--S", type=int, default=40)
    ap.add_argument("--W", type=int, default=40)
    ap.add_argument("--L", type=int, default=32)
    ap.add_argument("--K", type=int, default=64)
    ap.add_argument("--M", type=int, default=2)
    ap.add_argument("--topk", type=int, default=10)
    args = ap.parse_args()

    spec = SynthSpec(args.clusters, args.per_cluster, args.dim,
                     cluster_stddev=1.0, noise_stddev=0.1, seed=args.seed)
    db, queries, gt = vecio.generate_synthetic(spec)
    t = round(0.35 * args.L)
    qcfg = QueryConfig(assignment_count=args.W, hamming_threshold=t,
                       top_k=args.topk)
    print(f"database {db.n} x {db.dim}, {queries.n} queries, "
          f"S={args.S} W={args.W} L={args.L} T={t} K={args.K} M={args.M}")

    rows = []

    def add_row(name, results, times, candidates, index_bytes):
        report = evaluation.evaluate(
            {q: results[q] for q in range(queries.n)}, gt,
            query_times=times, candidate_counts=candidates,
            database_size=db.n, index_bytes=index_bytes)
        rows.append((name, report.map, report.mean_query_time * 1e3,
                     report.scan_fraction, index_bytes / 1e6))

    # brute force
    times, ranked = [], {}
    for qid, q in enumerate(queries.vectors):
        t0 = time.perf_counter()
        ranked[qid] = baseline.brute_force(db, q, args.topk)
        times.append(time.perf_counter() - t0)
    add_row("BF", ranked, times, [db.n] * queries.n, db.vectors.nbytes)

    # LSH
    lsh = baseline.lsh_build(db, LshConfig(tables=8, bits_per_table=16, seed=0))
    times, ranked, cands = [], {}, []
    for qid, q in enumerate(queries.vectors):
        t0 = time.perf_counter()
        ranked[qid] = baseline.lsh_query(lsh, q, args.topk)
        times.append(time.perf_counter() - t0)
        cands.append(len(ranked[qid]))
    add_row("LSH", ranked, times, cands, db.vectors.nbytes)

    # TIFC and IFC
    for name, cfg in (
        ("TIFC", BuildConfig(scheme="tifc", link_count=min(args.S, args.dim),
                             code_length=args.L)),
        ("IFC", BuildConfig(scheme="ifc", link_count=args.S, code_length=args.L,
                            pq=PqConfig(segments=args.M, words_per_segment=args.K,
                                        kmeans_seed=0))),
    ):
        ix = invindex.build(db, cfg)
        wcfg = QueryConfig(assignment_count=min(args.W, ix.word_count),
                           hamming_threshold=t, top_k=args.topk)
        results, summary = search.batch_query(ix, queries, wcfg)
        add_row(name, {q: results[q].ids for q in range(queries.n)},
                summary.query_times, summary.candidate_counts,
                invindex.stats(ix).estimated_file_bytes)

    print(f"\n{'method':<6} {'MAP':>9} {'ms/query':>9} {'scan':>6} {'MB':>8}")
    for name, m, ms, scan, mb in rows:
        print(f"{name:<6} {m:>9.6f} {ms:>9.3f} {scan:>6.3f} {mb:>8.2f}")


if __name__ == "__main__":
    main()
