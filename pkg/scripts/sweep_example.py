#!/usr/bin/env python3
"""Generate a small synthetic dataset and sweep the Hamming threshold T and
assignment count W for the IFC scheme, writing CSV/JSON to --out-prefix."""

import argparse

from cnnidx import evaluation, vecio
from cnnidx.evaluation import SweepSpec
from cnnidx.vecio import SynthSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-prefix", default="sweep_out")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    db, queries, gt = vecio.generate_synthetic(
        SynthSpec(n_clusters=20, points_per_cluster=100, dim=32,
                  cluster_stddev=1.0, noise_stddev=0.1, seed=args.seed))

    spec = SweepSpec(
        grid={"T": [2, 4, 6, 8, 11, 16], "W": [1, 4, 8, 16]},
        base={"scheme": "ifc", "L": 16, "S": 8, "K": 16, "M": 2, "top_k": 100},
    )
    rows = evaluation.sweep(spec, db, queries, gt)
    evaluation.write_sweep_csv(rows, args.out_prefix + ".csv")
    evaluation.write_sweep_json(rows, args.out_prefix + ".json")

    print(f"{'T':>4} {'W':>4} {'MAP':>9} {'scan':>6}")
    for row in rows:
        if "error" in row:
            print(f"{row.get('T'):>4} {row.get('W'):>4}  {row['error']}")
        else:
            print(f"{row['T']:>4} {row['W']:>4} {row['map']:>9.6f} "
                  f"{row['scan_fraction']:>6.3f}")


if __name__ == "__main__":
    main()
