"""Mixture-proportion groups: AUC over seeds for a few nu values."""

import argparse

import numpy as np

from ocsmm.evaluation import write_table
from ocsmm.experiments import mixture_trial


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--nus", default="0.06,0.1")
    ap.add_argument("--out", default="mixture.csv")
    args = ap.parse_args()
    rows = []
    for nu in (float(v) for v in args.nus.split(",")):
        batch = [mixture_trial(s, nu) for s in range(args.seeds)]
        print(f"nu {nu}: mean AUC {np.mean([r['auc'] for r in batch]):.3f}, "
              f"mean AP {np.mean([r['ap'] for r in batch]):.3f}")
        rows += batch
    write_table(rows, args.out)


if __name__ == "__main__":
    main()
