"""Trace the branch families of the built-in presets and print the leading curves.

    python scripts/reproduce_figures.py --out-dir figures --steps 128
"""
import argparse
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from pencil.cli_io import read_csv, run_figure
from pencil.presets import PRESETS


def leading_curve(csv_paths):
    best = defaultdict(lambda: math.inf)
    for path in csv_paths:
        for row in read_csv(path)[1:]:
            a, re = round(float(row[1]), 12), float(row[2])
            if re > 1e-6:
                best[a] = min(best[a], re)
    alphas = np.array(sorted(best))
    return alphas, np.array([best[a] for a in alphas])


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out-dir", default="figures")
    ap.add_argument("--steps", type=int, default=128)
    ap.add_argument("--checkpoint", type=int, default=16)
    ap.add_argument("--presets", nargs="*", default=sorted(PRESETS))
    args = ap.parse_args()

    out = Path(args.out_dir)
    for name in args.presets:
        res = run_figure(name, out, args.steps, args.checkpoint)
        print(f"== {name}")
        for fam in res["summary"]["families"]:
            statuses = [b["status"] for b in fam["branches"]]
            alphas, lead = leading_curve(b["csv"] for b in fam["branches"])
            pick = np.linspace(0, len(alphas) - 1, 9).astype(int)
            print(
                f"  {fam['bc']:9s} {len(statuses):3d} branches "
                f"({statuses.count('merged')} merged, {statuses.count('lost')} lost)"
            )
            print("    alpha  " + " ".join(f"{a:7.3f}" for a in alphas[pick]))
            print("    Re lam " + " ".join(f"{x:7.4f}" for x in lead[pick]))


if __name__ == "__main__":
    main()
