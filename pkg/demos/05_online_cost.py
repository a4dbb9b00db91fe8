"""
Online cost of the two pipelines
================================

Releasing n utterances against an n-record database costs n^2 distance
evaluations at feature level. At model level the cost is one lookup per
utterance, so it grows linearly. Pass a larger size list on the command line
(e.g. ``100,1000,10000``) for the full picture; it takes a while.
"""

import sys

from voiceind.audit import bench_perturbation, format_bench_table, scaling_ratios

sizes = [int(s) for s in sys.argv[1].split(",")] if len(sys.argv) > 1 else [100, 300, 1000, 3000]
rows = bench_perturbation(sizes, epsilon=1.0, seed=0, model_repeats=3)
print(format_bench_table(rows))
print()
for lo, hi, feat, mod in scaling_ratios(rows):
    print(f"{lo:>5} -> {hi:<5}  size x{hi / lo:g}: feature time x{feat:.1f}, model time x{mod:.1f}")
