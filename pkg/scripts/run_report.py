"""Generate a synthetic dataset, run the full report twice and compare the bytes."""
import argparse
import filecmp
import os
import sys
import tempfile
import time

from netstrata import cli


def same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.diff_files or cmp.funny_files:
        return False
    return all(same_tree(os.path.join(a, d), os.path.join(b, d)) for d in cmp.common_dirs)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--work", default=None, help="directory for data and reports")
    args = parser.parse_args()
    work = args.work or tempfile.mkdtemp(prefix="netstrata_")
    data = os.path.join(work, "data")
    if cli.main(["syngen", "--seed", str(args.seed), "--out", data]):
        return 1
    runs = []
    for tag in ("report_a", "report_b"):
        out = os.path.join(work, tag)
        t0 = time.perf_counter()
        if cli.main(["report", "--in", data, "--out", out]):
            return 1
        runs.append((out, time.perf_counter() - t0))
    identical = same_tree(runs[0][0], runs[1][0])
    for out, seconds in runs:
        print(f"{out}: {seconds:.1f}s")
    print("byte-identical" if identical else "OUTPUTS DIFFER")
    return 0 if identical else 1


if __name__ == "__main__":
    sys.exit(main())
