"""Run every acceptance check and write per-check JSON, timings and a markdown summary.

    python scripts/reproduce_all.py [--quick] [--out DIR] [--threads N]
"""
import argparse
import sys

from wulfflab.cli import reproduce_all
from wulfflab.config import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="coarse grids, looser tolerances (< 60 s)")
    ap.add_argument("--out", default="reproduce")
    ap.add_argument("--threads", type=int, default=SolverConfig().threads)
    ap.add_argument("--no-determinism", action="store_true", help="skip the two-run byte comparison")
    a = ap.parse_args()
    checks = reproduce_all(a.out, a.quick, a.threads, determinism=not a.no_determinism)
    for c in checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.id:2d} {c.name} ({c.runtime:.1f}s)")
    print(f"summary: {a.out}/summary.md")
    return 0 if all(c.passed for c in checks) else 1


if __name__ == "__main__":
    sys.exit(main())
