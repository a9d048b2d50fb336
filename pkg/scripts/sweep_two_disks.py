"""lambda1(p), lambda2(p) along p -> 1 on two disjoint unit disks, against the radial oracle.

    python scripts/sweep_two_disks.py [--h 24] [--p 1.5,1.2,1.1,1.05] [--out DIR]
"""
import argparse
from pathlib import Path

from wulfflab import io
from wulfflab.config import SolverConfig
from wulfflab.eigen import radial_lambda1, sweep_p
from wulfflab.geometry import GridDomain
from wulfflab.norms import NormDescriptor


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--h", type=int, default=24, help="grid spacing 1/h")
    ap.add_argument("--p", default="1.5,1.2,1.1,1.05")
    ap.add_argument("--out", default="out/sweep_two_disks")
    a = ap.parse_args()
    out = Path(a.out)
    F = NormDescriptor.euclidean(2)
    d = GridDomain.wulff_union(F, [1.0, 1.0], 1.0 / a.h)
    ps = [float(x) for x in a.p.split(",")]
    s = sweep_p(d, F, ps, SolverConfig(multilevel=1))
    rows = s.rows()
    for r in rows:
        r["radial_lambda1"] = radial_lambda1(r["p"])
        print(f"p={r['p']:<5g} lambda1={r['lambda1']:.5f} radial={r['radial_lambda1']:.5f} "
              f"lambda2={r['lambda2']:.5f} h1={s.h1:.5f} h2={s.h2:.5f}")
    io.write_csv(out / "sweep.csv", rows, ["p", "lambda1", "lambda2", "h1", "h2", "margin1", "margin2",
                                          "radial_lambda1"])
    io.svg_line_plot(out / "sweep.svg",
                     [("lambda1", s.p_list, s.lambda1_list), ("lambda2", s.p_list, s.lambda2_list),
                      ("radial lambda1", s.p_list, [r["radial_lambda1"] for r in rows])],
                     "p", "lambda", "two unit disks", hlines=[("h1", s.h1), ("h2", s.h2)])
    io.write_json(out / "sweep.json", s.to_json())


if __name__ == "__main__":
    main()
