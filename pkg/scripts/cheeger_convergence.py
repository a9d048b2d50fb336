"""Grid convergence of h1 for the unit square and the Wulff shapes of two norms.

    python scripts/cheeger_convergence.py [--hmin 128] [--out DIR]

Writes a CSV (norm, domain, h, h1, exact, rel_error) and an SVG of the
relative error against h.
"""
import argparse
from pathlib import Path

import numpy as np

from wulfflab import io
from wulfflab.cheeger import convex_planar_h1_oracle, solve_h1
from wulfflab.geometry import GridDomain, Polygon
from wulfflab.norms import NormDescriptor


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--hmin", type=int, default=128, help="finest grid is 1/hmin")
    ap.add_argument("--out", default="out/cheeger_convergence")
    a = ap.parse_args()
    out = Path(a.out)
    euc = NormDescriptor.euclidean(2)
    quad = NormDescriptor.quadratic([[4.0, 0.0], [0.0, 1.0]])
    square = Polygon(((0, 0), (1, 0), (1, 1), (0, 1)))
    cases = [
        ("euclidean", "square", lambda h: GridDomain.rectangle(1.0, 1.0, h), convex_planar_h1_oracle(square, euc), euc),
        ("euclidean", "disk", lambda h: GridDomain.wulff(euc, 0.5, h), 4.0, euc),
        ("quadratic", "wulff", lambda h: GridDomain.wulff(quad, 0.5, h), 4.0, quad),
        ("quadratic", "square", lambda h: GridDomain.rectangle(1.0, 1.0, h), convex_planar_h1_oracle(square, quad), quad),
    ]
    ns = [n for n in (16, 32, 64, 128, 256) if n <= a.hmin]
    rows, series = [], []
    for nname, dname, make, exact, F in cases:
        errs = []
        for n in ns:
            r = solve_h1(make(1.0 / n), F)
            e = abs(r.h1 - exact) / exact
            errs.append(e)
            rows.append({"norm": nname, "domain": dname, "h": 1.0 / n, "h1": r.h1, "exact": exact, "rel_error": e})
            print(f"{nname:10s} {dname:7s} h=1/{n:<4d} h1={r.h1:.6f} exact={exact:.6f} rel={e:.2e}")
        series.append((f"{nname} {dname}", [np.log2(n) for n in ns], [np.log10(max(e, 1e-16)) for e in errs]))
    io.write_csv(out / "h1_convergence.csv", rows, ["norm", "domain", "h", "h1", "exact", "rel_error"])
    io.svg_line_plot(out / "h1_convergence.svg", series, "log2(1/h)", "log10 relative error",
                     "h1 against exact values")


if __name__ == "__main__":
    main()
