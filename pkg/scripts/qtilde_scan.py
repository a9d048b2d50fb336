"""Critical exponent q~(n) of the two-Wulff-shape problem for several dimensions.

    python scripts/qtilde_scan.py [--n 2,3,4] [--out DIR]
"""
import argparse
from pathlib import Path

from wulfflab import io
from wulfflab.twisted import find_q_tilde


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", default="2,3,4")
    ap.add_argument("--out", default="out/qtilde")
    a = ap.parse_args()
    out = Path(a.out)
    rows = []
    for n in (int(x) for x in a.n.split(",")):
        r = find_q_tilde(n)
        rows.append({"n": n, "q_tilde": r.q_tilde, "upper_exponent": n / (n - 1),
                     "minimizers": len(r.minimizers), "value_gap": r.value_gap})
        print(f"n={n} q~={r.q_tilde:.10f} minimizers={[(round(t, 8), v) for t, v in r.minimizers]}")
        io.svg_line_plot(out / f"qtilde_n{n}.svg", [("t*", [s[0] for s in r.scan], [s[1] for s in r.scan])],
                         "q", "t*", f"global minimiser, n = {n}", hlines=[("t = 1/2", 0.5)])
        io.write_json(out / f"qtilde_n{n}.json", r.to_json())
    io.write_csv(out / "qtilde.csv", rows, ["n", "q_tilde", "upper_exponent", "minimizers", "value_gap"])


if __name__ == "__main__":
    main()
