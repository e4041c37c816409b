"""Residual ladder and instanton number for the BPST Dirac-Yang-Mills pair.

    python3 scripts/bpst_report.py --points 200 --resolutions 32,64,128 --json report.json
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from spinlab.construct import asd_residual, build_solution, sample_points, verify_solution
from spinlab.index import bpst_index_check


def floats(s):
    return [float(v) for v in s.split(",")]


def parse(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--far-points", type=int, default=20)
    p.add_argument("--hs", type=floats, default=[2e-2, 1e-2, 5e-3])
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--resolutions", default="32,64,128")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="write the full report here")
    return p.parse_args(argv)


def main(argv=None) -> int:
    a = parse(argv)
    rng = np.random.default_rng(a.seed)
    t0 = time.perf_counter()
    sol = build_solution(rng=rng)
    pts = sample_points(rng, a.points, a.far_points)
    asd = max(asd_residual(sol.F(x)) for x in pts)
    rep = verify_solution(sol, pts, a.hs, a.order)
    t_fd = time.perf_counter() - t0
    print(f"ASD residual over {len(pts)} points: {asd:.2e}")
    print(f"{'h':>8} {'dirac':>12} {'ym':>12} {'bianchi':>12}")
    for i, h in enumerate(rep.hs):
        print(f"{h:8.4f} {rep.dirac[i]:12.3e} {rep.ym[i]:12.3e} {rep.bianchi[i]:12.3e}")
    for k, v in rep.orders.items():
        print(f"observed order {k:8s}: " + ", ".join(f"{o:.3f}" for o in v))
    print(f"max pointwise |J(Psi)|: {rep.current:.2e}   ({t_fd:.1f} s)")
    t0 = time.perf_counter()
    res = tuple(int(r) for r in a.resolutions.split(","))
    inst = bpst_index_check(res)
    print(f"integral of ch2 ({inst.orientation}):")
    for n, v, e in zip(inst.resolutions, inst.values, inst.errors):
        print(f"  n={n:4d}  {v:+.10f}  (error estimate {e:.1e})")
    print(f"sign {inst.sign:+d}, stable {inst.sign_stable}, |value| = 1 within tol: {inst.magnitude_ok} "
          f"({time.perf_counter() - t0:.1f} s)")
    if a.json:
        doc = {"asd_residual": asd, "hs": rep.hs, "dirac": rep.dirac, "ym": rep.ym, "bianchi": rep.bianchi,
               "orders": rep.orders, "current": rep.current,
               "instanton": {"resolutions": list(inst.resolutions), "values": inst.values,
                             "errors": inst.errors, "sign": inst.sign}}
        with open(a.json, "w") as fh:
            json.dump(doc, fh, indent=2)
    ok = asd <= 1e-10 and rep.passed(a.order - 0.2) and inst.magnitude_ok and inst.sign_stable
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
