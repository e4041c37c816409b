"""Truncation study for the torus Dirac spectrum.

Fixes one band-limited connection and reports, for each cutoff K, the matrix
dimension, the kernel dimension and the smallest |eigenvalues|.  Low-lying
eigenvalues should settle once K exceeds a few multiples of the connection band.

    python3 scripts/spectral_convergence.py --m 2 --kmax 8 --out convergence.csv
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from spinlab.clifford import build_clifford_module
from spinlab.gauge import make_rep, su_basis
from spinlab.spectral import FourierConnection, assemble, kernel_dim, spectrum


def parse(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--N", type=int, default=2, help="su(N) standard representation")
    p.add_argument("--band", type=int, default=1)
    p.add_argument("--amplitude", type=float, default=0.5)
    p.add_argument("--kmin", type=int, default=1)
    p.add_argument("--kmax", type=int, default=8)
    p.add_argument("--lowest", type=int, default=6, help="number of smallest |lambda| to report")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default: stdout)")
    return p.parse_args(argv)


def main(argv=None) -> int:
    a = parse(argv)
    module, rep = build_clifford_module(a.m), make_rep("su-standard", a.N)
    conn = FourierConnection.random(np.random.default_rng(a.seed), a.m, a.N, a.band, a.amplitude,
                                    algebra=su_basis(a.N))
    header = ["K", "dim", "kernel_dim", "seconds"] + [f"abs_lambda_{i}" for i in range(a.lowest)]
    rows, prev = [], None
    for K in range(a.kmin, a.kmax + 1):
        if K < 2 * a.band:
            continue
        t0 = time.perf_counter()
        D = assemble(conn, K, None, module, rep)
        low = np.sort(np.abs(spectrum(D)))[:a.lowest]
        kd = kernel_dim(D)
        rows.append([K, D.dim, kd, f"{time.perf_counter() - t0:.2f}"] + [repr(float(v)) for v in low])
        drift = "" if prev is None else f"  max drift {np.max(np.abs(low - prev)):.2e}"
        print(f"K={K:2d} dim={D.dim:6d} kernel={kd}{drift}", file=sys.stderr)
        prev = low
    fh = open(a.out, "w", newline="") if a.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    finally:
        if a.out:
            fh.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
