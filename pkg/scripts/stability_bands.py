"""Hydrodynamic stability bands of D1Q3 for the shallow-water and vdW states.

Prints the stable velocity band from the analytic condition next to the
brute-force D1Q3 scan at a few relaxation parameters.
"""

import argparse

from lbstab.eos import ShallowWater, VanDerWaals
from lbstab.hydro import hydro_stable_band
from lbstab.lattice import D1Q3
from lbstab.scan import ScanProtocol, max_stable_velocity


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--betas", type=float, nargs="+", default=[0.51, 0.625, 0.9])
    args = ap.parse_args()
    vdw = VanDerWaals.from_reduced(0.8)
    cases = [("shallow water, rho=1, g=2/3", ShallowWater(g=2 / 3), 1.0), ("vdW, T_r=0.8, rho_r=0.24", vdw, vdw.rho_from_reduced(0.24))]
    proto = ScanProtocol(resolution=1e-4)
    for name, eos, rho in cases:
        lo, hi = hydro_stable_band(eos, rho)
        print(f"{name}: analytic band [{lo:.5f}, {hi:.5f}]")
        for b in args.betas:
            r = max_stable_velocity(D1Q3, eos, rho, b, proto)
            print(f"  beta={b:<6} scanned u_max={r.u_max:.5f}")


if __name__ == "__main__":
    main()
