"""Stable velocities of D2Q9 with the entropic pressure against the isothermal one."""

import argparse

import numpy as np

from lbstab.eos import EntropicIsothermal, IdealGas
from lbstab.lattice import D2Q9
from lbstab.scan import ScanProtocol, default_workers, entropic_domain


def show(flags, g):
    print("      " + " ".join(f"{v:5.1f}" for v in g))
    for i, v in enumerate(g):
        print(f"{v:5.1f} " + " ".join("    +" if f else "    ." for f in flags[i]))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nu", type=float, nargs="+", default=[1e-5, 0.1])
    ap.add_argument("--n", type=int, default=11)
    ap.add_argument("--preset", choices=("coarse", "paper"), default="coarse")
    ap.add_argument("--threads", type=int, default=default_workers())
    args = ap.parse_args()
    g = np.linspace(-1.0, 1.0, args.n)
    U = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
    proto = ScanProtocol.preset(args.preset)
    for label, eos in (("entropic", EntropicIsothermal()), ("isothermal", IdealGas(T=1 / 3))):
        for nu in args.nu:
            flags = entropic_domain(D2Q9, nu, U, proto, eos=eos, threads=args.threads)
            print(f"\n{label}, nu={nu:g}: {flags.sum()}/{flags.size} stable (rows u_x, columns u_y)")
            show(flags, g)


if __name__ == "__main__":
    main()
