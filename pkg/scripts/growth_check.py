"""Compare simulated energy growth rates with 2 ln|lambda_max| on random states.

The last column flags states unstable at some other wave-vector of the grid;
round-off seeds those modes, so the fitted rate follows them instead.
"""

import argparse

import numpy as np

from lbstab.eos import IdealGas, ShallowWater
from lbstab.lattice import D2Q9, UniformState
from lbstab.sim import measure_growth
from lbstab.spectral import spectral_radii


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", type=int, default=20)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--grid", type=int, default=16)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'eos':<28}{'u':>18}{'beta':>7}{'k':>10}{'sigma':>13}{'pred':>13}{'rel err':>10}{'grid':>8}")
    ks = np.stack(np.meshgrid(*[2 * np.pi * np.fft.fftfreq(args.grid)] * 2, indexing="ij"), -1).reshape(-1, 2)
    for _ in range(args.cases):
        eos = [IdealGas(T=rng.uniform(0.15, 0.4)), ShallowWater(g=rng.uniform(0.2, 0.8))][rng.integers(2)]
        st = UniformState(1.0, tuple(rng.uniform(-0.3, 0.3, 2)), rng.uniform(0.55, 0.99))
        k = tuple(int(i) for i in rng.integers(1, args.grid // 2, 2))
        m = measure_growth(D2Q9, eos, st, (args.grid, args.grid), k, n_steps=300)
        grid_ok = "stable" if spectral_radii(D2Q9, eos, st, ks).max() <= 1 + 1e-12 else "UNSTABLE"
        u = f"({st.u[0]:+.3f},{st.u[1]:+.3f})"
        print(f"{repr(eos):<28}{u:>18}{st.beta:7.3f}{str(k):>10}{m.sigma:13.4e}{m.predicted:13.4e}{m.relative_error:10.2e}{grid_ok:>9}")


if __name__ == "__main__":
    main()
