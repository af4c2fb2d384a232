"""u_max(varsigma_rho, beta) maps for the ideal, shallow-water and vdW families.

Writes one CSV per family through the command-line front end.
"""

import argparse
import json
import tempfile
from pathlib import Path

import numpy as np

from lbstab.cli import run

FAMILIES = {
    "ideal": {"type": "ideal", "varsigma_rho": [float(v) for v in np.round(np.arange(0.05, 1.21, 0.05), 4)]},
    "shallow_water": {"type": "shallow_water", "rho": [0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]},
    "vdw": {"type": "vdw_saturation", "Tr": [float(v) for v in np.round(np.arange(0.40, 0.911, 0.03), 2)]},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", choices=sorted(FAMILIES), nargs="+", default=sorted(FAMILIES))
    ap.add_argument("--preset", choices=("coarse", "paper"), default="coarse")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.family:
        cfg = {"lattice": "d2q9", "scan": {"family": FAMILIES[name], "preset": args.preset}}
        with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
            json.dump(cfg, fh)
        argv = ["scan", "--config", fh.name, "--out", str(out / f"map_{name}_{args.preset}.csv")]
        if args.threads:
            argv += ["--threads", str(args.threads)]
        code = run(argv)
        Path(fh.name).unlink()
        if code:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
