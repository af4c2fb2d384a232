"""Dispersion and dissipation along k_x for the shallow-water and vdW D2Q9 states.

Writes the labelled spectra as CSV and prints the small-k limits next to the
Chapman-Enskog values.
"""

import argparse
from pathlib import Path

from lbstab.cli import run

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("fig8_shallow_water_spectrum", "fig9_vdw_spectrum"):
        code = run(["spectrum", "--config", str(CONFIGS / f"{name}.json"), "--out", str(out / f"{name}.csv")])
        if code:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
