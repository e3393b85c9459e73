"""Rescaled boundary-layer profiles from a sweep output directory.

Reads checkpoints/eps_*_t<T>.npz and ideal_t<T>.npz written by the sweep and
writes one CSV with columns eps, z, z/sqrt(eps), profile, profile/sqrt(eps).

    python scripts/layer_profile.py sweep_out --time 0.5
"""

import argparse
import csv
import math
import re
from pathlib import Path

from mhdslip.mhd_solver import load_checkpoint
from mhdslip.norms import boundary_layer_profile


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("sweep_dir", type=Path)
    ap.add_argument("--time", type=float, default=0.5)
    ap.add_argument("--csv", type=Path, default=Path("layer_profiles.csv"))
    args = ap.parse_args()
    ck = args.sweep_dir / "checkpoints"
    ideal, _ = load_checkpoint(ck / f"ideal_t{args.time:g}.npz")
    pat = re.compile(rf"eps_(.+)_t{re.escape(f'{args.time:g}')}\.npz$")
    with open(args.csv, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "z", "z_scaled", "profile", "profile_scaled"])
        for path in sorted(ck.glob("eps_*.npz")):
            m = pat.match(path.name)
            if not m:
                continue
            eps = float(m.group(1))
            visc, _ = load_checkpoint(path)
            prof = boundary_layer_profile(visc.v, ideal.v, eps)
            print(f"eps {eps:g}: amplitude/sqrt(eps) {prof.scaled_amplitude:.4f}  width/sqrt(eps) {prof.scaled_width:.4f}")
            s = math.sqrt(eps)
            for z, p in zip(prof.z, prof.profile):
                w.writerow([eps, z, z / s, p, p / s])


if __name__ == "__main__":
    main()
