"""Energy-identity residual of a run at two resolutions and two step sizes.

    python scripts/energy_audit.py [--t-end 1.0]
"""

import argparse

from mhdslip.config import SimConfig
from mhdslip.harness import energy_audit
from mhdslip.mhd_solver import run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--t-end", type=float, default=1.0)
    args = ap.parse_args()
    for n, dt in ((64, 1e-3), (64, 5e-4), (128, 5e-4)):
        cfg = SimConfig(n_tangential=n, n_normal=n + 1, dt=dt, t_end=args.t_end)
        a = energy_audit(run(cfg))
        print(f"{n}x{n + 1} dt={dt:g}: max {a.max_rel:.3e}  time part {a.max_time_rel:.3e}  space part {a.max_space_rel:.3e}")


if __name__ == "__main__":
    main()
