"""Epsilon ladder on the default channel; prints fitted slopes and per-run summaries.

    python scripts/run_sweep.py --out sweep_out [--t-end 1.0] [--coarse]
"""

import argparse
import logging

from mhdslip.config import SimConfig
from mhdslip.harness import DEFAULT_LADDER, epsilon_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="sweep_out")
    ap.add_argument("--t-end", type=float, default=1.0)
    ap.add_argument("--coarse", action="store_true", help="64x65 grid for a quick look")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = SimConfig(t_end=args.t_end)
    if args.coarse:
        cfg = cfg.replace(n_tangential=64, n_normal=65)
    res = epsilon_sweep(cfg, DEFAULT_LADDER, (0.5,), out_dir=args.out)
    for f in res.fits():
        print(f"{f['norm']:>14} {f['field']}  slope {f['slope']:.3f}  target {f['target']}  r2 {f['r_squared']:.3f}")
    for eps, summary in res.runs.items():
        print(f"{eps:g}", {k: round(v, 5) for k, v in summary.items()})


if __name__ == "__main__":
    main()
