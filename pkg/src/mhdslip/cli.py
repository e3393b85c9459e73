"""Command-line entry point: ``mhdslip {run,sweep,audit,profile,norms}``.

Results go to stdout as JSON (or CSV files under ``--out``). Failures print a
single JSON object ``{"error": <category>, "message": ...}`` on stderr and exit
with the category's status code:

    1 unexpected    2 config    3 usage    4 numerical
    5 guard         6 record    7 sweep aborted
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .config import SimConfig, load_config, parse_config
from .errors import MHDError, UsageError


def _config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    if args.set:
        text = "\n".join(args.set)
        overrides = parse_config(text).to_dict()
        given = {line.split("=", 1)[0].strip().split(".", 1)[0] for line in args.set}
        d = cfg.to_dict()
        for key in given:
            d[key] = overrides[key]
        cfg = SimConfig.from_dict(d)
    return cfg


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=1, default=float)
    sys.stdout.write("\n")


def cmd_run(args) -> int:
    from .mhd_solver import run

    cfg = _config(args)
    if args.out:
        cfg = cfg.replace(output_dir=str(args.out))
    rec = run(cfg)
    if args.out:
        rec.save(Path(args.out) / "record.json")
    last = {k: v[-1] for k, v in rec.series.items()}
    _emit({"t": rec.times[-1], "samples": len(rec.times), "final": last, "checkpoints": rec.checkpoints})
    return 0


def cmd_sweep(args) -> int:
    from .harness import DEFAULT_LADDER, epsilon_sweep

    cfg = _config(args)
    eps = args.eps or list(DEFAULT_LADDER)
    res = epsilon_sweep(
        cfg,
        eps,
        compare_times=args.times,
        out_dir=args.out,
        p_list=args.p,
        sample_dt=args.sample_dt,
    )
    fits = res.fits()
    monotone = {
        f"{n}/{f}@{t:g}": res.monotone(t, n, f)
        for t in res.compare_times
        for n in res.norms()
        for f in ("v", "H")
    }
    _emit({"status": res.status, "fits": fits, "monotone": monotone, "runs": {repr(k): v for k, v in res.runs.items()}})
    return 0


def cmd_audit(args) -> int:
    from .harness import energy_audit
    from .records import RunRecord

    rec = RunRecord.load(args.record)
    a = energy_audit(rec, args.epsilon, args.zeta, args.zeta_h)
    _emit(a.summary())
    return 0


def cmd_profile(args) -> int:
    from .mhd_solver import load_checkpoint
    from .norms import boundary_layer_profile

    sv, meta = load_checkpoint(args.viscous)
    si, _ = load_checkpoint(args.ideal)
    eps = args.epsilon if args.epsilon is not None else meta.get("epsilon")
    if eps is None:
        raise UsageError("epsilon not in checkpoint metadata; pass --epsilon")
    prof = boundary_layer_profile(sv.v, si.v, float(eps))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["z", "profile", "profile_lo", "profile_hi", "z_scaled", "profile_scaled"])
            zs, ps = prof.rescaled()
            for row in zip(prof.z, prof.profile, prof.profile_lo, prof.profile_hi, zs, ps):
                w.writerow([repr(float(x)) for x in row])
    _emit(
        {
            "epsilon": prof.epsilon,
            "amplitude": prof.amplitude,
            "width": prof.width,
            "amplitude_over_sqrt_eps": prof.scaled_amplitude,
            "width_over_sqrt_eps": prof.scaled_width,
        }
    )
    return 0


def cmd_norms(args) -> int:
    from .boundary import eta_wall_trace, wall_vorticity_residual
    from .mhd_solver import load_checkpoint
    from .norms import conormal_norm, conormal_sup_norm, n_m_diagnostic

    st, meta = load_checkpoint(args.checkpoint)
    m = args.m
    zeta = float(meta.get("zeta", 0.0))
    zeta_h = float(meta.get("zeta_h", zeta))
    div_v, div_h = st.div_residuals()
    out = {
        "t": st.t,
        "m": m,
        "energy": st.energy(),
        "div_v": div_v,
        "div_h": div_h,
        "conormal_v": conormal_norm(st.v, m),
        "conormal_h": conormal_norm(st.H, m),
        "conormal_sup_v": conormal_sup_norm(st.v, m),
        "conormal_sup_h": conormal_sup_norm(st.H, m),
        "wall_vorticity_v": wall_vorticity_residual(st.v, zeta),
        "wall_vorticity_h": wall_vorticity_residual(st.H, zeta_h),
        "eta_wall_v": eta_wall_trace(st.v, zeta),
        "eta_wall_h": eta_wall_trace(st.H, zeta_h),
    }
    if m >= 1:
        out["n_m"] = n_m_diagnostic(st, m)
    _emit(out)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        json.dump({"error": UsageError.category, "message": message}, sys.stderr)
        sys.stderr.write("\n")
        raise SystemExit(UsageError.exit_code)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mhdslip", description="Channel MHD with Navier-slip walls.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(sp):
        sp.add_argument("config", nargs="?", help="key = value config file (defaults if omitted)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")

    sp = sub.add_parser("run", help="single simulation")
    with_config(sp)
    sp.add_argument("--out", type=Path, help="directory for record.json and checkpoints")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="epsilon ladder against the ideal run, with rate fits")
    with_config(sp)
    sp.add_argument("--eps", type=float, nargs="+", help="epsilon ladder")
    sp.add_argument("--times", type=float, nargs="+", default=[0.5], help="comparison times")
    sp.add_argument("--p", type=float, nargs="+", default=[4.0], help="W^(1,p) exponents")
    sp.add_argument("--sample-dt", type=float, default=0.05, help="snapshot spacing in time")
    sp.add_argument("--out", type=Path, help="directory for CSV tables, records and checkpoints")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("audit", help="energy identity on a stored run record")
    sp.add_argument("record", type=Path)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--zeta", type=float)
    sp.add_argument("--zeta-h", type=float)
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("profile", help="boundary-layer profile from a viscous and an ideal checkpoint")
    sp.add_argument("viscous", type=Path)
    sp.add_argument("ideal", type=Path)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--csv", type=Path, help="write the profile table here")
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("norms", help="diagnostics of one checkpoint")
    sp.add_argument("checkpoint", type=Path)
    sp.add_argument("--m", type=int, default=2, help="conormal order")
    sp.set_defaults(func=cmd_norms)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except MHDError as exc:
        err = {"error": exc.category, "message": str(exc)}
        for attr in ("field", "residual", "defect", "subproblem", "t", "step", "dt", "dt_max"):
            val = getattr(exc, attr, None)
            if val is not None:
                err[attr] = val
        json.dump(err, sys.stderr, default=float)
        sys.stderr.write("\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
