"""Command-line front end.

Exit codes: 0 success, 1 validation/model error (or KS above threshold for
``compare``), 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, rem, scenario
from .errors import CalibrationError

PRESET_CHOICES = ("ruralA", "ruralB", "denseUrbanA", "custom")

_PRESET_ROWS = (
    ("carrier_ghz", "Carrier [GHz]"),
    ("bandwidth_hz", "Bandwidth [Hz]"),
    ("isd_m", "Inter-site distance [m]"),
    ("num_rings", "Simulated rings"),
    ("bs_height_m", "BS height [m]"),
    ("bs_power_dbm", "BS power [dBm/sector]"),
    ("ue_power_dbm", "UE power [dBm]"),
    ("per_sector_ues", "UEs per sector"),
    ("propagation", "Propagation model"),
    ("bs_array", "BS array"),
    ("ue_array", "UE array"),
    ("bs_noise_figure_db", "BS noise figure [dB]"),
    ("ue_noise_figure_db", "UE noise figure [dB]"),
    ("indoor_fraction", "Indoor fraction"),
    ("loss_high_fraction", "High-loss fraction"),
    ("height_mode", "UE height mode"),
    ("beam_set", "Beam set"),
    ("min_distance_m", "Min BS-UE distance [m]"),
    ("interference_cutoff_multiple", "Interference cutoff [x ISD]"),
)


def _parse_set(values):
    out = {}
    for item in values or ():
        key, sep, val = item.partition("=")
        if not sep or not key.strip():
            raise CalibrationError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def _config_from_args(args):
    overrides = _parse_set(args.set)
    for flag, key in (("seed", "seed"), ("drops", "num_drops"), ("rings", "num_rings")):
        if getattr(args, flag, None) is not None:
            overrides[key] = getattr(args, flag)
    if getattr(args, "no_shadowing", False):
        overrides["shadowing"] = False
    if getattr(args, "no_o2i", False):
        overrides["o2i"] = False
    if args.config:
        preset = args.preset if args.preset else None
        return scenario.load_config_file(args.config, overrides, preset=preset)
    return scenario.resolve(args.preset or "RuralA", overrides)


def _add_common(p):
    p.add_argument("--preset", choices=PRESET_CHOICES, type=_preset_arg)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--rings", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-shadowing", action="store_true")
    p.add_argument("--no-o2i", action="store_true")


def _preset_arg(value):
    for c in PRESET_CHOICES:
        if c.lower() == value.lower():
            return c
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="nrcalib", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nrcalib {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run calibration drops and write KPI/CDF files")
    _add_common(run)
    run.add_argument("--drops", type=int)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--sign-convention", choices=("gain", "loss"), default="gain")

    rp = sub.add_parser("rem", help="generate a radio environment map")
    _add_common(rp)
    rp.add_argument("--resolution", type=float, help="grid step in metres (default ISD/200)")
    rp.add_argument("--height", type=float, default=1.5, help="probe height in metres")
    rp.add_argument("--rem-shadowing", action="store_true", help="draw i.i.d. shadowing per REM point")
    rp.add_argument("--los-mode", choices=("random", "los", "nlos"))
    rp.add_argument("--pgm", action="store_true", help="also write rem.pgm")
    rp.add_argument("--force-outdoor-probes", action="store_true")
    rp.add_argument("--jobs", type=int, default=1, help="accepted for symmetry; REM runs in-process")

    cp = sub.add_parser("compare", help="compare a CDF against a reference curve")
    cp.add_argument("--cdf", required=True)
    cp.add_argument("--ref", required=True)
    cp.add_argument("--ks-threshold", type=float, default=None)

    sub.add_parser("presets", help="list preset parameter tables")
    return parser


def cmd_run(args):
    cfg = _config_from_args(args)
    result = scenario.run_drops(cfg, jobs=max(1, args.jobs))
    scenario.write_run_outputs(result, args.out, sign=args.sign_convention)
    s = result.samples
    print(f"{cfg.preset}: {cfg.num_drops} drops, {s.coupling_gain_db.size} coupling-gain samples, "
          f"{s.geometry_sinr_db.size} SINR samples ({s.filtered_count} below floor) -> {args.out}")
    return 0


def cmd_rem(args):
    cfg = _config_from_args(args)
    plan = scenario.build_plan(cfg)
    grid = rem.default_grid(plan, z_m=args.height, resolution_m=args.resolution)
    rmap = rem.generate_rem(grid, plan, cfg, shadowing=args.rem_shadowing, los_mode=args.los_mode,
                            force_outdoor=args.force_outdoor_probes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rem.write_rem_csv(out / "rem.csv", rmap)
    scenario.write_cdf_csv(out / "rem_sinr_cdf.csv", rem.rem_cdf(rmap))
    if args.pgm:
        rem.write_pgm(out / "rem.pgm", rmap)
    scenario.write_manifest(out / "manifest.txt", cfg, {
        "rem_points": len(rmap), "rem_resolution_m": grid.resolution_m, "rem_height_m": grid.z_m,
        "rem_shadowing": str(args.rem_shadowing).lower(), "rem_los_mode": args.los_mode or cfg.los_mode})
    print(f"REM {grid.shape[1]}x{grid.shape[0]} points -> {out}")
    return 0


def cmd_compare(args):
    run = scenario.load_reference(args.cdf)
    ref = scenario.load_reference(args.ref)
    report = scenario.compare(run, ref)
    for line in report.lines():
        print(line)
    if args.ks_threshold is not None and report.ks > args.ks_threshold:
        print(f"FAIL: ks {report.ks:.6f} exceeds threshold {args.ks_threshold}")
        return 1
    return 0


def cmd_presets(args):
    names = [p for p in scenario.PRESET_NAMES if p != "custom"]
    cfgs = [scenario.resolve(p) for p in names]
    rows = [("Parameter", names)]
    rows += [(label, [scenario.format_value(getattr(c, key)) for c in cfgs]) for key, label in _PRESET_ROWS]
    width = max(len(label) for label, _ in rows) + 2
    cols = [max(len(r[1][i]) for r in rows) + 2 for i in range(len(names))]
    for label, cells in rows:
        print((label.ljust(width) + "".join(v.ljust(w) for v, w in zip(cells, cols))).rstrip())
    return 0


COMMANDS = {"run": cmd_run, "rem": cmd_rem, "compare": cmd_compare, "presets": cmd_presets}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.verb](args)
    except (CalibrationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
