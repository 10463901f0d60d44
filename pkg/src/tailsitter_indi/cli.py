"""Command-line front end.

    tailsitter-indi run SCENARIO [SCENARIO ...] [--seed N] [--duration S] [--out DIR] [--jobs N]
    tailsitter-indi identify LOG.csv|SCENARIO [--out DIR]
    tailsitter-indi plot LOG.csv [--out DIR]
    tailsitter-indi validate-config FILE [FILE ...]

Exit codes: 0 ok, 1 configuration error, 2 numerical fault.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAULT = 2


def _run_one(name: str, out: str | None, seed, duration, plots: bool) -> tuple[str, int, str, dict | None]:
    from .config import load_scenario
    from .errors import ConfigError, NumericalFault
    from .scenario import run_scenario

    try:
        sc = load_scenario(name)
        target = None if out is None else Path(out) / sc.name
        res = run_scenario(sc, target, seed=seed, duration=duration, plots=plots)
    except ConfigError as exc:
        return name, EXIT_CONFIG, f"config error: {exc}", None
    except NumericalFault as exc:
        where = "" if out is None else f" (state dumped to {Path(out) / sc.name / 'fault.json'})"
        return name, EXIT_FAULT, f"numerical fault: {exc}{where}", None
    return sc.name, EXIT_OK, f"ok: {res.result.log.shape[0]} rows", res.summary.as_dict()


def cmd_run(args) -> int:
    from .config import preset_names

    if args.list:
        print("\n".join(preset_names()))
        return EXIT_OK
    if not args.scenarios:
        print("run: give at least one scenario (preset name or file); --list shows presets", file=sys.stderr)
        return EXIT_CONFIG
    jobs = [(s, args.out, args.seed, args.duration, not args.no_plots) for s in args.scenarios]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, *zip(*jobs)))
    else:
        results = [_run_one(*j) for j in jobs]
    code = EXIT_OK
    for name, status, msg, summary in results:
        print(f"{name}: {msg}")
        if summary is not None:
            print(f"  pitch RMS {summary['pitch_rms_deg']:.2f} deg, theta [{summary['theta_min_deg']:.1f}, "
                  f"{summary['theta_max_deg']:.1f}] deg, max altitude excursion "
                  f"{summary['max_altitude_excursion']:.2f} m")
        code = max(code, status)
    return code


def cmd_identify(args) -> int:
    from .identification import identify_log
    from .io import read_csv, result_columns
    from .svgplot import scatter_fit

    src = Path(args.source)
    if src.suffix == ".csv":
        cols = read_csv(src)
    else:
        from .scenario import run_scenario

        cols = result_columns(run_scenario(args.source, plots=False).result)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = identify_log(cols, window=args.window)
    text = json.dumps(report, indent=2, sort_keys=True, default=float)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "identification.json").write_text(text + "\n")
        ss = report.get("sideslip", {})
        if "c2" in ss:
            m = (cols["V_valid"] > 0.5) & (cols["V"] > 12.0)
            scatter_fit(out / "sideslip_fit.svg", cols["beta"][m], ss["c2"] * cols["f_y_f"][m] + ss["b2"],
                        "sideslip: beta = c2 f_y + b2", "beta [rad]")
        fl = report.get("flap_lift", {})
        if "with_flaps" in fl:
            m = cols["V"] < 6.0
            c = fl["with_flaps"]["coefficients"]
            pred = (c["1"] + c["q"] * cols["omega_f_q"][m] + c["theta"] * cols["theta"][m]
                    + c["u_f0"] * cols["u_f0"][m] + c["u_f1"] * cols["u_f1"][m])
            scatter_fit(out / "flap_lift_fit.svg", cols["acc_bx_f"][m], pred, "body-X acceleration with flap terms",
                        "[m/s^2]")
        print(f"wrote {out / 'identification.json'}")
    else:
        print(text)
    return EXIT_OK


def cmd_plot(args) -> int:
    from .io import read_csv
    from .scenario import summarize
    from .svgplot import standard_plots

    cols = read_csv(args.log)
    out = Path(args.out or Path(args.log).parent)
    files = standard_plots(cols, out)
    (out / "summary.json").write_text(summarize(cols).to_json() + "\n")
    for f in files:
        print(f)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .config import resolve_scenario, validate_file
    from .errors import ConfigError

    code = EXIT_OK
    for f in args.files:
        try:
            path = f if Path(f).is_file() else resolve_scenario(f)
            print(f"{f}: ok ({validate_file(path)})")
        except ConfigError as exc:
            print(f"{f}: {exc}", file=sys.stderr)
            code = EXIT_CONFIG
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tailsitter-indi", description="Tailsitter INDI simulation and identification")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run scenarios (preset names or TOML files)")
    r.add_argument("scenarios", nargs="*")
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.add_argument("--duration", type=float, default=None, help="override the scenario duration [s]")
    r.add_argument("--out", default=None, help="output directory; one subdirectory per scenario")
    r.add_argument("--jobs", type=int, default=1, help="run scenarios in N worker processes")
    r.add_argument("--no-plots", action="store_true")
    r.add_argument("--list", action="store_true", help="list bundled presets")
    r.set_defaults(func=cmd_run)

    i = sub.add_parser("identify", help="fit effectiveness, sideslip and flap lift from a log")
    i.add_argument("source", help="log.csv, or a scenario to simulate first")
    i.add_argument("--out", default=None)
    i.add_argument("--window", type=float, default=10.0, help="segment length [s]")
    i.set_defaults(func=cmd_identify)

    pl = sub.add_parser("plot", help="standard SVG plots and summary from a log")
    pl.add_argument("log")
    pl.add_argument("--out", default=None)
    pl.set_defaults(func=cmd_plot)

    v = sub.add_parser("validate-config", help="parse and check config files")
    v.add_argument("files", nargs="+")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    from .errors import ConfigError

    args = build_parser().parse_args(argv)
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
