"""Command line interface.

Subcommands: generate, correlate, check, sound, mse, capacity.  Every
command takes a scenario either from ``--config FILE`` or from a built-in
``--preset`` (default ``paper-sec5``); ``--seed`` and ``--trials`` override
the corresponding config fields.

Exit codes: 0 success, 2 configuration or constraint error, 3 numerical
failure (including flagged non-convergence), 4 I/O error.
"""

import argparse
import os
import sys

from . import config as config_mod
from .errors import ConfigError, ConstraintViolationError, NumericalError
from .harness import emit_results, run_capacity_experiment, run_mse_experiment, run_sounding
from .waveform import generate_chirp, periodic_autocorrelation, periodic_crosscorrelation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _add_common(parser):
    parser.add_argument("--config", help="path to a scenario JSON file")
    parser.add_argument(
        "--preset",
        choices=sorted(config_mod.PRESETS),
        help="built-in scenario (default: paper-sec5)",
    )
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--trials", type=int, help="override the trial count")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument(
        "--format", choices=("csv", "record"), default="csv", help="output format"
    )


def _load_config(args):
    if args.config and args.preset:
        raise ConfigError("--config and --preset are mutually exclusive")
    if args.config:
        cfg = config_mod.load(args.config)
    else:
        cfg = config_mod.preset(args.preset or "paper-sec5")
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.trials is not None:
        cfg = cfg.replace(trials=args.trials)
    return cfg


def _fmt(x):
    return f"{x:.12e}"


def _write_csv(outdir, name, lines):
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _cmd_generate(args):
    cfg = _load_config(args)
    paths = []
    for p in cfg.chirp_rates:
        w = generate_chirp(p, cfg.waveform_length)
        lines = ["n,re,im"]
        lines.extend(
            f"{n},{_fmt(v.real)},{_fmt(v.imag)}" for n, v in enumerate(w.samples)
        )
        paths.append(_write_csv(args.out, f"waveform_p{p}_N{w.N}.csv", lines))
    for path in paths:
        print(path)
    return EXIT_OK


def _cmd_correlate(args):
    cfg = _load_config(args)
    waveforms = [generate_chirp(p, cfg.waveform_length) for p in cfg.chirp_rates]
    lines = ["p,tau,re,im"]
    for w in waveforms:
        for tau in range(w.N):
            r = periodic_autocorrelation(w, tau)
            lines.append(f"{w.p},{tau},{_fmt(r.real)},{_fmt(r.imag)}")
    print(_write_csv(args.out, "autocorrelation.csv", lines))
    lines = ["p,q,tau,re,im"]
    for a in range(len(waveforms)):
        for b in range(a + 1, len(waveforms)):
            for tau in range(waveforms[a].N):
                c = periodic_crosscorrelation(waveforms[a], waveforms[b], tau)
                lines.append(
                    f"{waveforms[a].p},{waveforms[b].p},{tau},{_fmt(c.real)},{_fmt(c.imag)}"
                )
    print(_write_csv(args.out, "crosscorrelation.csv", lines))
    return EXIT_OK


def _cmd_check(args):
    cfg = _load_config(args)
    report = cfg.design_report()
    status = "PASS" if report.passed else "FAIL"
    print(f"{status}: {report.condition}")
    print(f"slack: {report.slack} (window {report.window})")
    return EXIT_OK


def _cmd_sound(args):
    cfg = _load_config(args)
    result = run_sounding(cfg)
    for path in emit_results(result, args.out, args.format):
        print(path)
    return EXIT_OK


def _cmd_mse(args):
    cfg = _load_config(args)
    result = run_mse_experiment(cfg)
    for path in emit_results(result, args.out, args.format):
        print(path)
    for row in result.antennas:
        print(
            f"rx {row.rx}: mse={row.mse:.6e} crb={row.crb:.6e} ratio={row.ratio:.4f}"
        )
    if result.nonconverged:
        print(
            f"warning: joint estimator failed to converge in "
            f"{result.nonconverged} link-trials",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_capacity(args):
    cfg = _load_config(args)
    result = run_capacity_experiment(cfg)
    for path in emit_results(result, args.out, args.format):
        print(path)
    for row in result.capacity:
        flag = "equal" if row.equal else f"gap {row.max_bin_gap:.3e}"
        print(
            f"rho {row.rho_db:g} dB: c_syn={row.c_syn:.6f} "
            f"c_asyn={row.c_asyn:.6f} ({flag})"
        )
    return EXIT_OK


_COMMANDS = {
    "generate": (_cmd_generate, "write the configured waveforms to CSV"),
    "correlate": (_cmd_correlate, "write auto/cross correlation tables"),
    "check": (_cmd_check, "report the design-constraint check"),
    "sound": (_cmd_sound, "one sounding realization with matched-filter traces"),
    "mse": (_cmd_mse, "Monte-Carlo MSE experiment against the variance bound"),
    "capacity": (_cmd_capacity, "synchronous vs asynchronous capacity report"),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chirpsounder",
        description="Chirp channel sounding for asynchronous multi-user MIMO",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, help_text) in _COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        _add_common(cmd)
        cmd.set_defaults(func=func)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConstraintViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
