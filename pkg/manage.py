import argparse
import logging
import os
import sys
from pathlib import Path

# Ensure backend folder is in python path
sys.path.append(os.path.join(os.path.dirname(__file__), 'backend'))

from app import __version__
from app.core.errors import ConfigError, DimensionCeilingError, FermiMagnusError
from app.core.log import configure_logging
from app.schemas.experiment import ExperimentName
from app.services.config_parser import parse_config
from app.services.emitter import emit, write_result
from app.services.experiments import run_experiment

logger = logging.getLogger("manage")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CEILING = 3
EXIT_INTERNAL = 4

# --flag -> (config key, type, help)
OVERRIDES = [
    ("--omega-l", "omega_l", float, "left atom angular frequency"),
    ("--omega-r", "omega_r", float, "right atom angular frequency"),
    ("--separation", "separation", float, "R = z_r - z_l"),
    ("--modes", "modes", int, "modes per branch N"),
    ("--box-length", "box_length", float, "quantisation length L (default 8R)"),
    ("--photon-cutoff", "photon_cutoff", int, "total photon cutoff"),
    ("--taper", "taper", str, "mode coupling roll-off: gaussian (default) | sharp"),
    ("--hbar", "hbar", float, None),
    ("--steps", "steps", int, "time-grid steps"),
    ("--t-max", "t_max", float, "grid end time"),
    ("--propagator", "propagator", str, "magnus2-series | magnus2-exponential | dyson2 | step-oracle"),
    ("--method", "method", str, "kernel | matrix (magnus2-series only)"),
    ("--points", "points", int, "rows emitted per curve"),
    ("--g", "g", float, "driven-mode coupling"),
    ("--omega", "omega", float, "driven-mode angular frequency"),
    ("--n-max", "n_max", int, "driven-mode Fock cutoff"),
    ("--sweep", "sweep", str, "outer sweep, e.g. 'modes: 64, 128, 256'"),
]


def cmd_run(args):
    """Parse config + overrides, run the experiment, emit the table."""
    text = ""
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}", key="config")
        text = path.read_text(encoding="utf-8")

    overrides = {key: getattr(args, key) for _, key, _, _ in OVERRIDES}
    overrides["experiment"] = args.command
    overrides["rwa"] = args.rwa
    overrides["format"] = args.format
    overrides["output"] = args.output
    config = parse_config(text, overrides)

    result = run_experiment(config)

    if config.output:
        written = write_result(result, config.output, config.format)
        print(f"Wrote {len(result.rows)} rows to {written}", file=sys.stderr)
    else:
        sys.stdout.write(emit(result, config.format))
        sys.stdout.flush()

    if args.figure:
        from app.services.figures import write_figure
        write_figure(result, args.figure)
        print(f"Wrote figure to {args.figure}", file=sys.stderr)


def main(argv=None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Config file (key = value lines or a JSON object)")
    common.add_argument("--output", help="Write the table here instead of stdout")
    common.add_argument("--format", choices=["csv", "json"], help="Output format (default csv)")
    common.add_argument("--figure", help="Also write a static HTML figure")
    common.add_argument("--verbose", action="store_true", help="Debug logging on stderr")
    common.add_argument("--rwa", action=argparse.BooleanOptionalAction, default=None,
                        help="Keep only the co-rotating interaction terms")
    for flag, key, kind, help_text in OVERRIDES:
        common.add_argument(flag, dest=key, type=kind, help=help_text)

    parser = argparse.ArgumentParser(description="Magnus / Dyson propagator experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", help="Available experiments")

    descriptions = {
        ExperimentName.FERMI_ANALYTIC: "Light-cone closed form of the Fermi amplitude",
        ExperimentName.FERMI_NUMERIC: "Numeric Fermi amplitude and causality leakage",
        ExperimentName.RWA_COMPARE: "Leakage of the full vs rotating-wave model across N",
        ExperimentName.DRIVEN_MODE: "Closed-form driven-mode propagators: vacuum overlap and defect",
        ExperimentName.CONVERGENCE: "Error vs grid steps (driven) or vs mode count (fermi)",
        ExperimentName.KERNEL_SMEAR: "Off-cone smeared commutator kernel: full, co, counter",
    }
    for name, help_text in descriptions.items():
        sub = subparsers.add_parser(name.value, parents=[common], help=help_text)
        sub.set_defaults(func=cmd_run)

    args = parser.parse_args(argv)

    if not hasattr(args, "func"):
        parser.print_help()
        return EXIT_CONFIG

    configure_logging(args.verbose)
    try:
        args.func(args)
    except ConfigError as e:
        print(f"Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DimensionCeilingError as e:
        print(f"Refused: {e}", file=sys.stderr)
        return EXIT_CEILING
    except FermiMagnusError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:
        logger.exception("Unexpected failure")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
