"""Command-line interface.

Usage:
    weakisingsim ground --length 256 --out runs/ground
    weakisingsim uniform --length 512 --lambda 0.4 --sign + --out runs/u04
    weakisingsim ensemble --length 256 --lambda 0.5 --scheme born --trajectories 100 --out runs/b05
    weakisingsim sweep --length 256 --scheme forced --lambda-grid 0:0.6:4 --out runs/forced
    weakisingsim analytic --curve c_eff_uniform --lambda-grid 0:1:101 --out runs/curve
    weakisingsim oracle --length 10 --lambda 0.6 --axis x --out runs/oracle
    weakisingsim --manifest runs/b05/manifest.json --out runs/b05-again

Exit codes: 0 success, 2 invalid arguments/config, 3 numerical failure.
"""

import argparse
import json
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError
from scipy.sparse.linalg import ArpackError

from weakisingsim.config import PROJECT_ROOT, reset_config
from weakisingsim.errors import ConfigError, WeakIsingError
from weakisingsim.export import read_manifest
from weakisingsim.settings import get_settings

COMMANDS = ("ground", "uniform", "ensemble", "sweep", "analytic", "oracle")
SCHEMES = ("born", "forced", "biased", "uniform-plus", "uniform-minus")


def _int_list(text: str) -> list[int]:
    """'1,2,8' or 'start:stop' (inclusive) into a list of ints."""
    try:
        if ":" in text:
            start, stop = (int(v) for v in text.split(":"))
            return list(range(start, stop + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected '1,2,3' or 'a:b', got '{text}'")


def _sign(text: str) -> int:
    if text in ("+", "+1", "1", "plus"):
        return 1
    if text in ("-", "-1", "minus"):
        return -1
    raise argparse.ArgumentTypeError(f"Sign must be + or -, got '{text}'")


class _Parser(argparse.ArgumentParser):
    """Parser whose usage errors surface as ConfigError (reported as JSON)."""

    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


def _common_flags() -> argparse.ArgumentParser:
    # absent flags stay absent so subcommand values never mask top-level ones
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", type=Path, help="YAML config file")
    common.add_argument("--out", help="Output directory (must be new or empty)")
    common.add_argument("--length", "-L", type=int, help="Chain length L")
    common.add_argument("--lengths", type=_int_list, help="Lengths for half-chain scaling")
    common.add_argument("--lambda", dest="lam", type=float, help="Measurement strength")
    common.add_argument("--lambda-grid", help="start:stop:count or comma list")
    common.add_argument("--scheme", choices=SCHEMES)
    common.add_argument("--p-plus", type=float, help="Bias of the biased scheme")
    common.add_argument("--delta-p", type=float, help="Bias offset from the optimal bias")
    common.add_argument("--sign", type=_sign, help="Outcome of uniform states (+ or -)")
    common.add_argument("--trajectories", type=int)
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--cuts", type=_int_list, help="Entropy cuts, '1,2,8' or 'a:b'")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--threads", type=int)
    common.add_argument("--axis", choices=("x", "z"))
    common.add_argument("--curve", help="Analytic curve name")
    common.add_argument("--zz-max-separation", type=int)
    common.add_argument("--verbose", action="store_true")
    common.add_argument("--quiet", dest="verbose", action="store_false")
    common.add_argument("--progress", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = _Parser(
        prog="weakisingsim",
        description="Weak measurements on the critical transverse-field Ising chain",
    )
    parser.add_argument("--manifest", type=Path, help="Re-run from an emitted manifest")
    parser.add_argument("--config", type=Path, help="YAML config file")
    parser.add_argument("--out", help="Output directory (must be new or empty)")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


_FIELDS = (
    "length", "lengths", "lam", "lambda_grid", "scheme", "p_plus", "delta_p", "sign",
    "trajectories", "seed", "cuts", "format", "threads", "axis", "curve",
    "zz_max_separation", "verbose", "progress", "out",
)


def resolve_config(args: argparse.Namespace):
    """Flags override the manifest/YAML, which override defaults."""
    from weakisingsim.experiments import RunConfig

    if args.config is not None:
        if not args.config.exists():
            raise ConfigError(f"Config file not found: {args.config}")
        # joblib workers re-read settings from the environment
        os.environ["WEAKISINGSIM_CONFIG"] = str(args.config.resolve())
    settings = get_settings(args.config, reload=True, quiet=True)
    reset_config()

    values: dict = {
        "seed": settings.run.seed,
        "threads": settings.run.threads,
        "verbose": settings.run.verbose,
        "progress": settings.run.progress,
        "lambda_grid": settings.run.lambda_grid,
    }
    values.update(settings.experiment.overrides())
    if args.manifest is not None:
        manifest = read_manifest(args.manifest)
        values.update(manifest["config"])
        values.pop("out", None)

    for name in _FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    if args.command is not None:
        values["command"] = args.command
    if "command" not in values:
        raise ConfigError(f"No command given; choose one of {', '.join(COMMANDS)}")

    if "out" not in values:
        if args.manifest is not None:
            raise ConfigError("Re-running a manifest needs a fresh --out directory")
        stamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        run_name = f"{values['command']}_{stamp}"
        values["out"] = str(PROJECT_ROOT / settings.run.results_dir / run_name)

    return RunConfig(**values)


def _fail(error: BaseException, exit_code: int) -> int:
    payload = {"error": type(error).__name__, "message": str(error), "exit_code": exit_code}
    print(json.dumps(payload), file=sys.stderr)
    return exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    try:
        from weakisingsim.experiments import ExperimentRunner

        args = build_parser().parse_args(argv)
        config = resolve_config(args)
        result = ExperimentRunner(config).run()
        return 0 if result["success"] else 1

    except ValidationError as e:
        return _fail(ConfigError(str(e)), 2)
    except WeakIsingError as e:
        return _fail(e, e.exit_code)
    except (np.linalg.LinAlgError, ArpackError, ArithmeticError) as e:
        return _fail(e, 3)
    except KeyboardInterrupt:
        print("\n\n⚠️  User interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
