"""
``qcl`` command line.

    qcl gradcheck    [--config PATH] [--inject-sign-flip]
    qcl prepare-data  --config PATH
    qcl train         --config PATH [--resume CHECKPOINT] [--stdout-csv]
    qcl sweep         --config PATH
    qcl groundstate  [--config PATH] [--n N] [--h H ...]

Exit codes: 0 success, 2 configuration error, 3 numeric or convergence
failure, 4 I/O error, 1 anything unexpected.
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from qcl import __version__
from qcl.cli import commands
from qcl.cli.config_loader import load_experiment
from qcl.core.exceptions import EXIT_OK, ConfigException, QCLException, handle_cli_exception
from qcl.schemas.experiment import ExperimentConfig
from qcl.utils.logger import get_logger, setup_logging
from qcl.utils.manifest import RunManifest

logger = get_logger(__name__)

NEEDS_CONFIG = {"prepare-data", "train", "sweep"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Experiment file (INI sections)")
    common.add_argument("--seed", type=int, help="Master seed; overrides [experiment] seed")
    common.add_argument("--out", type=Path, help="Output directory; default <output_dir>/<name>")
    common.add_argument("--threads", type=int, help="Worker thread cap")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--log-format", choices=["json", "plain"], default=None)

    ap = argparse.ArgumentParser(
        prog="qcl", description="Quantum continual learning simulation lab"
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    gc = sub.add_parser("gradcheck", parents=[common], help="Audit analytic gradients")
    gc.add_argument(
        "--inject-sign-flip",
        action="store_true",
        help="Negate analytic gradients; the check must then fail",
    )

    sub.add_parser("prepare-data", parents=[common], help="Generate and save task datasets")

    tr = sub.add_parser("train", parents=[common], help="Staged continual learning with EWC")
    tr.add_argument("--resume", type=Path, help="Checkpoint to resume from")
    tr.add_argument("--stdout-csv", action="store_true", help="Also print metrics CSV on stdout")

    sub.add_parser("sweep", parents=[common], help="Regularization-strength sweep over two tasks")

    gs = sub.add_parser("groundstate", parents=[common], help="Cluster-Ising ground states")
    gs.add_argument("--n", type=int, help="Chain length")
    gs.add_argument("--h", type=float, nargs="+", help="Transverse field value(s)")
    return ap


def resolve_config(args: argparse.Namespace) -> Tuple[ExperimentConfig, str]:
    """Load ``--config`` (or defaults) and apply command-line overrides."""
    if args.config is not None:
        config, text = load_experiment(args.config)
    elif args.command in NEEDS_CONFIG:
        raise ConfigException(f"'{args.command}' requires --config")
    else:
        config, text = ExperimentConfig(), ""

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigException(f"--threads must be >= 1, got {args.threads}")
        overrides["threads"] = args.threads
    if overrides:
        config = config.model_copy(update=overrides)
    return config, text


def run(args: argparse.Namespace, argv: List[str]) -> int:
    config, text = resolve_config(args)
    out_dir = args.out or Path(config.output_dir) / config.name
    manifest = RunManifest(args.command, argv, text, config.seed)
    manifest.update(output_dir=str(out_dir), threads=config.threads)
    try:
        if args.command == "gradcheck":
            report = commands.cmd_gradcheck(config, out_dir, args.inject_sign_flip)
            manifest.update(max_deviation=report.max_deviation)
        elif args.command == "prepare-data":
            paths = commands.cmd_prepare_data(config, out_dir)
            manifest.update(datasets=[str(p) for p in paths])
        elif args.command == "train":
            result = commands.cmd_train(config, out_dir, args.resume, args.stdout_csv)
            manifest.update(
                resumed_from=str(args.resume) if args.resume else None,
                stages=len(result.history),
            )
        elif args.command == "sweep":
            rows = commands.cmd_sweep(config, out_dir)
            manifest.update(sweep_rows=len(rows))
        elif args.command == "groundstate":
            rows = commands.cmd_groundstate(config, out_dir, args.n, args.h)
            manifest.update(fields=[r["h"] for r in rows])
    except BaseException:
        try:
            manifest.write(out_dir, success=False)
        except QCLException as e:
            logger.warning(f"Run manifest not written: {e}")
        raise
    manifest.write(out_dir, success=True)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        setup_logging(log_level=args.log_level, log_format=args.log_format)
        return run(args, argv)
    except Exception as e:
        return handle_cli_exception(e)


if __name__ == "__main__":
    sys.exit(main())
