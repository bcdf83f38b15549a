"""
Command-line entry point: runs the certification pipeline for one config.

Exit codes:
    0 OK, 1 tool error, 2 configuration error, 3 insufficient scenario data,
    4 scenario program infeasible, 5 certification margin positive,
    6 composition rejected, 7 numeric error
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from mdpcert.config import settings
from mdpcert.errors import ConfigurationError, ExitCode
from mdpcert.graph.pipeline_graph import run_pipeline
from mdpcert.logging_conf import setup_logging
from mdpcert.models import load_pipeline_config

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdpcert",
        description="Data-driven certification of interconnected black-box stochastic systems",
    )
    parser.add_argument("--config", required=True, type=Path, help="Pipeline configuration (JSON)")
    parser.add_argument("--seed", type=int, default=None, help="Override the master seed")
    parser.add_argument("--output-dir", type=Path, default=None, help="Bundle directory")
    parser.add_argument("--workers", type=int, default=None, help="Threads for intra-stage parallelism")
    parser.add_argument("--resume", type=Path, default=None,
                        help="Previous run directory; reload its certificates and start at composition")
    parser.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)

    try:
        cfg = load_pipeline_config(args.config)
    except ConfigurationError as exc:
        logger.error(str(exc))
        return int(ExitCode.CONFIG_ERROR)

    cfg = cfg.model_copy(update={"seed": args.seed if args.seed is not None else cfg.seed})
    run_dir = args.output_dir
    try:
        code, bundle = run_pipeline(
            cfg,
            base_dir=args.config.parent,
            run_dir=run_dir,
            workers=args.workers or settings.workers,
            resume_dir=args.resume,
        )
    except Exception:
        logger.exception("Pipeline aborted by an unexpected error")
        return int(ExitCode.TOOL_ERROR)

    if bundle:
        logger.info(f"Bundle: {bundle['run_dir']}")
    return int(code)


if __name__ == "__main__":
    sys.exit(main())
