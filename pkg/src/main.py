from dotenv import load_dotenv
load_dotenv()

import argparse
import sys
from typing import List, Optional

from src import __version__
from src.cli.commands import cmd_ablate, cmd_eval, cmd_expand, cmd_hv, cmd_probe, cmd_train
from src.core.config import config
from src.core.logging import logger


def print_startup_message(command: str):
    """Logs a summary of the resolved settings; stdout stays free for command output."""
    logger.info(f"PaLoRA toolkit v{__version__}: {command}")
    logger.info(f"   Data dir: {config.data_dir}")
    logger.info(f"   Output dir: {config.output_dir}")
    logger.info(f"   Evaluation workers: {config.eval_workers}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="palora", description="Pareto Front Learning with low-rank adapters")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a model from scratch")
    train.add_argument("--config", required=True)
    train.add_argument("--seed", type=int)
    train.add_argument("--out")

    evaluate = sub.add_parser("eval", help="evaluate a checkpoint on an evenly spaced grid")
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--grid", type=int)
    evaluate.add_argument("--ref")
    evaluate.add_argument("--config")
    evaluate.add_argument("--out")

    expansion = sub.add_parser("expand", help="adapter-only Pareto expansion of a checkpoint")
    expansion.add_argument("--checkpoint", required=True)
    expansion.add_argument("--config", required=True)
    expansion.add_argument("--seed", type=int)
    expansion.add_argument("--out")

    probing = sub.add_parser("probe", help="evaluate arbitrary (pseudo)preferences")
    probing.add_argument("--checkpoint", required=True)
    probing.add_argument("--lambdas", help="JSON list of preference lists, inline or a file path")
    probing.add_argument("--config")
    probing.add_argument("--out")

    ablate = sub.add_parser("ablate", help="run a schedule/alpha/m sweep")
    ablate.add_argument("--config", required=True)
    ablate.add_argument("--out")

    hv = sub.add_parser("hv", help="hypervolume of the loss columns of a CSV")
    hv.add_argument("csv")
    hv.add_argument("--ref")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    print_startup_message(args.command)

    if args.command == "train":
        return cmd_train(args.config, args.seed, args.out)
    if args.command == "eval":
        return cmd_eval(args.checkpoint, args.grid, args.ref, args.config, args.out)
    if args.command == "expand":
        return cmd_expand(args.checkpoint, args.config, args.seed, args.out)
    if args.command == "probe":
        return cmd_probe(args.checkpoint, args.lambdas, args.config, args.out)
    if args.command == "ablate":
        return cmd_ablate(args.config, args.out)
    return cmd_hv(args.csv, args.ref)


if __name__ == "__main__":
    sys.exit(main())
