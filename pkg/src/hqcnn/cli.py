"""Command-line interface: train, eval and inspect subcommands."""

from __future__ import annotations

import argparse
import sys

from .config import parse_config
from .trainer import emit_outputs, load_checkpoint, load_dataset, restore_model, run_eval, run_train


def _build_parser():
    parser = argparse.ArgumentParser(prog="hqcnn",
                                     description="Hybrid quantum-classical image classifier")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from a config file")
    p_train.add_argument("--config", required=True, help="key = value config file")
    p_train.add_argument("--out", default=None, help="override the config's out_dir")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on the configured test set")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--out", default=None, help="directory for metrics files")

    p_inspect = sub.add_parser("inspect", help="print parameter counts and layout")
    p_inspect.add_argument("--checkpoint", required=True)
    return parser


def _cmd_train(args) -> int:
    config = parse_config(args.config)
    if args.out:
        config.out_dir = args.out
    result = run_train(config)
    print(f"final test accuracy: {result.metrics.accuracy:.4f} "
          f"(macro F1 {result.metrics.macro_f1:.4f})")
    print(f"outputs written to {config.out_dir}")
    return 0


def _cmd_eval(args) -> int:
    config = parse_config(args.config)
    _, test = load_dataset(config)
    metrics = run_eval(args.checkpoint, test)
    print(f"accuracy {metrics.accuracy:.4f}  macro_f1 {metrics.macro_f1:.4f}  "
          f"macro_precision {metrics.macro_precision:.4f}  "
          f"macro_recall {metrics.macro_recall:.4f}")
    for row in metrics.confusion:
        print("  " + " ".join(f"{int(v):5d}" for v in row))
    if args.out:
        emit_outputs(metrics, [], args.out)
        print(f"metrics written to {args.out}")
    return 0


def _cmd_inspect(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    config, layout, qparams, head_params = restore_model(ckpt)
    n_quantum = qparams.to_flat().size
    n_classical = head_params.param_count()
    print(f"checkpoint format: {ckpt['format']}")
    print(f"parameters: quantum {n_quantum}, classical {n_classical}, "
          f"total {n_quantum + n_classical}")
    print(f"mode: {'recycled' if head_params.recycle else 'baseline'}, "
          f"k={head_params.k}, final_layer={'on' if head_params.final_layer else 'off'}")
    print(f"encoder: {config.effective_encoder}, classes: {config.classes}")
    for i, pairs in enumerate(layout.conv_pairs, start=1):
        print(f"conv layer {i}: pairs {pairs}")
    for i, pairs in enumerate(layout.pool_pairs, start=1):
        print(f"pool layer {i}: (kept <- discarded) {pairs}")
    print(f"retained wires: {layout.retained_wires}, discarded wires: {layout.discarded_wires}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"train": _cmd_train, "eval": _cmd_eval, "inspect": _cmd_inspect}
    try:
        return handlers[args.command](args)
    except Exception as exc:  # CLI boundary: report and signal failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
