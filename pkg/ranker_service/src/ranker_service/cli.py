"""Command line: ``train`` a scoring model from exported pairs, ``serve``
a saved artifact over the remote-scorer HTTP protocol."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .server import serve
from .training import TrainConfig, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ranker-service", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train_p = sub.add_parser("train", help="train relation/path scoring heads")
    train_p.add_argument("--pairs", required=True, help="JSONL pairs from the exporter")
    train_p.add_argument("--out", required=True, help="artifact directory")
    train_p.add_argument("--log", default=None, help="training log path (JSONL)")
    train_p.add_argument("--learning-rate", type=float, default=1e-2)
    train_p.add_argument("--margin", type=float, default=1.0)
    train_p.add_argument("--epochs", type=int, default=10)
    train_p.add_argument("--batch-size", type=int, default=32)
    train_p.add_argument("--seed", type=int, default=0)
    train_p.add_argument("--encoder", default="hash-bow", help="encoder identifier")

    serve_p = sub.add_parser("serve", help="serve a trained artifact")
    serve_p.add_argument("--artifact", required=True)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8090)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "train":
        if not Path(args.pairs).is_file():
            print(f"error: pairs file not found: {args.pairs}", file=sys.stderr)
            return 2
        try:
            cfg = TrainConfig(
                learning_rate=args.learning_rate,
                margin=args.margin,
                epochs=args.epochs,
                batch_size=args.batch_size,
                seed=args.seed,
                encoder_id=args.encoder,
            )
            result = train(args.pairs, cfg, artifact_dir=args.out, log_path=args.log)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(f"final mean loss: {result.final_loss:.4f}; artifact at {args.out}")
        return 0
    serve(args.artifact, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
