from __future__ import annotations

import argparse
import sys

from .backends import DEFAULT_MODEL_ID
from .server import ShimConfig, serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="scorer-shim", description="Serve a factual-consistency scorer over HTTP"
    )
    parser.add_argument("--model", default=DEFAULT_MODEL_ID, help="model identifier")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--max-batch", type=int, default=64, dest="max_batch")
    parser.add_argument("--max-seq-len", type=int, default=512, dest="max_seq_len")
    parser.add_argument("--precision", choices=["float32", "float16"], default="float32")
    parser.add_argument("--echo", action="store_true", help="serve the model-free echo scorer")
    args = parser.parse_args(argv)
    config = ShimConfig(
        model_id=args.model,
        host=args.host,
        port=args.port,
        max_batch=args.max_batch,
        max_seq_len=args.max_seq_len,
        precision=args.precision,
        echo=args.echo,
    )
    serve(config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
