"""Service entry point.

    kart-bridge --model-dir PATH --port 8800     serve an exported model
    kart-bridge --hf-model NAME --port 8800      serve a fill-mask checkpoint
"""

from __future__ import annotations

import argparse
import sys


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kart-bridge", description=__doc__)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--model-dir", help="exported model directory")
    source.add_argument("--hf-model", help="Hugging Face masked-LM name or path")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8800)
    parser.add_argument("--log-level", default="warning")
    args = parser.parse_args(argv)

    try:
        if args.model_dir:
            from .formats import load_model_dir
            from .scoring import backend_for

            backend = backend_for(load_model_dir(args.model_dir))
        else:
            from .hf_backend import TransformerBackend

            backend = TransformerBackend(args.hf_model)
    except Exception as e:
        sys.stderr.write(f"kart-bridge: cannot load model: {e}\n")
        return 1

    import uvicorn

    from .server import create_app

    uvicorn.run(
        create_app(backend),
        host=args.host,
        port=args.port,
        log_level=args.log_level,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
