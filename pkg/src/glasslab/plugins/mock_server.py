"""Stdio plugin server backed by the built-in geometric mocks.

Run as `python -m glasslab.plugins.mock_server`; exits cleanly when stdin
closes. Useful for exercising the subprocess client and as the reference
implementation of the plugin side of the protocol.
"""

import argparse
import sys

from .ports import MockSegmenter, MockVerifier, dispatch_request_line


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="serve the built-in mock ports over stdio")
    parser.add_argument("--score", type=float, default=1.0, help="verifier detection score")
    parser.add_argument("--fixed-box", type=float, nargs=4, default=None,
                        metavar=("X", "Y", "W", "H"),
                        help="always answer verify with this box instead of echoing the hint")
    parser.add_argument("--image-size", type=int, nargs=2, default=None, metavar=("W", "H"),
                        help="assume this image size instead of reading the file")
    args = parser.parse_args(argv)

    verifier = MockVerifier(score=args.score, fixed_box=args.fixed_box)
    segmenter = MockSegmenter(image_size=tuple(args.image_size) if args.image_size else None)

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        sys.stdout.write(dispatch_request_line(line, verifier, segmenter) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
