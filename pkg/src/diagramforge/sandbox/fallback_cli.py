"""Subprocess entry point for the bundled diagram toolchain.

Invoked as:  python -m diagramforge.sandbox.fallback_cli --language dot \
                 --input job.dot --output job.png --dpi 150

Exit 0 on success with the PNG written to --output; exit 1 on compile
errors with toolchain-style log lines on stdout.
"""
from __future__ import annotations

import argparse
import sys
import time


def main(argv=None) -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--language", choices=["tex", "dot"], required=True)
    parser.add_argument("--input", required=True)
    parser.add_argument("--output", required=True)
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)

    with open(args.input, encoding="utf-8", errors="replace") as fh:
        source = fh.read()

    if args.language == "dot":
        from .dotlang import DotSyntaxError, compile_dot

        try:
            img = compile_dot(source, dpi=args.dpi)
        except DotSyntaxError as exc:
            print(str(exc), file=sys.stderr)
            return 1
        img.save(args.output, format="PNG")
        return 0

    from .texlang import has_infinite_loop, render, validate

    print("This is diagramforge-tex, a bundled TeX subset engine")
    errors = validate(source)
    if errors:
        for err in errors:
            for line in err.log_lines():
                print(line)
        print("No pages of output.")
        return 1
    if has_infinite_loop(source):
        # faithful to TeX: an unconditional \loop never returns
        while True:
            time.sleep(0.1)
    img = render(source, dpi=args.dpi)
    img.save(args.output, format="PNG")
    print(f"Output written on {args.output} (1 page).")
    return 0


if __name__ == "__main__":
    sys.exit(main())
