"""Minimal scorer server for exercising the external scorer protocol.

Run with ``python -m reviewgen.echo_stub``.  Scores each sentence as
``float(sentence)`` when the sentence parses as a number, else 0.0, so a
test can encode expected scores directly in the block text.  Any
malformed request line terminates the process with a nonzero status.
"""

from __future__ import annotations

import argparse
import json
import sys


def score(sentence: str) -> float:
    try:
        return float(sentence)
    except ValueError:
        return 0.0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-block", type=int, default=10)
    args = parser.parse_args(argv)

    print(json.dumps({"protocol": "scorer/1", "max_block": args.max_block}), flush=True)
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            request_id = request["id"]
            sentences = request["sentences"]
            if not isinstance(sentences, list) or len(sentences) > args.max_block:
                raise ValueError("bad sentences field")
            scores = [score(str(s)) for s in sentences]
        except (ValueError, KeyError, TypeError) as exc:
            print(f"echo_stub: malformed request: {exc}", file=sys.stderr)
            return 1
        print(json.dumps({"id": request_id, "scores": scores}), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
