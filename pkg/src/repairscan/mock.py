"""Mock scanner and repair endpoints for exercising the pipeline without any
neural model. Run with `python -m repairscan.mock {repair,scanner} ...`; each
reads line-delimited JSON requests on stdin and answers on stdout.

Repair behaviors:
    echo     target at rank 1, padding after
    rank4    target only at position 4 of k
    gate     target at rank 1 iff every required name occurs in the prompt
    fixed    serve candidates verbatim from a file keyed by bug id

Scanner behaviors:
    truth    score 1.0 for names in the bug's truth list, 0.0 otherwise
    random   deterministic hash-uniform score per (seed, bug, name)
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys


def _read_jsonl(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _pad(target: str, i: int) -> str:
    return target + f"\n# pad {i}"


def _hash_uniform(seed: int, bug_id: str, name: str) -> float:
    digest = hashlib.blake2b(f"{seed}|{bug_id}|{name}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2**64


def _word_present(name: str, text: str) -> bool:
    return re.search(r"(?<![\w$])" + re.escape(name) + r"(?![\w$])", text) is not None


def serve_repair(args: argparse.Namespace) -> int:
    targets = {}
    if args.targets:
        for rec in _read_jsonl(args.targets):
            targets[rec["bug_id"]] = rec["target"]
    required = {}
    if args.require:
        for rec in _read_jsonl(args.require):
            required[rec["bug_id"]] = rec.get("fix_all", rec.get("names", []))
    fixed = {}
    if args.candidates:
        for rec in _read_jsonl(args.candidates):
            fixed[rec["id"]] = rec["candidates"]

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        bug_id, text, k = req["id"], req["text"], int(req.get("k", 5))
        target = targets.get(bug_id, "")
        if args.behavior == "echo":
            candidates = [target] + [_pad(target, i) for i in range(1, k)]
        elif args.behavior == "rank4":
            candidates = [_pad(target, i) for i in range(1, k)]
            candidates.insert(3, target)
            candidates = candidates[:k]
        elif args.behavior == "gate":
            names = required.get(bug_id, [])
            if all(_word_present(n, text) for n in names):
                candidates = [target] + [_pad(target, i) for i in range(1, k)]
            else:
                candidates = [_pad(target, i) for i in range(1, k + 1)]
        else:  # fixed
            candidates = fixed.get(bug_id, [])[:k]
        print(json.dumps({"id": bug_id, "candidates": candidates}), flush=True)
    return 0


def serve_scanner(args: argparse.Namespace) -> int:
    truth: dict[str, set[str]] = {}
    if args.truth:
        for rec in _read_jsonl(args.truth):
            truth[rec["bug_id"]] = set(rec.get("truth", rec.get("names", [])))

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        request_id = req["id"]
        bug_id = request_id.split("#", 1)[0]
        scores = []
        for ident in req.get("identifiers", []):
            name = ident["name"]
            if args.behavior == "truth":
                score = 1.0 if name in truth.get(bug_id, ()) else 0.0
            else:
                score = _hash_uniform(args.seed, bug_id, name)
            scores.append({"name": name, "byte_offset": ident["byte_offset"], "score": score})
        print(json.dumps({"id": request_id, "scores": scores}), flush=True)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="repairscan-mock", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    repair = sub.add_parser("repair", help="mock repair model on stdio")
    repair.add_argument("--behavior", choices=("echo", "rank4", "gate", "fixed"), default="echo")
    repair.add_argument("--targets", help="jsonl with {bug_id, target}")
    repair.add_argument("--require", help="jsonl with {bug_id, fix_all} for gate behavior")
    repair.add_argument("--candidates", help="jsonl with {id, candidates} for fixed behavior")
    repair.set_defaults(func=serve_repair)

    scanner = sub.add_parser("scanner", help="mock scanner model on stdio")
    scanner.add_argument("--behavior", choices=("truth", "random"), default="truth")
    scanner.add_argument("--truth", help="jsonl with {bug_id, truth}")
    scanner.add_argument("--seed", type=int, default=0)
    scanner.set_defaults(func=serve_scanner)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
