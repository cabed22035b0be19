"""Command-line pipeline driver.

Subcommands: ingest, dedup, split, extract, scan, scan-eval, prompts,
repair-eval, report, lex. Every command that writes artifacts also writes a
manifest.json (resolved config, seeds, input digests) sufficient to
reproduce the run byte-identically. Exit codes: 0 ok, 1 usage, 2 data
error, 3 external-endpoint error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

from . import __version__, corpus, evaluation, ingredients, lexing, repairprep, scanning, wire
from .errors import DataError, EndpointError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ENDPOINT = 3

DEFAULT_THRESHOLDS = (0.05, 0.25, 0.5, 0.75, 0.95)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 by default; we reserve 2 for data errors
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# --------------------------------------------------------------------------
# Small IO helpers
# --------------------------------------------------------------------------

def _read_corpus(path: str) -> corpus.BugCorpus:
    with open(path, encoding="utf-8") as fh:
        return corpus.ingest(fh)


def _write_jsonl(path: Path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, rows: list[dict], fieldnames: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, args: argparse.Namespace, inputs: list[str]) -> None:
    config = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func", "config") and not callable(v)
    }
    manifest = {
        "tool_version": __version__,
        "command": args.command,
        "config": config,
        "inputs": {p: _sha256(p) for p in inputs if p},
    }
    _write_json(out_dir / "manifest.json", manifest)


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_corpus_normalized(path: str, normalize: bool) -> corpus.BugCorpus:
    corp = _read_corpus(path)
    if not normalize:
        return corp
    samples = tuple(corpus.normalize_bug(b) for b in corp.samples)
    return corpus.BugCorpus(samples, corp.rejects)


def _parse_thresholds(raw: str | None):
    if not raw:
        return list(DEFAULT_THRESHOLDS)
    return [float(t) for t in raw.split(",") if t.strip()]


def _resolve_budget(args: argparse.Namespace) -> None:
    # --budget wins; otherwise the token budget times the bytes/token proxy
    if args.budget is None:
        args.budget = args.budget_tokens * args.bytes_per_token


def _add_budget_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--budget", type=int, default=None,
                   help="input window budget in bytes (default: tokens x ratio)")
    p.add_argument("--budget-tokens", type=int, default=1024, dest="budget_tokens")
    p.add_argument("--bytes-per-token", type=int, default=4, dest="bytes_per_token")


def _scanner_spec(args: argparse.Namespace) -> scanning.ScannerSpec:
    freq = None
    if args.scanner == scanning.SCANNER_FREQUENCY_PRIOR:
        if not getattr(args, "train", None):
            raise DataError("--train corpus is required for the frequency_prior scanner")
        train = _load_corpus_normalized(args.train, True)
        freq = ingredients.frequency_table(train.samples)
    return scanning.ScannerSpec(
        kind=args.scanner,
        seed=args.seed,
        similarity_floor=getattr(args, "similarity_floor", 0.0),
        endpoint=getattr(args, "endpoint", None),
        freq_table=freq,
    )


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def cmd_ingest(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    corp = _read_corpus(args.input)
    _write_jsonl(out / "corpus.jsonl", (b.to_record() for b in corp.samples))
    _write_jsonl(out / "rejects.jsonl", (dataclasses.asdict(r) for r in corp.rejects))
    _write_manifest(out, args, [args.input])
    print(f"ingested {len(corp)} samples, {len(corp.rejects)} rejects -> {out}")
    return EXIT_OK


def cmd_dedup(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    corp = corpus.dedup(_read_corpus(args.input))
    _write_jsonl(out / "corpus.jsonl", (b.to_record() for b in corp.samples))
    _write_manifest(out, args, [args.input])
    print(f"kept {len(corp)} samples -> {out}")
    return EXIT_OK


def cmd_split(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    corp = _read_corpus(args.input)
    fractions = {}
    for part in args.fractions.split(","):
        name, _, frac = part.partition("=")
        if not frac:
            raise DataError(f"bad fraction spec: {part!r}")
        fractions[name.strip()] = float(frac)
    splits = corpus.split(corp, fractions, args.seed)
    _write_json(out / "splits.json", {s.name: list(s.ids) for s in splits})
    by_id = corp.by_id()
    for s in splits:
        _write_jsonl(out / f"{s.name}.jsonl", (by_id[i].to_record() for i in s.ids))
    _write_manifest(out, args, [args.input])
    print(f"wrote {len(splits)} splits -> {out}")
    return EXIT_OK


def _extract_record(bug: corpus.BugSample, args: argparse.Namespace) -> dict:
    window = corpus.local_context(bug, args.before, args.after)
    if args.scope == "file":
        bug = dataclasses.replace(bug, project_files=None)
    sets = ingredients.ingredient_sets(bug, window)
    rec = sets.to_record()
    rec["window"] = [window.start, window.end]
    rec["cover"] = {
        scope: ingredients.cover(sets, scope) for scope in ingredients.SCOPES
    }
    distance = ingredients.single_ingredient_distance(bug, sets)
    rec["distance"] = (
        {"name": distance.name, "signed_chars": distance.signed_chars} if distance else None
    )
    rec["uncovered"] = ingredients.classify_uncovered(bug, sets)
    return rec


def cmd_extract(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    corp = _load_corpus_normalized(args.input, not args.no_normalize)
    _write_jsonl(out / "ingredients.jsonl", (_extract_record(b, args) for b in corp.samples))
    _write_manifest(out, args, [args.input])
    print(f"extracted ingredients for {len(corp)} bugs -> {out}")
    return EXIT_OK


def cmd_scan(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    _resolve_budget(args)
    corp = _load_corpus_normalized(args.input, not args.no_normalize)
    samples = []
    for bug in corp.samples:
        prepared = scanning.prepare_scan_bug(bug, args.budget, args.variant, args.before, args.after)
        samples.extend(prepared.samples)
    if args.undersample:
        samples = scanning.undersample(samples, args.seed)
    _write_jsonl(out / "samples.jsonl", (s.to_record() for s in samples))
    _write_manifest(out, args, [args.input])
    print(f"wrote {len(samples)} scan samples -> {out}")
    return EXIT_OK


def cmd_scan_eval(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    _resolve_budget(args)
    corp = _load_corpus_normalized(args.input, not args.no_normalize)
    spec = _scanner_spec(args)
    prepared = [
        scanning.prepare_scan_bug(b, args.budget, args.variant, args.before, args.after)
        for b in corp.samples
    ]
    points = scanning.threshold_sweep(spec, prepared, _parse_thresholds(args.thresholds))
    rows = [dataclasses.asdict(p) for p in points]
    _write_json(out / "sweep.json", rows)
    _write_csv(
        out / "sweep.csv",
        rows,
        ["threshold", "n_bugs", "precision", "recall", "f1",
         "skipped_empty_truth", "skipped_no_samples", "failed"],
    )
    _write_manifest(out, args, [args.input] + ([args.train] if getattr(args, "train", None) else []))
    for p in points:
        print(
            f"t={p.threshold:<5} n={p.n_bugs:<4} P={p.precision:.4f} "
            f"R={p.recall:.4f} F1={p.f1:.4f}"
        )
    return EXIT_OK


def cmd_prompts(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    _resolve_budget(args)
    corp = _load_corpus_normalized(args.input, not args.no_normalize)
    spec = _scanner_spec(args) if args.mode == repairprep.MODE_SCANNED else None
    records = []
    for bug in corp.samples:
        window = corpus.local_context(bug, args.before, args.after)
        if args.mode == repairprep.MODE_SCANNED:
            prompt = repairprep.scan_pipeline(
                bug, spec, args.threshold, args.budget,
                variant=args.variant, before=args.before, after=args.after,
            )
        else:
            sets = ingredients.ingredient_sets(bug, window)
            prompt = repairprep.build_baseline_input(
                bug, window, sets, args.mode, args.seed, args.budget, args.large_multiplier
            )
        records.append(
            {
                "bug_id": prompt.bug_id,
                "mode": prompt.mode,
                "text": prompt.text,
                "ingredient_list": list(prompt.ingredient_list),
                "target": repairprep.learning_target(bug).text,
            }
        )
    _write_jsonl(out / "prompts.jsonl", records)
    _write_manifest(out, args, [args.input])
    print(f"wrote {len(records)} prompts (mode={args.mode}) -> {out}")
    return EXIT_OK


def _load_candidates(path: str) -> dict[str, list[str]]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                out[rec["id"]] = rec["candidates"]
    return out


def cmd_repair_eval(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    with open(args.prompts, encoding="utf-8") as fh:
        prompts = [json.loads(line) for line in fh if line.strip()]
    corp = _load_corpus_normalized(args.corpus, not args.no_normalize)
    by_id = corp.by_id()

    candidates_by_bug: dict[str, list[str]] = {}
    if args.candidates:
        candidates_by_bug = _load_candidates(args.candidates)
    else:
        if not args.endpoint:
            raise DataError("repair-eval needs --candidates or --endpoint")
        with wire.open_endpoint(args.endpoint) as endpoint:
            for rec in prompts:
                candidates_by_bug[rec["bug_id"]] = wire.repair_request(
                    endpoint, rec["bug_id"], rec["text"], args.k
                )

    outcomes = []
    unevaluated = []
    sets_by_bug = {}
    distances = {}
    context_sizes = []
    for rec in prompts:
        bug_id = rec["bug_id"]
        bug = by_id.get(bug_id)
        if bug is None:
            unevaluated.append(bug_id)
            continue
        cands = candidates_by_bug.get(bug_id)
        if not cands:
            unevaluated.append(bug_id)
            continue
        outcomes.append(
            evaluation.exact_match(bug_id, cands, rec["target"], args.normalization, args.k)
        )
        window = corpus.local_context(bug, args.before, args.after)
        sets = ingredients.ingredient_sets(bug, window)
        sets_by_bug[bug_id] = sets
        distance = ingredients.single_ingredient_distance(bug, sets)
        if distance is not None:
            distances[bug_id] = distance.signed_chars
            pre, post = _context_byte_sizes(bug, window)
            context_sizes.append((pre, post))
    for bug_id in unevaluated:
        print(f"warning: no candidates for {bug_id}, reported as unevaluated", file=sys.stderr)

    summary = evaluation.repair_summary(outcomes, sets_by_bug, unevaluated)
    _write_jsonl(
        out / "outcomes.jsonl",
        (
            {"bug_id": o.bug_id, "success": o.success, "first_hit_rank": o.first_hit_rank}
            for o in outcomes
        ),
    )
    _write_json(out / "summary.json", summary.to_record())

    reports = {
        "breakdown_count": evaluation.success_by_ingredient_count(outcomes, sets_by_bug, ci=args.ci),
        "breakdown_distance": evaluation.success_by_distance(
            outcomes, distances, context_sizes=context_sizes, ci=args.ci
        ),
    }
    if args.train:
        train = _load_corpus_normalized(args.train, not args.no_normalize)
        freq = ingredients.frequency_table(train.samples)
        single = {
            bid: next(iter(s.fix_all))
            for bid, s in sets_by_bug.items()
            if len(s.fix_all) == 1
        }
        reports["breakdown_frequency"] = evaluation.success_by_frequency(
            outcomes, single, freq, ci=args.ci
        )
    fields = ["dimension", "lo", "hi", "n", "rate", "ci_lo", "ci_hi", "label"]
    for name, report in reports.items():
        _write_csv(out / f"{name}.csv", report.to_rows(), fields)
        _write_json(
            out / f"{name}.json",
            {"rows": report.to_rows(), "notes": list(report.notes), "meta": report.meta},
        )
    if args.plot_data:
        combined = [row for report in reports.values() for row in report.to_rows()]
        _write_csv(out / "plot_data.csv", combined, fields)
    _write_manifest(
        out, args,
        [args.prompts, args.corpus]
        + ([args.candidates] if args.candidates else [])
        + ([args.train] if args.train else []),
    )
    print(
        f"evaluated {summary.n_all} bugs: success {summary.rate_all:.2%} overall, "
        f"{summary.rate_with_ingredients:.2%} with ingredients, "
        f"{summary.rate_with_oow:.2%} with out-of-window ingredients"
    )
    return EXIT_OK


def _context_byte_sizes(bug: corpus.BugSample, window: corpus.ContextWindow) -> tuple[int, int]:
    lines = corpus.source_lines(bug.buggy_source)
    first, last = bug.buggy_hunks[0][0], bug.buggy_hunks[-1][1]
    pre = "\n".join(lines[window.start - 1 : first - 1])
    post = "\n".join(lines[last : window.end])
    return repairprep.byte_len(pre), repairprep.byte_len(post)


def cmd_report(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    corp = _load_corpus_normalized(args.input, not args.no_normalize)
    all_sets = []
    for bug in corp.samples:
        window = corpus.local_context(bug, args.before, args.after)
        all_sets.append(ingredients.ingredient_sets(bug, window))
    report = evaluation.cover_report(all_sets)
    payload = {
        "scope_means": report.scope_means,
        "scope_counts": report.scope_counts,
        "no_ingredient_fraction": report.no_ingredient_fraction,
        "n_total": report.n_total,
        "n_with_ingredients": report.n_with_ingredients,
        "project_scope_fraction": report.project_scope_fraction,
    }
    _write_json(out / "cover.json", payload)
    _write_csv(out / "cover.csv", report.to_rows(), ["scope", "mean_cover", "n"])
    _write_manifest(out, args, [args.input])
    for scope in ingredients.SCOPES:
        mean = report.scope_means[scope]
        shown = f"{mean:.2%}" if mean is not None else "n/a"
        print(f"cover[{scope}] = {shown} (n={report.scope_counts[scope]})")
    print(f"no-ingredient fraction = {report.no_ingredient_fraction:.2%}")
    return EXIT_OK


def cmd_lex(args: argparse.Namespace) -> int:
    with open(args.input, "rb") as fh:
        source = fh.read()
    occurrences = lexing.lex_identifiers(source, args.language)
    for occ in occurrences:
        print(json.dumps(dataclasses.asdict(occ)))
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser assembly
# --------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, *, out: bool = True) -> None:
    if out:
        p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="accepted for interface parity")
    p.add_argument("--before", type=int, default=corpus.DEFAULT_BEFORE)
    p.add_argument("--after", type=int, default=corpus.DEFAULT_AFTER)
    p.add_argument("--no-normalize", action="store_true", help="skip multi-line literal splitting")


def build_parser() -> _Parser:
    parser = _Parser(prog="repairscan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a raw corpus, write rejects")
    p.add_argument("--input", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("dedup", help="drop duplicate fixes by commit/content key")
    p.add_argument("--input", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_dedup)

    p = sub.add_parser("split", help="deterministic disjoint corpus splits")
    p.add_argument("--input", required=True)
    p.add_argument("--fractions", required=True, help="e.g. train_scanner=0.4,eval_scanner=0.1")
    _add_common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("extract", help="ingredient sets, covers, distances per bug")
    p.add_argument("--input", required=True)
    p.add_argument("--scope", choices=("project", "file"), default="project")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("scan", help="emit labeled scanner samples")
    p.add_argument("--input", required=True)
    p.add_argument("--variant", choices=scanning.VARIANTS, default=scanning.VARIANT_ALL)
    _add_budget_flags(p)
    p.add_argument("--undersample", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("scan-eval", help="threshold sweep of a scanner")
    p.add_argument("--input", required=True)
    p.add_argument("--scanner", choices=scanning.SCANNER_KINDS, required=True)
    p.add_argument("--endpoint", help="command or URL for the external scanner")
    p.add_argument("--thresholds", help="comma-separated, default 0.05,0.25,0.5,0.75,0.95")
    p.add_argument("--variant", choices=scanning.VARIANTS, default=scanning.VARIANT_ALL)
    _add_budget_flags(p)
    p.add_argument("--similarity-floor", type=float, default=0.0, dest="similarity_floor")
    p.add_argument("--train", help="training corpus for the frequency_prior scanner")
    _add_common(p)
    p.set_defaults(func=cmd_scan_eval)

    p = sub.add_parser("prompts", help="assemble repair-model inputs")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=repairprep.MODES, required=True)
    _add_budget_flags(p)
    p.add_argument("--large-multiplier", type=int, default=repairprep.LARGE_CONTEXT_MULTIPLIER,
                   dest="large_multiplier")
    p.add_argument("--scanner", choices=scanning.SCANNER_KINDS, default=scanning.SCANNER_ORACLE)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--variant", choices=scanning.VARIANTS, default=scanning.VARIANT_ALL)
    p.add_argument("--endpoint", help="external scanner endpoint for --mode scanned")
    p.add_argument("--train", help="training corpus for the frequency_prior scanner")
    _add_common(p)
    p.set_defaults(func=cmd_prompts)

    p = sub.add_parser("repair-eval", help="exact-match evaluation plus breakdowns")
    p.add_argument("--prompts", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates", help="jsonl {id, candidates}; alternative to --endpoint")
    p.add_argument("--endpoint", help="repair model command or URL")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--normalization",
                   choices=(evaluation.NORMALIZATION_STRICT, evaluation.NORMALIZATION_LINE_TRIMMED),
                   default=evaluation.NORMALIZATION_STRICT)
    p.add_argument("--ci", choices=("normal", "exact"), default="normal")
    p.add_argument("--train", help="training corpus for the frequency breakdown")
    p.add_argument("--plot-data", action="store_true", dest="plot_data",
                   help="also write a combined plot_data.csv")
    _add_common(p)
    p.set_defaults(func=cmd_repair_eval)

    p = sub.add_parser("report", help="per-scope ingredient cover distribution")
    p.add_argument("--input", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("lex", help="dump identifier occurrences as JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--language", choices=lexing.LANGUAGES, required=True)
    p.set_defaults(func=cmd_lex)
    return parser


def _merge_config(argv: list[str]) -> list[str]:
    """Expand --config FILE into flags placed right after the subcommand, so
    explicit command-line flags still win (argparse keeps the last value)."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise DataError("--config requires a file path")
    with open(argv[i + 1], encoding="utf-8") as fh:
        config = json.load(fh)
    rest = argv[:i] + argv[i + 2 :]
    flags: list[str] = []
    for key, value in config.items():
        flag = "--" + str(key).replace("_", "-")
        if isinstance(value, bool):
            if value:
                flags.append(flag)
        elif isinstance(value, list):
            flags += [flag, ",".join(str(v) for v in value)]
        else:
            flags += [flag, str(value)]
    for j, token in enumerate(rest):
        if not token.startswith("-"):
            return rest[: j + 1] + flags + rest[j + 1 :]
    return rest + flags


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_merge_config(argv))
        return args.func(args)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EndpointError as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        return EXIT_ENDPOINT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
