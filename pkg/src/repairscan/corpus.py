"""Bug corpus ingestion, validation, deduplication, splitting and windowing.

The on-disk corpus format is UTF-8 line-delimited JSON, one record per line
with fields: id, language, buggy_source, fixed_source, buggy_hunks,
fixed_hunks, fix_commit, repo, path, project_files. Hunks are 1-based
inclusive [start, end] pairs; an empty hunk is encoded [k, k-1] and marks an
insertion point before line k.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from . import lexing
from .errors import DataError

DEFAULT_BEFORE = 18
DEFAULT_AFTER = 12

# Canonical split names used throughout the pipeline.
SPLIT_ANALYSIS = "analysis"
SPLIT_TRAIN_SCANNER = "train_scanner"
SPLIT_EVAL_SCANNER = "eval_scanner"
SPLIT_TRAIN_REPAIR = "train_repair"
SPLIT_EVAL_REPAIR = "eval_repair"

RECORD_FIELDS = (
    "id",
    "language",
    "buggy_source",
    "fixed_source",
    "buggy_hunks",
    "fixed_hunks",
    "fix_commit",
    "repo",
    "path",
    "project_files",
)

Hunk = tuple[int, int]


def source_lines(source: str) -> list[str]:
    """Lines of a source text. `"\\n".join(source_lines(s)) == s` always holds."""
    return source.split("\n")


def line_count(source: str) -> int:
    return source.count("\n") + 1


@dataclass
class BugSample:
    """One buggy/fixed file pair with hunk spans and commit metadata."""

    id: str
    language: str
    buggy_source: str
    fixed_source: str
    buggy_hunks: tuple[Hunk, ...]
    fixed_hunks: tuple[Hunk, ...]
    fix_commit: str | None = None
    repo: str | None = None
    path: str | None = None
    project_files: tuple[tuple[str, str], ...] | None = None

    def to_record(self) -> dict:
        rec = {
            "id": self.id,
            "language": self.language,
            "buggy_source": self.buggy_source,
            "fixed_source": self.fixed_source,
            "buggy_hunks": [list(h) for h in self.buggy_hunks],
            "fixed_hunks": [list(h) for h in self.fixed_hunks],
            "fix_commit": self.fix_commit,
            "repo": self.repo,
            "path": self.path,
            "project_files": None,
        }
        if self.project_files is not None:
            rec["project_files"] = [[p, t] for p, t in self.project_files]
        return rec


@dataclass(frozen=True)
class ContextWindow:
    """Contiguous 1-based line range around a bug's hunks, clipped to the file."""

    start: int
    end: int

    def contains_line(self, line: int) -> bool:
        return self.start <= line <= self.end


@dataclass(frozen=True)
class CorpusSplit:
    name: str
    ids: tuple[str, ...]


@dataclass(frozen=True)
class Reject:
    line_no: int
    reason: str


@dataclass
class BugCorpus:
    """Validated, immutable-after-ingest collection of bug samples."""

    samples: tuple[BugSample, ...]
    rejects: tuple[Reject, ...] = ()

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[BugSample]:
        return iter(self.samples)

    def by_id(self) -> dict[str, BugSample]:
        return {s.id: s for s in self.samples}


# --------------------------------------------------------------------------
# Ingestion
# --------------------------------------------------------------------------

def _parse_hunks(raw: object) -> tuple[Hunk, ...]:
    if not isinstance(raw, list):
        raise ValueError
    out = []
    for pair in raw:
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ValueError
        s, e = pair
        if not (isinstance(s, int) and isinstance(e, int)):
            raise ValueError
        out.append((s, e))
    return tuple(out)


def sample_from_record(record: dict) -> BugSample:
    """Build a BugSample from a decoded corpus record. Raises DataError."""
    for key in ("id", "language", "buggy_source", "fixed_source", "buggy_hunks", "fixed_hunks"):
        if key not in record:
            raise DataError(f"missing field: {key}")
    if not isinstance(record["id"], str) or not record["id"]:
        raise DataError("empty id")
    if record["language"] not in lexing.LANGUAGES:
        raise DataError(f"unknown language: {record['language']!r}")
    for key in ("buggy_source", "fixed_source"):
        if not isinstance(record[key], str):
            raise DataError(f"field {key} must be a string")
    try:
        buggy_hunks = _parse_hunks(record["buggy_hunks"])
        fixed_hunks = _parse_hunks(record["fixed_hunks"])
    except ValueError:
        raise DataError("bad hunk encoding") from None
    project_files = record.get("project_files")
    if project_files is not None:
        try:
            project_files = tuple((str(p), str(t)) for p, t in project_files)
        except (TypeError, ValueError):
            raise DataError("bad project_files encoding") from None
    sample = BugSample(
        id=record["id"],
        language=record["language"],
        buggy_source=record["buggy_source"],
        fixed_source=record["fixed_source"],
        buggy_hunks=buggy_hunks,
        fixed_hunks=fixed_hunks,
        fix_commit=record.get("fix_commit"),
        repo=record.get("repo"),
        path=record.get("path"),
        project_files=project_files,
    )
    validate_sample(sample)
    return sample


def _check_hunks(hunks: tuple[Hunk, ...], n_lines: int) -> None:
    for s, e in hunks:
        if e == s - 1:  # insertion point before line s
            if not (1 <= s <= n_lines + 1):
                raise DataError("hunk out of range")
        elif not (1 <= s <= e <= n_lines):
            raise DataError("hunk out of range")
    for (s1, e1), (s2, _) in zip(hunks, hunks[1:]):
        if s2 <= s1:
            raise DataError("hunks not sorted")
        if s2 <= max(e1, s1 - 1):
            raise DataError("overlapping hunks")


def validate_sample(sample: BugSample) -> None:
    """Enforce the corpus invariants; raises DataError naming the violation."""
    if len(sample.buggy_hunks) != len(sample.fixed_hunks):
        raise DataError("hunk count mismatch")
    if not sample.buggy_hunks:
        raise DataError("no hunks")
    _check_hunks(sample.buggy_hunks, line_count(sample.buggy_source))
    _check_hunks(sample.fixed_hunks, line_count(sample.fixed_source))
    if sample.buggy_source == sample.fixed_source:
        raise DataError("no-op change")


def ingest(records: Iterable[str] | IO[str]) -> BugCorpus:
    """Read line-delimited JSON records into a validated corpus.

    Malformed records land in the rejects report with a reason instead of
    being silently dropped.
    """
    samples: list[BugSample] = []
    rejects: list[Reject] = []
    seen_ids: set[str] = set()
    for line_no, line in enumerate(records, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            rejects.append(Reject(line_no, "invalid json"))
            continue
        try:
            sample = sample_from_record(record)
        except DataError as exc:
            rejects.append(Reject(line_no, str(exc)))
            continue
        if sample.id in seen_ids:
            rejects.append(Reject(line_no, "duplicate id"))
            continue
        seen_ids.add(sample.id)
        samples.append(sample)
    return BugCorpus(tuple(samples), tuple(rejects))


# --------------------------------------------------------------------------
# Deduplication and splitting
# --------------------------------------------------------------------------

def dedup_key(sample: BugSample) -> str:
    """Fixing-commit hash; content digest of the file pair when absent."""
    if sample.fix_commit:
        return "commit:" + sample.fix_commit
    digest = hashlib.sha256()
    digest.update(sample.buggy_source.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(sample.fixed_source.encode("utf-8"))
    return "content:" + digest.hexdigest()


def dedup(corpus: BugCorpus) -> BugCorpus:
    """Keep the first sample per dedup key, in stable input order. Idempotent."""
    seen: set[str] = set()
    kept = []
    for sample in corpus.samples:
        key = dedup_key(sample)
        if key in seen:
            continue
        seen.add(key)
        kept.append(sample)
    return BugCorpus(tuple(kept), corpus.rejects)


def split(corpus: BugCorpus, fractions: dict[str, float], seed: int) -> list[CorpusSplit]:
    """Deterministic disjoint splits; fractions must sum to at most 1.

    Disjointness is by construction, which also guarantees that scanner and
    repair training splits never share ids.
    """
    total = sum(fractions.values())
    if total > 1 + 1e-9:
        raise DataError(f"split fractions sum to {total:.4f} > 1")
    if any(f < 0 for f in fractions.values()):
        raise DataError("negative split fraction")
    ids = [s.id for s in corpus.samples]
    rng = random.Random(seed)
    rng.shuffle(ids)
    n = len(ids)
    out = []
    cum = 0.0
    start = 0
    for name, frac in fractions.items():
        cum += frac
        end = int(cum * n + 1e-9)
        out.append(CorpusSplit(name, tuple(ids[start:end])))
        start = end
    return out


def subset(corpus: BugCorpus, ids: Iterable[str]) -> BugCorpus:
    wanted = set(ids)
    return BugCorpus(tuple(s for s in corpus.samples if s.id in wanted), ())


# --------------------------------------------------------------------------
# Context windows
# --------------------------------------------------------------------------

def local_context(
    bug: BugSample, before: int = DEFAULT_BEFORE, after: int = DEFAULT_AFTER
) -> ContextWindow:
    """Window spanning `before` lines ahead of the first hunk through `after`
    lines past the last hunk, clipped at file boundaries (never padded)."""
    if not bug.buggy_hunks:
        raise DataError("bug has no hunks")
    n = line_count(bug.buggy_source)
    first = bug.buggy_hunks[0][0]
    last = bug.buggy_hunks[-1][1]
    start = max(1, first - before)
    end = min(n, last + after)
    if end < start:  # pure insertion at the top of a tiny file
        end = start
    return ContextWindow(start, end)


# --------------------------------------------------------------------------
# Multi-line literal splitting
# --------------------------------------------------------------------------

def normalize_multiline(source: str, language: str) -> str:
    """Rewrite multi-line strings, text blocks and block comments so that
    every line of the output is independently lexable.

    The transformation is line-preserving: output line i corresponds to input
    line i, so hunk ranges stay valid. Lines without multi-line literals are
    byte-identical. Literal payloads are re-escaped per line and joined with
    the language's concatenation idiom (backslash continuation for Python,
    `+` for Java text blocks); string prefixes are dropped in the process.
    """
    segments = lexing.scan_segments(source, language, strict=True)
    spanning = [s for s in segments if s.kind != lexing.CODE and s.spans_newline(source)]
    if not spanning:
        return source

    starts = lexing.line_starts(source)
    lines = source_lines(source)
    n_lines = len(lines)

    # For every line touched by a spanning segment, rebuild the line from
    # verbatim code pieces and re-rendered literal pieces.
    by_line: dict[int, list[lexing.Segment]] = {}
    for seg in spanning:
        first = lexing.line_of_offset(starts, seg.start)
        last = lexing.line_of_offset(starts, seg.end - 1)
        for ln in range(first, last + 1):
            by_line.setdefault(ln, []).append(seg)

    out = []
    for ln in range(1, n_lines + 1):
        if ln not in by_line:
            out.append(lines[ln - 1])
            continue
        out.append(_rebuild_line(source, language, starts, ln, by_line[ln]))
    return "\n".join(out)


def _line_bounds(starts: list[int], source: str, ln: int) -> tuple[int, int]:
    lo = starts[ln - 1]
    hi = starts[ln] - 1 if ln < len(starts) else len(source)
    return lo, hi


def _rebuild_line(
    source: str,
    language: str,
    starts: list[int],
    ln: int,
    segs: list[lexing.Segment],
) -> str:
    lo, hi = _line_bounds(starts, source, ln)
    pieces = []
    cursor = lo
    crossing: lexing.Segment | None = None
    for seg in sorted(segs, key=lambda s: s.start):
        piece_start = max(seg.start, lo)
        piece_end = min(seg.end, hi)
        if piece_start > cursor:
            pieces.append(source[cursor:piece_start])
        content_lo = max(seg.content_start, lo)
        content_hi = min(seg.content_end, hi)
        content = source[content_lo:content_hi] if content_hi > content_lo else ""
        if piece_start == lo and seg.start < lo:
            # Continuation lines: keep leading whitespace outside the literal
            # so indentation-based structure stays intact.
            ws_len = len(content) - len(content.lstrip(" \t"))
            pieces.append(content[:ws_len])
            content = content[ws_len:]
        pieces.append(_render_piece(language, seg, content))
        if seg.end > hi:
            crossing = seg
        cursor = piece_end
    if cursor < hi:
        pieces.append(source[cursor:hi])
    rebuilt = "".join(pieces)
    if crossing is not None and crossing.kind == lexing.STRING:
        rebuilt += " \\" if language == lexing.PYTHON else " +"
    return rebuilt


def _render_piece(language: str, seg: lexing.Segment, content: str) -> str:
    if seg.kind == lexing.COMMENT:
        # Java block comments: payload can never contain the closing marker.
        return "/*" + content + "*/"
    quote = seg.quote
    if content.endswith("\\"):
        # Strip a splicing backslash; it was only joining physical lines.
        trailing = len(content) - len(content.rstrip("\\"))
        if trailing % 2 == 1:
            content = content[:-1]
    escaped = content.replace("\\", "\\\\").replace(quote, "\\" + quote)
    escaped = escaped.replace("\r", "\\r").replace("\t", "\\t")
    return quote + escaped + quote


def normalize_bug(bug: BugSample) -> BugSample:
    """Normalize both file versions (strictly) and project files (leniently)."""
    buggy = normalize_multiline(bug.buggy_source, bug.language)
    fixed = normalize_multiline(bug.fixed_source, bug.language)
    project_files = bug.project_files
    if project_files is not None:
        normed = []
        for path, text in project_files:
            try:
                normed.append((path, normalize_multiline(text, bug.language)))
            except DataError:
                normed.append((path, text))
        project_files = tuple(normed)
    return BugSample(
        id=bug.id,
        language=bug.language,
        buggy_source=buggy,
        fixed_source=fixed,
        buggy_hunks=bug.buggy_hunks,
        fixed_hunks=bug.fixed_hunks,
        fix_commit=bug.fix_commit,
        repo=bug.repo,
        path=bug.path,
        project_files=project_files,
    )
