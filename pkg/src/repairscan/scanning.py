"""Scanner-sample generation, built-in scanners, threshold application and
precision/recall/F1 evaluation.

A scanner sample is `prefix <SCAN> chunk`: the marked bug with local context,
a divider token, and one chunk of the buggy file. Each identifier occurrence
in the chunk carries a boolean label (positive iff its name is in the truth
set for the variant). Per-bug predictions are the set union of thresholded
per-chunk results.
"""

from __future__ import annotations

import hashlib
import logging
import math
import random
from dataclasses import dataclass

from . import lexing
from .corpus import (
    DEFAULT_AFTER,
    DEFAULT_BEFORE,
    BugSample,
    line_count,
    local_context,
    source_lines,
)
from .errors import DataError, EndpointError
from .ingredients import COMMON_MIN_COUNT, IngredientSets, ingredient_sets

log = logging.getLogger(__name__)

SCAN_DIVIDER = "<SCAN>"

VARIANT_ALL = "all"
VARIANT_OOW = "oow"
VARIANTS = (VARIANT_ALL, VARIANT_OOW)

OVERLAP_FRACTION = 0.3

SCANNER_ORACLE = "oracle"
SCANNER_NAIVE_RANDOM = "naive_random"
SCANNER_LEXICAL_SIMILARITY = "lexical_similarity"
SCANNER_FREQUENCY_PRIOR = "frequency_prior"
SCANNER_EXTERNAL = "external"
SCANNER_KINDS = (
    SCANNER_ORACLE,
    SCANNER_NAIVE_RANDOM,
    SCANNER_LEXICAL_SIMILARITY,
    SCANNER_FREQUENCY_PRIOR,
    SCANNER_EXTERNAL,
)

F1_ALPHA = 0.5


@dataclass(frozen=True)
class LabeledOccurrence:
    name: str
    byte_offset: int  # relative to scan_text
    positive: bool


@dataclass(frozen=True)
class ScanSample:
    bug_id: str
    prefix_text: str
    scan_text: str
    labels: tuple[LabeledOccurrence, ...]
    variant: str
    start_line: int
    end_line: int
    language: str = lexing.PYTHON

    def has_positive(self) -> bool:
        return any(o.positive for o in self.labels)

    def to_record(self) -> dict:
        return {
            "bug_id": self.bug_id,
            "prefix": self.prefix_text,
            "scan": self.scan_text,
            "labels": [
                {"name": o.name, "byte_offset": o.byte_offset, "positive": o.positive}
                for o in self.labels
            ],
            "variant": self.variant,
        }


@dataclass(frozen=True)
class ScannerPrediction:
    """Per-name max score over all occurrences across all chunks of one bug."""

    bug_id: str
    scores: dict[str, float]

    def names_at(self, threshold: float) -> set[str]:
        return {name for name, s in self.scores.items() if s >= threshold}


@dataclass(frozen=True)
class ScannerMetrics:
    precision: float
    recall: float
    f1: float
    alpha: float = F1_ALPHA


@dataclass
class ScannerSpec:
    """A deterministic scanner configuration.

    Built-in kinds stand in for a trained model at desk scale; `external`
    speaks the wire protocol to a real one.
    """

    kind: str
    seed: int = 0
    similarity_floor: float = 0.0
    endpoint: str | None = None
    freq_table: dict | None = None

    def __post_init__(self) -> None:
        if self.kind not in SCANNER_KINDS:
            raise DataError(f"unknown scanner kind: {self.kind!r}")


@dataclass
class PreparedBug:
    """Everything a scanner run needs for one bug."""

    bug_id: str
    samples: list[ScanSample]
    truth: frozenset[str]
    sets: IngredientSets


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    n_bugs: int
    precision: float
    recall: float
    f1: float
    skipped_empty_truth: int = 0
    skipped_no_samples: int = 0
    failed: int = 0


# --------------------------------------------------------------------------
# Chunking
# --------------------------------------------------------------------------

def chunk_line_ranges(n_lines: int, chunk_size: int, variant: str) -> list[tuple[int, int]]:
    """1-based inclusive chunk ranges covering lines 1..n_lines.

    `all` tiles the file with disjoint consecutive chunks; `oow` strides by
    ceil(0.7 * chunk_size) so adjacent chunks overlap by floor(0.3 * size)
    lines. The final chunk is clipped, never padded.
    """
    if n_lines <= 0:
        return []
    if chunk_size < 1:
        raise DataError("chunk size must be at least 1")
    if variant not in VARIANTS:
        raise DataError(f"unknown variant: {variant!r}")
    if chunk_size >= n_lines:
        return [(1, n_lines)]
    out = []
    if variant == VARIANT_ALL:
        start = 1
        while start <= n_lines:
            out.append((start, min(start + chunk_size - 1, n_lines)))
            start += chunk_size
        return out
    stride = math.ceil((1 - OVERLAP_FRACTION) * chunk_size)
    start = 1
    while True:
        end = min(start + chunk_size - 1, n_lines)
        out.append((start, end))
        if end >= n_lines:
            return out
        start += stride


def _chunk_size_for_budget(lines: list[str], remainder: int) -> int:
    """Largest k such that every window of k consecutive lines fits the byte
    remainder (newlines included). At least 1, even for oversized lines."""
    sizes = [len(l.encode("utf-8")) if not l.isascii() else len(l) for l in lines]
    n = len(sizes)

    def fits(k: int) -> bool:
        total = sum(sizes[:k]) + (k - 1)
        if total > remainder:
            return False
        for i in range(k, n):
            total += sizes[i] - sizes[i - k]
            if total > remainder:
                return False
        return True

    if not fits(1):
        return 1  # some single line exceeds the budget; emit it alone
    lo, hi = 1, n
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if fits(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo


def make_scan_samples(
    bug: BugSample,
    window_budget: int,
    variant: str,
    before: int = DEFAULT_BEFORE,
    after: int = DEFAULT_AFTER,
) -> list[ScanSample]:
    """Chunk the buggy file into scanner samples under the byte budget.

    Labels are initialised negative; apply label_samples() with the bug's
    ingredient sets to mark positives. Returns no samples when the context
    window already spans the whole file (nothing left to scan).
    """
    from .repairprep import render_marked_window  # prompt layout lives there

    if variant not in VARIANTS:
        raise DataError(f"unknown variant: {variant!r}")
    window = local_context(bug, before, after)
    n = line_count(bug.buggy_source)
    if window.start <= 1 and window.end >= n:
        return []
    prefix = render_marked_window(bug, window)
    divider = "\n" + SCAN_DIVIDER + "\n"
    prefix_bytes = len(prefix.encode("utf-8")) if not prefix.isascii() else len(prefix)
    remainder = window_budget - prefix_bytes - len(divider)
    if remainder <= 0:
        raise DataError(
            f"window budget {window_budget} too small for the rendered prefix "
            f"({prefix_bytes} bytes) of bug {bug.id}"
        )
    lines = source_lines(bug.buggy_source)
    chunk_size = _chunk_size_for_budget(lines, remainder)
    samples = []
    for start, end in chunk_line_ranges(n, chunk_size, variant):
        scan_text = "\n".join(lines[start - 1 : end])
        occurrences = lexing.lex_identifiers(scan_text, bug.language)
        labels = tuple(LabeledOccurrence(o.name, o.byte_offset, False) for o in occurrences)
        samples.append(
            ScanSample(bug.id, prefix, scan_text, labels, variant, start, end, bug.language)
        )
    return samples


# --------------------------------------------------------------------------
# Labeling and balancing
# --------------------------------------------------------------------------

def truth_names(sets: IngredientSets, variant: str) -> frozenset[str]:
    if variant == VARIANT_ALL:
        return sets.fix_all
    if variant == VARIANT_OOW:
        return sets.win_out
    raise DataError(f"unknown variant: {variant!r}")


def label_samples(samples: list[ScanSample], sets: IngredientSets) -> list[ScanSample]:
    """Mark occurrences positive iff their name is in the variant's truth set."""
    variants = {s.variant for s in samples}
    if len(variants) > 1:
        raise DataError(f"samples mix variants: {sorted(variants)}")
    out = []
    for sample in samples:
        if sample.bug_id != sets.bug_id:
            raise DataError(
                f"sample bug {sample.bug_id!r} does not match sets for {sets.bug_id!r}"
            )
        truth = truth_names(sets, sample.variant)
        labels = tuple(
            LabeledOccurrence(o.name, o.byte_offset, o.name in truth) for o in sample.labels
        )
        out.append(
            ScanSample(
                sample.bug_id, sample.prefix_text, sample.scan_text,
                labels, sample.variant, sample.start_line, sample.end_line,
                sample.language,
            )
        )
    return out


def undersample(samples: list[ScanSample], seed: int) -> list[ScanSample]:
    """Balance positive-bearing and negative-only samples 1:1.

    Keeps every positive-bearing sample; uniformly subsamples the rest down
    to the positive count. Input order is preserved among survivors.
    """
    positives = [i for i, s in enumerate(samples) if s.has_positive()]
    negatives = [i for i, s in enumerate(samples) if not s.has_positive()]
    if len(negatives) > len(positives):
        rng = random.Random(seed)
        negatives = sorted(rng.sample(negatives, len(positives)))
    keep = sorted(positives + negatives)
    return [samples[i] for i in keep]


# --------------------------------------------------------------------------
# Scanners
# --------------------------------------------------------------------------

def _uniform_hash_score(seed: int, bug_id: str, name: str) -> float:
    digest = hashlib.blake2b(
        f"{seed}|{bug_id}|{name}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") / 2**64


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def name_similarity(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def _strip_markers(text: str) -> str:
    from .repairprep import BUG_END, BUG_START

    return text.replace(BUG_START, " ").replace(BUG_END, " ")


def score_samples(spec: ScannerSpec, samples: list[ScanSample]) -> ScannerPrediction:
    """Score every identifier of a bug's samples; per-name max across chunks."""
    if not samples:
        raise DataError("cannot score an empty sample list")
    bug_ids = {s.bug_id for s in samples}
    if len(bug_ids) != 1:
        raise DataError(f"samples span multiple bugs: {sorted(bug_ids)}")
    bug_id = samples[0].bug_id

    scores: dict[str, float] = {}

    def bump(name: str, score: float) -> None:
        score = min(1.0, max(0.0, score))
        if score > scores.get(name, -1.0):
            scores[name] = score

    if spec.kind == SCANNER_EXTERNAL:
        from .wire import open_endpoint, scan_request

        if not spec.endpoint:
            raise DataError("external scanner needs an endpoint")
        with open_endpoint(spec.endpoint) as endpoint:
            for idx, sample in enumerate(samples):
                for name, score in scan_request(endpoint, sample, f"{bug_id}#{idx}"):
                    bump(name, score)
        return ScannerPrediction(bug_id, scores)

    reference: set[str] | None = None
    for sample in samples:
        if spec.kind == SCANNER_ORACLE:
            for occ in sample.labels:
                bump(occ.name, 1.0 if occ.positive else 0.0)
        elif spec.kind == SCANNER_NAIVE_RANDOM:
            for occ in sample.labels:
                bump(occ.name, _uniform_hash_score(spec.seed, bug_id, occ.name))
        elif spec.kind == SCANNER_LEXICAL_SIMILARITY:
            if reference is None:
                reference = {
                    o.name
                    for o in lexing.lex_identifiers(
                        _strip_markers(sample.prefix_text), sample.language
                    )
                }
            for occ in sample.labels:
                if occ.name in scores:
                    continue
                best = max((name_similarity(occ.name, ref) for ref in reference), default=0.0)
                bump(occ.name, best if best >= spec.similarity_floor else 0.0)
        elif spec.kind == SCANNER_FREQUENCY_PRIOR:
            table = spec.freq_table or {}
            for occ in sample.labels:
                entry = table.get(occ.name)
                count = getattr(entry, "count", entry) or 0
                bump(occ.name, min(count / COMMON_MIN_COUNT, 1.0))
        else:
            raise DataError(f"unknown scanner kind: {spec.kind!r}")
    return ScannerPrediction(bug_id, scores)


def run_scanner(spec: ScannerSpec, samples: list[ScanSample], threshold: float) -> set[str]:
    """Names whose score clears the threshold, unioned across all chunks."""
    if not 0.0 <= threshold <= 1.0:
        raise DataError(f"threshold {threshold} outside [0, 1]")
    return score_samples(spec, samples).names_at(threshold)


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------

def scanner_metrics(predicted: set[str], truth: set[str]) -> ScannerMetrics:
    """Set precision/recall and the alpha-weighted harmonic F-score."""
    if not truth:
        raise DataError("scanner metrics are undefined for an empty truth set")
    hits = len(predicted & truth)
    precision = hits / len(predicted) if predicted else 0.0
    recall = hits / len(truth)
    if precision > 0 and recall > 0:
        f1 = 1.0 / (F1_ALPHA / precision + (1 - F1_ALPHA) / recall)
    else:
        f1 = 0.0
    return ScannerMetrics(precision, recall, f1)


def prepare_scan_bug(
    bug: BugSample,
    window_budget: int,
    variant: str,
    before: int = DEFAULT_BEFORE,
    after: int = DEFAULT_AFTER,
) -> PreparedBug:
    """Generate labeled samples plus the truth set for one bug."""
    window = local_context(bug, before, after)
    sets = ingredient_sets(bug, window)
    samples = make_scan_samples(bug, window_budget, variant, before, after)
    samples = label_samples(samples, sets)
    return PreparedBug(bug.id, samples, truth_names(sets, variant), sets)


def threshold_sweep(
    spec: ScannerSpec,
    prepared: list[PreparedBug],
    thresholds: list[float],
) -> list[SweepPoint]:
    """Macro-averaged metrics per threshold over bugs with nonempty truth.

    Bugs with no scan samples, and bugs whose external scan failed, are
    excluded from the averages and counted in the sweep point.
    """
    predictions: list[tuple[PreparedBug, ScannerPrediction]] = []
    empty_truth = no_samples = failed = 0
    for item in prepared:
        if not item.truth:
            empty_truth += 1
            continue
        if not item.samples:
            no_samples += 1
            continue
        try:
            predictions.append((item, score_samples(spec, item.samples)))
        except EndpointError as exc:
            log.warning("scanner failed on bug %s: %s", item.bug_id, exc)
            failed += 1
    out = []
    for t in thresholds:
        if not 0.0 <= t <= 1.0:
            raise DataError(f"threshold {t} outside [0, 1]")
        ms = [
            scanner_metrics(pred.names_at(t), set(item.truth))
            for item, pred in predictions
        ]
        n = len(ms)
        out.append(
            SweepPoint(
                threshold=t,
                n_bugs=n,
                precision=sum(m.precision for m in ms) / n if n else 0.0,
                recall=sum(m.recall for m in ms) / n if n else 0.0,
                f1=sum(m.f1 for m in ms) / n if n else 0.0,
                skipped_empty_truth=empty_truth,
                skipped_no_samples=no_samples,
                failed=failed,
            )
        )
    return out
