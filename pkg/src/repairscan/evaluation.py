"""Exact-match scoring of repair candidates and the breakdown reports:
success vs ingredient count, vs signed distance, vs training-set frequency,
plus the per-scope cover distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DataError
from .ingredients import FrequencyClass, IngredientSets, cover, SCOPES

NORMALIZATION_STRICT = "strict"
NORMALIZATION_LINE_TRIMMED = "line_trimmed"

FILTER_ALL_IN_WINDOW = "all_in_window"
FILTER_ANY_OUT_OF_WINDOW = "any_out_of_window"

Z_95 = 1.959963984540054


@dataclass(frozen=True)
class RepairOutcome:
    bug_id: str
    candidates: tuple[str, ...]
    success: bool
    first_hit_rank: int | None  # 1-based


@dataclass(frozen=True)
class Bin:
    lo: float
    hi: float
    n: int
    rate: float | None
    ci_lo: float | None
    ci_hi: float | None
    label: str = ""


@dataclass(frozen=True)
class BreakdownReport:
    dimension: str
    bins: tuple[Bin, ...]
    notes: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)

    def to_rows(self) -> list[dict]:
        return [
            {
                "dimension": self.dimension,
                "lo": b.lo,
                "hi": b.hi,
                "n": b.n,
                "rate": b.rate,
                "ci_lo": b.ci_lo,
                "ci_hi": b.ci_hi,
                "label": b.label,
            }
            for b in self.bins
        ]


# --------------------------------------------------------------------------
# Exact match
# --------------------------------------------------------------------------

def _trim_lines(text: str) -> str:
    return "\n".join(line.rstrip() for line in text.split("\n"))


def exact_match(
    bug_id: str,
    candidates: list[str] | tuple[str, ...],
    target: str,
    normalization: str = NORMALIZATION_STRICT,
    k: int | None = None,
) -> RepairOutcome:
    """Score k candidates against the learning target.

    strict compares bytes; line_trimmed strips trailing whitespace per line
    first. Success means some candidate within the first k matches.
    """
    if normalization not in (NORMALIZATION_STRICT, NORMALIZATION_LINE_TRIMMED):
        raise DataError(f"unknown normalization: {normalization!r}")
    pool = tuple(candidates if k is None else candidates[:k])
    if not pool:
        raise DataError("exact match needs at least one candidate")
    want = target if normalization == NORMALIZATION_STRICT else _trim_lines(target)
    rank = None
    for i, cand in enumerate(pool, start=1):
        got = cand if normalization == NORMALIZATION_STRICT else _trim_lines(cand)
        if got == want:
            rank = i
            break
    return RepairOutcome(bug_id, pool, rank is not None, rank)


# --------------------------------------------------------------------------
# Confidence intervals
# --------------------------------------------------------------------------

def _ci_normal(successes: int, n: int) -> tuple[float, float]:
    p = successes / n
    half = Z_95 * math.sqrt(p * (1 - p) / n)
    return max(0.0, p - half), min(1.0, p + half)


def _binom_cdf(k: int, n: int, p: float) -> float:
    total = 0.0
    for i in range(k + 1):
        total += math.comb(n, i) * p**i * (1 - p) ** (n - i)
    return total


def _ci_exact(successes: int, n: int) -> tuple[float, float]:
    """Clopper-Pearson via bisection on the binomial CDF."""

    def bisect(check, lo: float, hi: float) -> float:
        for _ in range(60):
            mid = (lo + hi) / 2
            if check(mid):
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2

    if successes == 0:
        lower = 0.0
    else:
        lower = bisect(lambda p: 1 - _binom_cdf(successes - 1, n, p) <= 0.025, 0.0, 1.0)
    if successes == n:
        upper = 1.0
    else:
        upper = 1.0 - bisect(lambda p: _binom_cdf(successes, n, 1 - p) <= 0.025, 0.0, 1.0)
    return lower, upper


def _ci(successes: int, n: int, method: str) -> tuple[float, float]:
    if n == 0:
        return 0.0, 0.0
    if method == "exact":
        return _ci_exact(successes, n)
    return _ci_normal(successes, n)


def _make_bin(outcomes: list[RepairOutcome], lo: float, hi: float, label: str, ci: str) -> Bin:
    n = len(outcomes)
    if n == 0:
        return Bin(lo, hi, 0, None, None, None, label)
    wins = sum(1 for o in outcomes if o.success)
    ci_lo, ci_hi = _ci(wins, n, ci)
    return Bin(lo, hi, n, wins / n, ci_lo, ci_hi, label)


# --------------------------------------------------------------------------
# Breakdown reports
# --------------------------------------------------------------------------

def success_by_ingredient_count(
    outcomes: list[RepairOutcome],
    sets_by_bug: dict[str, IngredientSets],
    window_filter: str | None = None,
    max_count: int = 5,
    ci: str = "normal",
) -> BreakdownReport:
    """Success rate binned by |fix_all|, optionally filtered on window coverage."""
    notes = []
    buckets: dict[int, list[RepairOutcome]] = {c: [] for c in range(max_count + 1)}
    for outcome in outcomes:
        sets = sets_by_bug.get(outcome.bug_id)
        if sets is None:
            notes.append(f"no ingredient sets for {outcome.bug_id}")
            continue
        if window_filter == FILTER_ALL_IN_WINDOW and sets.win_out:
            continue
        if window_filter == FILTER_ANY_OUT_OF_WINDOW and not sets.win_out:
            continue
        buckets[min(len(sets.fix_all), max_count)].append(outcome)
    bins = []
    for count in range(max_count + 1):
        label = str(count) if count < max_count else f"{count}+"
        bins.append(_make_bin(buckets[count], count, count, label, ci))
    return BreakdownReport(
        "ingredient_count",
        tuple(bins),
        tuple(notes),
        {"window_filter": window_filter},
    )


def _percentile(sorted_values: list[float], q: float) -> float:
    # Linear interpolation between order statistics.
    if not sorted_values:
        raise DataError("empty distance list")
    pos = q * (len(sorted_values) - 1)
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return sorted_values[lo]
    frac = pos - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


def success_by_distance(
    outcomes: list[RepairOutcome],
    distances: dict[str, int],
    n_bins: int = 20,
    trim: tuple[float, float] = (0.10, 0.90),
    context_sizes: list[tuple[int, int]] | None = None,
    ci: str = "normal",
) -> BreakdownReport:
    """Success rate over signed distances, trimmed to the 10th..90th
    percentiles and grouped into equal-count bins.

    Only bugs present in `distances` participate (callers restrict that map
    to single-hunk, single-ingredient bugs). `context_sizes` are optional
    (pre, post) context byte sizes whose medians land in the report meta.
    """
    notes = []
    by_id = {o.bug_id: o for o in outcomes}
    points = sorted(
        (dist, bug_id) for bug_id, dist in distances.items() if bug_id in by_id
    )
    if not points:
        return BreakdownReport("distance", (), ("no distance data",), {})
    values = [p[0] for p in points]
    lo_cut = _percentile(values, trim[0])
    hi_cut = _percentile(values, trim[1])
    kept = [(d, b) for d, b in points if lo_cut <= d <= hi_cut]
    if len(kept) < n_bins:
        notes.append(f"reduced bins from {n_bins} to {len(kept)}")
        n_bins = max(1, len(kept))
    if len(set(d for d, _ in kept)) == 1:
        notes.append("degenerate: all distances equal")
        n_bins = 1
    base, extra = divmod(len(kept), n_bins)
    bins = []
    idx = 0
    for b in range(n_bins):
        size = base + (1 if b < extra else 0)
        group = kept[idx : idx + size]
        idx += size
        group_outcomes = [by_id[bug_id] for _, bug_id in group]
        bins.append(
            _make_bin(group_outcomes, group[0][0], group[-1][0], f"bin{b}", ci)
        )
    meta: dict = {"trimmed_lo": lo_cut, "trimmed_hi": hi_cut}
    if context_sizes:
        pres = sorted(p for p, _ in context_sizes)
        posts = sorted(q for _, q in context_sizes)
        meta["median_pre_context_bytes"] = _percentile([float(x) for x in pres], 0.5)
        meta["median_post_context_bytes"] = _percentile([float(x) for x in posts], 0.5)
    return BreakdownReport("distance", tuple(bins), tuple(notes), meta)


def success_by_frequency(
    outcomes: list[RepairOutcome],
    ingredient_by_bug: dict[str, str],
    freq_table: dict[str, FrequencyClass],
    ci: str = "normal",
) -> BreakdownReport:
    """Success rate per frequency class of each bug's single ingredient.

    Names absent from the training table count as zero occurrences (rare).
    """
    groups: dict[str, list[RepairOutcome]] = {"rare": [], "mid": [], "common": []}
    for outcome in outcomes:
        name = ingredient_by_bug.get(outcome.bug_id)
        if name is None:
            continue
        entry = freq_table.get(name)
        label = entry.label if entry is not None else "rare"
        groups[label].append(outcome)
    bins = tuple(
        _make_bin(groups[label], i, i, label, ci)
        for i, label in enumerate(("rare", "mid", "common"))
    )
    return BreakdownReport("frequency_class", bins)


@dataclass(frozen=True)
class CoverReport:
    scope_means: dict[str, float | None]
    scope_counts: dict[str, int]
    no_ingredient_fraction: float
    n_total: int
    n_with_ingredients: int
    project_scope_fraction: float

    def to_rows(self) -> list[dict]:
        return [
            {
                "scope": scope,
                "mean_cover": self.scope_means[scope],
                "n": self.scope_counts[scope],
            }
            for scope in SCOPES
        ]


def cover_report(all_sets: list[IngredientSets]) -> CoverReport:
    """Mean cover per scope over bugs that need ingredients; the fraction of
    bugs needing none is reported separately."""
    n_total = len(all_sets)
    with_ingredients = [s for s in all_sets if s.fix_all]
    means: dict[str, float | None] = {}
    counts: dict[str, int] = {}
    for scope in SCOPES:
        values = [c for s in with_ingredients if (c := cover(s, scope)) is not None]
        counts[scope] = len(values)
        means[scope] = sum(values) / len(values) if values else None
    return CoverReport(
        scope_means=means,
        scope_counts=counts,
        no_ingredient_fraction=(n_total - len(with_ingredients)) / n_total if n_total else 0.0,
        n_total=n_total,
        n_with_ingredients=len(with_ingredients),
        project_scope_fraction=(
            sum(1 for s in all_sets if s.project_scope) / n_total if n_total else 0.0
        ),
    )


@dataclass(frozen=True)
class RepairSummary:
    """Success-rate columns: all bugs, bugs needing ingredients, bugs with
    out-of-window ingredients."""

    n_all: int
    rate_all: float
    n_with_ingredients: int
    rate_with_ingredients: float
    n_with_oow: int
    rate_with_oow: float
    unevaluated: tuple[str, ...] = ()

    def to_record(self) -> dict:
        return {
            "all_bugs": {"n": self.n_all, "success_rate": self.rate_all},
            "with_ingredients": {
                "n": self.n_with_ingredients,
                "success_rate": self.rate_with_ingredients,
            },
            "with_oow_ingredients": {"n": self.n_with_oow, "success_rate": self.rate_with_oow},
            "unevaluated": list(self.unevaluated),
        }


def repair_summary(
    outcomes: list[RepairOutcome],
    sets_by_bug: dict[str, IngredientSets],
    unevaluated: list[str] | tuple[str, ...] = (),
) -> RepairSummary:
    def rate(group: list[RepairOutcome]) -> float:
        return sum(1 for o in group if o.success) / len(group) if group else 0.0

    with_ing = [o for o in outcomes if sets_by_bug[o.bug_id].fix_all]
    with_oow = [o for o in outcomes if sets_by_bug[o.bug_id].win_out]
    return RepairSummary(
        n_all=len(outcomes),
        rate_all=rate(outcomes),
        n_with_ingredients=len(with_ing),
        rate_with_ingredients=rate(with_ing),
        n_with_oow=len(with_oow),
        rate_with_oow=rate(with_oow),
        unevaluated=tuple(unevaluated),
    )
