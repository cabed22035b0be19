"""Fix-ingredient set algebra, cover ratios, signed distances and
training-set frequency classes.

A fix ingredient is an identifier that appears in the fixed hunk lines but
not the corresponding buggy lines. Everything below is name-keyed set
algebra over the scopes window / method / file / project.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from . import lexing
from .corpus import BugSample, ContextWindow, source_lines
from .errors import DataError

SCOPE_WINDOW = "window"
SCOPE_METHOD = "method"
SCOPE_FILE = "file"
SCOPE_PROJECT = "project"
SCOPES = (SCOPE_WINDOW, SCOPE_METHOD, SCOPE_FILE, SCOPE_PROJECT)

RARE_MAX_COUNT = 50
COMMON_MIN_COUNT = 500

UNCOVERED_PATCH_INTERNAL = "patch_internal"
UNCOVERED_EXTERNAL_UNKNOWN = "external_unknown"


@dataclass(frozen=True)
class IngredientSets:
    """The nine identifier sets for one bug plus derived in/out partitions.

    `has_method` is False when no function/method encloses the first hunk;
    `project_scope` is False when no project files were provided and the
    project sets silently fall back to file level.
    """

    bug_id: str
    bug_ids: frozenset[str]
    fix_ids: frozenset[str]
    win_ids: frozenset[str]
    mth_ids: frozenset[str]
    file_ids: frozenset[str]
    proj_ids: frozenset[str]
    fix_all: frozenset[str]
    win_in: frozenset[str]
    win_out: frozenset[str]
    mth_in: frozenset[str]
    mth_out: frozenset[str]
    file_in: frozenset[str]
    file_out: frozenset[str]
    proj_in: frozenset[str]
    proj_out: frozenset[str]
    has_method: bool
    project_scope: bool

    def scope_in(self, scope: str) -> frozenset[str]:
        return {
            SCOPE_WINDOW: self.win_in,
            SCOPE_METHOD: self.mth_in,
            SCOPE_FILE: self.file_in,
            SCOPE_PROJECT: self.proj_in,
        }[scope]

    def scope_out(self, scope: str) -> frozenset[str]:
        return {
            SCOPE_WINDOW: self.win_out,
            SCOPE_METHOD: self.mth_out,
            SCOPE_FILE: self.file_out,
            SCOPE_PROJECT: self.proj_out,
        }[scope]

    def to_record(self) -> dict:
        rec = {"bug_id": self.bug_id}
        for name in (
            "bug_ids", "fix_ids", "win_ids", "mth_ids", "file_ids", "proj_ids",
            "fix_all", "win_in", "win_out", "mth_in", "mth_out",
            "file_in", "file_out", "proj_in", "proj_out",
        ):
            rec[name] = sorted(getattr(self, name))
        rec["has_method"] = self.has_method
        rec["project_scope"] = self.project_scope
        return rec


@dataclass(frozen=True)
class IngredientDistance:
    """Signed byte distance from the hunk span to the nearest occurrence.

    Negative iff the closest occurrence starts before the hunk. Defined only
    for single-hunk bugs.
    """

    name: str
    signed_chars: int


@dataclass(frozen=True)
class FrequencyClass:
    name: str
    count: int
    label: str  # rare | mid | common


def classify_count(count: int) -> str:
    if count <= RARE_MAX_COUNT:
        return "rare"
    if count >= COMMON_MIN_COUNT:
        return "common"
    return "mid"


def _hunk_names(source: str, language: str, hunks: Iterable[tuple[int, int]]) -> frozenset[str]:
    names: set[str] = set()
    for s, e in hunks:
        names |= lexing.identifiers_in_lines(source, language, (s, e))
    return frozenset(names)


def ingredient_sets(bug: BugSample, window: ContextWindow) -> IngredientSets:
    """Compute all nine sets for one bug. Sources should be normalized first
    so that per-line identifier extraction is reliable."""
    lang = bug.language
    bug_ids = _hunk_names(bug.buggy_source, lang, bug.buggy_hunks)
    fix_ids = _hunk_names(bug.fixed_source, lang, bug.fixed_hunks)
    win_ids = frozenset(
        lexing.identifiers_in_lines(bug.buggy_source, lang, (window.start, window.end))
    )
    mth_range = lexing.enclosing_callable(bug.buggy_source, lang, bug.buggy_hunks[0][0])
    has_method = mth_range is not None
    mth_ids = (
        frozenset(lexing.identifiers_in_lines(bug.buggy_source, lang, mth_range))
        if mth_range
        else frozenset()
    )
    file_ids = frozenset(o.name for o in lexing.lex_identifiers(bug.buggy_source, lang))
    project_scope = bug.project_files is not None
    proj_ids = set(file_ids)
    if project_scope:
        for _, text in bug.project_files:
            proj_ids |= {o.name for o in lexing.lex_identifiers(text, lang)}
    proj_ids = frozenset(proj_ids)

    fix_all = fix_ids - bug_ids
    return IngredientSets(
        bug_id=bug.id,
        bug_ids=bug_ids,
        fix_ids=fix_ids,
        win_ids=win_ids,
        mth_ids=mth_ids,
        file_ids=file_ids,
        proj_ids=proj_ids,
        fix_all=fix_all,
        win_in=fix_all & win_ids,
        win_out=fix_all - win_ids,
        mth_in=fix_all & mth_ids,
        mth_out=fix_all - mth_ids,
        file_in=fix_all & file_ids,
        file_out=fix_all - file_ids,
        proj_in=fix_all & proj_ids,
        proj_out=fix_all - proj_ids,
        has_method=has_method,
        project_scope=project_scope,
    )


def cover(sets: IngredientSets, scope: str) -> float | None:
    """Fraction of fix ingredients present at the scope.

    None when the bug needs no ingredients, and for method scope when there
    is no enclosing callable.
    """
    if scope not in SCOPES:
        raise DataError(f"unknown scope: {scope!r}")
    if not sets.fix_all:
        return None
    if scope == SCOPE_METHOD and not sets.has_method:
        return None
    return len(sets.scope_in(scope)) / len(sets.fix_all)


# --------------------------------------------------------------------------
# Ingredient distance
# --------------------------------------------------------------------------

def _byte_length(text: str) -> int:
    return len(text) if text.isascii() else len(text.encode("utf-8"))


def _hunk_byte_span(source: str, hunk: tuple[int, int]) -> tuple[int, int]:
    """(start, end) byte offsets of the hunk's lines; end excludes the
    trailing newline. An insertion hunk collapses to a zero-width point."""
    lines = source_lines(source)
    s, e = hunk
    start = _byte_length("\n".join(lines[: s - 1])) + (1 if s > 1 else 0)
    if e < s:
        return start, start
    end = _byte_length("\n".join(lines[:e]))
    return start, end


def ingredient_distance(bug: BugSample, name: str) -> IngredientDistance:
    """Signed byte distance from the single hunk to the nearest occurrence of
    `name` outside it. Before-hunk occurrences are negative, after positive;
    ties at equal magnitude resolve to the negative side."""
    if len(bug.buggy_hunks) != 1:
        raise DataError("ingredient distance is only defined for single-hunk bugs")
    hunk = bug.buggy_hunks[0]
    hunk_start, hunk_end = _hunk_byte_span(bug.buggy_source, hunk)
    name_bytes = _byte_length(name)
    best: tuple[tuple[int, int], int] | None = None
    for occ in lexing.lex_identifiers(bug.buggy_source, bug.language):
        if occ.name != name or hunk[0] <= occ.line <= hunk[1]:
            continue
        if occ.line < hunk[0]:
            d = (occ.byte_offset + name_bytes) - hunk_start
        else:
            d = occ.byte_offset - hunk_end
        key = (abs(d), 0 if d < 0 else 1)
        if best is None or key < best[0]:
            best = (key, d)
    if best is None:
        raise DataError(f"no in-file occurrence of {name!r} outside the hunk")
    return IngredientDistance(name, best[1])


def single_ingredient_distance(bug: BugSample, sets: IngredientSets) -> IngredientDistance | None:
    """Distance for bugs with exactly one hunk and one in-file ingredient."""
    if len(bug.buggy_hunks) != 1 or len(sets.fix_all) != 1:
        return None
    (name,) = sets.fix_all
    if name not in sets.file_in:
        return None
    return ingredient_distance(bug, name)


# --------------------------------------------------------------------------
# Frequency and uncovered classification
# --------------------------------------------------------------------------

def frequency_table(train_bugs: Iterable[BugSample]) -> dict[str, FrequencyClass]:
    """Occurrence counts of each identifier across all fixed-hunk lines of the
    training split. Counts are over occurrences (multiset), not per bug."""
    counts: Counter[str] = Counter()
    for bug in train_bugs:
        for s, e in bug.fixed_hunks:
            if e < s:
                continue
            for occ in lexing.lex_identifiers(bug.fixed_source, bug.language):
                if s <= occ.line <= e:
                    counts[occ.name] += 1
    return {name: FrequencyClass(name, c, classify_count(c)) for name, c in counts.items()}


def classify_uncovered(bug: BugSample, sets: IngredientSets) -> dict[str, str]:
    """Classify ingredients missing from the widest available scope.

    `patch_internal` marks names the patch itself declares (new variables,
    loop targets, parameters) whose occurrences all sit inside the fixed
    hunks; everything else is `external_unknown` (stdlib, third-party,
    dynamic). Distinguishing use from declaration is what separates a false
    ingredient from a genuinely external one.
    """
    targets = sets.proj_out if sets.project_scope else sets.file_out
    if not targets:
        return {}
    bound: set[str] = set()
    for s, e in bug.fixed_hunks:
        if e >= s:
            bound |= lexing.binding_names_in_lines(bug.fixed_source, bug.language, (s, e))
    occurrences = lexing.lex_identifiers(bug.fixed_source, bug.language)
    out: dict[str, str] = {}
    for name in targets:
        lines = [o.line for o in occurrences if o.name == name]
        inside = [ln for ln in lines if any(s <= ln <= e for s, e in bug.fixed_hunks)]
        if lines and len(inside) == len(lines) and name in bound:
            out[name] = UNCOVERED_PATCH_INTERNAL
        else:
            out[name] = UNCOVERED_EXTERNAL_UNKNOWN
    return out
