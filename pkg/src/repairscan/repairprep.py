"""Repair-model input assembly: marked bug windows, ingredient prefixes and
the six baseline input variants.

Layout of a rendered prompt:

    ing1 ing2 ... <INGRE>          (only when the ingredient list is nonempty)
    ...pre-context lines...
    <BUGSTART>
    ...buggy hunk lines...
    <BUGEND>
    ...post-context lines...

Over budget, context lines are trimmed farthest-first (alternating tail and
head), then the ingredient list is truncated from its end. Hunk lines and
markers are never trimmed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import lexing
from .corpus import BugSample, ContextWindow, line_count, source_lines
from .errors import DataError
from .ingredients import IngredientSets

BUG_START = "<BUGSTART>"
BUG_END = "<BUGEND>"
INGREDIENT_SEP = "<INGRE>"

MODE_SCANNED = "scanned"
MODE_PERFECT = "perfect"
MODE_PERFECT_FILE = "perfect_file"
MODE_PERFECT_LOW_PRECISION = "perfect_low_precision"
MODE_NAIVE = "naive"
MODE_NONE = "none"
MODE_LARGE_CONTEXT = "large_context"
MODES = (
    MODE_SCANNED,
    MODE_PERFECT,
    MODE_PERFECT_FILE,
    MODE_PERFECT_LOW_PRECISION,
    MODE_NAIVE,
    MODE_NONE,
    MODE_LARGE_CONTEXT,
)

DEFAULT_BUDGET_BYTES = 4096  # 1024 model tokens at 4 bytes/token
LARGE_CONTEXT_MULTIPLIER = 5  # 5120 tokens vs the default 1024
DISTRACTORS_PER_INGREDIENT = 20


@dataclass(frozen=True)
class RepairPrompt:
    bug_id: str
    text: str
    ingredient_list: tuple[str, ...]
    mode: str
    budget_bytes: int
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class LearningTarget:
    bug_id: str
    text: str


def byte_len(text: str) -> int:
    return len(text) if text.isascii() else len(text.encode("utf-8"))


def _window_parts(
    bug: BugSample, window: ContextWindow
) -> tuple[list[str], list[list[str]], list[list[str]], list[str]]:
    """Split the window into (pre, hunks, gaps, post) line lists."""
    lines = source_lines(bug.buggy_source)
    hunks = bug.buggy_hunks
    pre = lines[window.start - 1 : hunks[0][0] - 1]
    hunk_lines = []
    gaps = []
    for i, (s, e) in enumerate(hunks):
        hunk_lines.append(lines[s - 1 : e] if e >= s else [])
        if i + 1 < len(hunks):
            gaps.append(lines[e : hunks[i + 1][0] - 1])
    post = lines[hunks[-1][1] : window.end]
    return pre, hunk_lines, gaps, post


def _render(pre: list[str], hunk_lines: list[list[str]], gaps: list[list[str]],
            post: list[str], ingredients: list[str]) -> str:
    out: list[str] = []
    if ingredients:
        out.append(" ".join(ingredients) + " " + INGREDIENT_SEP)
    out.extend(pre)
    for i, hl in enumerate(hunk_lines):
        out.append(BUG_START)
        out.extend(hl)
        out.append(BUG_END)
        if i < len(gaps):
            out.extend(gaps[i])
    out.extend(post)
    return "\n".join(out)


def render_marked_window(bug: BugSample, window: ContextWindow) -> str:
    """The marked window with no ingredient prefix and no budget applied."""
    pre, hunk_lines, gaps, post = _window_parts(bug, window)
    return _render(pre, hunk_lines, gaps, post, [])


def build_repair_input(
    bug: BugSample,
    window: ContextWindow,
    ingredients: list[str] | tuple[str, ...],
    budget: int,
    mode: str = MODE_SCANNED,
    notes: tuple[str, ...] = (),
) -> RepairPrompt:
    """Assemble a prompt, trimming to the byte budget if needed."""
    pre, hunk_lines, gaps, post = _window_parts(bug, window)
    ingredients = list(ingredients)
    text = _render(pre, hunk_lines, gaps, post, ingredients)
    drop_tail = True
    while byte_len(text) > budget and (pre or post):
        if drop_tail:
            if post:
                post.pop()
            else:
                pre.pop(0)
        else:
            if pre:
                pre.pop(0)
            else:
                post.pop()
        drop_tail = not drop_tail
        text = _render(pre, hunk_lines, gaps, post, ingredients)
    while byte_len(text) > budget and ingredients:
        ingredients.pop()
        text = _render(pre, hunk_lines, gaps, post, ingredients)
    if byte_len(text) > budget:
        raise DataError(
            f"budget {budget} below irreducible content ({byte_len(text)} bytes) for bug {bug.id}"
        )
    return RepairPrompt(bug.id, text, tuple(ingredients), mode, budget, notes)


def learning_target(bug: BugSample) -> LearningTarget:
    """The fixed-hunk text, newline-joined across hunks in order."""
    lines = source_lines(bug.fixed_source)
    parts = []
    for s, e in bug.fixed_hunks:
        parts.append("\n".join(lines[s - 1 : e]) if e >= s else "")
    return LearningTarget(bug.id, "\n".join(parts))


def extract_marked_hunks(text: str) -> list[str]:
    """Inverse of the marker layout: the text between each marker pair."""
    out = []
    lines = text.split("\n")
    i = 0
    while i < len(lines):
        if lines[i] == BUG_START:
            j = i + 1
            body = []
            while j < len(lines) and lines[j] != BUG_END:
                body.append(lines[j])
                j += 1
            out.append("\n".join(body))
            i = j + 1
        else:
            i += 1
    return out


# --------------------------------------------------------------------------
# Baselines
# --------------------------------------------------------------------------

def _expand_window(bug: BugSample, window: ContextWindow, budget: int) -> ContextWindow:
    """Grow the window alternately upward/downward until the budget is full,
    starting on the leading-context side."""
    n = line_count(bug.buggy_source)
    start, end = window.start, window.end
    head_blocked = start <= 1
    tail_blocked = end >= n
    prefer_head = True
    while not (head_blocked and tail_blocked):
        if prefer_head and not head_blocked:
            candidate = ContextWindow(start - 1, end)
        elif not tail_blocked:
            candidate = ContextWindow(start, end + 1)
        else:
            candidate = ContextWindow(start - 1, end)
        grown = render_marked_window(bug, candidate)
        if byte_len(grown) > budget:
            if candidate.start < start:
                head_blocked = True
            else:
                tail_blocked = True
        else:
            start, end = candidate.start, candidate.end
            head_blocked = head_blocked or start <= 1
            tail_blocked = tail_blocked or end >= n
        prefer_head = not prefer_head
    return ContextWindow(start, end)


def _first_occurrence_names(bug: BugSample) -> list[str]:
    seen: set[str] = set()
    out = []
    for occ in lexing.lex_identifiers(bug.buggy_source, bug.language):
        if occ.name not in seen:
            seen.add(occ.name)
            out.append(occ.name)
    return out


def build_baseline_input(
    bug: BugSample,
    window: ContextWindow,
    sets: IngredientSets,
    mode: str,
    seed: int,
    budget: int = DEFAULT_BUDGET_BYTES,
    large_multiplier: int = LARGE_CONTEXT_MULTIPLIER,
) -> RepairPrompt:
    """One of the six baseline input variants (everything except `scanned`)."""
    if mode == MODE_NONE:
        return build_repair_input(bug, window, [], budget, mode)

    if mode == MODE_LARGE_CONTEXT:
        big_budget = budget * large_multiplier
        big_window = _expand_window(bug, window, big_budget)
        return build_repair_input(bug, big_window, [], big_budget, mode)

    if mode == MODE_PERFECT:
        return build_repair_input(bug, window, sorted(sets.fix_all), budget, mode)

    if mode == MODE_PERFECT_FILE:
        return build_repair_input(bug, window, sorted(sets.file_in), budget, mode)

    if mode == MODE_PERFECT_LOW_PRECISION:
        rng = random.Random(seed)
        pool = sorted(sets.file_ids - sets.fix_all)
        wanted = DISTRACTORS_PER_INGREDIENT * len(sets.file_in)
        notes: tuple[str, ...] = ()
        if wanted > len(pool):
            notes = (f"distractor shortfall: wanted {wanted}, pool {len(pool)}",)
            wanted = len(pool)
        distractors = rng.sample(pool, wanted)
        listing = sorted(sets.file_in) + distractors
        rng.shuffle(listing)
        return build_repair_input(bug, window, listing, budget, mode, notes)

    if mode == MODE_NAIVE:
        # Fill whatever budget is left after the full window; never displace
        # context lines, never repeat a name.
        base = build_repair_input(bug, window, [], budget, mode)
        if byte_len(render_marked_window(bug, window)) > budget:
            return base  # window already trimmed, no room for a prefix
        used = byte_len(base.text)
        chosen: list[str] = []
        for name in _first_occurrence_names(bug):
            cost = byte_len(name) + 1
            if not chosen:
                cost += len(INGREDIENT_SEP) + 1
            if used + cost > budget:
                continue
            chosen.append(name)
            used += cost
        return build_repair_input(bug, window, chosen, budget, mode) if chosen else base

    raise DataError(f"unknown baseline mode: {mode!r}")


def scan_pipeline(
    bug: BugSample,
    scanner_spec,
    threshold: float,
    budget: int = DEFAULT_BUDGET_BYTES,
    variant: str = "all",
    before: int | None = None,
    after: int | None = None,
) -> RepairPrompt:
    """Run a scanner over the bug's file, then assemble the augmented prompt.

    Predicted ingredients are ordered by descending score, ties by name.
    """
    from . import scanning  # local import: scanning builds prompts via this module

    from .corpus import DEFAULT_AFTER, DEFAULT_BEFORE, local_context

    before = DEFAULT_BEFORE if before is None else before
    after = DEFAULT_AFTER if after is None else after
    window = local_context(bug, before, after)
    prepared = scanning.prepare_scan_bug(bug, budget, variant, before=before, after=after)
    if prepared.samples:
        prediction = scanning.score_samples(scanner_spec, prepared.samples)
        picked = [(name, s) for name, s in prediction.scores.items() if s >= threshold]
        picked.sort(key=lambda kv: (-kv[1], kv[0]))
        names = [name for name, _ in picked]
    else:
        names = []
    return build_repair_input(bug, window, names, budget, MODE_SCANNED)
