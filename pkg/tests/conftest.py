"""Shared deterministic generators for randomized property tests.

Everything is seeded; no test depends on wall-clock or OS entropy.
"""

from __future__ import annotations

import keyword
import random

import pytest

from repairscan.corpus import BugSample, validate_sample

_ADJ = (
    "swift", "calm", "brisk", "dense", "eager", "faint", "grand", "hollow",
    "inner", "joint", "keen", "lucid", "mild", "noble", "oblique", "plain",
)
_NOUN = (
    "parser", "cursor", "bucket", "ledger", "socket", "beacon", "matrix",
    "packet", "vector", "handle", "window", "worker", "signal", "record",
    "router", "filter",
)


def fresh_name(rng: random.Random) -> str:
    return f"{rng.choice(_ADJ)}_{rng.choice(_NOUN)}_{rng.randrange(1000)}"


def make_python_function(rng: random.Random, fname: str, pool: list[str]) -> list[str]:
    p1, p2 = fresh_name(rng), fresh_name(rng)
    v1 = fresh_name(rng)
    attr = rng.choice(pool) if pool else fresh_name(rng)
    lines = [
        f"def {fname}({p1}, {p2}):",
        f"    {v1} = {p1}.{attr}({p2})",
        f"    if {v1} > {p2}:",
        f"        {v1} = {v1} - 1",
        f"    return {v1}",
        "",
    ]
    return lines


def make_python_file(rng: random.Random, n_funcs: int) -> tuple[str, list[str]]:
    """A plausible module plus the list of its function names."""
    pool: list[str] = []
    lines = ["import os", "import json", ""]
    fnames = []
    for _ in range(n_funcs):
        fname = fresh_name(rng)
        fnames.append(fname)
        lines.extend(make_python_function(rng, fname, pool))
        pool.append(fname)
    return "\n".join(lines), fnames


def _code_line_indices(lines: list[str]) -> list[int]:
    out = []
    for i, line in enumerate(lines):
        stripped = line.strip()
        if stripped and not stripped.startswith(("def ", "import ", "#")):
            out.append(i)
    return out


def make_random_bug(rng: random.Random, bug_id: str, kind: str | None = None) -> BugSample:
    """One synthetic bug. Kinds: operator, replace_known, replace_new,
    insertion, deletion, multi_hunk. `replace_known` swaps in a name that
    already occurs elsewhere in the file (an in-file ingredient)."""
    source, fnames = make_python_file(rng, rng.randint(6, 12))
    lines = source.split("\n")
    candidates = _code_line_indices(lines)
    kind = kind or rng.choice(
        ("operator", "replace_known", "replace_new", "insertion", "deletion", "multi_hunk")
    )
    idx = rng.choice(candidates)
    fixed_lines = list(lines)

    if kind == "operator":
        with_ops = [c for c in candidates if ">" in lines[c] or "=" in lines[c]]
        idx = rng.choice(with_ops)
        target = lines[idx]
        if ">" in target:
            fixed_lines[idx] = target.replace(">", ">=", 1)
        else:
            fixed_lines[idx] = target.replace("=", "==", 1)
        buggy_hunks = fixed_hunks = ((idx + 1, idx + 1),)
    elif kind in ("replace_known", "replace_new"):
        target = lines[idx]
        words = [
            w
            for w in target.replace("(", " ").replace(")", " ").replace(".", " ").split()
            if w.isidentifier() and not keyword.iskeyword(w)
        ]
        if not words:
            return make_random_bug(rng, bug_id, kind)
        old = rng.choice(words)
        new = rng.choice(fnames) if kind == "replace_known" else fresh_name(rng) + "_unseen"
        fixed_lines[idx] = target.replace(old, new, 1)
        buggy_hunks = fixed_hunks = ((idx + 1, idx + 1),)
    elif kind == "insertion":
        fixed_lines = lines[:idx] + [f"    {fresh_name(rng)} = 0"] + lines[idx:]
        buggy_hunks = ((idx + 1, idx),)
        fixed_hunks = ((idx + 1, idx + 1),)
    elif kind == "deletion":
        fixed_lines = lines[:idx] + lines[idx + 1 :]
        buggy_hunks = ((idx + 1, idx + 1),)
        fixed_hunks = ((idx + 1, idx),)
    else:  # multi_hunk
        later = [c for c in candidates if c > idx + 1]
        if not later:
            return make_random_bug(rng, bug_id, "replace_known")
        jdx = rng.choice(later)
        fixed_lines[idx] = lines[idx].replace(">", ">=", 1) if ">" in lines[idx] else lines[idx] + "  # x"
        new = rng.choice(fnames)
        words = [
            w
            for w in lines[jdx].replace("(", " ").replace(")", " ").replace(".", " ").split()
            if w.isidentifier() and not keyword.iskeyword(w)
        ]
        if not words:
            return make_random_bug(rng, bug_id, "replace_known")
        fixed_lines[jdx] = lines[jdx].replace(rng.choice(words), new, 1)
        buggy_hunks = fixed_hunks = ((idx + 1, idx + 1), (jdx + 1, jdx + 1))

    fixed = "\n".join(fixed_lines)
    if fixed == source:  # the edit happened to be a no-op; try again
        return make_random_bug(rng, bug_id, "replace_new")
    bug = BugSample(
        id=bug_id,
        language="python",
        buggy_source=source,
        fixed_source=fixed,
        buggy_hunks=buggy_hunks,
        fixed_hunks=fixed_hunks,
        fix_commit=f"commit-{bug_id}",
    )
    validate_sample(bug)
    return bug


def make_bug_batch(seed: int, n: int, kinds: tuple[str, ...] | None = None) -> list[BugSample]:
    rng = random.Random(seed)
    out = []
    for i in range(n):
        kind = kinds[i % len(kinds)] if kinds else None
        out.append(make_random_bug(rng, f"gen-{seed}-{i}", kind))
    return out


@pytest.fixture
def rng() -> random.Random:
    return random.Random(1234)
