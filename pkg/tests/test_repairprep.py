from __future__ import annotations

import random

import pytest

from repairscan import lexing, repairprep, scanning
from repairscan.corpus import local_context, sample_from_record, source_lines
from repairscan.errors import DataError
from repairscan.ingredients import ingredient_sets

from conftest import make_bug_batch


def rich_bug(bug_id="rp-1"):
    """A file with a large identifier pool and one far-away ingredient."""
    pool = [f"candidate_{i:02d} = build_{i:02d}()" for i in range(30)]
    body = ["def act(ctx):", "    return ctx.quick_route()"]
    tail = [f"tail_{i:02d} = {i}" for i in range(20)]
    far = ["def fallback(ctx):", "    return steady_route(ctx)"]
    buggy = "\n".join(pool + body + tail + far)
    fixed = buggy.replace("ctx.quick_route()", "steady_route(ctx)")
    line = buggy.split("\n").index("    return ctx.quick_route()") + 1
    return sample_from_record({
        "id": bug_id, "language": "python", "buggy_source": buggy, "fixed_source": fixed,
        "buggy_hunks": [[line, line]], "fixed_hunks": [[line, line]],
    })


def _window_sets(bug):
    window = local_context(bug)
    return window, ingredient_sets(bug, window)


# ---------------------------------------------------------------------------
# build_repair_input
# ---------------------------------------------------------------------------

def test_prompt_layout_with_ingredients():
    bug = rich_bug()
    window, _ = _window_sets(bug)
    prompt = repairprep.build_repair_input(bug, window, ["steady_route", "ctx"], 4096)
    lines = prompt.text.split("\n")
    assert lines[0] == "steady_route ctx <INGRE>"
    assert prompt.text.count("<INGRE>") == 1
    assert prompt.text.count(repairprep.BUG_START) == 1
    assert prompt.text.count(repairprep.BUG_END) == 1
    assert prompt.text.index(repairprep.BUG_START) < prompt.text.index(repairprep.BUG_END)


def test_prompt_without_ingredients_has_no_separator():
    bug = rich_bug()
    window, _ = _window_sets(bug)
    prompt = repairprep.build_repair_input(bug, window, [], 4096)
    assert "<INGRE>" not in prompt.text
    assert prompt.text.split("\n")[0] != ""


def test_round_trip_marked_hunks():
    bug = rich_bug()
    window, _ = _window_sets(bug)
    prompt = repairprep.build_repair_input(bug, window, ["a"], 4096)
    assert repairprep.extract_marked_hunks(prompt.text) == ["    return ctx.quick_route()"]


def test_tight_budget_drops_farthest_post_line_first():
    bug = rich_bug()
    window, _ = _window_sets(bug)
    full = repairprep.build_repair_input(bug, window, [], 4096)
    tight = repairprep.build_repair_input(bug, window, [], repairprep.byte_len(full.text) - 1)
    assert tight.text.split("\n") == full.text.split("\n")[:-1]


def test_markers_survive_any_budget():
    bug = rich_bug()
    window, _ = _window_sets(bug)
    hunk_text = "    return ctx.quick_route()"
    for budget in (4096, 600, 200, 90):
        prompt = repairprep.build_repair_input(bug, window, ["x", "y"], budget)
        assert repairprep.byte_len(prompt.text) <= budget
        assert repairprep.extract_marked_hunks(prompt.text) == [hunk_text]


def test_budget_below_irreducible_content_errors():
    bug = rich_bug()
    window, _ = _window_sets(bug)
    with pytest.raises(DataError, match="irreducible"):
        repairprep.build_repair_input(bug, window, [], 10)


def test_ingredients_truncated_from_tail_after_context_gone():
    bug = rich_bug()
    window, _ = _window_sets(bug)
    bare = repairprep.build_repair_input(bug, window, [], 10**6)
    lines = bare.text.split("\n")
    irreducible = "\n".join(
        l for l in lines if l in (repairprep.BUG_START, repairprep.BUG_END, "    return ctx.quick_route()")
    )
    budget = repairprep.byte_len(irreducible) + len("first <INGRE>") + 1
    prompt = repairprep.build_repair_input(bug, window, ["first", "second_name"], budget)
    assert prompt.ingredient_list == ("first",)


def test_multi_hunk_prompt_marks_each_hunk():
    src = "\n".join([f"l{i} = {i}" for i in range(1, 30)])
    fixed = src.replace("l5 = 5", "l5 = 50").replace("l9 = 9", "l9 = 90")
    bug = sample_from_record({
        "id": "mh", "language": "python", "buggy_source": src, "fixed_source": fixed,
        "buggy_hunks": [[5, 5], [9, 9]], "fixed_hunks": [[5, 5], [9, 9]],
    })
    window, _ = _window_sets(bug)
    prompt = repairprep.build_repair_input(bug, window, [], 4096)
    assert prompt.text.count(repairprep.BUG_START) == 2
    assert prompt.text.count(repairprep.BUG_END) == 2
    assert repairprep.extract_marked_hunks(prompt.text) == ["l5 = 5", "l9 = 9"]
    # gap lines between hunks are kept
    assert "l7 = 7" in prompt.text


def test_insertion_hunk_renders_adjacent_markers():
    src = "a = 1\nb = 2\nc = 3"
    fixed = "a = 1\nguard = 0\nb = 2\nc = 3"
    bug = sample_from_record({
        "id": "ins", "language": "python", "buggy_source": src, "fixed_source": fixed,
        "buggy_hunks": [[2, 1]], "fixed_hunks": [[2, 2]],
    })
    window, _ = _window_sets(bug)
    prompt = repairprep.build_repair_input(bug, window, [], 4096)
    lines = prompt.text.split("\n")
    i = lines.index(repairprep.BUG_START)
    assert lines[i + 1] == repairprep.BUG_END
    assert repairprep.extract_marked_hunks(prompt.text) == [""]


# ---------------------------------------------------------------------------
# learning_target
# ---------------------------------------------------------------------------

def test_target_is_fixed_hunk_text():
    bug = rich_bug()
    assert repairprep.learning_target(bug).text == "    return steady_route(ctx)"


def test_target_empty_for_pure_deletion():
    src = "a = 1\nstale = 9\nb = 2"
    bug = sample_from_record({
        "id": "del", "language": "python", "buggy_source": src,
        "fixed_source": "a = 1\nb = 2",
        "buggy_hunks": [[2, 2]], "fixed_hunks": [[2, 1]],
    })
    assert repairprep.learning_target(bug).text == ""


def test_target_joins_hunks_in_order():
    src = "\n".join([f"l{i} = {i}" for i in range(1, 10)])
    fixed = src.replace("l3 = 3", "l3 = 30").replace("l7 = 7", "l7 = 70")
    bug = sample_from_record({
        "id": "mh2", "language": "python", "buggy_source": src, "fixed_source": fixed,
        "buggy_hunks": [[3, 3], [7, 7]], "fixed_hunks": [[3, 3], [7, 7]],
    })
    assert repairprep.learning_target(bug).text == "l3 = 30\nl7 = 70"


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

def test_none_equals_plain_input():
    bug = rich_bug()
    window, sets = _window_sets(bug)
    baseline = repairprep.build_baseline_input(bug, window, sets, "none", seed=0, budget=4096)
    plain = repairprep.build_repair_input(bug, window, [], 4096)
    assert baseline.text == plain.text
    assert baseline.ingredient_list == ()


def test_perfect_uses_ground_truth():
    bug = rich_bug()
    window, sets = _window_sets(bug)
    p = repairprep.build_baseline_input(bug, window, sets, "perfect", seed=0, budget=4096)
    assert set(p.ingredient_list) == set(sets.fix_all)


def test_perfect_file_limited_to_in_file():
    bug = rich_bug()
    window, sets = _window_sets(bug)
    p = repairprep.build_baseline_input(bug, window, sets, "perfect_file", seed=0, budget=4096)
    assert set(p.ingredient_list) == set(sets.file_in)


def test_low_precision_adds_twenty_distractors_per_ingredient():
    bug = rich_bug()
    window, sets = _window_sets(bug)
    assert len(sets.file_in) == 1
    p = repairprep.build_baseline_input(
        bug, window, sets, "perfect_low_precision", seed=2, budget=8192
    )
    assert len(p.ingredient_list) == 21
    assert len(set(p.ingredient_list)) == 21
    assert set(sets.file_in) <= set(p.ingredient_list)
    assert not (set(p.ingredient_list) - set(sets.file_in)) & set(sets.fix_all)
    m = scanning.scanner_metrics(set(p.ingredient_list), set(sets.file_in))
    assert m.precision == pytest.approx(1 / 21)
    assert m.recall == 1.0


def test_low_precision_shortfall_noted():
    src = "use = thing\nbug = 0\nz = other"
    fixed = src.replace("bug = 0", "bug = thing")
    bug = sample_from_record({
        "id": "small", "language": "python", "buggy_source": src, "fixed_source": fixed,
        "buggy_hunks": [[2, 2]], "fixed_hunks": [[2, 2]],
    })
    window, sets = _window_sets(bug)
    p = repairprep.build_baseline_input(
        bug, window, sets, "perfect_low_precision", seed=1, budget=4096
    )
    assert any("shortfall" in note for note in p.notes)


def test_naive_fills_budget_without_repeats():
    bug = rich_bug()
    window, sets = _window_sets(bug)
    p = repairprep.build_baseline_input(bug, window, sets, "naive", seed=0, budget=3000)
    assert len(p.ingredient_list) > 0
    assert len(set(p.ingredient_list)) == len(p.ingredient_list)
    assert set(p.ingredient_list) <= set(sets.file_ids)
    assert repairprep.byte_len(p.text) <= 3000
    # first-occurrence order
    order = [o.name for o in lexing.lex_identifiers(bug.buggy_source, "python")]
    firsts = []
    for name in order:
        if name not in firsts:
            firsts.append(name)
    positions = [firsts.index(n) for n in p.ingredient_list]
    assert positions == sorted(positions)


def test_large_context_budget_and_expansion():
    bug = rich_bug()
    window, sets = _window_sets(bug)
    small = repairprep.build_baseline_input(bug, window, sets, "none", seed=0, budget=1024)
    large = repairprep.build_baseline_input(bug, window, sets, "large_context", seed=0, budget=1024)
    assert large.budget_bytes == 5120
    assert repairprep.byte_len(large.text) <= 5120
    assert repairprep.byte_len(large.text) > repairprep.byte_len(small.text)
    assert repairprep.extract_marked_hunks(large.text) == ["    return ctx.quick_route()"]


def test_unknown_mode_rejected():
    bug = rich_bug()
    window, sets = _window_sets(bug)
    with pytest.raises(DataError):
        repairprep.build_baseline_input(bug, window, sets, "bogus", seed=0, budget=4096)


# ---------------------------------------------------------------------------
# scan_pipeline
# ---------------------------------------------------------------------------

def test_oracle_pipeline_matches_perfect_file_up_to_ordering():
    bug = rich_bug()
    window, sets = _window_sets(bug)
    piped = repairprep.scan_pipeline(bug, scanning.ScannerSpec("oracle"), 0.5, 4096)
    perfect_file = repairprep.build_baseline_input(
        bug, window, sets, "perfect_file", seed=0, budget=4096
    )
    assert sorted(piped.ingredient_list) == sorted(perfect_file.ingredient_list)


def test_pipeline_with_empty_prediction_equals_none_mode():
    bug = rich_bug()
    window, sets = _window_sets(bug)
    # naive_random at threshold 1.0 predicts nothing unless a hash hits exactly 1.0
    piped = repairprep.scan_pipeline(bug, scanning.ScannerSpec("naive_random", seed=4), 1.0, 4096)
    none_mode = repairprep.build_baseline_input(bug, window, sets, "none", seed=0, budget=4096)
    assert piped.text == none_mode.text


def test_pipeline_puts_both_far_away_names_in_prefix():
    from repairscan.minicorpus import mini_corpus

    xml_bug = next(b for b in mini_corpus() if b.id == "py-xml-serialize")
    prompt = repairprep.scan_pipeline(xml_bug, scanning.ScannerSpec("oracle"), 0.5, 4096)
    assert {"ElementTree", "tostring"} <= set(prompt.ingredient_list)
    head = prompt.text.split("<INGRE>")[0]
    assert "ElementTree" in head and "tostring" in head


def test_pipeline_orders_by_score_then_name():
    bug = rich_bug()
    spec = scanning.ScannerSpec("naive_random", seed=8)
    prompt = repairprep.scan_pipeline(bug, spec, 0.5, 8192)
    prepared = scanning.prepare_scan_bug(bug, 8192, "all")
    scores = scanning.score_samples(spec, prepared.samples).scores
    expected = sorted(
        [n for n, s in scores.items() if s >= 0.5], key=lambda n: (-scores[n], n)
    )
    assert list(prompt.ingredient_list) == expected[: len(prompt.ingredient_list)]


# ---------------------------------------------------------------------------
# Prompt invariants over generated bugs
# ---------------------------------------------------------------------------

def test_round_trip_and_budget_on_generated_bugs():
    bugs = make_bug_batch(seed=66, n=50)
    for bug in bugs:
        window = local_context(bug)
        sets = ingredient_sets(bug, window)
        lines = source_lines(bug.buggy_source)
        expected = [
            "\n".join(lines[s - 1 : e]) if e >= s else "" for s, e in bug.buggy_hunks
        ]
        for mode in ("none", "perfect", "perfect_file", "naive"):
            prompt = repairprep.build_baseline_input(bug, window, sets, mode, seed=1, budget=2048)
            assert repairprep.byte_len(prompt.text) <= 2048
            assert repairprep.extract_marked_hunks(prompt.text) == expected, (bug.id, mode)


def test_prompt_determinism():
    bugs = make_bug_batch(seed=67, n=10)
    for bug in bugs:
        window = local_context(bug)
        sets = ingredient_sets(bug, window)
        for mode in repairprep.MODES:
            if mode == "scanned":
                a = repairprep.scan_pipeline(bug, scanning.ScannerSpec("naive_random", seed=2), 0.5, 2048)
                b = repairprep.scan_pipeline(bug, scanning.ScannerSpec("naive_random", seed=2), 0.5, 2048)
            else:
                a = repairprep.build_baseline_input(bug, window, sets, mode, seed=9, budget=2048)
                b = repairprep.build_baseline_input(bug, window, sets, mode, seed=9, budget=2048)
            assert a.text == b.text and a.ingredient_list == b.ingredient_list
