"""A bundled 50-bug demo corpus, built deterministically from handcrafted
templates. It covers the interesting shapes: operator fixes needing no
ingredients, in-window and out-of-window single-ingredient bugs, multi
ingredient bugs, insertions, deletions, and transcriptions of two classic
missing-ingredient patterns (a far-away XML serializer call and an HTML
escaping wrapper).
"""

from __future__ import annotations

import json

from .corpus import BugCorpus, BugSample, ingest

_PY_XML_BUG_ID = "py-xml-serialize"
_JAVA_ESCAPE_BUG_ID = "java-tooltip-escape"


def _py_filler(i: int) -> list[str]:
    return [
        f"def compute_metric_{i:02d}(frame_{i:02d}, limit_{i:02d}):",
        f"    total_{i:02d} = frame_{i:02d}.size + limit_{i:02d}",
        f"    if total_{i:02d} > limit_{i:02d}:",
        f"        total_{i:02d} -= 1",
        f"    return total_{i:02d}",
        "",
    ]


def _java_filler(i: int) -> list[str]:
    return [
        f"    public int computeMetric{i:02d}(int frame{i:02d}, int limit{i:02d}) {{",
        f"        int total{i:02d} = frame{i:02d} + limit{i:02d};",
        f"        if (total{i:02d} > limit{i:02d}) {{",
        f"            total{i:02d} -= 1;",
        "        }",
        f"        return total{i:02d};",
        "    }",
        "",
    ]


def _py_file(top: list[str], middle: list[str], bottom: list[str]) -> str:
    return "\n".join(["import json", "import os", ""] + top + middle + bottom)


def _find_line(source: str, needle: str) -> int:
    for i, line in enumerate(source.split("\n"), start=1):
        if needle in line:
            return i
    raise ValueError(f"needle {needle!r} not found")


def _single_line_bug(
    bug_id: str,
    language: str,
    source: str,
    buggy_line: str,
    fixed_line: str,
    commit: str,
) -> BugSample:
    line_no = _find_line(source, buggy_line.strip())
    lines = source.split("\n")
    fixed_lines = list(lines)
    fixed_lines[line_no - 1] = fixed_line
    return BugSample(
        id=bug_id,
        language=language,
        buggy_source=source,
        fixed_source="\n".join(fixed_lines),
        buggy_hunks=((line_no, line_no),),
        fixed_hunks=((line_no, line_no),),
        fix_commit=commit,
    )


def _xml_serializer_bug() -> BugSample:
    # Single-statement bug whose fix needs two identifiers that only occur
    # far away in the same file: the serializer module and its function.
    top = [
        "from xml.etree import ElementTree",
        "",
        "def network_describe(conn, name):",
        "    net = conn.lookup_network(name)",
        "    doc = ElementTree.fromstring(net.raw_xml())",
        "    return ElementTree.tostring(doc)",
        "",
    ]
    filler = []
    for i in range(6):
        filler.extend(_py_filler(i))
    body = [
        "def cpu_describe(conn, out):",
        '    cpu = conn.capabilities().find("cpu")',
        '    cpu_specs = cpu.findall("feature")',
        '    model_node = cpu.find("model")',
        "    if model_node is None:",
        "        cpu_model = None",
        "    else:",
        '        cpu_model = model_node.get("name")',
        "    cpu.extend([feature for feature in cpu_specs])",
        '    if out == "salt":',
        "        return {",
        '            "model": cpu_model,',
        '            "features": [feature.get("name") for feature in cpu_specs],',
        "        }",
        "    return cpu.toxml()",
        "",
    ]
    tail = []
    for i in range(6, 9):
        tail.extend(_py_filler(i))
    source = "\n".join(top + filler + body + tail)
    return _single_line_bug(
        _PY_XML_BUG_ID,
        "python",
        source,
        "return cpu.toxml()",
        "    return ElementTree.tostring(cpu)",
        "commit-xml-serialize",
    )


def _tooltip_escape_bug() -> BugSample:
    # The fix wraps a parameter in an escaping helper declared in another
    # class; both names occur elsewhere in the file but far from the bug.
    head = [
        "package net.example.chart;",
        "",
        "public class ToolTipWriter {",
        "",
        "    public String generateAltFragment(String altText) {",
        '        return " alt=\\"" + ImageMapUtilities.htmlEscape(altText) + "\\"";',
        "    }",
        "",
    ]
    filler = []
    for i in range(5):
        filler.extend(_java_filler(i))
    body = [
        "    public String generateToolTipFragment(String toolTipText) {",
        '        return " title=\\"" + toolTipText + "\\" alt=\\"\\"";',
        "    }",
        "",
    ]
    tail = []
    for i in range(5, 8):
        tail.extend(_java_filler(i))
    source = "\n".join(head + filler + body + tail + ["}"])
    return _single_line_bug(
        _JAVA_ESCAPE_BUG_ID,
        "java",
        source,
        'return " title=',
        '        return " title=\\"" + ImageMapUtilities.htmlEscape(toolTipText) + "\\" alt=\\"\\"";',
        "commit-tooltip-escape",
    )


def _py_operator_bug(i: int) -> BugSample:
    top = []
    for j in range(5):
        top.extend(_py_filler(10 * i + j))
    body = [
        f"def clamp_value_{i}(value, ceiling):",
        "    if value < ceiling:",
        "        return value",
        "    return ceiling",
        "",
    ]
    bottom = []
    for j in range(5, 8):
        bottom.extend(_py_filler(10 * i + j))
    source = _py_file(top, body, bottom)
    return _single_line_bug(
        f"py-operator-{i}", "python", source,
        "if value < ceiling:", "    if value <= ceiling:", f"commit-py-op-{i}",
    )


def _java_operator_bug(i: int) -> BugSample:
    head = ["package net.example.ops;", "", f"public class Bounds{i} {{", ""]
    top = []
    for j in range(4):
        top.extend(_java_filler(10 * i + j))
    body = [
        f"    public int clampValue{i}(int value, int ceiling) {{",
        "        if (value < ceiling) {",
        "            return value;",
        "        }",
        "        return ceiling;",
        "    }",
        "",
    ]
    bottom = []
    for j in range(4, 7):
        bottom.extend(_java_filler(10 * i + j))
    source = "\n".join(head + top + body + bottom + ["}"])
    return _single_line_bug(
        f"java-operator-{i}", "java", source,
        "if (value < ceiling) {", "        if (value <= ceiling) {", f"commit-java-op-{i}",
    )


def _py_in_window_bug(i: int) -> BugSample:
    top = []
    for j in range(5):
        top.extend(_py_filler(20 + 10 * i + j))
    body = [
        f"def load_profile_{i}(store, key):",
        f"    cached = store.lookup_cached_{i}(key)",
        "    if cached is not None:",
        "        return cached",
        f"    return store.lookup_fresh_{i}(key)",
        "",
        f"def refresh_profile_{i}(store, key):",
        f"    return store.lookup_fresh_{i}(key)",
        "",
    ]
    bottom = []
    for j in range(5, 8):
        bottom.extend(_py_filler(20 + 10 * i + j))
    source = _py_file(top, body, bottom)
    # the right call is visible two lines below the bug, well inside the window
    return _single_line_bug(
        f"py-inwin-{i}", "python", source,
        f"cached = store.lookup_cached_{i}(key)",
        f"    cached = store.lookup_fresh_{i}(key)",
        f"commit-py-inwin-{i}",
    )


def _java_in_window_bug(i: int) -> BugSample:
    head = ["package net.example.cache;", "", f"public class Cache{i} {{", ""]
    top = []
    for j in range(4):
        top.extend(_java_filler(30 + 10 * i + j))
    body = [
        f"    public String loadProfile{i}(Store store, String key) {{",
        f"        String cached = store.lookupCached{i}(key);",
        "        if (cached != null) {",
        "            return cached;",
        "        }",
        f"        return store.lookupFresh{i}(key);",
        "    }",
        "",
    ]
    bottom = []
    for j in range(4, 7):
        bottom.extend(_java_filler(30 + 10 * i + j))
    source = "\n".join(head + top + body + bottom + ["}"])
    return _single_line_bug(
        f"java-inwin-{i}", "java", source,
        f"String cached = store.lookupCached{i}(key);",
        f"        String cached = store.lookupFresh{i}(key);",
        f"commit-java-inwin-{i}",
    )


def _py_oow_bug(i: int) -> BugSample:
    # the correct helper is declared ~30 lines above the bug: in-file but
    # outside an 18-before window
    top = [
        f"def resolve_endpoint_{i}(registry, name):",
        f"    entry = registry.catalog_{i}.get(name)",
        "    if entry is None:",
        f"        raise KeyError(name)",
        "    return entry",
        "",
    ]
    for j in range(6):
        top.extend(_py_filler(60 + 10 * i + j))
    body = [
        f"def dial_{i}(registry, name):",
        f"    endpoint = lookup_endpoint_{i}(registry, name)",
        "    return endpoint.connect()",
        "",
    ]
    bottom = []
    for j in range(6, 9):
        bottom.extend(_py_filler(60 + 10 * i + j))
    source = _py_file(top, body, bottom)
    return _single_line_bug(
        f"py-oow-{i}", "python", source,
        f"endpoint = lookup_endpoint_{i}(registry, name)",
        f"    endpoint = resolve_endpoint_{i}(registry, name)",
        f"commit-py-oow-{i}",
    )


def _java_oow_bug(i: int) -> BugSample:
    head = [
        "package net.example.net;",
        "",
        f"public class Dialer{i} {{",
        "",
        f"    private Endpoint resolveEndpoint{i}(Registry registry, String name) {{",
        f"        return registry.catalog{i}().get(name);",
        "    }",
        "",
    ]
    top = []
    for j in range(5):
        top.extend(_java_filler(70 + 10 * i + j))
    body = [
        f"    public Connection dial{i}(Registry registry, String name) {{",
        f"        Endpoint endpoint = lookupEndpoint{i}(registry, name);",
        "        return endpoint.connect();",
        "    }",
        "",
    ]
    bottom = []
    for j in range(5, 8):
        bottom.extend(_java_filler(70 + 10 * i + j))
    source = "\n".join(head + top + body + bottom + ["}"])
    return _single_line_bug(
        f"java-oow-{i}", "java", source,
        f"Endpoint endpoint = lookupEndpoint{i}(registry, name);",
        f"        Endpoint endpoint = resolveEndpoint{i}(registry, name);",
        f"commit-java-oow-{i}",
    )


def _py_multi_bug(i: int) -> BugSample:
    top = [
        f"class JsonCodec_{i}:",
        "    @staticmethod",
        f"    def encode_payload_{i}(payload):",
        '        return json.dumps(payload, sort_keys=True)',
        "",
    ]
    for j in range(6):
        top.extend(_py_filler(120 + 10 * i + j))
    body = [
        f"def publish_{i}(queue, payload):",
        f"    body = str(payload)",
        "    queue.push(body)",
        "",
    ]
    bottom = []
    for j in range(6, 9):
        bottom.extend(_py_filler(120 + 10 * i + j))
    source = _py_file(top, body, bottom)
    return _single_line_bug(
        f"py-multi-{i}", "python", source,
        "body = str(payload)",
        f"    body = JsonCodec_{i}.encode_payload_{i}(payload)",
        f"commit-py-multi-{i}",
    )


def _py_insertion_bug(i: int) -> BugSample:
    top = []
    for j in range(5):
        top.extend(_py_filler(170 + 10 * i + j))
    body = [
        f"def summarize_{i}(records):",
        "    total = 0",
        "    for record in records:",
        "        total += record.weight",
        "    return total",
        "",
    ]
    bottom = []
    for j in range(5, 8):
        bottom.extend(_py_filler(170 + 10 * i + j))
    source = _py_file(top, body, bottom)
    insert_at = _find_line(source, "for record in records:")
    lines = source.split("\n")
    fixed_lines = lines[: insert_at - 1] + [
        "    if records is None:",
        "        return total",
    ] + lines[insert_at - 1 :]
    return BugSample(
        id=f"py-insert-{i}",
        language="python",
        buggy_source=source,
        fixed_source="\n".join(fixed_lines),
        buggy_hunks=((insert_at, insert_at - 1),),
        fixed_hunks=((insert_at, insert_at + 1),),
        fix_commit=f"commit-py-insert-{i}",
    )


def _py_deletion_bug(i: int) -> BugSample:
    top = []
    for j in range(5):
        top.extend(_py_filler(220 + 10 * i + j))
    body = [
        f"def shutdown_{i}(pool):",
        "    pool.drain()",
        "    pool.drain()",
        "    pool.close()",
        "",
    ]
    bottom = []
    for j in range(5, 8):
        bottom.extend(_py_filler(220 + 10 * i + j))
    source = _py_file(top, body, bottom)
    dup_at = _find_line(source, "pool.drain()") + 1  # second drain call
    lines = source.split("\n")
    fixed_lines = lines[: dup_at - 1] + lines[dup_at:]
    return BugSample(
        id=f"py-delete-{i}",
        language="python",
        buggy_source=source,
        fixed_source="\n".join(fixed_lines),
        buggy_hunks=((dup_at, dup_at),),
        fixed_hunks=((dup_at, dup_at - 1),),
        fix_commit=f"commit-py-delete-{i}",
    )


def mini_corpus() -> list[BugSample]:
    """The 50 demo bugs, in a fixed order."""
    bugs = [_xml_serializer_bug(), _tooltip_escape_bug()]
    bugs += [_py_operator_bug(i) for i in range(6)]
    bugs += [_java_operator_bug(i) for i in range(6)]
    bugs += [_py_in_window_bug(i) for i in range(8)]
    bugs += [_java_in_window_bug(i) for i in range(4)]
    bugs += [_py_oow_bug(i) for i in range(8)]
    bugs += [_java_oow_bug(i) for i in range(4)]
    bugs += [_py_multi_bug(i) for i in range(6)]
    bugs += [_py_insertion_bug(i) for i in range(3)]
    bugs += [_py_deletion_bug(i) for i in range(3)]
    return bugs


def mini_corpus_records() -> list[str]:
    """The 50 bugs as JSONL records plus three deliberately flawed ones
    (a duplicate commit, overlapping hunks, a no-op change) so the ingest
    and dedup stages have something to chew on."""
    records = [json.dumps(b.to_record()) for b in mini_corpus()]
    dup = _py_operator_bug(0).to_record()
    dup["id"] = "py-operator-0-duplicate"
    records.append(json.dumps(dup))
    bad = _py_operator_bug(1).to_record()
    bad["id"] = "py-overlap"
    bad["buggy_hunks"] = [[5, 8], [7, 9]]
    bad["fixed_hunks"] = [[5, 8], [7, 9]]
    records.append(json.dumps(bad))
    noop = _py_operator_bug(2).to_record()
    noop["id"] = "py-noop"
    noop["fixed_source"] = noop["buggy_source"]
    records.append(json.dumps(noop))
    return records


def load_mini_corpus() -> BugCorpus:
    return ingest(mini_corpus_records())
