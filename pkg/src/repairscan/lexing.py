"""Lexical scanning of Python and Java source into identifier occurrences.

Everything here is strictly token-level: strings, comments and numbers are
skipped, keywords are filtered out, and no scope or symbol resolution is
attempted. Declarations and uses are not distinguished; `a.b` yields both
`a` and `b`. The same scanner also records exact delimiter spans for every
string and comment, which is what the multi-line literal splitter in the
corpus module is built on.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache

from .errors import DataError

PYTHON = "python"
JAVA = "java"
LANGUAGES = (PYTHON, JAVA)

# Identifier categories. Informational only: set algebra downstream is keyed
# purely by name.
VARIABLE = "variable"
FUNCTION_OR_METHOD = "function_or_method"
CLASS_OR_TYPE = "class_or_type"
PARAMETER = "parameter"
ATTRIBUTE_OR_FIELD = "attribute_or_field"
UNKNOWN = "unknown"

# Hard keywords only; soft keywords (`match`, `type`, ...) lex as names.
PYTHON_KEYWORDS = frozenset(
    "False None True and as assert async await break class continue def del "
    "elif else except finally for from global if import in is lambda nonlocal "
    "not or pass raise return try while with yield".split()
)

# Reserved words, reserved literals and primitive types. Contextual keywords
# such as `var`, `record` or `sealed` lex as ordinary identifiers.
JAVA_KEYWORDS = frozenset(
    "abstract assert boolean break byte case catch char class const continue "
    "default do double else enum extends final finally float for goto if "
    "implements import instanceof int interface long native new package "
    "private protected public return short static strictfp super switch "
    "synchronized this throw throws transient try void volatile while "
    "true false null".split()
)

_PY_STRING_PREFIXES = frozenset(("r", "b", "u", "f", "rb", "br", "rf", "fr"))

CODE = "code"
STRING = "string"
COMMENT = "comment"

_PY_NAME_RE = re.compile(r"[^\W\d]\w*", re.UNICODE)
_JAVA_NAME_RE = re.compile(r"(?:[^\W\d]|\$)(?:\w|\$)*", re.UNICODE)
_PY_DEF_RE = re.compile(r"\bdef\b")


@dataclass
class Segment:
    """One maximal span of source text: code, or a single string/comment token.

    `content_start`/`content_end` bound the payload with delimiters (and any
    string prefix) excluded; they are only meaningful for strings/comments.
    """

    kind: str
    start: int
    end: int
    content_start: int = -1
    content_end: int = -1
    quote: str = ""  # '"' or "'" for strings, "#", "//", "/*", '"""' for the rest
    triple: bool = False
    raw: bool = False

    def spans_newline(self, source: str) -> bool:
        return "\n" in source[self.start : self.end]


@dataclass(frozen=True)
class IdentifierOccurrence:
    """A single identifier occurrence with its position in the source."""

    name: str
    byte_offset: int
    line: int  # 1-based
    category: str


def line_starts(source: str) -> list[int]:
    """Offsets of the first character of every line (line 1 at offset 0)."""
    starts = [0]
    pos = source.find("\n")
    while pos != -1:
        starts.append(pos + 1)
        pos = source.find("\n", pos + 1)
    return starts


def line_of_offset(starts: list[int], offset: int) -> int:
    return bisect_right(starts, offset)


def _check_language(language: str) -> None:
    if language not in LANGUAGES:
        raise DataError(f"unknown language: {language!r}")


# --------------------------------------------------------------------------
# Segment scanners
# --------------------------------------------------------------------------

def scan_segments(source: str, language: str, strict: bool = False) -> list[Segment]:
    """Split source into code / string / comment segments.

    With strict=True a literal left open at EOF raises DataError; otherwise
    it is closed at EOF. An unterminated single-line literal is always closed
    at the end of its line so that the token never spans a newline.
    """
    _check_language(language)
    if language == PYTHON:
        return _scan_python(source, strict)
    return _scan_java(source, strict)


def _scan_python(source: str, strict: bool) -> list[Segment]:
    segs: list[Segment] = []
    n = len(source)
    i = 0
    code_start = 0

    def close_code(upto: int) -> None:
        if upto > code_start:
            segs.append(Segment(CODE, code_start, upto))

    while i < n:
        c = source[i]
        if c == "#":
            close_code(i)
            end = source.find("\n", i)
            end = n if end == -1 else end
            segs.append(Segment(COMMENT, i, end, i + 1, end, "#"))
            i = end
            code_start = i
        elif c in "\"'":
            start = i
            raw = False
            j = i - 1
            while j >= 0 and source[j].isalpha() and i - j <= 2:
                j -= 1
            prefix = source[j + 1 : i].lower()
            prefix_ok = j < 0 or not (source[j].isalnum() or source[j] == "_")
            if prefix and prefix in _PY_STRING_PREFIXES and prefix_ok:
                start = j + 1
                raw = "r" in prefix
            close_code(start)
            triple = source.startswith(c * 3, i)
            delim = c * 3 if triple else c
            k = i + len(delim)
            content_start = k
            content_end = -1
            while k < n:
                ch = source[k]
                if ch == "\\" and k + 1 < n:
                    # Escapes never terminate a literal; a backslash-newline
                    # splices single-quoted strings across physical lines.
                    k += 2
                    continue
                if triple:
                    if source.startswith(delim, k):
                        content_end = k
                        k += 3
                        break
                    k += 1
                else:
                    if ch == c:
                        content_end = k
                        k += 1
                        break
                    if ch == "\n":
                        content_end = k
                        break
                    k += 1
            if content_end == -1:
                if strict:
                    ln = line_of_offset(line_starts(source), start)
                    raise DataError(f"unterminated string literal starting on line {ln}")
                content_end = k = n
            segs.append(Segment(STRING, start, k, content_start, content_end, c, triple, raw))
            i = k
            code_start = i
        else:
            i += 1
    close_code(n)
    return segs


def _scan_java(source: str, strict: bool) -> list[Segment]:
    segs: list[Segment] = []
    n = len(source)
    i = 0
    code_start = 0

    def close_code(upto: int) -> None:
        if upto > code_start:
            segs.append(Segment(CODE, code_start, upto))

    while i < n:
        c = source[i]
        if c == "/" and source.startswith("//", i):
            close_code(i)
            end = source.find("\n", i)
            end = n if end == -1 else end
            segs.append(Segment(COMMENT, i, end, i + 2, end, "//"))
            i = end
            code_start = i
        elif c == "/" and source.startswith("/*", i):
            close_code(i)
            stop = source.find("*/", i + 2)
            if stop == -1:
                if strict:
                    ln = line_of_offset(line_starts(source), i)
                    raise DataError(f"unterminated block comment starting on line {ln}")
                segs.append(Segment(COMMENT, i, n, i + 2, n, "/*"))
                i = n
            else:
                segs.append(Segment(COMMENT, i, stop + 2, i + 2, stop, "/*"))
                i = stop + 2
            code_start = i
        elif c == '"':
            close_code(i)
            if source.startswith('"""', i) and _java_text_block_opens(source, i + 3):
                seg, i = _java_scan_text_block(source, i, strict)
            else:
                seg, i = _java_scan_quoted(source, i, '"')
            segs.append(seg)
            code_start = i
        elif c == "'":
            close_code(i)
            seg, i = _java_scan_quoted(source, i, "'")
            segs.append(seg)
            code_start = i
        else:
            i += 1
    close_code(n)
    return segs


def _java_text_block_opens(source: str, pos: int) -> bool:
    # A text block's opening delimiter may be followed only by blanks, then
    # a line terminator.
    n = len(source)
    while pos < n and source[pos] in " \t":
        pos += 1
    return pos >= n or source[pos] == "\n"


def _java_scan_text_block(source: str, start: int, strict: bool) -> tuple[Segment, int]:
    n = len(source)
    k = start + 3
    content_start = k
    while k < n:
        ch = source[k]
        if ch == "\\" and k + 1 < n:
            k += 2
            continue
        if source.startswith('"""', k):
            return Segment(STRING, start, k + 3, content_start, k, '"', True), k + 3
        k += 1
    if strict:
        ln = line_of_offset(line_starts(source), start)
        raise DataError(f"unterminated text block starting on line {ln}")
    return Segment(STRING, start, n, content_start, n, '"', True), n


def _java_scan_quoted(source: str, start: int, quote: str) -> tuple[Segment, int]:
    # Regular strings and char literals are single-line in Java; a newline
    # ends them (lenient: real compilers reject such input outright).
    n = len(source)
    k = start + 1
    while k < n:
        ch = source[k]
        if ch == "\\" and k + 1 < n:
            k += 2
            continue
        if ch == quote:
            return Segment(STRING, start, k + 1, start + 1, k, quote), k + 1
        if ch == "\n":
            return Segment(STRING, start, k, start + 1, k, quote), k
        k += 1
    return Segment(STRING, start, n, start + 1, n, quote), n


# --------------------------------------------------------------------------
# Identifier extraction
# --------------------------------------------------------------------------

def lex_identifiers(source: str | bytes, language: str) -> list[IdentifierOccurrence]:
    """All identifier occurrences in document order.

    Keywords, literals, operators, strings, comments and numbers are
    excluded. Bytes input is decoded as UTF-8; undecodable bytes raise
    DataError with the offending offset.
    """
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"undecodable byte at offset {exc.start}") from exc
    _check_language(language)
    return list(_lex_cached(source, language))


@lru_cache(maxsize=256)
def _lex_cached(source: str, language: str) -> tuple[IdentifierOccurrence, ...]:
    segments = scan_segments(source, language, strict=False)
    keywords = PYTHON_KEYWORDS if language == PYTHON else JAVA_KEYWORDS
    name_re = _PY_NAME_RE if language == PYTHON else _JAVA_NAME_RE

    positions: list[tuple[int, str]] = []
    for seg in segments:
        if seg.kind != CODE:
            continue
        for m in name_re.finditer(source, seg.start, seg.end):
            p = m.start()
            if p > 0 and _continues_number(source, p):
                continue
            name = m.group()
            if name in keywords:
                continue
            positions.append((p, name))

    starts = line_starts(source)
    byte_offsets = _byte_offsets(source, [p for p, _ in positions])
    categories = _categorize(source, language, segments, positions)
    return tuple(
        IdentifierOccurrence(name, byte_offsets[idx], line_of_offset(starts, p), categories[idx])
        for idx, (p, name) in enumerate(positions)
    )


def _continues_number(source: str, pos: int) -> bool:
    # Reject matches that are really the tail of a numeric literal: the
    # `e5` in `1e5`, the `x1F` in `0x1F`, or the attribute in `1.real`.
    prev = source[pos - 1]
    if prev.isdigit():
        return True
    if prev == ".":
        q = pos - 2
        while q >= 0 and (source[q].isalnum() or source[q] == "_"):
            q -= 1
        run = source[q + 1 : pos - 1]
        return bool(run) and run[0].isdigit()
    return False


def _byte_offsets(source: str, char_offsets: list[int]) -> list[int]:
    if source.isascii():
        return char_offsets
    out = []
    prev_char = 0
    prev_byte = 0
    for c in char_offsets:  # char_offsets are in document order
        prev_byte += len(source[prev_char:c].encode("utf-8"))
        prev_char = c
        out.append(prev_byte)
    return out


class _SegmentIndex:
    """Bisect-backed segment lookup so per-occurrence walks stay cheap."""

    def __init__(self, segments: list[Segment]):
        self.segments = segments
        self.starts = [s.start for s in segments]

    def at(self, pos: int) -> Segment | None:
        i = bisect_right(self.starts, pos) - 1
        if i >= 0 and self.segments[i].start <= pos < self.segments[i].end:
            return self.segments[i]
        return None


def _prev_meaningful(source: str, index: _SegmentIndex, pos: int) -> int:
    """Offset of the previous non-whitespace character, skipping comments."""
    p = pos - 1
    while p >= 0:
        seg = index.at(p)
        if seg is not None and seg.kind == COMMENT:
            p = seg.start - 1
            continue
        if source[p] in " \t\r\n\\":
            p -= 1
            continue
        return p
    return -1


def _next_meaningful(source: str, index: _SegmentIndex, pos: int) -> int:
    p = pos
    n = len(source)
    while p < n:
        seg = index.at(p)
        if seg is not None and seg.kind == COMMENT:
            p = seg.end
            continue
        if source[p] in " \t\r\n\\":
            p += 1
            continue
        return p
    return -1


def _word_ending_at(source: str, pos: int) -> str:
    end = pos + 1
    start = pos
    while start > 0 and (source[start - 1].isalnum() or source[start - 1] == "_"):
        start -= 1
    return source[start:end]


def _categorize(
    source: str,
    language: str,
    segments: list[Segment],
    positions: list[tuple[int, str]],
) -> list[str]:
    # Segment lookup in the helpers above is linear; build an index so the
    # per-occurrence walks stay cheap on big files.
    seg_index = _SegmentIndex(segments)
    param_spans = _python_def_param_spans(source, segments) if language == PYTHON else []

    out = []
    for pos, name in positions:
        end = pos + len(name)
        pm = _prev_meaningful(source, seg_index, pos)
        nm = _next_meaningful(source, seg_index, end)
        prev_c = source[pm] if pm >= 0 else ""
        next_c = source[nm] if nm >= 0 else ""
        prev_word = _word_ending_at(source, pm) if prev_c and (prev_c.isalnum() or prev_c == "_") else ""

        if language == PYTHON:
            out.append(_categorize_python(pos, prev_c, next_c, prev_word, param_spans, source, nm))
        else:
            out.append(_categorize_java(prev_c, next_c, prev_word))
    return out


def _categorize_python(
    pos: int,
    prev_c: str,
    next_c: str,
    prev_word: str,
    param_spans: list[tuple[int, int]],
    source: str,
    nm: int,
) -> str:
    if prev_word == "def":
        return FUNCTION_OR_METHOD
    if prev_word == "class":
        return CLASS_OR_TYPE
    if prev_word == "lambda":
        return PARAMETER
    if prev_c == "." and next_c == "(":
        return FUNCTION_OR_METHOD
    if prev_c == ".":
        return ATTRIBUTE_OR_FIELD
    if next_c == "(":
        return FUNCTION_OR_METHOD
    in_params = any(a <= pos < b for a, b in param_spans)
    if in_params and prev_c and prev_c in "(,*":
        return PARAMETER
    if next_c == "=" and source[nm + 1 : nm + 2] != "=" and prev_c and prev_c in "(,":
        return PARAMETER  # keyword argument at a call site
    return VARIABLE


def _categorize_java(prev_c: str, next_c: str, prev_word: str) -> str:
    if prev_word in ("class", "interface", "enum", "record", "new"):
        return CLASS_OR_TYPE
    if prev_c == "@":
        return CLASS_OR_TYPE
    if prev_c == "." and next_c == "(":
        return FUNCTION_OR_METHOD
    if prev_c == ".":
        return ATTRIBUTE_OR_FIELD
    if next_c == "(":
        return FUNCTION_OR_METHOD
    if next_c == "<":
        return UNKNOWN  # generic type or comparison, not decidable lexically
    if next_c and (next_c.isalpha() or next_c in "_$"):
        return CLASS_OR_TYPE  # type position: `Foo bar`
    return VARIABLE


def _python_def_param_spans(source: str, segments: list[Segment]) -> list[tuple[int, int]]:
    spans = []
    for seg in segments:
        if seg.kind != CODE:
            continue
        for m in _PY_DEF_RE.finditer(source, seg.start, seg.end):
            open_paren = source.find("(", m.end(), seg.end)
            if open_paren == -1:
                continue
            close = _match_paren(source, segments, open_paren)
            if close != -1:
                spans.append((open_paren + 1, close))
    return spans


def _match_paren(source: str, segments: list[Segment], open_pos: int) -> int:
    depth = 0
    for seg in segments:
        if seg.kind != CODE or seg.end <= open_pos:
            continue
        for p in range(max(seg.start, open_pos), seg.end):
            c = source[p]
            if c == "(":
                depth += 1
            elif c == ")":
                depth -= 1
                if depth == 0:
                    return p
    return -1


# --------------------------------------------------------------------------
# Binding detection
# --------------------------------------------------------------------------

_PY_BINDERS = frozenset(("def", "class", "for", "as", "lambda", "global", "nonlocal"))
_JAVA_NONTYPE_WORDS = frozenset(("return", "throw", "new", "instanceof", "case", "else", "do"))


def binding_names_in_lines(source: str, language: str, line_range: tuple[int, int]) -> set[str]:
    """Names that look *declared* (not merely used) on the given lines.

    Lexical heuristic in the spirit of a ctags index: assignment and loop
    targets, def/class/parameter names for Python; declarations after a type
    name or a class-like keyword for Java.
    """
    _check_language(language)
    lo, hi = line_range
    segments = scan_segments(source, language, strict=False)
    index = _SegmentIndex(segments)
    param_spans = _python_def_param_spans(source, segments) if language == PYTHON else []
    starts = line_starts(source)
    name_re = _PY_NAME_RE if language == PYTHON else _JAVA_NAME_RE
    keywords = PYTHON_KEYWORDS if language == PYTHON else JAVA_KEYWORDS
    out: set[str] = set()
    for seg in segments:
        if seg.kind != CODE:
            continue
        for m in name_re.finditer(source, seg.start, seg.end):
            pos = m.start()
            name = m.group()
            if name in keywords or (pos > 0 and _continues_number(source, pos)):
                continue
            if not lo <= line_of_offset(starts, pos) <= hi:
                continue
            if _is_binding(source, language, index, param_spans, pos, len(name)):
                out.add(name)
    return out


def _is_binding(
    source: str,
    language: str,
    index: _SegmentIndex,
    param_spans: list[tuple[int, int]],
    pos: int,
    length: int,
) -> bool:
    pm = _prev_meaningful(source, index, pos)
    nm = _next_meaningful(source, index, pos + length)
    prev_c = source[pm] if pm >= 0 else ""
    next_c = source[nm] if nm >= 0 else ""
    prev_word = _word_ending_at(source, pm) if prev_c and (prev_c.isalnum() or prev_c == "_") else ""
    plain_assign = next_c == "=" and source[nm + 1 : nm + 2] != "=" and prev_c not in "<>!+-*/%&|^="
    if language == PYTHON:
        if prev_word in _PY_BINDERS:
            return True
        if any(a <= pos < b for a, b in param_spans) and prev_c and prev_c in "(,*":
            return True
        return plain_assign and prev_c != "."
    if prev_word in ("class", "interface", "enum", "record"):
        return True
    type_position = bool(prev_word) and prev_word not in _JAVA_NONTYPE_WORDS
    return type_position and (next_c in "=;)," or plain_assign)


# --------------------------------------------------------------------------
# Line-range queries
# --------------------------------------------------------------------------

def identifiers_in_lines(
    source: str, language: str, line_range: tuple[int, int]
) -> set[str]:
    """Set of identifier names occurring on lines lo..hi (1-based, inclusive).

    An empty range encoded as (k, k-1) is accepted and yields the empty set.
    """
    lo, hi = line_range
    count = source.count("\n") + 1
    if hi == lo - 1 and 1 <= lo <= count + 1:
        return set()
    if not (1 <= lo <= hi <= count):
        raise DataError(f"line range {lo}..{hi} outside file of {count} lines")
    return {o.name for o in lex_identifiers(source, language) if lo <= o.line <= hi}


# --------------------------------------------------------------------------
# Enclosing function / method lookup
# --------------------------------------------------------------------------

def enclosing_callable(source: str, language: str, line: int) -> tuple[int, int] | None:
    """Line range of the innermost function/method definition containing `line`.

    Returns None for top-level code. Python uses indentation-delimited `def`
    bodies; Java matches braces after a `name(...) {` signature. Both are
    deliberate lexical heuristics, not parsers.
    """
    _check_language(language)
    if language == PYTHON:
        ranges = _python_callable_ranges(source)
    else:
        ranges = _java_callable_ranges(source)
    best = None
    for start, end in ranges:
        if start <= line <= end and (best is None or start > best[0]):
            best = (start, end)
    return best


def _python_callable_ranges(source: str) -> list[tuple[int, int]]:
    segments = scan_segments(source, PYTHON, strict=False)
    lines = source.split("\n")
    n_lines = len(lines)
    starts = line_starts(source)

    # Per-line facts: indent, whether the line has code content (comments and
    # blanks do not count), bracket depth at line start, and whether the
    # previous line ended with a code-level backslash.
    depth_at_start = [0] * (n_lines + 1)
    has_content = [False] * (n_lines + 1)
    ends_with_backslash = [False] * (n_lines + 1)
    depth = 0
    seg_iter = iter(segments)
    seg = next(seg_iter, None)
    cur_line = 1
    for pos, ch in enumerate(source):
        while seg is not None and pos >= seg.end:
            seg = next(seg_iter, None)
        in_kind = seg.kind if seg is not None and seg.start <= pos < seg.end else CODE
        if ch == "\n":
            cur_line += 1
            depth_at_start[cur_line] = depth
            continue
        if in_kind == CODE:
            if ch in "([{":
                depth += 1
            elif ch in ")]}":
                depth = max(0, depth - 1)
            if ch == "\\" and (pos + 1 == len(source) or source[pos + 1] == "\n"):
                ends_with_backslash[cur_line] = True
        if in_kind != COMMENT and ch not in " \t\r":
            if not (in_kind == CODE and ch == "\\"):
                has_content[cur_line] = True

    def indent_of(ln: int) -> int:
        text = lines[ln - 1]
        stripped = text.lstrip(" \t")
        return len(text) - len(stripped)

    joined = [False] * (n_lines + 1)
    for ln in range(2, n_lines + 1):
        joined[ln] = depth_at_start[ln] > 0 or ends_with_backslash[ln - 1]

    def logical_start(ln: int) -> int:
        while ln > 1 and joined[ln]:
            ln -= 1
        return ln

    def_lines = []
    for seg in segments:
        if seg.kind != CODE:
            continue
        for m in _PY_DEF_RE.finditer(source, seg.start, seg.end):
            def_lines.append(line_of_offset(starts, m.start()))

    ranges = []
    for dl in def_lines:
        base = logical_start(dl)
        base_indent = indent_of(base)
        last = dl
        ln = dl + 1
        while ln <= n_lines:
            if joined[ln]:
                last = max(last, ln) if has_content[logical_start(ln)] or has_content[ln] else last
                ln += 1
                continue
            if not has_content[ln]:
                ln += 1
                continue
            if indent_of(ln) <= base_indent:
                break
            last = ln
            ln += 1
        ranges.append((dl, last))
    return ranges


def _JAVA_tokens(source: str, segments: list[Segment]) -> list[tuple[str, int, int]]:
    starts = line_starts(source)
    tok_re = re.compile(r"(?:[^\W\d]|\$)(?:\w|\$)*|[(){};,.@]")
    toks = []
    for seg in segments:
        if seg.kind != CODE:
            continue
        for m in tok_re.finditer(source, seg.start, seg.end):
            toks.append((m.group(), m.start(), line_of_offset(starts, m.start())))
    return toks


def _java_callable_ranges(source: str) -> list[tuple[int, int]]:
    segments = scan_segments(source, JAVA, strict=False)
    toks = _JAVA_tokens(source, segments)
    ranges = []
    n = len(toks)
    for i, (text, _, line) in enumerate(toks):
        if not (text[0].isalpha() or text[0] in "_$") or text in JAVA_KEYWORDS:
            continue
        if i + 1 >= n or toks[i + 1][0] != "(":
            continue
        prev = toks[i - 1][0] if i > 0 else ""
        if prev in ("new", "."):
            continue  # anonymous class body or qualified call
        close = _match_token(toks, i + 1, "(", ")")
        if close == -1:
            continue
        j = close + 1
        if j < n and toks[j][0] == "throws":
            j += 1
            while j < n and (toks[j][0] == "," or _is_java_name(toks[j][0])):
                j += 1
        if j >= n or toks[j][0] != "{":
            continue
        body_close = _match_token(toks, j, "{", "}")
        if body_close == -1:
            continue
        ranges.append((line, toks[body_close][2]))
    return ranges


def _is_java_name(text: str) -> bool:
    return bool(text) and (text[0].isalpha() or text[0] in "_$")


def _match_token(toks: list[tuple[str, int, int]], open_idx: int, opener: str, closer: str) -> int:
    depth = 0
    for k in range(open_idx, len(toks)):
        t = toks[k][0]
        if t == opener:
            depth += 1
        elif t == closer:
            depth -= 1
            if depth == 0:
                return k
    return -1
