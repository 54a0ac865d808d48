"""Line-oriented nested key-value documents.

A deliberately small YAML subset, enough for manifests and campaign
specs while staying exactly specified (see docs/cam-grammar.md):

* two-space indentation, no tabs;
* ``key: value`` scalar entries, ``key:`` opening a nested block;
* ``- `` items forming lists of scalars or of mappings (first pair may
  ride on the dash line);
* ``#`` comments (full-line, or after whitespace outside quotes) and
  blank lines ignored;
* scalars are bare (trimmed, nonempty) or double-quoted with ``\\``,
  ``\"``, ``\n``, ``\t`` escapes.

Every scalar parses to ``str``; schema layers own type conversion.
``parse_document`` is total over arbitrary text: anything outside the
grammar raises ``DocumentSyntaxError`` with a line/column position, and
nothing else escapes.
"""

from __future__ import annotations

import re

_KEY_RE = re.compile(r"[A-Za-z0-9_-]+")
# no ':' here: a bare scalar containing one could re-parse as an entry
_BARE_SAFE_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_./@+-]*")


class DocumentSyntaxError(ValueError):
    def __init__(self, line: int, col: int, message: str):
        self.line = line
        self.col = col
        super().__init__(f"line {line}, column {col}: {message}")


def _fail(line: int, col: int, message: str) -> None:
    raise DocumentSyntaxError(line, col, message)


class _Line:
    __slots__ = ("no", "depth", "text", "col")

    def __init__(self, no: int, depth: int, text: str, col: int):
        self.no = no          # 1-based source line
        self.depth = depth    # indentation level (2 spaces each)
        self.text = text      # content without indent
        self.col = col        # 1-based column of first content char


def _strip_inline_comment(text: str) -> str:
    """Cut at the first ``#`` that follows whitespace outside a quoted
    scalar.  An unterminated quote leaves the line untouched so the parser
    can point at it."""
    in_quote = False
    i = 0
    while i < len(text):
        ch = text[i]
        if in_quote:
            if ch == "\\":
                i += 2
                continue
            if ch == '"':
                in_quote = False
        elif ch == '"':
            in_quote = True
        elif ch == "#" and i > 0 and text[i - 1] in " \t":
            return text[:i].rstrip()
        i += 1
    return text


def _scan(text: str) -> list[_Line]:
    out: list[_Line] = []
    for no, raw in enumerate(text.split("\n"), 1):
        raw = raw.rstrip("\r")
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = len(raw) - len(raw.lstrip(" \t"))
        lead = raw[:indent]
        if "\t" in lead:
            _fail(no, lead.index("\t") + 1, "tab in indentation")
        if indent % 2:
            _fail(no, indent + 1, "indentation must be a multiple of two spaces")
        content = _strip_inline_comment(raw[indent:].rstrip())
        out.append(_Line(no, indent // 2, content, indent + 1))
    return out


def _parse_scalar(ln: _Line, text: str, col: int) -> str:
    if text.startswith('"'):
        value, end = _parse_quoted(ln, text, col)
        if text[end:].strip():
            _fail(ln.no, col + end, "unexpected text after closing quote")
        return value
    if '"' in text:
        _fail(ln.no, col + text.index('"'), "quote inside bare scalar")
    return text.strip()


def _parse_quoted(ln: _Line, text: str, col: int) -> tuple[str, int]:
    out: list[str] = []
    i = 1
    while i < len(text):
        ch = text[i]
        if ch == '"':
            return "".join(out), i + 1
        if ch == "\\":
            if i + 1 >= len(text):
                _fail(ln.no, col + i, "dangling escape")
            esc = text[i + 1]
            mapped = {"\\": "\\", '"': '"', "n": "\n", "t": "\t"}.get(esc)
            if mapped is None:
                _fail(ln.no, col + i, f"unknown escape '\\{esc}'")
            out.append(mapped)
            i += 2
            continue
        out.append(ch)
        i += 1
    _fail(ln.no, col + len(text), "unterminated quoted scalar")
    raise AssertionError("unreachable")


def _split_entry(ln: _Line, text: str, col: int) -> tuple[str, str | None]:
    """Split ``key: value`` / ``key:``; value None means a nested block."""
    m = _KEY_RE.match(text)
    if not m:
        _fail(ln.no, col, "expected a key")
    key = m.group(0)
    rest = text[m.end():]
    if rest == ":":
        return key, None
    if rest.startswith(": "):
        value = rest[2:].strip()
        if not value:
            _fail(ln.no, col + m.end() + 2, "empty value (quote it or nest)")
        return key, value
    if rest.startswith(":"):
        _fail(ln.no, col + m.end() + 1, "expected space after ':'")
    _fail(ln.no, col + m.end(), "expected ':' after key")
    raise AssertionError("unreachable")


def _looks_like_entry(text: str) -> bool:
    m = _KEY_RE.match(text)
    if not m:
        return False
    rest = text[m.end():]
    return rest == ":" or rest.startswith(": ")


class _Parser:
    def __init__(self, lines: list[_Line]):
        self.lines = lines
        self.pos = 0

    def peek(self) -> _Line | None:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def parse_block(self, depth: int, opened_by: _Line | None):
        ln = self.peek()
        if ln is None or ln.depth < depth:
            assert opened_by is not None
            _fail(opened_by.no, opened_by.col,
                  f"'{opened_by.text}' opens a block but nothing is nested")
        if ln.depth > depth:
            _fail(ln.no, ln.col, "unexpected indentation")
        if ln.text.startswith("- ") or ln.text == "-":
            return self.parse_list(depth)
        return self.parse_mapping(depth)

    def parse_mapping(self, depth: int) -> dict:
        out: dict = {}
        while True:
            ln = self.peek()
            if ln is None or ln.depth < depth:
                return out
            if ln.depth > depth:
                _fail(ln.no, ln.col, "unexpected indentation")
            if ln.text.startswith("- ") or ln.text == "-":
                _fail(ln.no, ln.col, "list item outside a list")
            key, value = _split_entry(ln, ln.text, ln.col)
            if key in out:
                _fail(ln.no, ln.col, f"duplicate key '{key}'")
            self.pos += 1
            if value is None:
                out[key] = self.parse_block(depth + 1, opened_by=ln)
            else:
                out[key] = _parse_scalar(ln, value, ln.col + len(key) + 2)

    def parse_list(self, depth: int) -> list:
        out: list = []
        while True:
            ln = self.peek()
            if ln is None or ln.depth < depth:
                if not out:
                    raise AssertionError("parse_list entered without items")
                return out
            if ln.depth > depth:
                _fail(ln.no, ln.col, "unexpected indentation")
            if ln.text == "-" or ln.text == "- ":
                _fail(ln.no, ln.col, "empty list item")
            if not ln.text.startswith("- "):
                _fail(ln.no, ln.col, "expected '- ' list item")
            body = ln.text[2:].strip()
            body_col = ln.col + 2
            self.pos += 1
            if _looks_like_entry(body):
                # Mapping item; first pair rides on the dash line, the rest
                # sit one level deeper.
                key, value = _split_entry(ln, body, body_col)
                item: dict = {}
                if value is None:
                    item[key] = self.parse_block(depth + 2, opened_by=ln)
                else:
                    item[key] = _parse_scalar(
                        ln, value, body_col + len(key) + 2
                    )
                rest = self.parse_mapping_items(depth + 1, item, ln)
                out.append(rest)
            else:
                out.append(_parse_scalar(ln, body, body_col))

    def parse_mapping_items(self, depth: int, item: dict, dash: _Line) -> dict:
        while True:
            ln = self.peek()
            if ln is None or ln.depth < depth:
                return item
            if ln.depth > depth:
                _fail(ln.no, ln.col, "unexpected indentation")
            if ln.text.startswith("- ") or ln.text == "-":
                return item
            key, value = _split_entry(ln, ln.text, ln.col)
            if key in item:
                _fail(ln.no, ln.col, f"duplicate key '{key}'")
            self.pos += 1
            if value is None:
                item[key] = self.parse_block(depth + 1, opened_by=ln)
            else:
                item[key] = _parse_scalar(ln, value, ln.col + len(key) + 2)


def parse_document(text: str) -> dict:
    """Parse a document into nested dicts/lists of string scalars.

    The top level must be a mapping.  Raises ``DocumentSyntaxError`` (and
    nothing else) on any input outside the grammar.
    """
    if not isinstance(text, str):
        raise TypeError("document must be a str")
    lines = _scan(text)
    if not lines:
        return {}
    first = lines[0]
    if first.depth != 0:
        _fail(first.no, first.col, "top level must not be indented")
    if first.text.startswith("- ") or first.text == "-":
        _fail(first.no, first.col, "top level must be a mapping, not a list")
    parser = _Parser(lines)
    result = parser.parse_mapping(0)
    leftover = parser.peek()
    if leftover is not None:
        _fail(leftover.no, leftover.col, "unexpected trailing content")
    return result


def _format_scalar(value) -> str:
    if isinstance(value, bool):
        return '"true"' if value else '"false"'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    if not isinstance(value, str):
        raise TypeError(f"cannot serialize scalar of type {type(value).__name__}")
    if value and _BARE_SAFE_RE.fullmatch(value):
        return value
    escaped = (value.replace("\\", "\\\\").replace('"', '\\"')
               .replace("\n", "\\n").replace("\t", "\\t"))
    return f'"{escaped}"'


def _emit(value, depth: int, out: list[str]) -> None:
    pad = "  " * depth
    if isinstance(value, dict):
        for key, sub in value.items():
            if not isinstance(key, str) or not _KEY_RE.fullmatch(key):
                raise ValueError(f"invalid key {key!r}")
            if isinstance(sub, (dict, list)):
                if not sub:
                    raise ValueError(f"key '{key}': empty blocks cannot be "
                                     "serialized, omit the key instead")
                out.append(f"{pad}{key}:")
                _emit(sub, depth + 1, out)
            else:
                out.append(f"{pad}{key}: {_format_scalar(sub)}")
    elif isinstance(value, list):
        for item in value:
            if isinstance(item, dict):
                if not item:
                    raise ValueError("empty mapping list item")
                pairs = list(item.items())
                key, sub = pairs[0]
                if isinstance(sub, (dict, list)):
                    out.append(f"{pad}- {key}:")
                    _emit(sub, depth + 2, out)
                else:
                    out.append(f"{pad}- {key}: {_format_scalar(sub)}")
                for key, sub in pairs[1:]:
                    if not isinstance(key, str) or not _KEY_RE.fullmatch(key):
                        raise ValueError(f"invalid key {key!r}")
                    ipad = "  " * (depth + 1)
                    if isinstance(sub, (dict, list)):
                        if not sub:
                            raise ValueError(f"key '{key}': empty blocks "
                                             "cannot be serialized")
                        out.append(f"{ipad}{key}:")
                        _emit(sub, depth + 2, out)
                    else:
                        out.append(f"{ipad}{key}: {_format_scalar(sub)}")
            elif isinstance(item, list):
                raise ValueError("nested lists are not representable")
            else:
                out.append(f"{pad}- {_format_scalar(item)}")
    else:
        raise AssertionError("emit called on a scalar")


def serialize_document(mapping: dict) -> str:
    """Render nested dicts/lists back to document text (LF line endings,
    insertion order preserved).  ``parse_document`` of the result yields
    the same structure with every scalar as ``str``."""
    if not isinstance(mapping, dict):
        raise TypeError("top level must be a dict")
    out: list[str] = []
    _emit(mapping, 0, out)
    return "\n".join(out) + ("\n" if out else "")
