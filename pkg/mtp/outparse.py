"""Typed parsing of model output.

Only the constructor-expression grammar produced by render_value is
understood (literals, lists, maps and ``ClassName(field=value, ...)``);
nothing in the text is ever evaluated.
"""

import logging
import math
import re
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .ast_nodes import ListType, MapType, NamedType, PrimitiveType, TypeExpr
from .lexer import ESCAPES, IDENT_RE, NUMBER_RE, number_value
from .values import (
    BoolValue, FloatValue, IntValue, ListValue, MapValue, ObjectValue, SchemaSource, StrValue,
    Value, check_type,
)

logger = logging.getLogger(__name__)

FAIL_KINDS = ("syntax", "unknown-class", "missing-field", "extra-field", "type-mismatch")

BOOL_WORDS = {"true": True, "false": False, "True": True, "False": False}

MAX_NESTING = 256
"""Deepest list, map or object nesting the reader accepts."""

_FENCE_RE = re.compile(r"```[A-Za-z0-9_-]*[ \t]*\n?(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class ParseOk:
    value: Value

    @property
    def ok(self) -> bool:
        return True


@dataclass(frozen=True)
class ParseFail:
    diagnostic: str
    kind: str
    path: str = "$"
    expected: str = ""
    found: str = ""

    @property
    def ok(self) -> bool:
        return False


ParseOutcome = Union[ParseOk, ParseFail]


def _fail(kind: str, path: str, expected: str, found: str) -> ParseFail:
    return ParseFail(f"{kind} at {path}: expected {expected}, found {found}", kind, path, expected, found)


# -------------------- reading --------------------
@dataclass(frozen=True)
class _Node:
    """An untyped expression read from text."""

    kind: str
    """int, float, str, bool, list, map or object."""
    value: object = None
    items: tuple = ()
    class_name: str = ""

    def describe(self) -> str:
        if self.kind == "object":
            return f"{self.class_name}(...)"
        if self.kind in ("list", "map"):
            return self.kind
        text = repr(self.value) if self.kind == "str" else str(self.value)
        return f"{self.kind} {text[:40]}"


class _SyntaxIssue(Exception):
    def __init__(self, pos: int, message: str):
        self.pos = pos
        super().__init__(message)


class _Reader:
    """Recursive-descent reader for one constructor expression."""

    def __init__(self, text: str):
        self.text = text

    def skip_ws(self, pos: int) -> int:
        while pos < len(self.text) and self.text[pos] in " \t\r\n":
            pos += 1
        return pos

    def read(self, pos: int, depth: int = 0) -> tuple[_Node, int]:
        pos = self.skip_ws(pos)
        if pos >= len(self.text):
            raise _SyntaxIssue(pos, "unexpected end of text")
        if depth > MAX_NESTING:
            raise _SyntaxIssue(pos, f"nesting deeper than {MAX_NESTING}")
        ch = self.text[pos]
        if ch == '"':
            return self.read_string(pos)
        if ch == "-" or ch.isdigit():
            return self.read_number(pos)
        if ch == "[":
            items, pos = self.read_sequence(pos + 1, "]", depth + 1)
            return _Node("list", items=tuple(items)), pos
        if ch == "{":
            return self.read_map(pos + 1, depth + 1)
        match = IDENT_RE.match(self.text, pos)
        if match is None:
            raise _SyntaxIssue(pos, f"unexpected character {ch!r}")
        word = match.group(0)
        pos = match.end()
        if word in BOOL_WORDS:
            return _Node("bool", BOOL_WORDS[word]), pos
        after = self.skip_ws(pos)
        if after < len(self.text) and self.text[after] == "(":
            return self.read_object(word, after + 1, depth + 1)
        raise _SyntaxIssue(pos, f"bare name {word!r}")

    def read_string(self, pos: int) -> tuple[_Node, int]:
        chars = []
        i = pos + 1
        while i < len(self.text):
            ch = self.text[i]
            if ch == '"':
                return _Node("str", "".join(chars)), i + 1
            if ch == "\n":
                break
            if ch == "\\":
                nxt = self.text[i + 1] if i + 1 < len(self.text) else ""
                if nxt not in ESCAPES:
                    raise _SyntaxIssue(i, "unsupported escape")
                chars.append(ESCAPES[nxt])
                i += 2
                continue
            chars.append(ch)
            i += 1
        raise _SyntaxIssue(pos, "unterminated string")

    def read_number(self, pos: int) -> tuple[_Node, int]:
        negative = self.text[pos] == "-"
        start = pos + 1 if negative else pos
        match = NUMBER_RE.match(self.text, start)
        if match is None:
            raise _SyntaxIssue(pos, "malformed number")
        value = number_value(match.group(0))
        if isinstance(value, float) and not math.isfinite(value):
            raise _SyntaxIssue(pos, "number out of range")
        if negative:
            value = -value
        return _Node("float" if isinstance(value, float) else "int", value), match.end()

    def read_sequence(self, pos: int, close: str, depth: int) -> tuple[list[_Node], int]:
        items = []
        pos = self.skip_ws(pos)
        if pos < len(self.text) and self.text[pos] == close:
            return items, pos + 1
        while True:
            node, pos = self.read(pos, depth)
            items.append(node)
            pos = self.expect_either(pos, ",", close)
            if self.text[pos - 1] == close:
                return items, pos

    def read_map(self, pos: int, depth: int) -> tuple[_Node, int]:
        pairs = []
        pos = self.skip_ws(pos)
        if pos < len(self.text) and self.text[pos] == "}":
            return _Node("map", items=()), pos + 1
        while True:
            key, pos = self.read(pos, depth)
            pos = self.expect_either(pos, ":")
            value, pos = self.read(pos, depth)
            pairs.append((key, value))
            pos = self.expect_either(pos, ",", "}")
            if self.text[pos - 1] == "}":
                return _Node("map", items=tuple(pairs)), pos

    def read_object(self, class_name: str, pos: int, depth: int) -> tuple[_Node, int]:
        fields: list[tuple[str, _Node]] = []
        pos = self.skip_ws(pos)
        if pos < len(self.text) and self.text[pos] == ")":
            return _Node("object", items=(), class_name=class_name), pos + 1
        while True:
            pos = self.skip_ws(pos)
            match = IDENT_RE.match(self.text, pos)
            if match is None:
                raise _SyntaxIssue(pos, "expected field=value")
            name = match.group(0)
            pos = self.expect_either(match.end(), "=")
            if any(existing == name for existing, _ in fields):
                raise _SyntaxIssue(pos, f"field {name!r} given twice")
            value, pos = self.read(pos, depth)
            fields.append((name, value))
            pos = self.expect_either(pos, ",", ")")
            if self.text[pos - 1] == ")":
                return _Node("object", items=tuple(fields), class_name=class_name), pos

    def expect_either(self, pos: int, *options: str) -> int:
        pos = self.skip_ws(pos)
        if pos < len(self.text) and self.text[pos] in options:
            return pos + 1
        wanted = " or ".join(repr(o) for o in options)
        raise _SyntaxIssue(pos, f"expected {wanted}")


def _read_whole(text: str) -> Optional[_Node]:
    reader = _Reader(text)
    try:
        node, end = reader.read(0)
    except _SyntaxIssue:
        return None
    return node if reader.skip_ws(end) == len(text) else None


def _candidate_starts(text: str):
    for i, ch in enumerate(text):
        if ch in '"[{-' or ch.isdigit() or ch.isalpha() or ch == "_":
            prev = text[i - 1] if i else ""
            if (ch.isalnum() or ch == "_") and (prev.isalnum() or prev == "_"):
                continue
            yield i


def _extract_nodes(text: str) -> list[_Node]:
    """Expressions to try, best first.

    The whole trimmed text, then the first code fence, then every maximal
    expression found scanning left to right.
    """
    stripped = text.strip()
    whole = _read_whole(stripped)
    if whole is not None:
        return [whole]
    fence = _FENCE_RE.search(stripped)
    if fence:
        fenced = _read_whole(fence.group(1).strip())
        if fenced is not None:
            return [fenced]
    reader = _Reader(stripped)
    nodes = []
    resume = 0
    for start in _candidate_starts(stripped):
        if start < resume:
            continue
        try:
            node, resume = reader.read(start)
        except _SyntaxIssue:
            continue
        nodes.append(node)
    return nodes


# -------------------- conforming --------------------
class _Conflict(Exception):
    def __init__(self, outcome: ParseFail):
        self.outcome = outcome


def _conform(node: _Node, t: TypeExpr, schemas: SchemaSource, path: str,
             provided: Optional[Mapping[str, Value]] = None) -> Value:
    if isinstance(t, PrimitiveType):
        if node.kind != t.name:
            raise _Conflict(_fail("type-mismatch", path, t.name, node.describe()))
        return {"int": IntValue, "float": FloatValue, "str": StrValue, "bool": BoolValue}[t.name](node.value)

    if isinstance(t, ListType):
        if node.kind != "list":
            raise _Conflict(_fail("type-mismatch", path, str(t), node.describe()))
        return ListValue(tuple(_conform(item, t.element, schemas, f"{path}[{i}]")
                               for i, item in enumerate(node.items)))

    if isinstance(t, MapType):
        if node.kind != "map":
            raise _Conflict(_fail("type-mismatch", path, str(t), node.describe()))
        pairs = []
        seen = set()
        for i, (key_node, value_node) in enumerate(node.items):
            key = _conform(key_node, t.key, schemas, f"{path}.key[{i}]")
            if key in seen:
                raise _Conflict(_fail("syntax", f"{path}.key[{i}]", "distinct map keys", "a repeated key"))
            seen.add(key)
            pairs.append((key, _conform(value_node, t.value, schemas, f"{path}[{i}]")))
        return MapValue(tuple(pairs))

    if isinstance(t, NamedType):
        declared = schemas.fields_of(t.name)
        if declared is None:
            raise _Conflict(_fail("unknown-class", path, t.name, "no schema for it"))
        if node.kind != "object":
            raise _Conflict(_fail("type-mismatch", path, t.name, node.describe()))
        if node.class_name != t.name:
            kind = "type-mismatch" if schemas.fields_of(node.class_name) is not None else "unknown-class"
            raise _Conflict(_fail(kind, path, t.name, node.class_name))
        given = dict(node.items)
        declared_names = [name for name, _ in declared]
        for name, _ in node.items:
            if name not in declared_names:
                raise _Conflict(_fail("extra-field", f"{path}.{name}", "no such field", name))
        fields = []
        for name, field_type in declared:
            if provided is not None and name in provided:
                fields.append((name, provided[name]))
            elif name in given:
                fields.append((name, _conform(given[name], field_type, schemas, f"{path}.{name}")))
            else:
                raise _Conflict(_fail("missing-field", f"{path}.{name}", str(field_type), "nothing"))
        return ObjectValue(t.name, tuple(fields))

    raise TypeError(f"not a type expression: {t!r}")


def parse_typed_output(text: str, expected: TypeExpr, schemas: SchemaSource,
                       provided: Optional[Mapping[str, Value]] = None) -> ParseOutcome:
    """Convert model output text into a value of the expected type.

    Args:
        text: Raw completion text
        expected: Type the value must have
        schemas: Class schemas (an MT-IR entry or the registry)
        provided: For object initialization, the developer-supplied field
            values; they replace whatever the model wrote for those fields

    Returns:
        ParseOk with a value that passed check_type, or ParseFail with a
        stable diagnostic. Never raises for bad text.
    """
    nodes = _extract_nodes(text)
    if not nodes:
        snippet = text.strip()[:40] or "empty text"
        return _fail("syntax", "$", f"a {expected} value", repr(snippet) if text.strip() else snippet)

    first_failure: Optional[ParseFail] = None
    for node in nodes:
        try:
            value = _conform(node, expected, schemas, "$", provided)
        except _Conflict as conflict:
            first_failure = first_failure or conflict.outcome
            continue
        report = check_type(value, expected, schemas)
        if not report.ok:
            mismatch = report.first
            return _fail("type-mismatch", mismatch.path, mismatch.expected, mismatch.found)
        return ParseOk(value)

    logger.debug("output rejected: %s", first_failure.diagnostic)
    return first_failure
