"""Lexer for the `.mtp` source language."""

import math
import re

from .ast_nodes import Token, TokenKind
from .errors import LexError

KEYWORDS = frozenset({
    "import", "class", "def", "by", "let", "print", "return", "if", "else",
    "int", "float", "str", "bool",
})

BOOL_LITERALS = {"true": True, "false": False}

# Longest first so "->" wins over "-".
PUNCTUATION = ("->", "==", "!=", "<=", ">=",
               "(", ")", "{", "}", "[", "]", ",", ":", ".", "=", "+", "-", "*", "/", "<", ">", ";")

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
NUMBER_RE = re.compile(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")

ESCAPES = {"n": "\n", '"': '"', "\\": "\\"}
"""The only escapes string literals support."""


def quote_string(text: str) -> str:
    """Render text as a string literal using the language's escape rules."""
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{escaped}"'


def number_value(lexeme: str):
    """Decode a numeric lexeme; a dot or exponent makes it a float."""
    if any(c in lexeme for c in ".eE"):
        return float(lexeme)
    return int(lexeme)


def tokenize(source: str) -> list[Token]:
    """Split source text into tokens.

    Args:
        source: Program text

    Returns:
        Token list, always ending with an EOF token

    Raises:
        LexError: On an illegal character or an unterminated string
    """
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    length = len(source)

    while pos < length:
        ch = source[pos]
        column = pos - line_start + 1

        if ch == "\n":
            pos += 1
            line += 1
            line_start = pos
            continue
        if ch in " \t\r":
            pos += 1
            continue
        if ch == "#":
            while pos < length and source[pos] != "\n":
                pos += 1
            continue

        if ch == '"':
            value, end = _scan_string(source, pos, line, column)
            tokens.append(Token(TokenKind.LITERAL, source[pos:end], line, column, value))
            pos = end
            continue

        if ch.isdigit():
            match = NUMBER_RE.match(source, pos)
            lexeme = match.group(0)
            value = number_value(lexeme)
            if isinstance(value, float) and not math.isfinite(value):
                raise LexError(line, column, f"number out of range: {lexeme}")
            tokens.append(Token(TokenKind.LITERAL, lexeme, line, column, value))
            pos = match.end()
            continue

        match = IDENT_RE.match(source, pos)
        if match:
            word = match.group(0)
            if word in BOOL_LITERALS:
                tokens.append(Token(TokenKind.LITERAL, word, line, column, BOOL_LITERALS[word]))
            elif word in KEYWORDS:
                tokens.append(Token(TokenKind.KEYWORD, word, line, column))
            else:
                tokens.append(Token(TokenKind.IDENTIFIER, word, line, column))
            pos = match.end()
            continue

        for punct in PUNCTUATION:
            if source.startswith(punct, pos):
                tokens.append(Token(TokenKind.PUNCTUATION, punct, line, column))
                pos += len(punct)
                break
        else:
            raise LexError(line, column, f"illegal character {ch!r}")

    tokens.append(Token(TokenKind.EOF, "", line, pos - line_start + 1))
    return tokens


def _scan_string(source: str, start: int, line: int, column: int) -> tuple[str, int]:
    """Scan a string literal starting at the opening quote.

    Returns:
        Tuple of (decoded text, index just past the closing quote)
    """
    chars = []
    pos = start + 1
    while pos < len(source):
        ch = source[pos]
        if ch == '"':
            return "".join(chars), pos + 1
        if ch == "\n":
            break
        if ch == "\\":
            nxt = source[pos + 1] if pos + 1 < len(source) else ""
            if nxt not in ESCAPES:
                raise LexError(line, column + (pos - start), f"unsupported escape '\\{nxt}'")
            chars.append(ESCAPES[nxt])
            pos += 2
            continue
        chars.append(ch)
        pos += 1
    raise LexError(line, column, "unterminated string")
