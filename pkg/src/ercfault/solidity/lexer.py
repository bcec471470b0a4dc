"""Byte-oriented tokenizer for the supported Solidity subset.

Tokens carry byte offsets into the UTF-8 encoded source so that spans can be
used to splice the original text directly. Comments and whitespace are
skipped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError

IDENT = "ident"
NUMBER = "number"
STRING = "string"
PUNCT = "punct"
EOF = "eof"

_PUNCTUATORS = [
    ">>>=", "<<=", ">>=", ">>>", "**", "=>", "->", "==", "!=", "<=", ">=", "&&", "||",
    "++", "--", "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "<<", ">>",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "~", "&", "|", "^", "?", ":",
    ";", ",", ".", "(", ")", "{", "}", "[", "]",
]

_TOKEN_RE = re.compile(
    rb"""
    (?P<ws>[ \t\r\n\f\v]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<string>(?:unicode|hex)?(?:"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*'))
  | (?P<number>0[xX][0-9a-fA-F_]+|(?:\d[\d_]*(?:\.\d[\d_]*)?|\.\d[\d_]*)(?:[eE]-?\d[\d_]*)?)
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<punct>"""
    + b"|".join(re.escape(p.encode()) for p in _PUNCTUATORS)
    + rb""")
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int
    end: int
    line: int
    col: int

    def is_(self, text: str) -> bool:
        return self.text == text and self.kind in (IDENT, PUNCT)

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(data: bytes) -> list[Token]:
    """Split ``data`` into tokens, ending with a single EOF token."""
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    size = len(data)
    while pos < size:
        m = _TOKEN_RE.match(data, pos)
        if m is None:
            if data.startswith(b"/*", pos):
                raise ParseError("unterminated block comment", line, pos - line_start + 1, ("*/",))
            if data[pos : pos + 1] in (b'"', b"'"):
                raise ParseError("unterminated string literal", line, pos - line_start + 1, ())
            raise ParseError(
                f"unexpected character {data[pos:pos + 1]!r}", line, pos - line_start + 1, ()
            )
        kind = m.lastgroup
        end = m.end()
        if kind not in ("ws", "line_comment", "block_comment"):
            text = m.group().decode("utf-8")
            tokens.append(Token(kind, text, pos, end, line, pos - line_start + 1))
        newlines = data.count(b"\n", pos, end)
        if newlines:
            line += newlines
            line_start = data.rindex(b"\n", pos, end) + 1
        pos = end
    tokens.append(Token(EOF, "", size, size, line, size - line_start + 1))
    return tokens
