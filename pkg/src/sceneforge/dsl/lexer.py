"""Regex-driven tokenizer. Never raises on malformed input: unknown bytes
and unterminated strings become ERROR tokens for the parser to report."""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass

KEYWORDS = {"stage", "let", "if", "else", "for", "in", "skip", "true", "false", "and", "or", "not"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:\\.|[^"\\\n])*")
  | (?P<badstring>"(?:\\.|[^"\\\n])*)
  | (?P<op><=|>=|==|!=|[<>+\-*/=.,:(){}\[\]])
  | (?P<bad>.)
    """,
    re.VERBOSE | re.DOTALL,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\", "r": "\r"}


@dataclass
class Token:
    kind: str  # NUMBER STRING IDENT KW OP ERROR EOF
    text: str
    value: object
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    newlines = [i for i, ch in enumerate(source) if ch == "\n"]

    def linecol(offset: int) -> tuple[int, int]:
        line = bisect.bisect_right(newlines, offset - 1)
        start = newlines[line - 1] + 1 if line > 0 else 0
        return line + 1, offset - start + 1

    tokens: list[Token] = []
    for m in _TOKEN_RE.finditer(source):
        kind = m.lastgroup
        if kind in ("ws", "nl", "comment"):
            continue
        text = m.group()
        line, col = linecol(m.start())
        if kind == "number":
            tokens.append(Token("NUMBER", text, float(text), line, col))
        elif kind == "ident":
            if text in KEYWORDS:
                tokens.append(Token("KW", text, text, line, col))
            else:
                tokens.append(Token("IDENT", text, text, line, col))
        elif kind == "string":
            tokens.append(Token("STRING", text, _unescape(text[1:-1]), line, col))
        elif kind == "badstring":
            tokens.append(Token("ERROR", text, "unterminated string", line, col))
        elif kind == "op":
            tokens.append(Token("OP", text, text, line, col))
        else:
            tokens.append(Token("ERROR", text, f"unexpected character {text!r}", line, col))
    end_line, end_col = linecol(len(source))
    tokens.append(Token("EOF", "", None, end_line, end_col))
    return tokens


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)
