"""Recursive-descent parser for pipeline scripts.

Never raises on malformed input: every problem is reported as a
positioned diagnostic with the offending token and an expected set, and
parsing resynchronizes at statement boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast
from .ast import Diagnostic
from .lexer import Token, tokenize

STAGE_KINDS = ("scene", "entity", "pixel")
MAX_DEPTH = 200

_COMPARISONS = ("<", "<=", ">", ">=", "==", "!=")


@dataclass
class ParseResult:
    script: ast.PipelineScript
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def parse(source: str) -> ParseResult:
    return _Parser(tokenize(source)).parse_script()


class _Depth(Exception):
    pass


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diags: list[Diagnostic] = []
        self.depth = 0
        self.block_depth = 0

    # -- token plumbing -----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        i = min(self.pos + ahead, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if self.pos < len(self.tokens) - 1:
            self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            return self.advance()
        return None

    def error(self, message: str, expected: tuple[str, ...] = (), tok: Token | None = None) -> None:
        tok = tok or self.peek()
        shown = tok.text if tok.kind != "EOF" else "<end of input>"
        self.diags.append(Diagnostic(message, tok.line, tok.col, token=shown, expected=expected))

    def expect(self, kind: str, text: str | None = None, what: str = "") -> Token | None:
        tok = self.accept(kind, text)
        if tok is None:
            want = text or what or kind
            self.error(f"expected {want}", expected=(want,))
        return tok

    # -- grammar -------------------------------------------------------------

    def parse_script(self) -> ParseResult:
        stages: list[ast.StageBlock] = []
        seen: set[str] = set()
        while not self.at("EOF"):
            if self.at("KW", "stage"):
                block = self.parse_stage()
                if block is not None:
                    if block.kind in seen:
                        self.diags.append(
                            Diagnostic(
                                f"duplicate {block.kind} stage block",
                                block.line,
                                block.col,
                                token="stage",
                            )
                        )
                    else:
                        seen.add(block.kind)
                        stages.append(block)
            else:
                self.error("expected a stage block", expected=("stage",))
                self.synchronize(top_level=True)
        script = ast.PipelineScript(stages=stages)
        return ParseResult(script=script, diagnostics=self.diags)

    def parse_stage(self) -> ast.StageBlock | None:
        kw = self.expect("KW", "stage")
        kind_tok = self.peek()
        if kind_tok.kind == "IDENT" and kind_tok.text in STAGE_KINDS:
            self.advance()
        else:
            self.error("expected stage kind", expected=STAGE_KINDS)
            self.synchronize(top_level=True)
            return None
        body = self.parse_block()
        if body is None:
            return None
        return ast.StageBlock(kind=kind_tok.text, body=body, line=kw.line, col=kw.col)

    def parse_block(self) -> list | None:
        self.block_depth += 1
        try:
            if self.block_depth > 64:
                raise _Depth()
            if self.expect("OP", "{", "'{'") is None:
                self.synchronize()
                return None
            body: list = []
            while not self.at("OP", "}") and not self.at("EOF"):
                before = self.pos
                stmt = self.parse_stmt()
                if stmt is not None:
                    body.append(stmt)
                if self.pos == before:
                    self.advance()  # malformed token: always make progress
            if self.expect("OP", "}", "'}'") is None:
                return body
            return body
        finally:
            self.block_depth -= 1

    def parse_stmt(self):
        tok = self.peek()
        try:
            self.depth = 0
            if tok.kind == "KW" and tok.text == "let":
                return self.parse_let()
            if tok.kind == "KW" and tok.text == "skip":
                self.advance()
                return ast.Skip(line=tok.line, col=tok.col)
            if tok.kind == "KW" and tok.text == "if":
                return self.parse_if()
            if tok.kind == "KW" and tok.text == "for":
                return self.parse_for()
            expr = self.parse_expr()
            if expr is None:
                self.synchronize()
                return None
            if self.at("OP", "="):
                eq = self.advance()
                if not isinstance(expr, (ast.Name, ast.FieldAccess)):
                    self.error("assignment target must be a name or field", tok=eq)
                    self.synchronize()
                    return None
                value = self.parse_expr()
                if value is None:
                    self.synchronize()
                    return None
                return ast.Assign(target=expr, expr=value, line=tok.line, col=tok.col)
            return ast.ExprStmt(expr=expr, line=tok.line, col=tok.col)
        except _Depth:
            self.error("nesting too deep")
            self.synchronize()
            return None

    def parse_let(self):
        kw = self.advance()
        name = self.expect("IDENT", what="identifier")
        if name is None:
            self.synchronize()
            return None
        if self.expect("OP", "=", "'='") is None:
            self.synchronize()
            return None
        expr = self.parse_expr()
        if expr is None:
            self.synchronize()
            return None
        return ast.Let(name=name.text, expr=expr, line=kw.line, col=kw.col)

    def parse_if(self):
        kw = self.advance()
        cond = self.parse_expr()
        if cond is None:
            self.synchronize()
            return None
        then = self.parse_block()
        if then is None:
            return None
        orelse = None
        if self.at("KW", "else"):
            self.advance()
            orelse = self.parse_block()
            if orelse is None:
                return None
        return ast.If(cond=cond, then=then, orelse=orelse, line=kw.line, col=kw.col)

    def parse_for(self):
        kw = self.advance()
        var = self.expect("IDENT", what="loop variable")
        if var is None:
            self.synchronize()
            return None
        if self.expect("KW", "in", "'in'") is None:
            self.synchronize()
            return None
        iterable = self.parse_expr()
        if iterable is None:
            self.synchronize()
            return None
        body = self.parse_block()
        if body is None:
            return None
        return ast.For(var=var.text, iterable=iterable, body=body, line=kw.line, col=kw.col)

    def synchronize(self, top_level: bool = False) -> None:
        """Skip to the next plausible statement or stage boundary."""
        starters = {"let", "if", "for", "skip", "stage", "else"}
        guard = self.pos
        while not self.at("EOF"):
            tok = self.peek()
            if tok.kind == "OP" and tok.text == "}" and not top_level:
                return
            if tok.kind == "KW" and tok.text in starters:
                if tok.text == "stage" or not top_level:
                    return
            self.advance()
        if self.pos == guard and not self.at("EOF"):
            self.advance()

    # -- expressions ----------------------------------------------------------

    def _deeper(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise _Depth()

    def parse_expr(self):
        self._deeper()
        try:
            return self.parse_or()
        finally:
            self.depth -= 1

    def parse_or(self):
        left = self.parse_and()
        while left is not None and self.at("KW", "or"):
            op = self.advance()
            right = self.parse_and()
            if right is None:
                return None
            left = ast.BinOp(op="or", left=left, right=right, line=op.line, col=op.col)
        return left

    def parse_and(self):
        left = self.parse_not()
        while left is not None and self.at("KW", "and"):
            op = self.advance()
            right = self.parse_not()
            if right is None:
                return None
            left = ast.BinOp(op="and", left=left, right=right, line=op.line, col=op.col)
        return left

    def parse_not(self):
        if self.at("KW", "not"):
            op = self.advance()
            self._deeper()
            try:
                operand = self.parse_not()
            finally:
                self.depth -= 1
            if operand is None:
                return None
            return ast.UnaryOp(op="not", operand=operand, line=op.line, col=op.col)
        return self.parse_comparison()

    def parse_comparison(self):
        left = self.parse_additive()
        while left is not None and self.peek().kind == "OP" and self.peek().text in _COMPARISONS:
            op = self.advance()
            right = self.parse_additive()
            if right is None:
                return None
            left = ast.BinOp(op=op.text, left=left, right=right, line=op.line, col=op.col)
        return left

    def parse_additive(self):
        left = self.parse_multiplicative()
        while left is not None and self.peek().kind == "OP" and self.peek().text in ("+", "-"):
            op = self.advance()
            right = self.parse_multiplicative()
            if right is None:
                return None
            left = ast.BinOp(op=op.text, left=left, right=right, line=op.line, col=op.col)
        return left

    def parse_multiplicative(self):
        left = self.parse_unary()
        while left is not None and self.peek().kind == "OP" and self.peek().text in ("*", "/"):
            op = self.advance()
            right = self.parse_unary()
            if right is None:
                return None
            left = ast.BinOp(op=op.text, left=left, right=right, line=op.line, col=op.col)
        return left

    def parse_unary(self):
        if self.at("OP", "-"):
            op = self.advance()
            self._deeper()
            try:
                operand = self.parse_unary()
            finally:
                self.depth -= 1
            if operand is None:
                return None
            return ast.UnaryOp(op="-", operand=operand, line=op.line, col=op.col)
        return self.parse_postfix()

    def parse_postfix(self):
        expr = self.parse_primary()
        while expr is not None:
            if self.at("OP", "."):
                dot = self.advance()
                name = self.expect("IDENT", what="field name")
                if name is None:
                    return None
                expr = ast.FieldAccess(obj=expr, name=name.text, line=dot.line, col=dot.col)
            elif self.at("OP", "("):
                call = self.parse_call(expr)
                if call is None:
                    return None
                expr = call
            else:
                break
        return expr

    def parse_call(self, func):
        open_tok = self.advance()
        args: list = []
        named: list = []
        if not self.at("OP", ")"):
            while True:
                if self.peek().kind == "IDENT" and self.peek(1).kind == "OP" and self.peek(1).text == ":":
                    key = self.advance()
                    self.advance()  # ':'
                    value = self.parse_expr()
                    if value is None:
                        return None
                    named.append((key.text, value))
                else:
                    value = self.parse_expr()
                    if value is None:
                        return None
                    if named:
                        self.error("positional argument after named argument", tok=open_tok)
                    args.append(value)
                if not self.accept("OP", ","):
                    break
        if self.expect("OP", ")", "')'") is None:
            return None
        return ast.Call(func=func, args=args, named=named, line=open_tok.line, col=open_tok.col)

    def parse_primary(self):
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            return ast.Number(value=tok.value, line=tok.line, col=tok.col)
        if tok.kind == "STRING":
            self.advance()
            return ast.String(value=tok.value, line=tok.line, col=tok.col)
        if tok.kind == "KW" and tok.text in ("true", "false"):
            self.advance()
            return ast.Bool(value=tok.text == "true", line=tok.line, col=tok.col)
        if tok.kind == "IDENT":
            self.advance()
            return ast.Name(ident=tok.text, line=tok.line, col=tok.col)
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            inner = self.parse_expr()
            if inner is None:
                return None
            if self.expect("OP", ")", "')'") is None:
                return None
            return inner
        if tok.kind == "OP" and tok.text == "[":
            self.advance()
            items: list = []
            if not self.at("OP", "]"):
                while True:
                    item = self.parse_expr()
                    if item is None:
                        return None
                    items.append(item)
                    if not self.accept("OP", ","):
                        break
            if self.expect("OP", "]", "']'") is None:
                return None
            return ast.ListLit(items=items, line=tok.line, col=tok.col)
        if tok.kind == "OP" and tok.text == "{":
            self.advance()
            fields: list = []
            if not self.at("OP", "}"):
                while True:
                    key = self.expect("IDENT", what="record key")
                    if key is None:
                        return None
                    if self.expect("OP", ":", "':'") is None:
                        return None
                    value = self.parse_expr()
                    if value is None:
                        return None
                    fields.append((key.text, value))
                    if not self.accept("OP", ","):
                        break
            if self.expect("OP", "}", "'}'") is None:
                return None
            return ast.RecordLit(fields=fields, line=tok.line, col=tok.col)
        if tok.kind == "ERROR":
            self.advance()
            self.diags.append(Diagnostic(str(tok.value), tok.line, tok.col, token=tok.text))
            return None
        self.error("expected expression", expected=("expression",))
        return None
