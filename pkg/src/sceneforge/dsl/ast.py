"""Pipeline-script AST.

Positions are carried on every node but excluded from equality, so a
parse / pretty-print round trip compares equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Diagnostic:
    message: str
    line: int
    col: int
    token: str | None = None
    expected: tuple[str, ...] = ()

    def __str__(self) -> str:
        loc = f"{self.line}:{self.col}"
        parts = [f"{loc}: {self.message}"]
        if self.token is not None:
            parts.append(f"at {self.token!r}")
        if self.expected:
            parts.append("expected " + " | ".join(self.expected))
        return " ".join(parts)


@dataclass
class Node:
    line: int = field(default=0, compare=False, kw_only=True)
    col: int = field(default=0, compare=False, kw_only=True)


# -- expressions -------------------------------------------------------------

@dataclass
class Number(Node):
    value: float


@dataclass
class String(Node):
    value: str


@dataclass
class Bool(Node):
    value: bool


@dataclass
class Name(Node):
    ident: str


@dataclass
class ListLit(Node):
    items: list


@dataclass
class RecordLit(Node):
    fields: list  # (name, expr) pairs in source order


@dataclass
class FieldAccess(Node):
    obj: object
    name: str


@dataclass
class Call(Node):
    func: object  # Name or FieldAccess
    args: list
    named: list  # (name, expr) pairs


@dataclass
class BinOp(Node):
    op: str
    left: object
    right: object


@dataclass
class UnaryOp(Node):
    op: str  # "-" | "not"
    operand: object


# -- statements ---------------------------------------------------------------

@dataclass
class Let(Node):
    name: str
    expr: object


@dataclass
class Assign(Node):
    target: object  # Name or FieldAccess
    expr: object


@dataclass
class If(Node):
    cond: object
    then: list
    orelse: list | None = None


@dataclass
class For(Node):
    var: str
    iterable: object
    body: list = field(default_factory=list)


@dataclass
class Skip(Node):
    pass


@dataclass
class ExprStmt(Node):
    expr: object


@dataclass
class StageBlock(Node):
    kind: str  # scene | entity | pixel
    body: list = field(default_factory=list)


@dataclass
class PipelineScript(Node):
    stages: list = field(default_factory=list)

    def stage(self, kind: str) -> StageBlock | None:
        for s in self.stages:
            if s.kind == kind:
                return s
        return None


# -- pretty printer ------------------------------------------------------------

def _fmt_number(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _fmt_string(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


def _expr(e) -> str:
    if isinstance(e, Number):
        return _fmt_number(e.value)
    if isinstance(e, String):
        return _fmt_string(e.value)
    if isinstance(e, Bool):
        return "true" if e.value else "false"
    if isinstance(e, Name):
        return e.ident
    if isinstance(e, ListLit):
        return "[" + ", ".join(_expr(i) for i in e.items) + "]"
    if isinstance(e, RecordLit):
        return "{" + ", ".join(f"{k}: {_expr(v)}" for k, v in e.fields) + "}"
    if isinstance(e, FieldAccess):
        return f"{_atom(e.obj)}.{e.name}"
    if isinstance(e, Call):
        parts = [_expr(a) for a in e.args] + [f"{k}: {_expr(v)}" for k, v in e.named]
        return f"{_atom(e.func)}({', '.join(parts)})"
    if isinstance(e, BinOp):
        return f"{_atom(e.left)} {e.op} {_atom(e.right)}"
    if isinstance(e, UnaryOp):
        sep = " " if e.op == "not" else ""
        return f"{e.op}{sep}{_atom(e.operand)}"
    raise TypeError(f"cannot print {type(e).__name__}")


def _atom(e) -> str:
    # parenthesize nested operators so precedence never shifts on re-parse
    if isinstance(e, (BinOp, UnaryOp)):
        return f"({_expr(e)})"
    return _expr(e)


def _stmt(s, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(s, Let):
        return [f"{pad}let {s.name} = {_expr(s.expr)}"]
    if isinstance(s, Assign):
        return [f"{pad}{_expr(s.target)} = {_expr(s.expr)}"]
    if isinstance(s, Skip):
        return [f"{pad}skip"]
    if isinstance(s, ExprStmt):
        return [f"{pad}{_expr(s.expr)}"]
    if isinstance(s, If):
        lines = [f"{pad}if {_expr(s.cond)} {{"]
        for sub in s.then:
            lines.extend(_stmt(sub, indent + 1))
        if s.orelse is not None:
            lines.append(f"{pad}}} else {{")
            for sub in s.orelse:
                lines.extend(_stmt(sub, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    if isinstance(s, For):
        lines = [f"{pad}for {s.var} in {_expr(s.iterable)} {{"]
        for sub in s.body:
            lines.extend(_stmt(sub, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    raise TypeError(f"cannot print statement {type(s).__name__}")


def pretty(script: PipelineScript) -> str:
    lines: list[str] = []
    for stage in script.stages:
        lines.append(f"stage {stage.kind} {{")
        for s in stage.body:
            lines.extend(_stmt(s, 1))
        lines.append("}")
        lines.append("")
    return "\n".join(lines)
