"""Static checks on parsed scripts: builtin existence, stage placement,
arity, named-argument validity, use-before-let, and purity of per-pixel
expressions."""

from __future__ import annotations

from dataclasses import dataclass

from . import ast
from .ast import Diagnostic


@dataclass
class BuiltinSpec:
    stage: str
    min_args: int
    max_args: int
    named: frozenset[str] = frozenset()
    required_named: frozenset[str] = frozenset()
    free_named: bool = False  # pick accepts arbitrary keys
    special: str | None = None  # "map_pixels" exempts its expression argument


BUILTINS: dict[str, BuiltinSpec] = {
    # scene stage
    "count": BuiltinSpec("scene", 1, 1),
    "randomize_layout": BuiltinSpec("scene", 1, 1, named=frozenset({"iterations"})),
    # entity stage
    "replace_model": BuiltinSpec("entity", 0, 1, named=frozenset({"id", "k"})),
    "replace_material": BuiltinSpec("entity", 0, 1, named=frozenset({"id"})),
    "tune_temp": BuiltinSpec("entity", 1, 1, named=frozenset({"mode"})),
    "tune_intensity": BuiltinSpec("entity", 1, 1, named=frozenset({"mode"})),
    "set_attr": BuiltinSpec("entity", 3, 3),
    "add_trajectory": BuiltinSpec(
        "entity",
        0,
        1,
        named=frozenset(
            {"id", "camera", "fps", "speed", "height", "collision_padding", "kind", "duration", "keypoints"}
        ),
    ),
    "pick": BuiltinSpec("entity", 0, 0, free_named=True, required_named=frozenset({"type", "id"})),
    "attach_distribution": BuiltinSpec(
        "entity",
        1,
        1,
        named=frozenset({"component", "kind", "lo", "hi", "mean", "sigma", "values", "weights", "k"}),
        required_named=frozenset({"component", "kind"}),
    ),
    # pixel stage
    "gen_depth": BuiltinSpec(
        "pixel",
        0,
        0,
        named=frozenset({"noise", "sigma", "scale", "p", "salt_value", "pepper_value", "sigma_disp", "sigma_shift"}),
        required_named=frozenset({"noise"}),
    ),
    "remap_labels": BuiltinSpec("pixel", 0, 1, named=frozenset({"mapping"})),
    "load_images": BuiltinSpec("pixel", 1, 1),
    "save_files": BuiltinSpec("pixel", 1, 2, named=frozenset({"content", "name"})),
    "map_pixels": BuiltinSpec("pixel", 2, 2, special="map_pixels"),
}

_STAGE_PRELUDE = {
    "scene": {"world"},
    "entity": {"world"},
    "pixel": set(),  # pixel scripts never see the scene
}

PIXEL_VARS = {"v", "r", "g", "b"}


def check(script: ast.PipelineScript) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    for stage in script.stages:
        defined = set(_STAGE_PRELUDE[stage.kind])
        for stmt in stage.body:
            _check_stmt(stmt, stage.kind, defined, diags)
    return diags


def _check_stmt(stmt, stage: str, defined: set[str], diags: list[Diagnostic]) -> None:
    if isinstance(stmt, ast.Let):
        _check_expr(stmt.expr, stage, defined, diags)
        defined.add(stmt.name)
    elif isinstance(stmt, ast.Assign):
        _check_expr(stmt.expr, stage, defined, diags)
        target = stmt.target
        if isinstance(target, ast.Name):
            if target.ident not in defined:
                diags.append(
                    Diagnostic(
                        f"assignment to {target.ident!r} before let",
                        target.line,
                        target.col,
                        token=target.ident,
                    )
                )
        else:
            _check_expr(target, stage, defined, diags)
    elif isinstance(stmt, ast.If):
        _check_expr(stmt.cond, stage, defined, diags)
        for s in stmt.then:
            _check_stmt(s, stage, defined, diags)
        for s in stmt.orelse or []:
            _check_stmt(s, stage, defined, diags)
    elif isinstance(stmt, ast.For):
        _check_expr(stmt.iterable, stage, defined, diags)
        defined.add(stmt.var)
        for s in stmt.body:
            _check_stmt(s, stage, defined, diags)
    elif isinstance(stmt, ast.ExprStmt):
        _check_expr(stmt.expr, stage, defined, diags)
    # Skip needs nothing


def _check_expr(expr, stage: str, defined: set[str], diags: list[Diagnostic]) -> None:
    if isinstance(expr, ast.Name):
        if expr.ident not in defined:
            diags.append(
                Diagnostic(f"use of {expr.ident!r} before let", expr.line, expr.col, token=expr.ident)
            )
    elif isinstance(expr, (ast.Number, ast.String, ast.Bool)):
        return
    elif isinstance(expr, ast.ListLit):
        for item in expr.items:
            _check_expr(item, stage, defined, diags)
    elif isinstance(expr, ast.RecordLit):
        for _, value in expr.fields:
            _check_expr(value, stage, defined, diags)
    elif isinstance(expr, ast.FieldAccess):
        _check_expr(expr.obj, stage, defined, diags)
    elif isinstance(expr, ast.BinOp):
        _check_expr(expr.left, stage, defined, diags)
        _check_expr(expr.right, stage, defined, diags)
    elif isinstance(expr, ast.UnaryOp):
        _check_expr(expr.operand, stage, defined, diags)
    elif isinstance(expr, ast.Call):
        _check_call(expr, stage, defined, diags)


def _callee_name(call: ast.Call) -> tuple[str | None, bool]:
    """(builtin name, has method receiver)."""
    if isinstance(call.func, ast.Name):
        return call.func.ident, False
    if isinstance(call.func, ast.FieldAccess):
        return call.func.name, True
    return None, False


def _check_call(call: ast.Call, stage: str, defined: set[str], diags: list[Diagnostic]) -> None:
    name, is_method = _callee_name(call)
    spec = BUILTINS.get(name) if name else None
    if spec is None:
        diags.append(
            Diagnostic(f"unknown builtin {name or '<expression>'!r}", call.line, call.col, token=name)
        )
        # still check the arguments for name resolution
        for a in call.args:
            _check_expr(a, stage, defined, diags)
        for _, v in call.named:
            _check_expr(v, stage, defined, diags)
        return
    if spec.stage != stage:
        diags.append(
            Diagnostic(
                f"builtin {name!r} belongs to the {spec.stage} stage, not {stage}",
                call.line,
                call.col,
                token=name,
            )
        )
    n_pos = len(call.args) + (1 if is_method else 0)
    if not spec.min_args <= n_pos <= spec.max_args:
        want = str(spec.min_args) if spec.min_args == spec.max_args else f"{spec.min_args}..{spec.max_args}"
        diags.append(
            Diagnostic(
                f"{name} takes {want} positional argument(s), got {n_pos}",
                call.line,
                call.col,
                token=name,
            )
        )
    seen_named = {k for k, _ in call.named}
    if not spec.free_named:
        for key, value in call.named:
            if key not in spec.named:
                diags.append(
                    Diagnostic(f"{name} has no argument {key!r}", value.line, value.col, token=key)
                )
    missing = spec.required_named - seen_named
    # a method receiver or positional argument can satisfy 'camera'/'id' style slots
    if missing and (n_pos > 0 and missing <= {"camera", "id"}):
        missing = set()
    for key in sorted(missing):
        diags.append(Diagnostic(f"{name} requires argument {key!r}", call.line, call.col, token=name))

    if is_method:
        _check_expr(call.func.obj, stage, defined, diags)
    if spec.special == "map_pixels" and len(call.args) == 2:
        _check_expr(call.args[0], stage, defined, diags)
        _check_pixel_expr(call.args[1], diags)
        for _, v in call.named:
            _check_expr(v, stage, defined, diags)
        return
    for a in call.args:
        _check_expr(a, stage, defined, diags)
    for _, v in call.named:
        _check_expr(v, stage, defined, diags)


def _check_pixel_expr(expr, diags: list[Diagnostic]) -> None:
    """Per-pixel expressions are pure arithmetic over v or r/g/b."""
    if isinstance(expr, ast.Number):
        return
    if isinstance(expr, ast.Name):
        if expr.ident not in PIXEL_VARS:
            diags.append(
                Diagnostic(
                    f"only {sorted(PIXEL_VARS)} may appear in a pixel expression",
                    expr.line,
                    expr.col,
                    token=expr.ident,
                )
            )
        return
    if isinstance(expr, ast.BinOp) and expr.op in ("+", "-", "*", "/"):
        _check_pixel_expr(expr.left, diags)
        _check_pixel_expr(expr.right, diags)
        return
    if isinstance(expr, ast.UnaryOp) and expr.op == "-":
        _check_pixel_expr(expr.operand, diags)
        return
    if isinstance(expr, ast.ListLit):
        for item in expr.items:
            _check_pixel_expr(item, diags)
        return
    line = getattr(expr, "line", 0)
    col = getattr(expr, "col", 0)
    diags.append(Diagnostic("pixel expressions allow only + - * / over v, r, g, b", line, col))
