from .ast import Diagnostic, PipelineScript, pretty
from .parser import parse, ParseResult
from .check import check, BUILTINS
from .interp import (
    DslRuntimeError,
    ImageHandler,
    StageContext,
    StageOutcome,
    execute_stage,
)

__all__ = [
    "BUILTINS",
    "Diagnostic",
    "DslRuntimeError",
    "ImageHandler",
    "ParseResult",
    "PipelineScript",
    "StageContext",
    "StageOutcome",
    "check",
    "execute_stage",
    "parse",
    "pretty",
]
