"""Solidity frontend: parse, inspect and re-emit token contracts."""

from . import ast
from .ast import SourceSpan, SourceUnit, canonical_type, walk
from .emit import emit_expression, emit_source, emit_statement, function_header
from .errors import ParseError, SolidityError, UnsupportedConstruct
from .parser import parse, parse_expression, parse_member, parse_statement

__all__ = [
    "ast",
    "SourceSpan",
    "SourceUnit",
    "canonical_type",
    "walk",
    "emit_expression",
    "emit_source",
    "emit_statement",
    "function_header",
    "ParseError",
    "SolidityError",
    "UnsupportedConstruct",
    "parse",
    "parse_expression",
    "parse_member",
    "parse_statement",
]
