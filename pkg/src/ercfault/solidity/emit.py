"""Render AST nodes back to Solidity source.

Output uses 4-space indentation and one statement per line. Parenthesised
sub-expressions are kept as :class:`TupleExpression` nodes by the parser, so
rendering never needs to insert parentheses of its own.
"""

from __future__ import annotations

from . import ast as A

INDENT = "    "


def emit_source(unit: A.SourceUnit) -> str:
    """Render a whole source unit. Returns ``""`` for an empty unit."""
    chunks = []
    for item in unit.items:
        chunks.append(emit_node(item, 0))
    if not chunks:
        return ""
    out = []
    prev = None
    for item, chunk in zip(unit.items, chunks):
        if prev is not None and not (
            isinstance(prev, (A.PragmaDirective, A.ImportDirective))
            and isinstance(item, (A.PragmaDirective, A.ImportDirective))
        ):
            out.append("")
        out.append(chunk)
        prev = item
    return "\n".join(out) + "\n"


def emit_node(node, level: int = 0) -> str:
    pad = INDENT * level
    if isinstance(node, A.PragmaDirective):
        return f"{pad}pragma {node.text};"
    if isinstance(node, A.ImportDirective):
        return f"{pad}import {node.text};"
    if isinstance(node, A.ContractDef):
        return _contract(node, level)
    if isinstance(node, A.FunctionDef):
        return _function(node, level)
    if isinstance(node, A.ModifierDef):
        return _modifier(node, level)
    if isinstance(node, A.StateVariable):
        return pad + _state_var(node)
    if isinstance(node, A.EventDef):
        anon = " anonymous" if node.anonymous else ""
        return f"{pad}event {node.name}({_params(node.params)}){anon};"
    if isinstance(node, A.ErrorDef):
        return f"{pad}error {node.name}({_params(node.params)});"
    if isinstance(node, A.StructDef):
        lines = [f"{pad}struct {node.name} {{"]
        for m in node.members:
            lines.append(f"{pad}{INDENT}{emit_type(m.type_name)} {m.name};")
        lines.append(f"{pad}}}")
        return "\n".join(lines)
    if isinstance(node, A.EnumDef):
        return f"{pad}enum {node.name} {{ {', '.join(node.values)} }}"
    if isinstance(node, A.UsingFor):
        target = "*" if node.type_name is None else emit_type(node.type_name)
        glob = " global" if node.is_global else ""
        return f"{pad}using {node.library} for {target}{glob};"
    return emit_statement(node, level)


def _contract(c: A.ContractDef, level: int) -> str:
    pad = INDENT * level
    head = ("abstract " if c.abstract else "") + f"{c.kind} {c.name}"
    if c.bases:
        head += " is " + ", ".join(_inheritance(b) for b in c.bases)
    if not c.members:
        return f"{pad}{head} {{}}"
    lines = [f"{pad}{head} {{"]
    prev = None
    for m in c.members:
        simple = isinstance(m, (A.StateVariable, A.EventDef, A.ErrorDef, A.UsingFor))
        if prev is not None and not (simple and prev):
            lines.append("")
        lines.append(emit_node(m, level + 1))
        prev = simple
    lines.append(f"{pad}}}")
    return "\n".join(lines)


def _inheritance(b: A.InheritanceSpecifier) -> str:
    if b.args is None:
        return b.name
    return f"{b.name}({_exprs(b.args)})"


def _state_var(v: A.StateVariable) -> str:
    parts = [emit_type(v.type_name)]
    if v.visibility:
        parts.append(v.visibility)
    if v.mutability:
        parts.append(v.mutability)
    if v.override is not None:
        parts.append(_override(v.override))
    parts.append(v.name)
    text = " ".join(parts)
    if v.value is not None:
        text += " = " + emit_expression(v.value)
    return text + ";"


def _override(names) -> str:
    return "override" if not names else f"override({', '.join(names)})"


def _function_header(f: A.FunctionDef) -> str:
    if f.kind == "function":
        head = f"function {f.name}({_params(f.params)})"
    elif f.kind == "fallback" and not f.name and f.visibility is None:
        head = f"function({_params(f.params)})"
    else:
        head = f"{f.kind}({_params(f.params)})"
    parts = [head]
    if f.visibility:
        parts.append(f.visibility)
    if f.mutability:
        parts.append(f.mutability)
    if f.virtual:
        parts.append("virtual")
    if f.override is not None:
        parts.append(_override(f.override))
    for m in f.modifiers:
        parts.append(m.name if m.args is None else f"{m.name}({_exprs(m.args)})")
    if f.returns is not None:
        parts.append(f"returns ({_params(f.returns)})")
    return " ".join(parts)


def function_header(f: A.FunctionDef) -> str:
    """Declaration text of ``f`` without its body."""
    return _function_header(f)


def _function(f: A.FunctionDef, level: int) -> str:
    pad = INDENT * level
    head = pad + _function_header(f)
    if f.body is None:
        return head + ";"
    return head + " " + _block(f.body, level)


def _modifier(m: A.ModifierDef, level: int) -> str:
    pad = INDENT * level
    head = f"{pad}modifier {m.name}"
    if m.params is not None:
        head += f"({_params(m.params)})"
    if m.virtual:
        head += " virtual"
    if m.override is not None:
        head += " " + _override(m.override)
    if m.body is None:
        return head + ";"
    return head + " " + _block(m.body, level)


def _param(p: A.Parameter) -> str:
    parts = [emit_type(p.type_name)]
    if p.indexed:
        parts.append("indexed")
    if p.location:
        parts.append(p.location)
    if p.name:
        parts.append(p.name)
    return " ".join(parts)


def _params(params) -> str:
    return ", ".join(_param(p) for p in params or ())


def emit_type(t) -> str:
    if t is None:
        return "var"
    if isinstance(t, A.ElementaryTypeName):
        return t.name + (" payable" if t.payable else "")
    if isinstance(t, A.UserDefinedTypeName):
        return t.path
    if isinstance(t, A.Mapping):
        key = emit_type(t.key) + (f" {t.key_name}" if t.key_name else "")
        value = emit_type(t.value) + (f" {t.value_name}" if t.value_name else "")
        return f"mapping({key} => {value})"
    if isinstance(t, A.ArrayTypeName):
        length = "" if t.length is None else emit_expression(t.length)
        return f"{emit_type(t.base)}[{length}]"
    raise TypeError(f"not a type name: {t!r}")


# -- statements ---------------------------------------------------------------


def _block(b: A.Block, level: int) -> str:
    pad = INDENT * level
    prefix = "unchecked " if b.unchecked else ""
    if not b.statements:
        return prefix + "{}"
    lines = [prefix + "{"]
    for s in b.statements:
        lines.append(emit_statement(s, level + 1))
    lines.append(pad + "}")
    return "\n".join(lines)


def _body(s, level: int) -> str:
    """Statement used as a branch/loop body, placed after a header on the same line."""
    if isinstance(s, A.Block):
        return " " + _block(s, level)
    return "\n" + emit_statement(s, level + 1)


def _simple(s) -> str:
    """A statement rendered without indentation or trailing newline."""
    return emit_statement(s, 0)


def emit_statement(s, level: int = 0) -> str:
    pad = INDENT * level
    if isinstance(s, A.Block):
        return pad + _block(s, level)
    if isinstance(s, A.If):
        text = f"{pad}if ({emit_expression(s.condition)})" + _body(s.true_body, level)
        if s.false_body is not None:
            sep = " " if isinstance(s.true_body, A.Block) else "\n" + pad
            if isinstance(s.false_body, A.If):
                text += f"{sep}else " + emit_statement(s.false_body, level).lstrip()
            else:
                text += f"{sep}else" + _body(s.false_body, level)
        return text
    if isinstance(s, A.For):
        init = _simple(s.init) if s.init is not None else ";"
        cond = emit_expression(s.condition) if s.condition is not None else ""
        update = emit_expression(s.update) if s.update is not None else ""
        header = f"for ({init} {cond}; {update})".replace("( ", "(").replace(" )", ")")
        return pad + header + _body(s.body, level)
    if isinstance(s, A.While):
        return f"{pad}while ({emit_expression(s.condition)})" + _body(s.body, level)
    if isinstance(s, A.DoWhile):
        body = _body(s.body, level)
        sep = " " if isinstance(s.body, A.Block) else "\n" + pad
        return f"{pad}do{body}{sep}while ({emit_expression(s.condition)});"
    if isinstance(s, A.Continue):
        return pad + "continue;"
    if isinstance(s, A.Break):
        return pad + "break;"
    if isinstance(s, A.Throw):
        return pad + "throw;"
    if isinstance(s, A.Placeholder):
        return pad + "_;"
    if isinstance(s, A.Return):
        if s.expression is None:
            return pad + "return;"
        return f"{pad}return {emit_expression(s.expression)};"
    if isinstance(s, A.Emit):
        return f"{pad}emit {emit_expression(s.event)}({_args(s.args, s.names)});"
    if isinstance(s, A.Revert):
        return f"{pad}revert {emit_expression(s.error)}({_args(s.args, s.names)});"
    if isinstance(s, A.Require):
        args = [s.condition] + ([s.message] if s.message is not None else [])
        return f"{pad}require({_exprs(args)});"
    if isinstance(s, A.ExpressionStatement):
        return f"{pad}{emit_expression(s.expression)};"
    if isinstance(s, A.VariableDeclarationStatement):
        return pad + _var_decl(s)
    raise TypeError(f"not a statement: {s!r}")


def _var_decl(s: A.VariableDeclarationStatement) -> str:
    legacy = all(d is None or d.type_name is None for d in s.declarations)
    if legacy:
        names = [d.name if d is not None else "" for d in s.declarations]
        target = f"({', '.join(names)})" if s.is_tuple else names[0]
        text = f"var {target}"
    elif s.is_tuple:
        text = "(" + ", ".join(_param(d) if d is not None else "" for d in s.declarations) + ")"
    else:
        text = _param(s.declarations[0])
    if s.value is not None:
        text += " = " + emit_expression(s.value)
    return text + ";"


# -- expressions --------------------------------------------------------------


def _exprs(items) -> str:
    return ", ".join(emit_expression(e) for e in items)


def _args(args, names) -> str:
    if names is None:
        return _exprs(args)
    inner = ", ".join(f"{n}: {emit_expression(v)}" for n, v in zip(names, args))
    return "{" + inner + "}"


def emit_expression(e) -> str:
    if isinstance(e, A.Identifier):
        return e.name
    if isinstance(e, A.Literal):
        return e.value + (f" {e.unit}" if e.unit else "")
    if isinstance(e, A.ElementaryTypeExpression):
        return emit_type(e.type_name)
    if isinstance(e, A.MemberAccess):
        return f"{emit_expression(e.expression)}.{e.member}"
    if isinstance(e, A.IndexAccess):
        index = "" if e.index is None else emit_expression(e.index)
        return f"{emit_expression(e.base)}[{index}]"
    if isinstance(e, A.IndexRange):
        start = "" if e.start is None else emit_expression(e.start)
        end = "" if e.end is None else emit_expression(e.end)
        return f"{emit_expression(e.base)}[{start}:{end}]"
    if isinstance(e, A.FunctionCall):
        return f"{emit_expression(e.callee)}({_args(e.args, e.names)})"
    if isinstance(e, A.CallOptions):
        opts = ", ".join(f"{n}: {emit_expression(v)}" for n, v in zip(e.names, e.values))
        return f"{emit_expression(e.expression)}{{{opts}}}"
    if isinstance(e, A.Unary):
        operand = emit_expression(e.operand)
        if not e.prefix:
            return operand + e.op
        if e.op == "delete":
            return f"delete {operand}"
        if e.op in ("-", "+", "--", "++") and operand[:1] in ("-", "+"):
            return f"{e.op} {operand}"
        return e.op + operand
    if isinstance(e, A.Binary):
        return f"{emit_expression(e.left)} {e.op} {emit_expression(e.right)}"
    if isinstance(e, A.Assignment):
        return f"{emit_expression(e.lhs)} {e.op} {emit_expression(e.rhs)}"
    if isinstance(e, A.Conditional):
        return (
            f"{emit_expression(e.condition)} ? {emit_expression(e.true_expr)}"
            f" : {emit_expression(e.false_expr)}"
        )
    if isinstance(e, A.TupleExpression):
        return "(" + ", ".join("" if c is None else emit_expression(c) for c in e.components) + ")"
    if isinstance(e, A.ArrayLiteral):
        return "[" + _exprs(e.components) + "]"
    if isinstance(e, A.New):
        return f"new {emit_type(e.type_name)}"
    raise TypeError(f"not an expression: {e!r}")
