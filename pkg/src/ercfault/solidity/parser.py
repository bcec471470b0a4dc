"""Recursive-descent parser producing :mod:`ercfault.solidity.ast` trees.

The accepted language is the subset used by ERC20/721/1155 token contracts,
old (0.4.x) and current (0.8.x) syntax alike. Inline assembly, try/catch,
function types and user-defined value types raise
:class:`UnsupportedConstruct` instead of being skipped.
"""

from __future__ import annotations

import re
from typing import Callable, Optional

from . import ast as A
from .errors import ParseError, UnsupportedConstruct
from .lexer import EOF, IDENT, NUMBER, PUNCT, STRING, Token, tokenize

VISIBILITY = {"public", "external", "internal", "private"}
MUTABILITY = {"pure", "view", "payable", "constant", "nonpayable"}
LOCATIONS = {"memory", "storage", "calldata"}
UNITS = {
    "wei", "gwei", "szabo", "finney", "ether",
    "seconds", "minutes", "hours", "days", "weeks", "years",
}
ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "<<=", ">>=", ">>>="}
BINARY_PRECEDENCE = {
    "||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, ">": 4, "<=": 4, ">=": 4,
    "|": 5, "^": 6, "&": 7, "<<": 8, ">>": 8, ">>>": 8, "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10, "**": 11,
}
PREFIX_OPS = {"!", "-", "~", "++", "--", "delete", "+"}

_ELEMENTARY_RE = re.compile(
    r"^(address|bool|string|bytes|byte|var|int|uint|"
    r"int(8|16|24|32|40|48|56|64|72|80|88|96|104|112|120|128|136|144|152|160|168|176|184|192|200|208|216|224|232|240|248|256)|"
    r"uint(8|16|24|32|40|48|56|64|72|80|88|96|104|112|120|128|136|144|152|160|168|176|184|192|200|208|216|224|232|240|248|256)|"
    r"bytes([1-9]|[12][0-9]|3[0-2])|u?fixed(\d+x\d+)?)$"
)
_ADDRESS_RE = re.compile(r"^0x[0-9a-fA-F]{40}$")


def is_elementary(name: str) -> bool:
    return name != "var" and bool(_ELEMENTARY_RE.match(name))


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, source: str | bytes, file_id: str = "<input>"):
        self.data = source.encode("utf-8") if isinstance(source, str) else source
        self.file_id = file_id
        self.tokens = tokenize(self.data)
        self.pos = 0

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        idx = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[idx]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in (IDENT, PUNCT) and t.text in texts

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != EOF:
            self.pos += 1
        return t

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}", (text,))
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != IDENT:
            self.error("expected identifier", ("identifier",))
        return self.advance()

    def error(self, message: str, expected: tuple[str, ...] = ()):
        t = self.tok
        found = "end of input" if t.kind == EOF else repr(t.text)
        raise ParseError(f"{message}, found {found}", t.line, t.col, expected)

    def unsupported(self, construct: str, tok: Optional[Token] = None):
        t = tok or self.tok
        raise UnsupportedConstruct(construct, t.line, t.col)

    def span_from(self, start: Token) -> A.SourceSpan:
        last = self.tokens[self.pos - 1] if self.pos > 0 else start
        end_line = last.line + last.text.count("\n")
        return A.SourceSpan(self.file_id, start.start, max(start.start, last.end), start.line, end_line)

    def speculate(self, fn: Callable):
        saved = self.pos
        try:
            return fn()
        except (_Backtrack, ParseError):
            self.pos = saved
            return None

    # -- source unit ----------------------------------------------------------

    def parse_source_unit(self) -> A.SourceUnit:
        start = self.tok
        items = []
        while self.tok.kind != EOF:
            items.append(self.parse_source_item())
        return A.SourceUnit(items=tuple(items), file_id=self.file_id, span=self.span_from(start))

    def _verbatim_until_semicolon(self, start: Token) -> str:
        while not self.at(";"):
            if self.tok.kind == EOF:
                self.error("expected ';'", (";",))
            self.advance()
        text = self.data[start.end : self.tok.start].decode("utf-8").strip()
        self.advance()
        return text

    def parse_source_item(self):
        t = self.tok
        if t.is_("pragma"):
            self.advance()
            text = self._verbatim_until_semicolon(t)
            return A.PragmaDirective(text=" ".join(text.split()), span=self.span_from(t))
        if t.is_("import"):
            self.advance()
            text = self._verbatim_until_semicolon(t)
            return A.ImportDirective(text=" ".join(text.split()), span=self.span_from(t))
        if self.at("abstract", "contract", "interface", "library"):
            return self.parse_contract()
        if t.is_("type") and self.peek().kind == IDENT and self.peek(2).is_("is"):
            self.unsupported("user-defined value type")
        member = self.parse_member(file_level=True)
        if isinstance(member, A.StateVariable) and member.mutability != "constant":
            raise ParseError("file-level variables must be constant", t.line, t.col, ("constant",))
        return member

    def parse_contract(self) -> A.ContractDef:
        start = self.tok
        abstract = bool(self.accept("abstract"))
        kind = self.advance().text
        if kind not in ("contract", "interface", "library"):
            self.error("expected contract, interface or library", ("contract", "interface", "library"))
        name = self.expect_ident().text
        bases = []
        if self.accept("is"):
            while True:
                bstart = self.tok
                bname = self.parse_path()
                args = None
                if self.accept("("):
                    args = tuple(self.parse_call_args_list(")"))
                bases.append(A.InheritanceSpecifier(name=bname, args=args, span=self.span_from(bstart)))
                if not self.accept(","):
                    break
        self.expect("{")
        members = []
        while not self.at("}"):
            if self.tok.kind == EOF:
                self.error("expected '}'", ("}",))
            members.append(self.parse_member())
        self.expect("}")
        return A.ContractDef(
            kind=kind, name=name, bases=tuple(bases), members=tuple(members),
            abstract=abstract, span=self.span_from(start),
        )

    def parse_path(self) -> str:
        parts = [self.expect_ident().text]
        while self.at(".") and self.peek().kind == IDENT:
            self.advance()
            parts.append(self.advance().text)
        return ".".join(parts)

    # -- contract members -----------------------------------------------------

    def parse_member(self, file_level: bool = False):
        t = self.tok
        if self.at("function", "constructor", "fallback", "receive"):
            # ``fallback``/``receive`` are only keywords when followed by '('
            if t.text in ("fallback", "receive") and not self.peek().is_("("):
                return self.parse_state_variable()
            return self.parse_function()
        if t.is_("modifier"):
            return self.parse_modifier()
        if t.is_("event"):
            return self.parse_event()
        if t.is_("error") and self.peek().kind == IDENT and self.peek(2).is_("("):
            return self.parse_error_def()
        if t.is_("struct"):
            return self.parse_struct()
        if t.is_("enum"):
            return self.parse_enum()
        if t.is_("using"):
            return self.parse_using()
        if t.is_("type") and self.peek().kind == IDENT and self.peek(2).is_("is"):
            self.unsupported("user-defined value type")
        if t.is_("assembly"):
            self.unsupported("inline assembly")
        if self.at("contract", "interface", "library", "abstract"):
            self.unsupported("nested contract definition")
        if t.kind != IDENT:
            self.error("expected contract member", ("function", "modifier", "event", "struct", "identifier"))
        return self.parse_state_variable()

    def parse_state_variable(self) -> A.StateVariable:
        start = self.tok
        type_name = self.parse_type_name()
        visibility = mutability = None
        override = None
        while True:
            if self.at(*VISIBILITY):
                visibility = self.advance().text
            elif self.at("constant", "immutable"):
                mutability = self.advance().text
            elif self.at("override"):
                override = self.parse_override()
            elif self.at("transient"):
                self.unsupported("transient storage")
            else:
                break
        name = self.expect_ident().text
        value = None
        if self.accept("="):
            value = self.parse_expression()
        self.expect(";")
        return A.StateVariable(
            type_name=type_name, name=name, visibility=visibility, mutability=mutability,
            override=override, value=value, span=self.span_from(start),
        )

    def parse_override(self) -> tuple[str, ...]:
        self.expect("override")
        names: list[str] = []
        if self.accept("("):
            while not self.at(")"):
                names.append(self.parse_path())
                if not self.accept(","):
                    break
            self.expect(")")
        return tuple(names)

    def parse_params(self, allow_indexed: bool = False) -> tuple:
        self.expect("(")
        params = []
        while not self.at(")"):
            pstart = self.tok
            type_name = self.parse_type_name()
            location = None
            indexed = False
            while True:
                if self.at(*LOCATIONS):
                    location = self.advance().text
                elif allow_indexed and self.at("indexed"):
                    self.advance()
                    indexed = True
                else:
                    break
            name = None
            if self.tok.kind == IDENT and not self.at(",", ")"):
                name = self.advance().text
            params.append(
                A.Parameter(
                    type_name=type_name, name=name, location=location, indexed=indexed,
                    span=self.span_from(pstart),
                )
            )
            if not self.accept(","):
                break
        self.expect(")")
        return tuple(params)

    def parse_function(self) -> A.FunctionDef:
        start = self.tok
        keyword = self.advance().text
        name = ""
        kind = keyword
        if keyword == "function":
            kind = "function"
            if self.tok.kind == IDENT and not self.at("("):
                name = self.advance().text
            else:
                kind = "fallback"  # legacy unnamed fallback
        params = self.parse_params()
        visibility = mutability = None
        virtual = False
        override = None
        modifiers = []
        returns = None
        while True:
            if self.at(*VISIBILITY):
                visibility = self.advance().text
            elif self.at(*MUTABILITY):
                mutability = self.advance().text
            elif self.at("virtual"):
                self.advance()
                virtual = True
            elif self.at("override"):
                override = self.parse_override()
            elif self.at("returns"):
                self.advance()
                returns = self.parse_params()
            elif self.tok.kind == IDENT:
                mstart = self.tok
                mname = self.parse_path()
                margs = None
                if self.accept("("):
                    margs = tuple(self.parse_call_args_list(")"))
                modifiers.append(A.ModifierInvocation(name=mname, args=margs, span=self.span_from(mstart)))
            else:
                break
        body = None
        if not self.accept(";"):
            if not self.at("{"):
                self.error("expected function body or ';'", ("{", ";"))
            body = self.parse_block()
        return A.FunctionDef(
            kind=kind, name=name, params=params, returns=returns, visibility=visibility,
            mutability=mutability, virtual=virtual, override=override,
            modifiers=tuple(modifiers), body=body, span=self.span_from(start),
        )

    def parse_modifier(self) -> A.ModifierDef:
        start = self.expect("modifier")
        name = self.expect_ident().text
        params = None
        if self.at("("):
            params = self.parse_params()
        virtual = False
        override = None
        while True:
            if self.accept("virtual"):
                virtual = True
            elif self.at("override"):
                override = self.parse_override()
            else:
                break
        body = None
        if not self.accept(";"):
            body = self.parse_block()
        return A.ModifierDef(
            name=name, params=params, virtual=virtual, override=override, body=body,
            span=self.span_from(start),
        )

    def parse_event(self) -> A.EventDef:
        start = self.expect("event")
        name = self.expect_ident().text
        params = self.parse_params(allow_indexed=True)
        anonymous = bool(self.accept("anonymous"))
        self.expect(";")
        return A.EventDef(name=name, params=params, anonymous=anonymous, span=self.span_from(start))

    def parse_error_def(self) -> A.ErrorDef:
        start = self.expect("error")
        name = self.expect_ident().text
        params = self.parse_params()
        self.expect(";")
        return A.ErrorDef(name=name, params=params, span=self.span_from(start))

    def parse_struct(self) -> A.StructDef:
        start = self.expect("struct")
        name = self.expect_ident().text
        self.expect("{")
        members = []
        while not self.at("}"):
            mstart = self.tok
            type_name = self.parse_type_name()
            mname = self.expect_ident().text
            self.expect(";")
            members.append(A.Parameter(type_name=type_name, name=mname, span=self.span_from(mstart)))
        self.expect("}")
        return A.StructDef(name=name, members=tuple(members), span=self.span_from(start))

    def parse_enum(self) -> A.EnumDef:
        start = self.expect("enum")
        name = self.expect_ident().text
        self.expect("{")
        values = []
        while not self.at("}"):
            values.append(self.expect_ident().text)
            if not self.accept(","):
                break
        self.expect("}")
        return A.EnumDef(name=name, values=tuple(values), span=self.span_from(start))

    def parse_using(self) -> A.UsingFor:
        start = self.expect("using")
        if self.at("{"):
            self.unsupported("using-for with function list")
        library = self.parse_path()
        self.expect("for")
        type_name = None
        if not self.accept("*"):
            type_name = self.parse_type_name()
        is_global = bool(self.accept("global"))
        self.expect(";")
        return A.UsingFor(library=library, type_name=type_name, is_global=is_global, span=self.span_from(start))

    # -- type names -----------------------------------------------------------

    def parse_type_name(self) -> A.TypeName:
        start = self.tok
        if self.at("mapping"):
            self.advance()
            self.expect("(")
            key = self.parse_type_name()
            key_name = None
            if self.tok.kind == IDENT and not self.at("=>"):
                key_name = self.advance().text
            self.expect("=>")
            value = self.parse_type_name()
            value_name = None
            if self.tok.kind == IDENT and not self.at(")"):
                value_name = self.advance().text
            self.expect(")")
            result: A.TypeName = A.Mapping(
                key=key, value=value, key_name=key_name, value_name=value_name,
                span=self.span_from(start),
            )
        elif self.at("function"):
            self.unsupported("function type")
        elif self.tok.kind == IDENT and (is_elementary(self.tok.text) or self.tok.text == "var"):
            name = self.advance().text
            payable = False
            if name == "address" and self.at("payable"):
                self.advance()
                payable = True
            result = A.ElementaryTypeName(name=name, payable=payable, span=self.span_from(start))
        elif self.tok.kind == IDENT:
            result = A.UserDefinedTypeName(path=self.parse_path(), span=self.span_from(start))
        else:
            self.error("expected type name", ("type name",))
        while self.at("["):
            self.advance()
            length = None
            if not self.at("]"):
                length = self.parse_expression()
            self.expect("]")
            result = A.ArrayTypeName(base=result, length=length, span=self.span_from(start))
        return result

    # -- statements -----------------------------------------------------------

    def parse_block(self) -> A.Block:
        start = self.tok
        unchecked = bool(self.accept("unchecked"))
        self.expect("{")
        statements = []
        while not self.at("}"):
            if self.tok.kind == EOF:
                self.error("expected '}'", ("}",))
            statements.append(self.parse_statement())
        self.expect("}")
        return A.Block(statements=tuple(statements), unchecked=unchecked, span=self.span_from(start))

    def parse_statement(self):
        t = self.tok
        if t.kind == IDENT:
            word = t.text
            if word == "unchecked" and self.peek().is_("{"):
                return self.parse_block()
            if word == "if":
                return self.parse_if()
            if word == "for":
                return self.parse_for()
            if word == "while":
                return self.parse_while()
            if word == "do":
                return self.parse_do_while()
            if word == "continue":
                self.advance()
                self.expect(";")
                return A.Continue(span=self.span_from(t))
            if word == "break":
                self.advance()
                self.expect(";")
                return A.Break(span=self.span_from(t))
            if word == "throw":
                self.advance()
                self.expect(";")
                return A.Throw(span=self.span_from(t))
            if word == "_" and self.peek().is_(";"):
                self.advance()
                self.advance()
                return A.Placeholder(span=self.span_from(t))
            if word == "return":
                self.advance()
                expr = None
                if not self.at(";"):
                    expr = self.parse_expression()
                self.expect(";")
                return A.Return(expression=expr, span=self.span_from(t))
            if word == "emit":
                return self.parse_emit()
            if word == "revert" and self.peek().kind == IDENT:
                return self.parse_revert()
            if word == "assembly":
                self.unsupported("inline assembly")
            if word == "try":
                self.unsupported("try/catch")
        if t.is_("{"):
            return self.parse_block()
        decl = self.speculate(self.parse_variable_declaration)
        if decl is not None:
            return decl
        expr = self.parse_expression()
        self.expect(";")
        span = self.span_from(t)
        if (
            isinstance(expr, A.FunctionCall)
            and isinstance(expr.callee, A.Identifier)
            and expr.callee.name == "require"
            and expr.names is None
            and 1 <= len(expr.args) <= 2
        ):
            message = expr.args[1] if len(expr.args) == 2 else None
            return A.Require(condition=expr.args[0], message=message, span=span)
        return A.ExpressionStatement(expression=expr, span=span)

    def parse_if(self) -> A.If:
        start = self.expect("if")
        self.expect("(")
        cond = self.parse_expression()
        self.expect(")")
        true_body = self.parse_statement()
        false_body = None
        if self.accept("else"):
            false_body = self.parse_statement()
        return A.If(condition=cond, true_body=true_body, false_body=false_body, span=self.span_from(start))

    def parse_for(self) -> A.For:
        start = self.expect("for")
        self.expect("(")
        init = None
        if not self.accept(";"):
            init = self.parse_simple_statement()
        cond = None
        if not self.at(";"):
            cond = self.parse_expression()
        self.expect(";")
        update = None
        if not self.at(")"):
            update = self.parse_expression()
        self.expect(")")
        body = self.parse_statement()
        return A.For(init=init, condition=cond, update=update, body=body, span=self.span_from(start))

    def parse_simple_statement(self):
        t = self.tok
        decl = self.speculate(self.parse_variable_declaration)
        if decl is not None:
            return decl
        expr = self.parse_expression()
        self.expect(";")
        return A.ExpressionStatement(expression=expr, span=self.span_from(t))

    def parse_while(self) -> A.While:
        start = self.expect("while")
        self.expect("(")
        cond = self.parse_expression()
        self.expect(")")
        body = self.parse_statement()
        return A.While(condition=cond, body=body, span=self.span_from(start))

    def parse_do_while(self) -> A.DoWhile:
        start = self.expect("do")
        body = self.parse_statement()
        self.expect("while")
        self.expect("(")
        cond = self.parse_expression()
        self.expect(")")
        self.expect(";")
        return A.DoWhile(body=body, condition=cond, span=self.span_from(start))

    def parse_emit(self) -> A.Emit:
        start = self.expect("emit")
        estart = self.tok
        event: A.Expression = A.Identifier(name=self.expect_ident().text, span=self.span_from(estart))
        while self.accept("."):
            event = A.MemberAccess(expression=event, member=self.expect_ident().text, span=self.span_from(estart))
        self.expect("(")
        args, names = self.parse_call_arguments()
        self.expect(";")
        return A.Emit(event=event, args=args, names=names, span=self.span_from(start))

    def parse_revert(self) -> A.Revert:
        start = self.expect("revert")
        estart = self.tok
        error: A.Expression = A.Identifier(name=self.expect_ident().text, span=self.span_from(estart))
        while self.accept("."):
            error = A.MemberAccess(expression=error, member=self.expect_ident().text, span=self.span_from(estart))
        self.expect("(")
        args, names = self.parse_call_arguments()
        self.expect(";")
        return A.Revert(error=error, args=args, names=names, span=self.span_from(start))

    def _declaration_item(self) -> A.Parameter:
        pstart = self.tok
        if self.tok.kind != IDENT or self.at("true", "false", "new", "delete", "type"):
            raise _Backtrack()
        type_name = self.parse_type_name()
        location = None
        if self.at(*LOCATIONS):
            location = self.advance().text
        if self.tok.kind != IDENT or self.at(*ASSIGN_OPS):
            raise _Backtrack()
        name = self.advance().text
        return A.Parameter(type_name=type_name, name=name, location=location, span=self.span_from(pstart))

    def parse_variable_declaration(self) -> A.VariableDeclarationStatement:
        start = self.tok
        if self.at("var"):
            self.advance()
            if self.at("("):
                self.advance()
                names: list = []
                while not self.at(")"):
                    if self.at(","):
                        names.append(None)
                    else:
                        nstart = self.tok
                        names.append(A.Parameter(type_name=None, name=self.expect_ident().text, span=self.span_from(nstart)))
                    if not self.accept(","):
                        break
                self.expect(")")
                decls = tuple(names)
                is_tuple = True
            else:
                nstart = self.tok
                decls = (A.Parameter(type_name=None, name=self.expect_ident().text, span=self.span_from(nstart)),)
                is_tuple = False
            self.expect("=")
            value = self.parse_expression()
            self.expect(";")
            return A.VariableDeclarationStatement(
                declarations=decls, value=value, is_tuple=is_tuple, span=self.span_from(start)
            )
        if self.at("("):
            self.advance()
            items: list = []
            while True:
                if self.at(",") or self.at(")"):
                    items.append(None)
                else:
                    items.append(self._declaration_item())
                if not self.accept(","):
                    break
            self.expect(")")
            if not any(items):
                raise _Backtrack()
            self.expect("=")
            value = self.parse_expression()
            self.expect(";")
            return A.VariableDeclarationStatement(
                declarations=tuple(items), value=value, is_tuple=True, span=self.span_from(start)
            )
        decl = self._declaration_item()
        value = None
        if self.accept("="):
            value = self.parse_expression()
        self.expect(";")
        return A.VariableDeclarationStatement(declarations=(decl,), value=value, span=self.span_from(start))

    # -- expressions ----------------------------------------------------------

    def parse_expression(self):
        start = self.tok
        lhs = self.parse_conditional()
        if self.tok.kind == PUNCT and self.tok.text in ASSIGN_OPS:
            op = self.advance().text
            rhs = self.parse_expression()
            return A.Assignment(op=op, lhs=lhs, rhs=rhs, span=self.span_from(start))
        return lhs

    def parse_conditional(self):
        start = self.tok
        cond = self.parse_binary(1)
        if self.accept("?"):
            true_expr = self.parse_expression()
            self.expect(":")
            false_expr = self.parse_expression()
            return A.Conditional(
                condition=cond, true_expr=true_expr, false_expr=false_expr, span=self.span_from(start)
            )
        return cond

    def parse_binary(self, min_prec: int):
        start = self.tok
        left = self.parse_unary()
        while True:
            t = self.tok
            prec = BINARY_PRECEDENCE.get(t.text) if t.kind == PUNCT else None
            if prec is None or prec < min_prec:
                return left
            self.advance()
            # ``**`` is right associative
            right = self.parse_binary(prec if t.text == "**" else prec + 1)
            left = A.Binary(op=t.text, left=left, right=right, span=self.span_from(start))

    def parse_unary(self):
        t = self.tok
        if (t.kind == PUNCT and t.text in PREFIX_OPS) or t.is_("delete"):
            self.advance()
            operand = self.parse_unary()
            return A.Unary(op=t.text, operand=operand, prefix=True, span=self.span_from(t))
        return self.parse_postfix()

    def parse_postfix(self):
        start = self.tok
        expr = self.parse_primary()
        while True:
            if self.at("."):
                self.advance()
                member_tok = self.tok
                if member_tok.kind != IDENT:
                    self.error("expected member name", ("identifier",))
                self.advance()
                expr = A.MemberAccess(expression=expr, member=member_tok.text, span=self.span_from(start))
            elif self.at("["):
                self.advance()
                index = None
                if self.at(":"):
                    self.advance()
                    end = None if self.at("]") else self.parse_expression()
                    self.expect("]")
                    expr = A.IndexRange(base=expr, start=None, end=end, span=self.span_from(start))
                    continue
                if not self.at("]"):
                    index = self.parse_expression()
                if self.accept(":"):
                    end = None if self.at("]") else self.parse_expression()
                    self.expect("]")
                    expr = A.IndexRange(base=expr, start=index, end=end, span=self.span_from(start))
                    continue
                self.expect("]")
                expr = A.IndexAccess(base=expr, index=index, span=self.span_from(start))
            elif self.at("("):
                self.advance()
                args, names = self.parse_call_arguments()
                expr = A.FunctionCall(callee=expr, args=args, names=names, span=self.span_from(start))
            elif self.at("{") and self.peek().kind == IDENT and self.peek(2).is_(":"):
                self.advance()
                names = []
                values = []
                while not self.at("}"):
                    names.append(self.expect_ident().text)
                    self.expect(":")
                    values.append(self.parse_expression())
                    if not self.accept(","):
                        break
                self.expect("}")
                expr = A.CallOptions(
                    expression=expr, names=tuple(names), values=tuple(values), span=self.span_from(start)
                )
            elif self.at("++", "--"):
                op = self.advance().text
                expr = A.Unary(op=op, operand=expr, prefix=False, span=self.span_from(start))
            else:
                return expr

    def parse_call_args_list(self, closer: str) -> list:
        args = []
        while not self.at(closer):
            args.append(self.parse_expression())
            if not self.accept(","):
                break
        self.expect(closer)
        return args

    def parse_call_arguments(self) -> tuple[tuple, Optional[tuple[str, ...]]]:
        """Arguments after an already-consumed '('; consumes the closing ')'."""
        if self.at("{") and (self.peek().is_("}") or (self.peek().kind == IDENT and self.peek(2).is_(":"))):
            self.advance()
            names = []
            values = []
            while not self.at("}"):
                names.append(self.expect_ident().text)
                self.expect(":")
                values.append(self.parse_expression())
                if not self.accept(","):
                    break
            self.expect("}")
            self.expect(")")
            return tuple(values), tuple(names)
        return tuple(self.parse_call_args_list(")")), None

    def parse_primary(self):
        t = self.tok
        if t.kind == NUMBER:
            self.advance()
            unit = None
            if self.tok.kind == IDENT and self.tok.text in UNITS:
                unit = self.advance().text
            kind = "address" if _ADDRESS_RE.match(t.text) else "number"
            return A.Literal(kind=kind, value=t.text, unit=unit, span=self.span_from(t))
        if t.kind == STRING:
            self.advance()
            kind = "hex" if t.text.startswith("hex") else "string"
            return A.Literal(kind=kind, value=t.text, span=self.span_from(t))
        if t.kind == IDENT:
            if t.text in ("true", "false"):
                self.advance()
                return A.Literal(kind="bool", value=t.text, span=self.span_from(t))
            if t.text == "new":
                self.advance()
                type_name = self.parse_type_name()
                return A.New(type_name=type_name, span=self.span_from(t))
            if t.text == "function":
                self.unsupported("function type")
            if t.text == "assembly":
                self.unsupported("inline assembly")
            if is_elementary(t.text):
                self.advance()
                payable = False
                if t.text == "address" and self.at("payable"):
                    self.advance()
                    payable = True
                etype = A.ElementaryTypeName(name=t.text, payable=payable, span=self.span_from(t))
                return A.ElementaryTypeExpression(type_name=etype, span=self.span_from(t))
            self.advance()
            return A.Identifier(name=t.text, span=self.span_from(t))
        if t.is_("("):
            self.advance()
            components: list = []
            while True:
                if self.at(",") or self.at(")"):
                    components.append(None)
                else:
                    components.append(self.parse_expression())
                if not self.accept(","):
                    break
            self.expect(")")
            if components == [None]:
                components = []
            return A.TupleExpression(components=tuple(components), span=self.span_from(t))
        if t.is_("["):
            self.advance()
            items = self.parse_call_args_list("]")
            return A.ArrayLiteral(components=tuple(items), span=self.span_from(t))
        self.error("expected expression", ("expression",))


def parse(source: str | bytes, file_id: str = "<input>") -> A.SourceUnit:
    """Parse one Solidity file."""
    return Parser(source, file_id).parse_source_unit()


def _parse_fragment(method: str, text: str, file_id: str):
    p = Parser(text, file_id)
    node = getattr(p, method)()
    if p.tok.kind != EOF:
        p.error("unexpected trailing input", ("end of input",))
    return node


def parse_statement(text: str, file_id: str = "<fragment>"):
    return _parse_fragment("parse_statement", text, file_id)


def parse_expression(text: str, file_id: str = "<fragment>"):
    return _parse_fragment("parse_expression", text, file_id)


def parse_member(text: str, file_id: str = "<fragment>"):
    return _parse_fragment("parse_member", text, file_id)
