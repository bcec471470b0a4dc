"""Span-annotated AST for the supported Solidity subset.

All nodes are frozen dataclasses. ``span`` is excluded from equality, so two
trees compare equal when they are structurally the same regardless of where
their text came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Iterator, Optional, Union

_node = dataclass(frozen=True, kw_only=True)


@dataclass(frozen=True)
class SourceSpan:
    file_id: str
    start: int
    end: int
    start_line: int
    end_line: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"span start {self.start} after end {self.end}")

    def contains(self, other: "SourceSpan") -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: "SourceSpan") -> bool:
        return self.start < other.end and other.start < self.end

    def to_dict(self) -> dict:
        return {
            "file_id": self.file_id,
            "start_byte": self.start,
            "end_byte": self.end,
            "start_line": self.start_line,
            "end_line": self.end_line,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SourceSpan":
        return cls(d["file_id"], d["start_byte"], d["end_byte"], d["start_line"], d["end_line"])


@_node
class Node:
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def children(self) -> Iterator["Node"]:
        for f in fields(self):
            if f.name == "span":
                continue
            value = getattr(self, f.name)
            if isinstance(value, Node):
                yield value
            elif isinstance(value, tuple):
                for item in value:
                    if isinstance(item, Node):
                        yield item


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal of ``node`` and all of its descendants."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(list(current.children())))


# -- type names ---------------------------------------------------------------


@_node
class ElementaryTypeName(Node):
    name: str
    payable: bool = False


@_node
class UserDefinedTypeName(Node):
    path: str


@_node
class Mapping(Node):
    key: "TypeName"
    value: "TypeName"
    key_name: Optional[str] = None
    value_name: Optional[str] = None


@_node
class ArrayTypeName(Node):
    base: "TypeName"
    length: Optional["Expression"] = None


TypeName = Union[ElementaryTypeName, UserDefinedTypeName, Mapping, ArrayTypeName]


@_node
class Parameter(Node):
    type_name: Optional[TypeName]  # None for legacy ``var``
    name: Optional[str] = None
    location: Optional[str] = None
    indexed: bool = False


# -- expressions --------------------------------------------------------------


@_node
class Identifier(Node):
    name: str


@_node
class Literal(Node):
    kind: str  # number | bool | string | hex | address
    value: str  # raw source text
    unit: Optional[str] = None


@_node
class ElementaryTypeExpression(Node):
    type_name: ElementaryTypeName


@_node
class MemberAccess(Node):
    expression: "Expression"
    member: str


@_node
class IndexAccess(Node):
    base: "Expression"
    index: Optional["Expression"] = None


@_node
class IndexRange(Node):
    base: "Expression"
    start: Optional["Expression"] = None
    end: Optional["Expression"] = None


@_node
class FunctionCall(Node):
    callee: "Expression"
    args: tuple = ()
    names: Optional[tuple[str, ...]] = None  # named-argument call f({a: 1})


@_node
class CallOptions(Node):
    expression: "Expression"
    names: tuple[str, ...] = ()
    values: tuple = ()


@_node
class Unary(Node):
    op: str
    operand: "Expression"
    prefix: bool = True


@_node
class Binary(Node):
    op: str
    left: "Expression"
    right: "Expression"


@_node
class Assignment(Node):
    op: str
    lhs: "Expression"
    rhs: "Expression"


@_node
class Conditional(Node):
    condition: "Expression"
    true_expr: "Expression"
    false_expr: "Expression"


@_node
class TupleExpression(Node):
    components: tuple = ()  # entries may be None for omitted slots


@_node
class ArrayLiteral(Node):
    components: tuple = ()


@_node
class New(Node):
    type_name: TypeName


Expression = Union[
    Identifier, Literal, ElementaryTypeExpression, MemberAccess, IndexAccess, IndexRange,
    FunctionCall, CallOptions, Unary, Binary, Assignment, Conditional, TupleExpression,
    ArrayLiteral, New,
]


# -- statements ---------------------------------------------------------------


@_node
class Block(Node):
    statements: tuple = ()
    unchecked: bool = False


@_node
class If(Node):
    condition: Expression
    true_body: "Statement"
    false_body: Optional["Statement"] = None


@_node
class For(Node):
    init: Optional["Statement"]
    condition: Optional[Expression]
    update: Optional[Expression]
    body: "Statement"


@_node
class While(Node):
    condition: Expression
    body: "Statement"


@_node
class DoWhile(Node):
    body: "Statement"
    condition: Expression


@_node
class Continue(Node):
    pass


@_node
class Break(Node):
    pass


@_node
class Throw(Node):
    pass


@_node
class Placeholder(Node):
    pass


@_node
class Return(Node):
    expression: Optional[Expression] = None


@_node
class Emit(Node):
    event: Expression
    args: tuple = ()
    names: Optional[tuple[str, ...]] = None

    @property
    def event_name(self) -> str:
        return _last_name(self.event)


@_node
class Revert(Node):
    error: Expression
    args: tuple = ()
    names: Optional[tuple[str, ...]] = None


@_node
class Require(Node):
    condition: Expression
    message: Optional[Expression] = None


@_node
class ExpressionStatement(Node):
    expression: Expression


@_node
class VariableDeclarationStatement(Node):
    declarations: tuple  # Parameter or None (omitted tuple slot)
    value: Optional[Expression] = None
    is_tuple: bool = False


Statement = Union[
    Block, If, For, While, DoWhile, Continue, Break, Throw, Placeholder, Return, Emit, Revert,
    Require, ExpressionStatement, VariableDeclarationStatement,
]


# -- contract members ---------------------------------------------------------


@_node
class ModifierInvocation(Node):
    name: str
    args: Optional[tuple] = None


@_node
class StateVariable(Node):
    type_name: TypeName
    name: str
    visibility: Optional[str] = None
    mutability: Optional[str] = None  # constant | immutable
    override: Optional[tuple[str, ...]] = None
    value: Optional[Expression] = None


@_node
class FunctionDef(Node):
    kind: str  # function | constructor | fallback | receive
    name: str
    params: tuple = ()
    returns: Optional[tuple] = None
    visibility: Optional[str] = None
    mutability: Optional[str] = None
    virtual: bool = False
    override: Optional[tuple[str, ...]] = None
    modifiers: tuple = ()
    body: Optional[Block] = None

    @property
    def signature(self) -> str:
        label = self.name if self.kind == "function" else self.kind
        return f"{label}({','.join(canonical_type(p.type_name) for p in self.params)})"

    @property
    def is_public(self) -> bool:
        return self.visibility in ("public", "external") or (
            self.visibility is None and self.kind == "function"
        )


@_node
class ModifierDef(Node):
    name: str
    params: Optional[tuple] = None
    virtual: bool = False
    override: Optional[tuple[str, ...]] = None
    body: Optional[Block] = None

    @property
    def signature(self) -> str:
        params = self.params or ()
        return f"modifier {self.name}({','.join(canonical_type(p.type_name) for p in params)})"


@_node
class EventDef(Node):
    name: str
    params: tuple = ()
    anonymous: bool = False

    @property
    def signature(self) -> str:
        return f"{self.name}({','.join(canonical_type(p.type_name) for p in self.params)})"


@_node
class ErrorDef(Node):
    name: str
    params: tuple = ()


@_node
class StructDef(Node):
    name: str
    members: tuple = ()


@_node
class EnumDef(Node):
    name: str
    values: tuple[str, ...] = ()


@_node
class UsingFor(Node):
    library: str
    type_name: Optional[TypeName] = None  # None means ``*``
    is_global: bool = False


@_node
class InheritanceSpecifier(Node):
    name: str
    args: Optional[tuple] = None


@_node
class ContractDef(Node):
    kind: str  # contract | interface | library
    name: str
    bases: tuple = ()
    members: tuple = ()
    abstract: bool = False

    def _of(self, cls):
        return tuple(m for m in self.members if isinstance(m, cls))

    @property
    def base_names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.bases)

    @property
    def state_vars(self) -> tuple[StateVariable, ...]:
        return self._of(StateVariable)

    @property
    def functions(self) -> tuple[FunctionDef, ...]:
        return self._of(FunctionDef)

    @property
    def events(self) -> tuple[EventDef, ...]:
        return self._of(EventDef)

    @property
    def modifiers(self) -> tuple[ModifierDef, ...]:
        return self._of(ModifierDef)


@_node
class PragmaDirective(Node):
    text: str


@_node
class ImportDirective(Node):
    text: str


@_node
class SourceUnit(Node):
    items: tuple = ()
    file_id: str = field(default="", compare=False)

    def _of(self, cls):
        return tuple(i for i in self.items if isinstance(i, cls))

    @property
    def pragmas(self) -> tuple[PragmaDirective, ...]:
        return self._of(PragmaDirective)

    @property
    def contracts(self) -> tuple[ContractDef, ...]:
        """Contracts, interfaces and libraries, in source order."""
        return self._of(ContractDef)

    @property
    def constants(self) -> tuple[StateVariable, ...]:
        return self._of(StateVariable)

    def contract(self, name: str) -> Optional[ContractDef]:
        for c in self.contracts:
            if c.name == name:
                return c
        return None


_INT_ALIASES = {"uint": "uint256", "int": "int256", "byte": "bytes1"}


def canonical_type(t: Optional[TypeName]) -> str:
    """Type string used in signatures: aliases expanded, locations and payable dropped."""
    if t is None:
        return "var"
    if isinstance(t, ElementaryTypeName):
        return _INT_ALIASES.get(t.name, t.name)
    if isinstance(t, UserDefinedTypeName):
        return t.path
    if isinstance(t, ArrayTypeName):
        length = ""
        if isinstance(t.length, Literal):
            length = t.length.value
        elif t.length is not None:
            length = "?"
        return f"{canonical_type(t.base)}[{length}]"
    if isinstance(t, Mapping):
        return f"mapping({canonical_type(t.key)}=>{canonical_type(t.value)})"
    raise TypeError(f"not a type name: {t!r}")


def _last_name(expr) -> str:
    if isinstance(expr, Identifier):
        return expr.name
    if isinstance(expr, MemberAccess):
        return expr.member
    return ""


def callee_name(call: FunctionCall) -> str:
    """Final name component of the called expression (``a.b.f(...)`` -> ``f``)."""
    callee = call.callee
    if isinstance(callee, CallOptions):
        callee = callee.expression
    return _last_name(callee)
