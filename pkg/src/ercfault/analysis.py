"""Static queries over an inheritance-flattened contract.

Everything here is name+arity based and confined to one source unit: calls
through ``this``, interfaces, libraries or addresses are not followed.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .solidity import ast as A
from .solidity.ast import SourceSpan, walk

log = logging.getLogger(__name__)

MAX_DEPTH = 5
MSG_SENDER = "msg.sender"
_ERC_KEYS = (("erc1155", "ERC1155"), ("erc721", "ERC721"), ("erc20", "ERC20"))


class AnalysisError(Exception):
    pass


class UnknownContract(AnalysisError):
    pass


class UnresolvedBase(AnalysisError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"base contract {name!r} not found in source unit")


class UnknownFunction(AnalysisError):
    pass


class UnknownParam(AnalysisError):
    pass


class UnresolvableGetter(AnalysisError):
    pass


@dataclass(frozen=True)
class Member:
    """A function or modifier together with the contract that declares it."""

    contract: str
    node: Union[A.FunctionDef, A.ModifierDef]

    @property
    def signature(self) -> str:
        return self.node.signature

    @property
    def qualified(self) -> str:
        return f"{self.contract}.{self.signature}"

    @property
    def name(self) -> str:
        return self.node.name

    @property
    def param_names(self) -> tuple[Optional[str], ...]:
        return tuple(p.name for p in (self.node.params or ()))

    @property
    def is_modifier(self) -> bool:
        return isinstance(self.node, A.ModifierDef)

    @property
    def span(self) -> SourceSpan:
        return self.node.span


@dataclass(frozen=True)
class StateVarRef:
    name: str
    contract: str
    node: A.StateVariable = field(compare=False, repr=False)


# -- linearization ------------------------------------------------------------


def _c3_merge(seqs: list[list[str]]) -> list[str]:
    out: list[str] = []
    seqs = [list(s) for s in seqs if s]
    while seqs:
        for seq in seqs:
            head = seq[0]
            if not any(head in s[1:] for s in seqs):
                break
        else:
            raise AnalysisError("inconsistent inheritance hierarchy")
        out.append(head)
        seqs = [[x for x in s if x != head] for s in seqs]
        seqs = [s for s in seqs if s]
    return out


def linearize(unit: A.SourceUnit, name: str) -> list[str]:
    """C3 linearization, most-derived first; bases listed right-to-left as Solidity does."""
    memo: dict[str, list[str]] = {}

    def go(n: str, stack: tuple[str, ...]) -> list[str]:
        if n in memo:
            return memo[n]
        if n in stack:
            raise AnalysisError(f"cyclic inheritance through {n}")
        c = unit.contract(n)
        if c is None:
            raise UnresolvedBase(n)
        bases = list(reversed(c.base_names))
        result = [n] + _c3_merge([go(b, stack + (n,)) for b in bases] + [bases])
        memo[n] = result
        return result

    if unit.contract(name) is None:
        raise UnknownContract(name)
    return go(name, ())


# -- view ---------------------------------------------------------------------


@dataclass
class ContractView:
    unit: A.SourceUnit
    contract: A.ContractDef
    linearization: tuple[A.ContractDef, ...]
    functions: dict[str, Member]  # signature -> derived-most definition
    lineage: tuple[Member, ...]  # every function and modifier in every base
    modifiers: dict[str, Member]
    state_vars: dict[str, StateVarRef]
    events: dict[str, tuple[str, A.EventDef]]
    erc: str = "Unknown"
    erc_confidence: Optional[str] = None
    _graph: Optional["CallGraph"] = field(default=None, repr=False)

    @property
    def name(self) -> str:
        return self.contract.name

    @property
    def graph(self) -> "CallGraph":
        if self._graph is None:
            self._graph = build_call_graph(self)
        return self._graph

    def function(self, signature: str) -> Member:
        try:
            return self.functions[signature]
        except KeyError:
            raise UnknownFunction(f"{self.name}: no function {signature}") from None

    def find(self, name: str, param_types: tuple[str, ...]) -> Optional[Member]:
        return self.functions.get(f"{name}({','.join(param_types)})")

    def public_functions(self) -> list[Member]:
        return [m for m in self.functions.values() if m.node.kind == "function" and m.node.is_public]

    def member(self, qualified: str) -> Member:
        for m in self.lineage:
            if m.qualified == qualified:
                return m
        raise UnknownFunction(qualified)

    def public_getter(self, name: str) -> Optional[StateVarRef]:
        ref = self.state_vars.get(name)
        if ref is not None and ref.node.visibility == "public":
            return ref
        return None


def build_view(unit: A.SourceUnit, contract_name: str, catalog=None) -> ContractView:
    order = linearize(unit, contract_name)
    contracts = tuple(unit.contract(n) for n in order)
    functions: dict[str, Member] = {}
    modifiers: dict[str, Member] = {}
    state_vars: dict[str, StateVarRef] = {}
    events: dict[str, tuple[str, A.EventDef]] = {}
    lineage: list[Member] = []
    for c in contracts:
        for m in c.members:
            if isinstance(m, A.FunctionDef):
                member = Member(c.name, m)
                lineage.append(member)
                functions.setdefault(m.signature, member)
            elif isinstance(m, A.ModifierDef):
                member = Member(c.name, m)
                lineage.append(member)
                modifiers.setdefault(m.name, member)
            elif isinstance(m, A.StateVariable):
                state_vars.setdefault(m.name, StateVarRef(m.name, c.name, m))
            elif isinstance(m, A.EventDef):
                events.setdefault(m.name, (c.name, m))
    view = ContractView(
        unit=unit, contract=contracts[0], linearization=contracts, functions=functions,
        lineage=tuple(lineage), modifiers=modifiers, state_vars=state_vars, events=events,
    )
    view.erc, view.erc_confidence = detect_erc_with_confidence(view, catalog)
    return view


def detect_erc_with_confidence(view: ContractView, catalog=None) -> tuple[str, Optional[str]]:
    for c in view.linearization:
        lowered = c.name.lower()
        for key, tag in _ERC_KEYS:
            if key in lowered:
                return tag, "name"
    if catalog is None:
        from .catalog import bundled_catalog

        catalog = bundled_catalog()
    defined = {m.name for m in view.public_functions()}
    defined |= {name for name, ref in view.state_vars.items() if ref.node.visibility == "public"}
    hits = [tag for _, tag in _ERC_KEYS if len(catalog.required_functions(tag) & defined) >= 3]
    if len(hits) == 1:
        return hits[0], "heuristic"
    return "Unknown", None


def detect_erc(view: ContractView, catalog=None) -> str:
    return detect_erc_with_confidence(view, catalog)[0]


def select_main_contract(unit: A.SourceUnit, catalog=None) -> Optional[str]:
    """The contract a campaign mutates: the most-derived concrete ERC contract."""
    inherited = {b for c in unit.contracts for b in c.base_names}
    leaves = [c for c in unit.contracts if c.kind != "library" and c.name not in inherited]
    concrete = [c for c in leaves if c.kind == "contract"]
    for pool in (concrete, leaves):
        for c in reversed(pool):
            try:
                view = build_view(unit, c.name, catalog)
            except AnalysisError:
                continue
            if view.erc != "Unknown":
                return c.name
    if concrete:
        return concrete[-1].name
    return leaves[-1].name if leaves else None


# -- statements ---------------------------------------------------------------


@dataclass(frozen=True)
class StmtInfo:
    statement: A.Node
    parent: A.Node
    sole_body: bool  # direct body of if/for/while without braces


def iter_statements(body: Optional[A.Block]) -> Iterator[StmtInfo]:
    """Pre-order over every statement nested in ``body``."""
    if body is None:
        return

    def visit(stmt, parent, sole):
        yield StmtInfo(stmt, parent, sole)
        if isinstance(stmt, A.Block):
            for s in stmt.statements:
                yield from visit(s, stmt, False)
        elif isinstance(stmt, A.If):
            yield from visit(stmt.true_body, stmt, not isinstance(stmt.true_body, A.Block))
            if stmt.false_body is not None:
                yield from visit(stmt.false_body, stmt, not isinstance(stmt.false_body, (A.Block, A.If)))
        elif isinstance(stmt, A.For):
            if stmt.init is not None:
                yield from visit(stmt.init, stmt, False)
            yield from visit(stmt.body, stmt, not isinstance(stmt.body, A.Block))
        elif isinstance(stmt, (A.While, A.DoWhile)):
            yield from visit(stmt.body, stmt, not isinstance(stmt.body, A.Block))

    for s in body.statements:
        yield from visit(s, body, False)


def own_expressions(stmt) -> tuple:
    """Expressions evaluated by ``stmt`` itself, excluding nested statements."""
    if isinstance(stmt, A.ExpressionStatement):
        return (stmt.expression,)
    if isinstance(stmt, A.Require):
        return tuple(e for e in (stmt.condition, stmt.message) if e is not None)
    if isinstance(stmt, (A.Emit, A.Revert)):
        return tuple(stmt.args)
    if isinstance(stmt, A.Return):
        return (stmt.expression,) if stmt.expression is not None else ()
    if isinstance(stmt, A.VariableDeclarationStatement):
        return (stmt.value,) if stmt.value is not None else ()
    if isinstance(stmt, (A.If, A.While, A.DoWhile)):
        return (stmt.condition,)
    if isinstance(stmt, A.For):
        return tuple(e for e in (stmt.condition, stmt.update) if e is not None)
    return ()


def owning_statement(body: Optional[A.Block], node: A.Node) -> Optional[StmtInfo]:
    """Innermost statement of ``body`` whose own expressions contain ``node``."""
    for info in iter_statements(body):
        for expr in own_expressions(info.statement):
            if any(n is node for n in walk(expr)):
                return info
    return None


def is_msg_sender(expr) -> bool:
    if isinstance(expr, A.MemberAccess):
        return expr.member == "sender" and isinstance(expr.expression, A.Identifier) and expr.expression.name == "msg"
    if isinstance(expr, A.FunctionCall):
        return isinstance(expr.callee, A.Identifier) and expr.callee.name == "_msgSender" and not expr.args
    return False


def references(expr, names: frozenset[str]) -> bool:
    for n in walk(expr):
        if isinstance(n, A.Identifier) and n.name in names:
            return True
        if MSG_SENDER in names and is_msg_sender(n):
            return True
    return False


def lvalue_root(expr) -> Optional[str]:
    while isinstance(expr, (A.IndexAccess, A.MemberAccess)):
        expr = expr.base if isinstance(expr, A.IndexAccess) else expr.expression
    return expr.name if isinstance(expr, A.Identifier) else None


# -- call graph ---------------------------------------------------------------


@dataclass(frozen=True)
class CallEdge:
    caller: str
    callee: str
    arg_map: tuple[Optional[str], ...]  # callee param index -> caller param passed verbatim
    via_modifier: bool = False
    call: Optional[A.Node] = field(default=None, compare=False, repr=False)


@dataclass
class CallGraph:
    nodes: dict[str, Member]
    edges: tuple[CallEdge, ...]

    def callees(self, qualified: str) -> list[CallEdge]:
        return [e for e in self.edges if e.caller == qualified]

    def callers(self, qualified: str) -> list[CallEdge]:
        return [e for e in self.edges if e.callee == qualified]


def _arity_match(member: Member, call: A.FunctionCall) -> bool:
    return len(member.node.params or ()) == len(call.args)


def resolve_call(view: ContractView, caller: Member, call: A.FunctionCall) -> Optional[Member]:
    callee = call.callee
    if isinstance(callee, A.Identifier):
        for m in view.functions.values():
            if m.name == callee.name and m.node.kind == "function" and _arity_match(m, call):
                return m
        return None
    if isinstance(callee, A.MemberAccess) and isinstance(callee.expression, A.Identifier):
        qualifier = callee.expression.name
        names = [c.name for c in view.linearization]
        if qualifier == "super":
            if caller.contract not in names:
                return None
            start = names.index(caller.contract) + 1
        elif qualifier in names:
            start = names.index(qualifier)
        else:
            return None
        for c in view.linearization[start:]:
            for f in c.functions:
                if f.name == callee.member and f.kind == "function" and len(f.params) == len(call.args):
                    return Member(c.name, f)
    return None


def _arg_map(caller: Member, callee: Member, args: tuple, names: Optional[tuple]) -> tuple[Optional[str], ...]:
    params = callee.param_names
    if names is not None:
        by_name = dict(zip(names, args))
        ordered = [by_name.get(p) for p in params]
    else:
        ordered = list(args)
    caller_params = {p for p in caller.param_names if p}
    out: list[Optional[str]] = []
    for arg in ordered:
        if isinstance(arg, A.Identifier) and arg.name in caller_params:
            out.append(arg.name)
        elif arg is not None and is_msg_sender(arg):
            out.append(MSG_SENDER)
        else:
            out.append(None)
    return tuple(out)


def build_call_graph(view: ContractView) -> CallGraph:
    nodes = {m.qualified: m for m in view.lineage}
    edges: list[CallEdge] = []
    for caller in view.lineage:
        node = caller.node
        if isinstance(node, A.FunctionDef):
            for inv in node.modifiers:
                mod = view.modifiers.get(inv.name)
                if mod is None:
                    continue
                args = inv.args or ()
                edges.append(CallEdge(caller.qualified, mod.qualified, _arg_map(caller, mod, args, None), True, inv))
        if node.body is None:
            continue
        for n in walk(node.body):
            if not isinstance(n, A.FunctionCall):
                continue
            target = resolve_call(view, caller, n)
            if target is None:
                continue
            edges.append(CallEdge(caller.qualified, target.qualified, _arg_map(caller, target, n.args, n.names), False, n))
    return CallGraph(nodes, tuple(edges))


@dataclass(frozen=True)
class Reach:
    member: Member
    depth: int
    via_modifier: bool


def reachable(view: ContractView, root: Member, graph: Optional[CallGraph] = None) -> list[Reach]:
    """Root first, then callees depth-first in call order; each member once."""
    graph = graph or view.graph
    seen: set[str] = set()
    out: list[Reach] = []

    def go(m: Member, depth: int, via: bool):
        if m.qualified in seen or depth > MAX_DEPTH:
            return
        seen.add(m.qualified)
        out.append(Reach(m, depth, via))
        for e in graph.callees(m.qualified):
            go(graph.nodes[e.callee], depth + 1, via or e.via_modifier)

    go(root, 0, False)
    return out


# -- queries ------------------------------------------------------------------


@dataclass(frozen=True)
class GuardSite:
    function: str
    span: SourceSpan
    guarded_params: frozenset
    depth: int
    via_modifier: bool = False


@dataclass(frozen=True)
class Site:
    function: str
    span: SourceSpan  # the call / emit / assignment node
    statement: StmtInfo = field(compare=False)
    depth: int = 0
    via_modifier: bool = False

    @property
    def statement_span(self) -> SourceSpan:
        return self.statement.statement.span


def _root(view: ContractView, root) -> Member:
    if isinstance(root, Member):
        return root
    return view.function(root)


def find_param_checks(view: ContractView, root, param: str, graph: Optional[CallGraph] = None) -> list[GuardSite]:
    """Requires guarding ``param`` of ``root``, following verbatim argument flow.

    ``param`` may also be the pseudo-parameter ``msg.sender``, which matches
    ``msg.sender`` and ``_msgSender()`` anywhere in the call tree.
    """
    graph = graph or view.graph
    root_m = _root(view, root)
    if param != MSG_SENDER and param not in root_m.param_names:
        raise UnknownParam(f"{root_m.signature} has no parameter {param!r}")
    found: dict[tuple[int, int], GuardSite] = {}
    visited: set[tuple[str, frozenset]] = set()
    queue = deque([(root_m, frozenset({param}), 0, False)])
    while queue:
        m, tracked, depth, via = queue.popleft()
        key = (m.qualified, tracked)
        if key in visited or depth > MAX_DEPTH:
            continue
        visited.add(key)
        if m.node.body is not None:
            for n in walk(m.node.body):
                if isinstance(n, A.Require) and references(n.condition, tracked):
                    site = GuardSite(m.qualified, n.span, frozenset({param}), depth, via)
                    found.setdefault((n.span.start, n.span.end), site)
        for e in graph.callees(m.qualified):
            callee = graph.nodes[e.callee]
            names = callee.param_names
            mapped = {names[i] for i, a in enumerate(e.arg_map) if a in tracked and names[i]}
            if param == MSG_SENDER:
                mapped.add(MSG_SENDER)
            elif not mapped:
                continue
            queue.append((callee, frozenset(mapped), depth + 1, via or e.via_modifier))
    return list(found.values())


def resolve_state_var(view: ContractView, getter) -> StateVarRef:
    """State variable read by a standard getter (``getter`` is a TargetSignature or signature string)."""
    if isinstance(getter, str):
        name = getter.split("(", 1)[0]
        m = view.functions.get(getter)
    else:
        name = getter.name
        m = view.find(getter.name, getter.param_types)
    if m is None:
        ref = view.public_getter(name)
        if ref is not None:
            return ref
        raise UnknownFunction(f"{view.name}: no getter {getter if isinstance(getter, str) else getter.signature}")
    body = m.node.body
    if body is None or len(body.statements) != 1 or not isinstance(body.statements[0], A.Return):
        raise UnresolvableGetter(f"{m.qualified}: body is not a single return")
    expr = body.statements[0].expression
    params = {p for p in m.param_names if p}
    while isinstance(expr, A.IndexAccess):
        if not (isinstance(expr.index, A.Identifier) and expr.index.name in params):
            raise UnresolvableGetter(f"{m.qualified}: index is not a getter parameter")
        expr = expr.base
    if isinstance(expr, A.Identifier) and expr.name in view.state_vars:
        return view.state_vars[expr.name]
    raise UnresolvableGetter(f"{m.qualified}: return value is computed")


def find_sites(view: ContractView, root, target: str, graph: Optional[CallGraph] = None, kind: Optional[str] = None) -> list[Site]:
    """Emits of event ``target`` or calls named ``target`` reachable from ``root``."""
    if kind is None:
        kind = "event" if target in view.events else "call"
    out: list[Site] = []
    for reach in reachable(view, _root(view, root), graph):
        body = reach.member.node.body
        for info in iter_statements(body):
            stmt = info.statement
            if kind == "event":
                if isinstance(stmt, A.Emit) and stmt.event_name == target:
                    out.append(Site(reach.member.qualified, stmt.span, info, reach.depth, reach.via_modifier))
                continue
            for expr in own_expressions(stmt):
                for n in walk(expr):
                    if isinstance(n, A.FunctionCall) and A.callee_name(n) == target:
                        out.append(Site(reach.member.qualified, n.span, info, reach.depth, reach.via_modifier))
    return out


def find_assignments(view: ContractView, root, var: str, graph: Optional[CallGraph] = None) -> list[Site]:
    """Statements writing state variable ``var`` reachable from ``root``."""
    out: list[Site] = []
    for reach in reachable(view, _root(view, root), graph):
        for info in iter_statements(reach.member.node.body):
            stmt = info.statement
            if not isinstance(stmt, A.ExpressionStatement):
                continue
            e = stmt.expression
            if isinstance(e, A.Assignment) and lvalue_root(e.lhs) == var:
                out.append(Site(reach.member.qualified, e.span, info, reach.depth, reach.via_modifier))
            elif isinstance(e, A.Unary) and e.op in ("++", "--", "delete") and lvalue_root(e.operand) == var:
                out.append(Site(reach.member.qualified, e.span, info, reach.depth, reach.via_modifier))
    return out


def code_slice(view: ContractView, root, source: str | bytes, graph: Optional[CallGraph] = None) -> tuple[list[Member], str]:
    """Source text of ``root`` and its transitive callees, deduplicated, in call order."""
    data = source.encode("utf-8") if isinstance(source, str) else source
    members = [r.member for r in reachable(view, _root(view, root), graph)]
    parts = [data[m.span.start:m.span.end].decode("utf-8") for m in members]
    return members, "\n\n".join(parts)
