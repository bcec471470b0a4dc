from __future__ import annotations

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import CORPUS, PARSER, read_fixture
from keyword_scan import count_keyword
from ercfault.solidity import (
    ParseError,
    UnsupportedConstruct,
    ast as A,
    emit_source,
    parse,
    parse_expression,
    parse_member,
    parse_statement,
    walk,
)

FIXTURE_NAMES = sorted(p.name for p in CORPUS.glob("*.sol"))


def test_unchecked_shape():
    unit = parse(read_fixture("erc20_unchecked_allowance.sol"))
    (contract,) = unit.contracts
    assert [v.name for v in contract.state_vars] == ["_balances", "_allowances"]
    assert [f.name for f in contract.functions] == ["transferFrom", "_transfer"]


def test_minimal_contract():
    unit = parse("contract A {}")
    assert unit.contracts == (A.ContractDef(kind="contract", name="A"),)


def test_empty_unit_emits_only_pragmas():
    assert emit_source(parse("")) == ""
    assert emit_source(parse("pragma solidity ^0.8.0;\n")).strip() == "pragma solidity ^0.8.0;"


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_keyword_counts_match_scan(name):
    text = read_fixture(name)
    unit = parse(text, name)
    functions = sum(1 for n in walk(unit) if isinstance(n, A.FunctionDef) and n.kind == "function")
    events = sum(1 for n in walk(unit) if isinstance(n, A.EventDef))
    assert functions == count_keyword(text, "function")
    assert events == count_keyword(text, "event")


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_round_trip(name):
    unit = parse(read_fixture(name), name)
    assert parse(emit_source(unit), name) == unit


_STATEMENTS = (A.Require, A.Emit, A.Return, A.ExpressionStatement, A.VariableDeclarationStatement, A.If, A.Revert)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_span_soundness(name):
    data = read_fixture(name).encode("utf-8")
    unit = parse(data, name)
    checked = 0
    for node in walk(unit):
        text = data[node.span.start:node.span.end].decode("utf-8") if node.span else None
        if isinstance(node, _STATEMENTS):
            reparsed = parse_statement(text)
        elif isinstance(node, (A.FunctionDef, A.EventDef, A.ModifierDef, A.StateVariable)):
            reparsed = parse_member(text)
        elif isinstance(node, (A.FunctionCall, A.Binary, A.IndexAccess, A.MemberAccess)):
            reparsed = parse_expression(text)
        else:
            continue
        assert type(reparsed) is type(node)
        assert reparsed == node
        checked += 1
    assert checked > 0


@pytest.mark.parametrize(
    "name, construct",
    [
        ("reject_assembly.sol", "inline assembly"),
        ("reject_try_catch.sol", "try/catch"),
        ("reject_udvt.sol", "user-defined value type"),
    ],
)
def test_unsupported_constructs_rejected(name, construct):
    with pytest.raises(UnsupportedConstruct) as info:
        parse((PARSER / name).read_text(), name)
    assert info.value.construct == construct
    assert info.value.line > 0


def test_legacy_syntax_accepted():
    unit = parse((PARSER / "legacy_syntax.sol").read_text())
    (contract,) = unit.contracts
    body = contract.functions[1].body
    assert any(isinstance(s, A.If) and isinstance(s.true_body, A.Throw) for s in body.statements)
    assert parse(emit_source(unit)) == unit


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        parse("contract A { function f( }")
    assert info.value.line == 1 and info.value.column > 1


def test_emitted_balance_of_compiles(compiler):
    text = emit_source(parse(read_fixture("erc20_balance_of.sol")))
    assert compiler.run(text, "balance_of").ok


# -- generated contracts ------------------------------------------------------

_idents = st.sampled_from(["a", "b", "value", "owner", "to", "amount", "x1"])
_types = st.sampled_from(["uint256", "address", "bool", "uint8", "bytes32"])


@st.composite
def expressions(draw, depth=2):
    if depth == 0 or draw(st.booleans()):
        return draw(st.one_of(_idents, st.integers(0, 10**6).map(str), st.sampled_from(["true", "msg.sender"])))
    op = draw(st.sampled_from(["+", "-", "*", "==", "<", ">=", "&&"]))
    left = draw(expressions(depth - 1))
    right = draw(expressions(depth - 1))
    form = draw(st.sampled_from(["bin", "paren", "index", "call"]))
    if form == "paren":
        return f"({left} {op} {right})"
    if form == "index":
        return f"m[{left}]"
    if form == "call":
        return f"g({left}, {right})"
    return f"{left} {op} {right}"


@st.composite
def statements(draw):
    kind = draw(st.sampled_from(["require", "assign", "decl", "emit", "if", "return"]))
    e = draw(expressions())
    if kind == "require":
        return f"require({e}, \"msg\");"
    if kind == "assign":
        return f"{draw(_idents)} = {e};"
    if kind == "decl":
        return f"{draw(_types)} tmp = {e};"
    if kind == "emit":
        return f"emit E({e});"
    if kind == "if":
        return f"if ({e}) {{ {draw(_idents)} += 1; }} else {{ revert(); }}"
    return f"return {e};"


@st.composite
def contracts(draw):
    fns = []
    for k in range(draw(st.integers(0, 3))):
        params = ", ".join(f"{draw(_types)} p{j}" for j in range(draw(st.integers(0, 3))))
        body = "\n        ".join(draw(st.lists(statements(), max_size=5)))
        vis = draw(st.sampled_from(["public", "external", "internal", "private"]))
        fns.append(f"    function f{k}({params}) {vis} returns (uint256) {{\n        {body}\n    }}")
    state = "\n".join(f"    {draw(_types)} public s{k};" for k in range(draw(st.integers(0, 3))))
    return "contract G {\n    mapping(uint256 => uint256) m;\n    event E(uint256 v);\n" + state + "\n" + "\n".join(fns) + "\n}\n"


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(contracts())
def test_generated_round_trip(text):
    unit = parse(text)
    assert parse(emit_source(unit)) == unit


@settings(max_examples=150, deadline=None)
@given(contracts())
def test_generated_spans_slice_to_their_nodes(text):
    data = text.encode()
    unit = parse(data)
    for node in walk(unit):
        if isinstance(node, (A.Require, A.Emit, A.Return, A.ExpressionStatement)):
            assert parse_statement(data[node.span.start:node.span.end].decode()) == node
