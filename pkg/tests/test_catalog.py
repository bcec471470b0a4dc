from __future__ import annotations

import json

import pytest

from conftest import CORPUS, sidecar, view_of
from ercfault.catalog import (
    CATEGORIES,
    CountMismatch,
    ERCS,
    BUNDLED_DIR,
    NotAnErcContract,
    SchemaError,
    applicable_rules,
    load_catalog,
)
from ercfault.injector import NotApplicable, plan_edits

TABLE = {
    "ERC20": (1, 9, 1, 0, 9, 5, 7),
    "ERC721": (12, 10, 0, 2, 4, 10, 22),
    "ERC1155": (7, 6, 0, 2, 0, 7, 18),
}


@pytest.mark.parametrize("erc", ERCS)
def test_bundled_counts(catalog, erc):
    counts = catalog.counts(erc)
    assert tuple(counts[c] for c in CATEGORIES) == TABLE[erc]


def test_bundled_totals(catalog):
    assert len(catalog.rules("ERC20")) == 32
    assert len(catalog.rules("ERC721")) == 60 and len(catalog.injectable("ERC721")) == 38
    assert len(catalog.injectable()) == 85
    assert len(catalog.rules()) == 132


def test_empty_catalog_file(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("")
    assert load_catalog(path).rules() == ()


def _doc(rules):
    return json.dumps({"version": "t", "erc": "ERC20", "doc": "d", "rules": rules})


def test_schema_errors_name_the_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(_doc([{"id": "x", "category": "Check", "target": "f(uint256 a)", "text": "t", "impact": "high"}]))
    with pytest.raises(SchemaError, match="'param'"):
        load_catalog(path)
    path.write_text(_doc([{"id": "x", "category": "Return", "target": "f() returns (uint256)", "returnType": "float",
                           "text": "t", "impact": "high"}]))
    with pytest.raises(SchemaError, match="'returnType'"):
        load_catalog(path)
    path.write_text(_doc([{"id": "x", "category": "API", "target": "f()", "text": "t", "impact": "severe"}]))
    with pytest.raises(SchemaError, match="'impact'"):
        load_catalog(path)


def test_user_catalog_is_not_count_checked(tmp_path):
    path = tmp_path / "one.json"
    path.write_text(_doc([{"id": "x", "category": "API", "target": "f()", "text": "t", "impact": "medium"}]))
    assert len(load_catalog(path).rules("ERC20")) == 1


def test_tampered_bundled_copy_fails_count_check(tmp_path, monkeypatch):
    raw = json.loads((BUNDLED_DIR / "erc20.json").read_text())
    raw["rules"] = [r for r in raw["rules"] if r["id"] != "erc20.name.api"]
    import ercfault.catalog as cat_mod

    copy = tmp_path / "erc20.json"
    copy.write_text(json.dumps(raw))
    monkeypatch.setattr(cat_mod, "_is_bundled", lambda p: True)
    with pytest.raises(CountMismatch):
        load_catalog(copy)


def test_impact_defaults(catalog):
    for r in catalog.rules():
        if r.category in ("Check", "Value", "Call"):
            assert r.impact == "high"
        elif r.category == "Logging":
            assert r.impact == "low"
    assert catalog.rule("erc20.balanceOf.return").impact == "high"


def test_rule_text_follows_document(catalog):
    doc = catalog.doc("ERC20").replace("`", "")
    assert "Returns the account balance of another account with address _owner." in doc
    assert catalog.rule("erc20.balanceOf.return").text in doc


def test_unchecked_applicability(catalog):
    view, _ = view_of("erc20_unchecked_allowance.sol")
    ids = {r.id for r in applicable_rules(view, catalog)}
    assert "erc20.transferFrom.fire-transfer" in ids
    assert "erc20.transferFrom.authorization" not in ids


def test_interface_only_gets_api_rules(catalog):
    view, _ = view_of("erc20_interface_only.sol")
    rules = applicable_rules(view, catalog)
    assert rules and {r.category for r in rules} == {"API"}


def test_full_erc20_applicable_set(catalog):
    expected = sidecar("erc20_reference.applicable.json")
    view, _ = view_of(expected["fixture"])
    assert view.name == expected["contract"]
    assert [r.id for r in applicable_rules(view, catalog)] == expected["applicable"]


def test_unknown_erc_rejected(catalog):
    from ercfault.analysis import build_view
    from ercfault.solidity import parse

    view = build_view(parse("contract Foo {}"), "Foo", catalog)
    with pytest.raises(NotAnErcContract):
        applicable_rules(view, catalog)


@pytest.mark.parametrize("name", sorted(p.name for p in CORPUS.glob("*.sol")))
def test_applicable_subset_and_injectable(name, catalog):
    view, text = view_of(name)
    rules = applicable_rules(view, catalog)
    assert set(rules) <= set(catalog.rules(view.erc))
    for rule in rules:
        edits, _ = plan_edits(view, rule, source=text.encode())
        assert edits
    for rule in set(catalog.injectable(view.erc)) - set(rules):
        with pytest.raises(NotApplicable):
            plan_edits(view, rule, source=text.encode())
