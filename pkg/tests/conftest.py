from __future__ import annotations

import json
import os
from pathlib import Path

import pytest

from ercfault.analysis import build_view, select_main_contract
from ercfault.catalog import bundled_catalog
from ercfault.corpus import ingest_local
from ercfault.injector import CampaignConfig, CompilerHook, run_campaign
from ercfault.solidity import parse

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"
SIDECARS = FIXTURES / "sidecars"
PARSER = FIXTURES / "parser"
RESPONSES = FIXTURES / "responses"
REPLAY = FIXTURES / "replay"


def read_fixture(name: str) -> str:
    return (CORPUS / name).read_text(encoding="utf-8")


def sidecar(name: str) -> dict:
    return json.loads((SIDECARS / name).read_text(encoding="utf-8"))


def view_of(name: str, contract: str | None = None):
    catalog = bundled_catalog()
    source = read_fixture(name)
    unit = parse(source, name)
    return build_view(unit, contract or select_main_contract(unit, catalog), catalog), source


@pytest.fixture(scope="session")
def catalog():
    return bundled_catalog()


@pytest.fixture(scope="session")
def compiler():
    hook = CompilerHook.detect()
    if hook is None:
        pytest.skip("no Solidity compiler available")
    return hook


@pytest.fixture(scope="session")
def corpus(catalog):
    return ingest_local(CORPUS, catalog=catalog)


@pytest.fixture(scope="session")
def campaign(corpus, catalog, compiler, tmp_path_factory):
    """The seed-42 campaign over every fixture, compile-validated, written to disk."""
    out = tmp_path_factory.mktemp("campaign42")
    manifest = run_campaign(corpus.entries, catalog, CampaignConfig(seed=42, compiler=compiler, jobs=1), out)
    return manifest, out


def pytest_collection_modifyitems(config, items):
    for item in items:
        if "compiler" in getattr(item, "fixturenames", ()) or "campaign" in getattr(item, "fixturenames", ()):
            item.add_marker(pytest.mark.compiler)
    if os.environ.get("SCB_RUN_NETWORK") == "1" and os.environ.get("SCB_EXPLORER_URL"):
        return
    skip = pytest.mark.skip(reason="set SCB_RUN_NETWORK=1 and SCB_EXPLORER_URL to run live network tests")
    for item in items:
        if "network" in item.keywords:
            item.add_marker(skip)
