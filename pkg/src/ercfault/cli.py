"""Command-line entry point: ``ercfault <subcommand> ...``.

Exit status is 0 on success, 1 when the work itself fails (I/O, parse,
compiler, network, model errors) and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analysis import AnalysisError, build_view, select_main_contract
from .baseline import check_compliance
from .catalog import ERCS, Catalog, NotAnErcContract, bundled_catalog, load_catalog
from .corpus import ExplorerConfig, FetchError, compute_stats, erc_filter, fetch_verified_source, ingest_local
from .harness.client import (
    AuditLog,
    ClientConfig,
    LiveTransport,
    QueryError,
    ReplayTransport,
    SeededStub,
    StubTransport,
    read_log,
)
from .harness.prompts import MODES, Template, TemplateError
from .harness.report import generate_report
from .harness.run import build_prompts, load_mutants, run_queries, score_log
from .harness.score import EvalOutcome
from .injector import (
    CampaignConfig,
    CampaignManifest,
    CompilerHook,
    InjectionError,
    run_campaign,
    verify_campaign,
)
from .solidity import parse
from .solidity.errors import SolidityError

log = logging.getLogger("ercfault")

MANIFEST = "manifest.json"
RESPONSES = "responses.log"
REPORT = "report.txt"

_OPERATIONAL = (OSError, ValueError, SolidityError, AnalysisError, InjectionError, FetchError, QueryError, KeyError)


class UsageError(Exception):
    pass


# -- helpers ------------------------------------------------------------------


def _catalog(args) -> Catalog:
    return load_catalog(args.catalog) if args.catalog else bundled_catalog()


def _provenance(catalog_version: str, seed=None, **extra) -> dict:
    out = {"tool_version": __version__, "catalog_version": catalog_version, "seed": seed}
    out.update({k: v for k, v in extra.items() if v is not None})
    return out


def _header(prov: dict) -> str:
    return "".join(f"# {k}: {prov[k]}\n" for k in sorted(prov))


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _hook(args) -> Optional[CompilerHook]:
    if getattr(args, "compiler", None):
        return CompilerHook(args.compiler)
    return CompilerHook.detect()


def _manifest_and_mutants(args) -> tuple[CampaignManifest, Path]:
    manifest_path = Path(args.manifest)
    manifest = CampaignManifest.load(manifest_path)
    return manifest, Path(args.mutants) if args.mutants else manifest_path.parent


# -- subcommands --------------------------------------------------------------


def cmd_ingest(args) -> int:
    catalog = _catalog(args)
    flt = erc_filter(args.erc) if args.erc else None
    result = ingest_local(args.input, flt, catalog, args.jobs)
    out = _out_dir(args.out)
    payload = {
        "provenance": _provenance(catalog.version),
        "entries": [
            {"contract_id": e.contract_id, "relpath": e.relpath, "loc": e.loc, "erc": e.erc, "contract": e.contract}
            for e in result.entries
        ],
        "rejected": [{"path": r.path, "reason": r.reason} for r in result.rejected],
    }
    _write_json(out / "corpus.json", payload)
    print(f"{len(result.entries)} contracts ingested, {len(result.rejected)} rejected")
    return 0


def cmd_fetch(args) -> int:
    addresses = list(args.address or ())
    if args.addresses:
        addresses += [a.strip() for a in Path(args.addresses).read_text().splitlines() if a.strip() and not a.startswith("#")]
    if not addresses:
        raise UsageError("give at least one --address or an --addresses file")
    out = _out_dir(args.out)
    if not os.environ.get("SCB_EXPLORER_URL"):
        raise UsageError("SCB_EXPLORER_URL is not set")
    config = ExplorerConfig.from_env(chain=args.chain, cache_dir=args.cache or out / "cache")
    failures = 0
    for addr in addresses:
        try:
            entry = fetch_verified_source(addr, config, catalog=bundled_catalog())
        except FetchError as exc:
            failures += 1
            log.error("%s: %s", addr, exc)
            continue
        (out / f"{addr.lower()}.sol").write_text(entry.source, encoding="utf-8")
    print(f"{len(addresses) - failures} fetched, {failures} failed")
    return 1 if failures else 0


def cmd_inject(args) -> int:
    catalog = _catalog(args)
    hook = None
    if args.validate:
        hook = _hook(args)
        if hook is None:
            log.error("no Solidity compiler found; set SCB_COMPILER or pass --compiler")
            return 1
    corpus = ingest_local(args.input, erc_filter(args.erc) if args.erc else None, catalog, args.jobs)
    if not corpus.entries:
        log.error("no analysable contracts under %s", args.input)
        return 1
    config = CampaignConfig(seed=args.seed, min_errors=args.min_errors, max_errors=args.max_errors, compiler=hook, jobs=args.jobs)
    manifest = run_campaign(corpus.entries, catalog, config, args.out)
    failed = [c.contract_id for c in manifest.contracts if c.validation == "failed"]
    print(f"{len(manifest.records)} violations in {len(manifest.contracts)} contracts, {len(manifest.skipped)} skipped")
    for cid in failed:
        log.error("%s: mutant does not compile", cid)
    return 1 if failed else 0


def cmd_validate(args) -> int:
    catalog = _catalog(args)
    manifest, mutant_dir = _manifest_and_mutants(args)
    originals_root = Path(args.originals)
    mutants = load_mutants(manifest, mutant_dir)
    originals = {c.contract_id: (originals_root / c.original_path).read_text(encoding="utf-8") for c in manifest.contracts}
    sound = dict(verify_campaign(manifest, originals, mutants, catalog))
    hook = None if args.no_compile else _hook(args)
    if hook is None and not args.no_compile:
        log.error("no Solidity compiler found; set SCB_COMPILER, pass --compiler, or use --no-compile")
        return 1
    checks = hook.run_many({c.contract_id: mutants[c.contract_id] for c in manifest.contracts}) if hook else {}
    rows, bad = [], 0
    for c in manifest.contracts:
        compiled = None
        if hook is not None:
            compiled = checks[c.contract_id].ok
            bad += not compiled
        for r in c.records:
            bad += not sound[r.record_id]
            rows.append({"record_id": r.record_id, "sound": sound[r.record_id], "compiles": compiled})
    payload = {"provenance": _provenance(manifest.catalog_version, manifest.seed), "records": rows}
    if args.out:
        _write_json(_out_dir(args.out) / "validation.json", payload)
    print(f"{len(rows)} records checked, {bad} problems")
    return 1 if bad else 0


def cmd_check(args) -> int:
    catalog = _catalog(args)
    target = Path(args.input)
    if args.manifest:
        # mutants may no longer look like their ERC, so take contract and ERC from the campaign
        manifest = CampaignManifest.load(args.manifest)
        root = target if target.is_dir() else Path(args.manifest).parent
        sources = [(c.mutant_path, (root / c.mutant_path).read_text(encoding="utf-8"), c.contract, c.erc)
                   for c in manifest.contracts]
    elif target.is_dir():
        sources = [(e.relpath, e.source, e.contract, None) for e in ingest_local(target, catalog=catalog, jobs=args.jobs)]
    else:
        sources = [(target.name, target.read_text(encoding="utf-8"), None, None)]
    results, lines = [], []
    for rel, source, contract, erc in sources:
        unit = parse(source, rel)
        if contract is None:
            contract = select_main_contract(unit, catalog)
        if contract is None:
            lines.append(f"{rel}: no contract")
            continue
        view = build_view(unit, contract, catalog)
        erc = erc or view.erc
        try:
            findings = check_compliance(view, catalog, erc)
        except NotAnErcContract:
            lines.append(f"{rel}: {contract} is not a recognised ERC contract")
            continue
        results.append({"path": rel, "contract": contract, "erc": erc, "findings": [f.to_dict() for f in findings]})
        lines.append(f"{rel}: {contract} ({erc}) {len(findings)} finding(s)")
        lines += [f"  [{f.kind}] {f.rule_id}: {f.details}" for f in findings]
    prov = _provenance(catalog.version)
    if args.out:
        out = _out_dir(args.out)
        _write_json(out / "findings.json", {"provenance": prov, "contracts": results})
        (out / "findings.txt").write_text(_header(prov) + "\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return 0


def _transport(args):
    if args.transport == "stub":
        return StubTransport(args.stub_reply)
    if args.transport == "seeded":
        return SeededStub(args.stub_seed)
    if args.transport == "replay":
        if not args.replay:
            raise UsageError("--transport replay needs --replay LOG")
        return ReplayTransport(args.replay)
    return LiveTransport()


def cmd_eval(args) -> int:
    catalog = _catalog(args)
    manifest, mutant_dir = _manifest_and_mutants(args)
    template = Template.load(args.template, args.mode) if args.template else None
    prompts = build_prompts(manifest, load_mutants(manifest, mutant_dir), catalog, args.mode, template)
    config = ClientConfig(endpoint=args.endpoint or "", model_id=args.model, temperature=args.temperature,
                          max_context_tokens=args.max_tokens)
    out = _out_dir(args.out)
    log_path = out / RESPONSES
    if not log_path.exists():
        prov = _provenance(manifest.catalog_version, manifest.seed, mode=args.mode, model=args.model, transport=args.transport)
        log_path.write_text(json.dumps({"provenance": prov}, sort_keys=True) + "\n", encoding="utf-8")
    results = run_queries(prompts, config, _transport(args), AuditLog(log_path), args.jobs)
    failed = sum(r.error is not None for r in results)
    print(f"{len(results)} prompts sent, {failed} failed; log at {log_path}")
    return 1 if failed else 0


def _write_report(outcomes, manifest, mode, out: Path, extra: dict) -> None:
    from .plotting import plot_report

    report = generate_report(outcomes, manifest, mode, extra)
    (out / REPORT).write_text(report.to_text(), encoding="utf-8")
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    plot_report(report, out / "report.png")
    print(report.to_text(), end="")


def cmd_score(args) -> int:
    catalog = _catalog(args)
    manifest, mutant_dir = _manifest_and_mutants(args)
    entries = read_log(args.responses)
    outcomes = score_log(manifest, entries, load_mutants(manifest, mutant_dir), catalog, args.mode, not args.strict)
    out = _out_dir(args.out or Path(args.responses).parent)
    extra = {"scoring": "strict" if args.strict else "sibling"}
    with (out / "outcomes.jsonl").open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"provenance": extra}, sort_keys=True) + "\n")
        for o in outcomes:
            fh.write(json.dumps(o.to_dict(), sort_keys=True) + "\n")
    _write_report(outcomes, manifest, args.mode, out, extra)
    return 0


def cmd_report(args) -> int:
    manifest = CampaignManifest.load(args.manifest)
    rows = [json.loads(line) for line in Path(args.outcomes).read_text(encoding="utf-8").splitlines() if line.strip()]
    extra = {}
    if rows and "provenance" in rows[0]:
        extra = rows.pop(0)["provenance"]
    _write_report([EvalOutcome.from_dict(r) for r in rows], manifest, args.mode, _out_dir(args.out), extra)
    return 0


def cmd_stats(args) -> int:
    from .plotting import plot_stats

    catalog = _catalog(args)
    corpus = ingest_local(args.input, erc_filter(args.erc) if args.erc else None, catalog, args.jobs)
    manifest = CampaignManifest.load(args.manifest) if args.manifest else None
    stats = compute_stats(corpus.entries, manifest)
    prov = _provenance(catalog.version, manifest.seed if manifest else None)
    out = _out_dir(args.out)
    _write_json(out / "stats.json", {"provenance": prov, **stats.to_dict()})
    lines = [f"contracts: {stats.count}", f"mean LOC: {stats.mean_loc:.2f}", f"stddev LOC: {stats.stddev_loc:.2f}"]
    if stats.mean_errors is not None:
        lines.append(f"mean violations per contract: {stats.mean_errors:.2f}")
        lines += [f"impact {k}: {v}" for k, v in stats.impact_histogram.items()]
    text = "\n".join(lines) + "\n"
    (out / "stats.txt").write_text(_header(prov) + "\n" + text, encoding="utf-8")
    plot_stats([e.loc for e in corpus.entries], stats.impact_histogram, out / "stats.png")
    print(text, end="")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ercfault", description="Inject ERC rule violations and score auditors against them.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    default_jobs = os.cpu_count() or 1

    def add(name, func, help_text, jobs=True, catalog=True):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        if catalog:
            p.add_argument("--catalog", help="catalog file or directory (default: bundled)")
        if jobs:
            p.add_argument("--jobs", type=int, default=default_jobs, help="worker count")
        return p

    p = add("ingest", cmd_ingest, "Parse and tag a directory of Solidity sources.")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--erc", action="append", choices=ERCS)

    p = add("fetch", cmd_fetch, "Download verified sources from a block explorer.", jobs=False, catalog=False)
    p.add_argument("--address", action="append")
    p.add_argument("--addresses", help="file with one address per line")
    p.add_argument("--chain", default="ethereum")
    p.add_argument("--cache")
    p.add_argument("--out", required=True)

    p = add("inject", cmd_inject, "Plant rule violations into every contract of a corpus.")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--erc", action="append", choices=ERCS)
    p.add_argument("--min-errors", type=int, default=1)
    p.add_argument("--max-errors", type=int, default=3)
    p.add_argument("--validate", action="store_true", help="compile every mutant")
    p.add_argument("--compiler", help="compiler command template with {file} and {outdir}")

    p = add("validate", cmd_validate, "Re-check a campaign: compile mutants and confirm every violation holds.", jobs=False)
    p.add_argument("--manifest", required=True)
    p.add_argument("--originals", required=True, help="directory the campaign was injected from")
    p.add_argument("--mutants")
    p.add_argument("--compiler")
    p.add_argument("--no-compile", action="store_true")
    p.add_argument("--out")

    p = add("check", cmd_check, "Run the declaration-level compliance checker.")
    p.add_argument("--in", dest="input", required=True, help="a .sol file or a directory")
    p.add_argument("--manifest", help="campaign manifest naming each mutant's contract and ERC")
    p.add_argument("--out")

    p = add("eval", cmd_eval, "Prompt a model about a campaign and log every response.")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mutants")
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--transport", choices=("stub", "seeded", "replay", "live"), default="stub")
    p.add_argument("--replay", help="responses log to replay")
    p.add_argument("--stub-reply", default="NO VIOLATIONS")
    p.add_argument("--stub-seed", type=int, default=0)
    p.add_argument("--template")
    p.add_argument("--endpoint")
    p.add_argument("--model", default="stub")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--max-tokens", type=int, default=128_000)

    p = add("score", cmd_score, "Score a responses log against a campaign manifest.", jobs=False)
    p.add_argument("--manifest", required=True)
    p.add_argument("--responses", required=True)
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--mutants")
    p.add_argument("--out")
    p.add_argument("--strict", action="store_true", help="do not credit also-violated sibling rules")

    p = add("stats", cmd_stats, "Corpus line-count and violation statistics.")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--manifest")
    p.add_argument("--erc", action="append", choices=ERCS)
    p.add_argument("--out", required=True)

    p = add("report", cmd_report, "Rebuild report tables and figure from scored outcomes.", jobs=False, catalog=False)
    p.add_argument("--manifest", required=True)
    p.add_argument("--outcomes", required=True)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--out", required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (UsageError, TemplateError) as exc:
        parser._subparsers._group_actions[0].choices[args.command].print_usage(sys.stderr)
        print(f"ercfault {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except _OPERATIONAL as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
