"""Rule-driven fault injection.

Each operator turns (view, rule) into a list of ``MutationEdit`` against the
original source bytes. Edits are spliced into the untouched text, so comments
and layout outside the edited statements survive verbatim.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import shlex
import shutil
import string
import subprocess
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from Crypto.Hash import keccak

from . import __version__
from .analysis import (
    AnalysisError,
    ContractView,
    Member,
    StmtInfo,
    UnresolvableGetter,
    build_view,
    find_assignments,
    find_param_checks,
    find_sites,
    iter_statements,
    owning_statement,
    reachable,
    resolve_state_var,
    select_main_contract,
)
from .catalog import CATEGORIES, ERCS, Catalog, Rule
from .solidity import ast as A
from .solidity import parse
from .solidity.ast import SourceSpan, walk
from .solidity.emit import emit_expression
from .solidity.errors import SolidityError

log = logging.getLogger(__name__)

MAX_REDRAWS = 16
K_MAX = 2**31


class InjectionError(Exception):
    pass


class NotApplicable(InjectionError):
    pass


class HookUnavailable(InjectionError):
    pass


class OverlappingEdits(InjectionError):
    pass


# -- records ------------------------------------------------------------------


@dataclass(frozen=True)
class MutationEdit:
    kind: str  # delete | replace
    span: SourceSpan
    replacement: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "span": self.span.to_dict(), "replacement": self.replacement}

    @classmethod
    def from_dict(cls, d: dict) -> "MutationEdit":
        return cls(d["kind"], SourceSpan.from_dict(d["span"]), d.get("replacement", ""))


@dataclass(frozen=True)
class ViolationRecord:
    contract_id: str
    rule_id: str
    category: str
    function: str
    edits: tuple = ()
    impact: str = "medium"
    origin: str = "injected"  # injected | human
    erc: str = ""
    also_violated: tuple = ()
    details: dict = field(default_factory=dict, compare=False)

    @property
    def record_id(self) -> str:
        return f"{self.contract_id}:{self.rule_id}"

    def to_dict(self) -> dict:
        return {
            "contract_id": self.contract_id,
            "rule_id": self.rule_id,
            "category": self.category,
            "erc": self.erc,
            "function": self.function,
            "impact": self.impact,
            "origin": self.origin,
            "edits": [e.to_dict() for e in self.edits],
            "also_violated": list(self.also_violated),
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ViolationRecord":
        return cls(
            contract_id=d["contract_id"], rule_id=d["rule_id"], category=d["category"],
            function=d["function"], edits=tuple(MutationEdit.from_dict(e) for e in d.get("edits", ())),
            impact=d.get("impact", "medium"), origin=d.get("origin", "injected"), erc=d.get("erc", ""),
            also_violated=tuple(d.get("also_violated", ())), details=dict(d.get("details", {})),
        )


# -- splicing -----------------------------------------------------------------


def _as_bytes(source: str | bytes) -> bytes:
    return source.encode("utf-8") if isinstance(source, str) else source


def _line_extent(data: bytes, start: int, end: int) -> Optional[tuple[int, int]]:
    """Whole-line range around [start, end) if nothing but whitespace shares those lines."""
    ls = data.rfind(b"\n", 0, start) + 1
    le = data.find(b"\n", end)
    le = len(data) if le < 0 else le + 1
    if data[ls:start].strip() or data[end:le].strip():
        return None
    return ls, le


def apply_edits(source: str | bytes, edits: Iterable[MutationEdit]) -> str:
    """Splice ``edits`` into ``source``; deletions swallow lines they leave blank."""
    data = _as_bytes(source)
    edits = sorted(edits, key=lambda e: (e.span.start, e.span.end))
    for a, b in zip(edits, edits[1:]):
        if a.span.overlaps(b.span) or a.span == b.span:
            raise OverlappingEdits(f"edits overlap at bytes {a.span.start}-{a.span.end} and {b.span.start}-{b.span.end}")
    ranges = []
    for e in edits:
        lo, hi = e.span.start, e.span.end
        if e.kind == "delete":
            ext = _line_extent(data, lo, hi)
            if ext is not None:
                lo, hi = ext
        ranges.append([lo, hi, e.replacement.encode("utf-8")])
    # a widened deletion must not swallow a neighbouring edit
    for i, (lo, hi, _) in enumerate(ranges):
        e = edits[i]
        clash = any(j != i and ranges[j][0] < hi and lo < ranges[j][1] for j in range(len(ranges)))
        if clash:
            ranges[i][0], ranges[i][1] = e.span.start, e.span.end
    out = data
    for lo, hi, rep in sorted(ranges, key=lambda r: r[0], reverse=True):
        out = out[:lo] + rep + out[hi:]
    return out.decode("utf-8")


# -- operator helpers ---------------------------------------------------------


def _delete(info: StmtInfo) -> MutationEdit:
    if info.sole_body:
        return MutationEdit("replace", info.statement.span, "{}")
    return MutationEdit("delete", info.statement.span)


def _stmt_at(member: Member, span: SourceSpan) -> StmtInfo:
    for info in iter_statements(member.node.body):
        if info.statement.span == span:
            return info
    raise InjectionError(f"no statement at {span} in {member.qualified}")


def _normalize(edits: Iterable[MutationEdit]) -> list[MutationEdit]:
    """Drop duplicates and edits nested inside another edit."""
    uniq = sorted(set(edits), key=lambda e: (e.span.start, -e.span.end))
    out: list[MutationEdit] = []
    for e in uniq:
        if out and out[-1].span.contains(e.span):
            continue
        out.append(e)
    return out


def target_function(view: ContractView, rule: Rule) -> Member:
    m = view.find(rule.target.name, rule.target.param_types)
    if m is None:
        raise NotApplicable(f"{view.name} does not define {rule.target.signature}")
    return m


def implementation_param(rule: Rule, root: Member) -> str:
    if rule.param == "msg.sender":
        return rule.param
    idx = rule.target.param_index(rule.param)
    name = root.param_names[idx]
    if not name:
        raise NotApplicable(f"{root.signature}: parameter {idx} is unnamed")
    return name


_DELETABLE = (A.ExpressionStatement, A.Require, A.Emit, A.If)


def _deletable(info: Optional[StmtInfo]) -> bool:
    return info is not None and isinstance(info.statement, _DELETABLE)


# -- the six operators --------------------------------------------------------


def inject_check(view: ContractView, rule: Rule, graph=None) -> list[MutationEdit]:
    return _plan_check(view, rule, graph)[0]


def _plan_check(view, rule, graph=None):
    root = target_function(view, rule)
    param = implementation_param(rule, root)
    guards = find_param_checks(view, root, param, graph)
    if not guards:
        raise NotApplicable(f"no require guards {param} in {root.signature}")
    edits = [_delete(_stmt_at(view.member(g.function), g.span)) for g in guards]
    details = {"param": param}
    if any(g.via_modifier for g in guards):
        details["via_modifier"] = True
    return _normalize(edits), details


def _references_to(view: ContractView, fn: A.FunctionDef) -> list[tuple[Member, A.Node]]:
    """Calls of ``fn`` anywhere in the lineage, plus bare (non-call) references to its name."""
    arity = len(fn.params)
    out = []
    for m in view.lineage:
        body = m.node.body
        if body is None:
            continue
        call_of = {}
        for n in walk(body):
            if isinstance(n, A.FunctionCall):
                callee = n.callee.expression if isinstance(n.callee, A.CallOptions) else n.callee
                call_of[id(callee)] = n
        for n in walk(body):
            named = (isinstance(n, A.Identifier) and n.name == fn.name) or (
                isinstance(n, A.MemberAccess) and n.member == fn.name
            )
            if not named:
                continue
            call = call_of.get(id(n))
            if call is None:
                out.append((m, n))
            elif len(call.args) == arity:
                out.append((m, call))
    return out


def inject_api(view: ContractView, rule: Rule) -> list[MutationEdit]:
    return _plan_api(view, rule)[0]


def _plan_api(view, rule, graph=None):
    root = target_function(view, rule)
    sig = root.signature
    decls = [m for m in view.lineage if not m.is_modifier and m.signature == sig]
    edits = [MutationEdit("delete", m.node.span) for m in decls]
    removed = [m.node.span for m in decls]
    for m, node in _references_to(view, root.node):
        if any(span.contains(node.span) for span in removed):
            continue
        if not isinstance(node, A.FunctionCall):
            raise NotApplicable(f"{sig} is referenced without being called in {m.qualified}")
        info = owning_statement(m.node.body, node)
        if not _deletable(info):
            raise NotApplicable(f"call to {sig} in {m.qualified} is consumed by a {type(info.statement).__name__ if info else 'declaration'}")
        edits.append(_delete(info))
    details = {"removed": sorted(m.qualified for m in decls)}
    return _normalize(edits), details


_INT_PREFIXES = ("uint", "int")


def _return_kind(t) -> Optional[str]:
    if not isinstance(t, A.ElementaryTypeName):
        return None
    name = t.name
    if name.startswith(_INT_PREFIXES):
        return "int"
    if name in ("bool", "address", "string"):
        return name
    return None


def _int_bits(t: A.ElementaryTypeName) -> int:
    name = t.name
    signed = not name.startswith("uint")
    digits = name[4:] if name.startswith("uint") else name[3:]
    bits = int(digits) if digits else 256
    return bits - 1 if signed else bits


def _parse_int_literal(lit: A.Literal) -> Optional[int]:
    if lit.kind != "number" or lit.unit is not None:
        return None
    text = lit.value.replace("_", "")
    try:
        if text.lower().startswith("0x"):
            return int(text, 16)
        if "e" in text.lower():
            mant, exp = text.lower().split("e")
            if "." in mant or int(exp) < 0:
                return None
            return int(mant) * 10 ** int(exp)
        return int(text)
    except ValueError:
        return None


_PRIMARY = (A.Identifier, A.IndexAccess, A.MemberAccess, A.FunctionCall, A.TupleExpression, A.Literal)


def checksum_address(raw: bytes) -> str:
    hexaddr = raw.hex()
    digest = keccak.new(digest_bits=256, data=hexaddr.encode("ascii")).hexdigest()
    return "0x" + "".join(c.upper() if c.isalpha() and int(digest[i], 16) >= 8 else c for i, c in enumerate(hexaddr))


def random_address(rng: random.Random) -> str:
    raw = rng.getrandbits(160).to_bytes(20, "big")
    if raw == bytes(20):
        raw = b"\x00" * 19 + b"\x01"
    return checksum_address(raw)


def _mutate_return(expr, source: bytes, ret_type, kind: str, rng: random.Random) -> str:
    text = source[expr.span.start:expr.span.end].decode("utf-8")
    if kind == "int":
        bits = _int_bits(ret_type)
        k = rng.randint(1, min(K_MAX, 2**bits - 1))
        if isinstance(expr, A.Literal):
            value = _parse_int_literal(expr)
            if value is not None:
                return str((value + k) % 2**bits)
        if isinstance(expr, _PRIMARY):
            return f"{text} + {k}"
        return f"({text}) + {k}"
    if kind == "bool":
        return f"!({text})"
    if kind == "address":
        literal = random_address(rng)
        return f"payable({literal})" if ret_type.payable else literal
    # string
    if isinstance(expr, A.Literal) and expr.kind == "string" and _is_empty_string_literal(expr.value):
        length = rng.randint(1, 12)
        return '"' + "".join(rng.choice(string.ascii_letters) for _ in range(length)) + '"'
    return '""'


def _is_empty_string_literal(raw: str) -> bool:
    body = raw[7:] if raw.startswith("unicode") else raw
    return body in ('""', "''")


def inject_return(view: ContractView, rule: Rule, rng: random.Random, source: str | bytes = b"") -> list[MutationEdit]:
    return _plan_return(view, rule, rng=rng, source=source)[0]


def _plan_return(view, rule, graph=None, rng=None, source=b""):
    root = target_function(view, rule)
    fn = root.node
    if fn.body is None:
        raise NotApplicable(f"{root.signature} has no body")
    if not fn.returns or len(fn.returns) != 1 or _return_kind(fn.returns[0].type_name) != rule.return_type:
        raise NotApplicable(f"{root.signature} does not return a single {rule.return_type}")
    ret_type = fn.returns[0].type_name
    returns = [
        info.statement for info in iter_statements(fn.body)
        if isinstance(info.statement, A.Return) and info.statement.expression is not None
    ]
    if not returns:
        raise NotApplicable(f"{root.signature} has no return statement with a value")
    rng = rng or random.Random(0)
    data = _as_bytes(source) if source else None
    edits = []
    for ret in returns:
        expr = ret.expression
        if data is None:
            # applicability probe: only the span matters
            edits.append(MutationEdit("replace", expr.span, emit_expression(expr)))
        else:
            edits.append(MutationEdit("replace", expr.span, _mutate_return(expr, data, ret_type, rule.return_type, rng)))
    return _normalize(edits), {}


def inject_value(view: ContractView, rule: Rule, graph=None) -> list[MutationEdit]:
    return _plan_value(view, rule, graph)[0]


def _plan_value(view, rule, graph=None):
    root = target_function(view, rule)
    try:
        var = resolve_state_var(view, rule.getter)
    except (UnresolvableGetter, AnalysisError) as exc:
        log.info("%s: value rule %s skipped: %s", view.name, rule.id, exc)
        raise NotApplicable(str(exc)) from exc
    sites = find_assignments(view, root, var.name, graph)
    if not sites:
        raise NotApplicable(f"{root.signature} never writes {var.name}")
    return _normalize(_delete(s.statement) for s in sites), {"state_var": var.name, "declared_in": var.contract}


def inject_call(view: ContractView, rule: Rule, graph=None) -> list[MutationEdit]:
    return _plan_call(view, rule, graph)[0]


def _plan_call(view, rule, graph=None):
    graph = graph or view.graph
    root = target_function(view, rule)
    sites = find_sites(view, root, rule.callee, graph, kind="call")
    if not sites:
        raise NotApplicable(f"{root.signature} never calls {rule.callee}")
    in_tree = {r.member.qualified for r in reachable(view, root, graph)}
    edits: list[MutationEdit] = []
    escalated: list[str] = []

    def remove(member: Member, info: Optional[StmtInfo], seen: frozenset):
        if _deletable(info):
            edits.append(_delete(info))
            return
        # the call's value is consumed; drop the helper's call sites instead
        if member.qualified == root.qualified or member.qualified in seen:
            raise NotApplicable(f"call to {rule.callee} is consumed inside {member.signature}")
        callers = [e for e in graph.callers(member.qualified) if e.caller in in_tree and not e.via_modifier]
        if not callers:
            raise NotApplicable(f"{member.qualified} has no removable call sites")
        escalated.append(member.qualified)
        for e in callers:
            caller = graph.nodes[e.caller]
            remove(caller, owning_statement(caller.node.body, e.call), seen | {member.qualified})

    for s in sites:
        remove(view.member(s.function), s.statement, frozenset())
    details = {"escalated_through": sorted(set(escalated))} if escalated else {}
    return _normalize(edits), details


def inject_logging(view: ContractView, rule: Rule, graph=None) -> list[MutationEdit]:
    return _plan_logging(view, rule, graph)[0]


def _plan_logging(view, rule, graph=None):
    root = target_function(view, rule)
    sites = find_sites(view, root, rule.event, graph, kind="event")
    if not sites:
        raise NotApplicable(f"{root.signature} never emits {rule.event}")
    return _normalize(_delete(s.statement) for s in sites), {}


_PLANNERS = {
    "Check": _plan_check,
    "API": _plan_api,
    "Value": _plan_value,
    "Call": _plan_call,
    "Logging": _plan_logging,
}


def plan_edits(view: ContractView, rule: Rule, rng: Optional[random.Random] = None, source: str | bytes = b""):
    """Edits (and bookkeeping details) realizing ``rule`` on ``view``; raises NotApplicable."""
    if rule.category == "Uncovered":
        raise NotApplicable("uncovered rules are not injectable")
    if rule.erc != view.erc:
        raise NotApplicable(f"{rule.id} is not an {view.erc} rule")
    try:
        if rule.category == "Return":
            return _plan_return(view, rule, rng=rng, source=source)
        return _PLANNERS[rule.category](view, rule)
    except AnalysisError as exc:
        raise NotApplicable(str(exc)) from exc


# -- compiler hook ------------------------------------------------------------


@dataclass(frozen=True)
class CompileResult:
    ok: bool
    diagnostics: str = ""


_REPO_SOLCJS = Path(__file__).resolve().parents[2] / ".tools" / "node_modules" / "solc" / "solc.js"


# Compilation is a pure function of (command, file name, text); repeated
# campaigns over the same corpus reuse earlier verdicts.
_COMPILE_CACHE: dict[tuple[str, str, str], CompileResult] = {}
_COMPILE_LOCK = threading.Lock()


@dataclass(frozen=True)
class CompilerHook:
    """A compiler command template; ``{file}`` and ``{outdir}`` are substituted."""

    template: str
    timeout: float = 180.0

    def run(self, source: str, name: str = "Contract") -> CompileResult:
        key = (self.template, name, hashlib.sha256(source.encode("utf-8")).hexdigest())
        with _COMPILE_LOCK:
            cached = _COMPILE_CACHE.get(key)
        if cached is not None:
            return cached
        result = self._invoke(source, name)
        with _COMPILE_LOCK:
            _COMPILE_CACHE[key] = result
        return result

    def _invoke(self, source: str, name: str) -> CompileResult:
        with tempfile.TemporaryDirectory(prefix="ercfault-") as tmp:
            fname = f"{name}.sol"
            Path(tmp, fname).write_text(source, encoding="utf-8")
            outdir = Path(tmp, "out")
            outdir.mkdir()
            argv = [a.replace("{file}", fname).replace("{outdir}", "out") for a in shlex.split(self.template)]
            try:
                proc = subprocess.run(argv, cwd=tmp, capture_output=True, timeout=self.timeout)
            except FileNotFoundError as exc:
                raise HookUnavailable(f"compiler not found: {argv[0]}") from exc
            except subprocess.TimeoutExpired:
                return CompileResult(False, f"compiler timed out after {self.timeout}s")
            diagnostics = (proc.stdout + proc.stderr).decode("utf-8", "replace")
            return CompileResult(proc.returncode == 0, diagnostics if proc.returncode else diagnostics.strip())

    def run_many(self, sources: dict[str, str]) -> dict[str, CompileResult]:
        """Compile several independent files; one invocation when they all pass.

        Only templates with a standalone ``{file}`` argument can be batched; on
        any failure each file is compiled alone so diagnostics stay per file.
        """
        out: dict[str, CompileResult] = {}
        pending = {}
        for name, source in sorted(sources.items()):
            key = (self.template, name, hashlib.sha256(source.encode("utf-8")).hexdigest())
            with _COMPILE_LOCK:
                cached = _COMPILE_CACHE.get(key)
            if cached is not None:
                out[name] = cached
            else:
                pending[name] = (key, source)
        argv = shlex.split(self.template)
        if len(pending) > 1 and argv.count("{file}") == 1:
            with tempfile.TemporaryDirectory(prefix="ercfault-") as tmp:
                for name, (_, source) in pending.items():
                    Path(tmp, f"{name}.sol").write_text(source, encoding="utf-8")
                Path(tmp, "out").mkdir()
                at = argv.index("{file}")
                files = [f"{name}.sol" for name in pending]
                cmd = [a.replace("{outdir}", "out") for a in argv[:at]] + files
                cmd += [a.replace("{outdir}", "out") for a in argv[at + 1:]]
                try:
                    proc = subprocess.run(cmd, cwd=tmp, capture_output=True, timeout=self.timeout * len(files))
                except FileNotFoundError as exc:
                    raise HookUnavailable(f"compiler not found: {cmd[0]}") from exc
                except subprocess.TimeoutExpired:
                    proc = None
            if proc is not None and proc.returncode == 0:
                with _COMPILE_LOCK:
                    for name, (key, _) in pending.items():
                        _COMPILE_CACHE[key] = out[name] = CompileResult(True)
                return out
        for name, (_, source) in pending.items():
            out[name] = self.run(source, name)
        return out

    @classmethod
    def detect(cls) -> Optional["CompilerHook"]:
        env = os.environ.get("SCB_COMPILER")
        if env:
            return cls(env)
        if shutil.which("solc"):
            return cls("solc --bin {file}")
        if shutil.which("solcjs"):
            return cls("solcjs --abi {file} -o {outdir}")
        if _REPO_SOLCJS.exists() and shutil.which("node"):
            return cls(f"node {shlex.quote(str(_REPO_SOLCJS))} --abi {{file}} -o {{outdir}}")
        return None


def validate_compiles(source: str, hook: Optional[CompilerHook], name: str = "Contract") -> CompileResult:
    if hook is None:
        raise HookUnavailable("no compiler hook configured")
    return hook.run(source, name)


# -- campaign -----------------------------------------------------------------


@dataclass
class CampaignConfig:
    seed: int
    min_errors: int = 1
    max_errors: int = 3
    compiler: Optional[CompilerHook] = None
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)


@dataclass
class ContractResult:
    contract_id: str
    original_path: str
    mutant_path: str
    erc: str
    contract: str
    records: list
    validation: str = "unvalidated"  # ok | failed | unvalidated
    diagnostics: str = ""
    mutant_source: str = field(default="", repr=False)

    def to_dict(self) -> dict:
        return {
            "contract_id": self.contract_id,
            "original_path": self.original_path,
            "mutant_path": self.mutant_path,
            "erc": self.erc,
            "contract": self.contract,
            "validation": self.validation,
            "diagnostics": self.diagnostics,
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContractResult":
        return cls(
            contract_id=d["contract_id"], original_path=d["original_path"], mutant_path=d["mutant_path"],
            erc=d.get("erc", ""), contract=d.get("contract", ""),
            records=[ViolationRecord.from_dict(r) for r in d.get("records", ())],
            validation=d.get("validation", "unvalidated"), diagnostics=d.get("diagnostics", ""),
        )


def tally(records: Iterable[ViolationRecord]) -> dict[str, dict[str, int]]:
    summary = {erc: {cat: 0 for cat in CATEGORIES[:-1]} for erc in ERCS}
    for r in records:
        summary.setdefault(r.erc, {cat: 0 for cat in CATEGORIES[:-1]})
        summary[r.erc][r.category] = summary[r.erc].get(r.category, 0) + 1
    return summary


@dataclass
class CampaignManifest:
    seed: int
    catalog_version: str
    contracts: list
    skipped: list = field(default_factory=list)  # [{contract_id, original_path, reason}]
    tool_version: str = __version__
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.summary:
            self.summary = tally(self.records)

    @property
    def records(self) -> list[ViolationRecord]:
        return [r for c in self.contracts for r in c.records]

    def contract(self, contract_id: str) -> ContractResult:
        for c in self.contracts:
            if c.contract_id == contract_id:
                return c
        raise KeyError(contract_id)

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "seed": self.seed,
            "catalog_version": self.catalog_version,
            "contracts": [c.to_dict() for c in self.contracts],
            "skipped": self.skipped,
            "summary": self.summary,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignManifest":
        m = cls(
            seed=d["seed"], catalog_version=d["catalog_version"],
            contracts=[ContractResult.from_dict(c) for c in d.get("contracts", ())],
            skipped=list(d.get("skipped", ())), tool_version=d.get("tool_version", __version__),
            summary=d.get("summary") or {},
        )
        if tally(m.records) != m.summary:
            raise ValueError("manifest summary does not match its records")
        return m

    @classmethod
    def load(cls, path: str | Path) -> "CampaignManifest":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def contract_rng(seed: int, contract_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{contract_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _conflict(plans: Sequence[list[MutationEdit]]) -> bool:
    spans = sorted((e.span for edits in plans for e in edits), key=lambda s: (s.start, s.end))
    return any(a.overlaps(b) or a == b for a, b in zip(spans, spans[1:]))


def _incompatible(rules: Sequence[Rule], plans: Sequence[list[MutationEdit]]) -> bool:
    """Overlapping edits, or a removed function that another sampled rule still targets."""
    if _conflict(plans):
        return True
    removed = {r.target.signature for r in rules if r.category == "API"}
    return any(r.category != "API" and r.target.signature in removed for r in rules)


def _siblings(rule: Rule, edits: list[MutationEdit], plans: dict, catalog: Catalog) -> tuple[str, ...]:
    if rule.category == "API":
        sig = rule.target.signature
        out = {r.id for r in catalog.rules(rule.erc) if r.target is not None and r.target.signature == sig}
    else:
        out = {
            rid for rid, (other, other_edits) in plans.items()
            if other.category == rule.category and _conflict([edits, other_edits])
        }
    out.discard(rule.id)
    return tuple(sorted(out))


def inject_contract(entry, catalog: Catalog, seed: int, min_errors: int = 1, max_errors: int = 3):
    """Plan and apply 1..3 rule violations to one corpus entry.

    Returns ``(ContractResult, None)`` or ``(None, skip-reason)``.
    """
    try:
        unit = parse(entry.source, entry.contract_id)
        name = select_main_contract(unit, catalog)
        if name is None:
            return None, "no contract in source"
        view = build_view(unit, name, catalog)
    except (SolidityError, AnalysisError) as exc:
        return None, f"{type(exc).__name__}: {exc}"
    if view.erc == "Unknown":
        return None, "not an ERC contract"

    plans: dict[str, tuple[Rule, list[MutationEdit]]] = {}
    for rule in catalog.injectable(view.erc):
        try:
            edits, _ = plan_edits(view, rule)
        except NotApplicable:
            continue
        plans[rule.id] = (rule, edits)
    if not plans:
        return None, "no applicable rules"

    rng = contract_rng(seed, entry.contract_id)
    ids = sorted(plans)
    k = min(rng.randint(min_errors, max_errors), len(ids))
    chosen: list[str] = []
    while k > 0:
        for _ in range(MAX_REDRAWS):
            pick = sorted(rng.sample(ids, k))
            if not _incompatible([plans[i][0] for i in pick], [plans[i][1] for i in pick]):
                chosen = pick
                break
        if chosen:
            break
        log.info("%s: no conflict-free draw of %d rules after %d attempts", entry.contract_id, k, MAX_REDRAWS)
        k -= 1

    records = []
    for rid in chosen:
        rule, _ = plans[rid]
        edits, details = plan_edits(view, rule, rng=rng, source=entry.source)
        root = target_function(view, rule)
        records.append(ViolationRecord(
            contract_id=entry.contract_id, rule_id=rid, category=rule.category, function=root.signature,
            edits=tuple(edits), impact=rule.impact, origin="injected", erc=view.erc,
            also_violated=_siblings(rule, edits, plans, catalog), details=details,
        ))
    mutant = apply_edits(entry.source, [e for r in records for e in r.edits])
    result = ContractResult(
        contract_id=entry.contract_id, original_path=entry.relpath, mutant_path=f"{entry.contract_id}.sol",
        erc=view.erc, contract=view.name, records=records, mutant_source=mutant,
    )
    return result, None


def _validate(results: list, hook: CompilerHook) -> None:
    try:
        checks = hook.run_many({r.contract_id: r.mutant_source for r in results})
    except HookUnavailable as exc:
        for r in results:
            r.diagnostics = str(exc)
        return
    for r in results:
        check = checks[r.contract_id]
        r.validation = "ok" if check.ok else "failed"
        r.diagnostics = "" if check.ok else check.diagnostics


def run_campaign(corpus, catalog: Catalog, config: CampaignConfig, out_dir: str | Path | None = None) -> CampaignManifest:
    """Inject violations into every entry of ``corpus``; writes mutants and manifest when ``out_dir`` is set."""
    if not corpus:
        raise ValueError("corpus is empty")

    def work(entry):
        result, reason = inject_contract(entry, catalog, config.seed, config.min_errors, config.max_errors)
        return entry, result, reason

    with ThreadPoolExecutor(max_workers=max(1, config.jobs)) as pool:
        outcomes = list(pool.map(work, corpus))

    if config.compiler is not None:
        _validate([r for _, r, _ in outcomes if r is not None], config.compiler)

    contracts, skipped = [], []
    for entry, result, reason in sorted(outcomes, key=lambda o: o[0].contract_id):
        if result is None:
            log.info("skipping %s: %s", entry.contract_id, reason)
            skipped.append({"contract_id": entry.contract_id, "original_path": entry.relpath, "reason": reason})
        else:
            contracts.append(result)
    manifest = CampaignManifest(seed=config.seed, catalog_version=catalog.version, contracts=contracts, skipped=skipped)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for c in contracts:
            (out / c.mutant_path).write_text(c.mutant_source, encoding="utf-8")
        manifest.write(out / "manifest.json")
    return manifest


# -- ground-truth soundness ---------------------------------------------------


def _return_texts(view: ContractView, rule: Rule, data: bytes) -> Optional[list[str]]:
    m = view.find(rule.target.name, rule.target.param_types)
    if m is None or m.node.body is None:
        return None
    return [
        data[s.statement.expression.span.start:s.statement.expression.span.end].decode("utf-8")
        for s in iter_statements(m.node.body)
        if isinstance(s.statement, A.Return) and s.statement.expression is not None
    ]


def verify_record(record: ViolationRecord, original: str, mutant: str, catalog: Catalog, contract: str) -> bool:
    """Re-run the record's analysis query on the mutant; True when the violation holds."""
    rule = catalog.rule(record.rule_id)
    view = build_view(parse(mutant, record.contract_id), contract, catalog)
    root = view.find(rule.target.name, rule.target.param_types)
    if rule.category == "API":
        return root is None and not any(m.signature == rule.target.signature for m in view.lineage)
    if rule.category == "Return":
        before = _return_texts(build_view(parse(original, record.contract_id), contract, catalog), rule, _as_bytes(original))
        after = _return_texts(view, rule, _as_bytes(mutant))
        return after is None or (len(after) == len(before) and all(a != b for a, b in zip(after, before)))
    if root is None:
        return True  # target removed by a sibling record
    if rule.category == "Check":
        return not find_param_checks(view, root, implementation_param(rule, root))
    if rule.category == "Logging":
        return not find_sites(view, root, rule.event, kind="event")
    if rule.category == "Call":
        return not find_sites(view, root, rule.callee, kind="call")
    if rule.category == "Value":
        var = record.details.get("state_var")
        return not find_assignments(view, root, var)
    raise InjectionError(f"cannot verify {rule.category} records")


def verify_campaign(manifest: CampaignManifest, originals: dict[str, str], mutants: dict[str, str], catalog: Catalog) -> list[tuple[str, bool]]:
    out = []
    for c in manifest.contracts:
        for r in c.records:
            out.append((r.record_id, verify_record(r, originals[c.contract_id], mutants[c.contract_id], catalog, c.contract)))
    return out
