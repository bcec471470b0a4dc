"""Contract corpora: local ingestion, block-explorer retrieval and dataset statistics."""

from __future__ import annotations

import json
import logging
import os
import re
import statistics
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional

import requests

from .analysis import AnalysisError, build_view, select_main_contract
from .catalog import IMPACTS, Catalog
from .solidity import parse
from .solidity.errors import SolidityError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorpusEntry:
    contract_id: str
    path: str
    relpath: str
    source: str = field(repr=False)
    loc: int
    erc: str
    contract: Optional[str] = None


@dataclass(frozen=True)
class Rejection:
    path: str
    reason: str


@dataclass
class IngestResult:
    entries: list
    rejected: list

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def count_lines(source: str) -> int:
    return len(source.splitlines())


def contract_id_for(relpath: str) -> str:
    stem = relpath[:-4] if relpath.endswith(".sol") else relpath
    return re.sub(r"[^A-Za-z0-9_.-]", "_", stem.replace("/", "__"))


def make_entry(source: str, path: str | Path, relpath: str, catalog: Optional[Catalog] = None) -> CorpusEntry:
    """Parse ``source`` and tag it; raises SolidityError/AnalysisError when it cannot be analysed."""
    cid = contract_id_for(relpath)
    unit = parse(source, cid)
    name = select_main_contract(unit, catalog)
    erc = "Unknown"
    if name is not None:
        erc = build_view(unit, name, catalog).erc
    return CorpusEntry(cid, str(path), relpath, source, count_lines(source), erc, name)


def ingest_local(
    directory: str | Path,
    filter: Optional[Callable[[CorpusEntry], bool]] = None,
    catalog: Optional[Catalog] = None,
    jobs: int = 1,
) -> IngestResult:
    """Parse every ``.sol`` file under ``directory``.

    Other files, unreadable sources, parse failures and entries refused by
    ``filter`` are reported as rejections, never raised.
    """
    root = Path(directory)
    if not root.is_dir():
        raise NotADirectoryError(str(root))
    files = sorted(p for p in root.rglob("*") if p.is_file() and not p.name.startswith("."))

    def load(p: Path):
        rel = p.relative_to(root).as_posix()
        if p.suffix != ".sol":
            return None, Rejection(rel, "not a Solidity source file")
        try:
            source = p.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            return None, Rejection(rel, f"unreadable: {exc}")
        try:
            entry = make_entry(source, p, rel, catalog)
        except (SolidityError, AnalysisError) as exc:
            return None, Rejection(rel, f"{type(exc).__name__}: {exc}")
        if filter is not None and not filter(entry):
            return None, Rejection(rel, "excluded by filter")
        return entry, None

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(load, files))
    entries = [e for e, _ in results if e is not None]
    rejected = [r for _, r in results if r is not None]
    ids = [e.contract_id for e in entries]
    if len(ids) != len(set(ids)):
        raise ValueError("contract ids collide; rename files so their paths differ after normalisation")
    for r in rejected:
        log.info("rejected %s: %s", r.path, r.reason)
    return IngestResult(entries, rejected)


def erc_filter(ercs: Iterable[str]) -> Callable[[CorpusEntry], bool]:
    wanted = set(ercs)
    return lambda entry: entry.erc in wanted


# -- explorer client ----------------------------------------------------------


class FetchError(Exception):
    pass


class InvalidAddress(FetchError, ValueError):
    pass


class NotVerified(FetchError):
    pass


class MultiFile(FetchError):
    pass


class RateLimited(FetchError):
    def __init__(self, message: str, retry_after: Optional[float] = None):
        super().__init__(message)
        self.retry_after = retry_after


_ADDRESS_RE = re.compile(r"^0x[0-9a-fA-F]{40}$")


@dataclass
class ExplorerConfig:
    url: str
    api_key: str = ""
    chain: str = "ethereum"
    requests_per_second: float = 4.0
    timeout: float = 30.0
    max_retries: int = 3
    cache_dir: Path = Path("cache")

    @classmethod
    def from_env(cls, chain: str = "ethereum", cache_dir: str | Path = "cache", **kw) -> "ExplorerConfig":
        url = os.environ.get("SCB_EXPLORER_URL")
        if not url:
            raise FetchError("SCB_EXPLORER_URL is not set")
        return cls(url=url, api_key=os.environ.get("SCB_EXPLORER_KEY", ""), chain=chain, cache_dir=Path(cache_dir), **kw)


class RateLimiter:
    """Spaces calls at least ``1/rate`` seconds apart across threads."""

    def __init__(self, rate: float, clock: Callable[[], float] = time.monotonic, sleep: Callable[[float], None] = time.sleep):
        self.interval = 1.0 / rate if rate > 0 else 0.0
        self._clock, self._sleep = clock, sleep
        self._next = 0.0
        self._lock = threading.Lock()

    def wait(self) -> None:
        with self._lock:
            now = self._clock()
            delay = self._next - now
            self._next = max(now, self._next) + self.interval
        if delay > 0:
            self._sleep(delay)


_limiters: dict[tuple[str, float], RateLimiter] = {}
_limiters_lock = threading.Lock()


def _limiter_for(config: ExplorerConfig) -> RateLimiter:
    key = (config.url, config.requests_per_second)
    with _limiters_lock:
        if key not in _limiters:
            _limiters[key] = RateLimiter(config.requests_per_second)
        return _limiters[key]


def _cache_paths(config: ExplorerConfig, address: str) -> tuple[Path, Path]:
    base = Path(config.cache_dir) / config.chain / address.lower()
    return base.with_suffix(".sol"), base.with_suffix(".json")


def _retry_after(resp) -> Optional[float]:
    value = resp.headers.get("Retry-After") if resp is not None else None
    try:
        return float(value) if value is not None else None
    except ValueError:
        return None


def _is_multi_file(source: str) -> bool:
    text = source.strip()
    if not text.startswith("{"):
        return False
    try:
        json.loads(text[1:-1] if text.startswith("{{") else text)
    except ValueError:
        return False
    return True


def fetch_verified_source(
    address: str,
    config: ExplorerConfig,
    session=None,
    limiter: Optional[RateLimiter] = None,
    sleep: Callable[[float], None] = time.sleep,
    catalog: Optional[Catalog] = None,
) -> CorpusEntry:
    """Retrieve one verified single-file contract, consulting the on-disk cache first."""
    if not isinstance(address, str) or not _ADDRESS_RE.match(address):
        raise InvalidAddress(f"not a 20-byte hex address: {address!r}")
    src_path, meta_path = _cache_paths(config, address)
    relpath = f"{config.chain}/{address.lower()}.sol"
    if src_path.exists():
        log.debug("cache hit for %s", relpath)
        return make_entry(src_path.read_text(encoding="utf-8"), src_path, relpath, catalog)

    session = session or requests.Session()
    limiter = limiter or _limiter_for(config)
    params = {"module": "contract", "action": "getsourcecode", "address": address}
    if config.api_key:
        params["apikey"] = config.api_key

    payload = None
    for attempt in range(config.max_retries + 1):
        limiter.wait()
        resp = session.get(config.url, params=params, timeout=config.timeout)
        if resp.status_code == 429:
            wait = _retry_after(resp)
            if attempt == config.max_retries:
                raise RateLimited(f"rate limited fetching {address}", wait)
            log.warning("rate limited; retrying in %ss", wait if wait is not None else 2**attempt)
            sleep(wait if wait is not None else 2**attempt)
            continue
        if resp.status_code >= 400:
            raise FetchError(f"explorer returned HTTP {resp.status_code}")
        payload = resp.json()
        result = payload.get("result")
        if str(payload.get("status")) == "0" and isinstance(result, str) and "rate limit" in result.lower():
            if attempt == config.max_retries:
                raise RateLimited(result, None)
            sleep(2**attempt)
            continue
        break

    result = payload.get("result") if isinstance(payload, dict) else None
    if not isinstance(result, list) or not result or not isinstance(result[0], dict):
        raise NotVerified(f"{address}: unexpected explorer response")
    record = result[0]
    source = record.get("SourceCode") or ""
    if not source.strip():
        raise NotVerified(f"{address}: source code not verified")
    if _is_multi_file(source):
        raise MultiFile(f"{address}: multi-file sources are not supported")

    src_path.parent.mkdir(parents=True, exist_ok=True)
    src_path.write_text(source, encoding="utf-8")
    meta = {k: v for k, v in record.items() if k != "SourceCode"}
    meta.update({"address": address, "chain": config.chain})
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return make_entry(source, src_path, relpath, catalog)


# -- statistics ---------------------------------------------------------------


@dataclass(frozen=True)
class CorpusStats:
    count: int
    mean_loc: float
    stddev_loc: float
    mean_errors: Optional[float] = None
    impact_histogram: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean_loc": self.mean_loc,
            "stddev_loc": self.stddev_loc,
            "mean_errors": self.mean_errors,
            "impact_histogram": self.impact_histogram,
        }


def compute_stats(corpus: Iterable[CorpusEntry], manifest=None) -> CorpusStats:
    """Line-count statistics (population stddev), plus error statistics when a manifest is given."""
    locs = [e.loc for e in corpus]
    mean = statistics.fmean(locs) if locs else 0.0
    stddev = statistics.pstdev(locs) if locs else 0.0
    if manifest is None:
        return CorpusStats(len(locs), mean, stddev)
    records = manifest.records
    histogram = {impact: 0 for impact in IMPACTS}
    for r in records:
        histogram[r.impact] += 1
    n = len(manifest.contracts)
    return CorpusStats(len(locs), mean, stddev, len(records) / n if n else 0.0, histogram)
