"""Revision-pinned document stream: manifest, MediaWiki fetch, wikitext stripping.

Live fetches go through the MediaWiki query API by revision id and are
written through to ``<cache_dir>/<revision_id>.wikitext``. A small set of
bundled excerpt fixtures lets the whole pipeline run offline.
"""

from __future__ import annotations

import html
import logging
import re
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import requests

from .errors import CacheError, FetchError, InvalidArgument, LoadError
from .util import atomic_write_bytes

log = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://en.wikipedia.org/w/api.php"
USER_AGENT = "assocmem/0.1 (revision-pinned corpus fetcher; research use)"
MIN_REQUEST_INTERVAL = 1.0
MODES = ("fixture", "cached", "live")


def data_path(name: str) -> Path:
    return Path(str(resources.files("assocmem").joinpath("data", name)))


# -- manifest -------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    step_index: int
    phase: int
    revision_id: int
    revision_date: str
    title: str


def parse_manifest(text: str) -> list[ManifestEntry]:
    """Rows are ``step,phase,revision_id,revision_date,title``.

    Blank lines, ``#`` comments and a literal header row are skipped; the
    title is the remainder of the line and may contain commas.
    """
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("step,"):
            continue
        parts = line.split(",", 4)
        if len(parts) != 5:
            raise InvalidArgument(f"manifest line {lineno}: expected 5 fields")
        try:
            step, phase, revid = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            raise InvalidArgument(f"manifest line {lineno}: non-integer field") from None
        if revid <= 0:
            raise InvalidArgument(f"manifest line {lineno}: revision id must be positive")
        if not 1 <= phase <= 4:
            raise InvalidArgument(f"manifest line {lineno}: phase must be 1-4")
        entries.append(ManifestEntry(step, phase, revid, parts[3].strip(), parts[4].strip()))
    if [e.step_index for e in entries] != list(range(len(entries))):
        raise InvalidArgument("manifest step indices must be contiguous from 0")
    return entries


def load_manifest(path=None) -> list[ManifestEntry]:
    path = Path(path) if path else data_path("manifest.csv")
    return parse_manifest(path.read_text(encoding="utf-8"))


# -- fetching -----------------------------------------------------------------------


class RateLimiter:
    def __init__(self, interval=MIN_REQUEST_INTERVAL):
        self.interval = interval
        self._last = None
        self._lock = threading.Lock()

    def wait(self):
        with self._lock:
            now = time.monotonic()
            if self._last is not None:
                delay = self._last + self.interval - now
                if delay > 0:
                    time.sleep(delay)
                    now = time.monotonic()
            self._last = now


_default_limiter = RateLimiter()


def cache_file(cache_dir, revision_id: int) -> Path:
    return Path(cache_dir) / f"{int(revision_id)}.wikitext"


def read_cache(cache_dir, revision_id: int) -> str | None:
    path = cache_file(cache_dir, revision_id)
    if not path.exists():
        return None
    raw = path.read_bytes()
    if not raw:
        raise CacheError(f"cache entry {path} is empty")
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CacheError(f"cache entry {path} is not valid UTF-8: {exc}") from None


def _api_get(endpoint, params, session, limiter, timeout, revision_id=None):
    limiter.wait()
    try:
        resp = session.get(
            endpoint, params=params, timeout=timeout, headers={"User-Agent": USER_AGENT}
        )
        resp.raise_for_status()
        return resp.json()
    except requests.RequestException as exc:
        raise FetchError(f"request for revision {revision_id} failed: {exc}", revision_id) from exc
    except ValueError as exc:
        raise FetchError(f"non-JSON response for revision {revision_id}", revision_id) from exc


def fetch_revision(
    revision_id: int,
    endpoint: str = DEFAULT_ENDPOINT,
    cache_dir=None,
    session: requests.Session | None = None,
    limiter: RateLimiter | None = None,
    timeout: float = 30.0,
) -> str:
    """Raw wikitext of one revision; cache hits never touch the network."""
    revision_id = int(revision_id)
    if cache_dir is not None:
        cached = read_cache(cache_dir, revision_id)
        if cached is not None:
            return cached

    params = {
        "action": "query",
        "prop": "revisions",
        "revids": revision_id,
        "rvprop": "ids|timestamp|content",
        "rvslots": "main",
        "format": "json",
        "formatversion": "2",
    }
    data = _api_get(
        endpoint, params, session or requests, limiter or _default_limiter, timeout, revision_id
    )
    text = _extract_content(data, revision_id)
    if cache_dir is not None:
        atomic_write_bytes(cache_file(cache_dir, revision_id), text.encode("utf-8"))
    return text


def _extract_content(data, revision_id):
    if not isinstance(data, dict):
        raise FetchError("malformed API response", revision_id)
    if "error" in data:
        info = data["error"].get("info", data["error"]) if isinstance(data["error"], dict) else data["error"]
        raise FetchError(f"API error for revision {revision_id}: {info}", revision_id)
    query = data.get("query", {})
    if query.get("badrevids"):
        raise FetchError(f"revision {revision_id} does not exist or was deleted", revision_id)
    try:
        pages = query["pages"]
        page = pages[0] if isinstance(pages, list) else next(iter(pages.values()))
        rev = page["revisions"][0]
    except (KeyError, IndexError, StopIteration, TypeError):
        raise FetchError(f"malformed API response for revision {revision_id}", revision_id) from None
    if rev.get("revid") not in (None, revision_id):
        raise FetchError(f"API returned revision {rev.get('revid')} instead of {revision_id}", revision_id)
    if rev.get("texthidden") or rev.get("slots", {}).get("main", {}).get("texthidden"):
        raise FetchError(f"content of revision {revision_id} is hidden", revision_id)
    content = rev.get("slots", {}).get("main", {}).get("content")
    if content is None:
        content = rev.get("content", rev.get("*"))
    if not content:
        raise FetchError(f"revision {revision_id} has no content", revision_id)
    return content


def resolve_revision(
    title: str,
    date: str,
    endpoint: str = DEFAULT_ENDPOINT,
    session: requests.Session | None = None,
    limiter: RateLimiter | None = None,
) -> int:
    """Id of the last revision of ``title`` at or before ``date`` (YYYY-MM-DD)."""
    params = {
        "action": "query",
        "prop": "revisions",
        "titles": title,
        "rvlimit": 1,
        "rvdir": "older",
        "rvstart": f"{date}T23:59:59Z",
        "rvprop": "ids|timestamp",
        "format": "json",
        "formatversion": "2",
    }
    data = _api_get(endpoint, params, session or requests, limiter or _default_limiter, 30.0)
    try:
        return int(data["query"]["pages"][0]["revisions"][0]["revid"])
    except (KeyError, IndexError, TypeError, ValueError):
        raise FetchError(f"no revision of {title!r} on or before {date}") from None


# -- wikitext stripping ---------------------------------------------------------------

_COMMENT = re.compile(r"<!--.*?(?:-->|$)", re.S)
_REF_SELF = re.compile(r"<ref\b[^<>]*/>", re.I)
_REF_PAIR = re.compile(r"<ref\b[^<>]*>.*?</ref\s*>", re.I | re.S)
_REF_OPEN = re.compile(r"<ref\b[^<>]*>", re.I)
_DROP_ELEMENTS = re.compile(
    r"<(math|gallery|timeline|score|syntaxhighlight|source|nowiki|pre)\b[^<>]*>.*?</\1\s*>", re.I | re.S
)
_TAG = re.compile(r"</?[A-Za-z][^<>]*>")
_FILE_PREFIX = re.compile(r"\[\[\s*(file|image|media|category)\s*:", re.I)
_EXT_LINK = re.compile(r"\[(?:https?:)?//[^\s\]]+(?:\s+([^\]]*))?\]")
_HEADING = re.compile(r"^(={1,6})\s*(.*?)\s*\1\s*$", re.M)
_MAGIC = re.compile(r"__[A-Z]+__")
_LIST_PREFIX = re.compile(r"^[*#:;]+\s*", re.M)
_QUOTES = re.compile(r"'{2,}")


def _remove_balanced(text: str, opener: str, closer: str, starts=None) -> str:
    """Drop ``opener ... closer`` regions in one pass, honouring nesting.

    ``starts`` (optional regex) restricts which top-level openers begin a
    dropped region. An unclosed region loses only its opener token.
    """
    out = []
    lo, lc = len(opener), len(closer)
    i, n = 0, len(text)
    depth = 0
    plain_start = region_start = 0
    while i < n:
        if text.startswith(opener, i):
            if depth == 0:
                if starts is not None and not starts.match(text, i):
                    i += lo
                    continue
                out.append(text[plain_start:i])
                region_start = i
            depth += 1
            i += lo
        elif depth and text.startswith(closer, i):
            depth -= 1
            i += lc
            if depth == 0:
                plain_start = i
        else:
            i += 1
    out.append(text[region_start + lo :] if depth else text[plain_start:])
    return "".join(out)


def _replace_links(text: str) -> str:
    """``[[target|display]]`` -> display, ``[[target]]`` -> target."""
    out = []
    i = 0
    while True:
        j = text.find("[[", i)
        if j < 0:
            out.append(text[i:])
            break
        k = text.find("]]", j + 2)
        if k < 0:
            out.append(text[i:j])
            out.append(text[j + 2 :])
            break
        out.append(text[i:j])
        inner = text[j + 2 : k]
        if "[[" in inner:
            # inner link starts later; keep this opener's text and rescan
            nxt = inner.index("[[")
            out.append(inner[:nxt])
            i = j + 2 + nxt
            continue
        display = inner.rsplit("|", 1)[-1] if "|" in inner else inner
        if "|" not in inner and "#" in display:
            display = display.split("#", 1)[0] or display.split("#", 1)[1]
        out.append(display)
        i = k + 2
    return "".join(out)


def strip_wikitext(wikitext: str) -> str:
    """Reduce wikitext to plain prose.

    Templates, tables, references, comments, files and categories are
    dropped entirely; links keep their display text; heading, bold and
    italic markup is removed. Paragraph breaks survive as single newlines.
    """
    text = wikitext.replace("\r\n", "\n").replace("\r", "\n")
    text = _COMMENT.sub("", text)
    text = _DROP_ELEMENTS.sub("", text)
    text = _REF_SELF.sub("", text)
    text = _REF_PAIR.sub("", text)
    text = _REF_OPEN.sub("", text)
    text = _remove_balanced(text, "{{", "}}")
    text = _remove_balanced(text, "{|", "|}")
    text = _remove_balanced(text, "[[", "]]", starts=_FILE_PREFIX)
    text = _replace_links(text)
    text = _EXT_LINK.sub(lambda m: m.group(1) or "", text)
    text = _TAG.sub("", text)
    text = _HEADING.sub(lambda m: m.group(2), text)
    text = _MAGIC.sub("", text)
    text = _LIST_PREFIX.sub("", text)
    text = _QUOTES.sub("", text)
    text = html.unescape(text)
    # leftovers of unbalanced markup
    text = text.replace("{{", "").replace("}}", "").replace("[[", "").replace("]]", "")
    text = re.sub(r"<ref\b", "", text, flags=re.I)

    lines = []
    for line in text.split("\n"):
        line = " ".join(line.split())
        line = re.sub(r"\s+([.,;:!?])", r"\1", line)
        line = re.sub(r"\(\s*\)", "", line)
        if line:
            lines.append(" ".join(line.split()))
    return "\n".join(lines)


# -- stream ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class Document:
    step_index: int
    title: str
    plain_text: str
    source: str
    revision_id: int


def fixture_path(revision_id: int) -> Path:
    return data_path(f"fixtures/{int(revision_id)}.wikitext")


def load_stream(
    manifest: list[ManifestEntry] | None = None,
    mode: str = "fixture",
    cache_dir=None,
    endpoint: str = DEFAULT_ENDPOINT,
    session: requests.Session | None = None,
    limiter: RateLimiter | None = None,
) -> list[Document]:
    """Documents of the manifest in step order.

    ``fixture`` reads bundled excerpts, ``cached`` reads only the cache,
    ``live`` fetches (through the cache) as needed.
    """
    if mode not in MODES:
        raise InvalidArgument(f"mode must be one of {MODES}")
    manifest = manifest if manifest is not None else load_manifest()
    docs = []
    for entry in sorted(manifest, key=lambda e: e.step_index):
        source = {"fixture": "fixture", "cached": "cache"}.get(mode)
        if mode == "fixture":
            path = fixture_path(entry.revision_id)
            if not path.exists():
                raise LoadError(
                    f"step {entry.step_index}: no bundled fixture for revision {entry.revision_id}",
                    entry.step_index,
                )
            raw = path.read_text(encoding="utf-8")
        elif mode == "cached":
            if cache_dir is None:
                raise LoadError("cached mode needs a cache directory", entry.step_index)
            try:
                raw = read_cache(cache_dir, entry.revision_id)
            except CacheError as exc:
                raise LoadError(f"step {entry.step_index}: {exc}", entry.step_index) from exc
            if raw is None:
                raise LoadError(
                    f"step {entry.step_index}: revision {entry.revision_id} not in cache {cache_dir}",
                    entry.step_index,
                )
        else:
            hit = cache_dir is not None and cache_file(cache_dir, entry.revision_id).exists()
            source = "cache" if hit else "network"
            try:
                raw = fetch_revision(entry.revision_id, endpoint, cache_dir, session, limiter)
            except (FetchError, CacheError) as exc:
                raise LoadError(f"step {entry.step_index}: {exc}", entry.step_index) from exc
        docs.append(
            Document(entry.step_index, entry.title, strip_wikitext(raw), source, entry.revision_id)
        )
    return docs
