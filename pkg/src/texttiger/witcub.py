"""Caption + image + entity-description datasets backed by Wikipedia abstracts.

An instance ties one caption and image reference to the entities named in
the caption, each carrying the plain-text lead-section extract of its
Wikipedia article. Datasets persist as UTF-8 JSON lines with a versioned
header record.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
import urllib.parse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import requests

from . import tokenizer
from .errors import (
    EmptyDataset,
    EmptyDescription,
    FetchError,
    NotFound,
    ParseError,
    VersionError,
)

logger = logging.getLogger(__name__)

DATASET_FORMAT = "witcub"
DATASET_VERSION = 1

DEFAULT_API_URL = "https://en.wikipedia.org/w/api.php"
DEFAULT_USER_AGENT = "texttiger/0.1 (dataset builder)"


@dataclass(frozen=True)
class EntityEntry:
    """One named entity: article title, abstract, and source article URL."""

    name: str
    description: str
    source_url: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("entity name must be nonempty")
        parsed = urllib.parse.urlparse(self.source_url)
        if not (parsed.scheme and parsed.netloc):
            raise ValueError(f"source_url must be absolute, got {self.source_url!r}")


@dataclass(frozen=True)
class WitCubInstance:
    """One dataset row: caption, image reference, entity list, caption length."""

    id: str
    caption: str
    image_ref: str
    entities: tuple[EntityEntry, ...]
    caption_token_count: int

    def __post_init__(self):
        if not self.caption:
            raise ValueError("caption must be nonempty")


@dataclass(frozen=True)
class DatasetStats:
    instance_count: int
    mean_entities_per_instance: float
    mean_caption_tokens: float


@dataclass(frozen=True)
class Dataset:
    instances: tuple[WitCubInstance, ...]
    stats: DatasetStats


def compute_stats(instances) -> DatasetStats:
    instances = list(instances)
    n = len(instances)
    if n == 0:
        return DatasetStats(0, 0.0, 0.0)
    return DatasetStats(
        instance_count=n,
        mean_entities_per_instance=sum(len(i.entities) for i in instances) / n,
        mean_caption_tokens=sum(i.caption_token_count for i in instances) / n,
    )


class WikipediaClient:
    """Fetches article lead-section extracts over the MediaWiki action API.

    Retries transient failures with exponential backoff; an optional
    politeness delay spaces out consecutive requests.
    """

    def __init__(
        self,
        api_url: str = DEFAULT_API_URL,
        user_agent: str = DEFAULT_USER_AGENT,
        timeout: float = 20.0,
        max_attempts: int = 3,
        backoff: float = 0.5,
        delay: float = 0.0,
        session: requests.Session | None = None,
    ):
        self.api_url = api_url
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.delay = delay
        self.session = session or requests.Session()
        self.session.headers["User-Agent"] = user_agent
        parsed = urllib.parse.urlparse(api_url)
        self._wiki_base = f"{parsed.scheme}://{parsed.netloc}/wiki/"

    def _request(self, method: str, url: str, **kwargs):
        last = None
        for attempt in range(self.max_attempts):
            if self.delay and attempt == 0:
                time.sleep(self.delay)
            try:
                response = self.session.request(method, url, timeout=self.timeout, **kwargs)
            except requests.RequestException as exc:
                last = FetchError(f"{method} {url} failed: {exc}")
            else:
                if response.status_code < 500:
                    return response
                last = FetchError(
                    f"{method} {url} returned {response.status_code}",
                    status=response.status_code,
                )
            if attempt + 1 < self.max_attempts:
                time.sleep(self.backoff * 2**attempt)
        raise last

    def article_url(self, title: str) -> str:
        return self._wiki_base + urllib.parse.quote(title.replace(" ", "_"))

    def fetch_extract(self, title: str) -> tuple[str, str]:
        """Resolve a title to (canonical title, lead-section plain text)."""
        params = {
            "action": "query",
            "format": "json",
            "prop": "extracts",
            "exintro": 1,
            "explaintext": 1,
            "redirects": 1,
            "titles": title,
        }
        response = self._request("GET", self.api_url, params=params)
        if response.status_code != 200:
            raise FetchError(
                f"extract query for {title!r} returned {response.status_code}",
                status=response.status_code,
            )
        try:
            pages = response.json()["query"]["pages"]
        except (ValueError, KeyError) as exc:
            raise FetchError(f"malformed API response for {title!r}: {exc}") from exc
        if not pages:
            raise NotFound(f"no page for {title!r}")
        page = next(iter(pages.values()))
        if "missing" in page or int(page.get("pageid", -1)) < 0:
            raise NotFound(f"article {title!r} does not exist")
        extract = (page.get("extract") or "").strip()
        if not extract:
            raise EmptyDescription(f"article {title!r} has an empty extract")
        return page.get("title", title), extract

    def check_image(self, url: str) -> bool:
        """True when the image URL answers 2xx (HEAD, falling back to GET)."""
        try:
            response = self._request("HEAD", url, allow_redirects=True)
            if response.status_code == 405:
                response = self._request("GET", url, allow_redirects=True, stream=True)
            return 200 <= response.status_code < 300
        except FetchError:
            return False


def title_from_url(title_or_url: str) -> str:
    """Article title from a wiki URL, or the input unchanged if not a URL."""
    parsed = urllib.parse.urlparse(title_or_url)
    if parsed.scheme in ("http", "https") and parsed.path:
        last = parsed.path.rstrip("/").rsplit("/", 1)[-1]
        return urllib.parse.unquote(last).replace("_", " ")
    return title_or_url


def fetch_entity_description(title_or_url: str, client: WikipediaClient) -> EntityEntry:
    """Fetch one entity's name and abstract from its article title or URL."""
    title = title_from_url(title_or_url)
    resolved, extract = client.fetch_extract(title)
    return EntityEntry(
        name=resolved,
        description=extract,
        source_url=client.article_url(resolved),
    )


def match_entities(caption: str, entity_list) -> list[EntityEntry]:
    """Entities whose names occur in the caption, in caption order.

    Matching is case-insensitive whole-phrase: the name must appear with no
    word character directly before or after it. Duplicates (by name) are
    returned once, at their first occurrence.
    """
    hits = []
    for entry in entity_list:
        pattern = r"(?<!\w)" + re.escape(entry.name) + r"(?!\w)"
        found = re.search(pattern, caption, flags=re.IGNORECASE)
        if found:
            hits.append((found.start(), entry))
    hits.sort(key=lambda pair: pair[0])
    seen = set()
    ordered = []
    for _, entry in hits:
        key = entry.name.lower()
        if key not in seen:
            seen.add(key)
            ordered.append(entry)
    return ordered


def _image_accessible(image_ref: str, client: WikipediaClient) -> bool:
    if urllib.parse.urlparse(image_ref).scheme in ("http", "https"):
        return client.check_image(image_ref)
    return os.path.exists(image_ref)


def _build_instance(index: int, row: dict, client: WikipediaClient, vocab) -> WitCubInstance | None:
    instance_id = row.get("id") or f"inst-{index:05d}"
    caption = row.get("caption") or ""
    image_ref = row.get("image_ref") or ""
    if not caption or not image_ref:
        logger.warning("dropping %s: caption or image_ref missing", instance_id)
        return None
    if not _image_accessible(image_ref, client):
        logger.warning("dropping %s: image %s not accessible", instance_id, image_ref)
        return None
    entities = []
    seen_urls = set()
    for url in row.get("entity_urls", []):
        if url in seen_urls:
            continue
        seen_urls.add(url)
        try:
            entities.append(fetch_entity_description(url, client))
        except FetchError as exc:
            logger.warning("dropping %s: entity fetch %s failed: %s", instance_id, url, exc)
            return None
    return WitCubInstance(
        id=instance_id,
        caption=caption,
        image_ref=image_ref,
        entities=tuple(entities),
        caption_token_count=tokenizer.count_tokens(caption, vocab),
    )


def build_dataset(rows, client: WikipediaClient, vocab=None, parallel: int = 4) -> Dataset:
    """Assemble a dataset from rows of {caption, image_ref, entity_urls}.

    Rows with an unreachable image or any failed entity fetch are dropped
    (logged). Work runs on a bounded thread pool but results keep input
    order, so output is deterministic.
    """
    if vocab is None:
        vocab = tokenizer.default_vocabulary()
    rows = list(rows)
    with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
        built = list(
            pool.map(lambda pair: _build_instance(pair[0], pair[1], client, vocab), enumerate(rows))
        )
    instances = tuple(inst for inst in built if inst is not None)
    if not instances:
        raise EmptyDataset(f"no valid instances among {len(rows)} rows")
    return Dataset(instances=instances, stats=compute_stats(instances))


def _instance_to_record(instance: WitCubInstance) -> dict:
    return {
        "id": instance.id,
        "caption": instance.caption,
        "image_ref": instance.image_ref,
        "caption_token_count": instance.caption_token_count,
        "entities": [
            {"name": e.name, "description": e.description, "source_url": e.source_url}
            for e in instance.entities
        ],
    }


def _instance_from_record(record: dict) -> WitCubInstance:
    return WitCubInstance(
        id=record["id"],
        caption=record["caption"],
        image_ref=record["image_ref"],
        entities=tuple(
            EntityEntry(e["name"], e["description"], e["source_url"])
            for e in record["entities"]
        ),
        caption_token_count=record["caption_token_count"],
    )


def save_dataset(dataset: Dataset, sink) -> None:
    """Write a dataset as JSON lines: a header record, then one instance per line."""
    header = {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "stats": {
            "instance_count": dataset.stats.instance_count,
            "mean_entities_per_instance": dataset.stats.mean_entities_per_instance,
            "mean_caption_tokens": dataset.stats.mean_caption_tokens,
        },
    }
    own = not hasattr(sink, "write")
    f = open(sink, "w", encoding="utf-8") if own else sink
    try:
        f.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
        for instance in dataset.instances:
            f.write(json.dumps(_instance_to_record(instance), ensure_ascii=False, sort_keys=True) + "\n")
    finally:
        if own:
            f.close()


def load_dataset(source) -> Dataset:
    """Read a dataset written by save_dataset, verifying version and stats."""
    own = not hasattr(source, "read")
    f = open(source, encoding="utf-8") if own else source
    try:
        lines = f.read().split("\n")
    finally:
        if own:
            f.close()
    lines = [line for line in lines if line.strip()]
    if not lines:
        raise ParseError("empty dataset file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad header record: {exc}", line=1) from exc
    if not isinstance(header, dict) or header.get("format") != DATASET_FORMAT:
        raise ParseError(f"not a {DATASET_FORMAT} file", line=1)
    if header.get("version") != DATASET_VERSION:
        raise VersionError(
            f"unsupported version {header.get('version')!r}, expected {DATASET_VERSION}"
        )
    instances = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            instances.append(_instance_from_record(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad instance record: {exc}", line=lineno) from exc
    stats = compute_stats(instances)
    stored = header.get("stats", {})
    recomputed = {
        "instance_count": stats.instance_count,
        "mean_entities_per_instance": stats.mean_entities_per_instance,
        "mean_caption_tokens": stats.mean_caption_tokens,
    }
    if stored != recomputed:
        raise ParseError(f"stored stats {stored} do not match instances {recomputed}", line=1)
    return Dataset(instances=tuple(instances), stats=stats)
