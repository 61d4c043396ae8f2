"""Deterministic dataset generators.

Every generator is a pure function of its spec: one seeded Random consumed
in a fixed order, so the same spec always produces the same file bytes.
Sizes here are desk scale; the interesting properties are ratios (URL bytes
versus content bytes, date clustering, URL popularity skew), not absolutes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from minimap.errors import EmptyPoolError
from minimap.lang.ast import Schema
from minimap.storage.records import RecordWriter, read_record_file
from minimap.workload.zipf import Zipf

WEBPAGES_SCHEMA = Schema("WebPages", [
    ("url", "str"), ("rank", "i32"), ("content", "str")])

PAGES_BLOB_SCHEMA = Schema("Pages", [
    ("rank", "i32"), ("payload", "blob")])

# field order follows the visit log layout: source address first (the key),
# then the visited page and its metadata
USERVISITS_SCHEMA = Schema("UserVisits", [
    ("sourceIP", "str"),
    ("destURL", "str"),
    ("visitDate", "i64"),
    ("adRevenue", "i32"),
    ("userAgent", "str"),
    ("countryCode", "str"),
    ("languageCode", "str"),
    ("searchWord", "str"),
    ("duration", "i32"),
])

DOCUMENTS_SCHEMA = Schema("Documents", [
    ("url", "str"), ("content", "blob")])

# printable filler: random bytes folded onto a 64-char alphabet keeps
# generation cheap while the content stays a valid str
_ALPHABET = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ."
_FOLD = bytes(_ALPHABET[b % 64] for b in range(256))

_AGENTS = [f"agent/{i}.{j}" for i in range(1, 6) for j in range(4)]
_COUNTRIES = ["US", "GB", "DE", "FR", "JP", "BR", "IN", "CA", "AU", "NL",
              "SE", "PL", "ES", "IT", "KR", "MX", "AR", "ZA", "NO", "FI"]
_LANGUAGES = ["en", "de", "fr", "ja", "pt", "hi", "es", "it", "ko", "nl",
              "sv", "pl", "no", "fi", "da"]
_WORDS = ["alpha", "bravo", "copper", "delta", "ember", "falcon", "garnet",
          "harbor", "indigo", "jasper", "kestrel", "lumen", "marble",
          "nickel", "onyx", "prism", "quartz", "raven", "slate", "topaz"]


def page_url(i: int) -> str:
    """Unique page address, about 60 bytes of non-content record overhead."""
    return f"http://www.site{i % 997:03d}.example.com/path/{i:08d}/page{i % 1000:03d}.html"


@dataclass
class WebPageGenSpec:
    n: int
    seed: int = 0
    content_size: int = 510   # mean bytes; 510 or 10240 in the experiments
    rank_max: int = 100       # uniform 1..rank_max


@dataclass
class UserVisitsGenSpec:
    n: int
    pages_path: str           # URL pool source (a WebPages record file)
    seed: int = 0
    zipf_s: float = 0.99
    start_day: int = 15000    # epoch days


@dataclass
class DocumentGenSpec:
    n: int
    seed: int = 0
    content_size: int = 510


def _content(rnd: random.Random, size: int) -> bytes:
    return rnd.randbytes(size).translate(_FOLD)


def gen_webpages(spec: WebPageGenSpec, path: str) -> None:
    rnd = random.Random(spec.seed)
    with RecordWriter(path, WEBPAGES_SCHEMA) as w:
        for i in range(spec.n):
            w.write((page_url(i),
                     rnd.randint(1, spec.rank_max),
                     _content(rnd, spec.content_size).decode("ascii")))


def gen_pages_blob(spec: WebPageGenSpec, path: str) -> None:
    """Same logical pages, opaque layout: rank exposed as the key, the rest
    serialized into one payload blob the analyzer cannot see into."""
    rnd = random.Random(spec.seed)
    with RecordWriter(path, PAGES_BLOB_SCHEMA) as w:
        for i in range(spec.n):
            rank = rnd.randint(1, spec.rank_max)
            payload = page_url(i).encode("ascii") + b"\x00" + _content(rnd, spec.content_size)
            w.write((rank, payload))


def gen_uservisits(spec: UserVisitsGenSpec, path: str) -> None:
    schema, pages = read_record_file(spec.pages_path)
    pool = [rec[schema.index_of("url")] for rec in pages]
    if spec.n > 0 and not pool:
        raise EmptyPoolError(f"no URLs in {spec.pages_path}")
    rnd = random.Random(spec.seed)
    zipf = Zipf(len(pool), spec.zipf_s) if pool else None
    day = spec.start_day
    with RecordWriter(path, USERVISITS_SCHEMA) as w:
        for _ in range(spec.n):
            # clustered timestamps: mostly the same day, never a regression,
            # and every jump small enough to delta-code into one byte
            jitter = rnd.random()
            if jitter >= 0.99:
                day += rnd.randint(2, 40)
            elif jitter >= 0.90:
                day += 1
            w.write((
                f"{rnd.randint(1, 255)}.{rnd.randint(0, 255)}"
                f".{rnd.randint(0, 255)}.{rnd.randint(1, 254)}",
                pool[zipf.sample(rnd) - 1],
                day,
                rnd.randint(0, 999),
                _AGENTS[rnd.randrange(len(_AGENTS))],
                _COUNTRIES[rnd.randrange(len(_COUNTRIES))],
                _LANGUAGES[rnd.randrange(len(_LANGUAGES))],
                _WORDS[rnd.randrange(len(_WORDS))],
                rnd.randint(1, 3000),
            ))


def gen_documents(spec: DocumentGenSpec, path: str) -> None:
    rnd = random.Random(spec.seed)
    lo = max(1, spec.content_size // 2)
    hi = spec.content_size + spec.content_size // 2
    with RecordWriter(path, DOCUMENTS_SCHEMA) as w:
        for i in range(spec.n):
            w.write((page_url(i), rnd.randbytes(rnd.randint(lo, hi))))


def load_url_pool(pages_path: str, limit: Optional[int] = None) -> list[str]:
    schema, pages = read_record_file(pages_path)
    col = schema.index_of("url")
    urls = [rec[col] for rec in pages]
    return urls[:limit] if limit is not None else urls
