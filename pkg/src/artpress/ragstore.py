"""Prompt/template database: embeddings, similarity retrieval, weighted selection.

The store backs two of the enhancement strategies. Embeddings default to a
deterministic hashed bag-of-words so the whole retrieval path is testable
without any model or network; a remote embedding provider can be swapped in
behind the same call signature.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyText,
    InvalidKind,
    MissingPlaceholder,
    NoCandidates,
    ParseError,
    ZeroVector,
)

DEFAULT_DIM = 256

KINDS = ("positive_example", "negative_example", "positive_template", "negative_template")

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a64(token: str) -> int:
    h = _FNV_OFFSET
    for b in token.encode("utf-8"):
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def embed_text(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Deterministic hashed bag-of-words embedding, L2-normalized."""
    tokens = tokenize(text)
    if not tokens:
        raise EmptyText(f"no tokens in {text!r}")
    vec = np.zeros(dim, dtype=np.float64)
    for tok in tokens:
        vec[_fnv1a64(tok) % dim] += 1.0
    return vec / np.linalg.norm(vec)


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for zero vector")
    return float(np.dot(a, b) / (na * nb))


@dataclass(frozen=True)
class PromptRecord:
    id: str
    text: str
    kind: str
    vector: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "kind": self.kind,
            "vector": [float(x) for x in self.vector],
        }


@dataclass(frozen=True)
class ScoredRecord:
    record: PromptRecord
    similarity: float


class Store:
    """Immutable-after-build collection of prompt records of one dimension."""

    def __init__(self, records: list[PromptRecord], dim: int):
        self.dim = dim
        self.records: dict[str, PromptRecord] = {}
        for rec in records:
            if rec.id in self.records:
                raise DuplicateId(rec.id)
            self.records[rec.id] = rec
        # Cached per-kind matrices for fast exact scans.
        self._by_kind: dict[str | None, tuple[list[PromptRecord], np.ndarray]] = {}
        self._build_cache()

    def _build_cache(self):
        ordered = sorted(self.records.values(), key=lambda r: r.id)
        groups: dict[str | None, list[PromptRecord]] = {None: ordered}
        for rec in ordered:
            groups.setdefault(rec.kind, []).append(rec)
        for key, recs in groups.items():
            mat = np.stack([r.vector for r in recs]) if recs else np.zeros((0, self.dim))
            self._by_kind[key] = (recs, mat)

    def __len__(self):
        return len(self.records)

    def candidates(self, kind: str | None):
        return self._by_kind.get(kind, ([], np.zeros((0, self.dim))))


def _validate_record(id_, text, kind, vector, dim):
    if not isinstance(id_, str) or not id_:
        raise ParseError(0, "missing id")
    text = text if isinstance(text, str) else ""
    if not text.strip():
        raise EmptyText(f"record {id_!r} has empty text")
    if kind not in KINDS:
        raise InvalidKind(f"record {id_!r}: {kind!r}")
    if kind == "positive_template" and text.count("{base}") != 1:
        raise MissingPlaceholder(f"record {id_!r}: positive_template needs exactly one {{base}}")
    vec = np.asarray(vector, dtype=np.float64)
    if vec.shape != (dim,):
        raise DimensionMismatch(f"record {id_!r}: expected dim {dim}, got {vec.shape}")
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ZeroVector(f"record {id_!r} has zero vector")
    return PromptRecord(id=id_, text=text, kind=kind, vector=vec / norm)


def ingest(path, provider=embed_text, dim: int = DEFAULT_DIM) -> Store:
    """Load a JSONL prompt database, embedding records that carry no vector."""
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, str(exc)) from exc
            if not isinstance(raw, dict):
                raise ParseError(line_no, "record is not an object")
            id_ = raw.get("id")
            if not isinstance(id_, str) or not id_:
                raise ParseError(line_no, "missing or invalid id")
            if id_ in seen:
                raise DuplicateId(id_)
            seen.add(id_)
            text = raw.get("text", "")
            if not isinstance(text, str) or not text.strip():
                raise EmptyText(f"line {line_no}: record {id_!r} has empty text")
            vector = raw.get("vector")
            if vector is None:
                vector = provider(text)
            records.append(_validate_record(id_, text, raw.get("kind"), vector, dim))
    return Store(records, dim)


def save(store: Store, path) -> None:
    """Serialize a store back to JSONL (ids ascending, vectors included)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in sorted(store.records.values(), key=lambda r: r.id):
            fh.write(json.dumps(rec.to_json_dict()) + "\n")


def _scan(store: Store, query, kind: str | None):
    recs, mat = store.candidates(kind)
    if not recs:
        raise NoCandidates(f"no records with kind {kind!r}")
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (store.dim,):
        raise DimensionMismatch(f"query dim {q.shape} vs store dim {store.dim}")
    qn = np.linalg.norm(q)
    if qn == 0.0:
        raise ZeroVector("query is the zero vector")
    sims = mat @ (q / qn)
    return recs, sims


def top_k(store: Store, query, k: int, kind: str | None = None) -> list[ScoredRecord]:
    """k most similar records by cosine, descending; ties broken by ascending id."""
    recs, sims = _scan(store, query, kind)
    order = sorted(range(len(recs)), key=lambda i: (-sims[i], recs[i].id))
    return [ScoredRecord(recs[i], float(sims[i])) for i in order[:k]]


def bottom_k(store: Store, query, k: int, kind: str | None = None) -> list[ScoredRecord]:
    """k least similar records by cosine, ascending; ties broken by ascending id."""
    recs, sims = _scan(store, query, kind)
    order = sorted(range(len(recs)), key=lambda i: (sims[i], recs[i].id))
    return [ScoredRecord(recs[i], float(sims[i])) for i in order[:k]]


WEIGHT_FLOOR = 1e-6


def weighted_pick(candidates: list[ScoredRecord], seed: int) -> PromptRecord:
    """Sample one candidate with probability proportional to max(similarity, floor).

    Cumulative prefix sums with a single uniform draw from a seeded generator,
    so a fixed seed always reproduces the same pick.
    """
    if not candidates:
        raise NoCandidates("weighted_pick over empty candidate list")
    weights = [max(c.similarity, WEIGHT_FLOOR) for c in candidates]
    total = sum(weights)
    u = random.Random(seed).random() * total
    acc = 0.0
    for cand, w in zip(candidates, weights):
        acc += w
        if u < acc:
            return cand.record
    return candidates[-1].record


def render_template(template: str, base: str, positive: bool = True) -> str:
    """Insert the base prompt into a template's `{base}` slot.

    Positive templates must contain the placeholder exactly once. Negative
    templates may omit it, in which case they pass through verbatim.
    """
    n = template.count("{base}")
    if n == 0:
        if positive:
            raise MissingPlaceholder(f"template {template!r} lacks {{base}}")
        return template
    if n > 1:
        raise MissingPlaceholder(f"template {template!r} has {n} placeholders")
    return template.replace("{base}", base)
