"""The three prompt-enhancement strategies and the LLM chat client they share.

Method 1 (llm): two plain LLM calls, one for the positive prompt and one for
the negative prompt. Method 2 (rag_multishot): same, but each call carries
retrieved example prompts. Method 3 (template): pure retrieval plus template
rendering, no LLM at all.
"""

from __future__ import annotations

import importlib.resources
import os
import random
import time
from dataclasses import dataclass, field

import requests

from . import ragstore
from .errors import (
    BackendTimeout,
    EmptyBase,
    HttpError,
    MalformedResponse,
    RetriesExhausted,
)

VALID_ROLES = ("system", "user", "assistant")


@dataclass
class ChatRequest:
    model: str
    messages: list[dict]
    temperature: float = 0.8
    max_tokens: int = 512
    seed: int | None = None

    def validate(self):
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[0]["role"] not in ("system", "user"):
            raise ValueError("first message must be system or user")
        for msg in self.messages:
            if msg["role"] not in VALID_ROLES:
                raise ValueError(f"invalid role {msg['role']!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature outside [0, 2]")

    def to_json_dict(self):
        d = {
            "model": self.model,
            "messages": self.messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        if self.seed is not None:
            d["seed"] = self.seed
        return d


@dataclass
class ChatResponse:
    content: str
    usage: dict | None = None
    attempts: int = 1


@dataclass
class EnhanceOptions:
    k_examples: int = 4
    temperature: float = 0.8
    timeout: float = 60.0
    retries: int = 3
    model: str = "default"


@dataclass
class PromptPair:
    positive: str
    negative: str
    method: str
    base: str
    elapsed: float
    provenance: list[str] = field(default_factory=list)

    def to_json_dict(self):
        return {
            "positive": self.positive,
            "negative": self.negative,
            "method": self.method,
            "base": self.base,
            "elapsed": self.elapsed,
            "provenance": list(self.provenance),
        }


class HttpChatBackend:
    """Chat completion client speaking the engine's `/v1/chat` wire protocol."""

    def __init__(self, url=None, api_key=None, timeout=60.0):
        self.url = url or os.environ.get("ARTPRESS_LLM_URL")
        if not self.url:
            raise ValueError("no LLM endpoint (set ARTPRESS_LLM_URL)")
        self.api_key = api_key or os.environ.get("ARTPRESS_LLM_API_KEY")
        self.timeout = timeout

    def send(self, req: ChatRequest) -> dict:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(
                self.url.rstrip("/") + "/v1/chat",
                json=req.to_json_dict(),
                headers=headers,
                timeout=self.timeout,
            )
        except requests.Timeout as exc:
            raise BackendTimeout(str(exc)) from exc
        except requests.ConnectionError as exc:
            raise HttpError(0, str(exc)) from exc
        if resp.status_code != 200:
            raise HttpError(resp.status_code, resp.text[:200])
        try:
            return resp.json()
        except ValueError as exc:
            raise MalformedResponse(str(exc)) from exc


def _is_transient(exc):
    if isinstance(exc, BackendTimeout):
        return True
    if isinstance(exc, HttpError):
        return exc.status == 0 or exc.status == 429 or exc.status >= 500
    return False


def chat(backend, req: ChatRequest, retries: int = 3,
         backoff_base: float = 0.5, sleep=time.sleep, rng=None) -> ChatResponse:
    """One chat completion with exponential backoff and full jitter.

    Makes at most ``retries + 1`` attempts; only transient failures
    (timeouts, connection errors, 429/5xx) are retried.
    """
    req.validate()
    rng = rng or random.Random()
    last = None
    for attempt in range(retries + 1):
        try:
            raw = backend.send(req)
        except Exception as exc:  # noqa: BLE001 - classified below
            last = exc
            if not _is_transient(exc):
                raise
            if attempt < retries:
                sleep(rng.uniform(0.0, backoff_base * (2 ** attempt)))
            continue
        content = raw.get("content") if isinstance(raw, dict) else None
        if not isinstance(content, str) or not content:
            raise MalformedResponse(f"bad chat payload: {raw!r}")
        return ChatResponse(content=content, usage=raw.get("usage"), attempts=attempt + 1)
    raise RetriesExhausted(retries + 1, last)


def _load_instruction(name, assets_dir=None):
    if assets_dir is not None:
        with open(os.path.join(assets_dir, name + ".txt"), encoding="utf-8") as fh:
            return fh.read().strip()
    ref = importlib.resources.files("artpress") / "assets" / (name + ".txt")
    return ref.read_text(encoding="utf-8").strip()


def _clean(text: str) -> str:
    text = text.strip()
    for quote in ('"', "'"):
        if len(text) >= 2 and text.startswith(quote) and text.endswith(quote):
            text = text[1:-1].strip()
    return text


def _one_call(backend, system, user, opts):
    req = ChatRequest(
        model=opts.model,
        messages=[{"role": "system", "content": system},
                  {"role": "user", "content": user}],
        temperature=opts.temperature,
    )
    return _clean(chat(backend, req, retries=opts.retries).content)


def enhance_llm(base: str, backend, opts: EnhanceOptions | None = None) -> PromptPair:
    """Method 1: direct LLM enhancement, positive and negative pathways."""
    if not base or not base.strip():
        raise EmptyBase("base prompt is empty")
    opts = opts or EnhanceOptions()
    start = time.perf_counter()
    positive = _one_call(backend, _load_instruction("llm_positive"), base, opts)
    negative = _one_call(backend, _load_instruction("llm_negative"), base, opts)
    elapsed = time.perf_counter() - start
    return PromptPair(positive, negative, "llm", base, elapsed)


def _numbered(examples):
    return "\n".join(f"{i}. {text}" for i, text in enumerate(examples, start=1))


def enhance_multishot(base: str, store: ragstore.Store, backend,
                      opts: EnhanceOptions | None = None) -> PromptPair:
    """Method 2: LLM enhancement conditioned on retrieved example prompts.

    Positive pathway sees the k most similar positive examples; negative
    pathway sees the k least similar negative examples.
    """
    if not base or not base.strip():
        raise EmptyBase("base prompt is empty")
    opts = opts or EnhanceOptions()
    start = time.perf_counter()
    query = ragstore.embed_text(base, store.dim)
    pos = ragstore.top_k(store, query, opts.k_examples, kind="positive_example")
    neg = ragstore.bottom_k(store, query, opts.k_examples, kind="negative_example")

    pos_user = (
        "Example prompts:\n" + _numbered([s.record.text for s in pos])
        + f"\n\nBase prompt: {base}\nEnhanced positive prompt:"
    )
    neg_user = (
        "Example negative prompts:\n" + _numbered([s.record.text for s in neg])
        + f"\n\nBase prompt: {base}\nNegative prompt:"
    )
    positive = _one_call(backend, _load_instruction("multishot_positive"), pos_user, opts)
    negative = _one_call(backend, _load_instruction("multishot_negative"), neg_user, opts)
    elapsed = time.perf_counter() - start
    provenance = [s.record.id for s in pos] + [s.record.id for s in neg]
    return PromptPair(positive, negative, "rag_multishot", base, elapsed, provenance)


TEMPLATE_POOL_K = 8


def enhance_template(base: str, store: ragstore.Store, seed: int,
                     k: int = TEMPLATE_POOL_K) -> PromptPair:
    """Method 3: weighted-random template retrieval and rendering. No LLM.

    Positive template drawn from the k most similar positive templates,
    negative from the k least similar negative templates; the run seed picks
    the positive, seed+1 the negative.
    """
    if not base or not base.strip():
        raise EmptyBase("base prompt is empty")
    start = time.perf_counter()
    query = ragstore.embed_text(base, store.dim)
    pos_cands = ragstore.top_k(store, query, k, kind="positive_template")
    neg_cands = ragstore.bottom_k(store, query, k, kind="negative_template")
    pos_rec = ragstore.weighted_pick(pos_cands, seed)
    neg_rec = ragstore.weighted_pick(neg_cands, seed + 1)
    positive = ragstore.render_template(pos_rec.text, base, positive=True)
    negative = ragstore.render_template(neg_rec.text, base, positive=False)
    elapsed = time.perf_counter() - start
    return PromptPair(positive, negative, "template", base, elapsed,
                      [pos_rec.id, neg_rec.id])
