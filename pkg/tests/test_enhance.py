import pytest

from artpress import ragstore
from artpress.enhance import (
    ChatRequest,
    EnhanceOptions,
    chat,
    enhance_llm,
    enhance_multishot,
    enhance_template,
)
from artpress.errors import EmptyBase, HttpError, MalformedResponse, RetriesExhausted
from artpress.pipeline import EchoChatBackend, FailingBackend

from oracles import brute_force_rank


class ScriptedBackend:
    """Returns queued responses; an int means raise HttpError(status)."""

    def __init__(self, script):
        self.script = list(script)
        self.requests = []

    def send(self, req):
        self.requests.append(req)
        item = self.script.pop(0)
        if isinstance(item, int):
            raise HttpError(item)
        return item


def no_sleep(_):
    pass


class TestChat:
    def test_echo_contract(self):
        req = ChatRequest("m", [{"role": "user", "content": "hello there"}])
        resp = chat(EchoChatBackend(), req)
        assert resp.content == "hello there"

    def test_retries_exhausted(self):
        backend = ScriptedBackend([500, 500, 500])
        req = ChatRequest("m", [{"role": "user", "content": "x"}])
        with pytest.raises(RetriesExhausted):
            chat(backend, req, retries=2, sleep=no_sleep)
        assert len(backend.requests) == 3

    def test_recovers_after_one_failure(self):
        backend = ScriptedBackend([503, {"content": "ok"}])
        req = ChatRequest("m", [{"role": "user", "content": "x"}])
        resp = chat(backend, req, retries=3, sleep=no_sleep)
        assert resp.content == "ok"
        assert resp.attempts == 2

    def test_non_transient_not_retried(self):
        backend = ScriptedBackend([404])
        req = ChatRequest("m", [{"role": "user", "content": "x"}])
        with pytest.raises(HttpError):
            chat(backend, req, retries=3, sleep=no_sleep)
        assert len(backend.requests) == 1

    def test_malformed_response(self):
        backend = ScriptedBackend([{"weird": True}])
        req = ChatRequest("m", [{"role": "user", "content": "x"}])
        with pytest.raises(MalformedResponse):
            chat(backend, req, sleep=no_sleep)

    def test_request_validation(self):
        with pytest.raises(ValueError):
            chat(EchoChatBackend(), ChatRequest("m", []))
        with pytest.raises(ValueError):
            chat(EchoChatBackend(), ChatRequest(
                "m", [{"role": "assistant", "content": "hi"}]))


class TestEnhanceLlm:
    def test_mock_composition(self):
        backend = ScriptedBackend([{"content": "P*"}, {"content": "N*"}])
        pair = enhance_llm("mountains", backend)
        assert (pair.positive, pair.negative) == ("P*", "N*")
        assert pair.method == "llm"
        assert pair.provenance == []
        assert pair.elapsed >= 0.0

    def test_empty_base(self):
        with pytest.raises(EmptyBase):
            enhance_llm("", ScriptedBackend([]))

    def test_quotes_stripped(self):
        backend = ScriptedBackend([{"content": '  "quoted prompt" '}, {"content": "n"}])
        pair = enhance_llm("cat", backend)
        assert pair.positive == "quoted prompt"


class TestEnhanceMultishot:
    def test_message_assembly_has_k_examples(self, sample_store_file):
        store = ragstore.ingest(sample_store_file)
        backend = ScriptedBackend([{"content": "P"}, {"content": "N"}])
        pair = enhance_multishot("cat", store, backend, EnhanceOptions(k_examples=2))
        assert pair.method == "rag_multishot"
        for req in backend.requests:
            user = req.messages[-1]["content"]
            assert "1. " in user and "2. " in user and "3. " not in user
            assert "cat" in user

    def test_provenance_matches_brute_force(self, sample_store_file):
        store = ragstore.ingest(sample_store_file)
        backend = ScriptedBackend([{"content": "P"}, {"content": "N"}])
        base = "a cat on a mountain"
        pair = enhance_multishot(base, store, backend, EnhanceOptions(k_examples=2))
        query = ragstore.embed_text(base)
        pos = [(r.id, r.vector) for r in store.records.values()
               if r.kind == "positive_example"]
        neg = [(r.id, r.vector) for r in store.records.values()
               if r.kind == "negative_example"]
        expect = [rid for rid, _ in brute_force_rank(pos, query, descending=True)[:2]]
        expect += [rid for rid, _ in brute_force_rank(neg, query, descending=False)[:2]]
        assert pair.provenance == expect

    def test_examples_in_retrieval_order(self, sample_store_file):
        store = ragstore.ingest(sample_store_file)
        backend = ScriptedBackend([{"content": "P"}, {"content": "N"}])
        pair = enhance_multishot("majestic cat throne", store, backend,
                                 EnhanceOptions(k_examples=2))
        user = backend.requests[0].messages[-1]["content"]
        texts = [store.records[rid].text for rid in pair.provenance[:2]]
        assert user.index(texts[0]) < user.index(texts[1])


class TestEnhanceTemplate:
    def test_single_candidate_composition(self, tmp_path):
        from conftest import write_jsonl
        path = tmp_path / "db.jsonl"
        write_jsonl(path, [
            {"id": "p", "text": "oil painting of {base}", "kind": "positive_template"},
            {"id": "n", "text": "blurry, watermark", "kind": "negative_template"},
        ])
        store = ragstore.ingest(path)
        for seed in (0, 7, 123456):
            pair = enhance_template("fox", store, seed)
            assert pair.positive == "oil painting of fox"
            assert pair.negative == "blurry, watermark"
            assert pair.method == "template"
            assert pair.provenance == ["p", "n"]

    def test_determinism(self, sample_store_file):
        store = ragstore.ingest(sample_store_file)
        a = enhance_template("fox", store, 42)
        b = enhance_template("fox", store, 42)
        assert (a.positive, a.negative, a.provenance) == (b.positive, b.negative, b.provenance)

    def test_never_touches_network(self, sample_store_file):
        # method 3 takes no backend at all; a failing backend anywhere in
        # scope proves no chat path is exercised
        store = ragstore.ingest(sample_store_file)
        _ = FailingBackend()
        pair = enhance_template("fox", store, 0)
        assert pair.positive

    def test_empty_base(self, sample_store_file):
        store = ragstore.ingest(sample_store_file)
        with pytest.raises(EmptyBase):
            enhance_template("   ", store, 0)
