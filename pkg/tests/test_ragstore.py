import json

import numpy as np
import pytest

from artpress import ragstore
from artpress.errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyText,
    InvalidKind,
    MissingPlaceholder,
    NoCandidates,
    ZeroVector,
)
from artpress.ragstore import (
    PromptRecord,
    ScoredRecord,
    Store,
    bottom_k,
    cosine,
    embed_text,
    ingest,
    render_template,
    save,
    top_k,
    weighted_pick,
)

from conftest import write_jsonl
from oracles import brute_force_rank, fnv1a64


def make_store(vecs):
    """vecs: dict id -> vector (any kind, normalized on entry)."""
    records = []
    for rid, v in vecs.items():
        v = np.asarray(v, dtype=np.float64)
        records.append(PromptRecord(rid, "t " + rid, "positive_example",
                                    v / np.linalg.norm(v)))
    return Store(records, len(next(iter(vecs.values()))))


class TestEmbed:
    def test_order_invariant(self):
        assert np.array_equal(embed_text("cat dog"), embed_text("dog cat"))

    def test_proportional_counts_same_direction(self):
        assert cosine(embed_text("cat cat"), embed_text("cat")) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_tokens_orthogonal(self):
        # verified against an independent FNV-1a implementation: the two
        # tokens land in different buckets mod 256
        b_cat = fnv1a64(b"cat") % 256
        b_xyl = fnv1a64(b"xylophone") % 256
        assert b_cat != b_xyl
        assert cosine(embed_text("cat"), embed_text("xylophone")) == 0.0

    def test_bucket_matches_oracle(self):
        v = embed_text("cat")
        assert v[fnv1a64(b"cat") % 256] == 1.0

    def test_unit_norm(self):
        for text in ("cat", "the quick brown fox", "a a a b"):
            assert np.linalg.norm(embed_text(text)) == pytest.approx(1.0, abs=1e-9)

    def test_empty_text(self):
        with pytest.raises(EmptyText):
            embed_text("  ... !!! ")


class TestCosine:
    def test_identical(self):
        assert cosine([1, 0], [1, 0]) == 1.0

    def test_orthogonal(self):
        assert cosine([1, 0], [0, 1]) == 0.0

    def test_hand_value(self):
        assert cosine([1, 0], [1, 1]) == pytest.approx(0.7071067811865475, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine([1, 0], [1, 0, 0])

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            cosine([0, 0], [1, 0])

    def test_self_similarity_and_symmetry(self, rng):
        for _ in range(20):
            v = rng.normal(size=8)
            w = rng.normal(size=8)
            assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)
            assert cosine(v, w) == pytest.approx(cosine(w, v), abs=1e-15)

    def test_scale_invariance(self, rng):
        v = rng.normal(size=8)
        w = rng.normal(size=8)
        for alpha in (0.001, 3.5, 1e6):
            assert cosine(alpha * v, w) == pytest.approx(cosine(v, w), abs=1e-12)


class TestIngest:
    def test_well_formed(self, tmp_path):
        path = tmp_path / "db.jsonl"
        write_jsonl(path, [
            {"id": "a", "text": "one", "kind": "positive_example"},
            {"id": "b", "text": "two", "kind": "negative_example"},
            {"id": "c", "text": "three {base}", "kind": "positive_template"},
        ])
        store = ingest(path)
        assert len(store) == 3

    def test_template_without_placeholder(self, tmp_path):
        path = tmp_path / "db.jsonl"
        write_jsonl(path, [{"id": "t1", "text": "no slot here", "kind": "positive_template"}])
        with pytest.raises(MissingPlaceholder):
            ingest(path)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "db.jsonl"
        write_jsonl(path, [
            {"id": "t1", "text": "x", "kind": "positive_example"},
            {"id": "t1", "text": "y", "kind": "positive_example"},
        ])
        with pytest.raises(DuplicateId):
            ingest(path)

    def test_invalid_kind(self, tmp_path):
        path = tmp_path / "db.jsonl"
        write_jsonl(path, [{"id": "a", "text": "x", "kind": "sideways"}])
        with pytest.raises(InvalidKind):
            ingest(path)

    def test_empty_text(self, tmp_path):
        path = tmp_path / "db.jsonl"
        write_jsonl(path, [{"id": "a", "text": "   ", "kind": "positive_example"}])
        with pytest.raises(EmptyText):
            ingest(path)

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "db.jsonl"
        path.write_text('{"id": "a", "text": "x", "kind": "positive_example"}\nnot json\n')
        with pytest.raises(ragstore.ParseError) as exc:
            ingest(path)
        assert exc.value.line_no == 2

    def test_round_trip_stability(self, sample_store_file, tmp_path):
        store1 = ingest(sample_store_file)
        out = tmp_path / "roundtrip.jsonl"
        save(store1, out)
        store2 = ingest(out)
        assert store1.records.keys() == store2.records.keys()
        for rid in store1.records:
            r1, r2 = store1.records[rid], store2.records[rid]
            assert (r1.text, r1.kind) == (r2.text, r2.kind)
            assert np.array_equal(r1.vector, r2.vector)


class TestRetrieval:
    def test_top_k_example(self):
        store = make_store({"a": [1, 0], "b": [0, 1], "c": [0.6, 0.8]})
        got = top_k(store, [1, 0], 2)
        assert [(s.record.id, round(s.similarity, 12)) for s in got] == [("a", 1.0), ("c", 0.6)]

    def test_top_k_saturation(self):
        store = make_store({"a": [1, 0], "b": [0, 1]})
        assert len(top_k(store, [1, 0], 10)) == 2

    def test_top_k_tie_rule(self):
        store = make_store({"z": [1, 0], "a": [1, 0]})
        assert top_k(store, [1, 0], 1)[0].record.id == "a"

    def test_bottom_k_example(self):
        store = make_store({"a": [1, 0], "b": [0, 1], "c": [0.6, 0.8]})
        got = bottom_k(store, [1, 0], 1)
        assert got[0].record.id == "b"
        assert got[0].similarity == pytest.approx(0.0, abs=1e-12)

    def test_bottom_k_singleton(self):
        store = make_store({"a": [1, 0]})
        assert [s.record.id for s in bottom_k(store, [0.5, 0.5], 3)] == ["a"]

    def test_duality(self, rng):
        vecs = {f"r{i:03d}": rng.normal(size=6) for i in range(25)}
        store = make_store(vecs)
        q = rng.normal(size=6)
        tops = [s.record.id for s in top_k(store, q, len(vecs))]
        bots = [s.record.id for s in bottom_k(store, q, len(vecs))]
        assert tops == list(reversed(bots))

    def test_no_candidates_after_filter(self):
        store = make_store({"a": [1, 0]})
        with pytest.raises(NoCandidates):
            top_k(store, [1, 0], 1, kind="negative_template")

    @pytest.mark.parametrize("k", [1, 3, 17, 1000])
    def test_matches_brute_force(self, rng, k):
        vecs = {f"r{i:04d}": rng.normal(size=16) for i in range(200)}
        store = make_store(vecs)
        q = rng.normal(size=16)
        normed = {rid: np.asarray(v) / np.linalg.norm(v) for rid, v in vecs.items()}
        expect = brute_force_rank(list(normed.items()), q, descending=True)[:k]
        got = top_k(store, q, k)
        assert [s.record.id for s in got] == [rid for rid, _ in expect]
        for s, (_, sim) in zip(got, expect):
            assert s.similarity == pytest.approx(sim, abs=1e-9)


class TestWeightedPick:
    def test_single_candidate(self):
        store = make_store({"a": [1, 0]})
        cand = top_k(store, [1, 0], 1)
        for seed in (0, 1, 999):
            assert weighted_pick(cand, seed).id == "a"

    def test_deterministic_per_seed(self):
        store = make_store({"a": [1, 0], "b": [0.8, 0.6], "c": [0, 1]})
        cands = top_k(store, [1, 0], 3)
        for seed in range(50):
            assert weighted_pick(cands, seed).id == weighted_pick(cands, seed).id

    @pytest.mark.parametrize("weights", [[0.5, 0.5], [0.9, 0.1]])
    def test_distribution(self, weights):
        recs = [PromptRecord(f"r{i}", "t", "positive_example", np.array([1.0]))
                for i in range(len(weights))]
        cands = [ScoredRecord(r, w) for r, w in zip(recs, weights)]
        n = 100_000
        counts = {r.id: 0 for r in recs}
        for seed in range(n):
            counts[weighted_pick(cands, seed).id] += 1
        total = sum(weights)
        for r, w in zip(recs, weights):
            assert counts[r.id] / n == pytest.approx(w / total, abs=0.01)

    def test_empty(self):
        with pytest.raises(NoCandidates):
            weighted_pick([], 0)


class TestRenderTemplate:
    def test_substitution(self):
        assert render_template("A painting of {base}, dramatic lighting", "cat") == \
            "A painting of cat, dramatic lighting"

    def test_identity_template(self):
        assert render_template("{base}", "red fox") == "red fox"

    def test_negative_verbatim(self):
        assert render_template("watermark, text, low quality", "cat", positive=False) == \
            "watermark, text, low quality"

    def test_positive_requires_placeholder(self):
        with pytest.raises(MissingPlaceholder):
            render_template("no slot", "cat")
