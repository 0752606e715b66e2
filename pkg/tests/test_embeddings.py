import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caieval.corpus import Corpus, LabelSpace, TextInstance
from caieval.embeddings import (
    EmbeddingProviderError,
    FileEmbeddingProvider,
    HashEmbeddingProvider,
    RemoteEmbeddingProvider,
    cosine,
    embed_corpus,
    hash_embed,
)


def test_cosine_identity():
    assert cosine([1.0, 0.0], [1.0, 0.0]) == 1.0


def test_cosine_orthogonal():
    assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0


def test_cosine_hand_value():
    # 24 / (5 * 5)
    assert abs(cosine([3.0, 4.0], [4.0, 3.0]) - 0.96) < 1e-12


def test_cosine_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        cosine([1.0, 0.0], [1.0, 0.0, 0.0])


def test_cosine_zero_vector_rejected():
    with pytest.raises(ValueError, match="zero norm"):
        cosine([0.0, 0.0], [1.0, 0.0])


finite_vec = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False).filter(lambda v: abs(v) > 1e-6),
    min_size=2,
    max_size=8,
)


@given(u=finite_vec, v=finite_vec, alpha=st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=200, deadline=None)
def test_cosine_properties(u, v, alpha):
    v = (v * ((len(u) // len(v)) + 1))[: len(u)]
    s = cosine(u, v)
    assert abs(s) <= 1.0 + 1e-12
    assert cosine(v, u) == s
    assert abs(cosine([alpha * x for x in u], v) - s) < 1e-9


class TestHashEmbed:
    def test_deterministic(self):
        first = hash_embed("hello world", 64, 7)
        second = hash_embed("hello world", 64, 7)
        np.testing.assert_array_equal(first, second)

    def test_repeated_text_is_parallel(self):
        single = hash_embed("hello", 64, 7)
        double = hash_embed("hello hello", 64, 7)
        assert abs(cosine(single, double) - 1.0) < 1e-12

    def test_unit_norm(self):
        for text in ("one token", "a few more words here", "x " * 50):
            assert abs(np.linalg.norm(hash_embed(text, 32, 3)) - 1.0) < 1e-12

    @pytest.mark.parametrize("text", ["", "   ", "\t\n"])
    def test_empty_text_rejected(self, text):
        with pytest.raises(ValueError, match="empty"):
            hash_embed(text, 64, 7)

    def test_small_dim_rejected(self):
        with pytest.raises(ValueError, match="dim"):
            hash_embed("hello", 1, 7)

    def test_seed_changes_vector(self):
        a = hash_embed("hello world again", 64, 1)
        b = hash_embed("hello world again", 64, 2)
        assert not np.allclose(a, b)


def make_corpus(texts, labels=("x",)):
    instances = tuple(
        TextInstance(f"i{k}", text, None) for k, text in enumerate(texts)
    )
    return Corpus(instances=instances, label_space=LabelSpace(labels))


def test_hash_provider_complete_and_deterministic():
    corpus = make_corpus(["same words", "same words", "other words"])
    provider = HashEmbeddingProvider(dim=32, seed=5)
    vectors = embed_corpus(provider, corpus)
    assert set(vectors) == {"i0", "i1", "i2"}
    np.testing.assert_array_equal(vectors["i0"], vectors["i1"])
    assert {v.size for v in vectors.values()} == {32}


def test_file_provider_complete_map():
    corpus = make_corpus(["a", "b"])
    provider = FileEmbeddingProvider({"i0": [1.0, 0.0], "i1": [0.0, 1.0]})
    vectors = embed_corpus(provider, corpus)
    assert set(vectors) == {"i0", "i1"}


def test_file_provider_missing_id_named():
    corpus = make_corpus(["a", "b"])
    provider = FileEmbeddingProvider({"i0": [1.0, 0.0]})
    with pytest.raises(EmbeddingProviderError, match="'i1'"):
        embed_corpus(provider, corpus)


def test_file_provider_rejects_mixed_dims():
    with pytest.raises(EmbeddingProviderError, match="inconsistent embedding dimension"):
        FileEmbeddingProvider({"a": [1.0, 0.0], "b": [1.0, 0.0, 0.0]})


def test_file_provider_from_sidecar(tmp_path):
    sidecar = tmp_path / "vectors.jsonl"
    sidecar.write_text(
        json.dumps({"id": "i0", "vector": [1.0, 0.0]})
        + "\n"
        + json.dumps({"id": "i1", "vector": [0.5, 0.5]})
        + "\n",
        encoding="utf-8",
    )
    provider = FileEmbeddingProvider.from_jsonl(sidecar)
    assert provider.dim == 2
    corpus = make_corpus(["a", "b"])
    assert len(embed_corpus(provider, corpus)) == 2


class FakeResponse:
    def __init__(self, status_code=200, body=None, text=""):
        self.status_code = status_code
        self._body = body
        self.text = text

    def json(self):
        if self._body is None:
            raise ValueError("not json")
        return self._body


class FakeSession:
    """Scripted requests.Session stand-in; records calls, pops responses."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers})
        return self.responses.pop(0)


def embedding_body(vectors, shuffle=False):
    data = [{"index": i, "embedding": vec} for i, vec in enumerate(vectors)]
    if shuffle:
        data = data[::-1]
    return {"data": data}


def test_remote_provider_batches_and_orders():
    corpus = make_corpus(["t0", "t1", "t2"])
    session = FakeSession(
        [
            FakeResponse(body=embedding_body([[1.0, 0.0], [0.0, 1.0]], shuffle=True)),
            FakeResponse(body=embedding_body([[0.5, 0.5]])),
        ]
    )
    provider = RemoteEmbeddingProvider(
        "http://enc.local/v1", model="enc-1", batch_size=2, session=session
    )
    vectors = embed_corpus(provider, corpus)
    assert len(session.calls) == 2
    assert session.calls[0]["url"] == "http://enc.local/v1/embeddings"
    assert session.calls[0]["json"] == {"model": "enc-1", "input": ["t0", "t1"]}
    np.testing.assert_array_equal(vectors["i0"], [1.0, 0.0])
    np.testing.assert_array_equal(vectors["i1"], [0.0, 1.0])
    np.testing.assert_array_equal(vectors["i2"], [0.5, 0.5])


def test_remote_provider_retries_transient_500():
    corpus = make_corpus(["t0"])
    session = FakeSession(
        [FakeResponse(status_code=500), FakeResponse(body=embedding_body([[1.0, 0.0]]))]
    )
    provider = RemoteEmbeddingProvider(
        "http://enc.local", model="enc-1", base_backoff_ms=0, session=session
    )
    vectors = embed_corpus(provider, corpus)
    assert len(session.calls) == 2
    assert vectors["i0"].size == 2


def test_remote_provider_exhausts_retries():
    corpus = make_corpus(["t0"])
    session = FakeSession([FakeResponse(status_code=503)] * 3)
    provider = RemoteEmbeddingProvider(
        "http://enc.local", model="enc-1", max_attempts=3, base_backoff_ms=0, session=session
    )
    with pytest.raises(EmbeddingProviderError, match="retries exhausted"):
        embed_corpus(provider, corpus)
    assert len(session.calls) == 3


def test_remote_provider_client_error_not_retried():
    corpus = make_corpus(["t0"])
    session = FakeSession([FakeResponse(status_code=401, text="who are you")])
    provider = RemoteEmbeddingProvider(
        "http://enc.local", model="enc-1", base_backoff_ms=0, session=session
    )
    with pytest.raises(EmbeddingProviderError, match="401"):
        embed_corpus(provider, corpus)
    assert len(session.calls) == 1


def test_remote_provider_sends_api_key(monkeypatch):
    monkeypatch.setenv("ENC_KEY", "sk-test")
    corpus = make_corpus(["t0"])
    session = FakeSession([FakeResponse(body=embedding_body([[1.0, 0.0]]))])
    provider = RemoteEmbeddingProvider(
        "http://enc.local", model="enc-1", api_key_env="ENC_KEY", session=session
    )
    embed_corpus(provider, corpus)
    assert session.calls[0]["headers"]["Authorization"] == "Bearer sk-test"


def test_remote_provider_wrong_count_rejected():
    corpus = make_corpus(["t0", "t1"])
    session = FakeSession([FakeResponse(body=embedding_body([[1.0, 0.0]]))])
    provider = RemoteEmbeddingProvider("http://enc.local", model="enc-1", session=session)
    with pytest.raises(EmbeddingProviderError, match="vectors for 2 inputs"):
        embed_corpus(provider, corpus)
