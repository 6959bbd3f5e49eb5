import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turbodsa.corpus import (END, PAD, START, UNK, SPECIAL_TOKENS, TokenBatch, Vocabulary,
                             batch_iterator, build_vocabulary, detokenize, encode_corpus,
                             fixture_corpus_path, normalize, read_corpus, tokenize,
                             vocabulary_from_sentences)
from turbodsa.errors import ConfigurationError, CorpusError, InvalidTokenError


def test_specials_fixed():
    assert (PAD, START, END, UNK) == (0, 1, 2, 3)


def test_tiny_vocabulary(tiny_corpus):
    v = build_vocabulary(tiny_corpus, min_freq=1)
    assert v.tokens == ["<pad>", "<start>", "<end>", "<unk>", "a", "b"]
    assert v.size == 6


def test_min_freq_threshold(tiny_corpus):
    v = build_vocabulary(tiny_corpus, min_freq=2)
    assert v.size == 5
    row, _ = tokenize("b", v, 5)
    assert row[1] == UNK


def test_max_size_caps_vocabulary(tiny_corpus):
    assert build_vocabulary(tiny_corpus, max_size=5).tokens[-1] == "a"


def test_missing_file_raises(tmp_path):
    with pytest.raises(OSError):
        build_vocabulary(tmp_path / "nope.txt")


def test_empty_corpus(tmp_path):
    p = tmp_path / "empty.txt"
    p.write_text("\n\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="empty corpus"):
        build_vocabulary(p)


def test_deterministic_order(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("z y x\nx y\nx\n", encoding="utf-8")
    assert build_vocabulary(p).tokens[4:] == ["x", "y", "z"]
    assert build_vocabulary(p).tokens == build_vocabulary(p).tokens


def test_tokenize_examples(tiny_corpus):
    v = build_vocabulary(tiny_corpus)
    row, n = tokenize("", v, 6)
    assert row.tolist() == [START, END, PAD, PAD, PAD, PAD] and n == 2
    row, n = tokenize("a b", v, 6)
    assert row.tolist() == [START, 4, 5, END, PAD, PAD] and n == 4
    v2 = build_vocabulary(tiny_corpus, min_freq=2)
    assert tokenize("x", v2, 5)[0].tolist() == [START, UNK, END, PAD, PAD]


def test_tokenize_truncates():
    v = Vocabulary(list(SPECIAL_TOKENS) + ["w"])
    row, n = tokenize("w w w w w w", v, 5)
    assert row.tolist() == [START, 4, 4, 4, END] and n == 5


def test_tokenize_requires_room():
    v = Vocabulary(list(SPECIAL_TOKENS))
    with pytest.raises(ConfigurationError):
        tokenize("a", v, 2)


def test_punctuation_and_case():
    assert normalize("Keep CLEAR, please.") == "keep clear , please ."


def test_detokenize(tiny_corpus):
    v = build_vocabulary(tiny_corpus)
    assert detokenize([START, 4, END, PAD], v) == "a"
    assert detokenize([START, END], v) == ""
    with pytest.raises(InvalidTokenError, match="invalid token id"):
        detokenize([START, 99], v)


def test_vocab_file_roundtrip(tmp_path, tiny_corpus):
    v = build_vocabulary(tiny_corpus)
    v.save(tmp_path / "v.txt")
    lines = (tmp_path / "v.txt").read_text().splitlines()
    assert lines[:4] == ["<pad>", "<start>", "<end>", "<unk>"]
    assert Vocabulary.load(tmp_path / "v.txt").tokens == v.tokens


words = st.lists(st.sampled_from(["ship", "port", "fog", "north", "ten", ",", "."]), max_size=12)


@settings(max_examples=200, deadline=None)
@given(words)
def test_roundtrip_property(ws):
    v = vocabulary_from_sentences(["ship port fog north ten , ."])
    s = " ".join(ws)
    row, n = tokenize(s, v, 16)
    assert detokenize(row, v) == normalize(s)
    assert n == len(ws) + 2


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.sampled_from("abcdefg"), max_size=20), min_size=1, max_size=20),
       st.integers(3, 12))
def test_token_batch_invariants(sentences, max_len):
    sents = [" ".join(s) for s in sentences]
    v = vocabulary_from_sentences(sents + ["a"])
    data = encode_corpus(sents, v, max_len)
    batch = data.batch()
    ids = batch.ids.numpy()
    for row, n in zip(ids, batch.lengths.tolist()):
        assert row[0] == START
        assert (row == END).sum() == 1 and row[n - 1] == END
        assert (row[n:] == PAD).all()
        assert n <= max_len
    np.testing.assert_array_equal(batch.pad_mask.numpy(), ids == PAD)


def test_batch_iterator_sizes_and_determinism():
    v = vocabulary_from_sentences(["a b c"])
    data = encode_corpus(["a", "b", "c", "a b", "b c"], v, 6)
    sizes = [len(b) for b in batch_iterator(data, 2, seed=3)]
    assert sizes == [2, 2, 1]
    first = [b.ids.tolist() for b in batch_iterator(data, 2, seed=3)]
    second = [b.ids.tolist() for b in batch_iterator(data, 2, seed=3)]
    assert first == second


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.integers(1, 16), st.integers(0, 10_000), st.integers(0, 5))
def test_epoch_coverage(n, bs, seed, epoch):
    data = encode_corpus([f"w{i}" for i in range(n)], vocabulary_from_sentences([f"w{i}" for i in range(n)]), 4)
    seen = sorted(int(b.ids[j, 1]) for b in batch_iterator(data, bs, seed, epoch) for j in range(len(b)))
    assert seen == sorted(data.ids[:, 1].tolist())


def test_batch_size_validation():
    v = vocabulary_from_sentences(["a"])
    with pytest.raises(ConfigurationError):
        next(batch_iterator(encode_corpus(["a"], v, 4), 0))


def test_targets_shift_left():
    b = TokenBatch.from_ids([[START, 4, 5, END, PAD]])
    assert b.targets.tolist() == [[4, 5, END, PAD, PAD]]
    assert b.lengths.tolist() == [4]


def test_fixture_corpus():
    sents = read_corpus(fixture_corpus_path())
    assert len(sents) == 500
    assert max(len(s.split()) for s in sents) <= 28
