import pytest

from wattscope_harness.tokenizer import BOS, EOS, PAD, SEP, WordTokenizer, words


class TestWords:
    def test_lowercase_alnum_runs(self):
        assert words("Mean power 0.123 kW!") == ["mean", "power", "0", "123", "kw"]

    def test_empty(self):
        assert words("...") == []


class TestWordTokenizer:
    def test_reserved_ids(self):
        assert (PAD, BOS, SEP, EOS) == (0, 1, 2, 3)
        tok = WordTokenizer.from_texts(["b a"])
        assert tok.vocab[:4] == ["<pad>", "<bos>", "<sep>", "<eos>"]

    def test_vocab_sorted_and_deduped(self):
        tok = WordTokenizer.from_texts(["gamma alpha", "beta alpha"])
        assert tok.vocab[4:] == ["alpha", "beta", "gamma"]
        assert tok.size == 8  # 4 reserved + 3 words + unk row

    def test_round_trip(self):
        tok = WordTokenizer.from_texts(["the spike lasted 6 minutes"])
        text = "spike lasted 6 minutes"
        assert tok.decode(tok.encode(text)) == text

    def test_unknown_word_maps_to_unk(self):
        tok = WordTokenizer.from_texts(["alpha"])
        ids = tok.encode("alpha zebra")
        assert ids[0] != tok.unk
        assert ids[1] == tok.unk
        assert tok.unk == len(tok.vocab)

    def test_decode_skips_reserved_and_unk(self):
        tok = WordTokenizer.from_texts(["alpha"])
        alpha = tok.encode("alpha")[0]
        assert tok.decode([BOS, alpha, tok.unk, EOS, PAD]) == "alpha"

    def test_duplicate_vocab_rejected(self):
        with pytest.raises(ValueError):
            WordTokenizer(["<pad>", "<bos>", "<sep>", "<eos>", "a", "a"])

    def test_vocab_must_start_with_reserved(self):
        with pytest.raises(ValueError):
            WordTokenizer(["a", "b", "c", "d"])

    def test_deterministic_across_input_order(self):
        a = WordTokenizer.from_texts(["x y", "z"])
        b = WordTokenizer.from_texts(["z", "y x"])
        assert a.vocab == b.vocab
