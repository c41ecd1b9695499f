"""Word-level tokenizer built from the manifest text itself.

The vocabulary is the sorted set of lowercase word tokens appearing in the
prompts and answers, behind four reserved ids. Token boundaries use the
same pattern the evaluation metrics use, so decoded generations score
cleanly without a second normalization pass.
"""

from __future__ import annotations

import re

_TOKEN = re.compile(r"[0-9a-z]+")

PAD, BOS, SEP, EOS = 0, 1, 2, 3
_SPECIALS = ("<pad>", "<bos>", "<sep>", "<eos>")


def words(text: str) -> list:
    return _TOKEN.findall(text.lower())


class WordTokenizer:
    def __init__(self, vocab: list):
        if list(vocab[: len(_SPECIALS)]) != list(_SPECIALS):
            raise ValueError("vocabulary must start with the reserved tokens")
        if len(set(vocab)) != len(vocab):
            raise ValueError("vocabulary has duplicate entries")
        self.vocab = list(vocab)
        self._ids = {tok: i for i, tok in enumerate(self.vocab)}
        self.unk = len(self.vocab)  # virtual id: last row of the embedding

    @property
    def size(self) -> int:
        return len(self.vocab) + 1

    @classmethod
    def from_texts(cls, texts) -> "WordTokenizer":
        seen = set()
        for text in texts:
            seen.update(words(text))
        return cls(list(_SPECIALS) + sorted(seen))

    def encode(self, text: str) -> list:
        return [self._ids.get(w, self.unk) for w in words(text)]

    def decode(self, ids) -> str:
        out = []
        for i in ids:
            if i < len(_SPECIALS) or i >= len(self.vocab):
                continue
            out.append(self.vocab[i])
        return " ".join(out)
