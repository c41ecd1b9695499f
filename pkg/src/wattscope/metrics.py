"""Text-generation metrics: token-level loss, perplexity, ROUGE-L, BLEU.

All corpus metrics are order-independent aggregations; final reductions
use math.fsum so results are bitwise reproducible.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field

TOKEN_RE = re.compile(r"[0-9a-z]+")


class EmptySplit(ValueError):
    """No tokens found for the requested split."""


class MissingGeneration(KeyError):
    """A validation record has no generation to score."""


@dataclass(frozen=True)
class TokenLogRecord:
    """Per-token log-probabilities (natural log) of one example."""

    example_id: str
    token_logprobs: tuple
    split: str = "val"

    def __post_init__(self):
        if any(lp > 0.0 for lp in self.token_logprobs):
            raise ValueError("log-probabilities must be <= 0")


@dataclass(frozen=True)
class TextPair:
    """One candidate against one or more references, pre-tokenized."""

    candidate: tuple
    references: tuple

    def __post_init__(self):
        if not self.references:
            raise ValueError("references must be non-empty")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation.

    Tokens are maximal runs of ASCII letters and digits; everything else
    is a separator and is dropped.
    """
    return TOKEN_RE.findall(text.lower())


def make_pair(candidate: str, references, tok=tokenize) -> TextPair:
    if isinstance(references, str):
        references = [references]
    return TextPair(
        candidate=tuple(tok(candidate)),
        references=tuple(tuple(tok(r)) for r in references),
    )


def mean_nll(records, split: str) -> float:
    """Negative mean of all token log-probabilities in the split."""
    logprobs = [lp for r in records if r.split == split for lp in r.token_logprobs]
    if not logprobs:
        raise EmptySplit(f"no tokens in split {split!r}")
    return -math.fsum(logprobs) / len(logprobs)


def perplexity(records, split: str) -> float:
    """exp of the mean negative log-likelihood."""
    return math.exp(mean_nll(records, split))


def lcs_length(a, b) -> int:
    """Longest common subsequence length via the standard DP table."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(pairs) -> float:
    """Corpus-level LCS recall: sum of LCS lengths over sum of reference lengths.

    With multiple references per pair the best (max-LCS) reference counts,
    and its length enters the denominator.
    """
    lcs_sum = 0
    ref_sum = 0
    for p in pairs:
        best_lcs = -1
        best_len = 0
        for ref in p.references:
            l = lcs_length(ref, p.candidate)
            if l > best_lcs:
                best_lcs, best_len = l, len(ref)
        lcs_sum += best_lcs
        ref_sum += best_len
    if ref_sum == 0:
        return 0.0
    return lcs_sum / ref_sum


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(pairs, max_n: int = 4, smooth: bool = False) -> float:
    """Corpus BLEU: clipped n-gram precision with brevity penalty.

    Geometric mean of modified precisions p_1..p_max_n with uniform
    weights. By default any p_n = 0 makes the score 0 (log 0 is
    undefined); ``smooth`` switches to add-one smoothing of the
    numerator/denominator for n >= 2.
    """
    match = [0] * max_n
    total = [0] * max_n
    cand_len = 0
    ref_len = 0
    for p in pairs:
        c = len(p.candidate)
        cand_len += c
        # closest reference length; ties broken toward the shorter one
        ref_len += min((abs(len(r) - c), len(r)) for r in p.references)[1]
        for n in range(1, max_n + 1):
            cand_counts = _ngrams(p.candidate, n)
            if not cand_counts:
                continue
            clip = Counter()
            for ref in p.references:
                ref_counts = _ngrams(ref, n)
                for g in cand_counts:
                    clip[g] = max(clip[g], ref_counts.get(g, 0))
            match[n - 1] += sum(min(cand_counts[g], clip[g]) for g in cand_counts)
            total[n - 1] += sum(cand_counts.values())
    if cand_len == 0:
        return 0.0
    precisions = []
    for n in range(1, max_n + 1):
        num, den = match[n - 1], total[n - 1]
        if smooth and n > 1:
            num, den = num + 1, den + 1
        if den == 0 or num == 0:
            return 0.0
        precisions.append(num / den)
    log_mean = math.fsum(math.log(p) for p in precisions) / max_n
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return min(1.0, bp) * math.exp(log_mean)


@dataclass
class GenerationRecord:
    """One model output read back from a generations file."""

    example_id: str
    text: str
    token_logprobs: list = field(default_factory=list)


def load_generations(path) -> dict:
    """Parse a generations JSONL file into a dict keyed by example id."""
    out = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out[obj["id"]] = GenerationRecord(
                example_id=obj["id"],
                text=obj.get("text", ""),
                token_logprobs=obj.get("token_logprobs") or [],
            )
    return out


REPORT_SCHEMA_VERSION = 1


def evaluate_manifest(manifest, generations: dict, tok=tokenize) -> dict:
    """Score generations against the manifest's validation references.

    Returns a report dict with ROUGE-L and BLEU per analysis type and
    overall, plus perplexity wherever token log-probabilities were
    supplied. Raises MissingGeneration if a val record has no generation.
    """
    val = sorted((r for r in manifest.records if r.split == "val"), key=lambda r: r.id)
    if not val:
        raise EmptySplit("manifest has no val records")
    for rec in val:
        if rec.id not in generations:
            raise MissingGeneration(rec.id)

    def scores(records):
        pairs = [make_pair(generations[r.id].text, r.answer, tok) for r in records]
        block = {
            "count": len(records),
            "rouge_l": rouge_l(pairs),
            "bleu": bleu(pairs),
        }
        token_records = [
            TokenLogRecord(r.id, tuple(generations[r.id].token_logprobs), "val")
            for r in records
            if generations[r.id].token_logprobs
        ]
        if token_records:
            block["ppl"] = perplexity(token_records, "val")
            block["mean_nll"] = mean_nll(token_records, "val")
        return block

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "overall": scores(val),
        "per_task": {},
    }
    for task in sorted({r.analysis_type.value for r in val}):
        report["per_task"][task] = scores(
            [r for r in val if r.analysis_type.value == task]
        )
    return report
