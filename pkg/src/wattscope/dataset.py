"""Instruction-tuning dataset assembly.

Records pair a rendered image with a task token, a question, and a
reference answer, then get a deterministic stratified train/val split.
The manifest is JSONL: a header line carrying schema version, seed and
split counts, followed by one record per line in stable field order.
"""

from __future__ import annotations

import datetime
import enum
import json
import random
from dataclasses import dataclass
from pathlib import Path

SCHEMA_VERSION = 1
TRAIN_FRACTION_DEFAULT = 0.75
_PROMPT_SEP = "> Query: "


class TooFewRecords(ValueError):
    pass


class MissingImage(FileNotFoundError):
    pass


class MissingAnswer(KeyError):
    """Record ids with no entry in the answers file."""

    def __init__(self, ids):
        ids = list(ids)
        super().__init__(f"no answer for {len(ids)} record id(s): {', '.join(ids)}")
        self.ids = ids


class PromptFormatError(ValueError):
    pass


class AnalysisType(enum.Enum):
    MONITORING = "Monitoring"
    ANOMALY_DETECTION = "AnomalyDetection"
    RECOMMENDATION = "Recommendation"


@dataclass(frozen=True)
class WindowMeta:
    channel: str
    window_start: str
    kind: str  # cwt | rp

    def __post_init__(self):
        if self.kind not in ("cwt", "rp"):
            raise ValueError(f"unknown encoding kind {self.kind!r}")


@dataclass
class DatasetRecord:
    id: str
    image_path: str
    analysis_type: AnalysisType
    question: str
    answer: str
    split: str
    window_meta: WindowMeta


@dataclass
class Manifest:
    records: list
    split_seed: int
    counts: dict


def record_id(meta: WindowMeta, analysis_type: AnalysisType) -> str:
    return f"{meta.channel}_{meta.window_start}_{meta.kind}_{analysis_type.value}"


def window_start_token(epoch_seconds: float) -> str:
    """Compact UTC stamp used in record ids and image file names."""
    dt = datetime.datetime.fromtimestamp(epoch_seconds, tz=datetime.timezone.utc)
    return dt.strftime("%Y%m%dT%H%M%SZ")


def date_of(epoch_seconds: float) -> str:
    dt = datetime.datetime.fromtimestamp(epoch_seconds, tz=datetime.timezone.utc)
    return dt.strftime("%Y-%m-%d")


def build_prompt(rec: DatasetRecord) -> str:
    """Model input text: task token, then the literal query marker, then
    the question."""
    return f"<{rec.analysis_type.value}{_PROMPT_SEP}{rec.question}"


def parse_prompt(prompt: str) -> tuple:
    """Inverse of build_prompt."""
    if not prompt.startswith("<"):
        raise PromptFormatError("prompt must start with a task token")
    head, sep, question = prompt.partition(_PROMPT_SEP)
    if not sep:
        raise PromptFormatError("missing query marker")
    try:
        task = AnalysisType(head[1:])
    except ValueError:
        raise PromptFormatError(f"unknown task token {head[1:]!r}") from None
    return task, question


def default_question(analysis_type: AnalysisType, start_date: str, end_date: str) -> str:
    if analysis_type is AnalysisType.ANOMALY_DETECTION:
        return f"Identify anomalies between {start_date} and {end_date}"
    if analysis_type is AnalysisType.MONITORING:
        return f"Describe the consumption pattern between {start_date} and {end_date}"
    return f"Recommend actions to reduce energy use between {start_date} and {end_date}"


def _val_quota(records, val_total: int) -> dict:
    """Largest-remainder allocation of the validation quota across task
    classes, ties broken by class name."""
    by_class = {}
    for r in records:
        by_class.setdefault(r.analysis_type.value, []).append(r)
    n = len(records)
    quota = {}
    remainders = []
    assigned = 0
    for name in sorted(by_class):
        ideal = val_total * len(by_class[name]) / n
        take = min(int(ideal), len(by_class[name]))
        quota[name] = take
        assigned += take
        remainders.append((-(ideal - take), name))
    remainders.sort()
    i = 0
    while assigned < val_total and i < len(remainders):
        name = remainders[i][1]
        if quota[name] < len(by_class[name]):
            quota[name] += 1
            assigned += 1
        i += 1
    # classes may saturate; sweep again over any remaining headroom
    while assigned < val_total:
        for name in sorted(by_class):
            if assigned == val_total:
                break
            if quota[name] < len(by_class[name]):
                quota[name] += 1
                assigned += 1
    return quota


def split_dataset(records, seed: int, train_fraction: float = TRAIN_FRACTION_DEFAULT) -> Manifest:
    """Assign splits: global val count is floor((1-fraction)*n), spread
    over task classes by largest remainder, shuffled per class by seed.
    Record order in, manifest order out is by id either way."""
    if len(records) < 4:
        raise TooFewRecords(f"need at least 4 records, got {len(records)}")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    records = sorted(records, key=lambda r: r.id)
    val_total = int((1.0 - train_fraction) * len(records))
    quota = _val_quota(records, val_total)
    rng = random.Random(seed)
    by_class = {}
    for r in records:
        by_class.setdefault(r.analysis_type.value, []).append(r)
    for name in sorted(by_class):
        group = by_class[name]
        rng.shuffle(group)
        for k, rec in enumerate(group):
            rec.split = "val" if k < quota[name] else "train"
    records.sort(key=lambda r: r.id)
    counts = {
        "train": sum(1 for r in records if r.split == "train"),
        "val": sum(1 for r in records if r.split == "val"),
    }
    return Manifest(records=records, split_seed=seed, counts=counts)


def _record_json(rec: DatasetRecord) -> str:
    return json.dumps(
        {
            "id": rec.id,
            "image": rec.image_path,
            "analysis_type": rec.analysis_type.value,
            "question": rec.question,
            "answer": rec.answer,
            "split": rec.split,
            "meta": {
                "channel": rec.window_meta.channel,
                "window_start": rec.window_meta.window_start,
                "kind": rec.window_meta.kind,
            },
        },
        ensure_ascii=False,
        separators=(",", ":"),
    )


def emit_manifest(m: Manifest, path, check_images: bool = True) -> None:
    path = Path(path)
    if check_images:
        for rec in m.records:
            target = path.parent / rec.image_path
            if not target.is_file():
                raise MissingImage(str(target))
    header = json.dumps(
        {
            "kind": "manifest_header",
            "schema_version": SCHEMA_VERSION,
            "split_seed": m.split_seed,
            "counts": m.counts,
        },
        ensure_ascii=False,
        separators=(",", ":"),
    )
    lines = [header] + [_record_json(r) for r in m.records]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_manifest(path) -> Manifest:
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        header = json.loads(f.readline())
        if header.get("kind") != "manifest_header":
            raise ValueError("manifest missing header line")
        if header.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {header.get('schema_version')}")
        records = []
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            records.append(
                DatasetRecord(
                    id=obj["id"],
                    image_path=obj["image"],
                    analysis_type=AnalysisType(obj["analysis_type"]),
                    question=obj["question"],
                    answer=obj["answer"],
                    split=obj["split"],
                    window_meta=WindowMeta(**obj["meta"]),
                )
            )
    return Manifest(records=records, split_seed=header["split_seed"], counts=header["counts"])


def load_answers(path) -> dict:
    """Answers file: JSONL of {id, answer}."""
    answers = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            answers[obj["id"]] = obj["answer"]
    return answers


def build_records(images, answers: dict, analysis_types=None, caps: dict | None = None):
    """Pair rendered images with questions and reference answers.

    images: iterable of (image_path, WindowMeta, start_date, end_date).
    Returns unsplit records; raises MissingAnswer listing every id that
    has no reference text. Per-class caps keep the first `cap` records
    in id order.
    """
    if analysis_types is None:
        analysis_types = list(AnalysisType)
    records = []
    missing = []
    for image_path, meta, start_date, end_date in images:
        for task in analysis_types:
            rid = record_id(meta, task)
            if rid not in answers:
                missing.append(rid)
                continue
            records.append(
                DatasetRecord(
                    id=rid,
                    image_path=str(image_path),
                    analysis_type=task,
                    question=default_question(task, start_date, end_date),
                    answer=answers[rid],
                    split="train",
                    window_meta=meta,
                )
            )
    if missing:
        raise MissingAnswer(sorted(missing))
    records.sort(key=lambda r: r.id)
    if caps:
        kept = []
        seen = {}
        for rec in records:
            name = rec.analysis_type.value
            seen[name] = seen.get(name, 0) + 1
            if name in caps and seen[name] > caps[name]:
                continue
            kept.append(rec)
        records = kept
    return records
