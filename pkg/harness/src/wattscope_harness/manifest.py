"""Read-only view of a dataset manifest.

The manifest is a JSONL file: a header line tagged ``manifest_header``
followed by one record per line. This module never writes manifests; the
dataset builder owns that format, and the harness only consumes it. Image
paths inside records are relative to the manifest's own directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

MANIFEST_SCHEMA_VERSION = 1

_RECORD_KEYS = ("id", "image", "analysis_type", "question", "answer", "split")
_SPLITS = ("train", "val")


class ManifestSchemaMismatch(ValueError):
    """Manifest file does not match the schema this harness was built for."""


@dataclass(frozen=True)
class Example:
    """One manifest record with its image path resolved to the filesystem."""

    example_id: str
    image_path: Path
    analysis_type: str
    question: str
    answer: str
    split: str

    def prompt(self) -> str:
        """Instruction text the model is conditioned on, task token included."""
        return f"<{self.analysis_type}> Query: {self.question}"


@dataclass(frozen=True)
class ManifestView:
    path: Path
    split_seed: int
    examples: tuple

    def split(self, name: str) -> list:
        if name not in _SPLITS:
            raise ValueError(f"unknown split {name!r}")
        return [ex for ex in self.examples if ex.split == name]


def _header(line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ManifestSchemaMismatch(f"header is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("kind") != "manifest_header":
        raise ManifestSchemaMismatch("first line is not a manifest header")
    version = obj.get("schema_version")
    if version != MANIFEST_SCHEMA_VERSION:
        raise ManifestSchemaMismatch(
            f"manifest schema_version {version!r}, expected {MANIFEST_SCHEMA_VERSION}"
        )
    return obj


def _record(obj: dict, line_no: int, base: Path) -> Example:
    missing = [k for k in _RECORD_KEYS if k not in obj]
    if missing:
        raise ManifestSchemaMismatch(f"record on line {line_no} missing {missing}")
    if obj["split"] not in _SPLITS:
        raise ManifestSchemaMismatch(
            f"record on line {line_no} has unknown split {obj['split']!r}"
        )
    for key in ("id", "image", "analysis_type", "question", "answer"):
        if not isinstance(obj[key], str) or not obj[key]:
            raise ManifestSchemaMismatch(f"record on line {line_no}: {key} must be a non-empty string")
    return Example(
        example_id=obj["id"],
        image_path=base / obj["image"],
        analysis_type=obj["analysis_type"],
        question=obj["question"],
        answer=obj["answer"],
        split=obj["split"],
    )


def read_manifest(path) -> ManifestView:
    """Parse and validate a manifest JSONL file.

    Raises ManifestSchemaMismatch on any structural problem: wrong header,
    wrong schema version, missing record fields, or an unknown split tag.
    """
    path = Path(path)
    base = path.parent
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln for ln in (raw.strip() for raw in f) if ln]
    if not lines:
        raise ManifestSchemaMismatch("manifest is empty")
    header = _header(lines[0])
    examples = []
    for i, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestSchemaMismatch(f"line {i} is not valid JSON: {exc}") from exc
        examples.append(_record(obj, i, base))
    if not examples:
        raise ManifestSchemaMismatch("manifest has a header but no records")
    return ManifestView(
        path=path,
        split_seed=int(header.get("split_seed", 0)),
        examples=tuple(examples),
    )
