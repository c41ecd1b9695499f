"""Shared fixtures: a real corpus built once through the dataset CLI.

The harness never imports the dataset package in production code; tests
do, because the contract under test is "files written by that tool are
consumable here and files written here are consumable there".
"""

import json
from pathlib import Path

import pytest
from wattscope import cli as wcli

from wattscope_harness import HarnessConfig, finetune

FAST_CONVERT = [
    "--sample-period",
    "240",
    "--window-length",
    "21600",
    "--width",
    "64",
    "--height",
    "48",
]


@pytest.fixture(scope="session")
def run_dir(tmp_path_factory) -> Path:
    """One day of synthetic data, converted to images, with a manifest."""
    root = tmp_path_factory.mktemp("corpus")
    corpus = root / "corpus"
    run = root / "run"
    rc = wcli.main(
        ["synth", str(corpus), "--days", "1", "--sample-period", "240", "--window-length", "21600"]
    )
    assert rc == 0
    rc = wcli.main(["convert", str(corpus / "fridge_kw.csv"), str(run)] + FAST_CONVERT)
    assert rc == 0
    rc = wcli.main(["build-dataset", str(run), str(corpus / "answers.jsonl")])
    assert rc == 0
    return run


@pytest.fixture(scope="session")
def manifest_path(run_dir) -> Path:
    return run_dir / "manifest.jsonl"


@pytest.fixture(scope="session")
def single_record_manifest(manifest_path, tmp_path_factory) -> Path:
    """Manifest cut down to one train and one val record."""
    lines = manifest_path.read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    records = [json.loads(ln) for ln in lines[1:]]
    train = next(r for r in records if r["split"] == "train")
    val = next(r for r in records if r["split"] == "val")
    for rec in (train, val):
        rec["image"] = str(manifest_path.parent / rec["image"])
    header["counts"] = {"train": 1, "val": 1}
    out = tmp_path_factory.mktemp("single") / "manifest.jsonl"
    rows = [header, train, val]
    out.write_text(
        "\n".join(json.dumps(r, separators=(",", ":")) for r in rows) + "\n", encoding="utf-8"
    )
    return out


@pytest.fixture(scope="session")
def trained_run(manifest_path, tmp_path_factory):
    """A short but real finetune whose checkpoint generation tests reuse."""
    out = tmp_path_factory.mktemp("trained")
    cfg = HarnessConfig(
        manifest=str(manifest_path),
        out_dir=str(out),
        steps=3,
        micro_batch=2,
        accumulation=2,
        log_every=1,
        seed=7,
        max_new_tokens=10,
    )
    return cfg, finetune(cfg)
