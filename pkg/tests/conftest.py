"""Shared fixtures: a tiny labelled corpus reused across CLI and eval tests."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the oracles module

from lesionattn.config import GenConfig, NlpConfig
from lesionattn.nlplabel.lexicon import default_lexicon, default_rules
from lesionattn.nlplabel.pipeline import label_manifest
from lesionattn.manifest import write_manifest
from lesionattn.synthgen import generate_corpus

TINY_GEN = dict(
    image_size=(64, 64),
    counts={"Normal": 40, "Lesion": 40, "Others": 20},
    lesion_radius_range=(3, 7),
)


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory) -> Path:
    """100 exams at 64x64 with weak labels filled in; returns the manifest path."""
    root = tmp_path_factory.mktemp("tiny-corpus")
    cfg = GenConfig(**TINY_GEN)
    records = generate_corpus(cfg, 7, root)
    lexicon = default_lexicon()
    labelled = label_manifest(records, lexicon, default_rules(lexicon), NlpConfig())
    write_manifest(labelled, root / "manifest.jsonl")
    return root / "manifest.jsonl"
