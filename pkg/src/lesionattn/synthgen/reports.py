"""Synthetic report text.

Templates are built so the rule-based labeller recovers the truth label
exactly when no typos are injected: Lesion reports affirm exactly one
lesion synonym, Others reports affirm exactly one non-lesion finding and
negate lesions, Normal reports contain only negated findings or neutral
phrasing.  Typos are drawn from a fixed table of misspellings that stay
within fuzzy-match range of their correct forms; "edema" is sometimes
written in its British variant to exercise the redirect table.
"""

from __future__ import annotations

import re

import numpy as np

from ..config import GenConfig
from ..rng import substream

LOCATIONS = (
    "right upper lobe",
    "right lower lobe",
    "left upper lobe",
    "left lower lobe",
    "right lung",
    "left lung",
)

SIZES = ("small", "large", "moderate", "rounded")

LESION_SYNS = ("nodule", "mass", "focal lesion")
_PLURALS = {"nodule": "nodules", "mass": "masses", "focal lesion": "focal lesions"}

# fillers safe for any report: they affirm nothing and never negate a lesion term
_NEUTRAL_FILLERS = (
    "The lungs are otherwise clear.",
    "Heart size is within normal limits.",
    "The mediastinal contours are unremarkable.",
    "No evidence of pneumothorax.",
    "There is no pleural effusion.",
)

# additional Normal-only sentences, including ones that negate lesion terms
_NORMAL_EXTRAS = (
    "No nodule or mass is identified.",
    "No consolidation is seen.",
    "The lungs are clear.",
)

_NEGATABLE = ("pleural effusion", "consolidation", "pneumothorax", "pulmonary edema")

# finding concept -> sentences that affirm it; every phrase below appears in
# the default lexicon so label recovery is exact without typos
_OTHERS_TEMPLATES = {
    "pleural_effusion": (
        "There is a {size} pleural effusion.",
        "A {size} pleural effusion is present.",
    ),
    "consolidation": (
        "Patchy consolidation is seen in the {loc}.",
        "There is consolidation in the {loc}.",
    ),
    "cardiomegaly": (
        "Cardiomegaly is present.",
        "There is an enlarged heart.",
        "Enlarged heart is noted.",
    ),
    "pneumothorax": (
        "A small pneumothorax is present.",
        "There is a pneumothorax on the right.",
    ),
    "edema": (
        "There is pulmonary edema.",
        "Pulmonary edema is present.",
    ),
    "pacemaker": ("A pacemaker is in situ.",),
    "nasogastric_tube": ("A nasogastric tube is in place.",),
    "central_line": ("A central line is present.",),
}

# each typo keeps character-trigram cosine >= 0.85 against the true form
TYPO_TABLE = {
    "cardiomegaly": "cardiomegally",
    "consolidation": "consollidation",
}

_BRITISH_RATE = 0.25  # chance of writing edema as oedema


def _pick(rng: np.random.Generator, pool) -> str:
    return pool[int(rng.integers(len(pool)))]


def _cap(sentence: str) -> str:
    return sentence[0].upper() + sentence[1:]


def _lesion_sentence(rng: np.random.Generator, n_lesions: int) -> str:
    syn = _pick(rng, LESION_SYNS)
    loc = _pick(rng, LOCATIONS)
    if n_lesions > 1:
        return _cap(f"Multiple {_PLURALS[syn]} are seen in the {loc}.")
    size = _pick(rng, SIZES)
    template = _pick(
        rng,
        (
            f"There is a {size} {syn} in the {loc}.",
            f"A {size} {syn} is seen in the {loc}.",
            f"{syn} noted in the {loc}.",
        ),
    )
    return _cap(template)


def _others_sentence(rng: np.random.Generator) -> tuple[str, str]:
    concept = _pick(rng, tuple(_OTHERS_TEMPLATES))
    template = _pick(rng, _OTHERS_TEMPLATES[concept])
    sentence = template.format(size=_pick(rng, ("small", "moderate", "large")), loc=_pick(rng, LOCATIONS))
    return concept, _cap(sentence)


def _extra_negation(rng: np.random.Generator, exclude: str | None) -> str:
    pool = [f for f in _NEGATABLE if exclude is None or exclude not in f.replace(" ", "_")]
    return f"No evidence of {_pick(rng, tuple(pool))}."


def _swap_word(text: str, word: str, replacement: str) -> str:
    def repl(match: re.Match) -> str:
        found = match.group(0)
        return replacement[0].upper() + replacement[1:] if found[0].isupper() else replacement

    return re.sub(rf"\b{word}\b", repl, text, flags=re.IGNORECASE)


def inject_typo(text: str, rng: np.random.Generator, rate: float) -> str:
    if rate <= 0 or rng.random() >= rate:
        return text
    candidates = [w for w in TYPO_TABLE if re.search(rf"\b{w}\b", text, re.IGNORECASE)]
    if not candidates:
        return text
    word = candidates[int(rng.integers(len(candidates)))]
    return _swap_word(text, word, TYPO_TABLE[word])


def render_report(
    cfg: GenConfig, root_seed: int, exam_index: int, truth_label: str, n_lesions: int = 1
) -> str:
    """Generate one report deterministically from (root_seed, exam_index)."""
    rng = substream(root_seed, "report", exam_index)
    sentences: list[str] = []
    affirmed: str | None = None
    if truth_label == "Lesion":
        sentences.append(_lesion_sentence(rng, n_lesions))
        if rng.random() < 0.5:
            sentences.append(_pick(rng, _NEUTRAL_FILLERS))
    elif truth_label == "Others":
        affirmed, sentence = _others_sentence(rng)
        sentences.append(sentence)
        sentences.append("No focal lesion is seen.")
        if rng.random() < 0.4:
            safe = tuple(
                f for f in _NEUTRAL_FILLERS if affirmed not in f.lower().replace(" ", "_")
            )
            sentences.append(_pick(rng, safe))
    else:
        sentences.append("No focal lesion is seen.")
        sentences.append(_pick(rng, _NORMAL_EXTRAS))
        if rng.random() < 0.6:
            sentences.append(_pick(rng, _NEUTRAL_FILLERS))
    if rng.random() < cfg.extra_negation_rate:
        extra = _extra_negation(rng, affirmed)
        if extra not in sentences:
            sentences.append(extra)
    text = " ".join(sentences)
    if rng.random() < _BRITISH_RATE:
        text = _swap_word(text, "edema", "oedema")
    return inject_typo(text, rng, cfg.typo_rate)
