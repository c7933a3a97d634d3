"""Tokenisation, a small rule-based lemmatiser, and trigram cosine."""

from __future__ import annotations

import math
import re
from collections import Counter

_SENTENCE_RE = re.compile(r"[.!?]+")
_TOKEN_RE = re.compile(r"[a-z0-9]+")

# words the suffix rules would mangle, plus domain irregular plurals
_LEMMA_EXCEPTIONS = {
    "this": "this",
    "has": "has",
    "was": "was",
    "its": "its",
    "is": "is",
    "as": "as",
    "pneumothoraces": "pneumothorax",
    "atelectasis": "atelectasis",
}


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_RE.split(text) if s.strip()]


def tokenize(sentence: str) -> list[str]:
    return _TOKEN_RE.findall(sentence.lower())


def lemmatize(token: str) -> str:
    """Singularise common English plurals with a few fixed rules."""
    token = token.lower()
    if token in _LEMMA_EXCEPTIONS:
        return _LEMMA_EXCEPTIONS[token]
    if len(token) > 4 and token.endswith("ies"):
        return token[:-3] + "y"
    if len(token) > 4 and token.endswith("es") and token[-3] in "sxz":
        return token[:-2]
    if len(token) > 5 and (token.endswith("ches") or token.endswith("shes")):
        return token[:-2]
    if len(token) > 3 and token.endswith("s") and not token.endswith("ss") and not token.endswith("us"):
        return token[:-1]
    return token


def trigrams(word: str) -> Counter:
    padded = "#" + word.lower() + "#"
    return Counter(padded[i : i + 3] for i in range(len(padded) - 2))


def ngram_cosine(a: str, b: str) -> float:
    """Cosine similarity between character-trigram count vectors.

    Words are padded with one boundary marker on each side; an empty word
    has similarity 0 with everything.
    """
    ta, tb = trigrams(a), trigrams(b)
    if not ta or not tb:
        return 0.0
    dot = sum(ta[g] * tb[g] for g in ta if g in tb)
    norm_sq = sum(v * v for v in ta.values()) * sum(v * v for v in tb.values())
    return dot / math.sqrt(norm_sq)
