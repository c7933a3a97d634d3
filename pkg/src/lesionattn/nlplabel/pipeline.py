"""Report labelling pipeline.

Four stages per report: entity matching against the lexicon (exact longest
match, then redirects, then fuzzy single-token match), negation detection
with a forward trigger window and or-chain propagation, finding/location
relation extraction, and rule classification with label priority
Lesion > Others > Normal.  Reports no rule claims stay ``Unlabeled``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from ..config import NlpConfig
from ..manifest import ExamRecord
from .lexicon import LABEL_PRIORITY, Lexicon, Rule, SemanticClass, validate_rules
from .text import lemmatize, ngram_cosine, split_sentences, tokenize

# trigger phrases scanned longest-first; negation applies forward only
NEGATION_TRIGGERS = (
    "no evidence of",
    "no evidence for",
    "negative for",
    "absence of",
    "clear of",
    "free of",
    "resolution of",
    "without",
    "absent",
    "not",
    "no",
)

_CHAIN_TOKENS = {"or", "nor"}


@dataclass
class Entity:
    concept_id: str
    semantic_class: SemanticClass
    start: int  # token index, inclusive
    end: int  # token index, exclusive
    text: str
    negated: bool = False


@dataclass
class SentenceAnalysis:
    tokens: list[str]
    entities: list[Entity]
    relations: list[tuple[str, str, str]] = field(default_factory=list)


@dataclass
class ReportAnalysis:
    sentences: list[SentenceAnalysis]

    def affirmed(self) -> set[str]:
        return {
            e.concept_id for s in self.sentences for e in s.entities if not e.negated
        }

    def negated(self) -> set[str]:
        return {e.concept_id for s in self.sentences for e in s.entities if e.negated}


def match_entities(tokens: list[str], lexicon: Lexicon, fuzzy_threshold: float) -> list[Entity]:
    """Greedy longest-match scan over lemmatized tokens."""
    lemmas = [lemmatize(t) for t in tokens]
    entities: list[Entity] = []
    i = 0
    n = len(lemmas)
    while i < n:
        matched = False
        for length in range(min(lexicon.max_phrase_len, n - i), 0, -1):
            cid = lexicon.lookup(tuple(lemmas[i : i + length]))
            if cid is not None:
                entities.append(
                    Entity(
                        concept_id=cid,
                        semantic_class=lexicon.semantic_class(cid),
                        start=i,
                        end=i + length,
                        text=" ".join(tokens[i : i + length]),
                    )
                )
                i += length
                matched = True
                break
        if matched:
            continue
        if len(lemmas[i]) >= 5:
            best_cid, best_sim = None, 0.0
            for word, cid in lexicon.fuzzy_pool():
                sim = ngram_cosine(lemmas[i], word)
                if sim > best_sim or (sim == best_sim and best_cid is not None and cid < best_cid):
                    best_cid, best_sim = cid, sim
            if best_cid is not None and best_sim >= fuzzy_threshold:
                entities.append(
                    Entity(
                        concept_id=best_cid,
                        semantic_class=lexicon.semantic_class(best_cid),
                        start=i,
                        end=i + 1,
                        text=tokens[i],
                    )
                )
                i += 1
                continue
        i += 1
    return entities


def _find_triggers(tokens: list[str]) -> list[tuple[int, int]]:
    trigger_phrases = sorted((tuple(t.split()) for t in NEGATION_TRIGGERS), key=len, reverse=True)
    spans: list[tuple[int, int]] = []
    taken = [False] * len(tokens)
    i = 0
    while i < len(tokens):
        for phrase in trigger_phrases:
            j = i + len(phrase)
            if j <= len(tokens) and tuple(tokens[i:j]) == phrase and not any(taken[i:j]):
                spans.append((i, j))
                for k in range(i, j):
                    taken[k] = True
                i = j - 1
                break
        i += 1
    return spans


def apply_negation(tokens: list[str], entities: list[Entity], window: int) -> None:
    """Mark negated entities in place.

    Each trigger negates only the closest entity starting within ``window``
    tokens after it; negation then propagates along chains of entities
    separated purely by or/nor tokens.
    """
    entities.sort(key=lambda e: e.start)
    lowered = [t.lower() for t in tokens]
    for t_start, t_end in _find_triggers(lowered):
        candidates = [e for e in entities if t_end <= e.start < t_end + window]
        if candidates:
            min(candidates, key=lambda e: e.start).negated = True
    changed = True
    while changed:
        changed = False
        for a, b in zip(entities, entities[1:]):
            gap = lowered[a.end : b.start]
            if a.negated and not b.negated and gap and all(t in _CHAIN_TOKENS for t in gap):
                b.negated = True
                changed = True


def extract_relations(entities: list[Entity]) -> list[tuple[str, str, str]]:
    """Attach each finding to the nearest body location in its sentence."""
    locations = [e for e in entities if e.semantic_class == SemanticClass.LOCATION]
    relations = []
    for e in entities:
        if e.semantic_class != SemanticClass.FINDING or not locations:
            continue
        nearest = min(locations, key=lambda l: (abs(l.start - e.start), l.start))
        relations.append((e.concept_id, "located_in", nearest.concept_id))
    return relations


def analyze_report(text: str, lexicon: Lexicon, cfg: NlpConfig | None = None) -> ReportAnalysis:
    cfg = cfg or NlpConfig()
    sentences = []
    for sentence in split_sentences(text):
        tokens = tokenize(sentence)
        entities = match_entities(tokens, lexicon, cfg.fuzzy_threshold)
        apply_negation(tokens, entities, cfg.negation_window)
        sentences.append(
            SentenceAnalysis(tokens=tokens, entities=entities, relations=extract_relations(entities))
        )
    return ReportAnalysis(sentences=sentences)


def classify(analysis: ReportAnalysis, rules: list[Rule]) -> str:
    affirmed, negated = analysis.affirmed(), analysis.negated()
    ordered = sorted(enumerate(rules), key=lambda ir: (LABEL_PRIORITY[ir[1].label], ir[0]))
    for _, rule in ordered:
        if rule.matches(affirmed, negated):
            return rule.label
    return "Unlabeled"


def label_report(text: str, lexicon: Lexicon, rules: list[Rule], cfg: NlpConfig | None = None) -> str:
    return classify(analyze_report(text, lexicon, cfg), rules)


def label_manifest(
    records: list[ExamRecord],
    lexicon: Lexicon,
    rules: list[Rule],
    cfg: NlpConfig | None = None,
) -> list[ExamRecord]:
    """Fill ``weak_label`` for every record from its report text."""
    validate_rules(rules, lexicon)
    return [
        dataclasses.replace(r, weak_label=label_report(r.report_text, lexicon, rules, cfg))
        for r in records
    ]
