"""Lexicon of clinical concepts and the label rule set."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import yaml

from ..errors import LexiconError
from .text import lemmatize, tokenize


class SemanticClass(str, Enum):
    FINDING = "ClinicalFinding"
    LOCATION = "BodyLocation"
    DESCRIPTOR = "Descriptor"
    DEVICE = "MedicalDevice"


@dataclass(frozen=True)
class Concept:
    concept_id: str
    semantic_class: SemanticClass
    synonyms: tuple[str, ...]  # first entry is the canonical name


Phrase = tuple[str, ...]  # lemmatized token tuple


def _phrase(text: str) -> Phrase:
    return tuple(lemmatize(t) for t in tokenize(text))


@dataclass
class Lexicon:
    concepts: dict[str, Concept]
    redirects: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._phrase_index: dict[Phrase, str] = {}
        for cid, concept in sorted(self.concepts.items()):
            if concept.concept_id != cid:
                raise LexiconError(f"concept key {cid!r} does not match its id {concept.concept_id!r}")
            if not concept.synonyms:
                raise LexiconError(f"concept {cid!r} has no synonyms")
            for synonym in concept.synonyms:
                phrase = _phrase(synonym)
                if not phrase:
                    raise LexiconError(f"concept {cid!r} has an empty synonym {synonym!r}")
                owner = self._phrase_index.get(phrase)
                if owner is not None and owner != cid:
                    raise LexiconError(f"phrase {synonym!r} is claimed by both {owner!r} and {cid!r}")
                self._phrase_index[phrase] = cid
        self._redirect_index: dict[Phrase, Phrase] = {}
        for alias, target in sorted(self.redirects.items()):
            alias_phrase, target_phrase = _phrase(alias), _phrase(target)
            if target_phrase not in self._phrase_index:
                raise LexiconError(f"redirect target {target!r} is not a known synonym")
            if alias_phrase in self._phrase_index:
                raise LexiconError(f"redirect alias {alias!r} collides with an existing synonym")
            self._redirect_index[alias_phrase] = target_phrase
        self.max_phrase_len = max(len(p) for p in list(self._phrase_index) + list(self._redirect_index))
        # single-word synonym lemmas, for fuzzy matching
        self._fuzzy_pool: list[tuple[str, str]] = sorted(
            (phrase[0], cid) for phrase, cid in self._phrase_index.items() if len(phrase) == 1
        )

    def lookup(self, phrase: Phrase) -> str | None:
        cid = self._phrase_index.get(phrase)
        if cid is not None:
            return cid
        target = self._redirect_index.get(phrase)
        if target is not None:
            return self._phrase_index[target]
        return None

    def fuzzy_pool(self) -> list[tuple[str, str]]:
        return self._fuzzy_pool

    def semantic_class(self, concept_id: str) -> SemanticClass:
        return self.concepts[concept_id].semantic_class

    def ids_of_class(self, *classes: SemanticClass) -> tuple[str, ...]:
        return tuple(cid for cid in sorted(self.concepts) if self.concepts[cid].semantic_class in classes)


@dataclass(frozen=True)
class Rule:
    name: str
    label: str  # Normal | Lesion | Others
    required_affirmed: tuple[str, ...] = ()
    required_negated: tuple[str, ...] = ()
    forbidden_affirmed: tuple[str, ...] = ()

    def matches(self, affirmed: set[str], negated: set[str]) -> bool:
        return (
            set(self.required_affirmed) <= affirmed
            and set(self.required_negated) <= negated
            and not set(self.forbidden_affirmed) & affirmed
        )


LABEL_PRIORITY = {"Lesion": 0, "Others": 1, "Normal": 2}


def validate_rules(rules: list[Rule], lexicon: Lexicon) -> None:
    names = set()
    for rule in rules:
        if rule.name in names:
            raise LexiconError(f"duplicate rule name {rule.name!r}")
        names.add(rule.name)
        if rule.label not in LABEL_PRIORITY:
            raise LexiconError(f"rule {rule.name!r} has unknown label {rule.label!r}")
        for cid in rule.required_affirmed + rule.required_negated + rule.forbidden_affirmed:
            if cid not in lexicon.concepts:
                raise LexiconError(f"rule {rule.name!r} references unknown concept {cid!r}")
        if not rule.required_affirmed and not rule.required_negated and not rule.forbidden_affirmed:
            raise LexiconError(f"rule {rule.name!r} has no conditions")


def default_lexicon() -> Lexicon:
    f, lo, d, dev = (
        SemanticClass.FINDING,
        SemanticClass.LOCATION,
        SemanticClass.DESCRIPTOR,
        SemanticClass.DEVICE,
    )
    spec = [
        ("nodule", f, ("nodule", "pulmonary nodule")),
        ("mass", f, ("mass",)),
        ("focal_lesion", f, ("focal lesion", "lesion")),
        ("pleural_effusion", f, ("pleural effusion", "effusion")),
        ("consolidation", f, ("consolidation",)),
        ("cardiomegaly", f, ("cardiomegaly", "enlarged heart")),
        ("pneumothorax", f, ("pneumothorax",)),
        ("edema", f, ("edema", "pulmonary edema")),
        ("granuloma", f, ("granuloma",)),
        ("right_upper_lobe", lo, ("right upper lobe",)),
        ("right_lower_lobe", lo, ("right lower lobe",)),
        ("left_upper_lobe", lo, ("left upper lobe",)),
        ("left_lower_lobe", lo, ("left lower lobe",)),
        ("right_lung", lo, ("right lung",)),
        ("left_lung", lo, ("left lung",)),
        ("small", d, ("small",)),
        ("large", d, ("large",)),
        ("moderate", d, ("moderate",)),
        ("rounded", d, ("rounded",)),
        ("patchy", d, ("patchy",)),
        ("diffuse", d, ("diffuse",)),
        ("pacemaker", dev, ("pacemaker",)),
        ("nasogastric_tube", dev, ("nasogastric tube",)),
        ("central_line", dev, ("central line",)),
    ]
    concepts = {cid: Concept(cid, sclass, syns) for cid, sclass, syns in spec}
    redirects = {"oedema": "edema", "pulmonary oedema": "pulmonary edema"}
    return Lexicon(concepts=concepts, redirects=redirects)


def default_rules(lexicon: Lexicon) -> list[Rule]:
    """One Lesion rule per lesion synonym concept, one Others rule per other
    finding or device, and a default Normal rule that fires only when no
    finding or device is affirmed.  ``granuloma`` deliberately has no rule,
    so reports affirming it stay Unlabeled."""
    lesion_concepts = ("nodule", "mass", "focal_lesion")
    others_concepts = (
        "pleural_effusion",
        "consolidation",
        "cardiomegaly",
        "pneumothorax",
        "edema",
        "pacemaker",
        "nasogastric_tube",
        "central_line",
    )
    rules = [
        Rule(name=f"lesion-{cid}", label="Lesion", required_affirmed=(cid,)) for cid in lesion_concepts
    ]
    rules += [
        Rule(name=f"others-{cid}", label="Others", required_affirmed=(cid,)) for cid in others_concepts
    ]
    rules.append(
        Rule(
            name="normal-default",
            label="Normal",
            forbidden_affirmed=lexicon.ids_of_class(SemanticClass.FINDING, SemanticClass.DEVICE),
        )
    )
    validate_rules(rules, lexicon)
    return rules


def load_lexicon(path: str | Path) -> Lexicon:
    path = Path(path)
    if not path.exists():
        raise LexiconError(f"lexicon file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise LexiconError(f"could not parse {path}: {exc}") from exc
    if not isinstance(data, dict) or "concepts" not in data:
        raise LexiconError(f"{path}: expected a mapping with a 'concepts' list")
    concepts = {}
    for i, entry in enumerate(data["concepts"]):
        try:
            cid = entry["id"]
            sclass = SemanticClass(entry["class"])
            synonyms = tuple(str(s) for s in entry["synonyms"])
        except (KeyError, TypeError, ValueError) as exc:
            raise LexiconError(f"{path}: bad concept entry {i}: {exc}") from exc
        if cid in concepts:
            raise LexiconError(f"{path}: duplicate concept id {cid!r}")
        concepts[cid] = Concept(cid, sclass, synonyms)
    redirects = {str(k): str(v) for k, v in (data.get("redirects") or {}).items()}
    return Lexicon(concepts=concepts, redirects=redirects)


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    data = {
        "concepts": [
            {
                "id": c.concept_id,
                "class": c.semantic_class.value,
                "synonyms": list(c.synonyms),
            }
            for _, c in sorted(lexicon.concepts.items())
        ],
        "redirects": dict(sorted(lexicon.redirects.items())),
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))


def load_rules(path: str | Path, lexicon: Lexicon) -> list[Rule]:
    path = Path(path)
    if not path.exists():
        raise LexiconError(f"rules file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise LexiconError(f"could not parse {path}: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("rules"), list):
        raise LexiconError(f"{path}: expected a mapping with a 'rules' list")
    rules = []
    for i, entry in enumerate(data["rules"]):
        if not isinstance(entry, dict) or "name" not in entry or "label" not in entry:
            raise LexiconError(f"{path}: rule entry {i} needs at least 'name' and 'label'")
        rules.append(
            Rule(
                name=str(entry["name"]),
                label=str(entry["label"]),
                required_affirmed=tuple(entry.get("required_affirmed", ()) or ()),
                required_negated=tuple(entry.get("required_negated", ()) or ()),
                forbidden_affirmed=tuple(entry.get("forbidden_affirmed", ()) or ()),
            )
        )
    validate_rules(rules, lexicon)
    return rules


def save_rules(rules: list[Rule], path: str | Path) -> None:
    data = {
        "rules": [
            {
                "name": r.name,
                "label": r.label,
                **({"required_affirmed": list(r.required_affirmed)} if r.required_affirmed else {}),
                **({"required_negated": list(r.required_negated)} if r.required_negated else {}),
                **({"forbidden_affirmed": list(r.forbidden_affirmed)} if r.forbidden_affirmed else {}),
            }
            for r in rules
        ]
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))
