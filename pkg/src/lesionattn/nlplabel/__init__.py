from .lexicon import (  # noqa: F401
    Concept,
    Lexicon,
    Rule,
    SemanticClass,
    default_lexicon,
    default_rules,
    load_lexicon,
    load_rules,
    save_lexicon,
    save_rules,
)
from .pipeline import (  # noqa: F401
    Entity,
    analyze_report,
    label_manifest,
    label_report,
    match_entities,
)
from .text import lemmatize, ngram_cosine, split_sentences, tokenize  # noqa: F401
from .validate import validate_labels, validation_rows  # noqa: F401
