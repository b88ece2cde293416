"""Content generation for elements outside the corpus.

The text generator is a deliberately simple, pluggable baseline: retrieve
the closest same-kind cards by TF-IDF, fit a small word-level Markov chain
on their text fields, and splice the requested name into the first
sentence. Affordances come from an independent per-label logistic
regression over bag-of-words features.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .corpus import AFFORDANCES, Corpus, ObjectCard
from .ranking import IRScorer, ScorerInput, Vocabulary, rank

_SEED_MASK = (1 << 63) - 1
_SENTENCE_SPLIT = re.compile(r"[.!?]+")
_WORD_RE = re.compile(r"[a-z0-9']+")

GENERATOR_NAME = "retrieval-markov"

_FIELDS_BY_KIND = {
    "location": ("description", "background"),
    "character": ("persona", "description"),
    "object": ("description",),
}

_FALLBACK_TEXT = {
    "description": "The {name} looks unremarkable at first glance.",
    "background": "Little is known about the {name}.",
    "persona": "I am {name}. I keep to myself and watch the road.",
}


class GenerationError(Exception):
    """Base class for element generation problems."""


class EmptyNameError(GenerationError):
    pass


class NoSourceCardsError(GenerationError):
    """Corpus has no cards of the requested kind to learn from."""


@dataclass(frozen=True)
class GeneratedElement:
    kind: str
    name: str
    fields: dict[str, str]
    affordances: tuple[str, ...] | None
    provenance: dict

    def to_card_dict(self) -> dict:
        """Serialize as an ordinary corpus card plus a provenance block."""
        out = {"id": f"generated:{self.name.casefold()}", "name": self.name, **self.fields}
        if self.kind == "object":
            out["affordances"] = list(self.affordances or ())
        out["generated"] = True
        out["provenance"] = self.provenance
        return out


class MarkovChain:
    """Order-2 word chain over sentences, deterministic given the caller's rng."""

    END = "</s>"

    def __init__(self):
        self.starts: list[tuple[str, str]] = []
        self.transitions: dict[tuple[str, str], list[str]] = {}

    @classmethod
    def fit(cls, texts: list[str]) -> "MarkovChain":
        chain = cls()
        for text in texts:
            for sentence in _SENTENCE_SPLIT.split(text.lower()):
                words = _WORD_RE.findall(sentence)
                if len(words) < 3:
                    continue
                chain.starts.append((words[0], words[1]))
                padded = words + [cls.END]
                for i in range(len(padded) - 2):
                    key = (padded[i], padded[i + 1])
                    chain.transitions.setdefault(key, []).append(padded[i + 2])
        return chain

    def sentence(self, rng: np.random.Generator, max_words: int = 30) -> list[str]:
        if not self.starts:
            return []
        pair = self.starts[int(rng.integers(len(self.starts)))]
        words = [pair[0], pair[1]]
        while len(words) < max_words:
            options = self.transitions.get((words[-2], words[-1]))
            if not options:
                break
            pick = options[int(rng.integers(len(options)))]
            if pick == self.END:
                break
            words.append(pick)
        return words


def _render(sentences: list[list[str]]) -> str:
    rendered = []
    for words in sentences:
        if not words:
            continue
        text = " ".join(words)
        rendered.append(text[0].upper() + text[1:] + ".")
    return " ".join(rendered)


def _generate_field(
    chain: MarkovChain,
    field_name: str,
    name: str,
    rng: np.random.Generator,
    max_tokens: int = 60,
) -> str:
    if not chain.starts:
        return _FALLBACK_TEXT[field_name].format(name=name)

    sentences: list[list[str]] = []
    first = chain.sentence(rng)
    if field_name == "persona":
        # Personas speak in first person; lead with an identity line.
        sentences.append(f"i am {name.lower()}".split())
        if first:
            sentences.append(first)
    else:
        # Splice the name over the sampled start pair so the first sentence
        # reads "The <name> <continuation ...>".
        tail = first[2:] if len(first) > 2 else ["is", "here"]
        sentences.append(["the"] + name.lower().split() + tail)

    emitted = {tuple(s) for s in sentences}
    budget = max_tokens - sum(len(s) for s in sentences)
    while budget > 8:
        # redraw a few times rather than repeat a sentence verbatim
        extra = None
        for _ in range(6):
            draw = chain.sentence(rng, max_words=min(30, budget))
            if draw and tuple(draw) not in emitted:
                extra = draw
                break
        if extra is None:
            break
        emitted.add(tuple(extra))
        sentences.append(extra)
        budget -= len(extra)
    return _render(sentences)


def retrieve_similar(corpus: Corpus, kind: str, name: str, top_k: int = 3):
    """Closest same-kind cards to the name by TF-IDF cosine."""
    collections = {
        "location": [c for c in corpus.locations.values() if not c.is_filler],
        "character": list(corpus.characters.values()),
        "object": list(corpus.objects.values()),
    }
    if kind not in collections:
        raise GenerationError(f"unknown element kind {kind!r}")
    cards = sorted(collections[kind], key=lambda c: c.id)
    if not cards:
        raise NoSourceCardsError(f"corpus has no {kind} cards")

    def full_text(card) -> str:
        parts = [card.name]
        for attr in ("description", "background", "persona"):
            parts.append(getattr(card, attr, ""))
        return " ".join(p for p in parts if p)

    texts = [full_text(c) for c in cards]
    scorer = IRScorer.from_documents(texts)
    # Candidate texts must be unique for ScorerInput; disambiguate dupes.
    unique_texts = [f"{t} [{i}]" if texts.index(t) != i else t for i, t in enumerate(texts)]
    order = rank(scorer, ScorerInput(name, tuple(unique_texts), kind))
    return [cards[i] for i in order[:top_k]]


def generate_element(
    name: str,
    kind: str,
    corpus: Corpus,
    seed: int = 0,
    affordance_model: "AffordanceModel | None" = None,
) -> GeneratedElement:
    """Create the missing fields for a named element of the given kind."""
    if not name or not name.strip():
        raise EmptyNameError("element name is empty")
    name = " ".join(name.split())
    sources = retrieve_similar(corpus, kind, name)

    fields: dict[str, str] = {}
    for i, field_name in enumerate(_FIELDS_BY_KIND[kind]):
        texts = [getattr(card, field_name, "") for card in sources]
        texts = [t for t in texts if t.strip()]
        chain = MarkovChain.fit(texts)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed & _SEED_MASK, spawn_key=(i,))
        )
        fields[field_name] = _generate_field(chain, field_name, name, rng)

    affordances: tuple[str, ...] | None = None
    if kind == "object":
        if affordance_model is not None:
            labels, _ = predict_affordances(affordance_model, name, fields["description"])
            affordances = tuple(sorted(labels))
        else:
            # No classifier supplied: inherit from the closest neighbor.
            affordances = tuple(sources[0].affordances)

    return GeneratedElement(
        kind=kind,
        name=name,
        fields=fields,
        affordances=affordances,
        provenance={
            "generator": GENERATOR_NAME,
            "seed": seed,
            "sources": [card.id for card in sources],
        },
    )


@dataclass
class AffordanceModel:
    """Seven independent logistic heads over bag-of-words name+description features."""

    vocab: Vocabulary
    weights: np.ndarray  # (7, vocab size)
    bias: np.ndarray  # (7,)
    thresholds: np.ndarray  # (7,)
    degenerate: dict[str, str] = field(default_factory=dict)
    labels: tuple[str, ...] = AFFORDANCES


def _object_features(vocab: Vocabulary, name: str, description: str) -> np.ndarray:
    x = np.zeros(len(vocab), dtype=np.float64)
    for idx in vocab.ids(f"{name} {description}"):
        x[idx] = 1.0
    return x


def train_affordance_model(
    objects: list[ObjectCard],
    include_description: bool = True,
    max_epochs: int = 500,
    tolerance: float = 1e-5,
    learning_rate: float = 1.0,
) -> AffordanceModel:
    """Full-batch gradient descent on mean binary cross-entropy per label."""
    if not objects:
        raise ValueError("no labeled objects to train on")

    texts = [
        f"{o.name} {o.description}" if include_description else o.name for o in objects
    ]
    vocab = Vocabulary.build(texts)
    n, v = len(objects), len(vocab)
    x = np.zeros((n, v), dtype=np.float64)
    for i, text in enumerate(texts):
        for idx in vocab.ids(text):
            x[i, idx] = 1.0
    y = np.zeros((n, len(AFFORDANCES)), dtype=np.float64)
    for i, card in enumerate(objects):
        for label in card.affordances:
            if label in AFFORDANCES:
                y[i, AFFORDANCES.index(label)] = 1.0

    degenerate = {}
    for j, label in enumerate(AFFORDANCES):
        if y[:, j].min() == y[:, j].max():
            value = "always-positive" if y[0, j] == 1.0 else "always-negative"
            degenerate[label] = value

    weights = np.zeros((len(AFFORDANCES), v), dtype=np.float64)
    bias = np.zeros(len(AFFORDANCES), dtype=np.float64)
    prev_loss = math.inf
    for _ in range(max_epochs):
        logits = x @ weights.T + bias
        probs = 1.0 / (1.0 + np.exp(-logits))
        eps = 1e-12
        loss = float(
            -np.mean(y * np.log(probs + eps) + (1 - y) * np.log(1 - probs + eps))
        )
        grad = (probs - y) / n  # (n, 7)
        weights -= learning_rate * grad.T @ x
        bias -= learning_rate * grad.sum(axis=0)
        if abs(prev_loss - loss) < tolerance:
            break
        prev_loss = loss

    return AffordanceModel(
        vocab=vocab,
        weights=weights,
        bias=bias,
        thresholds=np.full(len(AFFORDANCES), 0.5),
        degenerate=degenerate,
    )


def predict_affordances(
    model: AffordanceModel, name: str, description: str = ""
) -> tuple[set[str], dict[str, float]]:
    """Labels whose probability clears the per-label threshold, plus all probs."""
    x = _object_features(model.vocab, name, description)
    logits = model.weights @ x + model.bias
    probs = 1.0 / (1.0 + np.exp(-logits))
    by_label = {label: float(p) for label, p in zip(model.labels, probs)}
    chosen = {
        label
        for label, p in by_label.items()
        if p >= model.thresholds[model.labels.index(label)]
    }
    return chosen, by_label


def affordance_micro_f1(
    predicted: list[set[str]], gold: list[set[str]]
) -> float:
    """Micro-averaged F1 over all (object, label) decisions."""
    tp = fp = fn = 0
    for pred, actual in zip(predicted, gold):
        tp += len(pred & actual)
        fp += len(pred - actual)
        fn += len(actual - pred)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def majority_baseline_predictions(train: list[ObjectCard], count: int) -> list[set[str]]:
    """Predict each label's training-majority class for every input."""
    keep = set()
    for label in AFFORDANCES:
        positives = sum(1 for card in train if label in card.affordances)
        if positives * 2 > len(train):
            keep.add(label)
    return [set(keep) for _ in range(count)]
