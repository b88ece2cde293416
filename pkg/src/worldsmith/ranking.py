"""Candidate scorers for the placement tasks.

Four interchangeable rankers: seeded random, training-frequency proportional,
TF-IDF cosine retrieval, and a trainable bag-of-words embedding model that
scores context/candidate pairs by the inner product of mean-pooled token
embeddings and trains with a margin ranking loss over sampled negatives.
"""

from __future__ import annotations

import json
import math
import re
import struct
from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from .corpus import Corpus, PlacementExample, candidate_text, derive_examples

_TOKEN_RE = re.compile(r"[^\W_]+")

_MODEL_MAGIC = b"WSBOWEMB"
_MODEL_VERSION = 1
_SEED_MASK = (1 << 63) - 1


class RankingError(Exception):
    """Base class for ranking problems."""


class EmptyPoolError(RankingError):
    """A task present in the training examples has no candidate pool."""


class ModelVersionError(RankingError):
    """Model file has the wrong magic or an unsupported version."""


class ModelCorruptError(RankingError):
    """Model file is truncated or internally inconsistent."""


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on whitespace/punctuation; punctuation dropped."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    """Dense token index plus document frequencies over the fitting texts."""

    index: dict[str, int]
    doc_freq: dict[str, int]
    doc_count: int

    @classmethod
    def build(cls, texts) -> "Vocabulary":
        index: dict[str, int] = {}
        doc_freq: dict[str, int] = {}
        count = 0
        for text in texts:
            count += 1
            # dedupe in first-seen order: set iteration would tie the token
            # index assignment to the process hash seed
            for token in dict.fromkeys(tokenize(text)):
                if token not in index:
                    index[token] = len(index)
                doc_freq[token] = doc_freq.get(token, 0) + 1
        return cls(index=index, doc_freq=doc_freq, doc_count=count)

    def __len__(self) -> int:
        return len(self.index)

    def ids(self, text: str) -> list[int]:
        """Token ids for known tokens; unknown tokens are skipped."""
        return [self.index[t] for t in tokenize(text) if t in self.index]


@dataclass(frozen=True)
class ScorerInput:
    context_text: str
    candidates: tuple[str, ...]
    task: str = "location"

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("candidate list is empty")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("duplicate candidate texts")


class Scorer:
    """Interface: one real-valued score per candidate, aligned by index."""

    name = "scorer"

    def score(self, inp: ScorerInput) -> list[float]:
        raise NotImplementedError


def rank(scorer: Scorer, inp: ScorerInput) -> list[int]:
    """Candidate indices by descending score; ties broken by ascending index."""
    scores = scorer.score(inp)
    return sorted(range(len(scores)), key=lambda i: (-scores[i], i))


class RandomScorer(Scorer):
    """i.i.d. uniform scores drawn from one seeded stream."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = np.random.default_rng(seed & _SEED_MASK)

    def score(self, inp: ScorerInput) -> list[float]:
        return self._rng.random(len(inp.candidates)).tolist()


class ProportionalScorer(Scorer):
    """Scores a candidate by how often it appears as a training gold."""

    name = "proportional"

    def __init__(self, counts: Counter):
        self.counts = counts

    @classmethod
    def from_golds(cls, gold_texts) -> "ProportionalScorer":
        return cls(Counter(gold_texts))

    def score(self, inp: ScorerInput) -> list[float]:
        return [float(self.counts.get(c, 0)) for c in inp.candidates]


class IRScorer(Scorer):
    """TF-IDF cosine overlap: tf = raw count, idf = ln((1+N)/(1+df)) + 1.

    Kept in plain Python on sparse dicts so its arithmetic path is independent
    of the dense numpy oracle it is tested against.
    """

    name = "ir"

    def __init__(self, doc_freq: dict[str, int], doc_count: int):
        self.doc_freq = doc_freq
        self.doc_count = doc_count
        self._weight_cache: dict[str, dict[str, float]] = {}

    @classmethod
    def from_documents(cls, documents) -> "IRScorer":
        doc_freq: dict[str, int] = {}
        count = 0
        for doc in documents:
            count += 1
            for token in set(tokenize(doc)):
                doc_freq[token] = doc_freq.get(token, 0) + 1
        return cls(doc_freq=doc_freq, doc_count=count)

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> "IRScorer":
        return cls.from_documents(corpus_documents(corpus))

    def _weights(self, text: str) -> dict[str, float]:
        cached = self._weight_cache.get(text)
        if cached is not None:
            return cached
        weights: dict[str, float] = {}
        for token, tf in Counter(tokenize(text)).items():
            idf = math.log((1 + self.doc_count) / (1 + self.doc_freq.get(token, 0))) + 1.0
            weights[token] = tf * idf
        self._weight_cache[text] = weights
        return weights

    def score(self, inp: ScorerInput) -> list[float]:
        query = self._weights(inp.context_text)
        qnorm = math.sqrt(sum(v * v for v in query.values()))
        scores = []
        for candidate in inp.candidates:
            weights = self._weights(candidate)
            dot = sum(w * query[t] for t, w in weights.items() if t in query)
            norm = math.sqrt(sum(v * v for v in weights.values()))
            scores.append(dot / (qnorm * norm) if dot and qnorm and norm else 0.0)
        return scores


def corpus_documents(corpus: Corpus) -> list[str]:
    """One document per card, in id order: all of its free-text fields."""
    docs = []
    for card in sorted(corpus.locations.values(), key=lambda c: c.id):
        docs.append(" ".join(filter(None, (card.name, card.description, card.background))))
    for card in sorted(corpus.characters.values(), key=lambda c: c.id):
        docs.append(" ".join(filter(None, (card.name, card.persona, card.description))))
    for card in sorted(corpus.objects.values(), key=lambda c: c.id):
        docs.append(" ".join(filter(None, (card.name, card.description))))
    return docs


@dataclass(frozen=True)
class EmbeddingScorerParams:
    dim: int = 128
    max_norm: float = 10.0
    learning_rate: float = 0.01
    input_dropout: float = 0.5
    margin: float = 0.2
    negatives_per_positive: int = 10
    epochs: int = 20
    seed: int = 0
    subword_init: bool = False
    subword_buckets: int = 10007

    def validate(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not 0 <= self.input_dropout < 1:
            raise ValueError("input_dropout must be in [0, 1)")
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_norm <= 0:
            raise ValueError("max_norm must be positive")
        if self.subword_buckets < 1:
            raise ValueError("subword_buckets must be >= 1")


def _fnv1a(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def _char_ngrams(token: str, lo: int = 3, hi: int = 5) -> list[str]:
    padded = f"<{token}>"
    grams = []
    for n in range(lo, hi + 1):
        grams.extend(padded[i : i + n] for i in range(len(padded) - n + 1))
    return grams


def subword_token_matrix(
    vocab: Vocabulary, params: EmbeddingScorerParams
) -> tuple[np.ndarray, np.ndarray]:
    """Token embeddings averaged from hash-bucketed character 3-5 grams.

    Stands in for pretrained subword vectors: tokens sharing character
    n-grams start (or stay, when frozen) near each other.
    """
    rng = np.random.default_rng((params.seed ^ 0x5BD1E995) & _SEED_MASK)
    buckets = rng.normal(0.0, 1.0 / math.sqrt(params.dim), (params.subword_buckets, params.dim))
    buckets = buckets.astype(np.float32)
    matrix = np.zeros((len(vocab), params.dim), dtype=np.float32)
    for token, idx in vocab.index.items():
        grams = _char_ngrams(token)
        if not grams:
            continue
        rows = [_fnv1a(g.encode("utf-8")) % params.subword_buckets for g in grams]
        matrix[idx] = buckets[rows].mean(axis=0)
    return matrix, buckets


class EmbeddingScorer(Scorer):
    """Bag-of-words embedding ranker: score = <mean ctx vectors, mean cand vectors>."""

    name = "embedding"

    def __init__(
        self,
        vocab: Vocabulary,
        matrix: np.ndarray,
        params: EmbeddingScorerParams,
        metadata: dict | None = None,
        bucket_matrix: np.ndarray | None = None,
    ):
        if matrix.shape != (len(vocab), params.dim):
            raise ValueError("embedding matrix shape does not match vocabulary")
        self.vocab = vocab
        self.matrix = matrix
        self.params = params
        self.metadata = metadata or {}
        self.bucket_matrix = bucket_matrix
        self._encode_cache: dict[str, np.ndarray] = {}

    def encode(self, text: str) -> np.ndarray:
        cached = self._encode_cache.get(text)
        if cached is not None:
            return cached
        ids = self.vocab.ids(text)
        if ids:
            vec = self.matrix[ids].mean(axis=0)
        else:
            vec = np.zeros(self.params.dim, dtype=np.float32)
        self._encode_cache[text] = vec
        return vec

    def score(self, inp: ScorerInput) -> list[float]:
        ctx = self.encode(inp.context_text)
        return [float(np.dot(ctx, self.encode(c))) for c in inp.candidates]


def _clip_rows(matrix: np.ndarray, rows: np.ndarray, max_norm: float) -> None:
    norms = np.linalg.norm(matrix[rows], axis=1)
    over = norms > max_norm
    if np.any(over):
        scale = (max_norm / norms[over]).astype(matrix.dtype)
        matrix[rows[over]] *= scale[:, None]


def train_embedding_scorer(
    examples: list[PlacementExample],
    candidate_pool: dict[str, list[str]],
    params: EmbeddingScorerParams | None = None,
    candidate_texts: dict[str, dict[str, str]] | None = None,
) -> tuple[EmbeddingScorer, list[float]]:
    """Fit the embedding ranker with hinge loss over sampled negatives.

    candidate_pool maps task -> gold candidate names from the training split.
    candidate_texts maps task -> {name: encoded text}; names encode as
    themselves when absent (name-only). Fully deterministic for a fixed seed.
    Returns the trained scorer and the per-epoch mean hinge loss trace.
    """
    params = params or EmbeddingScorerParams()
    params.validate()
    if not examples:
        raise ValueError("no training examples")

    tasks = {ex.task for ex in examples}
    for task in tasks:
        if not candidate_pool.get(task):
            raise EmptyPoolError(f"task {task!r} has an empty candidate pool")

    def text_of(task: str, name: str) -> str:
        if candidate_texts and task in candidate_texts:
            return candidate_texts[task].get(name, name)
        return name

    pools = {task: sorted(set(candidate_pool[task])) for task in tasks}
    fit_texts = [ex.context_text for ex in examples]
    for task in sorted(tasks):
        fit_texts.extend(text_of(task, name) for name in pools[task])
    vocab = Vocabulary.build(fit_texts)

    rng = np.random.default_rng(params.seed & _SEED_MASK)
    bucket_matrix = None
    if params.subword_init:
        matrix, bucket_matrix = subword_token_matrix(vocab, params)
    else:
        matrix = rng.normal(0.0, 1.0 / math.sqrt(params.dim), (len(vocab), params.dim))
        matrix = matrix.astype(np.float32)

    id_cache: dict[str, np.ndarray] = {}

    def ids_of(text: str) -> np.ndarray:
        cached = id_cache.get(text)
        if cached is None:
            cached = np.asarray(vocab.ids(text), dtype=np.intp)
            id_cache[text] = cached
        return cached

    gold_ids = [ids_of(text_of(ex.task, ex.gold)) for ex in examples]
    ctx_ids = [ids_of(ex.context_text) for ex in examples]
    pool_ids = {
        task: [ids_of(text_of(task, name)) for name in pools[task]] for task in tasks
    }
    pool_names = {task: pools[task] for task in tasks}

    lr = np.float32(params.learning_rate)
    margin = params.margin
    k = params.negatives_per_positive
    trace: list[float] = []

    for _ in range(params.epochs):
        order = rng.permutation(len(examples))
        loss_sum = 0.0
        pair_count = 0
        for pos in order:
            ex = examples[pos]
            cids = ctx_ids[pos]
            if params.input_dropout > 0 and cids.size:
                keep = rng.random(cids.size) >= params.input_dropout
                cids = cids[keep]
            gids = gold_ids[pos]

            ctx_vec = (
                matrix[cids].mean(axis=0) if cids.size else np.zeros(params.dim, np.float32)
            )
            gold_vec = (
                matrix[gids].mean(axis=0) if gids.size else np.zeros(params.dim, np.float32)
            )
            gold_score = float(np.dot(ctx_vec, gold_vec))

            names = pool_names[ex.task]
            negatives = []
            draws = rng.integers(0, len(names), 4 * k)
            for draw in draws:
                if names[draw] != ex.gold:
                    negatives.append(draw)
                    if len(negatives) == k:
                        break
            # Uniform redraw can starve only when the pool is all-gold; the
            # remaining slots just go unfilled that step.

            ctx_grad = np.zeros(params.dim, dtype=np.float32)
            active_negs = []
            for neg in negatives:
                nids = pool_ids[ex.task][neg]
                neg_vec = (
                    matrix[nids].mean(axis=0) if nids.size else np.zeros(params.dim, np.float32)
                )
                loss = margin - gold_score + float(np.dot(ctx_vec, neg_vec))
                pair_count += 1
                if loss > 0:
                    loss_sum += loss
                    ctx_grad += neg_vec - gold_vec
                    active_negs.append(nids)

            if not active_negs:
                continue
            touched = [cids, gids]
            if cids.size:
                np.add.at(matrix, cids, -lr * ctx_grad / cids.size)
            if gids.size and cids.size:
                np.add.at(matrix, gids, lr * len(active_negs) * ctx_vec / gids.size)
            for nids in active_negs:
                if nids.size and cids.size:
                    np.add.at(matrix, nids, -lr * ctx_vec / nids.size)
                    touched.append(nids)
            rows = np.unique(np.concatenate([t for t in touched if t.size]))
            if rows.size:
                _clip_rows(matrix, rows, params.max_norm)

        trace.append(loss_sum / pair_count if pair_count else 0.0)

    metadata = {
        "epochs_run": params.epochs,
        "final_loss": trace[-1] if trace else 0.0,
        "seed": params.seed,
        "examples": len(examples),
        "tasks": sorted(tasks),
    }
    scorer = EmbeddingScorer(vocab, matrix, params, metadata, bucket_matrix)
    return scorer, trace


def frozen_subword_scorer(
    texts, params: EmbeddingScorerParams | None = None
) -> EmbeddingScorer:
    """Untrained ranker over subword-average embeddings (fasttext-style baseline)."""
    params = params or EmbeddingScorerParams(subword_init=True)
    if not params.subword_init:
        raise ValueError("frozen subword scorer requires subword_init=True")
    params.validate()
    vocab = Vocabulary.build(texts)
    matrix, buckets = subword_token_matrix(vocab, params)
    scorer = EmbeddingScorer(vocab, matrix, params, {"frozen": True, "seed": params.seed}, buckets)
    scorer.name = "fasttext"
    return scorer


def save_model(model: EmbeddingScorer, path) -> None:
    """Write magic + version, JSON header, then the float32 matrix rows."""
    tokens = [None] * len(model.vocab)
    for token, idx in model.vocab.index.items():
        tokens[idx] = token
    header = {
        "params": asdict(model.params),
        "vocab": {
            "tokens": tokens,
            "doc_freq": [model.vocab.doc_freq.get(t, 0) for t in tokens],
            "doc_count": model.vocab.doc_count,
        },
        "metadata": model.metadata,
        "matrix_shape": list(model.matrix.shape),
        "has_buckets": model.bucket_matrix is not None,
        "bucket_shape": list(model.bucket_matrix.shape) if model.bucket_matrix is not None else None,
        "name": model.name,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MODEL_MAGIC)
        fh.write(struct.pack("<I", _MODEL_VERSION))
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(np.ascontiguousarray(model.matrix, dtype="<f4").tobytes())
        if model.bucket_matrix is not None:
            fh.write(np.ascontiguousarray(model.bucket_matrix, dtype="<f4").tobytes())


def load_model(path) -> EmbeddingScorer:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MODEL_MAGIC) + 12 or blob[: len(_MODEL_MAGIC)] != _MODEL_MAGIC:
        raise ModelVersionError("not an embedding model file (bad magic)")
    offset = len(_MODEL_MAGIC)
    (version,) = struct.unpack_from("<I", blob, offset)
    if version != _MODEL_VERSION:
        raise ModelVersionError(f"unsupported model version {version}")
    offset += 4
    (header_len,) = struct.unpack_from("<Q", blob, offset)
    offset += 8
    if len(blob) < offset + header_len:
        raise ModelCorruptError("truncated model header")
    try:
        header = json.loads(blob[offset : offset + header_len])
    except json.JSONDecodeError as exc:
        raise ModelCorruptError(f"unreadable model header: {exc}") from exc
    offset += header_len

    params = EmbeddingScorerParams(**header["params"])
    tokens = header["vocab"]["tokens"]
    vocab = Vocabulary(
        index={t: i for i, t in enumerate(tokens)},
        doc_freq=dict(zip(tokens, header["vocab"]["doc_freq"])),
        doc_count=header["vocab"]["doc_count"],
    )
    rows, dim = header["matrix_shape"]
    need = rows * dim * 4
    if len(blob) < offset + need:
        raise ModelCorruptError("truncated embedding matrix")
    matrix = np.frombuffer(blob[offset : offset + need], dtype="<f4").reshape(rows, dim).copy()
    offset += need

    bucket_matrix = None
    if header.get("has_buckets"):
        brows, bdim = header["bucket_shape"]
        bneed = brows * bdim * 4
        if len(blob) < offset + bneed:
            raise ModelCorruptError("truncated bucket matrix")
        bucket_matrix = (
            np.frombuffer(blob[offset : offset + bneed], dtype="<f4").reshape(brows, bdim).copy()
        )

    model = EmbeddingScorer(vocab, matrix, params, header.get("metadata", {}), bucket_matrix)
    model.name = header.get("name", "embedding")
    return model


def build_scorer(
    kind: str,
    corpus: Corpus,
    task: str,
    feature_mode: str = "name_and_description",
    seed: int = 0,
    model: EmbeddingScorer | None = None,
) -> Scorer:
    """Construct one of the named scorers for a task against a corpus."""
    if kind == "random":
        return RandomScorer(seed)
    if kind == "proportional":
        examples = derive_examples(corpus, task, feature_mode)
        texts = [
            candidate_text(corpus, task, ex.gold, feature_mode) for ex in examples["train"]
        ]
        return ProportionalScorer.from_golds(texts)
    if kind == "ir":
        return IRScorer.from_corpus(corpus)
    if kind == "embedding":
        if model is None:
            raise ValueError("embedding scorer needs a trained model")
        return model
    raise ValueError(f"unknown scorer kind {kind!r}")
