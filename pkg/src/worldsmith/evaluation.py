"""Automatic metrics: Hits@1 ranking evaluation, word-overlap F1, n-gram novelty."""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import PlacementExample, normalize_name
from .ranking import Scorer, ScorerInput, rank, tokenize

_SEED_MASK = (1 << 63) - 1


class PoolTooSmallError(Exception):
    """Distractor pool cannot supply K-1 candidates besides the gold."""


@dataclass(frozen=True)
class EvalConfig:
    num_candidates: int = 20  # gold + (K-1) sampled distractors
    distractor_source: str = "task_all_pool"  # or "task_train_pool"
    seed: int = 0

    def validate(self) -> None:
        if self.num_candidates < 2:
            raise ValueError("num_candidates must be >= 2")
        if self.distractor_source not in ("task_all_pool", "task_train_pool"):
            raise ValueError(f"unknown distractor source {self.distractor_source!r}")


@dataclass(frozen=True)
class ExampleRecord:
    context: str
    gold: str
    top1: str
    gold_rank: int


@dataclass(frozen=True)
class EvalReport:
    task: str
    feature_mode: str
    scorer_name: str
    hits_at_1: float
    num_candidates: int
    seed: int
    records: tuple[ExampleRecord, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "feature_mode": self.feature_mode,
            "scorer": self.scorer_name,
            "hits_at_1": self.hits_at_1,
            "num_candidates": self.num_candidates,
            "seed": self.seed,
            "examples": len(self.records),
            "records": [
                {
                    "context": r.context,
                    "gold": r.gold,
                    "top1": r.top1,
                    "gold_rank": r.gold_rank,
                }
                for r in self.records
            ],
        }


def _example_rng(seed: int, index: int) -> np.random.Generator:
    # Keyed per (seed, example index) so parallel and serial runs agree.
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed & _SEED_MASK, spawn_key=(index,))
    )


def hits_at_1(
    scorer: Scorer,
    examples: list[PlacementExample],
    pool: list[str],
    config: EvalConfig | None = None,
    candidate_texts: dict[str, str] | None = None,
    feature_mode: str = "name_only",
) -> EvalReport:
    """Fraction of examples whose gold ranks first among sampled distractors.

    Distractors are drawn without replacement from the pool excluding the
    gold (case-folded comparison); the gold's slot in the candidate list is
    itself shuffled so index tie-breaks cannot favor it.
    """
    config = config or EvalConfig()
    config.validate()
    if not examples:
        raise ValueError("no examples to evaluate")

    def text_of(name: str) -> str:
        if candidate_texts is not None:
            return candidate_texts.get(name, name)
        return name

    pool = sorted(set(pool))
    task = examples[0].task
    records = []
    hits = 0
    for index, example in enumerate(examples):
        gold_folded = normalize_name(example.gold)
        distractor_pool = [name for name in pool if normalize_name(name) != gold_folded]
        if len(distractor_pool) < config.num_candidates - 1:
            raise PoolTooSmallError(
                f"pool of {len(distractor_pool)} candidates cannot fill "
                f"K-1={config.num_candidates - 1} distractor slots"
            )
        rng = _example_rng(config.seed, index)
        picks = rng.choice(len(distractor_pool), size=config.num_candidates - 1, replace=False)
        names = [example.gold] + [distractor_pool[i] for i in picks]
        order = rng.permutation(len(names))
        names = [names[i] for i in order]
        gold_index = names.index(example.gold)

        texts = [text_of(n) for n in names]
        ranked = rank(scorer, ScorerInput(example.context_text, tuple(texts), task))
        gold_rank = ranked.index(gold_index)
        if gold_rank == 0:
            hits += 1
        records.append(
            ExampleRecord(
                context=example.context_text,
                gold=example.gold,
                top1=names[ranked[0]],
                gold_rank=gold_rank,
            )
        )

    return EvalReport(
        task=task,
        feature_mode=feature_mode,
        scorer_name=scorer.name,
        hits_at_1=100.0 * hits / len(examples),
        num_candidates=config.num_candidates,
        seed=config.seed,
        records=tuple(records),
    )


def write_report(report: EvalReport, json_path, csv_path=None) -> None:
    """Write the report as JSON, and optionally a flat per-example CSV."""
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "context", "gold", "top1", "gold_rank", "hit"])
            for i, r in enumerate(report.records):
                writer.writerow([i, r.context, r.gold, r.top1, r.gold_rank, int(r.gold_rank == 0)])


def f1_overlap(predicted: str, gold: str) -> float:
    """Harmonic mean of token-multiset precision and recall, in [0, 1]."""
    pred_counts = Counter(tokenize(predicted))
    gold_counts = Counter(tokenize(gold))
    if not pred_counts and not gold_counts:
        return 1.0
    if not pred_counts or not gold_counts:
        return 0.0
    overlap = sum((pred_counts & gold_counts).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(pred_counts.values())
    recall = overlap / sum(gold_counts.values())
    return 2 * precision * recall / (precision + recall)


def _ngrams(text: str, n: int) -> list[tuple[str, ...]]:
    tokens = tokenize(text)
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def ngram_novelty(generated: list[str], train: list[str], n: int) -> float:
    """Fraction of generated n-grams (with multiplicity) present in the train set."""
    if n < 1:
        raise ValueError("n must be >= 1")
    train_grams = set()
    for text in train:
        train_grams.update(_ngrams(text, n))
    generated_grams = []
    for text in generated:
        generated_grams.extend(_ngrams(text, n))
    if not generated_grams:
        return 0.0
    present = sum(1 for g in generated_grams if g in train_grams)
    return present / len(generated_grams)
