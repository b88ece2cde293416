"""The four candidate scorers, trained and compared on a planted-cluster
corpus where the right answer is knowable.

Run from the repo root:  python3 demos/02_scorers_and_training.py
"""

from worldsmith.corpus import candidate_texts, derive_examples, task_candidate_pool, train_gold_pool
from worldsmith.evaluation import EvalConfig, hits_at_1
from worldsmith.ranking import (
    EmbeddingScorerParams,
    IRScorer,
    ProportionalScorer,
    RandomScorer,
    ScorerInput,
    rank,
    train_embedding_scorer,
)
from worldsmith.synthetic import make_clustered_corpus

# 200 locations in 20 themed clusters; neighbors are annotated strictly
# within a cluster, so a ranker that learns the theme vocabulary wins.
corpus = make_clustered_corpus(seed=0)
mode = "name_and_description"
grouped = derive_examples(corpus, "location", mode)
pool = task_candidate_pool(corpus, "location")
texts = candidate_texts(corpus, "location", pool, mode)
print(f"{len(grouped['train'])} train / {len(grouped['test'])} test neighbor examples, "
      f"{len(pool)} candidate locations")

# Scorers share one interface: score(context, candidates) -> one float each.
ir = IRScorer.from_corpus(corpus)
example = grouped["test"][0]
inp = ScorerInput(example.context_text, tuple(texts[n] for n in pool[:6]), "location")
print("\nTF-IDF scores for six candidates:",
      [round(s, 3) for s in ir.score(inp)], "-> ranked", rank(ir, inp))

# The trainable ranker: mean-pooled bag-of-words embeddings scored by inner
# product, trained with a hinge margin against sampled negatives. Heavy
# input dropout is what keeps it from memorizing this little data.
params = EmbeddingScorerParams(epochs=20, seed=1)
model, trace = train_embedding_scorer(
    grouped["train"], {"location": train_gold_pool(corpus, "location")}, params,
    {"location": texts},
)
print(f"\ntrained {params.epochs} epochs: "
      f"loss {trace[0]:.4f} -> {trace[-1]:.4f}")

# Hits@1: did the gold neighbor outrank 19 sampled distractors?
config = EvalConfig(num_candidates=20, seed=3)
proportional = ProportionalScorer.from_golds(
    [texts[ex.gold] for ex in grouped["train"]]
)
print("\ntest Hits@1 (K=20):")
for scorer in (RandomScorer(3), proportional, ir, model):
    result = hits_at_1(scorer, grouped["test"], pool, config, texts, mode)
    print(f"  {scorer.name:<14} {result.hits_at_1:5.1f}")
