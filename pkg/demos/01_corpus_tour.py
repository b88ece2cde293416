"""A tour of the element corpus: cards, validation, splits, and the
supervised placement examples everything else trains on.

Run from the repo root:  python3 demos/01_corpus_tour.py
"""

from worldsmith import SAMPLE_CORPUS_PATH
from worldsmith.corpus import TASKS, derive_examples, load_corpus, validate

# The bundled corpus is a single JSON document: 40 crowd-style locations,
# 60 characters, 80 objects, plus 25 deliberately plain "filler" locations
# that are allowed to repeat on a map.
corpus = load_corpus(SAMPLE_CORPUS_PATH)
print(f"locations: {len(corpus.non_filler_locations())}  "
      f"fillers: {len(corpus.filler_locations())}  "
      f"characters: {len(corpus.characters)}  objects: {len(corpus.objects)}")

# Every card is a small frozen record. Annotations (neighbors, characters,
# objects, contained objects) are the supervision signal.
anoria = corpus.location_by_name("town of anoria")
print(f"\n{anoria.name} [{anoria.category}]")
print(f"  neighbors:  {', '.join(anoria.neighbors)}")
print(f"  characters: {', '.join(anoria.characters)}")
print(f"  objects:    {', '.join(anoria.objects)}")

merchant = corpus.character_by_name("mysterious merchant")
print(f"\n{merchant.name}: carrying {list(merchant.carrying)}, "
      f"wearing {list(merchant.wearing)}, wielding {list(merchant.wielding)}")

pouch = corpus.object_by_name("pouch")
print(f"{pouch.name}: affordances {list(pouch.affordances)}, "
      f"contains {list(pouch.contained_examples)}")

# Validation reports dangling references, filler cards with content,
# affordance violations, and name collisions. The bundled corpus is clean.
report = validate(corpus)
print(f"\nvalidation issues: {len(report)}")

# Each task derives one example per (source card, annotated target) pair,
# grouped by the split of the source card so evaluation never leaks.
print("\nderived examples per task (train/valid/test):")
for task in TASKS:
    grouped = derive_examples(corpus, task)
    print(f"  {task:<10}" + " / ".join(str(len(grouped[s])) for s in ("train", "valid", "test")))

example = derive_examples(corpus, "location")["train"][0]
print(f"\none training pair:\n  context: {example.context_text[:78]}...\n  gold:    {example.gold}")
