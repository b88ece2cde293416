"""Assemble a complete playable world on a grid and print it as a map.

Run from the repo root:  python3 demos/03_build_a_world.py
"""

from worldsmith import SAMPLE_CORPUS_PATH
from worldsmith.assembly import GenerationConfig, create_world, validate_world, world_to_dict
from worldsmith.corpus import TASKS, load_corpus
from worldsmith.ranking import IRScorer

corpus = load_corpus(SAMPLE_CORPUS_PATH)

# Growth starts from a random center location. Each placed location tries to
# fill its open sides: with probability P a plain filler, otherwise the
# scorer's top-ranked unused location given the source's name+description.
config = GenerationConfig(
    grid_width=7, grid_height=5, max_locations=14,
    filler_probability=0.15, blocked_fraction=0.1,
    extra_connect_prob=0.5, seed=20_25,
)
scorer = IRScorer.from_corpus(corpus)
world = create_world(corpus, {task: scorer for task in TASKS}, config)

report = validate_world(world)
print(f"{len(world.grid.placed)} locations, {len(world.grid.exits)} exits, "
      f"{len(report)} validation issues\n")

# Crude terminal map: # blocked, . empty, initials for placed locations.
grid = world.grid
legend = {}
for r in range(grid.height):
    row = []
    for c in range(grid.width):
        cell = (r, c)
        if cell in grid.blocked:
            row.append("##")
        elif cell in grid.placed:
            name = grid.placed[cell].location.name
            tag = "".join(w[0] for w in name.split()[:2]).upper().ljust(2)
            legend[tag.strip()] = name
            row.append(tag)
        else:
            row.append(" .")
    print(" ".join(row))
print()
for tag, name in sorted(legend.items()):
    print(f"  {tag:<3} {name}")

center = grid.placed[grid.center]
print(f"\ninside {center.location.name}:")
print(f"  characters: {[c.name for c in center.characters]}")
for po in center.objects:
    inside = f" (inside: {[o.name for o in po.contains]})" if po.contains else ""
    print(f"  object: {po.card.name}{inside}")

doc = world_to_dict(world)
print(f"\nexport: {len(doc['cells'])} cells, {len(doc['exits'])} exit pairs, "
      f"scorers {doc['provenance']['scorers']}")
