"""Generate a batch of worlds and analyze its diversity: placement
frequency, coverage curves, and per-location population histograms.

Run from the repo root:  python3 demos/04_batch_diversity.py
"""

from worldsmith.assembly import GenerationConfig, diversity_report, generate_batch, world_to_dict
from worldsmith.corpus import TASKS
from worldsmith.ranking import RandomScorer
from worldsmith.synthetic import make_clustered_corpus

corpus = make_clustered_corpus(seed=0)
config = GenerationConfig(grid_width=6, grid_height=6, max_locations=16, seed=0)


def uniform_scorers(world_seed):
    return {task: RandomScorer(world_seed * 4 + i) for i, task in enumerate(TASKS)}


worlds = generate_batch(corpus, uniform_scorers, config, 300)
report = diversity_report([world_to_dict(w) for w in worlds])

print(f"{report.num_worlds} worlds generated")
print("\nmost placed locations (share of worlds):")
for name, count in report.location_counts.most_common(5):
    share = report.worlds_containing[name] / report.num_worlds
    print(f"  {name:<28} {count:4d} placements, in {100 * share:4.1f}% of worlds")

print("\ncoverage after m maps (distinct elements seen so far):")
for m in (1, 10, 50, 100, 300):
    i = m - 1
    print(f"  m={m:<4} locations {report.coverage['locations'][i]:>3}  "
          f"characters {report.coverage['characters'][i]:>3}  "
          f"objects {report.coverage['objects'][i]:>3}")

print("\nlocations per map:")
for size, count in sorted(report.locations_per_map.items()):
    print(f"  {size:>3} locations: {'#' * (count // 4)} {count}")

histogram = report.characters_per_location
mode_bin = max(histogram, key=histogram.get)
print(f"\ncharacters-per-location mode: {mode_bin} "
      f"(most locations hold {mode_bin} characters; a few hold many more)")
