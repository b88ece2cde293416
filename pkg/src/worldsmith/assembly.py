"""Grid world assembly and batch diversity analytics.

Worlds grow outward from a seeded center location: each placed location
tries to fill its open orthogonal neighbors, drawing a plain filler card
with probability P and otherwise the location scorer's top unused pick,
then gets populated with characters and objects and, at the end, container
contents. All randomness flows through one seeded generator per world.
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from .corpus import (
    CharacterCard,
    Corpus,
    LocationCard,
    ObjectCard,
    ValidationIssue,
    ValidationReport,
    card_text,
    corpus_hash,
    normalize_name,
)
from .ranking import Scorer, ScorerInput, rank

_SEED_MASK = (1 << 63) - 1

WORLD_FORMAT_VERSION = 1

# Orthogonal directions in fixed order: up, down, left, right.
DIRECTIONS = ((-1, 0), (1, 0), (0, -1), (0, 1))


class AssemblyError(Exception):
    """Base class for world generation problems."""


class InfeasibleConfigError(AssemblyError):
    """Requested location count cannot fit on the usable grid."""


class EmptyCorpusError(AssemblyError):
    """Corpus lacks the cards generation needs."""


class GridInvariantError(AssemblyError):
    """A grid edit would violate a world invariant."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class GenerationConfig:
    grid_width: int = 8
    grid_height: int = 8
    max_locations: int = 50
    filler_probability: float = 0.15
    blocked_fraction: float = 0.1
    extra_connect_prob: float = 0.5
    min_score_threshold: float | None = None
    seed: int = 0
    feature_mode: str = "name_and_description"
    # Population shape: geometric counts keep most locations lightly filled
    # while allowing the occasional crowded room.
    population_geometric_p: float = 0.5
    max_characters_per_location: int = 15
    max_objects_per_location: int = 15
    max_contained_per_object: int = 3

    def validate(self) -> None:
        if self.grid_width < 1 or self.grid_height < 1:
            raise InfeasibleConfigError("grid must be at least 1x1")
        if not 0 <= self.filler_probability <= 1:
            raise InfeasibleConfigError("filler_probability must be in [0, 1]")
        if not 0 <= self.blocked_fraction < 1:
            raise InfeasibleConfigError("blocked_fraction must be in [0, 1)")
        if self.max_locations < 1:
            raise InfeasibleConfigError("max_locations must be >= 1")
        if not 0 < self.population_geometric_p <= 1:
            raise InfeasibleConfigError("population_geometric_p must be in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "grid_width": self.grid_width,
            "grid_height": self.grid_height,
            "max_locations": self.max_locations,
            "filler_probability": self.filler_probability,
            "blocked_fraction": self.blocked_fraction,
            "extra_connect_prob": self.extra_connect_prob,
            "min_score_threshold": self.min_score_threshold,
            "seed": self.seed,
            "feature_mode": self.feature_mode,
        }


@dataclass
class PlacedObject:
    card: ObjectCard
    contains: list[ObjectCard] = field(default_factory=list)


@dataclass
class PlacedLocation:
    location: LocationCard
    characters: list[CharacterCard] = field(default_factory=list)
    objects: list[PlacedObject] = field(default_factory=list)


Cell = tuple[int, int]


class WorldGrid:
    """2-D cell grid holding blocked cells, placed locations, and exits."""

    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise GridInvariantError("invalid_dims", "grid must be at least 1x1")
        self.width = width
        self.height = height
        self.blocked: set[Cell] = set()
        self.placed: dict[Cell, PlacedLocation] = {}
        self.exits: set[frozenset] = set()

    @property
    def center(self) -> Cell:
        return (self.height // 2, self.width // 2)

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def adjacent(self, cell: Cell) -> list[Cell]:
        r, c = cell
        return [(r + dr, c + dc) for dr, dc in DIRECTIONS if self.in_bounds((r + dr, c + dc))]

    def is_empty(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.blocked and cell not in self.placed

    def block(self, cell: Cell) -> None:
        if cell in self.placed:
            raise GridInvariantError("occupied_cell", f"cell {cell} is already filled")
        self.blocked.add(cell)

    def place(self, cell: Cell, placed: PlacedLocation) -> None:
        if not self.in_bounds(cell):
            raise GridInvariantError("out_of_bounds", f"cell {cell} is outside the grid")
        if cell in self.blocked:
            raise GridInvariantError("blocked_cell", f"cell {cell} is blocked")
        if cell in self.placed:
            raise GridInvariantError("occupied_cell", f"cell {cell} is already filled")
        if not placed.location.is_filler:
            folded = normalize_name(placed.location.name)
            for other in self.placed.values():
                if not other.location.is_filler and normalize_name(other.location.name) == folded:
                    raise GridInvariantError(
                        "duplicate_location",
                        f"location {placed.location.name!r} is already on the map",
                    )
        self.placed[cell] = placed

    def clear(self, cell: Cell) -> None:
        self.placed.pop(cell, None)
        self.exits = {e for e in self.exits if cell not in e}

    def open_exit(self, a: Cell, b: Cell) -> None:
        if a not in self.placed or b not in self.placed:
            raise GridInvariantError("exit_into_empty", f"exit {a}-{b} touches an unfilled cell")
        if b not in self.adjacent(a):
            raise GridInvariantError("exit_not_adjacent", f"cells {a} and {b} are not adjacent")
        self.exits.add(frozenset((a, b)))

    def exit_count(self, cell: Cell) -> int:
        return sum(1 for e in self.exits if cell in e)

    def exit_cells(self, cell: Cell) -> list[Cell]:
        out = []
        for e in self.exits:
            if cell in e:
                (other,) = e - {cell}
                out.append(other)
        return sorted(out)


@dataclass
class GameWorld:
    grid: WorldGrid
    config: GenerationConfig
    provenance: dict
    created_at: str = ""


def _cell_index(grid: WorldGrid, cell: Cell) -> int:
    return cell[0] * grid.width + cell[1]


def world_to_dict(world: GameWorld) -> dict:
    """Export schema: cells in row-major order, exits as index pairs.

    Deliberately excludes the creation timestamp so a fixed seed yields
    byte-identical exports.
    """
    grid = world.grid
    cells = []
    for r in range(grid.height):
        for c in range(grid.width):
            cell = (r, c)
            record: dict = {"index": _cell_index(grid, cell), "row": r, "col": c}
            if cell in grid.blocked:
                record["state"] = "blocked"
            elif cell in grid.placed:
                placed = grid.placed[cell]
                record["state"] = "filled"
                record["location"] = {
                    "id": placed.location.id,
                    "name": placed.location.name,
                    "category": placed.location.category,
                    "is_filler": placed.location.is_filler,
                }
                record["characters"] = [
                    {"id": ch.id, "name": ch.name} for ch in placed.characters
                ]
                record["objects"] = [
                    {
                        "id": po.card.id,
                        "name": po.card.name,
                        "contains": [{"id": o.id, "name": o.name} for o in po.contains],
                    }
                    for po in placed.objects
                ]
            else:
                record["state"] = "empty"
            cells.append(record)
    exits = sorted(
        sorted((_cell_index(grid, a), _cell_index(grid, b))) for a, b in map(tuple, grid.exits)
    )
    return {
        "format": "world",
        "version": WORLD_FORMAT_VERSION,
        "grid": {"width": grid.width, "height": grid.height},
        "cells": cells,
        "exits": exits,
        "config": world.config.to_dict(),
        "provenance": world.provenance,
    }


def world_json(world: GameWorld) -> str:
    return json.dumps(world_to_dict(world), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _truncated_geometric(rng: np.random.Generator, p: float, cap: int) -> int:
    n = 0
    while n < cap and rng.random() >= p:
        n += 1
    return n


def _rank_names(scorer: Scorer, context: str, names: list[str], texts: dict[str, str], task: str):
    inp = ScorerInput(context, tuple(texts[n] for n in names), task)
    scores = scorer.score(inp)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return order, scores


class _CandidateCache:
    """Per-run candidate pools and their encoded texts."""

    def __init__(self, corpus: Corpus, feature_mode: str):
        self.corpus = corpus
        self.feature_mode = feature_mode
        self.character_names = sorted(
            {c.name for c in corpus.characters.values() if c.name.strip()}
        )
        self.object_names = sorted({o.name for o in corpus.objects.values() if o.name.strip()})
        self.character_texts = {
            c.name: card_text(c, feature_mode) for c in corpus.characters.values()
        }
        self.object_texts = {o.name: card_text(o, feature_mode) for o in corpus.objects.values()}
        # Containers rank candidates by name alone: contained annotations are
        # free-written and often have no descriptions to lean on.
        self.container_texts = {name: name for name in self.object_names}
        self.location_texts = {
            c.name: card_text(c, feature_mode) for c in corpus.locations.values()
        }


def populate_location(
    location: LocationCard,
    scorers: dict[str, Scorer],
    config: GenerationConfig,
    rng: np.random.Generator,
    cache: _CandidateCache | None = None,
    corpus: Corpus | None = None,
) -> PlacedLocation:
    """Draw character/object counts, then take that many top-ranked candidates."""
    if cache is None:
        if corpus is None:
            raise ValueError("populate_location needs a corpus or a candidate cache")
        cache = _CandidateCache(corpus, config.feature_mode)
    context = card_text(location, config.feature_mode)
    placed = PlacedLocation(location=location)

    n_chars = _truncated_geometric(
        rng, config.population_geometric_p, config.max_characters_per_location
    )
    if n_chars and cache.character_names:
        order, _ = _rank_names(
            scorers["character"], context, cache.character_names, cache.character_texts,
            "character",
        )
        for i in order[:n_chars]:
            card = cache.corpus.character_by_name(cache.character_names[i])
            if card is not None:
                placed.characters.append(card)

    n_objs = 1 + _truncated_geometric(
        rng, config.population_geometric_p, config.max_objects_per_location - 1
    )
    if cache.object_names:
        order, _ = _rank_names(
            scorers["object"], context, cache.object_names, cache.object_texts, "object"
        )
        for i in order[:n_objs]:
            card = cache.corpus.object_by_name(cache.object_names[i])
            if card is not None:
                placed.objects.append(PlacedObject(card=card))
    return placed


def fill_containers(
    placed: PlacedLocation,
    scorer: Scorer,
    config: GenerationConfig,
    rng: np.random.Generator,
    cache: _CandidateCache | None = None,
    corpus: Corpus | None = None,
) -> PlacedLocation:
    """Attach top-ranked contents to container objects; contents stay leaves."""
    if cache is None:
        if corpus is None:
            raise ValueError("fill_containers needs a corpus or a candidate cache")
        cache = _CandidateCache(corpus, config.feature_mode)
    for po in placed.objects:
        if "container" not in po.card.affordances:
            continue
        count = _truncated_geometric(
            rng, config.population_geometric_p, config.max_contained_per_object
        )
        if not count:
            continue
        host_folded = normalize_name(po.card.name)
        names = [n for n in cache.object_names if normalize_name(n) != host_folded]
        if not names:
            continue
        order, _ = _rank_names(
            scorer, po.card.name, names, cache.container_texts, "container"
        )
        for i in order[:count]:
            card = cache.corpus.object_by_name(names[i])
            if card is not None:
                po.contains.append(card)
    return placed


def create_world(
    corpus: Corpus, scorers: dict[str, Scorer], config: GenerationConfig
) -> GameWorld:
    """Assemble one world: block cells, seed the center, grow the frontier."""
    config.validate()
    grid = WorldGrid(config.grid_width, config.grid_height)
    rng = np.random.default_rng(config.seed & _SEED_MASK)

    non_filler = sorted(corpus.non_filler_locations(), key=lambda c: c.id)
    if not non_filler:
        raise EmptyCorpusError("corpus has no non-filler locations")
    fillers = sorted(corpus.filler_locations(), key=lambda c: c.id)

    all_cells = [(r, c) for r in range(grid.height) for c in range(grid.width)]
    n_blocked = int(config.blocked_fraction * len(all_cells))
    blockable = [cell for cell in all_cells if cell != grid.center]
    if n_blocked:
        picks = rng.choice(len(blockable), size=min(n_blocked, len(blockable)), replace=False)
        for i in picks:
            grid.block(blockable[i])
    usable = len(all_cells) - len(grid.blocked)
    if config.max_locations > usable:
        raise InfeasibleConfigError(
            f"max_locations={config.max_locations} exceeds {usable} usable cells"
        )

    cache = _CandidateCache(corpus, config.feature_mode)
    location_names = [c.name for c in non_filler]
    used: set[str] = set()

    def unused_names() -> list[str]:
        return [n for n in location_names if normalize_name(n) not in used]

    center_card = non_filler[int(rng.integers(len(non_filler)))]
    used.add(normalize_name(center_card.name))
    grid.place(grid.center, populate_location(center_card, scorers, config, rng, cache))

    count = 1
    frontier: deque[Cell] = deque([grid.center])
    while frontier and count < config.max_locations:
        cell = frontier.popleft()
        source = grid.placed[cell].location
        context = card_text(source, config.feature_mode)
        open_dirs = [d for d in DIRECTIONS if grid.is_empty((cell[0] + d[0], cell[1] + d[1]))]
        if not open_dirs:
            continue
        stop_expanding = False
        for i in rng.permutation(len(open_dirs)):
            if count >= config.max_locations or stop_expanding:
                break
            d = open_dirs[i]
            target = (cell[0] + d[0], cell[1] + d[1])
            if not grid.is_empty(target):
                continue

            card: LocationCard | None = None
            if rng.random() < config.filler_probability and fillers:
                card = fillers[int(rng.integers(len(fillers)))]
            else:
                names = unused_names()
                if names:
                    order, scores = _rank_names(
                        scorers["location"], context, names, cache.location_texts, "location"
                    )
                    best = order[0]
                    if (
                        config.min_score_threshold is not None
                        and scores[best] < config.min_score_threshold
                    ):
                        stop_expanding = True
                        continue
                    card = corpus.location_by_name(names[best])
                    used.add(normalize_name(card.name))
                elif fillers:
                    # Non-filler pool exhausted: keep growing with fillers.
                    card = fillers[int(rng.integers(len(fillers)))]
            if card is None:
                continue

            grid.place(target, populate_location(card, scorers, config, rng, cache))
            grid.open_exit(cell, target)
            for nb in sorted(grid.adjacent(target)):
                if nb == cell or nb not in grid.placed:
                    continue
                if rng.random() < config.extra_connect_prob:
                    grid.open_exit(target, nb)
            frontier.append(target)
            count += 1

    for cell in sorted(grid.placed):
        fill_containers(grid.placed[cell], scorers["container"], config, rng, cache)

    provenance = {
        "scorers": {task: scorers[task].name for task in sorted(scorers)},
        "corpus_hash": corpus_hash(corpus),
    }
    return GameWorld(
        grid=grid,
        config=config,
        provenance=provenance,
        created_at=datetime.now(timezone.utc).isoformat(),
    )


def generate_batch(corpus: Corpus, scorers, config: GenerationConfig, count: int):
    """Generate count worlds with per-world seeds config.seed + index.

    scorers may be a task->Scorer mapping (reused across worlds; only safe
    for stateless scorers) or a callable seed->mapping built fresh per world.
    """
    worlds = []
    for i in range(count):
        world_config = replace(config, seed=config.seed + i)
        world_scorers = scorers(world_config.seed) if callable(scorers) else scorers
        worlds.append(create_world(corpus, world_scorers, world_config))
    return worlds


def validate_world(world: GameWorld) -> ValidationReport:
    """Check every grid invariant plus reachability from the center."""
    grid = world.grid
    issues: list[ValidationIssue] = []

    def ref(cell: Cell) -> str:
        return f"cell:{cell[0]},{cell[1]}"

    if not grid.placed:
        issues.append(ValidationIssue("error", "world", "world has no filled cells"))

    if len(grid.placed) > world.config.max_locations:
        issues.append(
            ValidationIssue(
                "error",
                "world",
                f"{len(grid.placed)} filled cells exceed max_locations="
                f"{world.config.max_locations}",
            )
        )

    for e in grid.exits:
        pair = sorted(tuple(e))
        if len(pair) != 2:
            issues.append(ValidationIssue("error", "world", f"degenerate exit {pair}"))
            continue
        a, b = pair
        if a not in grid.placed or b not in grid.placed:
            issues.append(
                ValidationIssue("error", ref(a), f"exit {a}-{b} touches an unfilled cell")
            )
        if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
            issues.append(
                ValidationIssue("error", ref(a), f"exit {a}-{b} joins non-adjacent cells")
            )

    for cell in grid.placed:
        if grid.exit_count(cell) > 4:
            issues.append(ValidationIssue("error", ref(cell), "more than 4 exits"))
        if cell in grid.blocked:
            issues.append(ValidationIssue("error", ref(cell), "blocked cell is filled"))

    for cell in grid.blocked:
        if any(cell in e for e in grid.exits):
            issues.append(ValidationIssue("error", ref(cell), "blocked cell has exits"))

    seen: dict[str, Cell] = {}
    for cell in sorted(grid.placed):
        placed = grid.placed[cell]
        if placed.location.is_filler:
            continue
        folded = normalize_name(placed.location.name)
        if folded in seen:
            issues.append(
                ValidationIssue(
                    "error",
                    ref(cell),
                    f"non-filler location {placed.location.name!r} also at {seen[folded]}",
                )
            )
        else:
            seen[folded] = cell

    for cell in sorted(grid.placed):
        placed = grid.placed[cell]
        char_names = [normalize_name(c.name) for c in placed.characters]
        if len(set(char_names)) != len(char_names):
            issues.append(ValidationIssue("error", ref(cell), "duplicate character in cell"))
        obj_names = [normalize_name(po.card.name) for po in placed.objects]
        if len(set(obj_names)) != len(obj_names):
            issues.append(ValidationIssue("error", ref(cell), "duplicate object in cell"))
        for po in placed.objects:
            if po.contains and "container" not in po.card.affordances:
                issues.append(
                    ValidationIssue(
                        "error",
                        ref(cell),
                        f"non-container object {po.card.name!r} has contents",
                    )
                )

    if grid.placed:
        start = grid.center if grid.center in grid.placed else sorted(grid.placed)[0]
        reachable = {start}
        queue = deque([start])
        while queue:
            cell = queue.popleft()
            for other in grid.exit_cells(cell):
                if other not in reachable:
                    reachable.add(other)
                    queue.append(other)
        for cell in sorted(grid.placed):
            if cell not in reachable:
                issues.append(
                    ValidationIssue("error", ref(cell), "not reachable from the center")
                )

    return ValidationReport(tuple(issues))


@dataclass
class DiversityReport:
    location_counts: Counter
    worlds_containing: Counter
    coverage: dict[str, list[int]]
    locations_per_map: Counter
    characters_per_location: Counter
    objects_per_location: Counter
    num_worlds: int

    def to_dict(self) -> dict:
        return {
            "num_worlds": self.num_worlds,
            "location_counts": dict(sorted(self.location_counts.items())),
            "worlds_containing": dict(sorted(self.worlds_containing.items())),
            "coverage": self.coverage,
            "locations_per_map": {str(k): v for k, v in sorted(self.locations_per_map.items())},
            "characters_per_location": {
                str(k): v for k, v in sorted(self.characters_per_location.items())
            },
            "objects_per_location": {
                str(k): v for k, v in sorted(self.objects_per_location.items())
            },
        }


def diversity_report(world_dicts: list[dict]) -> DiversityReport:
    """Batch analytics over exported world documents."""
    if not world_dicts:
        raise ValueError("no worlds to analyze")
    location_counts: Counter = Counter()
    worlds_containing: Counter = Counter()
    locations_per_map: Counter = Counter()
    characters_per_location: Counter = Counter()
    objects_per_location: Counter = Counter()
    seen = {"locations": set(), "characters": set(), "objects": set()}
    coverage: dict[str, list[int]] = {"locations": [], "characters": [], "objects": []}

    for doc in world_dicts:
        filled = [c for c in doc["cells"] if c.get("state") == "filled"]
        locations_per_map[len(filled)] += 1
        names_here = set()
        for cell in filled:
            name = cell["location"]["name"]
            location_counts[name] += 1
            names_here.add(name)
            seen["locations"].add(name)
            characters_per_location[len(cell.get("characters", []))] += 1
            objs = cell.get("objects", [])
            objects_per_location[len(objs)] += 1
            for ch in cell.get("characters", []):
                seen["characters"].add(ch["name"])
            for obj in objs:
                seen["objects"].add(obj["name"])
                for inner in obj.get("contains", []):
                    seen["objects"].add(inner["name"])
        for name in names_here:
            worlds_containing[name] += 1
        for key in coverage:
            coverage[key].append(len(seen[key]))

    return DiversityReport(
        location_counts=location_counts,
        worlds_containing=worlds_containing,
        coverage=coverage,
        locations_per_map=locations_per_map,
        characters_per_location=characters_per_location,
        objects_per_location=objects_per_location,
        num_worlds=len(world_dicts),
    )


def write_diversity_csv(report: DiversityReport, coverage_path, frequency_path, histogram_path):
    """CSV series shaped for replotting coverage, frequency, and size histograms."""
    import csv

    with open(coverage_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["maps_generated", "locations", "characters", "objects"])
        for i in range(report.num_worlds):
            writer.writerow(
                [
                    i + 1,
                    report.coverage["locations"][i],
                    report.coverage["characters"][i],
                    report.coverage["objects"][i],
                ]
            )
    with open(frequency_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["location", "placements", "worlds_containing", "fraction_of_worlds"])
        for name, count in report.location_counts.most_common():
            writer.writerow(
                [
                    name,
                    count,
                    report.worlds_containing[name],
                    report.worlds_containing[name] / report.num_worlds,
                ]
            )
    with open(histogram_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["histogram", "bin", "count"])
        for label, counter in (
            ("locations_per_map", report.locations_per_map),
            ("characters_per_location", report.characters_per_location),
            ("objects_per_location", report.objects_per_location),
        ):
            for bin_value, count in sorted(counter.items()):
                writer.writerow([label, bin_value, count])
