"""Element cards, corpus loading and validation, splits, and supervised examples.

A corpus is a single JSON document holding location, character, and object
cards plus per-task train/valid/test splits. Cards are immutable after load;
operations that change splits return a new Corpus value.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field, replace

TASKS = ("location", "character", "object", "container")
SPLIT_NAMES = ("train", "valid", "test")
FEATURE_MODES = ("name_only", "name_and_description")

# Closed affordance vocabulary used by the multi-label classifier and the
# container-filling step.  "wieldable" covers weapon-like objects.
AFFORDANCES = (
    "gettable",
    "wearable",
    "wieldable",
    "drinkable",
    "edible",
    "container",
    "surface",
)

# Plain, repeatable locations interleaved between the crowd-sourced ones.
# Shipped as (name, description) pairs; synthetic corpora reuse the same set.
FILLER_LOCATIONS = (
    ("abandoned shack", "A leaning shack with a caved roof and a dirt floor."),
    ("empty closet", "A cramped closet holding nothing but dust."),
    ("storage room", "Shelves line the walls of this plain storage room."),
    ("hallway", "A bare hallway connecting one place to another."),
    ("unused chamber", "An unused chamber, swept once and then forgotten."),
    ("dusty corridor", "A corridor where footprints show in the dust."),
    ("narrow passage", "A narrow passage barely wide enough to walk."),
    ("old cellar", "A cool cellar smelling faintly of earth."),
    ("dim stairwell", "A stairwell lit by a single guttering sconce."),
    ("small courtyard", "A small courtyard of cracked flagstones."),
    ("quiet alley", "An alley where nothing much ever happens."),
    ("dirt path", "A stretch of packed dirt path."),
    ("overgrown yard", "A yard half swallowed by weeds."),
    ("plain antechamber", "A plain antechamber with a bench and little else."),
    ("abandoned stall", "A market stall left to the weather."),
    ("empty pantry", "A pantry of bare shelves and mouse droppings."),
    ("collapsed tunnel", "A tunnel pinched shut by fallen stone at one end."),
    ("forgotten landing", "A stair landing nobody seems to use."),
    ("bare clearing", "A clearing of flattened grass."),
    ("shaded nook", "A shaded nook beneath an overhang."),
    ("gravel lot", "A lot of loose gravel and cart ruts."),
    ("crumbling archway", "A freestanding archway going nowhere in particular."),
    ("low culvert", "A low stone culvert, dry most of the year."),
    ("side passage", "A side passage splitting off the main way."),
    ("empty loft", "A loft holding only straw and cobwebs."),
)


class CorpusError(Exception):
    """Base class for corpus problems."""


class CorpusReadError(CorpusError):
    """Corpus file missing or unreadable."""


class CorpusParseError(CorpusError):
    """Corpus file is not valid JSON or not the expected shape."""


class DuplicateCardError(CorpusError):
    """Two cards of the same kind share an id."""


class UnknownTaskError(CorpusError):
    """Task name outside the four placement tasks."""


class MissingSplitsError(CorpusError):
    """Operation needs splits that the corpus does not define."""


class InvalidRatiosError(CorpusError):
    """Split ratios are not positive fractions summing to 1."""


def normalize_name(name: str) -> str:
    """Case-fold and whitespace-normalize a name for resolution."""
    return " ".join(name.split()).casefold()


@dataclass(frozen=True)
class LocationCard:
    id: str
    name: str
    description: str = ""
    background: str = ""
    neighbors: tuple[str, ...] = ()
    characters: tuple[str, ...] = ()
    objects: tuple[str, ...] = ()
    category: str = "other"
    is_filler: bool = False


@dataclass(frozen=True)
class CharacterCard:
    id: str
    name: str
    persona: str = ""
    description: str = ""
    carrying: tuple[str, ...] = ()
    wearing: tuple[str, ...] = ()
    wielding: tuple[str, ...] = ()


@dataclass(frozen=True)
class ObjectCard:
    id: str
    name: str
    description: str = ""
    affordances: tuple[str, ...] = ()
    contained_examples: tuple[str, ...] = ()
    size_tag: str | None = None


Card = LocationCard | CharacterCard | ObjectCard


@dataclass(frozen=True)
class PlacementExample:
    """One supervised (context -> gold candidate) pair for a task."""

    task: str
    context_text: str
    gold: str
    source_id: str


@dataclass(frozen=True)
class ValidationIssue:
    severity: str  # "error" | "warning"
    card_id: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    def __len__(self) -> int:
        return len(self.issues)


@dataclass(frozen=True)
class Corpus:
    """Immutable collection of cards plus per-task splits over card ids."""

    locations: dict[str, LocationCard] = field(default_factory=dict)
    characters: dict[str, CharacterCard] = field(default_factory=dict)
    objects: dict[str, ObjectCard] = field(default_factory=dict)
    splits: dict[str, dict[str, tuple[str, ...]]] = field(default_factory=dict)

    def location_by_name(self, name: str) -> LocationCard | None:
        return self._name_index("locations").get(normalize_name(name))

    def character_by_name(self, name: str) -> CharacterCard | None:
        return self._name_index("characters").get(normalize_name(name))

    def object_by_name(self, name: str) -> ObjectCard | None:
        return self._name_index("objects").get(normalize_name(name))

    def card_by_name(self, kind: str, name: str) -> Card | None:
        lookup = {
            "location": self.location_by_name,
            "character": self.character_by_name,
            "object": self.object_by_name,
        }
        if kind not in lookup:
            raise UnknownTaskError(f"unknown element kind: {kind!r}")
        return lookup[kind](name)

    def non_filler_locations(self) -> list[LocationCard]:
        return [c for c in self.locations.values() if not c.is_filler]

    def filler_locations(self) -> list[LocationCard]:
        return [c for c in self.locations.values() if c.is_filler]

    def _name_index(self, collection: str) -> dict[str, Card]:
        # First card wins on fold collisions; validate() reports the clash.
        cache = self.__dict__.setdefault("_name_indexes", {})
        if collection not in cache:
            index: dict[str, Card] = {}
            for card in getattr(self, collection).values():
                index.setdefault(normalize_name(card.name), card)
            cache[collection] = index
        return cache[collection]


def _as_str_tuple(value, key: str, card_id: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise CorpusParseError(f"card {card_id!r}: field {key!r} must be a list of strings")
    return tuple(value)


def _card_id(raw: dict, kind: str, position: int) -> str:
    cid = raw.get("id")
    if cid is not None:
        if not isinstance(cid, str) or not cid.strip():
            raise CorpusParseError(f"{kind} card at index {position} has a non-string or blank id")
        return cid
    name = raw.get("name", "")
    if isinstance(name, str) and name.strip():
        return normalize_name(name)
    raise CorpusParseError(f"{kind} card at index {position} has neither id nor name")


def _parse_location(raw: dict, position: int, is_filler: bool) -> LocationCard:
    cid = _card_id(raw, "location", position)
    return LocationCard(
        id=cid,
        name=str(raw.get("name", "")),
        description=str(raw.get("description", "")),
        background=str(raw.get("background", "")),
        neighbors=_as_str_tuple(raw.get("neighbors"), "neighbors", cid),
        characters=_as_str_tuple(raw.get("characters"), "characters", cid),
        objects=_as_str_tuple(raw.get("objects"), "objects", cid),
        category=str(raw.get("category", "other")),
        is_filler=bool(raw.get("is_filler", is_filler)),
    )


def _parse_character(raw: dict, position: int) -> CharacterCard:
    cid = _card_id(raw, "character", position)
    return CharacterCard(
        id=cid,
        name=str(raw.get("name", "")),
        persona=str(raw.get("persona", "")),
        description=str(raw.get("description", "")),
        carrying=_as_str_tuple(raw.get("carrying"), "carrying", cid),
        wearing=_as_str_tuple(raw.get("wearing"), "wearing", cid),
        wielding=_as_str_tuple(raw.get("wielding"), "wielding", cid),
    )


def _parse_object(raw: dict, position: int) -> ObjectCard:
    cid = _card_id(raw, "object", position)
    size = raw.get("size_tag")
    return ObjectCard(
        id=cid,
        name=str(raw.get("name", "")),
        description=str(raw.get("description", "")),
        affordances=_as_str_tuple(raw.get("affordances"), "affordances", cid),
        contained_examples=_as_str_tuple(raw.get("contained_examples"), "contained_examples", cid),
        size_tag=str(size) if size is not None else None,
    )


def _parse_splits(raw) -> dict[str, dict[str, tuple[str, ...]]]:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise CorpusParseError("splits must be an object keyed by task")
    splits: dict[str, dict[str, tuple[str, ...]]] = {}
    for task, by_split in raw.items():
        if task not in TASKS:
            raise CorpusParseError(f"splits mention unknown task {task!r}")
        if not isinstance(by_split, dict):
            raise CorpusParseError(f"splits[{task!r}] must be an object keyed by split name")
        splits[task] = {}
        for split_name, ids in by_split.items():
            if split_name not in SPLIT_NAMES:
                raise CorpusParseError(f"splits[{task!r}] has unknown split {split_name!r}")
            splits[task][split_name] = _as_str_tuple(ids, split_name, task)
    return splits


def parse_corpus(document: dict) -> Corpus:
    """Build a Corpus from an already-decoded corpus document."""
    if not isinstance(document, dict):
        raise CorpusParseError("corpus document must be a JSON object")

    locations: dict[str, LocationCard] = {}
    for pos, raw in enumerate(document.get("locations", []) or []):
        card = _parse_location(raw, pos, is_filler=False)
        if card.id in locations:
            raise DuplicateCardError(f"duplicate location id {card.id!r}")
        locations[card.id] = card
    for pos, raw in enumerate(document.get("filler_locations", []) or []):
        card = _parse_location(raw, pos, is_filler=True)
        if card.id in locations:
            raise DuplicateCardError(f"duplicate location id {card.id!r}")
        locations[card.id] = card

    characters: dict[str, CharacterCard] = {}
    for pos, raw in enumerate(document.get("characters", []) or []):
        card = _parse_character(raw, pos)
        if card.id in characters:
            raise DuplicateCardError(f"duplicate character id {card.id!r}")
        characters[card.id] = card

    objects: dict[str, ObjectCard] = {}
    for pos, raw in enumerate(document.get("objects", []) or []):
        card = _parse_object(raw, pos)
        if card.id in objects:
            raise DuplicateCardError(f"duplicate object id {card.id!r}")
        objects[card.id] = card

    return Corpus(
        locations=locations,
        characters=characters,
        objects=objects,
        splits=_parse_splits(document.get("splits")),
    )


def load_corpus(path) -> Corpus:
    """Load a corpus JSON file. Dangling references are left to validate()."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CorpusReadError(f"cannot read corpus file {path}: {exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusParseError(f"corpus file {path} is not valid JSON: {exc}") from exc
    return parse_corpus(document)


def _location_to_dict(card: LocationCard) -> dict:
    return {
        "id": card.id,
        "name": card.name,
        "description": card.description,
        "background": card.background,
        "neighbors": list(card.neighbors),
        "characters": list(card.characters),
        "objects": list(card.objects),
        "category": card.category,
    }


def _character_to_dict(card: CharacterCard) -> dict:
    return {
        "id": card.id,
        "name": card.name,
        "persona": card.persona,
        "description": card.description,
        "carrying": list(card.carrying),
        "wearing": list(card.wearing),
        "wielding": list(card.wielding),
    }


def _object_to_dict(card: ObjectCard) -> dict:
    out = {
        "id": card.id,
        "name": card.name,
        "description": card.description,
        "affordances": list(card.affordances),
        "contained_examples": list(card.contained_examples),
    }
    if card.size_tag is not None:
        out["size_tag"] = card.size_tag
    return out


def serialize_corpus(corpus: Corpus) -> dict:
    return {
        "locations": [_location_to_dict(c) for c in corpus.locations.values() if not c.is_filler],
        "filler_locations": [
            _location_to_dict(c) for c in corpus.locations.values() if c.is_filler
        ],
        "characters": [_character_to_dict(c) for c in corpus.characters.values()],
        "objects": [_object_to_dict(c) for c in corpus.objects.values()],
        "splits": {
            task: {name: list(ids) for name, ids in by_split.items()}
            for task, by_split in corpus.splits.items()
        },
    }


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(serialize_corpus(corpus), fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def corpus_hash(corpus: Corpus) -> str:
    """Stable content hash used in world provenance."""
    payload = json.dumps(serialize_corpus(corpus), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _check_duplicates(issues, card_id: str, label: str, names: tuple[str, ...]) -> None:
    seen: set[str] = set()
    for name in names:
        folded = normalize_name(name)
        if folded in seen:
            issues.append(
                ValidationIssue("error", card_id, f"duplicate {label} entry {name!r}")
            )
        seen.add(folded)


def validate(corpus: Corpus) -> ValidationReport:
    """Check every corpus invariant; problems come back as report entries."""
    issues: list[ValidationIssue] = []

    loc_names = {normalize_name(c.name) for c in corpus.locations.values() if c.name.strip()}
    char_names = {normalize_name(c.name) for c in corpus.characters.values() if c.name.strip()}
    obj_names = {normalize_name(c.name) for c in corpus.objects.values() if c.name.strip()}

    def dangling(card_id, label, names, known):
        for name in names:
            if normalize_name(name) not in known:
                issues.append(
                    ValidationIssue(
                        "error", card_id, f"{label} {name!r} does not resolve to any card"
                    )
                )

    for collection, kind in (
        (corpus.locations, "location"),
        (corpus.characters, "character"),
        (corpus.objects, "object"),
    ):
        by_folded: dict[str, list[str]] = {}
        for card in collection.values():
            if not card.name.strip():
                issues.append(ValidationIssue("error", card.id, "name is empty"))
            else:
                by_folded.setdefault(normalize_name(card.name), []).append(card.id)
        for folded, ids in by_folded.items():
            if len(ids) > 1:
                issues.append(
                    ValidationIssue(
                        "warning",
                        ids[1],
                        f"{kind} name {folded!r} collides with card {ids[0]!r} after folding",
                    )
                )

    for card in corpus.locations.values():
        _check_duplicates(issues, card.id, "neighbor", card.neighbors)
        _check_duplicates(issues, card.id, "character", card.characters)
        _check_duplicates(issues, card.id, "object", card.objects)
        dangling(card.id, "neighbor", card.neighbors, loc_names)
        dangling(card.id, "character", card.characters, char_names)
        dangling(card.id, "object", card.objects, obj_names)
        if card.is_filler and (card.neighbors or card.characters or card.objects):
            issues.append(
                ValidationIssue("error", card.id, "filler location has annotated content")
            )

    for card in corpus.characters.values():
        dangling(card.id, "carried object", card.carrying, obj_names)
        dangling(card.id, "worn object", card.wearing, obj_names)
        dangling(card.id, "wielded object", card.wielding, obj_names)
        folded_lists = [
            {normalize_name(n) for n in card.carrying},
            {normalize_name(n) for n in card.wearing},
            {normalize_name(n) for n in card.wielding},
        ]
        for a in range(3):
            for b in range(a + 1, 3):
                overlap = folded_lists[a] & folded_lists[b]
                if overlap:
                    issues.append(
                        ValidationIssue(
                            "error",
                            card.id,
                            f"object lists overlap on {sorted(overlap)}",
                        )
                    )

    for card in corpus.objects.values():
        seen = set()
        for label in card.affordances:
            if label not in AFFORDANCES:
                issues.append(
                    ValidationIssue("error", card.id, f"unknown affordance {label!r}")
                )
            if label in seen:
                issues.append(
                    ValidationIssue("error", card.id, f"duplicate affordance {label!r}")
                )
            seen.add(label)
        if card.contained_examples and "container" not in card.affordances:
            issues.append(
                ValidationIssue(
                    "error", card.id, "contained examples on a non-container object"
                )
            )
        dangling(card.id, "contained object", card.contained_examples, obj_names)

    for task, by_split in corpus.splits.items():
        universe = corpus.objects if task == "container" else corpus.locations
        claimed: dict[str, str] = {}
        for split_name, ids in by_split.items():
            for cid in ids:
                if cid not in universe:
                    issues.append(
                        ValidationIssue(
                            "warning", cid, f"split {task}/{split_name} lists unknown id"
                        )
                    )
                elif cid in claimed:
                    issues.append(
                        ValidationIssue(
                            "error",
                            cid,
                            f"id appears in both {task}/{claimed[cid]} and {task}/{split_name}",
                        )
                    )
                else:
                    claimed[cid] = split_name

    return ValidationReport(tuple(issues))


def card_text(card: Card, feature_mode: str = "name_and_description") -> str:
    """Encode a card as scorer text: its name, optionally with description."""
    if feature_mode not in FEATURE_MODES:
        raise ValueError(f"unknown feature mode {feature_mode!r}")
    if feature_mode == "name_only":
        return card.name
    description = getattr(card, "description", "")
    if isinstance(card, CharacterCard) and not description.strip():
        description = card.persona
    if not description.strip():
        return card.name
    return f"{card.name} . {description}"


def candidate_kind(task: str) -> str:
    """Element kind ranked as candidates for a task."""
    if task == "location":
        return "location"
    if task == "character":
        return "character"
    if task in ("object", "container"):
        return "object"
    raise UnknownTaskError(f"unknown task: {task!r}")


def candidate_text(corpus: Corpus, task: str, name: str, feature_mode: str) -> str:
    """Encode a candidate name for scoring; unresolved names encode as-is."""
    card = corpus.card_by_name(candidate_kind(task), name)
    if card is None:
        return name
    return card_text(card, feature_mode)


def candidate_texts(
    corpus: Corpus, task: str, names, feature_mode: str
) -> dict[str, str]:
    return {name: candidate_text(corpus, task, name, feature_mode) for name in names}


def task_candidate_pool(corpus: Corpus, task: str) -> list[str]:
    """Every corpus element placeable for a task, by canonical card name."""
    kind = candidate_kind(task)
    if kind == "location":
        cards = corpus.non_filler_locations()
    elif kind == "character":
        cards = list(corpus.characters.values())
    else:
        cards = list(corpus.objects.values())
    return sorted({c.name for c in cards if c.name.strip()})


def _canonical_gold(corpus: Corpus, task: str, name: str) -> str:
    card = corpus.card_by_name(candidate_kind(task), name)
    return card.name if card is not None else name


def _task_sources(corpus: Corpus, task: str):
    """(source card, annotated target names) pairs for a task."""
    if task in ("location", "character", "object"):
        attr = {"location": "neighbors", "character": "characters", "object": "objects"}[task]
        for card in corpus.locations.values():
            if card.is_filler:
                continue
            yield card, getattr(card, attr)
    elif task == "container":
        for card in corpus.objects.values():
            if card.contained_examples:
                yield card, card.contained_examples
    else:
        raise UnknownTaskError(f"unknown task: {task!r}")


def derive_examples(
    corpus: Corpus, task: str, feature_mode: str = "name_and_description"
) -> dict[str, list[PlacementExample]]:
    """Derive one example per (source card, annotated target), grouped by the
    source card's split. Sources outside any split are skipped."""
    if task not in TASKS:
        raise UnknownTaskError(f"unknown task: {task!r}")
    if feature_mode not in FEATURE_MODES:
        raise ValueError(f"unknown feature mode {feature_mode!r}")
    if task not in corpus.splits:
        raise MissingSplitsError(f"corpus has no splits for task {task!r}")

    split_of: dict[str, str] = {}
    for split_name, ids in corpus.splits[task].items():
        for cid in ids:
            split_of[cid] = split_name

    grouped: dict[str, list[PlacementExample]] = {name: [] for name in SPLIT_NAMES}
    for source, targets in _task_sources(corpus, task):
        split_name = split_of.get(source.id)
        if split_name is None:
            continue
        context = card_text(source, feature_mode)
        for target in targets:
            grouped[split_name].append(
                PlacementExample(
                    task=task,
                    context_text=context,
                    gold=_canonical_gold(corpus, task, target),
                    source_id=source.id,
                )
            )
    return grouped


def train_gold_pool(corpus: Corpus, task: str, feature_mode: str = "name_only") -> list[str]:
    """Distinct gold candidate names from a task's training examples."""
    examples = derive_examples(corpus, task, feature_mode)
    return sorted({ex.gold for ex in examples["train"]})


def _largest_remainder(total: int, ratios) -> list[int]:
    exact = [total * r for r in ratios]
    counts = [math.floor(x) for x in exact]
    leftover = total - sum(counts)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def make_splits(
    corpus: Corpus,
    ratios=(0.8, 0.1, 0.1),
    seed: int = 0,
    overwrite: bool = False,
) -> Corpus:
    """Partition each task's source ids into train/valid/test.

    Deterministic per seed; element-level, not example-level. Tasks already
    split in the corpus keep their splits unless overwrite is set.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise InvalidRatiosError(f"ratios must be three positive fractions, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidRatiosError(f"ratios must sum to 1, got {sum(ratios)}")

    splits = {task: dict(by) for task, by in corpus.splits.items()}
    for task in TASKS:
        if task in splits and not overwrite:
            continue
        if task == "container":
            ids = sorted(corpus.objects)
        else:
            ids = sorted(cid for cid, c in corpus.locations.items() if not c.is_filler)
        digest = hashlib.sha256(f"{seed}:{task}".encode()).digest()
        rng = random.Random(int.from_bytes(digest[:8], "big"))
        rng.shuffle(ids)
        n_train, n_valid, n_test = _largest_remainder(len(ids), ratios)
        splits[task] = {
            "train": tuple(ids[:n_train]),
            "valid": tuple(ids[n_train : n_train + n_valid]),
            "test": tuple(ids[n_train + n_valid :]),
        }
    return replace(corpus, splits=splits)
