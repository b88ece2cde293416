"""Synthetic corpora with planted cluster structure.

Used to check that the trainable ranker actually learns: locations fall
into themed clusters, neighbor annotations stay within a cluster, and the
cluster vocabulary is split between two "roles" so co-occurrence carries
more signal than raw lexical overlap.
"""

from __future__ import annotations

import random

from .corpus import FILLER_LOCATIONS, Corpus, make_splits, parse_corpus

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"

_PLACE_TYPES = ("hall", "yard", "den", "gate", "walk", "hollow", "rise", "bend")
_FILLER_WORDS = ("old", "worn", "quiet", "grey", "narrow", "cold")


def _coin_word(rng: random.Random, syllables: int = 2) -> str:
    return "".join(
        rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(syllables)
    )


def make_clustered_corpus(
    n_locations: int = 200,
    n_clusters: int = 20,
    neighbors_per_location: int = 3,
    n_characters: int = 100,
    n_objects: int = 150,
    seed: int = 0,
) -> Corpus:
    """Corpus whose location neighbors are drawn within themed clusters.

    Each cluster owns an anchor word (in every member's description) plus
    two disjoint word sets A and B. Members alternate roles; A-members list
    only B-members as neighbors and vice versa, so a ranker that only
    matches surface tokens sees the anchor, while one that learns
    co-occurrence also captures the A-B pairing.
    """
    if n_locations < 2 * n_clusters:
        raise ValueError("need at least two locations per cluster")
    rng = random.Random(seed)

    coined: set[str] = set()

    def fresh_word(syllables: int = 2) -> str:
        while True:
            word = _coin_word(rng, syllables)
            if word not in coined:
                coined.add(word)
                return word

    clusters = []
    for _ in range(n_clusters):
        clusters.append(
            {
                "anchor": fresh_word(3),
                "a_words": [fresh_word() for _ in range(4)],
                "b_words": [fresh_word() for _ in range(4)],
            }
        )

    members: list[list[dict]] = [[] for _ in range(n_clusters)]
    locations = []
    for i in range(n_locations):
        cluster_id = i % n_clusters
        cluster = clusters[cluster_id]
        role = "a" if (i // n_clusters) % 2 == 0 else "b"
        role_words = cluster[f"{role}_words"]
        unique = fresh_word(3)
        type_word = rng.choice(_PLACE_TYPES)
        name_words = [unique, type_word]
        if rng.random() < 0.5:
            name_words.insert(1, rng.choice(role_words))
        name = " ".join(name_words)
        description = " ".join(
            [cluster["anchor"]]
            + rng.sample(role_words, 3)
            + rng.sample(_FILLER_WORDS, 2)
        )
        record = {
            "id": f"loc-{i:03d}",
            "name": name,
            "description": f"A {type_word} of {description}.",
            "background": "",
            "neighbors": [],
            "characters": [],
            "objects": [],
            "category": "other",
        }
        members[cluster_id].append({"record": record, "role": role})
        locations.append(record)

    for cluster_id, group in enumerate(members):
        for entry in group:
            opposite = [e for e in group if e["role"] != entry["role"]]
            if not opposite:
                opposite = [e for e in group if e is not entry]
            picks = rng.sample(opposite, min(neighbors_per_location, len(opposite)))
            entry["record"]["neighbors"] = [e["record"]["name"] for e in picks]

    characters = []
    for i in range(n_characters):
        cluster = clusters[i % n_clusters]
        name = f"{fresh_word()} {rng.choice(('keeper', 'wanderer', 'trader', 'guard'))}"
        characters.append(
            {
                "id": f"char-{i:03d}",
                "name": name,
                "persona": f"I tend the {cluster['anchor']} and speak little.",
                "description": f"A figure marked by {rng.choice(cluster['a_words'])}.",
            }
        )

    objects = []
    for i in range(n_objects):
        cluster = clusters[i % n_clusters]
        name = f"{fresh_word()} {rng.choice(('box', 'tool', 'charm', 'lamp'))}"
        is_container = i % 7 == 0
        record = {
            "id": f"obj-{i:03d}",
            "name": name,
            "description": f"A small thing of {rng.choice(cluster['b_words'])}.",
            "affordances": ["gettable"] + (["container"] if is_container else []),
            "contained_examples": [],
        }
        objects.append(record)
    container_names = [o["name"] for o in objects if "container" in o["affordances"]]
    plain_names = [o["name"] for o in objects if "container" not in o["affordances"]]
    for record in objects:
        if "container" in record["affordances"] and plain_names:
            record["contained_examples"] = rng.sample(plain_names, min(2, len(plain_names)))

    # Spread characters and objects over locations so population scorers have
    # supervision too.
    for i, record in enumerate(locations):
        record["characters"] = [characters[(i * 3 + j) % n_characters]["name"] for j in range(2)]
        record["objects"] = [objects[(i * 5 + j) % n_objects]["name"] for j in range(2)]

    document = {
        "locations": locations,
        "filler_locations": [
            {"id": f"filler-{i:02d}", "name": name, "description": desc}
            for i, (name, desc) in enumerate(FILLER_LOCATIONS)
        ],
        "characters": characters,
        "objects": objects,
    }
    corpus = parse_corpus(document)
    return make_splits(corpus, (0.8, 0.1, 0.1), seed=seed)
