"""HTTP API for interactive, suggestion-assisted world building.

Sessions are event-sourced: every accepted mutation appends one record to a
per-session JSONL log, and replaying the log reproduces the session exactly,
which is also how sessions survive restarts. Suggestion ordering is a pure
pass-through of the ranking module over the same context assembly the
automatic generator uses.
"""

from __future__ import annotations

import json
import secrets
import threading
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel, Field

from . import generator
from .assembly import (
    GameWorld,
    GenerationConfig,
    GridInvariantError,
    PlacedLocation,
    PlacedObject,
    WorldGrid,
    validate_world,
    world_to_dict,
)
from .corpus import (
    CharacterCard,
    Corpus,
    LocationCard,
    ObjectCard,
    card_text,
    corpus_hash,
    normalize_name,
)
from .ranking import Scorer, ScorerInput

_SEED_MASK = (1 << 63) - 1
SNAPSHOT_EVERY = 100


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _error(status: int, code: str, message: str, **extra) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message, **extra})


class Session:
    """One editable grid plus its per-session generated elements."""

    def __init__(self, session_id: str, width: int, height: int, seed: int,
                 suggestions_enabled: bool):
        self.id = session_id
        self.grid = WorldGrid(width, height)
        self.seed = seed
        self.suggestions_enabled = suggestions_enabled
        self.generated: dict[str, dict[str, dict]] = {
            "location": {},
            "character": {},
            "object": {},
        }
        self.seq = 0
        self.created_at = ""
        self.updated_at = ""
        self.lock = threading.Lock()


class SessionStore:
    """Event-log persistence with periodic snapshots."""

    def __init__(self, data_dir, corpus: Corpus):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.corpus = corpus
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _log_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.log"

    def _snapshot_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.snapshot.json"

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self.sessions.get(session_id)
            if session is not None:
                return session
            log_path = self._log_path(session_id)
            if not log_path.exists():
                raise _error(404, "unknown_session", f"no session {session_id!r}")
            session = self._load(session_id)
            self.sessions[session_id] = session
            return session

    def create(self, width: int, height: int, seed: int, suggestions_enabled: bool) -> Session:
        session_id = secrets.token_urlsafe(16)
        session = Session(session_id, width, height, seed, suggestions_enabled)
        non_filler = sorted(self.corpus.non_filler_locations(), key=lambda c: c.id)
        if not non_filler:
            raise _error(500, "empty_corpus", "corpus has no non-filler locations")
        rng = np.random.default_rng(seed & _SEED_MASK)
        center_card = non_filler[int(rng.integers(len(non_filler)))]
        event = {
            "op": "create",
            "width": width,
            "height": height,
            "seed": seed,
            "suggestions_enabled": suggestions_enabled,
            "center_location": center_card.name,
            "ts": _now(),
        }
        self._apply(session, event)
        with self._lock:
            self.sessions[session_id] = session
        self._append(session, event)
        return session

    def mutate(self, session: Session, event: dict) -> None:
        """Apply one validated event and persist it atomically."""
        event = {**event, "ts": _now()}
        self._apply(session, event)
        self._append(session, event)

    def _append(self, session: Session, event: dict) -> None:
        record = {"seq": session.seq, **event}
        with open(self._log_path(session.id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
            fh.flush()
        if session.seq % SNAPSHOT_EVERY == 0:
            snapshot = {"state": session_state(session), "seq": session.seq}
            with open(self._snapshot_path(session.id), "w", encoding="utf-8") as fh:
                json.dump(snapshot, fh, sort_keys=True, ensure_ascii=False)

    def _load(self, session_id: str) -> Session:
        events = []
        with open(self._log_path(session_id), encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        if not events or events[0].get("op") != "create":
            raise _error(500, "corrupt_session", f"session log {session_id!r} has no create event")
        return self.replay(session_id, events)

    def replay(self, session_id: str, events: list[dict]) -> Session:
        first = events[0]
        session = Session(
            session_id,
            first["width"],
            first["height"],
            first["seed"],
            first["suggestions_enabled"],
        )
        for event in events:
            self._apply(session, event)
        return session

    def _resolve_location(self, session: Session, name: str) -> LocationCard | None:
        card = self.corpus.location_by_name(name)
        if card is not None:
            return card
        raw = session.generated["location"].get(normalize_name(name))
        if raw is not None:
            return LocationCard(
                id=raw["id"],
                name=raw["name"],
                description=raw.get("description", ""),
                background=raw.get("background", ""),
                category="other",
            )
        return None

    def _resolve_character(self, session: Session, name: str) -> CharacterCard | None:
        card = self.corpus.character_by_name(name)
        if card is not None:
            return card
        raw = session.generated["character"].get(normalize_name(name))
        if raw is not None:
            return CharacterCard(
                id=raw["id"],
                name=raw["name"],
                persona=raw.get("persona", ""),
                description=raw.get("description", ""),
            )
        return None

    def _resolve_object(self, session: Session, name: str) -> ObjectCard | None:
        card = self.corpus.object_by_name(name)
        if card is not None:
            return card
        raw = session.generated["object"].get(normalize_name(name))
        if raw is not None:
            return ObjectCard(
                id=raw["id"],
                name=raw["name"],
                description=raw.get("description", ""),
                affordances=tuple(raw.get("affordances", ())),
            )
        return None

    def _apply(self, session: Session, event: dict) -> None:
        op = event["op"]
        grid = session.grid
        if op == "create":
            card = self._resolve_location(session, event["center_location"])
            if card is None:
                raise _error(500, "unknown_element", "center location does not resolve")
            grid.place(grid.center, PlacedLocation(location=card))
            session.created_at = event.get("ts", "")
        elif op == "place":
            cell = (event["row"], event["col"])
            kind = event["kind"]
            name = event["name"]
            if kind == "location":
                card = self._resolve_location(session, name)
                if card is None:
                    raise _error(404, "unknown_element", f"no location named {name!r}")
                grid.place(cell, PlacedLocation(location=card))
                for pair in event.get("connect_to", []):
                    grid.open_exit(cell, tuple(pair))
            elif kind == "character":
                placed = self._require_filled(grid, cell)
                card = self._resolve_character(session, name)
                if card is None:
                    raise _error(404, "unknown_element", f"no character named {name!r}")
                folded = normalize_name(name)
                if any(normalize_name(c.name) == folded for c in placed.characters):
                    raise GridInvariantError(
                        "duplicate_in_cell", f"{name!r} is already in this location"
                    )
                placed.characters.append(card)
            elif kind == "object":
                placed = self._require_filled(grid, cell)
                card = self._resolve_object(session, name)
                if card is None:
                    raise _error(404, "unknown_element", f"no object named {name!r}")
                folded = normalize_name(name)
                if any(normalize_name(po.card.name) == folded for po in placed.objects):
                    raise GridInvariantError(
                        "duplicate_in_cell", f"{name!r} is already in this location"
                    )
                placed.objects.append(PlacedObject(card=card))
            elif kind == "contained":
                placed = self._require_filled(grid, cell)
                host_folded = normalize_name(event["host"])
                host = next(
                    (po for po in placed.objects if normalize_name(po.card.name) == host_folded),
                    None,
                )
                if host is None:
                    raise _error(404, "unknown_element",
                                 f"object {event['host']!r} is not in this cell")
                if "container" not in host.card.affordances:
                    raise GridInvariantError(
                        "not_container", f"{host.card.name!r} has no container affordance"
                    )
                card = self._resolve_object(session, name)
                if card is None:
                    raise _error(404, "unknown_element", f"no object named {name!r}")
                host.contains.append(card)
            else:
                raise _error(400, "bad_kind", f"cannot place kind {kind!r}")
        elif op == "remove":
            cell = (event["row"], event["col"])
            kind = event.get("kind")
            name = event.get("name")
            if kind is None:
                grid.clear(cell)
            else:
                placed = self._require_filled(grid, cell)
                folded = normalize_name(name or "")
                if kind == "character":
                    before = len(placed.characters)
                    placed.characters = [
                        c for c in placed.characters if normalize_name(c.name) != folded
                    ]
                    if len(placed.characters) == before:
                        raise _error(404, "unknown_element", f"{name!r} is not in this cell")
                elif kind == "object":
                    before = len(placed.objects)
                    placed.objects = [
                        po for po in placed.objects if normalize_name(po.card.name) != folded
                    ]
                    if len(placed.objects) == before:
                        raise _error(404, "unknown_element", f"{name!r} is not in this cell")
                else:
                    raise _error(400, "bad_kind", f"cannot remove kind {kind!r}")
        elif op == "generate":
            element = event["element"]
            session.generated[event["kind"]][normalize_name(element["name"])] = element
        else:
            raise _error(500, "corrupt_session", f"unknown event op {op!r}")
        session.seq += 1
        session.updated_at = event.get("ts", "")

    @staticmethod
    def _require_filled(grid: WorldGrid, cell) -> PlacedLocation:
        placed = grid.placed.get(cell)
        if placed is None:
            raise _error(400, "invalid_cell", f"cell {cell} has no location")
        return placed


def _placed_generated_elements(session: Session) -> list[dict]:
    """Generated card bodies for elements actually placed on the grid."""
    placed_names: dict[str, set[str]] = {"location": set(), "character": set(), "object": set()}
    for placed in session.grid.placed.values():
        placed_names["location"].add(normalize_name(placed.location.name))
        for card in placed.characters:
            placed_names["character"].add(normalize_name(card.name))
        for po in placed.objects:
            placed_names["object"].add(normalize_name(po.card.name))
            for inner in po.contains:
                placed_names["object"].add(normalize_name(inner.name))
    out = []
    for kind in ("location", "character", "object"):
        for folded, element in sorted(session.generated[kind].items()):
            if folded in placed_names[kind]:
                out.append({"kind": kind, **element})
    return out


def session_state(session: Session) -> dict:
    grid = session.grid
    cells = []
    for r in range(grid.height):
        for c in range(grid.width):
            cell = (r, c)
            record: dict = {"row": r, "col": c, "state": "empty"}
            if cell in grid.blocked:
                record["state"] = "blocked"
            elif cell in grid.placed:
                placed = grid.placed[cell]
                record["state"] = "filled"
                record["location"] = {
                    "name": placed.location.name,
                    "category": placed.location.category,
                    "is_filler": placed.location.is_filler,
                }
                record["characters"] = [c.name for c in placed.characters]
                record["objects"] = [
                    {"name": po.card.name, "contains": [o.name for o in po.contains]}
                    for po in placed.objects
                ]
            cells.append(record)
    exits = sorted(
        sorted([list(a), list(b)]) for a, b in (tuple(e) for e in grid.exits)
    )
    return {
        "id": session.id,
        "width": grid.width,
        "height": grid.height,
        "seed": session.seed,
        "suggestions_enabled": session.suggestions_enabled,
        "cells": cells,
        "exits": exits,
        "generated": {
            kind: sorted(e["name"] for e in elements.values())
            for kind, elements in session.generated.items()
        },
        "seq": session.seq,
        "created_at": session.created_at,
        "updated_at": session.updated_at,
    }


class CreateSessionRequest(BaseModel):
    width: int = 3
    height: int = 3
    seed: int = 0
    suggestions_enabled: bool = True


class PlaceRequest(BaseModel):
    row: int
    col: int
    kind: str
    name: str
    connect_to: list[list[int]] | None = None
    host: str | None = None


class GenerateRequest(BaseModel):
    session_id: str
    name: str
    kind: str
    seed: int = Field(default=0)


def assemble_suggestion_context(
    store: SessionStore, session: Session, cell, kind: str
) -> tuple[str, list[str], str]:
    """(context text, candidate names, task) for a suggest call.

    Location suggestions read all adjacent filled cells in row-major order;
    other kinds read the host cell. Already-placed non-filler locations are
    excluded from the location pool; container suggestions exclude the host.
    """
    grid = session.grid
    corpus = store.corpus

    def dedupe(names: list[str]) -> list[str]:
        seen: set[str] = set()
        out = []
        for name in names:
            folded = normalize_name(name)
            if folded not in seen:
                seen.add(folded)
                out.append(name)
        return out

    if kind == "location":
        if not grid.is_empty(cell):
            raise _error(400, "invalid_cell", f"cell {cell} is not empty")
        neighbors = [nb for nb in sorted(grid.adjacent(cell)) if nb in grid.placed]
        if not neighbors:
            raise _error(400, "invalid_cell", f"cell {cell} has no placed neighbor")
        context = " . ".join(
            card_text(grid.placed[nb].location, "name_and_description") for nb in neighbors
        )
        placed_names = {
            normalize_name(p.location.name)
            for p in grid.placed.values()
            if not p.location.is_filler
        }
        names = [
            c.name
            for c in sorted(corpus.locations.values(), key=lambda c: c.id)
            if c.name.strip() and (c.is_filler or normalize_name(c.name) not in placed_names)
        ]
        names.extend(
            e["name"]
            for e in session.generated["location"].values()
            if normalize_name(e["name"]) not in placed_names
        )
        return context, dedupe(names), "location"

    placed = grid.placed.get(cell)
    if placed is None:
        raise _error(400, "invalid_cell", f"cell {cell} has no location")
    if kind in ("character", "object"):
        context = card_text(placed.location, "name_and_description")
        collection = corpus.characters if kind == "character" else corpus.objects
        names = [c.name for c in sorted(collection.values(), key=lambda c: c.id) if c.name.strip()]
        names.extend(e["name"] for e in session.generated[kind].values())
        return context, dedupe(names), kind
    if kind.startswith("contained:"):
        host_name = kind.split(":", 1)[1]
        host_folded = normalize_name(host_name)
        host = next(
            (po for po in placed.objects if normalize_name(po.card.name) == host_folded), None
        )
        if host is None:
            raise _error(400, "invalid_cell", f"object {host_name!r} is not in this cell")
        names = [
            c.name
            for c in sorted(corpus.objects.values(), key=lambda c: c.id)
            if c.name.strip() and normalize_name(c.name) != host_folded
        ]
        # Containers are ranked on names alone.
        return host.card.name, names, "container"
    raise _error(400, "bad_kind", f"unknown suggestion kind {kind!r}")


def candidate_text_for(store: SessionStore, session: Session, task: str, name: str) -> str:
    kind = "object" if task == "container" else task
    if task == "container":
        return name
    generated = session.generated.get(kind, {}).get(normalize_name(name))
    if generated is not None:
        description = generated.get("description") or generated.get("persona") or ""
        return f"{name} . {description}" if description else name
    card = store.corpus.card_by_name(kind, name)
    if card is None:
        return name
    return card_text(card, "name_and_description")


def create_app(
    corpus: Corpus,
    scorers: dict[str, Scorer],
    data_dir,
    suggestions_default: bool = True,
    generation_seed: int = 0,
) -> FastAPI:
    """Wire the /v1 endpoints over a corpus, a scorer set, and a data directory."""
    app = FastAPI(title="worldsmith", version="0.1.0")
    store = SessionStore(data_dir, corpus)
    app.state.store = store
    app.state.scorers = scorers
    app.state.suggestions_default = suggestions_default

    affordance_model = None

    def get_affordance_model():
        nonlocal affordance_model
        if affordance_model is None and corpus.objects:
            train_ids = set(corpus.splits.get("container", {}).get("train", ()))
            labeled = [o for o in corpus.objects.values() if not train_ids or o.id in train_ids]
            affordance_model = generator.train_affordance_model(labeled)
        return affordance_model

    @app.post("/v1/sessions")
    def create_session(req: CreateSessionRequest):
        if req.width < 1 or req.height < 1:
            raise _error(400, "invalid_dims", "grid must be at least 1x1")
        enabled = req.suggestions_enabled and suggestions_default
        session = store.create(req.width, req.height, req.seed, enabled)
        return session_state(session)

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session_state(session)

    @app.post("/v1/sessions/{session_id}/place")
    def place(session_id: str, req: PlaceRequest):
        session = store.get(session_id)
        event = {
            "op": "place",
            "row": req.row,
            "col": req.col,
            "kind": req.kind,
            "name": req.name,
        }
        if req.kind == "location":
            grid = session.grid
            cell = (req.row, req.col)
            if req.connect_to is not None:
                connect = [list(map(int, pair)) for pair in req.connect_to]
            else:
                connect = [
                    [r, c] for r, c in sorted(grid.adjacent(cell)) if (r, c) in grid.placed
                ]
            event["connect_to"] = connect
        if req.kind == "contained":
            if not req.host:
                raise _error(400, "bad_kind", "contained placement needs a host object")
            event["host"] = req.host
        with session.lock:
            try:
                store.mutate(session, event)
            except GridInvariantError as exc:
                raise _error(409, exc.code, str(exc))
            return session_state(session)

    @app.delete("/v1/sessions/{session_id}/cell")
    def remove(
        session_id: str,
        row: int = Query(...),
        col: int = Query(...),
        kind: str | None = Query(default=None),
        name: str | None = Query(default=None),
    ):
        session = store.get(session_id)
        event = {"op": "remove", "row": row, "col": col}
        if kind is not None:
            event["kind"] = kind
            event["name"] = name
        with session.lock:
            try:
                store.mutate(session, event)
            except GridInvariantError as exc:
                raise _error(409, exc.code, str(exc))
            return session_state(session)

    @app.get("/v1/sessions/{session_id}/suggest")
    def suggest(
        session_id: str,
        row: int = Query(...),
        col: int = Query(...),
        kind: str = Query(...),
        k: int = Query(default=10, ge=1, le=100),
    ):
        session = store.get(session_id)
        with session.lock:
            if not session.suggestions_enabled:
                return {"suggestions": []}
            context, names, task = assemble_suggestion_context(store, session, (row, col), kind)
            if not names:
                return {"suggestions": []}
            texts = tuple(candidate_text_for(store, session, task, n) for n in names)
            scorer = scorers[task]
            scores = scorer.score(ScorerInput(context, texts, task))
            # Same ordering rule as ranking.rank over a single score draw, so
            # stateful scorers are not consumed twice.
            order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
            return {
                "suggestions": [
                    {
                        "name": names[i],
                        "score": float(scores[i]),
                        "rank": position,
                        "kind": kind,
                    }
                    for position, i in enumerate(order[:k])
                ]
            }

    @app.get("/v1/search")
    def search(
        q: str = Query(default=""),
        kind: str = Query(...),
        limit: int = Query(default=20, ge=1, le=200),
        session_id: str | None = Query(default=None),
    ):
        if kind not in ("location", "character", "object"):
            raise _error(400, "bad_kind", f"unknown search kind {kind!r}")
        query = normalize_name(q)
        if not query:
            return {"results": []}
        entries: list[tuple[str, bool]] = []
        collection = {
            "location": corpus.locations,
            "character": corpus.characters,
            "object": corpus.objects,
        }[kind]
        for card in collection.values():
            if card.name.strip():
                entries.append((card.name, False))
        if session_id is not None:
            session = store.get(session_id)
            with session.lock:
                entries.extend(
                    (e["name"], True) for e in session.generated[kind].values()
                )
        matches = []
        for name, generated in entries:
            folded = normalize_name(name)
            if folded.startswith(query):
                matches.append((0, folded, name, generated))
            elif query in folded:
                matches.append((1, folded, name, generated))
        matches.sort()
        return {
            "results": [
                {"name": name, "generated": generated, "match": "prefix" if tier == 0 else "substring"}
                for tier, _, name, generated in matches[:limit]
            ]
        }

    @app.post("/v1/generate-element")
    def generate_element_endpoint(req: GenerateRequest):
        if not req.name.strip():
            raise _error(400, "empty_name", "element name is empty")
        if req.kind not in ("location", "character", "object"):
            raise _error(400, "bad_kind", f"cannot generate kind {req.kind!r}")
        session = store.get(req.session_id)
        seed = req.seed if req.seed else generation_seed
        try:
            element = generator.generate_element(
                req.name, req.kind, corpus, seed,
                affordance_model=get_affordance_model() if req.kind == "object" else None,
            )
        except generator.GenerationError as exc:
            raise _error(400, "generation_failed", str(exc))
        record = element.to_card_dict()
        with session.lock:
            store.mutate(session, {"op": "generate", "kind": req.kind, "element": record})
        return {"element": record}

    @app.post("/v1/sessions/{session_id}/export")
    def export_world(session_id: str):
        session = store.get(session_id)
        with session.lock:
            grid = session.grid
            config = GenerationConfig(
                grid_width=grid.width,
                grid_height=grid.height,
                max_locations=grid.width * grid.height,
                blocked_fraction=0.0,
                seed=session.seed,
            )
            world = GameWorld(
                grid=grid,
                config=config,
                provenance={
                    "scorers": {task: scorers[task].name for task in sorted(scorers)},
                    "corpus_hash": corpus_hash(corpus),
                    "session": session.id,
                },
                created_at=session.created_at,
            )
            report = validate_world(world)
            if not report.ok:
                raise _error(
                    422,
                    "invalid_world",
                    "session grid fails world validation",
                    issues=[
                        {"severity": i.severity, "ref": i.card_id, "message": i.message}
                        for i in report.issues
                    ],
                )
            doc = world_to_dict(world)
            generated = _placed_generated_elements(session)
            if generated:
                # embed generated card bodies so the export resolves without
                # this session's state
                doc["generated_elements"] = generated
            return doc

    @app.get("/v1/corpus/stats")
    def corpus_stats():
        return {
            "locations": len(corpus.non_filler_locations()),
            "filler_locations": len(corpus.filler_locations()),
            "characters": len(corpus.characters),
            "objects": len(corpus.objects),
            "tasks_with_splits": sorted(corpus.splits),
            "hash": corpus_hash(corpus),
        }

    return app
