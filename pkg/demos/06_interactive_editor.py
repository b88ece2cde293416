"""Drive the interactive editor API in-process: suggestions, placement,
generated elements, and export.

Run from the repo root:  python3 demos/06_interactive_editor.py
(or run the real server with `worldsmith serve` and use the web frontend)
"""

import tempfile

from fastapi.testclient import TestClient

from worldsmith import SAMPLE_CORPUS_PATH
from worldsmith.corpus import TASKS, load_corpus
from worldsmith.ranking import IRScorer
from worldsmith.service import create_app

corpus = load_corpus(SAMPLE_CORPUS_PATH)
scorer = IRScorer.from_corpus(corpus)
app = create_app(corpus, {task: scorer for task in TASKS}, tempfile.mkdtemp())
client = TestClient(app)

# A session is a 3x3 grid with the center pre-filled at random.
session = client.post("/v1/sessions", json={"width": 3, "height": 3, "seed": 11}).json()
sid = session["id"]
center = session["cells"][4]["location"]["name"]
print(f"session {sid[:8]}... starts with {center!r} in the center")

# Model suggestions for the cell above the center, ranked by the scorer.
suggestions = client.get(f"/v1/sessions/{sid}/suggest",
                         params={"row": 0, "col": 1, "kind": "location", "k": 5}).json()
print("\nsuggested neighbors:")
for s in suggestions["suggestions"]:
    print(f"  #{s['rank']} {s['name']} ({s['score']:.3f})")

# Take the top suggestion; exits to adjacent filled cells open automatically.
choice = suggestions["suggestions"][0]["name"]
state = client.post(f"/v1/sessions/{sid}/place",
                    json={"row": 0, "col": 1, "kind": "location", "name": choice}).json()
print(f"\nplaced {choice!r}; exits now {state['exits']}")

# Search works alongside suggestions: prefix matches first, then substrings.
results = client.get("/v1/search", params={"q": "wiz", "kind": "character"}).json()
print(f"search 'wiz' -> {[r['name'] for r in results['results']]}")

client.post(f"/v1/sessions/{sid}/place",
            json={"row": 0, "col": 1, "kind": "character", "name": "wizard"})
client.post(f"/v1/sessions/{sid}/place",
            json={"row": 0, "col": 1, "kind": "object", "name": "pouch"})
client.post(f"/v1/sessions/{sid}/place",
            json={"row": 0, "col": 1, "kind": "contained", "name": "coins", "host": "pouch"})

# Names outside the corpus can be generated on the fly, then placed like any
# other card.
element = client.post("/v1/generate-element",
                      json={"session_id": sid, "name": "starlit pier",
                            "kind": "location", "seed": 4}).json()["element"]
print(f"\ngenerated {element['name']!r}: {element['description'][:70]}...")
client.post(f"/v1/sessions/{sid}/place",
            json={"row": 1, "col": 0, "kind": "location", "name": "starlit pier"})

# Export validates the grid (reachability included) and emits the same world
# format the batch generator writes.
world = client.post(f"/v1/sessions/{sid}/export")
print(f"\nexport status {world.status_code}: "
      f"{sum(1 for c in world.json()['cells'] if c['state'] == 'filled')} locations exported")
