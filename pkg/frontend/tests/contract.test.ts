import { describe, expect, it } from "vitest";

import { ApiError, WorldsmithApi } from "../src/api.js";
import { renderDropdown } from "../src/render.js";
import { buildDropdown, buildUiState } from "../src/state.js";
import { StubServer } from "./stub-server.js";

function makeClient(stub: StubServer): WorldsmithApi {
  return new WorldsmithApi("", stub.fetch);
}

describe("dropdown against a stub server", () => {
  it("orders entries exactly as the API returned them", async () => {
    const stub = new StubServer();
    stub.suggestions = [
      { name: "Wizard's Reagent Room", score: 0.41, rank: 0, kind: "location" },
      { name: "Mountain's Peak", score: 0.33, rank: 1, kind: "location" },
      { name: "Temple Crypt", score: 0.21, rank: 2, kind: "location" },
    ];
    stub.searchResults = [
      { name: "Temple of the Dawn", generated: false, match: "prefix" },
      { name: "Abandoned Chapel", generated: false, match: "substring" },
    ];
    const api = makeClient(stub);
    const session = await api.createSession(3, 3, 1);
    const suggestions = await api.suggest(session.id, 0, 1, "location");
    const results = await api.search("temple", "location", session.id);

    const dropdown = buildDropdown("location", "temple", suggestions, results);
    const apiOrder = stub.suggestions.map((s) => s.name);
    expect(dropdown.entries.slice(0, 3).map((e) => e.name)).toEqual(apiOrder);

    const html = renderDropdown(dropdown);
    const positions = apiOrder.map((name) => html.indexOf(name.replace(/'/g, "&#39;")));
    expect(positions.every((p, i) => p >= 0 && (i === 0 || p > positions[i - 1]))).toBe(true);
  });

  it("renders no suggestion block for a suggestions-disabled session", async () => {
    const stub = new StubServer(3, 3, false);
    stub.suggestions = [
      { name: "Mountain's Peak", score: 0.9, rank: 0, kind: "location" },
    ];
    stub.searchResults = [{ name: "Mill", generated: false, match: "prefix" }];
    const api = makeClient(stub);
    const session = await api.createSession(3, 3, 1, false);
    const suggestions = await api.suggest(session.id, 0, 1, "location");
    expect(suggestions).toEqual([]); // the flag lives server-side
    const html = renderDropdown(
      buildDropdown("location", "mill", suggestions, await api.search("mill", "location")),
    );
    expect(html).not.toContain("suggestion-header");
    expect(html).toContain("Mill");
  });
});

describe("mutations round-trip the API", () => {
  it("place reflects only what the server sent back", async () => {
    const stub = new StubServer();
    const api = makeClient(stub);
    const session = await api.createSession();
    const updated = await api.place(session.id, {
      row: 0,
      col: 1,
      kind: "location",
      name: "Fishing Dock",
    });
    expect(stub.requests.filter((r) => r.path.endsWith("/place"))).toHaveLength(1);
    const cell = updated.cells.find((c) => c.row === 0 && c.col === 1)!;
    expect(cell.state).toBe("filled");
    expect(cell.location?.name).toBe("Fishing Dock");
    const state = buildUiState(updated);
    expect(state.tiles.filter((t) => t.state === "filled")).toHaveLength(2);
  });

  it("queues concurrent mutations so they arrive in order", async () => {
    const stub = new StubServer();
    stub.placeDelayMs = 15;
    const api = makeClient(stub);
    const session = await api.createSession();
    const first = api.place(session.id, {
      row: 0,
      col: 0,
      kind: "location",
      name: "First Hall",
    });
    stub.placeDelayMs = 0;
    const second = api.place(session.id, {
      row: 0,
      col: 1,
      kind: "location",
      name: "Second Hall",
    });
    await Promise.all([first, second]);
    const placeBodies = stub.requests
      .filter((r) => r.path.endsWith("/place"))
      .map((r) => (r.body as { name: string }).name);
    expect(placeBodies).toEqual(["First Hall", "Second Hall"]);
  });

  it("surfaces structured rejections", async () => {
    const stub = new StubServer();
    const api = makeClient(stub);
    const session = await api.createSession();
    await api.place(session.id, { row: 0, col: 0, kind: "location", name: "Great Hall" });
    const err = await api
      .place(session.id, { row: 2, col: 2, kind: "location", name: "great hall" })
      .catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect((err as ApiError).code).toBe("duplicate_location");
  });

  it("generated elements become searchable session state", async () => {
    const stub = new StubServer();
    const api = makeClient(stub);
    const session = await api.createSession();
    const element = await api.generateElement(session.id, "moon gate", "location", 3);
    expect(element.generated).toBe(true);
    expect(stub.session.generated.location).toContain("moon gate");
  });
});

describe("export against a stub server", () => {
  it("returns the world document on success", async () => {
    const stub = new StubServer();
    const api = makeClient(stub);
    const session = await api.createSession();
    const world = await api.exportWorld(session.id);
    expect(world.format).toBe("world");
  });

  it("carries per-cell issues through ApiError into the UI state", async () => {
    const stub = new StubServer();
    stub.exportFailure = {
      code: "invalid_world",
      message: "session grid fails world validation",
      issues: [
        { severity: "error", ref: "cell:2,0", message: "not reachable from the center" },
      ],
    };
    const api = makeClient(stub);
    const session = await api.createSession();
    const err = (await api.exportWorld(session.id).catch((e) => e)) as ApiError;
    expect(err.status).toBe(422);
    expect(err.issues).toHaveLength(1);
    const state = buildUiState(stub.session, { exportIssues: err.issues });
    const tile = state.tiles.find((t) => t.row === 2 && t.col === 0)!;
    expect(tile.exportIssues).toEqual(["not reachable from the center"]);
  });
});
