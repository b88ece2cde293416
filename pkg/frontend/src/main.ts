/**
 * Browser bootstrap: owns the DOM, delegates everything else to the pure
 * state/render modules and the API client. All placement decisions happen
 * on the server; this file only collects clicks and re-renders responses.
 */

import { ApiError, WorldsmithApi } from "./api.js";
import type { SessionState } from "./api.js";
import { renderApp, renderDropdown } from "./render.js";
import { buildDropdown, buildUiState } from "./state.js";
import type { DropdownView, UiSessionState } from "./state.js";

const api = new WorldsmithApi("");

let session: SessionState | null = null;
let selected: { row: number; col: number } | null = null;
let dropdown: DropdownView | null = null;
let exportIssues: UiSessionState["exportIssues"] = [];
let exportedWorld: Record<string, unknown> | null = null;
let lastError: string | null = null;

function root(): HTMLElement {
  const el = document.getElementById("app");
  if (!el) throw new Error("missing #app mount point");
  return el;
}

function uiState(): UiSessionState {
  if (!session) throw new Error("no session");
  return buildUiState(session, {
    selected,
    dropdown,
    exportIssues,
    exportedWorld,
    error: lastError,
  });
}

function render(): void {
  const state = uiState();
  root().innerHTML = renderApp(state);
  const host = root().querySelector(
    `.dropdown-host[data-kind="${dropdown?.kind ?? ""}"]`,
  );
  if (host && dropdown) host.innerHTML = renderDropdown(dropdown);
  const download = root().querySelector<HTMLAnchorElement>(".export-download");
  if (download && exportedWorld) {
    const blob = new Blob([JSON.stringify(exportedWorld, null, 2)], {
      type: "application/json",
    });
    download.href = URL.createObjectURL(blob);
  }
  bind();
}

function showError(err: unknown): void {
  lastError = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  render();
}

async function refreshDropdown(kind: string, query: string): Promise<void> {
  if (!session) return;
  let suggestions: Awaited<ReturnType<typeof api.suggest>> = [];
  if (selected) {
    const suggestKind = kind;
    try {
      suggestions = await api.suggest(session.id, selected.row, selected.col, suggestKind);
    } catch {
      suggestions = []; // cell not valid for this kind: plain search still works
    }
  }
  const results = query.trim()
    ? await api.search(query, kind as "location" | "character" | "object", session.id)
    : [];
  dropdown = buildDropdown(kind, query, suggestions, results);
  render();
  const input = root().querySelector<HTMLInputElement>(`input[data-kind="${kind}"]`);
  if (input) {
    input.value = query;
    input.focus();
    input.setSelectionRange(query.length, query.length);
  }
}

async function placeByName(kind: string, name: string): Promise<void> {
  if (!session || !selected) return;
  try {
    session = await api.place(session.id, {
      row: selected.row,
      col: selected.col,
      kind,
      name,
    });
    dropdown = null;
    lastError = null;
    exportIssues = [];
    exportedWorld = null;
    render();
  } catch (err) {
    showError(err);
  }
}

function bind(): void {
  for (const tile of root().querySelectorAll<HTMLElement>(".tile")) {
    tile.addEventListener("click", () => {
      selected = { row: Number(tile.dataset.row), col: Number(tile.dataset.col) };
      dropdown = null;
      render();
    });
  }
  for (const input of root().querySelectorAll<HTMLInputElement>("input[type=search]")) {
    const kind = input.dataset.kind ?? "location";
    input.addEventListener("focus", () => {
      void refreshDropdown(kind, input.value);
    });
    input.addEventListener("input", () => {
      void refreshDropdown(kind, input.value);
    });
  }
  for (const entry of root().querySelectorAll<HTMLElement>(".dropdown-entry")) {
    entry.addEventListener("click", () => {
      const kind = entry.closest<HTMLElement>(".dropdown")?.dataset.kind ?? "location";
      void placeByName(kind, entry.dataset.name ?? "");
    });
  }
  for (const offer of root().querySelectorAll<HTMLElement>(".dropdown-generate")) {
    offer.addEventListener("click", async () => {
      if (!session) return;
      const kind = offer.closest<HTMLElement>(".dropdown")?.dataset.kind ?? "location";
      try {
        await api.generateElement(
          session.id,
          offer.dataset.name ?? "",
          kind as "location" | "character" | "object",
        );
        await refreshDropdown(kind, offer.dataset.name ?? "");
      } catch (err) {
        showError(err);
      }
    });
  }
  root()
    .querySelector(".export-button")
    ?.addEventListener("click", async () => {
      if (!session) return;
      try {
        exportedWorld = await api.exportWorld(session.id);
        exportIssues = [];
        lastError = null;
      } catch (err) {
        exportedWorld = null;
        if (err instanceof ApiError) {
          exportIssues = err.issues;
          lastError = `${err.code}: ${err.message}`;
        } else {
          showError(err);
          return;
        }
      }
      render();
    });
}

async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const existing = params.get("session");
  try {
    session = existing
      ? await api.getSession(existing)
      : await api.createSession(3, 3, Math.floor(Math.random() * 1_000_000));
    if (!existing) {
      params.set("session", session.id);
      window.history.replaceState(null, "", `?${params}`);
    }
    render();
  } catch (err) {
    root().innerHTML = `<div class="error-bar">failed to start: ${String(err)}</div>`;
  }
}

void start();
