/**
 * UI state: a pure projection of the last-fetched server session state.
 *
 * The UI never decides placements itself; every edit round-trips the API
 * and the next render derives entirely from the server's response plus
 * local view concerns (selection, open dropdown, export results).
 */

import type {
  CellState,
  ExportIssue,
  SearchResult,
  SessionState,
  Suggestion,
} from "./api.js";
import { characterEmoji, objectEmoji } from "./emoji.js";

/** Location category -> color class. Fillers render white per convention. */
export const CATEGORY_COLOR_CLASS: Record<string, string> = {
  forest: "tile-green",
  water: "tile-blue",
  castle: "tile-purple",
  town: "tile-amber",
  cave: "tile-slate",
  temple: "tile-gold",
  road: "tile-brown",
  other: "tile-neutral",
};

export const FILLER_COLOR_CLASS = "tile-white";

export function colorClassFor(cell: CellState): string {
  if (cell.state !== "filled" || !cell.location) return "";
  if (cell.location.is_filler) return FILLER_COLOR_CLASS;
  return CATEGORY_COLOR_CLASS[cell.location.category] ?? CATEGORY_COLOR_CLASS.other;
}

export interface TileView {
  row: number;
  col: number;
  state: "empty" | "blocked" | "filled";
  colorClass: string;
  locationName: string;
  isFiller: boolean;
  emojis: string[];
  selected: boolean;
  exportIssues: string[];
}

export interface DropdownEntry {
  name: string;
  source: "suggestion" | "search";
  generated: boolean;
  score?: number;
}

export interface DropdownView {
  kind: string;
  query: string;
  entries: DropdownEntry[];
  /** Offer to generate the typed name when nothing in the corpus matches it. */
  generateOffer: string | null;
}

export interface UiSessionState {
  sessionId: string;
  width: number;
  height: number;
  suggestionsEnabled: boolean;
  tiles: TileView[];
  selected: { row: number; col: number } | null;
  dropdown: DropdownView | null;
  exportIssues: ExportIssue[];
  exportedWorld: Record<string, unknown> | null;
  error: string | null;
  dirty: boolean;
}

export function cellKey(row: number, col: number): string {
  return `${row},${col}`;
}

/** Parse a validation ref like "cell:1,2" into a tile key, if it names one. */
export function issueCellKey(issue: ExportIssue): string | null {
  const match = /^cell:(\d+),(\d+)$/.exec(issue.ref);
  return match ? cellKey(Number(match[1]), Number(match[2])) : null;
}

export function buildUiState(
  session: SessionState,
  view: {
    selected?: { row: number; col: number } | null;
    dropdown?: DropdownView | null;
    exportIssues?: ExportIssue[];
    exportedWorld?: Record<string, unknown> | null;
    error?: string | null;
    dirty?: boolean;
  } = {},
): UiSessionState {
  const issuesByCell = new Map<string, string[]>();
  for (const issue of view.exportIssues ?? []) {
    const key = issueCellKey(issue);
    if (key !== null) {
      const list = issuesByCell.get(key) ?? [];
      list.push(issue.message);
      issuesByCell.set(key, list);
    }
  }

  const selected = view.selected ?? null;
  const tiles = session.cells.map((cell) => {
    const emojis: string[] = [];
    for (const name of cell.characters ?? []) emojis.push(characterEmoji(name));
    for (const obj of cell.objects ?? []) emojis.push(objectEmoji(obj.name));
    return {
      row: cell.row,
      col: cell.col,
      state: cell.state,
      colorClass: colorClassFor(cell),
      locationName: cell.location?.name ?? "",
      isFiller: cell.location?.is_filler ?? false,
      emojis,
      selected: selected !== null && selected.row === cell.row && selected.col === cell.col,
      exportIssues: issuesByCell.get(cellKey(cell.row, cell.col)) ?? [],
    };
  });

  return {
    sessionId: session.id,
    width: session.width,
    height: session.height,
    suggestionsEnabled: session.suggestions_enabled,
    tiles,
    selected,
    dropdown: view.dropdown ?? null,
    exportIssues: view.exportIssues ?? [],
    exportedWorld: view.exportedWorld ?? null,
    error: view.error ?? null,
    dirty: view.dirty ?? false,
  };
}

/**
 * Merge model suggestions above typed-search results, dropping search rows
 * already pinned as suggestions. Ordering within each block is exactly the
 * order the API returned.
 */
export function buildDropdown(
  kind: string,
  query: string,
  suggestions: Suggestion[],
  results: SearchResult[],
): DropdownView {
  const pinned = new Set(suggestions.map((s) => s.name.toLowerCase()));
  const entries: DropdownEntry[] = suggestions.map((s) => ({
    name: s.name,
    source: "suggestion" as const,
    generated: false,
    score: s.score,
  }));
  for (const result of results) {
    if (!pinned.has(result.name.toLowerCase())) {
      entries.push({ name: result.name, source: "search", generated: result.generated });
    }
  }
  const trimmed = query.trim();
  const known = entries.some((e) => e.name.toLowerCase() === trimmed.toLowerCase());
  return {
    kind,
    query,
    entries,
    generateOffer: trimmed && !known ? trimmed : null,
  };
}
