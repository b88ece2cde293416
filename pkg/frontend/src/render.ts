/**
 * Pure renderers: UiSessionState in, HTML string out. No DOM access here,
 * so every view is snapshot-testable in plain node.
 */

import type { DropdownView, TileView, UiSessionState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function renderTile(tile: TileView): string {
  const classes = ["tile", `tile-${tile.state}`];
  if (tile.colorClass) classes.push(tile.colorClass);
  if (tile.selected) classes.push("tile-selected");
  if (tile.exportIssues.length) classes.push("tile-invalid");
  const label =
    tile.state === "filled"
      ? `<span class="tile-name">${escapeHtml(tile.locationName)}</span>`
      : tile.state === "blocked"
        ? `<span class="tile-blocked-mark">✕</span>`
        : "";
  const emojis = tile.emojis.length
    ? `<span class="tile-emojis">${tile.emojis.map(escapeHtml).join(" ")}</span>`
    : "";
  const issues = tile.exportIssues.length
    ? `<span class="tile-issue" title="${escapeHtml(tile.exportIssues.join("; "))}">⚠</span>`
    : "";
  return (
    `<div class="${classes.join(" ")}" data-row="${tile.row}" data-col="${tile.col}">` +
    `${label}${emojis}${issues}</div>`
  );
}

export function renderGrid(state: UiSessionState): string {
  const rows: string[] = [];
  for (let r = 0; r < state.height; r++) {
    const tiles = state.tiles
      .filter((t) => t.row === r)
      .sort((a, b) => a.col - b.col)
      .map(renderTile)
      .join("");
    rows.push(`<div class="grid-row">${tiles}</div>`);
  }
  return `<div class="grid" data-session="${escapeHtml(state.sessionId)}">${rows.join("")}</div>`;
}

export function renderDropdown(dropdown: DropdownView | null): string {
  if (dropdown === null) return "";
  const parts: string[] = [`<ul class="dropdown" data-kind="${escapeHtml(dropdown.kind)}">`];
  let suggestionBlockOpen = false;
  for (const entry of dropdown.entries) {
    if (entry.source === "suggestion" && !suggestionBlockOpen) {
      parts.push(`<li class="dropdown-header suggestion-header">suggested</li>`);
      suggestionBlockOpen = true;
    }
    const classes = ["dropdown-entry", `entry-${entry.source}`];
    if (entry.generated) classes.push("entry-generated");
    const badge = entry.generated ? `<span class="badge-generated">generated</span>` : "";
    const score =
      entry.score !== undefined
        ? `<span class="entry-score">${entry.score.toFixed(3)}</span>`
        : "";
    parts.push(
      `<li class="${classes.join(" ")}" data-name="${escapeHtml(entry.name)}">` +
        `${escapeHtml(entry.name)}${badge}${score}</li>`,
    );
  }
  if (dropdown.generateOffer !== null) {
    parts.push(
      `<li class="dropdown-generate" data-name="${escapeHtml(dropdown.generateOffer)}">` +
        `create “${escapeHtml(dropdown.generateOffer)}” as a new ${escapeHtml(
          dropdown.kind,
        )}</li>`,
    );
  }
  parts.push("</ul>");
  return parts.join("");
}

export function renderExportPanel(state: UiSessionState): string {
  if (state.exportedWorld !== null) {
    const filled = Array.isArray(state.exportedWorld.cells)
      ? (state.exportedWorld.cells as { state?: string }[]).filter(
          (c) => c.state === "filled",
        ).length
      : 0;
    return (
      `<div class="export-panel export-ok">world exported (${filled} locations) ` +
      `<a class="export-download" download="world.json">download</a></div>`
    );
  }
  if (state.exportIssues.length) {
    const items = state.exportIssues
      .map(
        (issue) =>
          `<li class="export-issue" data-ref="${escapeHtml(issue.ref)}">` +
          `<code>${escapeHtml(issue.ref)}</code> ${escapeHtml(issue.message)}</li>`,
      )
      .join("");
    return `<div class="export-panel export-failed"><p>export blocked:</p><ul>${items}</ul></div>`;
  }
  return "";
}

export function renderErrorBar(state: UiSessionState): string {
  if (state.error === null) return "";
  return `<div class="error-bar">${escapeHtml(state.error)}</div>`;
}

export function renderApp(state: UiSessionState): string {
  const searchBars = ["location", "character", "object"]
    .map(
      (kind) =>
        `<div class="search-box" data-kind="${kind}">` +
        `<label>${kind}</label>` +
        `<input type="search" placeholder="add a ${kind}..." data-kind="${kind}" />` +
        `<div class="dropdown-host" data-kind="${kind}"></div>` +
        `</div>`,
    )
    .join("");
  return (
    `<div class="app">` +
    renderErrorBar(state) +
    `<div class="layout">` +
    `<div class="grid-pane">${renderGrid(state)}</div>` +
    `<div class="side-pane">` +
    `<div class="hint">${
      state.selected
        ? `selected tile ${state.selected.row},${state.selected.col}`
        : "click a tile to select it"
    }</div>` +
    searchBars +
    `<button class="export-button">export world</button>` +
    renderExportPanel(state) +
    `</div></div></div>`
  );
}
