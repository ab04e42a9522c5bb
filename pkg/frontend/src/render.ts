/**
 * DOM builders for the dashboard regions.
 *
 * Each function returns a fresh element for one region; the caller
 * swaps it into the page. Rate strings coming from the API land in
 * text nodes verbatim. What-if output is labeled "predicted (model)"
 * and evaluation output "evaluated (re-analysis)" so the two are
 * never mistaken for each other.
 */

import type { HazardEventDoc, HazardLogEntryDoc, VerdictsView } from "./api.js";
import type { Banner, WhatifPreview } from "./state.js";

type Child = Node | string;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

function badge(status: string): HTMLElement {
  return el("span", { class: `badge badge-${status}` }, status);
}

export function renderBanner(
  banner: Banner | null,
  onReload: () => void,
): HTMLElement {
  const root = el("div", { id: "banner" });
  if (banner === null) return root;
  root.classList.add("banner", `banner-${banner.kind}`);
  root.append(el("span", {}, banner.message));
  if (banner.kind === "conflict") {
    const reload = el("button", { type: "button", class: "reload" }, "Reload");
    reload.addEventListener("click", onReload);
    root.append(" ", reload);
  }
  return root;
}

export function renderVerdicts(view: VerdictsView | null): HTMLElement {
  const root = el("section", { id: "verdicts" });
  root.append(el("h2", {}, "Risk verdicts"));
  if (view === null || view.verdicts.length === 0) {
    root.append(
      el(
        "p",
        { class: "empty-state" },
        "No verdicts yet: run an iteration to evaluate the current specification.",
      ),
    );
    return root;
  }
  root.append(
    el(
      "p",
      { class: "provenance" },
      `evaluated (re-analysis), iteration ${view.iteration}`,
    ),
  );
  root.append(el("p", { class: "summary" }, view.summary));
  const head = el(
    "tr",
    {},
    el("th", {}, "criterion"),
    el("th", {}, "severity"),
    el("th", {}, "actual"),
    el("th", {}, "tolerable"),
    el("th", {}, "status"),
    el("th", {}, "required reduction"),
  );
  const body = el("tbody");
  for (const verdict of view.verdicts) {
    const row = el(
      "tr",
      { class: `verdict verdict-${verdict.status}` },
      el("td", {}, verdict.criterion_id),
      el("td", {}, verdict.severity_class),
      el("td", { class: "rate" }, verdict.actual_display),
      el("td", { class: "rate" }, verdict.tolerable_display),
      el("td", {}, badge(verdict.status)),
      el(
        "td",
        { class: "reduction" },
        verdict.required_reduction_display
          ? `×${verdict.required_reduction_display} reduction required`
          : "",
      ),
    );
    body.append(row);
  }
  root.append(el("table", {}, el("thead", {}, head), body));
  return root;
}

export function renderHazardLog(
  entries: HazardLogEntryDoc[],
  selectedEventId: string | null,
  onSelect: (eventId: string) => void,
): HTMLElement {
  const root = el("section", { id: "hazard-log" });
  root.append(el("h2", {}, "Hazard log"));
  if (entries.length === 0) {
    root.append(el("p", { class: "empty-state" }, "Hazard log is empty."));
    return root;
  }
  for (const entry of entries) {
    const card = el(
      "article",
      { class: "hazard-entry", "data-entry": entry.hazard_id },
      el("h3", {}, `${entry.hazard_id} `, badge(entry.status)),
    );
    const list = el("ul", { class: "events" });
    for (const event of entry.events) {
      const button = el(
        "button",
        { type: "button", class: "event", "data-event": event.id },
        `${event.id}: ${event.description}`,
      );
      if (event.id === selectedEventId) button.classList.add("selected");
      button.addEventListener("click", () => onSelect(event.id));
      list.append(el("li", {}, button));
    }
    card.append(list);
    const lastNote = [...entry.history].reverse().find((row) => row.note)?.note;
    if (lastNote !== undefined) {
      card.append(el("p", { class: "note" }, lastNote));
    }
    root.append(card);
  }
  return root;
}

export function renderEventDetail(event: HazardEventDoc | null): HTMLElement {
  const root = el("section", { id: "event-detail" });
  if (event === null) return root;
  root.append(
    el("h3", {}, `Event ${event.id}`),
    el("p", {}, event.description),
    el(
      "dl",
      {},
      el("dt", {}, "hazard"),
      el("dd", {}, event.hazard_id),
      el("dt", {}, "scenario"),
      el("dd", {}, event.scenario_id),
      el("dt", {}, "triggering behavior"),
      el("dd", {}, event.triggering_behavior),
      el("dt", {}, "provenance"),
      el("dd", {}, event.provenance),
    ),
  );
  return root;
}

export function renderPreview(preview: WhatifPreview | null): HTMLElement {
  const root = el("section", { id: "preview" });
  if (preview === null) return root;
  root.append(
    el("h3", {}, "What-if ", el("span", { class: "provenance" }, "predicted (model)")),
  );
  if (preview.kind === "residual") {
    const response = preview.response;
    const rows = el(
      "dl",
      {},
      el("dt", {}, "predicted residual"),
      el("dd", { class: "rate", id: "preview-residual" }, response.residual_display),
      el("dt", {}, "severity"),
      el("dd", {}, response.severity_class),
    );
    if (response.tolerable_display !== undefined) {
      rows.append(
        el("dt", {}, "tolerable"),
        el("dd", { class: "rate" }, response.tolerable_display),
      );
    }
    root.append(rows);
    if (response.would_accept !== undefined) {
      root.append(
        el(
          "p",
          { class: `preview-outcome ${response.would_accept ? "pass" : "fail"}` },
          response.would_accept ? "pass" : "fail",
        ),
      );
    }
    return root;
  }
  const response = preview.response;
  root.append(el("p", { class: "summary" }, response.summary));
  const table = el("table");
  const body = el("tbody");
  for (const row of response.residual_prediction) {
    body.append(
      el(
        "tr",
        {},
        el("td", {}, `${row.criterion_id}/${row.severity_class}`),
        el("td", { class: "rate" }, row.current),
        el("td", { class: "rate" }, row.predicted),
        el("td", { class: "rate" }, row.tolerable),
        el("td", {}, badge(row.would_accept ? "accepted" : "violated")),
      ),
    );
  }
  table.append(
    el(
      "thead",
      {},
      el(
        "tr",
        {},
        el("th", {}, "criterion"),
        el("th", {}, "current"),
        el("th", {}, "predicted"),
        el("th", {}, "tolerable"),
        el("th", {}, "outcome"),
      ),
    ),
    body,
  );
  root.append(table);
  return root;
}
