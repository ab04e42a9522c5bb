import { describe, expect, it, vi } from "vitest";

import {
  renderBanner,
  renderEventDetail,
  renderHazardLog,
  renderPreview,
  renderVerdicts,
} from "../src/render.js";
import { acceptedView, hazardLog, violatedView } from "./fixtures.js";

function texts(root: HTMLElement, selector: string): string[] {
  return Array.from(root.querySelectorAll(selector), (node) => node.textContent ?? "");
}

describe("verdict table", () => {
  it("shows server rate strings verbatim with a violated badge", () => {
    const view = violatedView();
    const table = renderVerdicts(view);
    const row = table.querySelector("tr.verdict-violated");
    expect(row).not.toBeNull();
    const cells = texts(row as HTMLElement, "td");
    expect(cells[0]).toBe("PRB");
    expect(cells[1]).toBe("S3");
    expect(cells[2]).toBe(view.verdicts[0]?.actual_display);
    expect(cells[3]).toBe(view.verdicts[0]?.tolerable_display);
    expect(table.querySelector(".badge-violated")?.textContent).toBe("violated");
    expect(cells[5]).toBe("×268.5 reduction required");
  });

  it("labels results as re-analysis, never prediction", () => {
    const section = renderVerdicts(violatedView());
    expect(section.querySelector(".provenance")?.textContent).toContain(
      "evaluated (re-analysis)",
    );
    expect(section.textContent).not.toContain("predicted");
  });

  it("shows the summary line the server produced", () => {
    const section = renderVerdicts(violatedView());
    expect(section.querySelector(".summary")?.textContent).toBe(
      "1 criterion violated (PRB/S3): 1.25e-7 > 4.64e-10",
    );
  });

  it("renders an accepted report as all green with no reduction demand", () => {
    const section = renderVerdicts(acceptedView());
    expect(section.querySelectorAll(".badge-violated")).toHaveLength(0);
    expect(section.querySelector(".badge-accepted")?.textContent).toBe("accepted");
    expect(section.textContent).not.toContain("reduction required");
  });

  it("prompts to run an iteration when nothing is evaluated yet", () => {
    for (const view of [null, { ...violatedView(), verdicts: [] }]) {
      const section = renderVerdicts(view);
      expect(section.querySelector(".empty-state")?.textContent).toContain(
        "run an iteration",
      );
      expect(section.querySelector("table")).toBeNull();
    }
  });
});

describe("banner", () => {
  it("is empty without an error", () => {
    const node = renderBanner(null, () => {});
    expect(node.textContent).toBe("");
    expect(node.classList.contains("banner")).toBe(false);
  });

  it("offers a reload on version conflicts and wires the handler", () => {
    const onReload = vi.fn();
    const node = renderBanner(
      { kind: "conflict", message: "the workspace changed elsewhere" },
      onReload,
    );
    expect(node.textContent).toContain("changed elsewhere");
    const reload = node.querySelector("button");
    expect(reload?.textContent).toBe("Reload");
    reload?.dispatchEvent(new MouseEvent("click"));
    expect(onReload).toHaveBeenCalledOnce();
  });

  it("shows plain errors without a reload button", () => {
    const node = renderBanner({ kind: "error", message: "could not refresh" }, () => {});
    expect(node.querySelector("button")).toBeNull();
    expect(node.classList.contains("banner-error")).toBe(true);
  });
});

describe("hazard log", () => {
  it("lists entries with status badges and event buttons", () => {
    const root = renderHazardLog(hazardLog(), null, () => {});
    expect(root.textContent).toContain("H-CROSSWALK");
    expect(root.querySelector(".badge-open")?.textContent).toBe("open");
    expect(root.querySelector("button.event")?.textContent).toContain(
      "collides with a pedestrian",
    );
  });

  it("marks the selected event and reports clicks", () => {
    const onSelect = vi.fn();
    const root = renderHazardLog(hazardLog(), "HE-1", onSelect);
    const button = root.querySelector("button.event");
    expect(button?.classList.contains("selected")).toBe(true);
    button?.dispatchEvent(new MouseEvent("click"));
    expect(onSelect).toHaveBeenCalledWith("HE-1");
  });

  it("shows the latest lifecycle note once accepted", () => {
    const root = renderHazardLog(hazardLog("accepted"), null, () => {});
    expect(root.querySelector(".badge-accepted")).not.toBeNull();
    expect(root.querySelector(".note")?.textContent).toBe("risk evaluation accepted");
  });

  it("says so when the log is empty", () => {
    const root = renderHazardLog([], null, () => {});
    expect(root.textContent).toContain("empty");
  });
});

describe("event detail", () => {
  it("renders nothing without a selection", () => {
    expect(renderEventDetail(null).textContent).toBe("");
  });

  it("shows the event fields", () => {
    const event = hazardLog()[0]?.events[0];
    const root = renderEventDetail(event ?? null);
    expect(root.textContent).toContain("HE-1");
    expect(root.textContent).toContain("proceed_through_crosswalk");
    expect(root.textContent).toContain("crosswalk-base");
  });
});

describe("what-if preview", () => {
  it("labels residual previews as model predictions and shows server strings", () => {
    const root = renderPreview({
      kind: "residual",
      response: {
        residual: "2079/8000000000000",
        residual_display: "2.6e-10",
        severity_class: "S3",
        tolerable_display: "4.64e-10",
        would_accept: true,
      },
    });
    expect(root.querySelector(".provenance")?.textContent).toBe("predicted (model)");
    expect(root.querySelector("#preview-residual")?.textContent).toBe("2.6e-10");
    expect(root.textContent).toContain("4.64e-10");
    expect(root.querySelector(".preview-outcome")?.textContent).toBe("pass");
  });

  it("shows fail when the predicted residual is not tolerable", () => {
    const root = renderPreview({
      kind: "residual",
      response: {
        residual: "1/8030000",
        residual_display: "1.25e-7",
        severity_class: "S3",
        tolerable_display: "4.64e-10",
        would_accept: false,
      },
    });
    expect(root.querySelector(".preview-outcome")?.textContent).toBe("fail");
    expect(root.querySelector(".preview-outcome")?.classList.contains("fail")).toBe(true);
  });

  it("renders measure simulations with per-criterion predictions", () => {
    const root = renderPreview({
      kind: "measure",
      response: {
        measure: { id: "SM-1", kind: "behavior_spec_delta" },
        summary: "measure would converge",
        residual_prediction: [
          {
            criterion_id: "PRB",
            severity_class: "S3",
            current: "1.25e-7",
            predicted: "2.6e-10",
            tolerable: "4.64e-10",
            would_accept: true,
          },
        ],
        iteration1: { accepted: true, summary: "ok" },
        iteration2: { accepted: true, summary: "ok" },
      },
    });
    expect(root.textContent).toContain("measure would converge");
    expect(root.textContent).toContain("predicted (model)");
    const cells = texts(root, "td");
    expect(cells).toContain("1.25e-7");
    expect(cells).toContain("2.6e-10");
  });

  it("renders nothing without a preview", () => {
    expect(renderPreview(null).textContent).toBe("");
  });
});
