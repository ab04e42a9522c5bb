/**
 * Dashboard controller: owns the state, talks to the API client,
 * and swaps freshly rendered regions into the page.
 *
 * The flow mirrors how a safety engineer works the treatment loop:
 * read the verdicts, probe a candidate measure in the what-if panel,
 * submit it, and iterate until the combined risk is accepted. Any
 * write that races a change made elsewhere (another tab, the CLI)
 * comes back as a version conflict and turns into a reload prompt
 * instead of a silent overwrite.
 */

import { ApiClient, ApiError, VersionConflictError } from "./api.js";
import type { VerdictDoc } from "./api.js";
import {
  initialState,
  measureDocument,
  selectedEvent,
  sliderFraction,
  validateDraft,
  violatedVerdicts,
} from "./state.js";
import type { DashboardState, MeasureDraft } from "./state.js";
import {
  clear,
  renderBanner,
  renderEventDetail,
  renderHazardLog,
  renderPreview,
  renderVerdicts,
} from "./render.js";

function field(label: string, input: HTMLElement): HTMLElement {
  const wrap = document.createElement("label");
  wrap.className = "field";
  const caption = document.createElement("span");
  caption.textContent = label;
  wrap.append(caption, input);
  return wrap;
}

function button(label: string, id: string, onClick: () => void): HTMLButtonElement {
  const node = document.createElement("button");
  node.type = "button";
  node.id = id;
  node.textContent = label;
  node.addEventListener("click", onClick);
  return node;
}

export class Dashboard {
  state: DashboardState = initialState();

  private regions = {
    header: document.createElement("header"),
    banner: document.createElement("div"),
    verdicts: document.createElement("div"),
    hazardLog: document.createElement("div"),
    eventDetail: document.createElement("div"),
    preview: document.createElement("div"),
    formErrors: document.createElement("ul"),
  };

  private inputs!: {
    initial: HTMLInputElement;
    tolerable: HTMLInputElement;
    effectiveness: HTMLInputElement;
    integrity: HTMLInputElement;
    corrupt: HTMLInputElement;
    minimum: HTMLInputElement;
    payload: HTMLTextAreaElement;
    measureEffectiveness: HTMLInputElement;
    measureIntegrity: HTMLInputElement;
    measureCorruptRate: HTMLInputElement;
    scope: HTMLInputElement;
    goalId: HTMLInputElement;
  };

  private buttons: HTMLButtonElement[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
  ) {
    this.build();
  }

  /** Fetch everything the page shows; keep last-good data on failure. */
  async load(): Promise<void> {
    try {
      const [verdicts, hazardLog, spec] = await Promise.all([
        this.client.verdicts(),
        this.client.hazardLog(),
        this.client.spec(),
      ]);
      this.state.verdicts = verdicts;
      this.state.hazardLog = hazardLog;
      this.state.specRevision = spec.revision;
      this.state.workspaceVersion = this.client.version;
      this.state.banner = null;
      this.prefillWhatif();
    } catch (err) {
      this.state.banner = {
        kind: "error",
        message: `could not refresh: ${err instanceof Error ? err.message : err}`,
      };
    }
    this.renderAll();
  }

  private prefillWhatif(): void {
    const violated: VerdictDoc | undefined = violatedVerdicts(this.state.verdicts)[0];
    if (violated === undefined) return;
    if (this.inputs.initial.value === "") {
      this.inputs.initial.value = violated.actual_display;
    }
    if (this.inputs.tolerable.value === "") {
      this.inputs.tolerable.value = violated.tolerable_display;
    }
  }

  private async mutate(action: () => Promise<void>): Promise<void> {
    this.state.busy = true;
    this.renderButtons();
    try {
      await action();
      this.state.banner = null;
    } catch (err) {
      if (err instanceof VersionConflictError) {
        const now = err.currentVersion;
        this.state.banner = {
          kind: "conflict",
          message:
            "the workspace changed elsewhere" +
            (now !== null ? ` (now at version ${now})` : "") +
            "; reload to continue from the current state",
        };
      } else if (err instanceof ApiError) {
        this.state.banner = { kind: "error", message: err.message };
        const violations = err.body.violations;
        if (Array.isArray(violations)) {
          this.setFormErrors(violations.map(String));
        }
      } else {
        this.state.banner = {
          kind: "error",
          message: err instanceof Error ? err.message : String(err),
        };
      }
      this.state.busy = false;
      this.renderAll();
      return;
    }
    this.state.busy = false;
    await this.load();
  }

  iterate(): Promise<void> {
    return this.mutate(async () => {
      await this.client.iterate();
    });
  }

  runToConvergence(): Promise<void> {
    return this.mutate(async () => {
      await this.client.run();
    });
  }

  previewResidual(): Promise<void> {
    const params: Record<string, string> = {
      initial: this.inputs.initial.value.trim(),
      effectiveness: sliderFraction(this.inputs.effectiveness.value),
      integrity: sliderFraction(this.inputs.integrity.value),
    };
    if (this.inputs.corrupt.value.trim() !== "") {
      params.corrupt = this.inputs.corrupt.value.trim();
    }
    if (this.inputs.minimum.value.trim() !== "") {
      params.min = this.inputs.minimum.value.trim();
    }
    if (this.inputs.tolerable.value.trim() !== "") {
      params.tolerable = this.inputs.tolerable.value.trim();
    }
    return this.request(async () => {
      const response = await this.client.whatifResidual(params);
      this.state.preview = { kind: "residual", response };
    });
  }

  previewMeasure(): Promise<void> {
    const problems = this.collectDraftProblems();
    if (problems.length > 0) return Promise.resolve();
    return this.request(async () => {
      const response = await this.client.whatifMeasure(
        measureDocument(this.readDraft()),
      );
      this.state.preview = { kind: "measure", response };
    });
  }

  submitAndIterate(): Promise<void> {
    const problems = this.collectDraftProblems();
    if (problems.length > 0) return Promise.resolve();
    return this.mutate(async () => {
      await this.client.submitMeasure(measureDocument(this.readDraft()), true);
      await this.client.run();
      this.state.preview = null;
    });
  }

  /** Read-only request: errors banner, state otherwise untouched. */
  private async request(action: () => Promise<void>): Promise<void> {
    this.state.busy = true;
    this.renderButtons();
    try {
      await action();
      this.state.banner = null;
    } catch (err) {
      this.state.banner = {
        kind: err instanceof VersionConflictError ? "conflict" : "error",
        message: err instanceof Error ? err.message : String(err),
      };
    }
    this.state.busy = false;
    this.state.workspaceVersion = this.client.version;
    this.renderAll();
  }

  private readDraft(): MeasureDraft {
    return {
      kind: "behavior_spec_delta",
      payload: this.inputs.payload.value,
      effectiveness: this.inputs.measureEffectiveness.value,
      integrity: this.inputs.measureIntegrity.value,
      corruptRate: this.inputs.measureCorruptRate.value,
      corruptSeverity: "",
      scope: this.inputs.scope.value,
      goalId: this.inputs.goalId.value,
    };
  }

  private collectDraftProblems(): string[] {
    const problems = validateDraft(this.readDraft());
    this.setFormErrors(problems);
    return problems;
  }

  private setFormErrors(problems: string[]): void {
    clear(this.regions.formErrors);
    for (const problem of problems) {
      const item = document.createElement("li");
      item.textContent = problem;
      this.regions.formErrors.append(item);
    }
  }

  private build(): void {
    clear(this.root);
    const slider = (id: string) => {
      const node = document.createElement("input");
      node.type = "range";
      node.id = id;
      node.min = "0";
      node.max = "1000";
      node.value = "999";
      return node;
    };
    const text = (id: string, value = "") => {
      const node = document.createElement("input");
      node.type = "text";
      node.id = id;
      node.value = value;
      return node;
    };
    const payload = document.createElement("textarea");
    payload.id = "measure-payload";
    payload.rows = 6;

    this.inputs = {
      initial: text("whatif-initial"),
      tolerable: text("whatif-tolerable"),
      effectiveness: slider("whatif-effectiveness"),
      integrity: slider("whatif-integrity"),
      corrupt: text("whatif-corrupt"),
      minimum: text("whatif-min"),
      payload,
      measureEffectiveness: text("measure-effectiveness", "999/1000"),
      measureIntegrity: text("measure-integrity", "999/1000"),
      measureCorruptRate: text("measure-corrupt-rate"),
      scope: text("measure-scope"),
      goalId: text("measure-goal"),
    };

    const whatifForm = document.createElement("section");
    whatifForm.id = "whatif-form";
    const whatifTitle = document.createElement("h2");
    whatifTitle.textContent = "What-if";
    whatifForm.append(
      whatifTitle,
      field("initial rate", this.inputs.initial),
      field("tolerable rate", this.inputs.tolerable),
      field("effectiveness (per mille)", this.inputs.effectiveness),
      field("integrity (per mille)", this.inputs.integrity),
      field("corrupt behavior risk", this.inputs.corrupt),
      field("minimum achievable rate", this.inputs.minimum),
      button("Preview residual", "preview-residual", () => {
        void this.previewResidual();
      }),
    );

    const measureForm = document.createElement("section");
    measureForm.id = "measure-form";
    const measureTitle = document.createElement("h2");
    measureTitle.textContent = "Safety measure";
    this.regions.formErrors.id = "form-errors";
    this.regions.formErrors.className = "form-errors";
    measureForm.append(
      measureTitle,
      field("specification delta", payload),
      field("claimed effectiveness", this.inputs.measureEffectiveness),
      field("integrity", this.inputs.measureIntegrity),
      field("corrupt behavior risk rate", this.inputs.measureCorruptRate),
      field("scenario scope (comma separated)", this.inputs.scope),
      field("safety goal id (optional)", this.inputs.goalId),
      button("Preview measure", "preview-measure", () => {
        void this.previewMeasure();
      }),
      button("Submit and iterate", "submit-measure", () => {
        void this.submitAndIterate();
      }),
      this.regions.formErrors,
    );

    const controls = document.createElement("div");
    controls.id = "controls";
    controls.append(
      button("Step", "iterate", () => {
        void this.iterate();
      }),
      button("Run to convergence", "run", () => {
        void this.runToConvergence();
      }),
      button("Refresh", "refresh", () => {
        void this.load();
      }),
    );

    this.buttons = [
      ...controls.querySelectorAll("button"),
      ...whatifForm.querySelectorAll("button"),
      ...measureForm.querySelectorAll("button"),
    ];

    this.root.append(
      this.regions.header,
      this.regions.banner,
      controls,
      this.regions.verdicts,
      this.regions.preview,
      whatifForm,
      measureForm,
      this.regions.hazardLog,
      this.regions.eventDetail,
    );
    this.renderAll();
  }

  private renderButtons(): void {
    for (const node of this.buttons) {
      node.disabled = this.state.busy;
    }
  }

  renderAll(): void {
    const { state, regions } = this;
    clear(regions.header);
    const title = document.createElement("h1");
    title.textContent = "Risk management dashboard";
    const meta = document.createElement("p");
    meta.id = "workspace-meta";
    meta.textContent =
      state.workspaceVersion === null
        ? "workspace not loaded"
        : `workspace version ${state.workspaceVersion}` +
          (state.specRevision !== null
            ? `, specification revision ${state.specRevision}`
            : "");
    regions.header.append(title, meta);

    clear(regions.banner);
    regions.banner.append(
      renderBanner(state.banner, () => {
        void this.load();
      }),
    );
    clear(regions.verdicts);
    regions.verdicts.append(renderVerdicts(state.verdicts));
    clear(regions.preview);
    regions.preview.append(renderPreview(state.preview));
    clear(regions.hazardLog);
    regions.hazardLog.append(
      renderHazardLog(state.hazardLog, state.selectedEventId, (eventId) => {
        this.state.selectedEventId = eventId;
        this.renderAll();
      }),
    );
    clear(regions.eventDetail);
    regions.eventDetail.append(renderEventDetail(selectedEvent(state)));
    this.renderButtons();
  }
}

export function initDashboard(root: HTMLElement, client: ApiClient): Dashboard {
  return new Dashboard(root, client);
}
