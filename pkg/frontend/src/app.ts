/**
 * Browser shell: wires the selection controls to the API client and the pure
 * renderers.  The full selection lives in the URL hash, the deaths slider is
 * bound to the service grid, and a new selection aborts any in-flight
 * request.
 */

import { ApiError, ExplorerClient, type Meta } from "./api.js";
import { decodeSelection, encodeSelection, type Selection } from "./state.js";
import { renderCurve, renderEquivalents, renderViewBoard } from "./views.js";

const DEBOUNCE_MS = 150;

interface Elements {
  reporting: HTMLSelectElement;
  affected: HTMLSelectElement;
  dtype: HTMLSelectElement;
  deaths: HTMLInputElement;
  view: HTMLSelectElement;
  curve: HTMLElement;
  equivalents: HTMLElement;
  board: HTMLElement;
  status: HTMLElement;
}

function fillSelect(select: HTMLSelectElement, options: string[], value: string): void {
  select.innerHTML = options
    .map((o) => `<option value="${o}"${o === value ? " selected" : ""}>${o}</option>`)
    .join("");
}

export class ExplorerApp {
  private selection!: Selection;
  private controller: AbortController | null = null;
  private debounce: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly client: ExplorerClient,
    private readonly meta: Meta,
    private readonly el: Elements,
  ) {}

  start(): void {
    this.selection = decodeSelection(window.location.hash.slice(1), this.meta);
    const { grid } = this.meta;
    this.el.deaths.min = String(grid.min);
    this.el.deaths.max = String(grid.max);
    this.el.deaths.step = String(grid.step);
    this.bind();
    this.syncControls();
    void this.refresh();
  }

  private bind(): void {
    this.el.reporting.addEventListener("change", () =>
      this.update({ reporting: this.el.reporting.value }),
    );
    this.el.affected.addEventListener("change", () =>
      this.update({ affected: this.el.affected.value }),
    );
    this.el.dtype.addEventListener("change", () =>
      this.update({ dtype: this.el.dtype.value }),
    );
    this.el.view.addEventListener("change", () =>
      this.update({ view: this.el.view.value as Selection["view"] }),
    );
    this.el.deaths.addEventListener("input", () => {
      // debounce slider drags so we only fetch when the hand pauses
      if (this.debounce !== null) clearTimeout(this.debounce);
      this.debounce = setTimeout(
        () => this.update({ deaths: Number(this.el.deaths.value) }),
        DEBOUNCE_MS,
      );
    });
  }

  private update(patch: Partial<Selection>): void {
    this.selection = decodeSelection(
      encodeSelection({ ...this.selection, ...patch }),
      this.meta,
    );
    window.location.hash = encodeSelection(this.selection);
    this.syncControls();
    void this.refresh();
  }

  private syncControls(): void {
    const s = this.selection;
    fillSelect(this.el.reporting, this.meta.countries, s.reporting);
    fillSelect(
      this.el.affected,
      this.meta.countries.filter((c) => c !== s.reporting),
      s.affected,
    );
    fillSelect(this.el.dtype, this.meta.dtypes, s.dtype);
    fillSelect(this.el.view, ["disaster", "reporting"], s.view);
    this.el.deaths.value = String(s.deaths);
  }

  private async refresh(): Promise<void> {
    this.controller?.abort();
    this.controller = new AbortController();
    const { signal } = this.controller;
    const s = this.selection;
    this.el.status.textContent = "loading…";
    try {
      const [counterfactual, view] = await Promise.all([
        this.client.getCounterfactual(
          { reporting: s.reporting, affected: s.affected, dtype: s.dtype, deaths: s.deaths },
          signal,
        ),
        this.client.getView(
          s.view,
          s.view === "disaster" ? s.affected : s.reporting,
          s.dtype,
          s.deaths,
          signal,
        ),
      ]);
      if (signal.aborted) return;
      this.el.curve.innerHTML = renderCurve(counterfactual);
      this.el.equivalents.innerHTML = renderEquivalents(counterfactual);
      this.el.board.innerHTML = renderViewBoard(view);
      this.el.status.textContent = "";
    } catch (error) {
      if (signal.aborted) return;
      if (error instanceof ApiError) {
        this.el.status.textContent = error.retryable
          ? "model is loading on the server — retry shortly"
          : `invalid selection: ${error.code}`;
      } else {
        this.el.status.textContent = "service unreachable";
      }
    }
  }
}

export async function boot(baseUrl: string, el: Elements): Promise<ExplorerApp> {
  const client = new ExplorerClient(baseUrl);
  const meta = await client.getMeta();
  const app = new ExplorerApp(client, meta, el);
  app.start();
  return app;
}
