/** Controller behind the tuning page.
 *
 * Owns the slider state, the debounced render loop against /integral, and
 * the auto-estimation job. Two rules shape the render path:
 *
 *   - at most one render request is outstanding; pokes that arrive while
 *     one is in flight collapse into a single follow-up render,
 *   - a response is applied only as a whole bundle (pixels of both panes
 *     plus their focus scores plus the parameters that produced them), and
 *     only if no newer bundle has been applied, so the page can never pair
 *     an image with a score from a different render.
 */

import type {
  EstimateBounds,
  JobDoc,
  Meta,
  RenderParams,
  Rendered,
  TraceStep,
} from "./api.js";
import { ServiceError } from "./api.js";
import { debounce, type Debounced } from "./debounce.js";
import {
  applyPatch,
  initialState,
  renderParams,
  type ParamPatch,
  type TunerState,
} from "./state.js";

/** What the controller needs from the HTTP client (TunerClient provides it). */
export interface TunerService {
  integral(p: RenderParams): Promise<Rendered>;
  startEstimate(
    mode: "constant" | "stepwise",
    bounds: EstimateBounds,
  ): Promise<number>;
  job(id: number): Promise<JobDoc>;
}

export interface RenderBundle {
  params: RenderParams;
  plain: Rendered;
  filtered: Rendered | null;
}

export interface TunerView {
  state: TunerState;
  shown: RenderBundle | null;
  banner: string | null;
  inFlight: boolean;
  jobRunning: boolean;
  /** focus score of every applied render, in session order */
  glvLog: readonly number[];
  trace: readonly TraceStep[];
  lastJob: JobDoc | null;
}

export interface TunerOptions {
  debounceMs?: number;
  pollMs?: number;
  speedMax?: number;
}

const describe = (err: unknown): string =>
  err instanceof Error ? err.message : String(err);

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class TunerController {
  private state: TunerState;
  private shown: RenderBundle | null = null;
  private banner: string | null = null;
  private glvLog: number[] = [];
  private trace: TraceStep[] = [];
  private lastJob: JobDoc | null = null;

  private issued = 0;
  private applied = 0;
  private pending = false;
  private queued = false;
  private jobRunning = false;

  private readonly poke: Debounced;
  private readonly pollMs: number;
  private readonly listeners = new Set<(v: TunerView) => void>();

  constructor(
    private readonly client: TunerService,
    meta: Meta,
    opts: TunerOptions = {},
  ) {
    this.state = initialState(meta, opts.speedMax ?? 1.0);
    this.pollMs = opts.pollMs ?? 500;
    this.poke = debounce(() => void this.render(), opts.debounceMs ?? 150);
  }

  subscribe(fn: (v: TunerView) => void): () => void {
    this.listeners.add(fn);
    fn(this.view());
    return () => this.listeners.delete(fn);
  }

  view(): TunerView {
    return {
      state: this.state,
      shown: this.shown,
      banner: this.banner,
      inFlight: this.pending,
      jobRunning: this.jobRunning,
      glvLog: this.glvLog,
      trace: this.trace,
      lastJob: this.lastJob,
    };
  }

  /** Slider/toggle input: snap to the control grid, then render debounced. */
  setParams(patch: ParamPatch): void {
    this.state = applyPatch(this.state, patch);
    this.notify();
    this.poke();
  }

  /** Job results land verbatim so the sliders equal the estimate exactly. */
  private setExact(thetaDeg: number, speedMps: number): void {
    this.state = {
      ...this.state,
      thetaDeg,
      speedMps,
      speedMax: Math.max(this.state.speedMax, speedMps),
    };
    this.poke.cancel();
    this.notify();
    void this.render();
  }

  private async render(): Promise<void> {
    if (this.pending) {
      this.queued = true;
      return;
    }
    this.pending = true;
    this.notify();
    const params = renderParams(this.state);
    const seq = ++this.issued;
    try {
      const plain = await this.client.integral({ ...params, filterU: null });
      const filtered =
        params.filterU !== null ? await this.client.integral(params) : null;
      if (seq > this.applied) {
        this.applied = seq;
        this.shown = { params, plain, filtered };
        this.banner = null;
        this.glvLog.push(plain.glv);
      }
    } catch (err) {
      // keep the last good bundle on screen, surface the failure
      this.banner = describe(err);
    } finally {
      this.pending = false;
      this.notify();
      if (this.queued) {
        this.queued = false;
        void this.render();
      }
    }
  }

  async runAutoEstimate(
    mode: "constant" | "stepwise",
    bounds: EstimateBounds,
  ): Promise<void> {
    if (this.jobRunning) {
      this.banner = "estimation already running";
      this.notify();
      return;
    }
    this.jobRunning = true;
    this.banner = null;
    this.notify();
    try {
      const id = await this.client.startEstimate(mode, bounds);
      let doc = await this.client.job(id);
      while (doc.status === "running") {
        await sleep(this.pollMs);
        doc = await this.client.job(id);
      }
      this.lastJob = doc;
      if (doc.status === "done") {
        this.trace = doc.steps;
        this.setExact(doc.theta_deg, doc.speed_mps);
      } else {
        this.banner = `estimation failed: ${doc.error}`;
      }
    } catch (err) {
      this.banner =
        err instanceof ServiceError && err.status === 409
          ? "estimation already running"
          : describe(err);
    } finally {
      this.jobRunning = false;
      this.notify();
    }
  }

  private notify(): void {
    const snapshot = this.view();
    this.listeners.forEach((fn) => fn(snapshot));
  }
}
