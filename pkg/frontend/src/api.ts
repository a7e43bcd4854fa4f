/** Typed client for the sequence-tuning HTTP service.
 *
 * All pixel work happens server side; this module only moves bytes and
 * numbers. The one subtlety is /integral: the server sends the focus score
 * in an X-GLV header on the image response itself, so the pair arrives
 * atomically and the UI can never show a score from one render next to the
 * pixels of another.
 */

export interface Meta {
  n_frames: number;
  height: number;
  width: number;
  fps: number;
  altitude_m: number;
  fov_deg: number;
  resolution_px: number;
  gsd_m_per_px: number;
  render: string;
}

export interface RenderParams {
  thetaDeg: number;
  speedMps: number;
  from: number;
  to: number;
  /** band half-width in degrees, or null for the unfiltered integral */
  filterU: number | null;
}

export interface Rendered {
  png: Blob;
  glv: number;
}

export interface EstimateBounds {
  thetaLoDeg: number;
  thetaHiDeg: number;
  speedMaxMps: number;
}

export interface TraceStep {
  step: number;
  theta_deg: number;
  speed_mps: number;
  glv: number;
  evals: number;
}

export type JobDoc =
  | { status: "running"; mode: string }
  | {
      status: "done";
      mode: string;
      theta_deg: number;
      speed_mps: number;
      glv: number;
      evals: number;
      steps: TraceStep[];
    }
  | { status: "failed"; mode: string; error: string };

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ServiceError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function errorFrom(resp: Response): Promise<ServiceError> {
  let detail = resp.statusText || `HTTP ${resp.status}`;
  try {
    const body = (await resp.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    /* non-JSON error body, keep the status text */
  }
  return new ServiceError(resp.status, detail);
}

export class TunerClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async meta(): Promise<Meta> {
    const resp = await this.fetchFn(`${this.base}/meta`);
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as Meta;
  }

  frameUrl(index: number): string {
    return `${this.base}/frame/${index}`;
  }

  integralUrl(p: RenderParams): string {
    const q = new URLSearchParams({
      theta: String(p.thetaDeg),
      speed: String(p.speedMps),
      from: String(p.from),
      to: String(p.to),
    });
    if (p.filterU !== null) q.set("filter_u", String(p.filterU));
    return `${this.base}/integral?${q.toString()}`;
  }

  async integral(p: RenderParams): Promise<Rendered> {
    const resp = await this.fetchFn(this.integralUrl(p));
    if (!resp.ok) throw await errorFrom(resp);
    const glv = Number(resp.headers.get("X-GLV"));
    return { png: await resp.blob(), glv };
  }

  async startEstimate(mode: "constant" | "stepwise", bounds: EstimateBounds): Promise<number> {
    const resp = await this.fetchFn(`${this.base}/estimate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        mode,
        bounds: {
          theta_lo_deg: bounds.thetaLoDeg,
          theta_hi_deg: bounds.thetaHiDeg,
          speed_max_mps: bounds.speedMaxMps,
        },
      }),
    });
    if (!resp.ok) throw await errorFrom(resp);
    const body = (await resp.json()) as { job_id: number };
    return body.job_id;
  }

  async job(id: number): Promise<JobDoc> {
    const resp = await this.fetchFn(`${this.base}/estimate/${id}`);
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as JobDoc;
  }
}
