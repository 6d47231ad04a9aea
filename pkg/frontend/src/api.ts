import type {
  AnalysisReport,
  ComparisonResponse,
  OverlayRecord,
} from "./types.js";
import { parseSpotlight, SpotlightView } from "./spotlight.js";

export interface AnalyzeOptions {
  lam?: number;
  method?: string;
  leader?: number;
  n_bins?: number;
  w_pose?: number;
  w_time?: number;
  tau_cap_ms?: number;
  model?: string;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly stage?: string,
    readonly code?: string,
  ) {
    super(message);
  }
}

async function fail(response: Response): Promise<never> {
  let stage: string | undefined;
  let code: string | undefined;
  let message = `${response.status}`;
  try {
    const body = await response.json();
    stage = body?.error?.stage;
    code = body?.error?.code;
    message = body?.error?.message ?? message;
  } catch {
    // non-JSON error body
  }
  throw new ApiError(message, response.status, stage, code);
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async createSession(mode: string, practiceIndex = 0): Promise<string> {
    const r = await fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ mode, practice_index: practiceIndex }),
    });
    if (!r.ok) await fail(r);
    return (await r.json()).id as string;
  }

  async addRecording(sessionId: string, body: {
    role: string;
    poses: string;
    fps?: number;
    beats?: string;
    bpm?: number;
  }): Promise<void> {
    const r = await fetch(this.url(`/sessions/${sessionId}/recordings`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!r.ok) await fail(r);
  }

  async analyze(sessionId: string, options: AnalyzeOptions): Promise<void> {
    const r = await fetch(this.url(`/sessions/${sessionId}/analyze`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(options),
    });
    if (!r.ok && r.status !== 202) await fail(r);
  }

  // Poll until the post-hoc analysis finishes.
  async report(sessionId: string, timeoutMs = 120_000, intervalMs = 400): Promise<AnalysisReport> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const r = await fetch(this.url(`/sessions/${sessionId}/report`));
      if (r.status === 200) return (await r.json()) as AnalysisReport;
      if (r.status !== 202) await fail(r);
      if (Date.now() > deadline) {
        throw new ApiError("analysis did not finish in time", 408);
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  // Returns the raw response text too: spotlight ordering must be used
  // byte-for-byte as served.
  async spotlight(sessionId: string): Promise<SpotlightView> {
    const r = await fetch(this.url(`/sessions/${sessionId}/spotlight`));
    if (!r.ok) await fail(r);
    return parseSpotlight(await r.text());
  }

  async overlay(sessionId: string, frame: number): Promise<OverlayRecord | null> {
    const r = await fetch(this.url(`/sessions/${sessionId}/overlay?frame=${frame}`));
    if (r.status === 404) return null; // missing frame: skip overlay
    if (!r.ok) await fail(r);
    return (await r.json()) as OverlayRecord;
  }

  async comparison(ids: string[]): Promise<ComparisonResponse> {
    const r = await fetch(this.url(`/comparison?ids=${ids.join(",")}`));
    if (!r.ok) await fail(r);
    return (await r.json()) as ComparisonResponse;
  }
}
