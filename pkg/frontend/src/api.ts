/** Thin typed client for the snapshot API. */

import type {
  AttentionBody,
  CausalityBody,
  ClustersBody,
  EnforceJob,
  HeadClustersBody,
  Road,
  Series,
  SnapshotMeta,
  SpeedsBody,
  Trend,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class Api {
  constructor(private base: string = "") {}

  private async get<T>(path: string, params?: Record<string, string | number>, signal?: AbortSignal): Promise<T> {
    const url = new URL(this.base + path, this.base ? undefined : window.location.origin);
    for (const [k, v] of Object.entries(params ?? {})) {
      url.searchParams.set(k, String(v));
    }
    const resp = await fetch(url.toString(), { signal });
    if (!resp.ok) {
      throw new ApiError(resp.status, `${path}: ${resp.status} ${await resp.text()}`);
    }
    return (await resp.json()) as T;
  }

  snapshot(signal?: AbortSignal): Promise<SnapshotMeta> {
    return this.get("/snapshot", undefined, signal);
  }

  roads(signal?: AbortSignal): Promise<Road[]> {
    return this.get("/roads", undefined, signal);
  }

  trend(id: string, signal?: AbortSignal): Promise<Trend> {
    return this.get(`/roads/${encodeURIComponent(id)}/trend`, undefined, signal);
  }

  series(
    id: string,
    params: { horizon: number; from?: string; to?: string; cursor?: string },
    signal?: AbortSignal,
  ): Promise<Series> {
    return this.get(`/roads/${encodeURIComponent(id)}/series`, params as Record<string, string | number>, signal);
  }

  attention(
    id: string,
    params: { t: string; horizon: number; head?: number; threshold?: number },
    signal?: AbortSignal,
  ): Promise<AttentionBody> {
    return this.get(`/roads/${encodeURIComponent(id)}/attention`, params as Record<string, string | number>, signal);
  }

  causality(id: string, signal?: AbortSignal): Promise<CausalityBody> {
    return this.get(`/roads/${encodeURIComponent(id)}/causality`, undefined, signal);
  }

  clusters(signal?: AbortSignal): Promise<ClustersBody> {
    return this.get("/clusters", undefined, signal);
  }

  headclusters(scale: "global" | "local", signal?: AbortSignal): Promise<HeadClustersBody> {
    return this.get("/headclusters", { scale }, signal);
  }

  speeds(t: string, signal?: AbortSignal): Promise<SpeedsBody> {
    return this.get("/speeds", { t }, signal);
  }

  async enforce(body: { clusters: number[]; k: number; alpha: number; head_average?: boolean }): Promise<string> {
    const resp = await fetch(this.base + "/enforce", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, `/enforce: ${resp.status} ${await resp.text()}`);
    }
    const doc = (await resp.json()) as { job_id: string };
    return doc.job_id;
  }

  job(id: string, signal?: AbortSignal): Promise<EnforceJob> {
    return this.get(`/enforce/${encodeURIComponent(id)}`, undefined, signal);
  }

  /** Poll a job with linear backoff until it finishes. */
  async waitForJob(id: string, maxWaitMs = 120000): Promise<EnforceJob> {
    const started = Date.now();
    let delay = 250;
    for (;;) {
      const job = await this.job(id);
      if (job.status === "done" || job.status === "failed") {
        return job;
      }
      if (Date.now() - started > maxWaitMs) {
        throw new ApiError(504, `job ${id} still ${job.status} after ${maxWaitMs}ms`);
      }
      await new Promise((r) => setTimeout(r, delay));
      delay = Math.min(delay * 1.5, 3000);
    }
  }
}
