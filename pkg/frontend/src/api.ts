/**
 * Typed client for the power-analysis service.  Every call posts JSON,
 * unwraps the {ok, error, payload} envelope, and keeps at most one
 * request in flight: a newer call aborts the older one, which then
 * fails with SupersededError so the caller can drop it silently.
 */

import { FormState, zSpec } from "./state.js";

export interface ErrorField {
  field: string;
  message: string;
}

export interface EnvelopeError {
  code: string;
  message: string;
  fields?: ErrorField[];
}

interface Envelope<T> {
  ok: boolean;
  error: EnvelopeError | null;
  payload: T | null;
}

export interface PowerPayload {
  power: number;
  e1: number;
  n: number;
  z: string;
  psi: number;
  delta: number;
  sigma: number;
  alpha: number;
  alternative: string;
}

export interface SampleSizePayload {
  n: number;
  power_at_n: number;
  target_power: number;
  z: string;
  psi: number;
  delta: number;
  sigma: number;
  alpha: number;
  alternative: string;
}

export interface PreviewFit {
  psi_hat: number | null;
  delta_hat: number;
  segments: [number, number][];
}

export interface PreviewPayload {
  z: number[];
  y: number[];
  fit: PreviewFit;
}

/** The service refused the request; code/fields come from its envelope. */
export class ServiceError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly fields: ErrorField[] = [],
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

/** The service could not be reached or answered garbage; worth a retry. */
export class NetworkError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NetworkError";
  }
}

/** A newer request replaced this one; the result is no longer wanted. */
export class SupersededError extends Error {
  constructor() {
    super("request superseded by a newer one");
    this.name = "SupersededError";
  }
}

export function powerBody(state: FormState): Record<string, unknown> {
  return {
    n: state.n,
    z_spec: zSpec(state),
    psi: state.psi,
    delta: state.delta,
    sigma: state.sigma,
    alpha: state.alpha,
    alternative: state.alternative,
  };
}

export function samplesizeBody(state: FormState): Record<string, unknown> {
  return {
    target_power: state.targetPower,
    z_spec: zSpec(state),
    psi: state.psi,
    delta: state.delta,
    sigma: state.sigma,
    alpha: state.alpha,
    alternative: state.alternative,
  };
}

export function previewBody(state: FormState, n: number, seed: number): Record<string, unknown> {
  return {
    n,
    z_spec: zSpec(state),
    psi: state.psi,
    delta: state.delta,
    sigma: state.sigma,
    seed,
  };
}

export class ApiClient {
  private inFlight: AbortController | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  power(state: FormState): Promise<PowerPayload> {
    return this.post<PowerPayload>("/api/power", powerBody(state));
  }

  sampleSize(state: FormState): Promise<SampleSizePayload> {
    return this.post<SampleSizePayload>("/api/samplesize", samplesizeBody(state));
  }

  preview(state: FormState, n: number, seed: number): Promise<PreviewPayload> {
    return this.post<PreviewPayload>("/api/preview", previewBody(state, n, seed));
  }

  private async post<T>(path: string, body: Record<string, unknown>): Promise<T> {
    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;

    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
        signal: controller.signal,
      });
    } catch (err) {
      if (controller.signal.aborted) throw new SupersededError();
      throw new NetworkError(err instanceof Error ? err.message : String(err));
    } finally {
      if (this.inFlight === controller) this.inFlight = null;
    }

    let envelope: Envelope<T>;
    try {
      envelope = (await response.json()) as Envelope<T>;
    } catch {
      throw new NetworkError(`service answered ${response.status} without a JSON envelope`);
    }
    if (envelope.ok && envelope.payload !== null && envelope.payload !== undefined) {
      return envelope.payload;
    }
    const error = envelope.error ?? { code: "unknown", message: "malformed service response" };
    throw new ServiceError(error.code, error.message, error.fields ?? []);
  }
}
