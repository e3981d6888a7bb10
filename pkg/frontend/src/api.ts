/**
 * Typed client for the explorer's /v1 JSON API.
 *
 * The UI performs no model math of its own: every number it shows comes out
 * of these responses.  All methods accept an AbortSignal so the app can
 * cancel an in-flight request when the selection changes.
 */

export interface Meta {
  countries: string[];
  dtypes: string[];
  grid: { min: number; max: number; step: number };
  model_hash: string;
}

export interface CurvePoint {
  deaths: number;
  beta_hat: number;
}

/** One comparator country: either a matched toll or an out-of-range marker. */
export type Equivalent =
  | { country: string; deaths_star: number }
  | { country: string; out_of_range: true; nearest_endpoint: number | null };

export function isOutOfRange(
  eq: Equivalent,
): eq is { country: string; out_of_range: true; nearest_endpoint: number | null } {
  return "out_of_range" in eq && eq.out_of_range === true;
}

export interface CounterfactualResponse {
  reporting: string;
  affected: string;
  dtype: string;
  deaths: number;
  beta_hat: number;
  curve: CurvePoint[];
  equivalents: Equivalent[];
}

export type ViewKind = "reporting" | "disaster";

export interface ViewValue {
  country: string;
  /** null when the unit's percentile anchors are undefined (P95 == P5). */
  norm_value: number | null;
}

export interface ViewResponse {
  view: ViewKind;
  country: string;
  dtype: string;
  deaths: number;
  undefined: boolean;
  values: ViewValue[];
}

/** Machine-readable API failure: `code` mirrors the server's error field. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
  ) {
    super(`API error ${status}: ${code}`);
    this.name = "ApiError";
  }

  /** 503 means the model snapshot is not loaded yet; worth retrying. */
  get retryable(): boolean {
    return this.status === 503;
  }
}

export interface CounterfactualSelection {
  reporting: string;
  affected: string;
  dtype: string;
  deaths: number;
}

export class ExplorerClient {
  constructor(private readonly baseUrl: string) {}

  private async request<T>(
    path: string,
    params: Record<string, string | number>,
    signal?: AbortSignal,
  ): Promise<T> {
    const url = new URL(path, this.baseUrl);
    for (const [key, value] of Object.entries(params)) {
      url.searchParams.set(key, String(value));
    }
    const response = await fetch(url, { signal });
    const body = (await response.json()) as unknown;
    if (!response.ok) {
      const code =
        typeof body === "object" && body !== null && "error" in body
          ? String((body as { error: unknown }).error)
          : "unknown_error";
      throw new ApiError(response.status, code);
    }
    return body as T;
  }

  getMeta(signal?: AbortSignal): Promise<Meta> {
    return this.request<Meta>("/v1/meta", {}, signal);
  }

  getCounterfactual(
    selection: CounterfactualSelection,
    signal?: AbortSignal,
  ): Promise<CounterfactualResponse> {
    return this.request<CounterfactualResponse>(
      "/v1/counterfactual",
      { ...selection },
      signal,
    );
  }

  getView(
    view: ViewKind,
    country: string,
    dtype: string,
    deaths: number,
    signal?: AbortSignal,
  ): Promise<ViewResponse> {
    return this.request<ViewResponse>(
      "/v1/view",
      { view, country, dtype, deaths },
      signal,
    );
  }
}
