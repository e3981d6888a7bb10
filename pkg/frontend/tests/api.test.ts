import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, ExplorerClient, isOutOfRange } from "../src/api.js";
import {
  startFixtureServer,
  startUnloadedServer,
  type FixtureServer,
} from "./fixtureServer.js";

let server: FixtureServer;
let client: ExplorerClient;

beforeAll(async () => {
  server = await startFixtureServer();
  client = new ExplorerClient(server.baseUrl);
});

afterAll(async () => {
  await server.close();
});

describe("meta", () => {
  it("returns the country list, dtypes, grid bounds, and model hash", async () => {
    const meta = await client.getMeta();
    expect(meta.countries).toContain("DEU");
    expect(meta.countries).toContain("BGD");
    expect(meta.dtypes).toContain("storm");
    expect(meta.grid).toEqual({ min: 10, max: 300, step: 5 });
    expect(meta.model_hash).toMatch(/^[0-9a-f]{64}$/);
  });
});

describe("counterfactual", () => {
  it("fetches the (DEU, BGD, storm, 100) scenario", async () => {
    const response = await client.getCounterfactual({
      reporting: "DEU",
      affected: "BGD",
      dtype: "storm",
      deaths: 100,
    });
    expect(response.reporting).toBe("DEU");
    expect(response.affected).toBe("BGD");
    expect(response.curve.length).toBeGreaterThan(2);
    expect(response.curve[0].deaths).toBe(10);
    expect(response.curve[response.curve.length - 1].deaths).toBe(300);
    expect(Number.isFinite(response.beta_hat)).toBe(true);
    expect(response.equivalents.length).toBeGreaterThan(0);
    for (const eq of response.equivalents) {
      if (isOutOfRange(eq)) {
        expect(eq).not.toHaveProperty("deaths_star");
      } else {
        expect(eq.deaths_star).toBeGreaterThanOrEqual(10);
        expect(eq.deaths_star).toBeLessThanOrEqual(300);
      }
    }
  });

  it("maps validation failures to machine-readable ApiError codes", async () => {
    const cases: Array<[Record<string, string | number>, string]> = [
      [{ reporting: "DEU", affected: "BGD", dtype: "tsunami", deaths: 100 }, "unknown_dtype"],
      [{ reporting: "XXX", affected: "BGD", dtype: "storm", deaths: 100 }, "unknown_country"],
      [{ reporting: "DEU", affected: "BGD", dtype: "storm", deaths: 5000 }, "deaths_outside_grid"],
      [{ reporting: "DEU", affected: "DEU", dtype: "storm", deaths: 100 }, "own_country_pair"],
    ];
    for (const [params, code] of cases) {
      const error = await client
        .getCounterfactual(params as never)
        .then(() => null)
        .catch((e: unknown) => e);
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).code).toBe(code);
      expect((error as ApiError).status).toBe(400);
      expect((error as ApiError).retryable).toBe(false);
    }
  });
});

describe("views", () => {
  it("fetches both normalized views", async () => {
    const disaster = await client.getView("disaster", "BGD", "storm", 100);
    expect(disaster.view).toBe("disaster");
    expect(disaster.values.length).toBeGreaterThan(0);
    for (const v of disaster.values) {
      if (v.norm_value !== null) {
        expect(v.norm_value).toBeGreaterThanOrEqual(-1);
        expect(v.norm_value).toBeLessThanOrEqual(1);
      }
    }
    const reporting = await client.getView("reporting", "DEU", "storm", 100);
    expect(reporting.view).toBe("reporting");
    expect(reporting.values.some((v) => v.country === "BGD")).toBe(true);
  });
});

describe("model_not_loaded", () => {
  it("raises a retryable 503 ApiError", async () => {
    const unloaded = await startUnloadedServer();
    try {
      const bare = new ExplorerClient(unloaded.baseUrl);
      const error = await bare
        .getMeta()
        .then(() => null)
        .catch((e: unknown) => e);
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).code).toBe("model_not_loaded");
      expect((error as ApiError).retryable).toBe(true);
    } finally {
      await unloaded.close();
    }
  });
});

describe("cancellation", () => {
  it("aborts an in-flight request via AbortSignal", async () => {
    const controller = new AbortController();
    const pending = client.getMeta(controller.signal);
    controller.abort();
    await expect(pending).rejects.toThrow();
  });
});
