import { describe, expect, it } from "vitest";

import type { Meta } from "../src/api.js";
import {
  clampDeaths,
  decodeSelection,
  defaultSelection,
  encodeSelection,
} from "../src/state.js";

const META: Meta = {
  countries: ["DEU", "BGD", "ITA", "MEX"],
  dtypes: ["earthquake", "flood", "storm"],
  grid: { min: 10, max: 300, step: 5 },
  model_hash: "f".repeat(64),
};

describe("encode/decode", () => {
  it("round-trips a full selection through the URL", () => {
    const selection = {
      reporting: "ITA",
      affected: "MEX",
      dtype: "storm",
      deaths: 145,
      view: "reporting" as const,
    };
    expect(decodeSelection(encodeSelection(selection), META)).toEqual(selection);
  });

  it("falls back to defaults for unknown values", () => {
    const decoded = decodeSelection(
      "reporting=ZZZ&affected=BGD&dtype=meteor&deaths=abc&view=sideways",
      META,
    );
    expect(decoded.reporting).toBe("DEU");
    expect(decoded.affected).toBe("BGD");
    expect(decoded.dtype).toBe("earthquake");
    expect(decoded.deaths).toBe(10); // non-numeric clamps to the grid minimum
    expect(decoded.view).toBe("disaster");
  });

  it("never selects the reporting country as affected", () => {
    const decoded = decodeSelection("reporting=BGD&affected=BGD", META);
    expect(decoded.affected).not.toBe("BGD");
    expect(META.countries).toContain(decoded.affected);
  });
});

describe("deaths clamping", () => {
  it("clamps to the service grid and snaps to a grid step", () => {
    expect(clampDeaths(100, META)).toBe(100);
    expect(clampDeaths(-50, META)).toBe(10);
    expect(clampDeaths(10_000, META)).toBe(300);
    expect(clampDeaths(102, META)).toBe(100);
    expect(clampDeaths(103, META)).toBe(105);
    expect(clampDeaths(Number.NaN, META)).toBe(10);
  });

  it("keeps the default selection inside the grid", () => {
    const tight: Meta = { ...META, grid: { min: 10, max: 50, step: 5 } };
    expect(defaultSelection(tight).deaths).toBe(50);
  });
});
