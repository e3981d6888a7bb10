/**
 * The full explorer selection, encoded statelessly in the URL so any
 * exploration is shareable and reproducible.
 */

import type { Meta, ViewKind } from "./api.js";

export interface Selection {
  reporting: string;
  affected: string;
  dtype: string;
  deaths: number;
  view: ViewKind;
}

/** Serialize a selection to a canonical query string (stable key order). */
export function encodeSelection(selection: Selection): string {
  const params = new URLSearchParams();
  params.set("reporting", selection.reporting);
  params.set("affected", selection.affected);
  params.set("dtype", selection.dtype);
  params.set("deaths", String(selection.deaths));
  params.set("view", selection.view);
  return params.toString();
}

/** Clamp a fatality count to the service grid and snap it onto a grid step. */
export function clampDeaths(deaths: number, meta: Meta): number {
  const { min, max, step } = meta.grid;
  if (!Number.isFinite(deaths)) return min;
  const bounded = Math.min(max, Math.max(min, deaths));
  return min + Math.round((bounded - min) / step) * step;
}

/**
 * Decode a query string against the service metadata.  Unknown countries or
 * disaster types fall back to the defaults; deaths are clamped to the grid so
 * the client never requests an extrapolation.
 */
export function decodeSelection(query: string, meta: Meta): Selection {
  const params = new URLSearchParams(query);
  const defaults = defaultSelection(meta);

  const pick = (key: string, allowed: string[], fallback: string): string => {
    const value = params.get(key);
    return value !== null && allowed.includes(value) ? value : fallback;
  };

  const reporting = pick("reporting", meta.countries, defaults.reporting);
  let affected = pick("affected", meta.countries, defaults.affected);
  if (affected === reporting) {
    affected = meta.countries.find((c) => c !== reporting) ?? affected;
  }
  const view = pick("view", ["reporting", "disaster"], defaults.view) as ViewKind;
  const deaths = clampDeaths(Number(params.get("deaths") ?? defaults.deaths), meta);
  return {
    reporting,
    affected,
    dtype: pick("dtype", meta.dtypes, defaults.dtype),
    deaths,
    view,
  };
}

export function defaultSelection(meta: Meta): Selection {
  const reporting = meta.countries[0];
  const affected = meta.countries.find((c) => c !== reporting) ?? reporting;
  return {
    reporting,
    affected,
    dtype: meta.dtypes[0],
    deaths: clampDeaths(100, meta),
    view: "disaster",
  };
}
