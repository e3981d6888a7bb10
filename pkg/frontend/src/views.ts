/**
 * Pure rendering: API payloads in, HTML strings out.
 *
 * Keeping these functions free of DOM and fetch dependencies means the golden
 * snapshot tests can run them directly against recorded payloads; the app
 * shell only assigns their output to innerHTML.
 */

import {
  type CounterfactualResponse,
  type Equivalent,
  type ViewResponse,
  isOutOfRange,
} from "./api.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function formatBeta(value: number): string {
  return value.toFixed(4);
}

/**
 * The predicted-attention curve as an inline SVG polyline with a marker at
 * the currently selected fatality count.
 */
export function renderCurve(response: CounterfactualResponse): string {
  const { curve, deaths } = response;
  const xs = curve.map((p) => p.deaths);
  const ys = curve.map((p) => p.beta_hat);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const width = 600;
  const height = 220;
  const sx = (x: number) =>
    xMax === xMin ? width / 2 : ((x - xMin) / (xMax - xMin)) * width;
  const sy = (y: number) =>
    yMax === yMin ? height / 2 : height - ((y - yMin) / (yMax - yMin)) * height;
  const points = curve
    .map((p) => `${sx(p.deaths).toFixed(1)},${sy(p.beta_hat).toFixed(1)}`)
    .join(" ");
  const marker = `<circle class="marker" cx="${sx(deaths).toFixed(1)}" cy="${sy(
    response.beta_hat,
  ).toFixed(1)}" r="5"><title>${deaths} deaths: ${formatBeta(
    response.beta_hat,
  )}</title></circle>`;
  const title = `${escapeHtml(response.reporting)} coverage of a ${escapeHtml(
    response.dtype,
  )} in ${escapeHtml(response.affected)}`;
  return [
    `<figure class="curve" data-deaths="${deaths}">`,
    `<figcaption>${title}</figcaption>`,
    `<svg viewBox="0 0 ${width} ${height}" role="img" aria-label="${title}">`,
    `<polyline fill="none" points="${points}"/>`,
    marker,
    `</svg>`,
    `<p class="readout">at ${deaths} deaths: predicted increase ${formatBeta(
      response.beta_hat,
    )} (log scale)</p>`,
    `</figure>`,
  ].join("\n");
}

function equivalentCell(eq: Equivalent): string {
  if (isOutOfRange(eq)) {
    // never render a number for an unreachable match
    return `<span class="badge out-of-range" title="no fatality count on the grid reaches this attention level">beyond range</span>`;
  }
  return `<span class="toll">${Math.round(eq.deaths_star)}</span>`;
}

/** The equivalent-attention table, one row per comparator country. */
export function renderEquivalents(response: CounterfactualResponse): string {
  const header =
    `<caption>fatalities needed elsewhere for ${escapeHtml(response.reporting)} ` +
    `to pay the same attention as to ${escapeHtml(response.affected)} ` +
    `(${escapeHtml(response.dtype)}, ${response.deaths} deaths)</caption>`;
  const rows = response.equivalents
    .map(
      (eq) =>
        `<tr data-country="${escapeHtml(eq.country)}">` +
        `<th scope="row">${escapeHtml(eq.country)}</th>` +
        `<td>${equivalentCell(eq)}</td></tr>`,
    )
    .join("\n");
  return `<table class="equivalents">\n${header}\n<tbody>\n${rows}\n</tbody>\n</table>`;
}

const CONDITIONING_LABEL: Record<ViewResponse["view"], string> = {
  disaster: "normalized within the affected country (comparing reporting countries)",
  reporting: "normalized within the reporting country (comparing affected countries)",
};

function normBar(value: number): string {
  const percent = ((value + 1) / 2) * 100;
  return `<span class="bar" style="--fill:${percent.toFixed(1)}%">${value.toFixed(
    3,
  )}</span>`;
}

/**
 * The normalized comparison board: countries sorted by normalized value,
 * undefined units rendered as "n/a", with the ±1 anchors labeled as the
 * 5th/95th percentiles.
 */
export function renderViewBoard(response: ViewResponse): string {
  const sorted = [...response.values].sort((a, b) => {
    if (a.norm_value === null && b.norm_value === null)
      return a.country.localeCompare(b.country);
    if (a.norm_value === null) return 1;
    if (b.norm_value === null) return -1;
    return b.norm_value - a.norm_value || a.country.localeCompare(b.country);
  });
  const rows = sorted
    .map((v) => {
      const cell =
        response.undefined || v.norm_value === null
          ? `<span class="na">n/a</span>`
          : normBar(v.norm_value);
      return (
        `<li data-country="${escapeHtml(v.country)}">` +
        `<span class="country">${escapeHtml(v.country)}</span> ${cell}</li>`
      );
    })
    .join("\n");
  return [
    `<section class="view-board" data-view="${response.view}">`,
    `<h2>${escapeHtml(response.country)} — ${escapeHtml(response.dtype)}, ${
      response.deaths
    } deaths</h2>`,
    `<p class="conditioning">${CONDITIONING_LABEL[response.view]}</p>`,
    `<p class="anchors">−1 = 5th percentile anchor, +1 = 95th percentile anchor</p>`,
    `<ol>\n${rows}\n</ol>`,
    `</section>`,
  ].join("\n");
}
