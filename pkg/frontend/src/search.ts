/**
 * Render models for the search browser. The service already ranks
 * results and pairs duplicates; these helpers only reshape for display
 * and never reorder or rescore.
 */

import type { DuplicatePair, ProviderStatus, SearchResult } from "./api.js";

export interface SearchResultRow {
  rank: number;
  resource: string;
  title: string;
  score: string;
  providers: string;
}

export interface DuplicateRow {
  firstId: string;
  secondId: string;
  label: string;
}

export interface ProviderRow {
  provider: string;
  outcome: string;
  detail: string;
}

/** Rows in exactly the order the service returned them. */
export function searchResultRows(results: readonly SearchResult[]): SearchResultRow[] {
  return results.map((result, index) => ({
    rank: index + 1,
    resource: result.resource,
    title: result.title ?? "",
    score: formatScore(result.score),
    providers: result.contributions
      .map((c) => c.provider + ":" + formatScore(c.score))
      .join(" "),
  }));
}

export function duplicateRows(pairs: readonly DuplicatePair[]): DuplicateRow[] {
  return pairs.map((pair) => ({
    firstId: pair.first.id,
    secondId: pair.second.id,
    label: pair.first.id + " ↔ " + pair.second.id,
  }));
}

export function providerRows(statuses: readonly ProviderStatus[]): ProviderRow[] {
  return statuses.map((status) => ({
    provider: status.provider,
    outcome: status.outcome,
    detail: status.error
      ? status.error + " (" + status.elapsed_ms + "ms)"
      : status.elapsed_ms + "ms",
  }));
}

export function formatScore(score: number): string {
  const text = score.toFixed(2);
  return text.replace(/\.?0+$/, "") || "0";
}
