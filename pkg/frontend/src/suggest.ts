/**
 * Debounced concept suggestions: one request per idle period, latest
 * input wins, network errors surface as a non-blocking notice.
 */

import type { Suggestion } from "./api.js";

export type SuggestFetcher = (query: string) => Promise<Suggestion[]>;

export interface SuggestCallbacks {
  render: (suggestions: Suggestion[]) => void;
  /** null clears any prior notice */
  notice: (message: string | null) => void;
}

export const DEFAULT_DEBOUNCE_MS = 250;

export class SuggestController {
  private readonly fetcher: SuggestFetcher;
  private readonly callbacks: SuggestCallbacks;
  private readonly debounceMs: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private seq = 0;

  constructor(
    fetcher: SuggestFetcher,
    callbacks: SuggestCallbacks,
    debounceMs: number = DEFAULT_DEBOUNCE_MS,
  ) {
    this.fetcher = fetcher;
    this.callbacks = callbacks;
    this.debounceMs = debounceMs;
  }

  /** Call on every keystroke; schedules a fetch after the idle window. */
  input(text: string): void {
    this.seq += 1; // supersedes any in-flight response
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    const query = text.trim();
    if (query === "") {
      this.callbacks.render([]);
      this.callbacks.notice(null);
      return;
    }
    const token = this.seq;
    this.timer = setTimeout(() => {
      this.timer = null;
      this.fire(query, token);
    }, this.debounceMs);
  }

  private fire(query: string, token: number): void {
    this.fetcher(query).then(
      (suggestions) => {
        if (token !== this.seq) {
          return; // stale: the input changed while this was in flight
        }
        this.callbacks.notice(null);
        this.callbacks.render(suggestions);
      },
      (err: unknown) => {
        if (token !== this.seq) {
          return;
        }
        const reason = err instanceof Error ? err.message : String(err);
        this.callbacks.notice("suggestions unavailable: " + reason);
      },
    );
  }

  dispose(): void {
    this.seq += 1;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }
}
