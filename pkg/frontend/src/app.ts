/**
 * Page wiring. All ranking, overlap math, and suggestion text live in
 * the service or the pure modules; this file only moves values between
 * DOM nodes and the API client.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Annotation, AnnotationMode, Suggestion } from "./api.js";
import { SuggestController } from "./suggest.js";
import { duplicateRows, providerRows, searchResultRows } from "./search.js";
import { laneCount, timelineLayout, toTimelineInput } from "./timeline.js";

const LANE_HEIGHT_PX = 18;

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error("missing element #" + id);
  }
  return node as T;
}

function clear(node: HTMLElement): void {
  while (node.firstChild !== null) {
    node.removeChild(node.firstChild);
  }
}

function setStatus(node: HTMLElement, message: string, isError: boolean): void {
  node.textContent = message;
  node.classList.toggle("error", isError);
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return err.message + " (" + err.status + ")";
  }
  return err instanceof Error ? err.message : String(err);
}

class AnnotationPage {
  private readonly client: ApiClient;
  private readonly player: HTMLVideoElement;
  private readonly videoUrlInput: HTMLInputElement;
  private readonly listNode: HTMLElement;
  private readonly timelineNode: HTMLElement;
  private readonly statusNode: HTMLElement;
  private annotations: Annotation[] = [];

  constructor(client: ApiClient) {
    this.client = client;
    this.player = byId<HTMLVideoElement>("player");
    this.videoUrlInput = byId<HTMLInputElement>("video-url");
    this.listNode = byId("annotation-list");
    this.timelineNode = byId("timeline");
    this.statusNode = byId("annotation-status");
  }

  videoUrl(): string {
    return this.videoUrlInput.value.trim();
  }

  async loadVideo(): Promise<void> {
    const url = this.videoUrl();
    if (url === "") {
      setStatus(this.statusNode, "enter a video URL first", true);
      return;
    }
    this.player.src = url;
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const url = this.videoUrl();
    if (url === "") {
      return;
    }
    try {
      this.annotations = await this.client.listAnnotations(url);
      setStatus(this.statusNode, this.annotations.length + " annotation(s)", false);
    } catch (err) {
      setStatus(this.statusNode, describeError(err), true);
      return;
    }
    this.renderList();
    this.renderTimeline();
  }

  private renderList(): void {
    clear(this.listNode);
    for (const annotation of this.annotations) {
      const item = document.createElement("li");
      const time =
        "instant" in annotation.time
          ? annotation.time.instant + "s"
          : annotation.time.begin + "s–" + annotation.time.end + "s";
      item.textContent =
        time + " [" + annotation.mode + "] " + annotation.bodies.join(", ");
      const remove = document.createElement("button");
      remove.textContent = "delete";
      remove.addEventListener("click", () => {
        void this.deleteAnnotation(annotation.id);
      });
      item.appendChild(remove);
      this.listNode.appendChild(item);
    }
  }

  private renderTimeline(): void {
    clear(this.timelineNode);
    const duration = this.player.duration;
    const width = this.timelineNode.clientWidth;
    if (!(duration > 0) || !(width > 0)) {
      return;
    }
    const segments = timelineLayout(
      this.annotations.map(toTimelineInput),
      duration,
      width,
    );
    this.timelineNode.style.height = laneCount(segments) * LANE_HEIGHT_PX + "px";
    for (const segment of segments) {
      const block = document.createElement("div");
      block.className = "segment" + (segment.clamped ? " clamped" : "");
      block.style.left = segment.x + "px";
      block.style.width = segment.width + "px";
      block.style.top = segment.lane * LANE_HEIGHT_PX + "px";
      block.style.background = segment.color;
      block.title = segment.id;
      this.timelineNode.appendChild(block);
    }
  }

  private async deleteAnnotation(id: string): Promise<void> {
    try {
      await this.client.deleteAnnotation(id);
    } catch (err) {
      setStatus(this.statusNode, describeError(err), true);
      return;
    }
    await this.refresh();
  }
}

function wireAnnotationForm(client: ApiClient, page: AnnotationPage): void {
  const bodyInput = byId<HTMLInputElement>("body-input");
  const beginInput = byId<HTMLInputElement>("begin-input");
  const endInput = byId<HTMLInputElement>("end-input");
  const modeSelect = byId<HTMLSelectElement>("mode-select");
  const annotatorInput = byId<HTMLInputElement>("annotator-input");
  const statusNode = byId("create-status");
  const suggestionList = byId("suggestions");
  const noticeNode = byId("suggest-notice");

  const controller = new SuggestController(
    (query) => client.suggest(query),
    {
      render: (suggestions: Suggestion[]) => {
        clear(suggestionList);
        for (const suggestion of suggestions) {
          const item = document.createElement("li");
          const label = suggestion.label === null ? "" : suggestion.label + " ";
          item.textContent = label + suggestion.uri + " [" + suggestion.source + "]";
          item.addEventListener("click", () => {
            bodyInput.value = suggestion.uri; // selection fills the body field
            clear(suggestionList);
          });
          suggestionList.appendChild(item);
        }
      },
      notice: (message) => {
        noticeNode.textContent = message ?? "";
      },
    },
  );
  bodyInput.addEventListener("input", () => controller.input(bodyInput.value));

  byId<HTMLButtonElement>("create-button").addEventListener("click", () => {
    const video = page.videoUrl();
    if (video === "") {
      setStatus(statusNode, "enter a video URL first", true);
      return;
    }
    const begin = beginInput.value.trim();
    const end = endInput.value.trim();
    const time = end === "" ? { instant: begin } : { begin, end };
    client
      .createAnnotation({
        video,
        time,
        bodies: [bodyInput.value.trim()],
        mode: modeSelect.value as AnnotationMode,
        annotator: annotatorInput.value.trim(),
      })
      .then(async (created) => {
        setStatus(statusNode, "created " + created.id, false);
        await page.refresh();
      })
      .catch((err: unknown) => {
        setStatus(statusNode, describeError(err), true);
      });
  });
}

function wireSearch(client: ApiClient, page: AnnotationPage): void {
  const queryInput = byId<HTMLInputElement>("search-input");
  const resultsNode = byId("search-results");
  const providersNode = byId("search-providers");
  const duplicatesNode = byId("duplicates");
  const statusNode = byId("search-status");

  byId<HTMLButtonElement>("search-button").addEventListener("click", () => {
    const q = queryInput.value.trim();
    if (q === "") {
      return;
    }
    client
      .searchConcept({ q })
      .then((response) => {
        clear(resultsNode);
        for (const row of searchResultRows(response.results)) {
          const item = document.createElement("li");
          item.textContent =
            row.rank + ". " + (row.title || row.resource) + " — " + row.score +
            (row.providers === "" ? "" : " (" + row.providers + ")");
          resultsNode.appendChild(item);
        }
        clear(providersNode);
        for (const row of providerRows(response.providers)) {
          const item = document.createElement("li");
          item.textContent = row.provider + ": " + row.outcome + " " + row.detail;
          providersNode.appendChild(item);
        }
        setStatus(statusNode, response.results.length + " result(s)", false);
      })
      .catch((err: unknown) => {
        setStatus(statusNode, describeError(err), true);
      });
  });

  byId<HTMLButtonElement>("duplicates-button").addEventListener("click", () => {
    const video = page.videoUrl();
    if (video === "") {
      setStatus(statusNode, "enter a video URL first", true);
      return;
    }
    client
      .duplicates(video)
      .then((pairs) => {
        clear(duplicatesNode);
        for (const row of duplicateRows(pairs)) {
          const item = document.createElement("li");
          const first = document.createElement("a");
          first.href = "#" + encodeURIComponent(row.firstId);
          first.textContent = row.firstId;
          const second = document.createElement("a");
          second.href = "#" + encodeURIComponent(row.secondId);
          second.textContent = row.secondId;
          item.appendChild(first);
          item.appendChild(document.createTextNode(" ↔ "));
          item.appendChild(second);
          duplicatesNode.appendChild(item);
        }
        setStatus(statusNode, pairs.length + " duplicate pair(s)", false);
      })
      .catch((err: unknown) => {
        setStatus(statusNode, describeError(err), true);
      });
  });
}

export function main(): void {
  const base = (document.body.dataset["apiBase"] ?? "").replace(/\/$/, "");
  const client = new ApiClient(base);
  const page = new AnnotationPage(client);
  byId<HTMLButtonElement>("load-video").addEventListener("click", () => {
    void page.loadVideo();
  });
  wireAnnotationForm(client, page);
  wireSearch(client, page);
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", main);
}
