/**
 * Typed HTTP client for the annotation service.
 *
 * The fetch implementation is injectable so tests can capture requests
 * against a stub service; the default is the browser's fetch.
 */

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type AnnotationMode = "visual" | "audible" | "conceptual";

export interface InstantTime {
  instant: string;
}

export interface IntervalTime {
  begin: string;
  end: string;
}

export type AnnotationTime = InstantTime | IntervalTime;

export interface Annotation {
  id: string;
  video: string;
  time: AnnotationTime;
  bodies: string[];
  mode: AnnotationMode;
  annotator: string;
  created: string;
}

export interface AnnotationInput {
  video: string;
  time: { instant: number | string } | { begin: number | string; end: number | string };
  bodies: string[];
  mode: AnnotationMode;
  annotator: string;
  id?: string;
  created?: string;
}

export interface Suggestion {
  uri: string;
  label: string | null;
  source: "match" | "related";
}

export interface ConceptTier {
  uri: string;
  tier: "direct" | "subclass-derived";
}

export interface Contribution {
  provider: string;
  score: number;
}

export interface MatchedConcept {
  concept: string;
  tier: "direct" | "subclass-derived";
}

export interface SearchResult {
  resource: string;
  title: string | null;
  score: number;
  contributions: Contribution[];
  matched: MatchedConcept[];
}

export interface ProviderStatus {
  provider: string;
  outcome: "ok" | "timeout" | "error";
  elapsed_ms: number;
  error?: string;
}

export interface SearchResponse {
  concepts: ConceptTier[];
  results: SearchResult[];
  providers: ProviderStatus[];
}

export interface DocumentMatch {
  concept: string;
  label: string;
  surface: string;
  count: number;
  spans: [number, number][];
}

export interface DocumentSearchResponse extends SearchResponse {
  matches: DocumentMatch[];
}

export interface DuplicatePair {
  first: Annotation;
  second: Annotation;
}

export interface Health {
  status: string;
  quads: number;
  mutations: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Seconds covered by an annotation; instants collapse to a point. */
export function annotationSpan(annotation: Annotation): { start: number; end: number } {
  if ("instant" in annotation.time) {
    const at = Number(annotation.time.instant);
    return { start: at, end: at };
  }
  return { start: Number(annotation.time.begin), end: Number(annotation.time.end) };
}

async function errorMessage(response: Response): Promise<string> {
  try {
    const payload: unknown = await response.json();
    if (payload && typeof payload === "object" && "error" in payload) {
      return String((payload as { error: unknown }).error);
    }
  } catch {
    // fall through to the generic message
  }
  return `request failed with status ${response.status}`;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: BodyInit, contentType?: string): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = body;
      init.headers = { "Content-Type": contentType ?? "application/json" };
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  createAnnotation(input: AnnotationInput): Promise<Annotation> {
    return this.request<Annotation>("POST", "/annotations", JSON.stringify(input));
  }

  deleteAnnotation(id: string): Promise<void> {
    return this.request<void>("DELETE", `/annotations/${encodeURIComponent(id)}`);
  }

  listAnnotations(video: string, range?: { from?: number; to?: number }): Promise<Annotation[]> {
    const params = new URLSearchParams();
    if (range?.from !== undefined) params.set("from", String(range.from));
    if (range?.to !== undefined) params.set("to", String(range.to));
    const query = params.size > 0 ? `?${params.toString()}` : "";
    return this.request<Annotation[]>("GET", `/videos/${encodeURIComponent(video)}/annotations${query}`);
  }

  duplicates(video: string): Promise<DuplicatePair[]> {
    return this.request<DuplicatePair[]>("GET", `/videos/${encodeURIComponent(video)}/duplicates`);
  }

  async suggest(keyword: string): Promise<Suggestion[]> {
    const payload = await this.request<{ suggestions: Suggestion[] }>(
      "GET",
      `/suggest?q=${encodeURIComponent(keyword)}`,
    );
    return payload.suggestions;
  }

  searchConcept(params: { uri?: string; q?: string; deadlineMs?: number }): Promise<SearchResponse> {
    const query = new URLSearchParams();
    if (params.uri !== undefined) query.set("uri", params.uri);
    if (params.q !== undefined) query.set("q", params.q);
    if (params.deadlineMs !== undefined) query.set("deadline_ms", String(params.deadlineMs));
    return this.request<SearchResponse>("GET", `/search/concept?${query.toString()}`);
  }

  searchPerson(name: string): Promise<SearchResponse> {
    return this.request<SearchResponse>("GET", `/search/person?name=${encodeURIComponent(name)}`);
  }

  searchPlace(name: string): Promise<SearchResponse> {
    return this.request<SearchResponse>("GET", `/search/place?name=${encodeURIComponent(name)}`);
  }

  searchMap(box: { minLat: number; minLon: number; maxLat: number; maxLon: number }): Promise<SearchResponse> {
    const query = new URLSearchParams({
      min_lat: String(box.minLat),
      min_lon: String(box.minLon),
      max_lat: String(box.maxLat),
      max_lon: String(box.maxLon),
    });
    return this.request<SearchResponse>("GET", `/search/map?${query.toString()}`);
  }

  searchDocument(text: string): Promise<DocumentSearchResponse> {
    return this.request<DocumentSearchResponse>("POST", "/search/document", text, "text/plain; charset=utf-8");
  }

  health(): Promise<Health> {
    return this.request<Health>("GET", "/healthz");
  }
}
