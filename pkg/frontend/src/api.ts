/** Typed fetch client for the session API; all numeric truth lives server-side. */

import type {
  ComplaintRecord,
  DatasetInfo,
  GroupKey,
  RecommendationPayload,
  RecordsPayload,
  SessionPayload,
  ViewPayload,
} from "./types.js";

/** A non-2xx response, carrying the server's `detail` message. */
export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

export interface ComplaintRequest {
  group: GroupKey;
  stat: string;
  direction: string;
  target_value: number | null;
}

export class Client {
  constructor(private readonly base: string = "") {}

  dataset(): Promise<DatasetInfo> {
    return this.request("GET", "/dataset");
  }

  createSession(): Promise<SessionPayload> {
    return this.request("POST", "/sessions");
  }

  view(session: string): Promise<ViewPayload> {
    return this.request("GET", `/sessions/${session}/view`);
  }

  complaint(session: string, body: ComplaintRequest): Promise<ComplaintRecord> {
    return this.request("POST", `/sessions/${session}/complaint`, body);
  }

  recommendations(session: string, k: number): Promise<RecommendationPayload> {
    return this.request("GET", `/sessions/${session}/recommendations?k=${k}`);
  }

  drilldown(session: string, hierarchy: string,
            group: GroupKey): Promise<ViewPayload> {
    return this.request("POST", `/sessions/${session}/drilldown`,
                        { hierarchy, group });
  }

  records(session: string, group: GroupKey): Promise<RecordsPayload> {
    const params = new URLSearchParams();
    for (const value of group) params.append("group", String(value));
    return this.request("GET", `/sessions/${session}/records?${params}`);
  }

  private async request<T>(method: string, path: string,
                           body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await fetch(this.base + path, init);
    const text = await response.text();
    if (!response.ok) throw new ApiError(response.status, detailOf(text));
    return JSON.parse(text) as T;
  }
}

function detailOf(text: string): string {
  try {
    const parsed: unknown = JSON.parse(text);
    if (parsed !== null && typeof parsed === "object" && "detail" in parsed) {
      const detail = (parsed as { detail: unknown }).detail;
      return typeof detail === "string" ? detail : JSON.stringify(detail);
    }
  } catch {
    // not JSON; fall through to the raw body
  }
  return text;
}
