/** Replays the recorded HTTP exchanges; unmatched requests fail loudly. */

import fixture from "./fixtures/session_loop.json";

export interface Exchange {
  method: string;
  path: string;
  params: [string, string][];
  body: unknown;
  status: number;
  response: string;
}

interface FixtureFile {
  note: string;
  exchanges: Exchange[];
}

const data = fixture as unknown as FixtureFile;

/** JSON with object keys sorted recursively (order-independent compare). */
export function stableStringify(value: unknown): string {
  if (Array.isArray(value)) {
    return `[${value.map(stableStringify).join(",")}]`;
  }
  if (value !== null && typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
      .map(([k, v]) => `${JSON.stringify(k)}:${stableStringify(v)}`);
    return `{${entries.join(",")}}`;
  }
  return JSON.stringify(value);
}

/** Canonical lookup key for one request. */
export function requestKey(method: string, pathname: string, search: string,
                           body: string | null): string {
  const params = new URLSearchParams(search);
  params.sort();
  const bodyKey = body === null || body === ""
    ? "" : stableStringify(JSON.parse(body));
  return `${method.toUpperCase()} ${pathname}?${params.toString()} ${bodyKey}`;
}

function keyOfExchange(exchange: Exchange): string {
  const params = new URLSearchParams(exchange.params);
  params.sort();
  const bodyKey = exchange.body === null ? "" : stableStringify(exchange.body);
  return `${exchange.method} ${exchange.path}?${params.toString()} ${bodyKey}`;
}

export function fixtureExchanges(): Exchange[] {
  return data.exchanges;
}

/** The recorded exchange for a method and path (and body, if given). */
export function recorded(method: string, path: string,
                         body?: unknown): Exchange {
  const want = body === undefined ? null : stableStringify(body);
  const hit = data.exchanges.find((e) =>
    e.method === method && e.path === path &&
    (want === null || stableStringify(e.body) === want));
  if (hit === undefined) {
    throw new Error(`no recorded exchange for ${method} ${path}`);
  }
  return hit;
}

/**
 * Swap `fetch` for a stub serving the recorded responses byte-for-byte.
 * Requests that were never recorded reject, which fails the test instead
 * of silently fabricating server behaviour.
 */
export function installFixtureFetch(): { calls: string[]; restore: () => void } {
  const table = new Map<string, Exchange>();
  for (const exchange of data.exchanges) {
    table.set(keyOfExchange(exchange), exchange);
  }
  const calls: string[] = [];
  const original = globalThis.fetch;
  globalThis.fetch = (async (input: RequestInfo | URL,
                             init?: RequestInit): Promise<Response> => {
    const raw = typeof input === "string"
      ? input : input instanceof URL ? input.href : input.url;
    const url = new URL(raw, "http://fixture");
    const method = init?.method ?? "GET";
    const body = typeof init?.body === "string" ? init.body : null;
    const key = requestKey(method, url.pathname, url.search, body);
    calls.push(key);
    const hit = table.get(key);
    if (hit === undefined) {
      throw new Error(`no recorded exchange for ${key}`);
    }
    return {
      ok: hit.status >= 200 && hit.status < 300,
      status: hit.status,
      text: async () => hit.response,
    } as unknown as Response;
  }) as typeof fetch;
  return {
    calls,
    restore: () => {
      globalThis.fetch = original;
    },
  };
}
