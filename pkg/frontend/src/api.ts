// Thin typed client for the render service's HTTP endpoints.

import type {
  CameraMove,
  CameraResult,
  KeyposeAddResult,
  KeyposeEntry,
  PatchResult,
  RecordResult,
  SceneLoadResult,
  StateSnapshot,
} from "./types";

export interface HttpResponse {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type HttpFn = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<HttpResponse>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly http: HttpFn = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: Parameters<HttpFn>[1] = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.http(this.base + path, init);
    const data = await res.json().catch(() => null);
    if (!res.ok) {
      const detail =
        data && typeof data === "object" && "detail" in data
          ? String((data as { detail: unknown }).detail)
          : `request failed with status ${res.status}`;
      throw new ApiError(res.status, detail);
    }
    return data as T;
  }

  state(): Promise<StateSnapshot> {
    return this.request("GET", "/state");
  }

  loadScene(doc: object): Promise<SceneLoadResult> {
    return this.request("POST", "/scene", doc);
  }

  patch(pointer: string, value: unknown): Promise<PatchResult> {
    return this.request("PATCH", "/param", { pointer, value });
  }

  moveCamera(body: CameraMove): Promise<CameraResult> {
    return this.request("POST", "/camera", body);
  }

  addKeypose(duration = 1.0): Promise<KeyposeAddResult> {
    return this.request("POST", "/keypose", { duration });
  }

  listKeyposes(): Promise<KeyposeEntry[]> {
    return this.request("GET", "/keyposes");
  }

  clearKeyposes(): Promise<{ count: number }> {
    return this.request("DELETE", "/keyposes");
  }

  record(fps = 30.0): Promise<RecordResult> {
    return this.request("POST", "/record", { fps });
  }

  frameUrl(format: "png" | "jpeg" = "png"): string {
    return `${this.base}/frame?format=${format}`;
  }
}

// http(s) base -> ws(s) stream address for the /frames socket.
export function frameStreamUrl(httpBase: string, format: "png" | "jpeg" = "png"): string {
  const u = new URL(httpBase);
  u.protocol = u.protocol === "https:" ? "wss:" : "ws:";
  u.pathname = u.pathname.replace(/\/$/, "") + "/frames";
  u.search = `?format=${format}`;
  return u.toString();
}
