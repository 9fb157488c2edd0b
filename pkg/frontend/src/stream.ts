// Frame stream over the /frames websocket.
//
// Frames are applied in sequence order: anything with seq <= the newest
// already shown is dropped, so late arrivals can never roll the view back.
// A dropped connection reconnects with exponential backoff and surfaces
// its status so the UI can show a banner.

export interface StreamFrame {
  seq: number;
  digest: string;
  format: string;
  data: string;
}

export type StreamStatus = "connecting" | "live" | "reconnecting" | "stopped";

export interface FrameSocket {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export interface FrameStreamOptions {
  onFrame: (frame: StreamFrame) => void;
  onStatus?: (status: StreamStatus, detail?: string) => void;
  onServerError?: (message: string) => void;
  makeSocket?: (url: string) => FrameSocket;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
  backoffMs?: number[];
}

const DEFAULT_BACKOFF_MS = [250, 500, 1000, 2000, 4000];

export class FrameStream {
  lastSeq = 0;
  staleDropped = 0;

  private socket: FrameSocket | null = null;
  private stopped = false;
  private attempt = 0;
  private timer: unknown = null;

  private readonly makeSocket: (url: string) => FrameSocket;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;
  private readonly clearTimer: (handle: unknown) => void;
  private readonly backoffMs: number[];

  constructor(
    private readonly url: string,
    private readonly opts: FrameStreamOptions,
  ) {
    this.makeSocket = opts.makeSocket ?? ((u) => new WebSocket(u) as unknown as FrameSocket);
    this.setTimer = opts.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimer = opts.clearTimer ?? ((h) => clearTimeout(h as number));
    this.backoffMs = opts.backoffMs ?? DEFAULT_BACKOFF_MS;
  }

  start(): void {
    this.stopped = false;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      this.clearTimer(this.timer);
      this.timer = null;
    }
    this.socket?.close();
    this.socket = null;
    this.opts.onStatus?.("stopped");
  }

  private connect(): void {
    this.opts.onStatus?.(this.attempt === 0 ? "connecting" : "reconnecting");
    const sock = this.makeSocket(this.url);
    this.socket = sock;
    sock.onopen = () => {
      this.attempt = 0;
      this.opts.onStatus?.("live");
    };
    sock.onmessage = (ev) => this.handleMessage(String(ev.data));
    sock.onerror = () => {
      // the close handler owns scheduling; nothing to do here
    };
    sock.onclose = () => {
      if (this.stopped) return;
      const delay = this.backoffMs[Math.min(this.attempt, this.backoffMs.length - 1)];
      this.attempt += 1;
      this.opts.onStatus?.("reconnecting", `retrying in ${delay} ms`);
      this.timer = this.setTimer(() => {
        this.timer = null;
        if (!this.stopped) this.connect();
      }, delay);
    };
  }

  private handleMessage(text: string): void {
    let msg: unknown;
    try {
      msg = JSON.parse(text);
    } catch {
      return;
    }
    if (!msg || typeof msg !== "object") return;
    const m = msg as Record<string, unknown>;
    if (m.type === "error") {
      this.opts.onServerError?.(String(m.message ?? "unknown server error"));
      return;
    }
    if (m.type !== "frame") return;
    const seq = Number(m.seq);
    if (!Number.isFinite(seq)) return;
    if (seq <= this.lastSeq) {
      this.staleDropped += 1;
      return;
    }
    this.lastSeq = seq;
    this.opts.onFrame({
      seq,
      digest: String(m.digest ?? ""),
      format: String(m.format ?? "png"),
      data: String(m.data ?? ""),
    });
  }
}
