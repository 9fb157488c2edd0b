import { describe, expect, it } from "vitest";

import { FrameSocket, FrameStream, StreamStatus } from "../src/stream";

// hand-cranked socket: tests fire open/message/close explicitly
class ManualSocket implements FrameSocket {
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  closed = false;

  close(): void {
    this.closed = true;
  }

  open(): void {
    this.onopen?.();
  }

  frame(seq: number, digest = `d${seq}`): void {
    this.onmessage?.({
      data: JSON.stringify({ type: "frame", seq, digest, format: "png", data: "AA==" }),
    });
  }

  drop(): void {
    this.onclose?.();
  }
}

interface Harness {
  stream: FrameStream;
  sockets: ManualSocket[];
  frames: number[];
  statuses: { status: StreamStatus; detail?: string }[];
  errors: string[];
  timers: { fn: () => void; ms: number }[];
}

function harness(): Harness {
  const sockets: ManualSocket[] = [];
  const frames: number[] = [];
  const statuses: { status: StreamStatus; detail?: string }[] = [];
  const errors: string[] = [];
  const timers: { fn: () => void; ms: number }[] = [];
  const stream = new FrameStream("ws://test/frames?format=png", {
    onFrame: (f) => frames.push(f.seq),
    onStatus: (status, detail) => statuses.push({ status, detail }),
    onServerError: (m) => errors.push(m),
    makeSocket: () => {
      const s = new ManualSocket();
      sockets.push(s);
      return s;
    },
    setTimer: (fn, ms) => {
      timers.push({ fn, ms });
      return timers.length - 1;
    },
    clearTimer: () => {},
  });
  return { stream, sockets, frames, statuses, errors, timers };
}

describe("FrameStream", () => {
  it("shows frames in sequence order and drops stale ones", () => {
    const h = harness();
    h.stream.start();
    const s = h.sockets[0];
    s.open();
    s.frame(3);
    s.frame(5);
    s.frame(4); // late arrival: must not roll the view back
    s.frame(5); // duplicate: dropped too
    s.frame(6);
    expect(h.frames).toEqual([3, 5, 6]);
    expect(h.stream.staleDropped).toBe(2);
    expect(h.stream.lastSeq).toBe(6);
  });

  it("reconnects with growing backoff and resets after success", () => {
    const h = harness();
    h.stream.start();
    expect(h.statuses.map((s) => s.status)).toEqual(["connecting"]);

    h.sockets[0].open();
    h.sockets[0].drop();
    expect(h.timers[0].ms).toBe(250);
    h.timers[0].fn();
    expect(h.sockets.length).toBe(2);

    h.sockets[1].drop(); // never opened: backoff keeps growing
    expect(h.timers[1].ms).toBe(500);
    h.timers[1].fn();
    h.sockets[2].drop();
    expect(h.timers[2].ms).toBe(1000);
    h.timers[2].fn();

    h.sockets[3].open(); // success resets the backoff ladder
    h.sockets[3].drop();
    expect(h.timers[3].ms).toBe(250);

    const kinds = h.statuses.map((s) => s.status);
    expect(kinds.filter((k) => k === "live").length).toBe(2);
    expect(kinds.filter((k) => k === "reconnecting").length).toBeGreaterThanOrEqual(4);
  });

  it("reports reconnect delay in the status detail", () => {
    const h = harness();
    h.stream.start();
    h.sockets[0].open();
    h.sockets[0].drop();
    const note = h.statuses[h.statuses.length - 1];
    expect(note.status).toBe("reconnecting");
    expect(note.detail).toContain("250 ms");
  });

  it("stop closes the socket and cancels reconnects", () => {
    const h = harness();
    h.stream.start();
    h.sockets[0].open();
    h.stream.stop();
    expect(h.sockets[0].closed).toBe(true);
    h.sockets[0].drop(); // close after stop: no reconnect scheduled
    expect(h.timers.length).toBe(0);
    expect(h.statuses[h.statuses.length - 1].status).toBe("stopped");
  });

  it("surfaces server error messages without breaking the stream", () => {
    const h = harness();
    h.stream.start();
    const s = h.sockets[0];
    s.open();
    s.onmessage?.({ data: JSON.stringify({ type: "error", message: "unknown pointer x" }) });
    s.frame(1);
    expect(h.errors).toEqual(["unknown pointer x"]);
    expect(h.frames).toEqual([1]);
  });

  it("ignores malformed payloads", () => {
    const h = harness();
    h.stream.start();
    const s = h.sockets[0];
    s.open();
    s.onmessage?.({ data: "not json" });
    s.onmessage?.({ data: JSON.stringify({ type: "frame", seq: "NaN?" }) });
    s.frame(2);
    expect(h.frames).toEqual([2]);
  });
});
