// Pointer-drag orbit: drag maps to yaw/pitch proportional to pixels moved,
// the wheel maps to dolly notches.  Deltas accumulate locally and are sent
// one request at a time; movement during an in-flight request coalesces
// into the next one, so a slow server never queues up a gesture backlog.
// No interaction sends nothing.

import type { OrbitDelta } from "./types";

export interface OrbitOptions {
  yawPerPixel?: number;
  pitchPerPixel?: number;
  dollyPerNotch?: number;
  onError?: (err: unknown) => void;
}

export class OrbitControl {
  sends = 0;

  private readonly yawPerPixel: number;
  private readonly pitchPerPixel: number;
  private readonly dollyPerNotch: number;
  private readonly onError?: (err: unknown) => void;

  private dragging = false;
  private lastX = 0;
  private lastY = 0;
  private pendingYaw = 0;
  private pendingPitch = 0;
  private pendingDolly = 0;
  private pumping = false;
  private tail: Promise<void> = Promise.resolve();

  constructor(
    private readonly send: (delta: OrbitDelta) => Promise<unknown>,
    opts: OrbitOptions = {},
  ) {
    this.yawPerPixel = opts.yawPerPixel ?? 0.005;
    this.pitchPerPixel = opts.pitchPerPixel ?? 0.005;
    this.dollyPerNotch = opts.dollyPerNotch ?? 0.12;
    this.onError = opts.onError;
  }

  pointerDown(x: number, y: number): void {
    this.dragging = true;
    this.lastX = x;
    this.lastY = y;
  }

  pointerMove(x: number, y: number): void {
    if (!this.dragging) return;
    this.pendingYaw += (x - this.lastX) * this.yawPerPixel;
    this.pendingPitch += (this.lastY - y) * this.pitchPerPixel; // drag up raises the eye
    this.lastX = x;
    this.lastY = y;
    this.flush();
  }

  pointerUp(): void {
    this.dragging = false;
    this.flush();
  }

  wheel(deltaY: number): void {
    if (deltaY === 0) return;
    this.pendingDolly += (deltaY > 0 ? 1 : -1) * this.dollyPerNotch;
    this.flush();
  }

  // resolves when every queued delta has been sent
  idle(): Promise<void> {
    return this.tail;
  }

  private takePending(): OrbitDelta | null {
    const { pendingYaw: yaw, pendingPitch: pitch, pendingDolly: dolly } = this;
    if (yaw === 0 && pitch === 0 && dolly === 0) return null;
    this.pendingYaw = 0;
    this.pendingPitch = 0;
    this.pendingDolly = 0;
    return { yaw, pitch, dolly };
  }

  private flush(): void {
    if (this.pumping) return;
    this.pumping = true;
    this.tail = this.pump();
  }

  private async pump(): Promise<void> {
    try {
      for (let delta = this.takePending(); delta !== null; delta = this.takePending()) {
        this.sends += 1;
        try {
          await this.send(delta);
        } catch (err) {
          this.onError?.(err);
        }
      }
    } finally {
      this.pumping = false;
    }
  }
}
