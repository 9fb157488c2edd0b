// Key-pose recorder: capture the current camera as a trajectory key-pose,
// list captured poses with their segment durations, and trigger a server-side
// recording.  Record stays disabled with a hint until two poses exist.
// Durations are fixed when a pose is captured (the service has no pose-edit
// call), so the per-segment inputs in the list are read-only mirrors.

import { ApiClient, ApiError } from "./api";
import type { KeyposeEntry, RecordResult } from "./types";

export interface KeyposeOptions {
  toast?: (message: string) => void;
}

export class KeyposePanel {
  poses: KeyposeEntry[] = [];
  lastRecord: RecordResult | null = null;

  private durationInput!: HTMLInputElement;
  private fpsInput!: HTMLInputElement;
  private recordButton!: HTMLButtonElement;
  private hint!: HTMLElement;
  private list!: HTMLElement;
  private result!: HTMLElement;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    private readonly opts: KeyposeOptions = {},
  ) {
    this.build();
  }

  private build(): void {
    this.root.textContent = "";
    const box = document.createElement("fieldset");
    const legend = document.createElement("legend");
    legend.textContent = "Key poses";
    box.appendChild(legend);

    this.durationInput = this.numberField(box, "Segment duration (s)", "keypose-duration", 1.0);
    this.button(box, "Add pose", "keypose-add", () => void this.add());
    this.button(box, "Clear", "keypose-clear", () => void this.clear());

    this.list = document.createElement("ol");
    this.list.dataset.testid = "keypose-list";
    box.appendChild(this.list);

    this.fpsInput = this.numberField(box, "Record fps", "record-fps", 30);
    this.recordButton = this.button(box, "Record", "record-start", () => void this.record());
    this.hint = document.createElement("span");
    this.hint.dataset.testid = "record-hint";
    box.appendChild(this.hint);

    this.result = document.createElement("div");
    this.result.dataset.testid = "record-result";
    box.appendChild(this.result);

    this.root.appendChild(box);
    this.renderList();
  }

  private numberField(parent: HTMLElement, text: string, testid: string,
                      value: number): HTMLInputElement {
    const label = document.createElement("label");
    const span = document.createElement("span");
    span.textContent = text;
    const input = document.createElement("input");
    input.type = "number";
    input.step = "0.1";
    input.value = String(value);
    input.dataset.testid = testid;
    label.appendChild(span);
    label.appendChild(input);
    parent.appendChild(label);
    return input;
  }

  private button(parent: HTMLElement, text: string, testid: string,
                 onClick: () => void): HTMLButtonElement {
    const btn = document.createElement("button");
    btn.type = "button";
    btn.textContent = text;
    btn.dataset.testid = testid;
    btn.addEventListener("click", onClick);
    parent.appendChild(btn);
    return btn;
  }

  // pull the server's pose list, e.g. after page load
  async sync(): Promise<void> {
    this.poses = await this.api.listKeyposes();
    this.renderList();
  }

  async add(): Promise<void> {
    const duration = Number(this.durationInput.value);
    try {
      const res = await this.api.addKeypose(duration);
      this.poses.push({ pose: res.pose, duration: res.duration });
      this.renderList();
    } catch (err) {
      this.toastError(err);
    }
  }

  async clear(): Promise<void> {
    try {
      await this.api.clearKeyposes();
      this.poses = [];
      this.renderList();
    } catch (err) {
      this.toastError(err);
    }
  }

  async record(): Promise<void> {
    const fps = Number(this.fpsInput.value);
    this.recordButton.disabled = true;
    this.result.textContent = "recording...";
    try {
      const res = await this.api.record(fps);
      this.lastRecord = res;
      this.result.textContent = "";
      const count = document.createElement("div");
      count.dataset.testid = "record-frames";
      count.textContent = `${res.frames} frames recorded`;
      const digest = document.createElement("div");
      digest.dataset.testid = "record-first-digest";
      digest.textContent = res.digests.length > 0 ? `first frame ${res.digests[0]}` : "";
      const archive = document.createElement("div");
      archive.dataset.testid = "record-archive";
      archive.textContent = `archive written to ${res.archive} on the server`;
      this.result.append(count, digest, archive);
    } catch (err) {
      this.result.textContent = "";
      this.toastError(err);
    } finally {
      this.renderList();
    }
  }

  private renderList(): void {
    this.list.textContent = "";
    this.poses.forEach((entry, i) => {
      const row = document.createElement("li");
      const t = entry.pose.translation.map((v) => v.toFixed(2)).join(", ");
      const label = document.createElement("span");
      label.textContent = `pose ${i} at (${t}) `;
      const duration = document.createElement("input");
      duration.type = "number";
      duration.readOnly = true;
      duration.value = String(entry.duration);
      duration.dataset.testid = `keypose-${i}-duration`;
      row.appendChild(label);
      row.appendChild(duration);
      this.list.appendChild(row);
    });
    const enough = this.poses.length >= 2;
    this.recordButton.disabled = !enough;
    this.hint.textContent = enough ? "" : "add at least 2 poses to record";
  }

  private toastError(err: unknown): void {
    const message = err instanceof ApiError ? err.message : String(err);
    this.opts.toast?.(message);
  }
}
