// Parameter panel: effect toggles, tone mapper select, and per-light
// controls, each bound to one PATCH /param pointer.  The panel is a pure
// function of the last server state plus applied edits, so reloading and
// re-rendering from GET /state reconstructs the identical panel.  A
// rejected edit reverts the control to the last value the server accepted
// and surfaces the server's message as a toast.

import { ApiClient, ApiError } from "./api";
import type { StateSnapshot } from "./types";

export const TONEMAP_OPTIONS = ["aces", "reinhard", "none"];

export function rgbToHex(rgb: number[]): string {
  const byte = (v: number) => {
    const b = Math.round(Math.min(1, Math.max(0, v)) * 255);
    return b.toString(16).padStart(2, "0");
  };
  return "#" + byte(rgb[0]) + byte(rgb[1]) + byte(rgb[2]);
}

export function hexToRgb(hex: string): [number, number, number] {
  const n = parseInt(hex.replace("#", ""), 16);
  return [((n >> 16) & 0xff) / 255, ((n >> 8) & 0xff) / 255, (n & 0xff) / 255];
}

export interface PanelOptions {
  toast?: (message: string) => void;
}

type Applied = Map<string, unknown>;

export class ParameterPanel {
  private applied: Applied = new Map();

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    private readonly opts: PanelOptions = {},
  ) {}

  // rebuild every control from a server state snapshot
  render(state: StateSnapshot): void {
    this.applied = new Map();
    this.root.textContent = "";

    const effects = this.section("Effects");
    this.badgeRow(effects, state);
    this.checkbox(effects, "SSAO", "effects/ssao_enabled", Boolean(state.effects.ssao_enabled));
    this.checkbox(effects, "Bloom", "effects/bloom_enabled", Boolean(state.effects.bloom_enabled));
    this.numberInput(effects, "EDL strength", "effects/edl_strength",
      Number(state.effects.edl_strength), 0.05);
    this.select(effects, "Tone mapper", "effects/tonemap",
      String(state.effects.tonemap), TONEMAP_OPTIONS);

    state.lights.forEach((light, i) => {
      const box = this.section(`Light ${i} (${light.role})`);
      this.numberInput(box, "Intensity", `lights/${i}/intensity`, light.intensity, 0.1);
      this.colorInput(box, "Color", `lights/${i}/color`, light.color);
      this.positionInputs(box, `lights/${i}/position`, light.position);
      this.checkbox(box, "Casts shadow", `lights/${i}/casts_shadow`, light.casts_shadow);
    });
  }

  private section(title: string): HTMLElement {
    const box = document.createElement("fieldset");
    const legend = document.createElement("legend");
    legend.textContent = title;
    box.appendChild(legend);
    this.root.appendChild(box);
    return box;
  }

  // which defaults the server inferred vs. what the scene supplied
  private badgeRow(parent: HTMLElement, state: StateSnapshot): void {
    const row = document.createElement("div");
    row.className = "badges";
    for (const key of ["camera", "lights", "ssao_radius"]) {
      const badge = document.createElement("span");
      badge.dataset.testid = `auto-${key}`;
      const val = state.auto[key];
      badge.textContent = `${key}: ${val === undefined || val === false ? "manual" : "auto"}`;
      row.appendChild(badge);
    }
    parent.appendChild(row);
  }

  private labeled(parent: HTMLElement, text: string, input: HTMLElement): void {
    const label = document.createElement("label");
    const span = document.createElement("span");
    span.textContent = text;
    label.appendChild(span);
    label.appendChild(input);
    parent.appendChild(label);
  }

  private checkbox(parent: HTMLElement, text: string, pointer: string, value: boolean): void {
    const input = document.createElement("input");
    input.type = "checkbox";
    input.checked = value;
    input.dataset.testid = pointer;
    this.applied.set(pointer, value);
    input.addEventListener("change", () => {
      void this.submit(pointer, input.checked, (v) => { input.checked = Boolean(v); });
    });
    this.labeled(parent, text, input);
  }

  private numberInput(parent: HTMLElement, text: string, pointer: string,
                      value: number, step: number): void {
    const input = document.createElement("input");
    input.type = "number";
    input.step = String(step);
    input.value = String(value);
    input.dataset.testid = pointer;
    this.applied.set(pointer, value);
    input.addEventListener("change", () => {
      const next = Number(input.value);
      if (input.value.trim() === "" || !Number.isFinite(next)) {
        input.value = String(this.applied.get(pointer)); // cleared or junk input
        return;
      }
      void this.submit(pointer, next, (v) => { input.value = String(v); });
    });
    this.labeled(parent, text, input);
  }

  private select(parent: HTMLElement, text: string, pointer: string,
                 value: string, options: string[]): void {
    const input = document.createElement("select");
    for (const opt of options) {
      const el = document.createElement("option");
      el.value = opt;
      el.textContent = opt;
      input.appendChild(el);
    }
    input.value = value;
    input.dataset.testid = pointer;
    this.applied.set(pointer, value);
    input.addEventListener("change", () => {
      void this.submit(pointer, input.value, (v) => { input.value = String(v); });
    });
    this.labeled(parent, text, input);
  }

  private colorInput(parent: HTMLElement, text: string, pointer: string,
                     value: number[]): void {
    const input = document.createElement("input");
    input.type = "color";
    input.value = rgbToHex(value);
    input.dataset.testid = pointer;
    this.applied.set(pointer, value);
    input.addEventListener("change", () => {
      void this.submit(pointer, hexToRgb(input.value), (v) => {
        input.value = rgbToHex(v as number[]);
      });
    });
    this.labeled(parent, text, input);
  }

  private positionInputs(parent: HTMLElement, pointer: string, value: number[]): void {
    const inputs: HTMLInputElement[] = [];
    const row = document.createElement("div");
    row.className = "vec3";
    this.applied.set(pointer, [...value]);
    const revert = (v: unknown) => {
      (v as number[]).forEach((c, i) => { inputs[i].value = String(c); });
    };
    ["x", "y", "z"].forEach((axis, i) => {
      const input = document.createElement("input");
      input.type = "number";
      input.step = "0.1";
      input.value = String(value[i]);
      input.dataset.testid = `${pointer}/${axis}`;
      input.addEventListener("change", () => {
        const next = inputs.map((el) => Number(el.value));
        if (inputs.some((el) => el.value.trim() === "") || next.some((c) => !Number.isFinite(c))) {
          revert(this.applied.get(pointer));
          return;
        }
        void this.submit(pointer, next, revert);
      });
      inputs.push(input);
      row.appendChild(input);
    });
    this.labeled(parent, "Position", row);
  }

  // one control edit -> one PATCH; server rejection reverts the control
  private async submit(pointer: string, value: unknown,
                       revert: (v: unknown) => void): Promise<void> {
    try {
      const result = await this.api.patch(pointer, value);
      this.applied.set(pointer, result.value);
    } catch (err) {
      revert(this.applied.get(pointer));
      const message = err instanceof ApiError ? err.message : String(err);
      this.opts.toast?.(message);
    }
  }
}
