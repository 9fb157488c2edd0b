// @vitest-environment happy-dom
import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { ParameterPanel, hexToRgb, rgbToHex } from "../src/panel";
import { FakeRenderServer } from "./fake_server";

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

interface Rig {
  server: FakeRenderServer;
  api: ApiClient;
  root: HTMLElement;
  panel: ParameterPanel;
  toasts: string[];
}

let rig: Rig;

beforeEach(async () => {
  const server = new FakeRenderServer();
  const api = new ApiClient("", server.handle);
  const root = document.createElement("div");
  const toasts: string[] = [];
  const panel = new ParameterPanel(api, root, { toast: (m) => toasts.push(m) });
  panel.render(await api.state());
  rig = { server, api, root, panel, toasts };
});

function control<T extends HTMLElement>(root: HTMLElement, testid: string): T {
  const el = root.querySelector<T>(`[data-testid="${testid}"]`);
  if (!el) throw new Error(`no control ${testid}`);
  return el;
}

function fire(el: HTMLElement): void {
  el.dispatchEvent(new Event("change", { bubbles: true }));
}

describe("color helpers", () => {
  it("round trip unit rgb through hex", () => {
    expect(rgbToHex([1, 0, 0])).toBe("#ff0000");
    expect(rgbToHex([0.5, 0.25, 1])).toBe("#8040ff");
    expect(hexToRgb("#ff0000")).toEqual([1, 0, 0]);
    const back = hexToRgb(rgbToHex([0.2, 0.4, 0.6]));
    back.forEach((v, i) => expect(v).toBeCloseTo([0.2, 0.4, 0.6][i], 2));
  });

  it("clamps out-of-range components", () => {
    expect(rgbToHex([2, -1, 0.5])).toBe("#ff0080");
  });
});

describe("ParameterPanel", () => {
  it("builds controls for effects and every light", () => {
    const { root, server } = rig;
    control(root, "effects/ssao_enabled");
    control(root, "effects/bloom_enabled");
    control(root, "effects/edl_strength");
    control(root, "effects/tonemap");
    server.lights.forEach((_, i) => {
      control(root, `lights/${i}/intensity`);
      control(root, `lights/${i}/color`);
      control(root, `lights/${i}/casts_shadow`);
      control(root, `lights/${i}/position/x`);
    });
  });

  it("shows which values came from auto-inference", async () => {
    const { root } = rig;
    expect(control(root, "auto-camera").textContent).toContain("auto");
    expect(control(root, "auto-lights").textContent).toContain("auto");
    expect(control(root, "auto-ssao_radius").textContent).toContain("auto");

    const manualState = { ...(await rig.api.state()), auto: {} };
    rig.panel.render(manualState);
    expect(control(root, "auto-camera").textContent).toContain("manual");
  });

  it("toggling SSAO patches the pointer and changes the digest", async () => {
    const { root, server } = rig;
    const before = server.lastDigest;
    const box = control<HTMLInputElement>(root, "effects/ssao_enabled");
    expect(box.checked).toBe(true);
    box.checked = false;
    fire(box);
    await flush();
    expect(server.effects.ssao_enabled).toBe(false);
    expect(server.lastDigest).not.toBe(before);
    const patches = server.calls.filter((c) => c.path === "/param");
    expect(patches.length).toBe(1);
    expect(patches[0].body).toEqual({ pointer: "effects/ssao_enabled", value: false });
  });

  it("setting intensity to its current value keeps the frame digest", async () => {
    const { root, server } = rig;
    const before = server.lastDigest;
    const input = control<HTMLInputElement>(root, "lights/0/intensity");
    fire(input); // change event with the unchanged value
    await flush();
    expect(server.lastDigest).toBe(before); // seq bumped, pixels identical
    expect(server.seq).toBe(2);
  });

  it("switching the tone mapper patches effects/tonemap", async () => {
    const { root, server } = rig;
    const select = control<HTMLSelectElement>(root, "effects/tonemap");
    expect(select.value).toBe("aces");
    select.value = "reinhard";
    fire(select);
    await flush();
    expect(server.effects.tonemap).toBe("reinhard");
  });

  it("color picker sends rgb in [0, 1]", async () => {
    const { root, server } = rig;
    const picker = control<HTMLInputElement>(root, "lights/0/color");
    picker.value = "#ff8000";
    fire(picker);
    await flush();
    expect(server.lights[0].color[0]).toBeCloseTo(1.0, 2);
    expect(server.lights[0].color[1]).toBeCloseTo(0.5, 1);
    expect(server.lights[0].color[2]).toBe(0);
  });

  it("position edit sends the full 3-vector", async () => {
    const { root, server } = rig;
    const x = control<HTMLInputElement>(root, "lights/1/position/x");
    x.value = "9";
    fire(x);
    await flush();
    expect(server.lights[1].position).toEqual([9, 1, 1]);
  });

  it("rejected patch reverts the control and toasts the server message", async () => {
    const { root, server, toasts } = rig;
    const input = control<HTMLInputElement>(root, "lights/0/intensity");
    input.value = "-5";
    fire(input);
    await flush();
    expect(input.value).toBe("60"); // back to the last accepted value
    expect(server.lights[0].intensity).toBe(60);
    expect(toasts).toEqual(["intensity must be >= 0"]);
  });

  it("reverts to the latest applied value, not the page-load value", async () => {
    const { root, toasts } = rig;
    const input = control<HTMLInputElement>(root, "lights/0/intensity");
    input.value = "80";
    fire(input);
    await flush();
    input.value = "-1";
    fire(input);
    await flush();
    expect(input.value).toBe("80");
    expect(toasts.length).toBe(1);
  });

  it("cleared or invalid input reverts without calling the server", async () => {
    const { root, server } = rig;
    const input = control<HTMLInputElement>(root, "effects/edl_strength");
    const calls = server.calls.length;
    input.value = ""; // what the DOM yields for junk typed into a number input
    fire(input);
    await flush();
    expect(input.value).toBe("1");
    expect(server.calls.length).toBe(calls);
  });

  it("re-rendering the same state yields identical markup", async () => {
    const { root, panel, api } = rig;
    const state = await api.state();
    panel.render(state);
    const first = root.innerHTML;
    panel.render(state);
    expect(root.innerHTML).toBe(first);
  });

  it("a fresh panel rebuilt from GET /state mirrors earlier edits", async () => {
    const { root, server, api } = rig;
    const box = control<HTMLInputElement>(root, "effects/ssao_enabled");
    box.checked = false;
    fire(box);
    const intensity = control<HTMLInputElement>(root, "lights/0/intensity");
    intensity.value = "75";
    fire(intensity);
    await flush();

    // reload: new panel, new root, state straight from the server
    const root2 = document.createElement("div");
    const panel2 = new ParameterPanel(api, root2, {});
    panel2.render(await api.state());
    expect(control<HTMLInputElement>(root2, "effects/ssao_enabled").checked).toBe(false);
    expect(control<HTMLInputElement>(root2, "lights/0/intensity").value).toBe("75");
    expect(server.calls.filter((c) => c.path === "/param").length).toBe(2);

    const ids = (r: HTMLElement) =>
      Array.from(r.querySelectorAll("[data-testid]")).map((el) =>
        el.getAttribute("data-testid"));
    expect(ids(root2)).toEqual(ids(root));
  });
});
