// Page wiring: connect the frame stream to the canvas image, pointer events
// to the orbit control, and the panels to their DOM roots.  All scene state
// lives on the server; this module only routes gestures to endpoints and
// frames to the screen.

import { ApiClient, frameStreamUrl } from "./api";
import { FrameStream, FrameStreamOptions } from "./stream";
import { KeyposePanel } from "./keyposes";
import { OrbitControl } from "./orbit";
import { ParameterPanel } from "./panel";

export interface BootOptions {
  api?: ApiClient;
  streamUrl?: string;
  stream?: Partial<FrameStreamOptions>;
}

export interface BootHandles {
  api: ApiClient;
  stream: FrameStream;
  orbit: OrbitControl;
  panel: ParameterPanel;
  keyposes: KeyposePanel;
  toast: (message: string) => void;
}

function makeToaster(host: HTMLElement): (message: string) => void {
  return (message: string) => {
    const el = document.createElement("div");
    el.className = "toast";
    el.textContent = message;
    host.appendChild(el);
    setTimeout(() => el.remove(), 4000);
  };
}

function need(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing page element #${id}`);
  return el;
}

export async function boot(opts: BootOptions = {}): Promise<BootHandles> {
  const api = opts.api ?? new ApiClient();
  const img = need("frame") as HTMLImageElement;
  const banner = need("banner");
  const status = need("status");
  const toast = makeToaster(need("toasts"));

  const panel = new ParameterPanel(api, need("panel"), { toast });
  const keyposes = new KeyposePanel(api, need("keyposes"), { toast });

  const state = await api.state();
  img.width = state.width;
  img.height = state.height;
  panel.render(state);
  await keyposes.sync();

  const url = opts.streamUrl ?? frameStreamUrl(window.location.origin);
  const stream = new FrameStream(url, {
    onFrame: (frame) => {
      img.src = `data:image/${frame.format};base64,${frame.data}`;
      status.textContent = `frame ${frame.seq} sha256 ${frame.digest.slice(0, 12)}`;
    },
    onStatus: (s, detail) => {
      banner.hidden = s === "live";
      banner.textContent = s === "live" ? "" : `stream ${s}${detail ? ` (${detail})` : ""}`;
    },
    onServerError: toast,
    ...opts.stream,
  });
  stream.start();

  const orbit = new OrbitControl((delta) => api.moveCamera(delta), {
    onError: (err) => toast(String(err)),
  });
  img.addEventListener("pointerdown", (ev) => {
    ev.preventDefault();
    orbit.pointerDown(ev.clientX, ev.clientY);
  });
  img.addEventListener("pointermove", (ev) => orbit.pointerMove(ev.clientX, ev.clientY));
  window.addEventListener("pointerup", () => orbit.pointerUp());
  img.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    orbit.wheel(ev.deltaY);
  });

  return { api, stream, orbit, panel, keyposes, toast };
}
