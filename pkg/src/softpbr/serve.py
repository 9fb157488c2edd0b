"""Interactive render service: one live scene behind an HTTP + WebSocket API.

Concurrency contract: every edit takes the render lock, mutates the scene,
renders one frame and publishes it, so edits apply in arrival order and a
frame always reflects every edit acknowledged before its sequence number.
Stream consumers coalesce: a slow client skips intermediate frames but
always ends on the latest one.  All edits are appended to an event log;
replaying the log on a fresh service reproduces the same frame digests.
"""

from __future__ import annotations

import asyncio
import hashlib
import io
import json
import math
import os
import tempfile
import threading
import zipfile
from base64 import b64encode

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from PIL import Image
from starlette.concurrency import run_in_threadpool

from .errors import InvalidArgument, MeshLoadError, RenderError, SceneFormatError
from .geom import Pose
from .pipeline import RenderCaches, render_frame, render_trajectory
from .scene import Camera, Scene

JPEG_QUALITY = 85
ORBIT_POLE_MARGIN = 0.05  # rad; pitch never reaches the up axis


class ServiceBusy(RuntimeError):
    """A trajectory recording is already in progress."""


def _encode_image(ldr, fmt):
    buf = io.BytesIO()
    if fmt == "jpeg":
        Image.fromarray(ldr, mode="RGB").save(buf, format="JPEG", quality=JPEG_QUALITY)
    else:
        Image.fromarray(ldr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def _frame_digest(ldr):
    return hashlib.sha256(ldr.tobytes()).hexdigest()


class RenderService:
    """Owns the scene, caches, key poses, event log and frame subscribers.

    Thread-safe: handlers run on worker threads and serialize on one lock.
    Subscribers are (asyncio.Queue, loop) pairs; frames are handed over with
    call_soon_threadsafe so the queue is only touched on its own loop.
    """

    def __init__(self, scene=None, scene_path=None):
        self._lock = threading.Lock()
        self._flag_lock = threading.Lock()
        self._subs_lock = threading.Lock()
        self._subscribers = []
        self._recording = False
        self.events = []
        self.seq = 0
        self.last = None  # {"seq", "digest", "ldr", "png", ["jpeg"]}
        self.keyposes = []  # {"pose": Pose, "duration": float}
        if scene_path is not None:
            from .assets import parse_scene
            scene = parse_scene(scene_path)
        self.scene = scene if scene is not None else Scene()
        self.caches = RenderCaches()
        with self._lock:
            self.scene.finalize()
            self._render_and_publish()

    # ------------------------------------------------------------- stream

    def subscribe(self, queue, loop):
        with self._subs_lock:
            self._subscribers.append((queue, loop))
        return self.last

    def unsubscribe(self, queue):
        with self._subs_lock:
            self._subscribers = [(q, l) for q, l in self._subscribers if q is not queue]

    def _publish(self, record):
        with self._subs_lock:
            subs = list(self._subscribers)
        dead = []
        for q, loop in subs:
            try:
                loop.call_soon_threadsafe(q.put_nowait, record)
            except RuntimeError:  # loop already closed
                dead.append(q)
        for q in dead:
            self.unsubscribe(q)

    def _render_and_publish(self):
        """Render the live scene once; caller must hold the lock."""
        _, ldr, self.caches = render_frame(self.scene, self.caches)
        self.seq += 1
        record = {
            "seq": self.seq,
            "digest": _frame_digest(ldr),
            "ldr": ldr,
            "png": _encode_image(ldr, "png"),
        }
        self.last = record
        self._publish(record)
        return record

    def frame_message(self, record, fmt="png"):
        """JSON text pushed over the stream for one frame."""
        if fmt == "jpeg":
            if "jpeg" not in record:
                record["jpeg"] = _encode_image(record["ldr"], "jpeg")
            data = record["jpeg"]
        else:
            fmt = "png"
            data = record["png"]
        return json.dumps({
            "type": "frame",
            "seq": record["seq"],
            "digest": record["digest"],
            "format": fmt,
            "data": b64encode(data).decode("ascii"),
        })

    def frame_bytes(self, fmt="png"):
        with self._lock:
            record = self.last
        if fmt == "jpeg":
            if "jpeg" not in record:
                record["jpeg"] = _encode_image(record["ldr"], "jpeg")
            return record["jpeg"], record
        return record["png"], record

    # -------------------------------------------------------------- edits

    def load_scene(self, spec, base_dir=None):
        from .assets import parse_scene
        with self._lock:
            scene = parse_scene(spec, base_dir=base_dir)
            scene.finalize()
            self.scene = scene
            self.caches = RenderCaches()
            self.keyposes = []
            self.events.append({"op": "scene", "spec": spec})
            record = self._render_and_publish()
            state = scene.state_dict()
        return {
            "objects": [o["name"] for o in state["objects"]],
            "bounds": state["bounds"],
            "auto": state["auto"],
            "seq": record["seq"],
            "digest": record["digest"],
        }

    def patch(self, pointer, value):
        with self._lock:
            applied = self.scene.apply_patch(pointer, value)
            self.events.append({"op": "param", "pointer": pointer, "value": value})
            record = self._render_and_publish()
        return {"pointer": pointer, "value": applied,
                "seq": record["seq"], "digest": record["digest"]}

    def move_camera(self, body):
        """Absolute {pose[, fov_deg]} or orbit delta {yaw, pitch, dolly}."""
        with self._lock:
            cam = self.scene.camera
            if "pose" in body:
                fov = math.radians(float(body["fov_deg"])) if "fov_deg" in body \
                    else cam.vertical_fov
                self.scene.camera = Camera(Pose.from_dict(body["pose"]), fov,
                                           cam.near, cam.far, cam.width, cam.height)
            else:
                yaw = float(body.get("yaw", 0.0))
                pitch = float(body.get("pitch", 0.0))
                dolly = float(body.get("dolly", 0.0))
                if yaw == 0.0 and pitch == 0.0 and dolly == 0.0:
                    # identity delta: skip the rebuild so the frame is bit-identical
                    return {"camera": cam.to_dict(), "seq": self.last["seq"],
                            "digest": self.last["digest"]}
                self.scene.camera = _orbit(cam, self.scene.center, yaw, pitch, dolly)
            self.events.append({"op": "camera", "body": body})
            record = self._render_and_publish()
            return {"camera": self.scene.camera.to_dict(),
                    "seq": record["seq"], "digest": record["digest"]}

    def apply_event(self, event):
        """Replay one logged edit; used for event-sourcing equivalence."""
        op = event["op"]
        if op == "scene":
            return self.load_scene(event["spec"])
        if op == "param":
            return self.patch(event["pointer"], event["value"])
        if op == "camera":
            return self.move_camera(event["body"])
        raise InvalidArgument(f"unknown event op '{op}'")

    # ---------------------------------------------------------- key poses

    def add_keypose(self, duration=1.0):
        duration = float(duration)
        if duration <= 0:
            raise InvalidArgument("keypose duration must be > 0")
        with self._lock:
            self.keyposes.append({"pose": self.scene.camera.pose, "duration": duration})
            return {"count": len(self.keyposes),
                    "pose": self.scene.camera.pose.to_dict(), "duration": duration}

    def list_keyposes(self):
        with self._lock:
            return [{"pose": k["pose"].to_dict(), "duration": k["duration"]}
                    for k in self.keyposes]

    def clear_keyposes(self):
        with self._lock:
            self.keyposes = []
        return {"count": 0}

    def record(self, fps, out_path=None):
        """Render the key-pose trajectory; returns digests + zip archive path.

        The first pose's duration is ignored: duration k is the seconds spent
        travelling from pose k-1 to pose k.  The live camera is restored
        afterwards, so the stream is unaffected.
        """
        if fps <= 0:
            raise InvalidArgument("fps must be > 0")
        with self._flag_lock:
            if self._recording:
                raise ServiceBusy("a recording is already in progress")
            self._recording = True
        try:
            with self._lock:
                if len(self.keyposes) < 2:
                    raise InvalidArgument("recording needs at least 2 key poses")
                poses = [k["pose"] for k in self.keyposes]
                durations = [k["duration"] for k in self.keyposes[1:]]
                saved = self.scene.camera
                try:
                    frames = render_trajectory(self.scene, poses, durations, fps,
                                               caches=self.caches)
                finally:
                    self.scene.camera = saved
                digests = [_frame_digest(f) for f in frames]
                if out_path is None:
                    fd, out_path = tempfile.mkstemp(prefix="softpbr_record_", suffix=".zip")
                    os.close(fd)
                stamp = (1980, 1, 1, 0, 0, 0)  # fixed: archive bytes reproducible
                with zipfile.ZipFile(out_path, "w", zipfile.ZIP_DEFLATED) as z:
                    for i, f in enumerate(frames):
                        info = zipfile.ZipInfo(f"frame_{i:05d}.png", date_time=stamp)
                        z.writestr(info, _encode_image(f, "png"))
                    meta = zipfile.ZipInfo("digests.json", date_time=stamp)
                    z.writestr(meta, json.dumps({"fps": fps, "digests": digests}, indent=1))
            return {"frames": len(frames), "digests": digests, "archive": out_path}
        finally:
            with self._flag_lock:
                self._recording = False

    # -------------------------------------------------------------- state

    def state(self):
        with self._lock:
            out = self.scene.state_dict()
            out["counters"] = dict(self.caches.counters)
            out["seq"] = self.seq
            out["digest"] = self.last["digest"] if self.last else None
            out["keyposes"] = len(self.keyposes)
            out["recording"] = self._recording
            return out


def _orbit(cam, center, yaw, pitch, dolly):
    """Arcball about the scene center: spherical offset in world-up coords.

    yaw spins about +y, pitch tilts toward/away from the pole (clamped so
    the view never crosses it), dolly scales the distance by exp(dolly).
    """
    center = np.zeros(3) if center is None else np.asarray(center, dtype=np.float64)
    offset = cam.position - center
    r = float(np.linalg.norm(offset))
    if r < 1e-12:
        offset = np.array([0.0, 0.0, 1.0])
        r = 1.0
    theta = math.acos(min(max(offset[1] / r, -1.0), 1.0))
    phi = math.atan2(offset[2], offset[0])
    phi += yaw
    theta = min(max(theta - pitch, ORBIT_POLE_MARGIN), math.pi - ORBIT_POLE_MARGIN)
    r *= math.exp(dolly)
    eye = center + r * np.array(
        [math.sin(theta) * math.cos(phi), math.cos(theta), math.sin(theta) * math.sin(phi)])
    return Camera.look_at(eye, center, vertical_fov=cam.vertical_fov, near=cam.near,
                          far=cam.far, width=cam.width, height=cam.height)


# ----------------------------------------------------------------- HTTP app


def create_app(scene_path=None, scene=None):
    from fastapi.responses import Response

    service = RenderService(scene=scene, scene_path=scene_path)
    app = FastAPI(title="softpbr render service")
    app.state.service = service

    def _http_error(exc):
        if isinstance(exc, KeyError):
            return HTTPException(404, f"unknown pointer {exc.args[0] if exc.args else ''}")
        if isinstance(exc, ServiceBusy):
            return HTTPException(409, str(exc))
        return HTTPException(400, str(exc))

    _edit_errors = (SceneFormatError, InvalidArgument, MeshLoadError, RenderError,
                    KeyError, ServiceBusy, ValueError, TypeError, OSError)

    @app.post("/scene")
    def post_scene(body: dict):
        try:
            return service.load_scene(body)
        except _edit_errors as e:
            raise _http_error(e) from e

    @app.get("/state")
    def get_state():
        return service.state()

    @app.patch("/param")
    def patch_param(body: dict):
        if "pointer" not in body or "value" not in body:
            raise HTTPException(400, "body must be {pointer, value}")
        try:
            return service.patch(body["pointer"], body["value"])
        except _edit_errors as e:
            raise _http_error(e) from e

    @app.post("/camera")
    def post_camera(body: dict):
        if "pose" not in body and not ({"yaw", "pitch", "dolly"} & set(body)):
            raise HTTPException(400, "body must carry pose or yaw/pitch/dolly")
        try:
            return service.move_camera(body)
        except _edit_errors as e:
            raise _http_error(e) from e

    @app.post("/keypose")
    def post_keypose(body: dict | None = None):
        try:
            return service.add_keypose((body or {}).get("duration", 1.0))
        except _edit_errors as e:
            raise _http_error(e) from e

    @app.get("/keyposes")
    def get_keyposes():
        return service.list_keyposes()

    @app.delete("/keyposes")
    def delete_keyposes():
        return service.clear_keyposes()

    @app.post("/record")
    def post_record(body: dict | None = None):
        try:
            return service.record(float((body or {}).get("fps", 30.0)))
        except _edit_errors as e:
            raise _http_error(e) from e

    @app.get("/frame")
    def get_frame(format: str = "png"):
        if format not in ("png", "jpeg"):
            raise HTTPException(400, "format must be png or jpeg")
        data, record = service.frame_bytes(format)
        return Response(content=data, media_type=f"image/{format}",
                        headers={"X-Frame-Seq": str(record["seq"]),
                                 "X-Frame-Digest": record["digest"]})

    @app.websocket("/frames")
    async def frames(ws: WebSocket):
        fmt = ws.query_params.get("format", "png")
        await ws.accept()
        loop = asyncio.get_running_loop()
        queue: asyncio.Queue = asyncio.Queue()
        current = service.subscribe(queue, loop)
        if current is not None:
            await ws.send_text(service.frame_message(current, fmt))

        async def pump():
            while True:
                record = await queue.get()
                while not queue.empty():  # coalesce: only the newest frame matters
                    record = queue.get_nowait()
                await ws.send_text(service.frame_message(record, fmt))

        sender = asyncio.create_task(pump())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    edit = json.loads(text)
                    kind = edit.pop("type")
                    if kind == "param":
                        await run_in_threadpool(service.patch, edit["pointer"], edit["value"])
                    elif kind == "camera":
                        await run_in_threadpool(service.move_camera, edit)
                    elif kind == "keypose":
                        await run_in_threadpool(service.add_keypose, edit.get("duration", 1.0))
                    else:
                        raise InvalidArgument(f"unknown edit type '{kind}'")
                except WebSocketDisconnect:
                    raise
                except Exception as e:  # report back, keep the channel alive
                    await ws.send_text(json.dumps({"type": "error", "message": str(e)}))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            service.unsubscribe(queue)

    static_dir = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(
        os.path.abspath(__file__)))), "frontend", "dist")
    if os.path.isdir(static_dir):
        from starlette.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="viewer")

    return app
