"""Start the interactive render service on the kitchen-sink demo scene.

Endpoints are documented in docs/api.md; the browser viewer in frontend/
connects to this server.  State edits re-render and push frames over the
/frames websocket.
"""

import argparse
import os
import sys

import uvicorn

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from render_demo import build_scene
from softpbr.serve import create_app


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8008)
    ap.add_argument("--width", type=int, default=480)
    ap.add_argument("--height", type=int, default=360)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    scene = build_scene(args.width, args.height, args.seed)
    app = create_app(scene=scene)
    print(f"serving http://{args.host}:{args.port} "
          f"({args.width}x{args.height} live frames)")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
