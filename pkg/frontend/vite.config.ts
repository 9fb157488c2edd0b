import { defineConfig } from "vitest/config";

export default defineConfig({
  build: {
    outDir: "dist",
    target: "es2022",
  },
  server: {
    proxy: {
      "/state": "http://127.0.0.1:8008",
      "/scene": "http://127.0.0.1:8008",
      "/param": "http://127.0.0.1:8008",
      "/camera": "http://127.0.0.1:8008",
      "/keypose": "http://127.0.0.1:8008",
      "/keyposes": "http://127.0.0.1:8008",
      "/record": "http://127.0.0.1:8008",
      "/frame": "http://127.0.0.1:8008",
      "/frames": { target: "ws://127.0.0.1:8008", ws: true },
    },
  },
  test: {
    environment: "happy-dom",
  },
});
