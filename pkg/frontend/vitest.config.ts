import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // the live test spawns the session server and plays full sessions
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
});
