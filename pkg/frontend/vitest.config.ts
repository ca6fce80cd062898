import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    // each test file boots its own backend service; give the hooks room
    testTimeout: 30000,
    hookTimeout: 30000,
    fileParallelism: false,
  },
});
