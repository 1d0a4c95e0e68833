import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    // training and subprocess tests run the pure-JS tfjs backend; give
    // them room well past the default 5s
    testTimeout: 120000,
    hookTimeout: 120000,
  },
});
