/**
 * API base URL. Empty string means same-origin. The build step can emit a
 * `config.js` that sets `globalThis.__OMULET_API_BASE__` from the
 * OMULET_API_BASE environment variable, so deployments point the static
 * bundle at any service host without rebuilding sources.
 */
export const API_BASE: string =
  (globalThis as { __OMULET_API_BASE__?: string }).__OMULET_API_BASE__ ?? "";
