export * from "./types.js";
export * from "./render.js";
export * from "./actions.js";
export * from "./sync.js";
export * from "./client.js";
