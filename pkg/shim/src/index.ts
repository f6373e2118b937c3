/**
 * Preload entry point: `node --require <dist/index.js> exploit.js`.
 * Hooks are installed before any user code runs.
 */
import { installHooks } from "./hooks";

installHooks(process.env);
