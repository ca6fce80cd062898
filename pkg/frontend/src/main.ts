import { ApiClient } from "./api.js";
import { mountApp } from "./app.js";

// Browser entry point. Point at a running service with ?api=http://host:port
// (default matches `chainmart serve` on its default port).

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "http://127.0.0.1:8080";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

mountApp(root, new ApiClient(base)).then((app) => app.startPolling(1000));
