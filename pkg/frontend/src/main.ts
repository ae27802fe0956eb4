/** Browser entry point. The service base URL defaults to same-origin and
 * can be overridden with ?api=http://host:port for a detached dev setup. */

import { DraftApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "";
const mount = document.getElementById("app");
if (mount === null) {
  throw new Error("missing #app mount point");
}
void new DraftApp(mount, baseUrl).start();
