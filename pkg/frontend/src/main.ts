/**
 * Entry point: wire the view to the service.  The API base defaults to
 * the page's own origin; append ?api=http://host:port when the service
 * runs elsewhere (it sends permissive CORS headers).
 */

import { ApiClient } from "./api.js";
import { mount } from "./view.js";

const params = new URLSearchParams(window.location.search);
const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
mount(root, { client: new ApiClient(params.get("api") ?? "") });
