import { ApiClient } from "./api.js";
import { EditorController } from "./controller.js";
import { mount } from "./dom.js";

// Same-origin by default; override via <meta name="sste-api" content="...">.
function apiBase(): string {
  const meta = document.querySelector('meta[name="sste-api"]');
  return meta?.getAttribute("content") ?? "";
}

const root = document.getElementById("app");
if (root) {
  const controller = new EditorController(new ApiClient(apiBase()));
  mount(root, controller);
  window.addEventListener("beforeunload", () => void controller.close());
}

export { ApiClient, EditorController, mount };
