import { ApiClient } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (root !== null) {
  new App(root, new ApiClient()).mount();
}
