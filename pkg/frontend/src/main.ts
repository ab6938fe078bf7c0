/** Browser entry point. */

import { mountApp } from "./app.js";

const root = document.getElementById("app");
if (root !== null) {
  mountApp(root);
}
