import { startApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  startApp(root).catch((error) => {
    root.textContent = `failed to start: ${error}`;
  });
}
