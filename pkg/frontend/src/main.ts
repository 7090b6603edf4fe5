import { ApiClient } from "./api.js";
import { Workbench } from "./app.js";

// Served by the workbench itself (or any static host on the same origin).
document.addEventListener("DOMContentLoaded", () => {
  const app = new Workbench(new ApiClient(""), document);
  void app.start();
});
