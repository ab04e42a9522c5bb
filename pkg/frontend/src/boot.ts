/** Browser entry point; kept separate so tests import main.ts without side effects. */

import { ApiClient } from "./api.js";
import { initDashboard } from "./main.js";

const app = document.getElementById("app");
if (app !== null) {
  void initDashboard(app, new ApiClient()).load();
}
