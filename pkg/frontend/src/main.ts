import { ApiClient } from "./api.js";
import { Dashboard } from "./dashboard.js";
import { RepairConsole } from "./repair.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "http://127.0.0.1:8008";

const api = new ApiClient(baseUrl);
new Dashboard(api);
new RepairConsole(api);

for (const tab of ["dashboard", "repairs"]) {
  document.getElementById(`tab-${tab}`)?.addEventListener("click", () => {
    for (const other of ["dashboard", "repairs"]) {
      document.getElementById(`page-${other}`)?.classList.toggle("hidden", other !== tab);
      document.getElementById(`tab-${other}`)?.classList.toggle("active", other === tab);
    }
  });
}

const label = document.getElementById("api-base");
if (label) label.textContent = baseUrl;
