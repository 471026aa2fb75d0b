import { Client } from "./api.js";
import { App } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "";
const root = document.getElementById("app");
if (root === null) throw new Error("missing #app container");
void new App(root, new Client(base)).start();
