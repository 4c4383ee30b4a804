import { mainFor } from "./render.js";

mainFor("convergence-order");
