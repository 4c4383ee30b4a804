import { mainFor } from "./render.js";

mainFor("exp-moment-monitor");
