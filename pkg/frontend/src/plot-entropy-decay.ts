import { mainFor } from "./render.js";

mainFor("entropy-decay");
