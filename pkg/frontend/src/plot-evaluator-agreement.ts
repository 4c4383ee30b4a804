import { mainFor } from "./render.js";

mainFor("evaluator-agreement");
