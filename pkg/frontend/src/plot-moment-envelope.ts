import { mainFor } from "./render.js";

mainFor("moment-envelope");
