"""JSON run configuration: versioned schema, object assembly.

Example (all collision/bound scenarios are driven from files like this):

{
  "schema": 1,
  "kernel": {"gamma": 1.0, "c_phi": 1.0, "C_phi": 1.0, "form": "power",
             "angular": {"type": "isotropic", "b0": 0.07957747154594767}},
  "grid": {"n": 24, "L": 4.25},
  "initial": {"type": "bimaxwellian",
              "components": [[0.5, [0.6, 0, 0], 0.35],
                             [0.5, [-0.6, 0, 0], 0.35]]},
  "dt": null, "t_end": 5.0, "integrator": "rk4",
  "projection": true, "clipping": false,
  "evaluator": "direct", "sigma_nodes": [4, 8], "screen_tol": 1e-8,
  "record_every": 1,
  "monitors": {"moments": [2, 3], "lp": [[1, 2], ["inf", 0]],
               "exp": [[1.0, 0.05]], "bounds": "propagation",
               "exp_plan": null},
  "bounds_data": {"s": 1.0, "kc": 2.0, "beta_lb": 1.0},
  "seed": 20260809
}
"""

import json
import math

from . import grid as gridmod
from .bounds import ProblemData
from .kernels import AngularKernel, PotentialKernel, SphereQuadrature

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def _num(x):
    if x in ("inf", "Infinity"):
        return math.inf
    return float(x)


def load_config(path):
    with open(path) as fh:
        cfg = json.load(fh)
    if cfg.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema {cfg.get('schema')!r}; "
                          f"expected {SCHEMA_VERSION}")
    return cfg


def build_kernel(cfg):
    ks = cfg["kernel"]
    pot = PotentialKernel(ks["gamma"], ks.get("c_phi", 1.0),
                          ks.get("C_phi", 1.0), ks.get("form", "power"),
                          ks.get("eps"))
    b = AngularKernel.from_config(ks["angular"])
    return pot, b


def build_grid(cfg):
    gs = cfg["grid"]
    L = gs.get("L")
    if L is None:
        # default truncation: 6 sqrt(T_max) of the initial datum
        ic = cfg["initial"]
        if ic["type"] == "maxwellian":
            tmax = ic["T"]
        elif ic["type"] == "bimaxwellian":
            tmax = max(comp[2] for comp in ic["components"])
        else:
            raise ConfigError("grid.L is required for this initial type")
        L = 6.0 * math.sqrt(tmax)
    return gridmod.VelocityGrid(gs["n"], L)


def build_initial(cfg, grid):
    ic = cfg["initial"]
    kind = ic["type"]
    if kind == "maxwellian":
        return gridmod.maxwellian(grid, ic.get("rho", 1.0),
                                  ic.get("u", (0, 0, 0)), ic.get("T", 1.0))
    if kind == "bimaxwellian":
        comps = [(c[0], c[1], c[2]) for c in ic["components"]]
        return gridmod.bimaxwellian(grid, comps)
    if kind == "maxwellian_poly":
        # Maxwellian times an even polynomial in |v|^2: coeffs [a0, a1, ...]
        base = gridmod.maxwellian(grid, ic.get("rho", 1.0),
                                  ic.get("u", (0, 0, 0)), ic.get("T", 1.0))
        poly = sum(a * grid.speed2**j for j, a in enumerate(ic["coeffs"]))
        vals = base.values * poly
        if vals.min() < 0:
            raise ConfigError("maxwellian_poly coefficients produce negatives")
        vals *= ic.get("rho", 1.0) / grid.integrate(vals)
        return gridmod.Distribution(grid, vals, tag="maxwellian-poly")
    if kind == "power_tail":
        return gridmod.power_tail(grid, p=ic.get("p", 5.4),
                                  scale=ic.get("scale", 1.0),
                                  rho=ic.get("rho", 1.0))
    raise ConfigError(f"unknown initial type {kind!r}")


def build_quadrature(cfg):
    nodes = cfg.get("sigma_nodes", [12, 24])
    return SphereQuadrature(int(nodes[0]), int(nodes[1]))


def build_problem_data(cfg, f0, pot, b):
    bd = cfg.get("bounds_data", {})
    return ProblemData.from_distribution(
        f0, pot, b, s=bd.get("s", 1.0), kc=bd.get("kc", 2.0),
        beta_lb=bd.get("beta_lb", 1.0), B_beta=bd.get("B_beta"))


def monitor_pairs(seq, numeric=_num):
    return tuple((numeric(a), numeric(bb)) for a, bb in seq)
