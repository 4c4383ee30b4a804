"""Command-line front end.

Subcommands:
  run       integrate a scenario, write CSV records + JSON sidecar
  bounds    emit the BoundsReport JSON for a scenario's data
  verify    run the randomized property suite (seeded, splitmix64 streams)
  converge  grid/sphere refinement study with observed orders

Exit codes: 0 success, 1 fatal (blow-up and similar), 2 usage/config errors,
3 completed run with bound violations.  Flags: --config PATH, --out DIR,
--seed N, --threads N, --quiet; HOMOBOL_THREADS is the --threads fallback.
"""

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import accel, config as cfgmod
from . import bounds as boundsmod
from . import expmoments as expmod
from . import grid as gridmod
from . import solver as solvermod
from .collision import (DirectEvaluator, collide_bobylev,
                        collide_carleman_gain, collide_direct, weak_form)
from .grid import Distribution, maxwellian
from .kernels import PotentialKernel, SphereQuadrature, angular_l1_norm, \
    contractive_factor
from .rng import stream


def _hash_obj(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if x == math.inf:
        return "inf"
    raise TypeError(f"not serializable: {type(x)}")


def _build_scene(cfg):
    pot, b = cfgmod.build_kernel(cfg)
    grid = cfgmod.build_grid(cfg)
    f0 = cfgmod.build_initial(cfg, grid)
    squad = cfgmod.build_quadrature(cfg)
    return pot, b, grid, f0, squad


def _build_evaluator(cfg, grid, pot, b, squad):
    kind = cfg.get("evaluator", "direct")
    if kind == "direct":
        ev = DirectEvaluator(grid, pot, b, squad,
                             screen_tol=cfg.get("screen_tol", 1e-9),
                             quadratic=True)
        return ev, ev.b_l1_quad
    if kind == "bobylev":
        pad = cfg.get("pad_factor", 2)

        def ev(f):
            return collide_bobylev(f, f, pot, b, squad=squad, pad_factor=pad)

        return ev, angular_l1_norm(b)
    raise cfgmod.ConfigError(f"unknown evaluator {kind!r}")


def _monitor_spec(cfg, f0, pot, b):
    mon = cfg.get("monitors", {})
    spec = solvermod.MonitorSpec()
    spec.moments = tuple(float(k) for k in mon.get("moments", [2, 3]))
    spec.lp = cfgmod.monitor_pairs(mon.get("lp", [[1, 2], ["inf", 0]]))
    spec.exp = cfgmod.monitor_pairs(mon.get("exp", []))
    spec.bounds_mode = mon.get("bounds", "none")
    data = None
    if spec.bounds_mode != "none" or mon.get("exp_plan"):
        data = cfgmod.build_problem_data(cfg, f0, pot, b)
        spec.bounds_data = data
    plan_cfg = mon.get("exp_plan")
    if plan_cfg:
        if plan_cfg["mode"] == "propagation":
            m_p = gridmod.exponential_moment(f0, data.s, plan_cfg["z0"])
            spec.exp_plan = expmod.propagation_rate(data, m_p, plan_cfg["z0"])
        else:
            k_in = plan_cfg.get("k_in", 1.2)
            m_g = gridmod.moment(f0, k_in, 1.0)
            spec.exp_plan = expmod.generation_rate(data, m_g, k_in=k_in)
            spec.k_in = k_in
    return spec, data


def cmd_run(args, cfg):
    pot, b, grid, f0, squad = _build_scene(cfg)
    ev, b_l1 = _build_evaluator(cfg, grid, pot, b, squad)
    spec, data = _monitor_spec(cfg, f0, pot, b)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "records.csv")
    side_path = os.path.join(args.out, "run.json")
    sidecar = {
        "config": cfg,
        "meta": {"grid_hash": _hash_obj({"n": grid.n, "L": grid.L}),
                 "kernel_hash": _hash_obj(cfg["kernel"]),
                 "backend": accel.backend_name()},
    }
    if data is not None and pot.gamma > 0:
        ks = sorted(set(k for k in spec.moments if data.s * k > 1))
        report = boundsmod.bound_table(data, ks)
        sidecar["bounds_report"] = report.as_dict()
    if spec.exp_plan is not None:
        sidecar["exp_moments"] = spec.exp_plan.as_dict()
    try:
        result = solvermod.run(
            f0, ev, t_end=cfg["t_end"], dt=cfg.get("dt"), pot=pot, b_l1=b_l1,
            projection=cfg.get("projection", True),
            clipping=cfg.get("clipping", False),
            integrator=cfg.get("integrator", "rk4"),
            record_every=cfg.get("record_every", 1), spec=spec)
    except solvermod.BlowUpError as err:
        solvermod.write_csv(err.records, csv_path)
        sidecar["status"] = "blowup"
        sidecar["error"] = str(err)
        with open(side_path, "w") as fh:
            json.dump(sidecar, fh, indent=1, default=_json_default)
        print(f"blow-up: {err}; partial records flushed to {csv_path}",
              file=sys.stderr)
        return 1
    solvermod.write_csv(result.records, csv_path)
    sidecar["status"] = result.status
    sidecar["meta"].update(result.meta)
    sidecar["violations"] = result.violations
    with open(side_path, "w") as fh:
        json.dump(sidecar, fh, indent=1, default=_json_default)
    if not args.quiet:
        print(f"wrote {len(result.records)} records to {csv_path}")
    if result.violations:
        print(f"{result.violations} bound-check violations", file=sys.stderr)
        return 3
    return 0


def cmd_bounds(args, cfg):
    pot, b, grid, f0, squad = _build_scene(cfg)
    data = cfgmod.build_problem_data(cfg, f0, pot, b)
    out = {"schema": cfgmod.SCHEMA_VERSION, "config": cfg}
    ks = cfg.get("bounds_data", {}).get("k_list", [2.0, 3.0])
    if pot.gamma > 0:
        report = boundsmod.bound_table(data, [float(k) for k in ks])
        out["bounds_report"] = report.as_dict()
    else:
        out["maxwell"] = {
            f"{k:g}": {"E": boundsmod.maxwell_moment_bound(data, k, 0.0, 1e18),
                       "bound_t0_unit_m0k": boundsmod.maxwell_moment_bound(
                           data, k, 1.0, 0.0)}
            for k in ks}
    plan_cfg = cfg.get("monitors", {}).get("exp_plan")
    if plan_cfg:
        _, data2 = _monitor_spec(cfg, f0, pot, b)
        spec, _ = _monitor_spec(cfg, f0, pot, b)
        if spec.exp_plan is not None:
            out["exp_moments"] = spec.exp_plan.as_dict()
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "bounds.json")
    with open(path, "w") as fh:
        json.dump(out, fh, indent=1, sort_keys=True, default=_json_default)
    if not args.quiet:
        print(f"wrote {path}")
    return 0


def _random_distribution(grid, rng, symmetric=False):
    """Positive random mixture of displaced Maxwellians sized to the box
    (zero-momentum symmetrized on request)."""
    u_max = grid.L / 6.0
    t_lo, t_hi = 0.5 * (grid.L / 5.5) ** 2, (grid.L / 5.5) ** 2
    vals = np.zeros((grid.n,) * 3)
    for _ in range(3):
        u = [rng.uniform(-u_max, u_max) for _ in range(3)]
        T = rng.uniform(t_lo, t_hi)
        rho = rng.uniform(0.2, 1.0)
        vals += maxwellian(grid, rho, u, T).values
    if symmetric:
        vals = 0.5 * (vals + vals[::-1, ::-1, ::-1])
    return Distribution(grid, vals, tag="random-mixture")


def cmd_verify(args, cfg):
    from .collision import energy_identity, post_collision, xi_factor

    pot, b, grid_big, f0, squad = _build_scene(cfg)
    grid = gridmod.VelocityGrid(min(grid_big.n, 12), grid_big.L)
    small_sq = SphereQuadrature(3, 6)
    checks = {}
    coarse = grid.n < 14

    rng = stream(args.seed, "geometry")
    npr = np.random.default_rng(rng.integer())
    v = npr.normal(size=(20000, 3))
    w = npr.normal(size=(20000, 3))
    sg = npr.normal(size=(20000, 3))
    sg /= np.linalg.norm(sg, axis=1, keepdims=True)
    lhs, rhs = energy_identity(v, w, sg, r=2.0)
    xi = xi_factor(v, w)
    checks["energy_identity"] = bool(np.max(np.abs(lhs - rhs) / np.abs(lhs)) < 1e-11)
    checks["xi_in_unit_interval"] = bool(xi.min() >= 0 and xi.max() <= 1 + 1e-14)
    vp, vps = post_collision(v, w, sg)
    checks["local_conservation"] = bool(
        np.allclose(vp + vps, v + w, atol=1e-12)
        and np.allclose((vp**2).sum(1) + (vps**2).sum(1),
                        (v**2).sum(1) + (w**2).sum(1), rtol=1e-12))

    rng = stream(args.seed, "invariants")
    ok = True
    for _ in range(5):
        f = _random_distribution(grid, rng)
        for phi in ("1", "vx", "vy", "vz", "v2"):
            val, scale = weak_form(f, f, phi, pot, b, small_sq, with_scale=True)
            ok = ok and abs(val) <= 1e-10 * scale
    checks["collision_invariants"] = bool(ok)

    rng = stream(args.seed, "hoelder")
    ok = True
    for _ in range(5):
        f = _random_distribution(grid, rng)
        g = _random_distribution(grid, rng)
        K = max(gridmod.moment(f, 1 + pot.gamma), gridmod.moment(g, 1 + pot.gamma)) * 1.05
        lhs, rhs = boundsmod.holder_gap(f, g, pot, b, small_sq, K)
        ok = ok and lhs <= rhs
        brk, bound = boundsmod.one_sided_bracket(f, g, pot, b, small_sq)
        ok = ok and brk <= bound
    checks["holder_and_one_sided"] = bool(ok)

    rng = stream(args.seed, "convolution")
    ok = True
    f = _random_distribution(grid, rng)
    for n in (5, 10):
        lhs = sum((0.1**k / math.factorial(k))
                  * expmod.moment_convolution_S(f, 1.0, k, pot.gamma)
                  for k in range(1, n + 1))
        rhs = (expmod.partial_sum_E(f, 1.0, 0.1, n)
               * expmod.partial_sum_I(f, 1.0, 0.1, n, pot.gamma))
        ok = ok and lhs <= rhs * (1 + 1e-12)
    checks["discrete_convolution"] = bool(ok)

    rng = stream(args.seed, "odi")
    from scipy.integrate import solve_ivp
    ok = True
    for _ in range(10):
        A = math.exp(rng.uniform(math.log(0.02), math.log(1.0)))
        B = math.exp(rng.uniform(math.log(0.02), math.log(5.0)))
        c = rng.uniform(0.2, 0.6)
        ts = np.geomspace(0.01, 10.0, 40)
        sol = solve_ivp(lambda t, y: B - A * np.abs(y) ** (1 + c),
                        (0.01, 10.0), [1e3], t_eval=ts, method="Radau",
                        rtol=1e-9, atol=1e-11)
        ok = ok and bool(np.all(sol.y[0] <= boundsmod.odi_supersolution(A, B, c, ts)
                                * (1 + 1e-8)))
    checks["odi_dominance"] = bool(ok)

    rng = stream(args.seed, "clb")
    ok = True
    if pot.gamma > 0:
        for _ in range(5):
            f = _random_distribution(grid, rng, symmetric=True)
            c = min(f.mass(), f.energy())
            C = max(f.mass(), f.energy())
            B_beta = gridmod.moment(f, 1.5) * 2**1.5
            lb = boundsmod.lower_bound_constant(c, C, B_beta, 1.0, pot.gamma)
            ok = ok and boundsmod.conv_lower_margin(f, pot.gamma, lb.c_lb) >= 1.0
    checks["clb_on_grid"] = bool(ok)

    # evaluator agreement degrades to a warning on coarse grids
    f = _random_distribution(grid, stream(args.seed, "agree"))
    if pot.gamma == 0.0:
        qd = collide_direct(f, f, pot, b, small_sq)
        qb = collide_bobylev(f, f, pot, b, squad=small_sq)
        rel = float(np.linalg.norm(qb - qd) / np.linalg.norm(qd))
        key = "evaluator_agreement"
        if coarse and rel > 0.5:
            checks[key] = "warning: coarse grid, relative gap %.3f" % rel
        else:
            checks[key] = bool(rel <= 0.5)

    failed = [k for k, v in checks.items() if v is False]
    report = {"seed": args.seed, "grid_n": grid.n, "checks": checks,
              "failed": failed}
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "verify.json"), "w") as fh:
        json.dump(report, fh, indent=1, default=_json_default)
    if not args.quiet:
        for k, v in checks.items():
            print(f"{k}: {v}")
    return 0 if not failed else 3


def cmd_converge(args, cfg):
    pot, b, grid0, f0, squad = _build_scene(cfg)
    out = {}
    # equilibrium residual order in h
    norms = {}
    for n in (16, 24, 32):
        g = gridmod.VelocityGrid(n, grid0.L)
        M = maxwellian(g, 1.0, (0, 0, 0), cfg.get("converge_T", 0.5))
        sq = SphereQuadrature(4, 8)
        ev = DirectEvaluator(g, pot, b, sq, screen_tol=1e-10, quadratic=True)
        Q = ev(M)
        norms[n] = g.integrate(np.abs(Q))
    order = math.log(norms[16] / norms[32]) / math.log(2.0)
    out["equilibrium_residual"] = {"norms": norms, "order": order}
    if pot.gamma > 0:
        n = 16
        g = gridmod.VelocityGrid(n, grid0.L)
        f = cfgmod.build_initial(cfg, g)
        tr = PotentialKernel(pot.gamma, pot.c_phi, pot.C_phi,
                             form="truncated", eps=0.01 * g.h)
        gaps = {}
        car = collide_carleman_gain(f, f, tr, b, n_radial=32, n_angular=24,
                                    source_tol=1e-12)
        for nodes in ((4, 8), (6, 12), (8, 16)):
            sq = SphereQuadrature(*nodes)
            _, gain, _ = collide_direct(f, f, tr, b, sq, parts=True)
            gaps[len(sq)] = float(np.linalg.norm(car - gain)
                                  / np.linalg.norm(gain))
        out["carleman_gap_vs_sphere_nodes"] = gaps
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "converge.json"), "w") as fh:
        json.dump(out, fh, indent=1, default=_json_default)
    # flat study CSV for the plotting scripts: study,x,value
    with open(os.path.join(args.out, "converge.csv"), "w") as fh:
        fh.write("study,x,value\n")
        for n, v in out["equilibrium_residual"]["norms"].items():
            fh.write(f"equilibrium_residual,{n},{v:.17g}\n")
        for nodes, v in out.get("carleman_gap_vs_sphere_nodes", {}).items():
            fh.write(f"carleman_gap,{nodes},{v:.17g}\n")
    if not args.quiet:
        print(json.dumps(out, indent=1, default=_json_default))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="homobol",
        description="space-homogeneous Boltzmann solver with bound verification")
    parser.add_argument("command",
                        choices=["run", "bounds", "verify", "converge"])
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default="out")
    parser.add_argument("--seed", type=int,
                        default=int(os.environ.get("HOMOBOL_SEED", "20260809")))
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("HOMOBOL_THREADS", "0")) or None)
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    accel.set_threads(args.threads)
    try:
        cfg = cfgmod.load_config(args.config)
    except (OSError, json.JSONDecodeError, cfgmod.ConfigError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    handler = {"run": cmd_run, "bounds": cmd_bounds, "verify": cmd_verify,
               "converge": cmd_converge}[args.command]
    try:
        return handler(args, cfg)
    except cfgmod.ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
