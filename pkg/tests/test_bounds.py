import math
import warnings

import numpy as np
import pytest

from homobol import accel
from homobol.bounds import (
    DegenerateCoercivityError,
    EtaTooLargeError,
    ProblemData,
    bound_row,
    bound_table,
    bracket,
    c_gamma,
    coercive_constant,
    conv_lower_margin,
    data_lower_bound,
    equilibrium_moment,
    find_k_b,
    generation_bound,
    holder_gap,
    k_gamma_threshold,
    lower_bound_constant,
    maxwell_moment_bound,
    moment_bound_operator,
    odi_supersolution,
    omega_membership,
    omega_threshold,
    one_sided_bracket,
    propagation_bound,
    sharpened_coercive_constant,
    sub_tangent_probe,
)
from homobol.grid import VelocityGrid, bimaxwellian, maxwellian, moment
from homobol.kernels import AngularKernel, PotentialKernel, SphereQuadrature
from homobol.rng import SplitMix64

accel.set_threads(2)
warnings.filterwarnings("ignore", message="boundary tail")

B_ISO = AngularKernel.isotropic(1.0 / (4 * math.pi))
HS = PotentialKernel(1.0)


def iso_mu(r):
    return 2.0 / (r + 1.0)


def unit_data(gamma=1.0, s=1.0, kc=2.0, m0=1.0, m1=4.0):
    return ProblemData(m0=m0, m1=m1, gamma=gamma, c_phi=1.0, C_phi=1.0,
                       b_l1=1.0, mu=iso_mu, s=s, kc=kc, beta_lb=1.0,
                       B_beta=10.0, c_energy=1.0, C_energy=3.0)


# ---------------------------------------------------------------------------
# lower bound constant
# ---------------------------------------------------------------------------


def test_lower_bound_gamma_zero_trivial():
    lb = lower_bound_constant(0.7, 2.0, 5.0, 1.0, 0.0)
    assert lb.c_lb == 0.7


def test_lower_bound_unit_case_arithmetic_oracle():
    # c = C = B = 1, beta = 2, gamma = 1: direct re-evaluation of the chain
    lb = lower_bound_constant(1.0, 1.0, 1.0, 2.0, 1.0)
    r_star = 4.0
    br = math.sqrt(1 + 16.0)
    R = 2.0 * math.sqrt(2.0 * br**4)
    c_lb = 1.0 / (4.0 * R * br)
    assert lb.r_star == pytest.approx(r_star, rel=1e-14)
    assert lb.R == pytest.approx(R, rel=1e-14)
    assert lb.c_lb == pytest.approx(c_lb, rel=1e-14)
    # at gamma = 1 the proof form R^-(2-gamma) equals the displayed
    # R^(-1/(2-gamma)); away from gamma = 1 they split
    assert lb.c_lb_displayed == pytest.approx(lb.c_lb, rel=1e-14)
    lb2 = lower_bound_constant(1.0, 1.0, 1.0, 2.0, 0.5)
    assert abs(lb2.c_lb_displayed - lb2.c_lb) > 0.1 * lb2.c_lb


def test_lower_bound_on_grid_inequality_maxwellian():
    grid = VelocityGrid(24, 6.0)
    f = maxwellian(grid, 1.0, (0, 0, 0), 1.0)
    c = min(f.mass(), f.energy())
    C = max(f.mass(), f.energy())
    B_beta = moment(f, 1.5) * 2.0**1.5
    lb = lower_bound_constant(c, C, B_beta, 1.0, 1.0)
    assert conv_lower_margin(f, 1.0, lb.c_lb) >= 1.0


def test_lower_bound_invalid_inputs():
    with pytest.raises(ValueError):
        lower_bound_constant(2.0, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        lower_bound_constant(1.0, 1.0, -1.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# coercive constant
# ---------------------------------------------------------------------------


def test_coercive_closed_form():
    # isotropic b, ||b||_1 = 1, kc = 2, s = 1, gamma = 1, c_phi = 1, m0 = 1:
    # A = 2^(-1/2) (1 - mu_2) with mu_2 = 2/3
    data = unit_data()
    assert coercive_constant(data) == pytest.approx(
        2.0**-0.5 * (1.0 - 2.0 / 3.0), rel=1e-14)


def test_coercive_scales_linearly_in_m0():
    a1 = coercive_constant(unit_data(m0=1.0))
    a2 = coercive_constant(unit_data(m0=2.0, m1=8.0))
    assert a2 == pytest.approx(2.0 * a1, rel=1e-14)


def test_coercive_degenerate_guard():
    data = unit_data()
    data.mu = lambda r: 1.0 - 1e-16  # mu at kc touches ||b||_1
    with pytest.raises(DegenerateCoercivityError):
        coercive_constant(data)


def test_sharpened_coercive_positive():
    data = unit_data()
    assert 0 < sharpened_coercive_constant(data) < coercive_constant(data)


# ---------------------------------------------------------------------------
# per-order table
# ---------------------------------------------------------------------------


def test_k_gamma_values():
    assert k_gamma_threshold(1.0, 1.0) == pytest.approx(2.5, rel=1e-14)
    assert k_gamma_threshold(2.0, 1.0) == math.inf
    # s rescales the threshold
    assert k_gamma_threshold(1.0, 0.5) == pytest.approx(5.0, rel=1e-14)


def test_c_gamma_value():
    assert c_gamma(2.0, 1.0) == pytest.approx(0.5, rel=1e-15)


def test_delta_below_one_beyond_kmax_and_decreasing():
    data = unit_data()
    report = bound_table(data, [2.0, 3.0, 4.0, 6.0, 8.0])
    kmx = report.k_max
    deltas = [(k, row.delta) for k, row in report.rows.items()]
    for k, d in deltas:
        if k >= kmx:
            assert 0.0 < d < 1.0
    beyond = [d for k, d in deltas if k >= max(report.k_b, 2)]
    assert all(b < a for a, b in zip(beyond[:-1], beyond[1:]))


def test_equilibrium_root_consistency_bisection():
    data = unit_data()
    for k in (2.0, 3.0, 5.0):
        L, row = moment_bound_operator(data, k)
        E = row.E
        assert abs(L(E)) <= 1e-10 * row.B
        # independent bisection root
        lo, hi = 0.0, 10.0 * E
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if L(mid) > 0:
                lo = mid
            else:
                hi = mid
        assert 0.5 * (lo + hi) == pytest.approx(E, rel=1e-10)
        # strictly decreasing
        ys = np.linspace(0.1 * E, 3 * E, 50)
        vals = L(ys)
        assert np.all(np.diff(vals) < 0)


def test_equilibrium_limit_sk_to_one():
    # with the ratio 2B/A held fixed, E = m1^(c/(1+c)) X^(1/(1+c)) -> m1
    m1 = 4.0
    X = 7.3
    for dk in (1e-2, 1e-4, 1e-6):
        c = c_gamma(1.0 + dk, 1.0)
        E = m1 ** (c / (1 + c)) * X ** (1 / (1 + c))
        assert E == pytest.approx(m1, rel=20 * dk)


def test_bound_table_rejects_maxwell():
    data = unit_data(gamma=0.0, kc=2.0)
    with pytest.raises(ValueError):
        bound_table(data, [2.0])


def test_find_k_b_small_for_unit_data():
    data = unit_data()
    kb = find_k_b(data)
    assert 2 <= kb <= 5


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------


def test_propagation_bound_branches():
    data = unit_data()
    E = equilibrium_moment(data, 3.0)
    assert propagation_bound(data, 3.0, 0.5 * E) == pytest.approx(E)
    assert propagation_bound(data, 3.0, E) == pytest.approx(E)
    assert propagation_bound(data, 3.0, 2 * E) == pytest.approx(2 * E)


def test_generation_bound_limits():
    data = unit_data()
    E = equilibrium_moment(data, 3.0)
    ts = np.array([0.1, 0.5, 1.0, 5.0, 50.0, 5e4])
    vals = np.array([generation_bound(data, 3.0, t) for t in ts])
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] == pytest.approx(E, rel=1e-3)
    assert generation_bound(data, 3.0, 1e-9) > 1e6
    with pytest.raises(ValueError):
        generation_bound(data, 3.0, 0.0)


def test_odi_supersolution_unit_case_and_limit():
    assert odi_supersolution(1.0, 1.0, 1.0, 1.0) == pytest.approx(2.0, rel=1e-14)
    assert odi_supersolution(1.0, 1.0, 1.0, 1e9) == pytest.approx(1.0, rel=1e-8)


def test_odi_supersolution_dominates_integrated_flow():
    # stiff-integrator oracle on a few seeded triples from the regime where
    # the anchored solution extends to (0, inf)
    from scipy.integrate import solve_ivp

    rng = SplitMix64(2024)
    for _ in range(5):
        A = math.exp(rng.uniform(math.log(0.02), math.log(1.0)))
        B = math.exp(rng.uniform(math.log(0.02), math.log(5.0)))
        c = rng.uniform(0.2, 0.6)
        assert odi_supersolution(A, B, c, 0.01) >= 1e3  # barrier covers y0
        ts = np.geomspace(0.01, 10.0, 60)
        sol = solve_ivp(lambda t, y: B - A * np.abs(y) ** (1 + c), (0.01, 10.0),
                        [1e3], t_eval=ts, method="Radau", rtol=1e-10,
                        atol=1e-12)
        ybar = odi_supersolution(A, B, c, ts)
        assert np.all(sol.y[0] <= ybar * (1 + 1e-9))


def test_maxwell_moment_bound():
    data = unit_data(gamma=0.0)
    E_plus = maxwell_moment_bound(data, 2.0, 5.0, 0.0)
    E_inf = maxwell_moment_bound(data, 2.0, 5.0, 1e9)
    assert E_plus == pytest.approx(E_inf + 5.0, rel=1e-12)
    ts = np.linspace(0, 10, 11)
    vals = maxwell_moment_bound(data, 2.0, 5.0, ts)
    assert np.all(np.diff(vals) < 0)
    with pytest.raises(ValueError):
        maxwell_moment_bound(unit_data(gamma=1.0), 2.0, 5.0, 1.0)


# ---------------------------------------------------------------------------
# invariant set and probes
# ---------------------------------------------------------------------------


def small_scene(n=10, L=4.0):
    grid = VelocityGrid(n, L)
    f = bimaxwellian(grid, [(0.5, (0.55, 0, 0), 0.45), (0.5, (-0.55, 0, 0), 0.45)])
    data = ProblemData.from_distribution(f, HS, B_ISO)
    return grid, f, data


def test_omega_threshold_exceeds_equilibrium():
    data = unit_data()
    h, K = omega_threshold(data)
    assert h > equilibrium_moment(data, 1.0 + data.gamma)
    assert K > h


def test_omega_membership():
    grid, f, data = small_scene()
    h, K = omega_threshold(data)
    assert omega_membership(f, data, K, tol=1e-6)
    assert not omega_membership(f, data, moment(f, 1.0 + data.gamma) * 0.5)


def test_sub_tangent_probe_trivial_cases():
    grid, f, data = small_scene()
    sq = SphereQuadrature(3, 6)
    w, diag = sub_tangent_probe(f, 0.0, 0.0, HS, B_ISO, sq, data)
    assert np.allclose(w.values, f.values)
    assert diag["in_omega"]
    # R = 0 cuts everything off: w = f for any admissible eta
    w, diag = sub_tangent_probe(f, 0.0, 0.5 * diag["eta_max"], HS, B_ISO, sq, data)
    assert np.allclose(w.values, f.values)


def test_sub_tangent_probe_full():
    grid, f, data = small_scene()
    sq = SphereQuadrature(3, 6)
    R = 0.9 * grid.L
    C_m0 = 2.0**0.5 * data.C_phi * data.m0
    eta = 0.9 / (data.b_l1 * C_m0 * (1.0 + R))
    # conservation defects of the raw collision field are the O(h^2)
    # quadrature defect at this resolution (~9% energy at n = 10)
    w, diag = sub_tangent_probe(f, R, eta, HS, B_ISO, sq, data, cons_tol=0.12)
    assert diag["neg_margin"] >= -1e-12
    assert diag["mass_defect"] <= 0.05
    assert diag["in_omega"]
    with pytest.raises(EtaTooLargeError):
        sub_tangent_probe(f, R, 2.0 * diag["eta_max"], HS, B_ISO, sq, data)


def test_holder_gap_zero_and_random_pairs():
    grid, f, data = small_scene()
    sq = SphereQuadrature(3, 6)
    K = moment(f, 1.0 + HS.gamma) * 1.5
    lhs, rhs = holder_gap(f, f, HS, B_ISO, sq, K)
    assert lhs == 0.0 and rhs == 0.0
    rng = SplitMix64(5)
    for _ in range(4):
        g = bimaxwellian(grid, [(0.5, (rng.uniform(-0.5, 0.5), 0, 0),
                                 rng.uniform(0.35, 0.55)),
                                (0.5, (rng.uniform(-0.5, 0.5), 0, 0),
                                 rng.uniform(0.35, 0.55))])
        K = max(moment(f, 2.0), moment(g, 2.0)) * 1.1
        lhs, rhs = holder_gap(f, g, HS, B_ISO, sq, K)
        assert lhs <= rhs


def test_holder_gap_perturbation_scaling():
    grid, f, data = small_scene()
    sq = SphereQuadrature(3, 6)
    g = f.copy(values=f.values * (1 + 1e-3))
    K = moment(g, 2.0) * 1.1
    lhs, rhs = holder_gap(f, g, HS, B_ISO, sq, K)
    # lhs = O(1e-3), rhs = O(sqrt(1e-3)): wide slack
    assert lhs <= 0.2 * rhs


def test_one_sided_bracket():
    grid, f, data = small_scene()
    sq = SphereQuadrature(3, 6)
    brk, bound = one_sided_bracket(f, f, HS, B_ISO, sq)
    assert brk == 0.0
    rng = SplitMix64(9)
    for _ in range(4):
        g = bimaxwellian(grid, [(0.6, (rng.uniform(-0.5, 0.5), 0, 0),
                                 rng.uniform(0.35, 0.55)),
                                (0.4, (0, rng.uniform(-0.4, 0.4), 0),
                                 rng.uniform(0.35, 0.55))])
        brk, bound = one_sided_bracket(f, g, HS, B_ISO, sq)
        assert brk <= bound
        brk2, _ = one_sided_bracket(g, f, HS, B_ISO, sq)
        assert brk2 == pytest.approx(brk, rel=1e-10, abs=1e-12)


def test_problem_data_validation():
    with pytest.raises(ValueError):
        unit_data(m0=-1.0)
    with pytest.raises(ValueError):
        ProblemData(m0=1.0, m1=0.5, gamma=1.0, c_phi=1, C_phi=1, b_l1=1,
                    mu=iso_mu)
    with pytest.raises(ValueError):
        unit_data(kc=1.0)
    with pytest.raises(ValueError):
        unit_data(s=0.5, kc=1.5)  # s*kc <= 1
