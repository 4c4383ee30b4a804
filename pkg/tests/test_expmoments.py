import math
import warnings

import numpy as np
import pytest

from homobol import accel
from homobol.bounds import ProblemData, ScanCapExceededError, find_k_b, \
    sharpened_coercive_constant
from homobol.expmoments import (
    ExpMomentPlan,
    generation_rate,
    moment_convolution_S,
    monitor_exponential,
    partial_sum_E,
    partial_sum_I,
    propagation_rate,
    select_k0_generation,
    select_k0_propagation,
)
from homobol.grid import (VelocityGrid, bimaxwellian, exponential_moment,
                          maxwellian, moment, power_tail)
from homobol.kernels import AngularKernel, PotentialKernel

accel.set_threads(2)
warnings.filterwarnings("ignore", message="boundary tail")

GRID = VelocityGrid(16, 4.2)
F = maxwellian(GRID, 1.0, (0, 0, 0), 0.45)
B_ISO = AngularKernel.isotropic(1.0 / (4 * math.pi))


def iso_mu(r):
    return 2.0 / (r + 1.0)


def cold_heavy_data(gamma=2.0, s=1.0, kc=2.0, m0=10.0):
    """The tail-rate scans only fit under the k0 cap for heavy, cold data:
    mass ~ energy makes c_lb large (gamma = 2 removes the R factor entirely)
    and the isotropic closed form mu_r = 2/(r+1) is the fastest decay
    available (bounded kernels cannot beat O(1/r)).  Synthetic moments model
    a cold pair at speed ~1."""
    m1 = m0 * 2.06

    def measured(k):
        return m0 * 2.06**k  # <v>^2 ~ 2.06 concentrated shell

    return ProblemData(m0=m0, m1=m1, gamma=gamma, c_phi=1.0, C_phi=1.0,
                       b_l1=1.0, mu=iso_mu, s=s, kc=kc, beta_lb=20.0,
                       B_beta=m0 * 1.2**11, c_energy=m0, C_energy=m0 * 1.06,
                       moment=measured)


# ---------------------------------------------------------------------------
# partial sums and the convolution
# ---------------------------------------------------------------------------


def test_partial_sum_base_cases():
    assert partial_sum_E(F, 1.0, 0.3, 0) == pytest.approx(F.mass(), rel=1e-14)
    assert partial_sum_E(F, 1.0, 0.0, 25) == pytest.approx(F.mass(), rel=1e-14)
    assert partial_sum_I(F, 1.0, 0.0, 7, 1.0) == pytest.approx(
        moment(F, 0.5), rel=1e-14)


def test_partial_sum_converges_to_exponential_moment():
    s, z = 1.0, 0.2
    target = exponential_moment(F, s, z)
    prev = -1.0
    for n in (2, 5, 10, 20, 35):
        val = partial_sum_E(F, s, z, n)
        assert val >= prev - 1e-15
        assert val <= target * (1 + 1e-12)
        prev = val
    assert prev == pytest.approx(target, rel=1e-8)


def test_moment_convolution_hand_expansion():
    # k = 1: only j = 1 survives (the j = 2 binomial vanishes)
    s, gamma = 1.0, 1.0
    expected = F.mass() * moment(F, 1.0 + 0.5, s)
    assert moment_convolution_S(F, s, 1, gamma) == pytest.approx(expected, rel=1e-14)


def test_moment_convolution_zero_distribution():
    zero = F.copy(values=np.zeros_like(F.values))
    assert moment_convolution_S(zero, 1.0, 3, 1.0) == 0.0


def test_discrete_convolution_inequality():
    # sum_{k=ktilde}^n z^k/k! S_sk <= E^n I^n on assorted states and rates
    gamma = 1.0
    states = [F, bimaxwellian(GRID, [(0.5, (0.6, 0, 0), 0.4),
                                     (0.5, (-0.6, 0, 0), 0.4)]),
              power_tail(GRID, p=5.4)]
    for f in states:
        for z in (0.05, 0.2):
            for n in (6, 12, 20):
                lhs = 0.0
                for k in range(1, n + 1):
                    lhs += z**k / math.factorial(k) * moment_convolution_S(
                        f, 1.0, k, gamma)
                rhs = (partial_sum_E(f, 1.0, z, n)
                       * partial_sum_I(f, 1.0, z, n, gamma))
                assert lhs <= rhs * (1 + 1e-12)


def test_index_shift_lower_bound_chain():
    # I^n >= (E^n - m0)/z requires s <= gamma/2 (m_{s(k+1)} <= m_{sk+gamma/2})
    gamma = 2.0
    for z in (0.05, 0.15):
        for n in (5, 15):
            lhs = partial_sum_I(F, 1.0, z, n, gamma)
            rhs = (partial_sum_E(F, 1.0, z, n) - F.mass()) / z
            assert lhs >= rhs * (1 - 1e-12)


# ---------------------------------------------------------------------------
# k0 selection
# ---------------------------------------------------------------------------


def test_k0_monotone_in_MP():
    data = cold_heavy_data()
    k0_small = select_k0_propagation(data, M_P=10.5)
    k0_large = select_k0_propagation(data, M_P=20.0)
    assert k0_large >= k0_small


def test_k0_closed_form_cross_check():
    # isotropic mu_r = 2/(r+1): the threshold inverts in closed form,
    # k0 = max(ceil(2/thr - 1), floor(k_mx) + 1)
    data = cold_heavy_data()
    M_P = 10.5
    script_A = sharpened_coercive_constant(data)
    thr = script_A / (2.0 ** (1.5 * data.gamma) * data.C_phi
                      * (M_P + (math.e - 1) * data.m0))
    k0 = select_k0_propagation(data, M_P)
    algebraic = 2.0 / thr - 1.0
    kmx = max(find_k_b(data, coercive=script_A), data.kc)
    assert k0 == max(math.ceil(algebraic), math.floor(kmx) + 1)
    # L^inf order-of-magnitude check: k0 = O(1/thr) with q = 1
    assert 0.25 / thr <= k0 <= 4.0 / thr


def test_k0_cap_exceeded_for_light_data():
    # unit-mass data leave script-A tiny; 1/r contractive decay then pushes
    # k0 far past the cap
    data = ProblemData.from_distribution(F, PotentialKernel(1.0), B_ISO)
    with pytest.raises(ScanCapExceededError):
        select_k0_propagation(data, M_P=1.4)


def test_k0_generation_selection():
    data = cold_heavy_data(kc=2.0)
    k0 = select_k0_generation(data, M_G=11.0)
    assert 2 < k0 <= 400
    with pytest.raises(ValueError):
        select_k0_generation(data, M_G=data.m0)


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------


def test_propagation_rate_structure():
    data = cold_heavy_data()
    z0 = 0.05
    plan = propagation_rate(data, M_P=10.5, z0=z0)
    assert plan.mode == "propagation"
    assert 0 < plan.z <= 0.99 * min(z0, 1.0)
    assert plan.log_R_delta < 0.0
    assert plan.rate_at(0.0) == plan.z  # constant schedule
    # the certified rate sits far below double precision at these orders
    assert plan.audit["log_z1"] < math.log(1e-300)
    assert plan.audit["z_clamped"]


def test_propagation_rate_audit_recomputation():
    data = cold_heavy_data()
    plan = propagation_rate(data, M_P=10.5, z0=0.05)
    a = plan.audit
    log_z1 = (math.log(2.0) + (2.0 / data.gamma)
              * (math.log(plan.script_A) + math.log(plan.M - data.m0)
                 + plan.log_R_delta - plan.log_kappa))
    assert log_z1 == pytest.approx(a["log_z1"], rel=1e-12)
    # R factor from its own pieces
    assert plan.log_R_delta == pytest.approx(
        a["R_exponent"] * math.log(a["delta_sk0_gamma2"]), rel=1e-12)
    # kappa from its pieces
    assert plan.log_kappa == pytest.approx(
        float(np.logaddexp(a["log_prefactor"] + a["log_C_P"],
                           math.log(plan.script_A))), rel=1e-12)


def test_propagation_rate_errors():
    data = cold_heavy_data()
    with pytest.raises(ValueError):
        propagation_rate(data, M_P=5.0, z0=0.1)
    with pytest.raises(ValueError):
        propagation_rate(data, M_P=10.5, z0=0.0)


def test_generation_rate_structure():
    data = cold_heavy_data(gamma=2.0, s=1.0, kc=2.0)
    plan = generation_rate(data, M_G=11.0, k_in=1.2)
    assert plan.mode == "generation"
    assert 0 < plan.z <= 0.99 * 0.5 * plan.script_A
    assert plan.rate_at(0.0) == 0.0
    assert plan.rate_at(0.5) == pytest.approx(0.5 * plan.z)
    assert plan.rate_at(3.0) == pytest.approx(plan.z)


def test_generation_rate_audit_recomputation():
    data = cold_heavy_data(gamma=2.0, s=1.0, kc=2.0)
    plan = generation_rate(data, M_G=11.0, k_in=1.2)
    a = plan.audit
    log_z2 = (math.log(plan.script_A) + plan.log_R_delta
              + math.log(plan.M - data.m0) - 0.5 * plan.script_A
              - math.log(4.0) - plan.log_kappa
              - math.log(plan.script_A + 1.0)
              - float(np.logaddexp(0.0, plan.log_R_delta + a["log_CG_max"])))
    assert log_z2 == pytest.approx(a["log_z2"], rel=1e-12)


def test_generation_rate_errors():
    data = cold_heavy_data(gamma=1.0, s=1.0)  # s > gamma/2
    with pytest.raises(ValueError):
        generation_rate(data, M_G=11.0)
    data2 = cold_heavy_data(gamma=2.0, s=1.0)
    with pytest.raises(ValueError):
        generation_rate(data2, M_G=0.5 * data2.m0)


def test_rate_monotone_in_coercivity():
    # raising the energy floor c raises c_lb hence script-A; in this small
    # coercivity regime the certified rate (in log form) never decreases
    base = cold_heavy_data()
    bumped = cold_heavy_data()
    bumped.c_energy = base.c_energy * 1.02
    assert sharpened_coercive_constant(bumped) > sharpened_coercive_constant(base)
    p_base = propagation_rate(base, 10.5, z0=1e9)
    p_bump = propagation_rate(bumped, 10.5, z0=1e9)
    assert p_bump.audit["log_z1"] >= p_base.audit["log_z1"]


# ---------------------------------------------------------------------------
# monitor
# ---------------------------------------------------------------------------


def test_monitor_propagation_never_raises():
    plan = ExpMomentPlan(mode="propagation", s=1.0, z=0.1, z0=0.2, M=1.5,
                         k0=7, log_kappa=0.0, log_R_delta=-1.0, script_A=0.01)
    res = monitor_exponential([0.0, 1.0], [1.5, 99.0], plan, m0=1.0)
    assert res[0]["ok"] and not res[1]["ok"]


def test_monitor_generation_uses_running_sup():
    plan = ExpMomentPlan(mode="generation", s=0.5, z=0.01, z0=0.0, M=4.0,
                         k0=9, log_kappa=0.0, log_R_delta=-1.0, script_A=0.02)
    res = monitor_exponential([0.0, 0.5], [1.0, 4.1], plan, m0=1.0,
                              m_kin_values=[4.0, 4.2])
    assert res[0]["ok"] and res[1]["ok"]
    with pytest.raises(ValueError):
        monitor_exponential([0.0], [1.0], plan, m0=1.0)
