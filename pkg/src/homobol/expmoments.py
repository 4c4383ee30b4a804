"""Exponential-moment machinery: partial sums, the discrete moment
convolution, selection of the moment cutoff k0, and the propagation /
generation tail rates.

The rate constructions mirror the moment machinery with the sharpened
coercive constant script-A = c_lb 2^(gamma/2) A; every intermediate factor
is returned in an audit dictionary so an independent script can recompute
the rate from the serialized report.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import grid as gridmod
from .bounds import (ScanCapExceededError, beta_sk, c_gamma, find_k_b,
                     k_gamma_threshold, sharpened_coercive_constant)

E_MINUS_ONE = math.e - 1.0


# ---------------------------------------------------------------------------
# partial sums and the discrete convolution
# ---------------------------------------------------------------------------


def partial_sum_E(f, s, z, n):
    """E^n_s(z) = sum_{k=0}^n m_sk z^k / k! (nondecreasing in n, below the
    full exponential moment)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    total = 0.0
    zk = 1.0
    for k in range(n + 1):
        if k > 0:
            zk *= z / k
        total += zk * gridmod.moment(f, k, s)
    return total


def partial_sum_I(f, s, z, n, gamma):
    """I^n_{s,gamma}(z) = sum_{k=0}^n m_{sk + gamma/2} z^k / k!."""
    if n < 0:
        raise ValueError("n must be >= 0")
    total = 0.0
    zk = 1.0
    for k in range(n + 1):
        if k > 0:
            zk *= z / k
        total += zk * gridmod.moment(f, k + 0.5 * gamma / s, s)
    return total


def moment_convolution_S(f, s, k, gamma):
    """S_sk[f] = sum_{j=1}^{floor(k+1)} C(k, j) m_{s(k-j)} m_{sj + gamma/2}
    (the j = k+1 term carries a vanishing binomial coefficient)."""
    if k < 1 or int(k) != k:
        raise ValueError("k must be a positive integer")
    k = int(k)
    total = 0.0
    for j in range(1, k + 2):
        cb = math.comb(k, j) if j <= k else 0
        if cb == 0:
            continue
        total += cb * gridmod.moment(f, k - j, s) * gridmod.moment(
            f, j + 0.5 * gamma / s, s)
    return total


# ---------------------------------------------------------------------------
# rate factors
# ---------------------------------------------------------------------------


Z_FLOOR = 1e-300  # rates below double precision are clamped; logs audited


def _rate_R(data, k0, script_A, kgam):
    """log R(delta_{s k0 + gamma/2}) < 0: delta = script-A / beta_{s k0 +
    gamma/2} raised to e_alpha(s k0) = 2(s k0 - 1)/gamma on the k0 >= k_gamma
    branch, else to ebar_theta(s k0) = max(e_theta(s k0), s k0 + gamma/2).

    Returned in log space: at realistic k0 the factor lies far below the
    double-precision floor.
    """
    sk0 = data.s * k0
    delta = script_A / beta_sk(data, k0 + 0.5 * data.gamma / data.s)
    if k0 >= kgam:
        expo = 2.0 * (sk0 - 1.0) / data.gamma
    else:
        c = c_gamma(sk0, data.gamma)
        expo = max((sk0 - 1.0) * (1.0 + c) ** 2 + c, sk0 + 0.5 * data.gamma)
    return expo * math.log(delta), delta, expo


def _rate_RE_inv(data, order_sk, script_A, kgam):
    """R_E(delta^-1) at Lebesgue order sk (valid down to sk = 1):
    delta^(-2(sk-1)/gamma) on the alpha branch, delta^-(sk+gamma/2) below."""
    k = order_sk / data.s
    delta = script_A / beta_sk(data, k)
    if k >= kgam:
        return delta ** (-2.0 * (order_sk - 1.0) / data.gamma)
    return delta ** (-(order_sk + 0.5 * data.gamma))


def select_k0_propagation(data, M_P, cap=400):
    """Smallest integer k0 > k_max with
    mu_{s k0} <= script-A / (2^(3 gamma/2) C_phi (M_P + (e-1) m0))."""
    if M_P <= data.m0:
        raise ValueError("M_P must exceed the mass m0")
    script_A = sharpened_coercive_constant(data)
    thr = script_A / (2.0 ** (1.5 * data.gamma) * data.C_phi
                      * (M_P + E_MINUS_ONE * data.m0))
    kmx = max(find_k_b(data, coercive=script_A), data.kc)
    for k0 in range(int(math.floor(kmx)) + 1, cap + 1):
        if data.mu(data.s * k0) <= thr:
            return k0
    raise ScanCapExceededError(
        f"no k0 <= {cap} reaches the propagation threshold {thr:.3e}")


def select_k0_generation(data, M_G, cap=400):
    """Smallest integer k0 > k_max with
    mu_{s (k0 - 1)} <= script-A / (2^((3 gamma + 2)/2) C_phi M_G)."""
    if M_G <= data.m0:
        raise ValueError("M_G must exceed the mass m0")
    script_A = sharpened_coercive_constant(data)
    thr = script_A / (2.0 ** (1.5 * data.gamma + 1.0) * data.C_phi * M_G)
    kmx = max(find_k_b(data, coercive=script_A), data.kc)
    for k0 in range(int(math.floor(kmx)) + 1, cap + 1):
        if data.s * (k0 - 1) > 1 and data.mu(data.s * (k0 - 1)) <= thr:
            return k0
    raise ScanCapExceededError(
        f"no k0 <= {cap} reaches the generation threshold {thr:.3e}")


def _log_invariant_moment_factor(data, k):
    """log m_{1,k}[f0]; the direct product overflows at large orders."""
    sk = data.s * k
    c = c_gamma(sk, data.gamma)
    first = (2.0 * c + 1.0) * math.log(data.m1)
    second = ((sk + 0.5 * data.gamma) * math.log(data.m1)
              + (1.0 + 0.5 * data.gamma) * (1.0 + c) * math.log(data.m0))
    return max(first, second)


def _kappa_P(data, k0, kmx, kmn, script_A, kgam):
    """log kappa^P with its C^P constant; needs the measured initial
    moments.  Assembled in log space (the m_{1,k0} entry overflows at
    realistic orders)."""
    if data.moment is None:
        raise ValueError("kappa^P needs measured initial moments on the data")
    sk0 = data.s * k0
    log_pref = (math.log(data.b_l1 * kmx * data.C_phi)
                + math.log(2.0 ** (sk0 + 0.5 * data.gamma) + 2.0
                           + 2.0 ** (0.5 * (0.5 * kmx + 3.0 * data.gamma))))
    m_mid = data.moment(1.0 + 0.5 * data.gamma)
    m_top = data.moment(kmx + 0.5 * data.gamma / data.s)
    re_low = _rate_RE_inv(data, data.s + 0.5 * data.gamma, script_A, kgam)
    re_top = _rate_RE_inv(data, data.s * kmx + 0.5 * data.gamma, script_A, kgam)
    log_cp = max(math.log(kmx * data.C_phi * m_mid * m_top + re_low * re_top),
                 _log_invariant_moment_factor(data, k0))
    log_kappa = np.logaddexp(log_pref + log_cp, math.log(script_A))
    return float(log_kappa), {"log_prefactor": log_pref, "log_C_P": log_cp,
                              "m_1_gamma2": m_mid, "m_kmx_gamma2": m_top,
                              "RE_low": re_low, "RE_top": re_top}


def _kappa_G(data, k0, kmx, kmn, script_A):
    """log kappa^G from the time-constant assembly (log space: the moment
    factors overflow at realistic orders)."""
    sk0 = data.s * k0
    log_pref = math.log(data.b_l1) + math.log(
        data.C_phi * (2.0 ** (sk0 + 0.5 * data.gamma) + 2.0)
        + 2.0 ** (0.5 * (0.5 * kmx + 3.0 * data.gamma)))
    log_m1k0 = _log_invariant_moment_factor(data, k0)
    log_m1k0g = _log_invariant_moment_factor(data, k0 + 0.5 * data.gamma / data.s)
    log_third = ((math.log(data.m1) + log_m1k0)
                 * (sk0 - 1.0) / (data.s * kmn + 0.5 * data.gamma))
    log_big = max(math.log(data.m1), log_m1k0g, log_third)
    return log_pref + log_big, {"log_prefactor": log_pref,
                                "log_m_factor": log_big,
                                "log_m1k0_gamma2": log_m1k0g,
                                "log_interp_power": log_third}


def _cal_CG(data, kbar, script_A):
    """log C^G_{kbar} = log max over integer k <= kbar + 1 of
    ((sk - 1 + gamma/2) / (script-A gamma/2))^(2 (sk - 1 + gamma/2) / gamma)."""
    best = 0.0
    for k in range(1, int(math.floor(kbar)) + 2):
        expo = data.s * k - 1.0 + 0.5 * data.gamma
        if expo <= 0:
            continue
        best = max(best, (2.0 * expo / data.gamma)
                   * math.log(expo / (script_A * 0.5 * data.gamma)))
    return best


@dataclass
class ExpMomentPlan:
    """Selected exponential-tail order, rate and schedule with the audit
    trail of every intermediate factor.

    Certified rates at desk-scale data are astronomically small (the rate
    factor R is delta to a power of order k0), so the assembly runs in log
    space: log_z carries the exact value and z is its double-precision
    clamp (never below Z_FLOOR, never zero)."""

    mode: str              # "propagation" | "generation"
    s: float
    z: float
    z0: float              # initial rate (propagation) or 0
    M: float               # M_P or M_G
    k0: int
    log_kappa: float
    log_R_delta: float     # log R(delta_{s k0 + gamma/2}) < 0
    script_A: float
    log_z: float = 0.0
    audit: dict = field(default_factory=dict)

    def rate_at(self, t):
        """z(t): constant for propagation, z min(t, 1) for generation."""
        if self.mode == "propagation":
            return self.z
        return self.z * min(float(t), 1.0)

    def as_dict(self):
        out = {k: getattr(self, k) for k in self.__dataclass_fields__
               if k != "audit"}
        out["audit"] = dict(self.audit)
        return out


def propagation_rate(data, M_P, z0, safety=0.99):
    """Admissible constant tail rate z < min(z0, 1, z1) with

    z1 = 2 (script-A (M_P - m0) R(delta_{s k0 + gamma/2}) / kappa^P)^(2/gamma)

    shrunk by the safety factor so monitors never run at the boundary.
    """
    if M_P <= data.m0:
        raise ValueError("propagation needs M_P > m0")
    if z0 <= 0:
        raise ValueError("propagation needs a positive initial rate z0")
    script_A = sharpened_coercive_constant(data)
    kgam = k_gamma_threshold(data.gamma, data.s)
    k0 = select_k0_propagation(data, M_P)
    kb = find_k_b(data, coercive=script_A)
    kmx = max(kb, data.kc)
    kmn = min(kb, data.kc)
    log_R, delta, expo = _rate_R(data, k0, script_A, kgam)
    log_kappa, kaudit = _kappa_P(data, k0, kmx, kmn, script_A, kgam)
    log_z1 = (math.log(2.0) + (2.0 / data.gamma)
              * (math.log(script_A) + math.log(M_P - data.m0) + log_R
                 - log_kappa))
    z1 = math.exp(max(log_z1, math.log(Z_FLOOR)))
    z = safety * min(z0, 1.0, z1)
    log_z = math.log(safety) + min(math.log(z0), 0.0, log_z1)
    audit = {"log_z1": log_z1, "delta_sk0_gamma2": delta, "R_exponent": expo,
             "k_b": kb, "k_mx": kmx, "k_mn": kmn, "k_gamma": kgam,
             "threshold_bound": M_P + E_MINUS_ONE * data.m0,
             "z_clamped": log_z1 < math.log(Z_FLOOR), **kaudit}
    return ExpMomentPlan(mode="propagation", s=data.s, z=z, z0=z0, M=M_P,
                         k0=k0, log_kappa=log_kappa, log_R_delta=log_R,
                         script_A=script_A, log_z=log_z, audit=audit)


def generation_rate(data, M_G, k_in=1.0, safety=0.99):
    """Admissible generated tail rate with schedule z(t) = z min(t, 1):

    z < min( script-A/2,
             script-A R (M_G - m0) e^{-script-A/2}
             / (4 kappa^G (script-A + 1) (1 + R C^G_max)) ).

    Requires order scale s <= gamma/2 (the index-shift reading of the
    partial-sum lower bound holds only there).
    """
    if data.s > 0.5 * data.gamma + 1e-12:
        raise ValueError("generation requires s <= gamma/2")
    if M_G <= data.m0:
        raise ValueError("generation needs M_G > m0")
    script_A = sharpened_coercive_constant(data)
    kgam = k_gamma_threshold(data.gamma, data.s)
    k0 = select_k0_generation(data, M_G)
    kb = find_k_b(data, coercive=script_A)
    kmx = max(kb, data.kc)
    kmn = min(kb, data.kc)
    log_R, delta, expo = _rate_R(data, k0, script_A, kgam)
    log_kappa, kaudit = _kappa_G(data, k0, kmx, kmn, script_A)
    log_cg_k0 = _cal_CG(data, k0 + 0.5 * data.gamma / data.s, script_A)
    log_cg_mx = _cal_CG(data, kmx, script_A)
    log_cg_max = max(math.log(data.m1) + log_cg_k0, log_cg_mx)
    log_one_plus_rcg = float(np.logaddexp(0.0, log_R + log_cg_max))
    log_z2 = (math.log(script_A) + log_R + math.log(M_G - data.m0)
              - 0.5 * script_A - math.log(4.0) - log_kappa
              - math.log(script_A + 1.0) - log_one_plus_rcg)
    z2 = math.exp(max(log_z2, math.log(Z_FLOOR)))
    z = safety * min(0.5 * script_A, z2)
    log_z = math.log(safety) + min(math.log(0.5 * script_A), log_z2)
    audit = {"log_z2": log_z2, "delta_sk0_gamma2": delta, "R_exponent": expo,
             "k_b": kb, "k_mx": kmx, "k_mn": kmn, "k_gamma": kgam,
             "log_CG_k0": log_cg_k0, "log_CG_mx": log_cg_mx,
             "log_CG_max": log_cg_max, "k_in": k_in,
             "z_clamped": log_z2 < math.log(Z_FLOOR), **kaudit}
    return ExpMomentPlan(mode="generation", s=data.s, z=z, z0=0.0, M=M_G,
                         k0=k0, log_kappa=log_kappa, log_R_delta=log_R,
                         script_A=script_A, log_z=log_z, audit=audit)


def monitor_exponential(times, exp_values, plan, m0, m_kin_values=None,
                        slack=1e-3):
    """Per-record pass flags for the tail monitors (reports, never raises).

    propagation: E_s(t, z) <= M_P + (e-1) m0 (1 + slack);
    generation:  E_s(t, z min(t,1)) <= M*_G (1 + slack), M*_G the running
    sup of the k_in-moment.
    """
    out = []
    if plan.mode == "propagation":
        bound = (plan.M + E_MINUS_ONE * m0) * (1.0 + slack)
        bounds = [bound] * len(times)
    else:
        if m_kin_values is None:
            raise ValueError("generation monitor needs the k_in moment series")
        m_star = max(m_kin_values)
        bounds = [m_star * (1.0 + slack)] * len(times)
    for t, e, bnd in zip(times, exp_values, bounds):
        out.append({"t": float(t), "value": float(e), "bound": float(bnd),
                    "ok": bool(e <= bnd)})
    return out
