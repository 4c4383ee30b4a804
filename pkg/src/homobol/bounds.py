"""Analytic constants and bounds for the hard-potential Boltzmann flow.

Everything here is a function of problem data alone (initial mass/energy,
kernel constants, contractive factors): the lower-bound constant c_lb for
the collision-frequency convolution, the coercive constant, the per-order
tables beta/delta/C/B and the equilibrium moments, the propagation and
generation envelopes, the Maxwell-molecule variant, the invariant-set
threshold, and the sub-tangent / Hoelder / one-sided Lipschitz probes that
compare two collision fields against their analytic brackets.

Checkers receive measured functionals and report margins; no bound ever
reads the evolving solution except through those comparisons.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import collision, grid as gridmod
from .kernels import PotentialKernel, angular_l1_norm, contractive_factor


class DegenerateCoercivityError(ArithmeticError):
    """mu_{s kc} reached ||b||_1: no coercive margin left."""


class ScanCapExceededError(RuntimeError):
    """An order scan (k_b or k_0 selection) hit its cap without success."""


def bracket(x):
    """<x> = sqrt(1 + x^2)."""
    return math.sqrt(1.0 + x * x)


def c_gamma(sk, gamma):
    """Nonlinearity parameter c = (gamma/2)/(sk - 1), sk > 1."""
    if sk <= 1:
        raise ValueError("c_gamma needs sk > 1")
    return 0.5 * gamma / (sk - 1.0)


@dataclass
class ProblemData:
    """Data feeding the bounds: conserved moments, kernel constants, the
    contractive-factor map, and the lower-bound-lemma inputs."""

    m0: float
    m1: float
    gamma: float
    c_phi: float
    C_phi: float
    b_l1: float
    mu: callable            # r -> mu_r
    s: float = 1.0
    kc: float = 2.0
    beta_lb: float = 1.0    # beta of the over-energy moment bound
    B_beta: float = 1.0     # bound on int f |v|^(2+beta)
    c_energy: float = 1.0   # c of the lower bound lemma
    C_energy: float = 1.0   # C of the lower bound lemma
    moment: callable = None  # k -> m_k[f0], measured initial moments

    def __post_init__(self):
        if not self.m0 > 0:
            raise ValueError("m0 must be positive")
        if not self.m1 > self.m0:
            raise ValueError("m1 > m0 is required (<v> >= 1 pointwise)")
        if not self.kc > 1:
            raise ValueError("kc must exceed 1")
        if not 0 < self.s <= 1:
            raise ValueError("s must lie in (0, 1]")
        if not 0 < self.c_energy <= self.C_energy:
            raise ValueError("need 0 < c <= C in the lower-bound inputs")
        if self.s * self.kc <= 1:
            raise ValueError("s * kc must exceed 1 for the coercive factor")

    @classmethod
    def from_distribution(cls, f0, pot, b, s=1.0, kc=2.0, beta_lb=1.0,
                          B_beta=None):
        """Measure the data of a sampled initial datum.

        Defaults follow the conservative conversions: B_beta (beta = 1) is
        the measured <v>^3-moment times 2^(3/2); c and C are min and max of
        mass and kinetic energy.
        """
        m0 = f0.mass()
        energy = f0.energy()
        m1 = gridmod.moment(f0, 1.0)
        if B_beta is None:
            B_beta = gridmod.moment(f0, (2.0 + beta_lb) / 2.0) * 2.0 ** (3.0 / 2.0)
        cache = {}

        def mu(r):
            key = round(float(r), 12)
            if key not in cache:
                cache[key] = contractive_factor(b, float(r))
            return cache[key]

        def measured(k):
            return gridmod.moment(f0, float(k))

        return cls(m0=m0, m1=m1, gamma=pot.gamma, c_phi=pot.c_phi,
                   C_phi=pot.C_phi, b_l1=angular_l1_norm(b), mu=mu, s=s,
                   kc=kc, beta_lb=beta_lb, B_beta=B_beta,
                   c_energy=min(m0, energy), C_energy=max(m0, energy),
                   moment=measured)


# ---------------------------------------------------------------------------
# lower bound constant
# ---------------------------------------------------------------------------


@dataclass
class LowerBoundConstant:
    c_lb: float
    r_star: float
    R: float
    c_lb_displayed: float  # the variant with outer exponent -1/(2-gamma)


def lower_bound_constant(c, C, B_beta, beta, gamma):
    """c_lb of the convolution lower bound (f * |.|^gamma)(v) >= c_lb <v>^gamma
    for zero-momentum f with mass/energy between c and C and
    int f |v|^(2+beta) <= B_beta.

    The proof chain is followed: r* = (4C/c)^(1/gamma),
    R = 2 (2^(2/beta) max(C, B_beta) <r*>^(2+beta) / c)^(1/beta),
    c_lb = c / (4 R^(2-gamma) <r*>^gamma); gamma = 0 returns c.
    The displayed closed form with outer exponent -1/(2-gamma) is reported
    alongside for audit (it disagrees with the proof's R^-(2-gamma)).
    """
    if not 0 < c <= C:
        raise ValueError("need 0 < c <= C")
    if B_beta <= 0 or beta <= 0:
        raise ValueError("need positive beta and B_beta")
    if not 0 <= gamma <= 2:
        raise ValueError("gamma must lie in [0, 2]")
    if gamma == 0.0:
        return LowerBoundConstant(c, 0.0, 0.0, c)
    r_star = (4.0 * C / c) ** (1.0 / gamma)
    br = bracket(r_star)
    R = 2.0 * (2.0 ** (2.0 / beta) / c * max(C, B_beta) * br ** (2.0 + beta)) ** (1.0 / beta)
    c_lb = c / (4.0 * R ** (2.0 - gamma) * br**gamma)
    if gamma < 2.0:
        displayed = c / 4.0 * R ** (-1.0 / (2.0 - gamma)) * br ** (-gamma)
    else:
        displayed = float("nan")
    return LowerBoundConstant(c_lb, r_star, R, displayed)


def data_lower_bound(data):
    return lower_bound_constant(data.c_energy, data.C_energy, data.B_beta,
                                data.beta_lb, data.gamma)


def conv_lower_margin(f, gamma, c_lb):
    """min over grid nodes of (f * |.|^gamma)(v) / (c_lb <v>^gamma);
    the on-grid inequality holds iff the margin is >= 1."""
    pot = PotentialKernel(gamma) if gamma > 0 else PotentialKernel(0.0)
    conv = collision.conv_phi(f, pot)
    rhs = c_lb * f.grid.bracket2 ** (gamma / 2.0)
    return float(np.min(conv / rhs))


# ---------------------------------------------------------------------------
# coercive constant and per-order tables
# ---------------------------------------------------------------------------


def coercive_constant(data):
    """A = c_phi 2^(-gamma/2) (||b||_1 - mu_{s kc}) m0, strictly positive."""
    mu_kc = data.mu(data.s * data.kc)
    margin = data.b_l1 - mu_kc
    if margin <= 1e-14 * data.b_l1:
        raise DegenerateCoercivityError(
            f"mu at s*kc = {data.s * data.kc:g} leaves no margin under ||b||_1")
    return data.c_phi * 2.0 ** (-data.gamma / 2.0) * margin * data.m0


def sharpened_coercive_constant(data):
    """script-A = c_lb 2^(gamma/2) A, the convolution-sharpened form."""
    return data_lower_bound(data).c_lb * 2.0 ** (data.gamma / 2.0) * coercive_constant(data)


def k_gamma_threshold(gamma, s=1.0):
    """Branch threshold: s k_gamma = (1 + (gamma/2)^2)/(1 - gamma/2),
    +inf at gamma = 2 (the e_theta branch then always applies)."""
    if gamma >= 2.0:
        return math.inf
    return (1.0 + (gamma / 2.0) ** 2) / (s * (1.0 - gamma / 2.0))


def beta_sk(data, k):
    """Growth factor beta_sk = C_phi (2^(sk + gamma/2) mu_sk + 2 ||b||_1)."""
    sk = data.s * k
    return data.C_phi * (2.0 ** (sk + data.gamma / 2.0) * data.mu(sk)
                         + 2.0 * data.b_l1)


def find_k_b(data, cap=200, coercive=None):
    """Smallest integer k_b with delta_sk < 1 for every sk >= s k_b
    (scanned upward; capped to guard against pathological mu tables).
    The exponential machinery passes the sharpened coercive constant."""
    A = coercive_constant(data) if coercive is None else coercive
    start = max(2, math.floor(1.0 / data.s) + 1)
    # beta_sk >= 2 C_phi ||b||_1 always, so a small coercive constant makes
    # every delta_sk < 1 without scanning the contractive factors
    if A < 2.0 * data.C_phi * data.b_l1:
        return start
    deltas = {}
    for k in range(start, cap + 1):
        deltas[k] = A / beta_sk(data, k)
    for kb in range(start, cap + 1):
        if all(deltas[k] < 1.0 for k in range(kb, cap + 1)):
            return kb
    raise ScanCapExceededError(f"no k_b <= {cap} makes delta_sk < 1 onward")


def invariant_moment_factor(data, k):
    """m_{1,k}[f0] = max(m1^(2c+1), m1^(sk+gamma/2) m0^((1+gamma/2)(1+c)))."""
    sk = data.s * k
    c = c_gamma(sk, data.gamma)
    first = data.m1 ** (2.0 * c + 1.0)
    second = (data.m1 ** (sk + data.gamma / 2.0)
              * data.m0 ** ((1.0 + data.gamma / 2.0) * (1.0 + c)))
    return max(first, second)


@dataclass
class BoundRow:
    """Per-order entries of the bounds table (audit values included)."""

    k: float
    sk: float
    c: float
    mu_sk: float
    beta: float
    delta: float
    e_alpha: float
    e_theta: float
    alpha_branch: bool          # k >= k_gamma selects the e_alpha branch
    C_exact: float              # exact max form
    C_upper: float              # coarser m_{1,k} R_C form
    B: float                    # beta * C_exact
    E: float                    # equilibrium moment (root of L)
    R_C_inv: float              # R_C(delta^-1)
    R_E_inv: float              # R_E(delta^-1)

    def as_dict(self):
        return {key: getattr(self, key) for key in self.__dataclass_fields__}


def bound_row(data, k, A=None, kg=None):
    sk = data.s * k
    if sk <= 1:
        raise ValueError(f"order sk = {sk:g} must exceed 1")
    if data.gamma == 0.0:
        raise ValueError("gamma = 0 is the Maxwell case; use maxwell_moment_bound")
    if A is None:
        A = coercive_constant(data)
    if kg is None:
        kg = k_gamma_threshold(data.gamma, data.s)
    c = c_gamma(sk, data.gamma)
    mu_sk = data.mu(sk)
    beta = data.C_phi * (2.0 ** (sk + data.gamma / 2.0) * mu_sk + 2.0 * data.b_l1)
    delta = A / beta
    e_alpha = 1.0 / c
    e_theta = (sk - 1.0) * (1.0 + c) ** 2 + c
    alpha_branch = k >= kg
    term_theta = (delta ** (-e_theta) * data.m1 ** (sk + data.gamma / 2.0)
                  * data.m0 ** ((1.0 + data.gamma / 2.0) * (1.0 + c)))
    term_alpha = delta ** (-e_alpha) * data.m1 ** (2.0 * c + 1.0)
    C_exact = max(term_theta, term_alpha)
    rc_inv = delta ** (-e_alpha) if alpha_branch else delta ** (-e_theta)
    re_inv = delta ** (-e_alpha) if alpha_branch else delta ** (-(sk + data.gamma / 2.0))
    C_upper = invariant_moment_factor(data, k) * rc_inv
    B = beta * C_exact
    E = data.m1 ** (c / (1.0 + c)) * (2.0 * B / A) ** (1.0 / (1.0 + c))
    return BoundRow(k=k, sk=sk, c=c, mu_sk=mu_sk, beta=beta, delta=delta,
                    e_alpha=e_alpha, e_theta=e_theta,
                    alpha_branch=bool(alpha_branch), C_exact=C_exact,
                    C_upper=C_upper, B=B, E=E, R_C_inv=rc_inv, R_E_inv=re_inv)


def moment_bound_operator(data, k):
    """L_sk(y) = B_sk - (A/2) m1^(-c) y^(1+c): the collision-moment upper
    bound, strictly decreasing in y with unique positive root E_sk."""
    row = bound_row(data, k)
    A = coercive_constant(data)
    c = row.c

    def L(y):
        return row.B - 0.5 * A * data.m1 ** (-c) * np.asarray(y) ** (1.0 + c)

    return L, row


def equilibrium_moment(data, k):
    """E_sk = m1^(c/(1+c)) (2 B_sk / A)^(1/(1+c)): the unique root of L_sk.

    The coercive coefficient is A/2 (the delta-absorption keeps half of the
    negative term), hence the factor 2 inside the root; as sk -> 1+ with the
    ratio held fixed the closed form tends to m1."""
    return bound_row(data, k).E


@dataclass
class BoundsReport:
    """Full ledger of the analytic constants for a problem datum."""

    gamma: float
    s: float
    m0: float
    m1: float
    b_l1: float
    c_lb: float
    c_lb_displayed: float
    r_star: float
    R_lb: float
    A: float
    script_A: float
    k_gamma: float
    k_b: int
    k_max: float
    h_threshold: float    # fraktur-h at order 1 + gamma
    K_omega: float        # admissible invariant-set level (2 h by default)
    rows: dict = field(default_factory=dict)

    def as_dict(self):
        out = {key: getattr(self, key) for key in self.__dataclass_fields__
               if key != "rows"}
        out["rows"] = {str(k): row.as_dict() for k, row in self.rows.items()}
        return out


def bound_table(data, k_list):
    """BoundsReport with one row per requested order plus the global
    constants (c_lb, A, script-A, thresholds, invariant-set numbers)."""
    if data.gamma == 0.0:
        raise ValueError("gamma = 0 is routed to maxwell_moment_bound")
    A = coercive_constant(data)
    lb = data_lower_bound(data)
    kg = k_gamma_threshold(data.gamma, data.s)
    kb = find_k_b(data)
    kmx = max(kb, data.kc)
    h_thr, K = omega_threshold(data)
    rows = {}
    for k in k_list:
        rows[k] = bound_row(data, k, A=A, kg=kg)
    return BoundsReport(gamma=data.gamma, s=data.s, m0=data.m0, m1=data.m1,
                        b_l1=data.b_l1, c_lb=lb.c_lb,
                        c_lb_displayed=lb.c_lb_displayed, r_star=lb.r_star,
                        R_lb=lb.R, A=A,
                        script_A=lb.c_lb * 2.0 ** (data.gamma / 2.0) * A,
                        k_gamma=kg, k_b=kb, k_max=kmx, h_threshold=h_thr,
                        K_omega=K, rows=rows)


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------


def propagation_bound(data, k, m_k0):
    """Constant propagation envelope max(m_k0, E_sk), valid uniformly in t."""
    return max(float(m_k0), equilibrium_moment(data, k))


def generation_bound(data, k, t):
    """Generation envelope E_sk + m1 (1/(c A t))^(1/c), t > 0; decreasing in
    t with limit E_sk."""
    t = float(t)
    if t <= 0:
        raise ValueError("generation bound is defined for t > 0")
    row = bound_row(data, k)
    A = coercive_constant(data)
    return row.E + data.m1 * (1.0 / (row.c * A * t)) ** (1.0 / row.c)


def odi_supersolution(A, B, c, t):
    """Barrier ybar(t) = E (1 + K / t^(1/c)) dominating any solution of
    y' <= B - A y^(1+c) on (0, inf):

    E = (B/A)^(1/(1+c)) (the proof's A E^(1+c) = B), K = (1/(cA))^(1/c)
    (A/B)^(1/(1+c)).
    """
    if A <= 0 or B <= 0 or c <= 0:
        raise ValueError("A, B, c must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("barrier defined for t > 0")
    E = (B / A) ** (1.0 / (1.0 + c))
    K = (1.0 / (c * A)) ** (1.0 / c) * (A / B) ** (1.0 / (1.0 + c))
    out = E * (1.0 + K / t ** (1.0 / c))
    return float(out) if out.ndim == 0 else out


def maxwell_moment_bound(data, k, m_k0, t):
    """Maxwell-molecule (gamma = 0) envelope:

    m_k(t) <= E_k + m_k0 exp(-(c_phi/2) A_k m0 t),
    E_k = 2 K_{2,k} / (c_phi A_k m0), A_k = ||b||_1 - mu_{s kc},

    with K_{1,k} = C_phi 2^k mu_k m1^(k/(k-1)) from the interpolation of
    m_{k-1} and K_{2,k} its delta-Young absorption at
    delta = (c_phi/2) A_k m0.
    """
    if data.gamma != 0.0:
        raise ValueError("maxwell_moment_bound requires gamma = 0")
    k = float(k)
    if k < 2:
        raise ValueError("need k >= 2 for the interpolation exponents")
    A_ang = data.b_l1 - data.mu(data.s * data.kc)
    if A_ang <= 0:
        raise DegenerateCoercivityError("no angular margin at s kc")
    K1 = data.C_phi * 2.0**k * data.mu(k) * data.m1 ** (k / (k - 1.0))
    absorb = 0.5 * data.c_phi * A_ang * data.m0
    K2 = absorb ** (-(k - 2.0)) * K1 ** (k - 1.0)
    E_k = 2.0 * K2 / (data.c_phi * A_ang * data.m0)
    t = np.asarray(t, dtype=float)
    out = E_k + float(m_k0) * np.exp(-absorb * t)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# invariant set, sub-tangent, Hoelder and one-sided probes
# ---------------------------------------------------------------------------


def omega_threshold(data):
    """(fraktur-h, K): h = E_{1+gamma} + B_{1+gamma} at s = 1, and an
    admissible invariant-set level K = 2h > h."""
    if not 0 < data.gamma <= 2:
        raise ValueError("invariant-set threshold needs gamma in (0, 2]")
    if data.s == 1.0:
        d1 = data
    else:
        d1 = ProblemData(m0=data.m0, m1=data.m1, gamma=data.gamma,
                         c_phi=data.c_phi, C_phi=data.C_phi, b_l1=data.b_l1,
                         mu=data.mu, s=1.0, kc=data.kc,
                         beta_lb=data.beta_lb, B_beta=data.B_beta,
                         c_energy=data.c_energy, C_energy=data.C_energy,
                         moment=data.moment)
    row = bound_row(d1, 1.0 + data.gamma)
    h = row.E + row.B
    return h, 2.0 * h


def omega_membership(f, data, K, tol=1e-6):
    """Mass/energy match the data and m_{1+gamma}[f] <= K, f >= 0."""
    neg_tol = gridmod.Distribution.NEG_TOL
    if f.min_value < -neg_tol * max(float(f.values.max()), 1e-300):
        return False
    if abs(f.mass() - data.m0) > tol * data.m0:
        return False
    if abs(gridmod.moment(f, 1.0) - data.m1) > tol * data.m1:
        return False
    return gridmod.moment(f, 1.0 + data.gamma) <= K


class EtaTooLargeError(ValueError):
    pass


def sub_tangent_probe(f, R, eta, pot, b, squad, data, cons_tol=1e-6):
    """w = f + eta Q(f_R, f_R) with f_R the radius-R cutoff of f.

    Requires eta <= 1/(||b||_1 C(m0) (1 + R^gamma)), C(m0) = 2^(gamma/2)
    C_phi m0; returns the probe field, its negativity margin, the mass and
    energy defects, and the membership flag m_{1+gamma}[w] <= h.
    """
    C_m0 = 2.0 ** (data.gamma / 2.0) * data.C_phi * data.m0
    eta_max = 1.0 / (data.b_l1 * C_m0 * (1.0 + max(R, 0.0) ** data.gamma))
    if eta > eta_max:
        raise EtaTooLargeError(f"eta = {eta:g} exceeds admissible {eta_max:g}")
    mask = f.grid.speed2 <= R * R
    fR = f.copy(values=np.where(mask, f.values, 0.0), tag="cutoff")
    Q = collision.collide_direct(fR, fR, pot, b, squad)
    w = f.copy(values=f.values + eta * Q, tag="sub-tangent probe")
    h, _ = omega_threshold(data)
    neg_margin = float(w.values.min()) / max(float(w.values.max()), 1e-300)
    dm = abs(w.mass() - f.mass()) / f.mass()
    de = abs(w.energy() - f.energy()) / max(f.energy(), 1e-300)
    m1g = gridmod.moment(w, 1.0 + data.gamma)
    in_omega = (neg_margin >= -1e-12 and dm <= cons_tol and de <= cons_tol
                and m1g <= h * (1.0 + 1e-12))
    return w, {"in_omega": bool(in_omega), "neg_margin": neg_margin,
               "mass_defect": dm, "energy_defect": de,
               "m_1_plus_gamma": m1g, "h_threshold": h, "eta_max": eta_max}


def l1_weighted(values, grid, ell):
    return grid.integrate(np.abs(values) * grid.bracket2 ** (ell / 2.0))


def holder_gap(f, g, pot, b, squad, K):
    """(lhs, rhs) of the Hoelder estimate:

    ||Q(f,f) - Q(g,g)||_{L^1_2} <= 6 K^(3/2) ||b||_1 ||f - g||_{L^1_2}^(1/2),

    valid when ||f + g||_{L^1_{2(1+gamma)}} <= 2K.
    """
    ell = 2.0 * (1.0 + pot.gamma)
    hsum = l1_weighted(f.values + g.values, f.grid, ell)
    if hsum > 2.0 * K * (1.0 + 1e-12):
        raise ValueError(f"precondition violated: ||f+g||_L1_{ell:g} = "
                         f"{hsum:g} > 2K = {2*K:g}")
    b_l1 = angular_l1_norm(b)
    Qf = collision.collide_direct(f, f, pot, b, squad)
    Qg = collision.collide_direct(g, g, pot, b, squad)
    lhs = l1_weighted(Qf - Qg, f.grid, 2.0)
    rhs = 6.0 * K**1.5 * b_l1 * math.sqrt(l1_weighted(f.values - g.values,
                                                      f.grid, 2.0))
    return lhs, rhs


def one_sided_bracket(f, g, pot, b, squad):
    """(bracket, bound) of the one-sided Lipschitz condition:

    int (Q(f,f) - Q(g,g)) sign(f - g) <v>^2 dv
        <= 4 ||b||_1 ||f + g||_{L^1_{2+2gamma}} ||f - g||_{L^1_gamma}.
    """
    b_l1 = angular_l1_norm(b)
    Qf = collision.collide_direct(f, f, pot, b, squad)
    Qg = collision.collide_direct(g, g, pot, b, squad)
    sgn = np.sign(f.values - g.values)
    brk = f.grid.integrate((Qf - Qg) * sgn * f.grid.bracket2)
    bound = (4.0 * b_l1 * l1_weighted(f.values + g.values, f.grid,
                                      2.0 + 2.0 * pot.gamma)
             * l1_weighted(f.values - g.values, f.grid, pot.gamma))
    return brk, bound
