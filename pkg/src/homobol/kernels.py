"""Collision kernels and kernel-derived constants.

The transition rate factors as B(|u|, uhat.sigma) = Phi_gamma(|u|) * b(uhat.sigma).
This module holds the potential part, the angular part with its spherical
quadrature, and every constant computed from the angular kernel alone:
the sphere L^1/L^p norms, the contractive factors mu_r, their closed-form
upper bounds, Young convolution constants, and the impact <-> scattering
representation exchange.

All 1-D reduced integrals over the sphere use adaptive panel quadrature with
dyadic refinement toward singular endpoints; convergence is declared when two
refinement levels agree to 1e-10 relative.
"""

import math

import numpy as np


class DivergentIntegralError(ArithmeticError):
    """Raised when a reduced spherical integral fails to Cauchy-converge."""


class ExponentMismatchError(ValueError):
    """Raised when (p, q, r) do not satisfy the Young relation 1/p+1/q=1+1/r."""


REL_TOL = 1e-10  # refinement agreement, per the constants-convergence policy


def sphere_area(k):
    """Surface measure of the k-dimensional unit sphere S^k in R^{k+1}."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


# ---------------------------------------------------------------------------
# potential part
# ---------------------------------------------------------------------------


class PotentialKernel:
    """Potential factor Phi_gamma(|u|) with homogeneity bounds
    c_phi |u|^gamma <= Phi <= C_phi |u|^gamma.

    form="power" is Phi(u) = |u|^gamma; form="truncated" is the cutoff
    variant |u|^gamma * 1_{|u| >= eps} used by the Carleman evaluator
    (the pointwise lower bound then only holds on |u| >= eps).
    """

    def __init__(self, gamma, c_phi=1.0, C_phi=1.0, form="power", eps=None):
        if not 0.0 <= gamma <= 2.0:
            raise ValueError(f"gamma must be in [0, 2], got {gamma}")
        if not 0.0 < c_phi <= C_phi:
            raise ValueError("require 0 < c_phi <= C_phi")
        if form not in ("power", "truncated"):
            raise ValueError(f"unknown potential form {form!r}")
        if form == "truncated":
            if eps is None or not 0.0 < eps <= 1.0:
                raise ValueError("truncated form needs eps in (0, 1]")
        self.gamma = float(gamma)
        self.c_phi = float(c_phi)
        self.C_phi = float(C_phi)
        self.form = form
        self.eps = float(eps) if eps is not None else 0.0

    def __call__(self, u):
        """Phi at relative speed(s) |u|."""
        u = np.asarray(u, dtype=float)
        val = u**self.gamma
        if self.form == "truncated":
            val = np.where(u >= self.eps, val, 0.0)
        return val

    def check_homogeneity(self, speeds):
        """Verify c_phi|u|^g <= Phi(u) <= C_phi|u|^g on sample speeds."""
        u = np.asarray(speeds, dtype=float)
        if self.form == "truncated":
            u = u[u >= self.eps]
        val = self(u)
        lo = self.c_phi * u**self.gamma
        hi = self.C_phi * u**self.gamma
        return bool(np.all(val >= lo * (1 - 1e-14)) and np.all(val <= hi * (1 + 1e-14)))

    def is_maxwell(self):
        return self.gamma == 0.0


# ---------------------------------------------------------------------------
# angular part
# ---------------------------------------------------------------------------


class AngularKernel:
    """Angular transition b(t), t = uhat.sigma in [-1, 1], on S^{d-1}.

    Representations: isotropic constant, tabulated values (linear
    interpolation), the power family kappa*(1-t)^(-a) with integrable
    singularity a < 1, or a generic callable with declared endpoint powers
    (used by the impact->scattering transform).
    """

    def __init__(self, func, d=3, kind="callable", params=None,
                 sing_plus=0.0, sing_minus=0.0, func_u_plus=None):
        if d < 2:
            raise ValueError("dimension d must be >= 2")
        self.d = int(d)
        self._func = func
        self.kind = kind
        self.params = dict(params or {})
        # b(t) ~ (1-t)^(-sing_plus) near t=1, (1+t)^(-sing_minus) near t=-1
        self.sing_plus = float(sing_plus)
        self.sing_minus = float(sing_minus)
        # evaluation in the endpoint distance u = 1 - t, stable for tiny u
        self._func_u_plus = func_u_plus or (lambda u: func(1.0 - np.asarray(u)))
        self._l1 = None
        self._validate()

    def eval_u_plus(self, u):
        """b at t = 1 - u, stable near the grazing endpoint."""
        return self._func_u_plus(u)

    # -- constructors -------------------------------------------------

    @classmethod
    def isotropic(cls, b0, d=3):
        if b0 <= 0:
            raise ValueError("isotropic level b0 must be positive")
        return cls(lambda t: np.full_like(np.asarray(t, dtype=float), b0),
                   d=d, kind="isotropic", params={"b0": float(b0)})

    @classmethod
    def table(cls, t, b, d=3):
        t = np.asarray(t, dtype=float)
        b = np.asarray(b, dtype=float)
        if t.ndim != 1 or t.shape != b.shape or t.size < 2:
            raise ValueError("table needs matching 1-D t and b arrays")
        if np.any(np.diff(t) <= 0) or t[0] < -1 or t[-1] > 1:
            raise ValueError("table abscissae must increase within [-1, 1]")
        if np.any(b < 0):
            raise ValueError("angular kernel must be nonnegative on its sample set")
        tt, bb = t.copy(), b.copy()

        def f(x):
            return np.interp(np.asarray(x, dtype=float), tt, bb)

        return cls(f, d=d, kind="table", params={"t": tt, "b": bb})

    @classmethod
    def power(cls, kappa, a, d=3):
        """b(t) = kappa * (1-t)^(-a); requires a < 1 (integrable for d=3)."""
        if kappa <= 0:
            raise ValueError("kappa must be positive")
        if a >= 1.0:
            raise DivergentIntegralError(
                f"power family exponent a={a} >= 1 is not integrable on S^2")

        def f(x):
            return kappa * (1.0 - np.asarray(x, dtype=float)) ** (-a)

        return cls(f, d=d, kind="power", params={"kappa": float(kappa), "a": float(a)},
                   sing_plus=max(a, 0.0),
                   func_u_plus=lambda u: kappa * np.asarray(u, dtype=float) ** (-a))

    @classmethod
    def from_config(cls, spec, d=3):
        """Build from the JSON config form:
        {"type":"isotropic","b0":..} | {"type":"table","t":[..],"b":[..]} |
        {"type":"power","kappa":..,"a":..}
        """
        kind = spec.get("type")
        if kind == "isotropic":
            return cls.isotropic(spec["b0"], d=d)
        if kind == "table":
            return cls.table(spec["t"], spec["b"], d=d)
        if kind == "power":
            return cls.power(spec["kappa"], spec["a"], d=d)
        raise ValueError(f"unknown angular kernel type {kind!r}")

    # -- basics ---------------------------------------------------------

    def __call__(self, t):
        return self._func(t)

    def _validate(self):
        # pointwise nonnegativity on a sample set away from singular endpoints
        ts = np.linspace(-1 + 1e-9, 1 - 1e-9, 2001)
        vals = np.asarray(self(ts), dtype=float)
        if np.any(~np.isfinite(vals[np.abs(ts) < 1 - 1e-6])):
            raise ValueError("angular kernel not finite on (-1, 1)")
        if np.any(vals < 0):
            raise ValueError("angular kernel must be nonnegative on its sample set")

    @property
    def l1(self):
        if self._l1 is None:
            self._l1 = angular_l1_norm(self)
        return self._l1

    def linf(self):
        ts = np.linspace(-1 + 1e-12, 1 - 1e-12, 20001)
        v = float(np.max(self(ts)))
        if self.sing_plus > 0 or self.sing_minus > 0:
            raise DivergentIntegralError("L^inf norm of a singular kernel is infinite")
        return v


# ---------------------------------------------------------------------------
# reduced 1-D integration over t = cos(theta)
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _panel_gauss(g, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.sum(_GL_W * g(mid + half * _GL_X)))


_EDGE_CUT = 1.0 / 32.0  # width of the substituted endpoint zones


def _chain_gauss(g, edges):
    return sum(_panel_gauss(g, a, b) for a, b in zip(edges[:-1], edges[1:]))


def reduced_integral(g, sing_plus=0.0, sing_minus=0.0, breakpoints=(),
                     g_u_plus=None, g_u_minus=None, rel_tol=REL_TOL):
    """Adaptive integral of g over (-1, 1) with integrable endpoint powers.

    sing_plus / sing_minus declare the power blow-up at t = +1 / -1
    (g ~ (1-t)^(-sing_plus) etc.); a declared power >= 1 raises immediately.
    Near a singular endpoint the integral is evaluated in the distance
    variable u = 1 -+ t through g_u_plus(u) = g(1-u) (resp. g_u_minus(u) =
    g(-1+u)), which callers may supply in a form that is stable for tiny u,
    and the substitution u = s^m with m >= 4/(1-power) removes the blow-up.
    Panels are refined until two levels agree to rel_tol; failure to
    Cauchy-converge raises as a numerical backstop.
    """
    if sing_plus >= 1.0 or sing_minus >= 1.0:
        raise DivergentIntegralError(
            "reduced spherical integral diverges (endpoint power >= 1)")
    if g_u_plus is None:
        g_u_plus = lambda u: g(1.0 - u)
    if g_u_minus is None:
        g_u_minus = lambda u: g(-1.0 + u)

    lo = -1.0 + (_EDGE_CUT if sing_minus > 0 else 0.0)
    hi = 1.0 - (_EDGE_CUT if sing_plus > 0 else 0.0)
    m_p = max(2, math.ceil(4.0 / (1.0 - sing_plus))) if sing_plus > 0 else 0
    m_m = max(2, math.ceil(4.0 / (1.0 - sing_minus))) if sing_minus > 0 else 0

    prev = None
    for level in range(2, 12):
        core = np.linspace(lo, hi, 16 + 8 * level).tolist()
        core += [float(t) for t in breakpoints if lo < t < hi]
        val = _chain_gauss(g, sorted(set(core)))
        if sing_plus > 0:
            smax = _EDGE_CUT ** (1.0 / m_p)
            edges = np.linspace(0.0, smax, 5 + 2 * level)

            def gs_p(s):
                s = np.asarray(s, dtype=float)
                return g_u_plus(s**m_p) * m_p * s ** (m_p - 1)

            val += _chain_gauss(gs_p, edges)
        if sing_minus > 0:
            smax = _EDGE_CUT ** (1.0 / m_m)
            edges = np.linspace(0.0, smax, 5 + 2 * level)

            def gs_m(s):
                s = np.asarray(s, dtype=float)
                return g_u_minus(s**m_m) * m_m * s ** (m_m - 1)

            val += _chain_gauss(gs_m, edges)
        if prev is not None:
            if abs(val - prev) <= rel_tol * max(abs(val), 1e-300):
                return val
        prev = val
    raise DivergentIntegralError(
        "reduced spherical integral failed to Cauchy-converge under refinement")


def _weight_pow(d):
    return (d - 3) / 2.0


def reduced_sphere_integral(b, extra=None, alpha_plus=0.0, alpha_minus=0.0):
    """omega_{d-2} * int_{-1}^{1} ((1+t)/2)^(-alpha_plus) ((1-t)/2)^(-alpha_minus)
    b(t) (1-t^2)^((d-3)/2) dt  [optionally times extra(t)].

    This is the 1-D reduction of an integral over S^{d-1} against b(e1.sigma).
    """
    d = b.d
    wp = _weight_pow(d)
    p_plus = alpha_minus + b.sing_plus - wp   # net (1-t)^(-p_plus) behavior
    p_minus = alpha_plus + b.sing_minus - wp  # net (1+t)^(-p_minus) behavior
    if p_plus >= 1.0 or p_minus >= 1.0:
        raise DivergentIntegralError(
            f"spherical integral diverges: endpoint powers ({p_minus:.3g}, {p_plus:.3g})")

    def g(t):
        t = np.asarray(t, dtype=float)
        val = np.asarray(b(t), dtype=float)
        if alpha_plus != 0.0:
            val = val * ((1.0 + t) / 2.0) ** (-alpha_plus)
        if alpha_minus != 0.0:
            val = val * ((1.0 - t) / 2.0) ** (-alpha_minus)
        if wp != 0.0:
            val = val * (1.0 - t * t) ** wp
        if extra is not None:
            val = val * extra(t)
        return val

    def g_u_plus(u):
        # t = 1 - u, evaluated stably for tiny u
        u = np.asarray(u, dtype=float)
        val = np.asarray(b.eval_u_plus(u), dtype=float)
        if alpha_plus != 0.0:
            val = val * ((2.0 - u) / 2.0) ** (-alpha_plus)
        if alpha_minus != 0.0:
            val = val * (u / 2.0) ** (-alpha_minus)
        if wp != 0.0:
            val = val * (u * (2.0 - u)) ** wp
        if extra is not None:
            val = val * extra(1.0 - u)
        return val

    def g_u_minus(u):
        # t = -1 + u; only bounded-at(-1) kernels reach this path
        u = np.asarray(u, dtype=float)
        val = np.asarray(b(-1.0 + u), dtype=float)
        if alpha_plus != 0.0:
            val = val * (u / 2.0) ** (-alpha_plus)
        if alpha_minus != 0.0:
            val = val * ((2.0 - u) / 2.0) ** (-alpha_minus)
        if wp != 0.0:
            val = val * (u * (2.0 - u)) ** wp
        if extra is not None:
            val = val * extra(-1.0 + u)
        return val

    return sphere_area(d - 2) * reduced_integral(
        g, sing_plus=max(p_plus, 0.0), sing_minus=max(p_minus, 0.0),
        breakpoints=b.params.get("t", ()),
        g_u_plus=g_u_plus, g_u_minus=g_u_minus)


# ---------------------------------------------------------------------------
# kernel-derived constants
# ---------------------------------------------------------------------------


def angular_l1_norm(b):
    """||b||_{L^1(S^{d-1})} = int b(e1.sigma) d(sigma)."""
    return reduced_sphere_integral(b)


def angular_lp_norm(b, p):
    """||b||_{L^p(S^{d-1})}; p = inf returns the pointwise sup."""
    if p == 1:
        return angular_l1_norm(b)
    if np.isinf(p):
        return b.linf()

    sp = b.sing_plus * p
    if sp >= 1.0 or b.sing_minus * p >= 1.0:
        raise DivergentIntegralError(f"L^{p} norm of this kernel diverges")
    bp = AngularKernel(lambda t: np.asarray(b(t), dtype=float) ** p, d=b.d,
                       kind="callable", sing_plus=sp, sing_minus=b.sing_minus * p,
                       params={"t": b.params["t"]} if "t" in b.params else None,
                       func_u_plus=lambda u: np.asarray(b.eval_u_plus(u), dtype=float) ** p)
    return reduced_sphere_integral(bp) ** (1.0 / p)


def _mu_integrand_weight(r):
    def w(x):
        x = np.asarray(x, dtype=float)
        return ((1.0 - x) / 2.0) ** r + ((1.0 + x) / 2.0) ** r
    return w


_MESH_GL_X, _MESH_GL_W = np.polynomial.legendre.leggauss(8)


def _mu_mesh(b):
    """Fixed composite quadrature mesh (t_j, w_j) for smooth-factor integrals
    against a bounded kernel: per-panel Gauss with panels at the table
    breakpoints (tabulated kernels) or uniform (other bounded kernels).
    Cached on the kernel; not used for singular kernels."""
    mesh = getattr(b, "_mu_mesh_cache", None)
    if mesh is not None:
        return mesh
    if b.kind == "table":
        edges = np.asarray(b.params["t"], dtype=float)
        if edges[0] > -1.0:
            edges = np.concatenate([[-1.0], edges])
        if edges[-1] < 1.0:
            edges = np.concatenate([edges, [1.0]])
    else:
        edges = np.linspace(-1.0, 1.0, 257)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    pts = (mid[:, None] + half[:, None] * _MESH_GL_X[None, :]).ravel()
    wts = (half[:, None] * _MESH_GL_W[None, :]).ravel()
    bvals = np.asarray(b(pts), dtype=float)
    b._mu_mesh_cache = (pts, wts * bvals)
    return b._mu_mesh_cache


def _mu_fixed_axis(b, r, cos_psi, n_az):
    """mu_r integrand integrated over S^2 with angle psi between Vhat and uhat.

    Zenith is uhat, so b(cos theta) stays 1-D; the azimuth integral of the
    smooth ((1 +- Vhat.sigma)/2)^r factor is a uniform rule.  Bounded kernels
    go through the cached fixed mesh; singular ones through the adaptive path.
    """
    sin_psi = math.sqrt(max(0.0, 1.0 - cos_psi * cos_psi))
    phis = 2.0 * math.pi * (np.arange(n_az) + 0.5) / n_az
    cphi = np.cos(phis)
    wfun = _mu_integrand_weight(r)

    def ring_avg(t):
        t = np.asarray(t, dtype=float)
        st = np.sqrt(np.maximum(0.0, 1.0 - t * t))
        # Vhat.sigma over the azimuth ring at polar cosine t
        vs = cos_psi * t[:, None] + sin_psi * st[:, None] * cphi[None, :]
        return np.mean(wfun(vs), axis=1)

    if b.sing_plus == 0.0 and b.sing_minus == 0.0:
        pts, bw = _mu_mesh(b)
        return 2.0 * math.pi * float(np.sum(bw * ring_avg(pts)))

    def g(t):
        return np.asarray(b(t), dtype=float) * ring_avg(np.asarray(t, dtype=float))

    def g_u_plus(u):
        u = np.asarray(u, dtype=float)
        return np.asarray(b.eval_u_plus(u), dtype=float) * ring_avg(1.0 - u)

    return 2.0 * math.pi * reduced_integral(g, sing_plus=b.sing_plus,
                                            sing_minus=b.sing_minus,
                                            breakpoints=b.params.get("t", ()),
                                            g_u_plus=g_u_plus)


def contractive_factor(b, r):
    """mu_r: angular average of ((1-Vhat.sigma)/2)^r + ((1+Vhat.sigma)/2)^r
    against b(uhat.sigma), maximized over the axis orientation.

    For isotropic b the sup is degenerate and a single 1-D integral is used;
    the general case scans the angle between Vhat and uhat and refines the
    best bracket by golden-section search to 1e-8.
    """
    if r < 1:
        raise ValueError("contractive factor defined for r >= 1")
    if b.d != 3:
        raise NotImplementedError("mu_r maximization implemented for d=3")
    if r == 1:
        return angular_l1_norm(b)
    if b.kind == "isotropic":
        return reduced_sphere_integral(b, extra=_mu_integrand_weight(r))

    n_az = 64
    m = 33  # scan of psi in [0, pi/2]; integrand is even about pi/2
    vals = [(_mu_fixed_axis(b, r, math.cos(psi), n_az), psi)
            for psi in np.linspace(0.0, math.pi / 2, m)]
    best = max(vals, key=lambda p: p[0])
    i = vals.index(best)
    lo = vals[max(i - 1, 0)][1]
    hi = vals[min(i + 1, m - 1)][1]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, c = lo, hi
    x1 = c - invphi * (c - a)
    x2 = a + invphi * (c - a)
    f1 = _mu_fixed_axis(b, r, math.cos(x1), n_az)
    f2 = _mu_fixed_axis(b, r, math.cos(x2), n_az)
    while c - a > 1e-8:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (c - a)
            f2 = _mu_fixed_axis(b, r, math.cos(x2), n_az)
        else:
            c, x2, f2 = x2, x1, f1
            x1 = c - invphi * (c - a)
            f1 = _mu_fixed_axis(b, r, math.cos(x1), n_az)
    # refine the azimuth rule at the maximizer until stable
    psi = 0.5 * (a + c)
    prev = _mu_fixed_axis(b, r, math.cos(psi), n_az)
    while n_az <= 1024:
        n_az *= 2
        cur = _mu_fixed_axis(b, r, math.cos(psi), n_az)
        if abs(cur - prev) <= REL_TOL * max(abs(cur), 1e-300):
            return cur
        prev = cur
    return prev


def contractive_factor_upper(b, p, r):
    """Closed-form upper bound for mu_r from the L^p norm of b:
    2^((2p-1)/p) ||b||_p |S^{d-2}|^((p-1)/p) ((p-1)/(p(1+r)-1))^((p-1)/p),
    with the p = inf limit 4 ||b||_inf |S^{d-2}| / (1+r).
    """
    if r <= 0:
        raise ValueError("r must be positive")
    area = sphere_area(b.d - 2)
    if np.isinf(p):
        return 4.0 * b.linf() * area / (1.0 + r)
    if p <= 1:
        raise ValueError("upper bound needs p > 1 (use mu_1 = ||b||_1 for p = 1)")
    q = (p - 1.0) / p
    norm = angular_lp_norm(b, p)
    return 2.0 ** ((2 * p - 1) / p) * norm * area**q * ((p - 1) / (p * (1 + r) - 1)) ** q


def _conjugate(p):
    if p == 1:
        return math.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1.0)


def young_constant(b, p, q, r):
    """Young convolution constant C_b(p, q) for the gain operator:

    C_b = (int ((1+t)/2)^(-d/(2r')) b)^(r'/p') * (int ((1-t)/2)^(-d/(2r')) b)^(r'/q')

    with the conventions C_b(1,1) = ||b||_1 and (.)^0 = 1 when p = 1 or q = 1.
    """
    for name, v in (("p", p), ("q", q), ("r", r)):
        if not (1 <= v or np.isinf(v)):
            raise ExponentMismatchError(f"{name} must be in [1, inf], got {v}")
    lhs = (0.0 if np.isinf(p) else 1.0 / p) + (0.0 if np.isinf(q) else 1.0 / q)
    rhs = 1.0 + (0.0 if np.isinf(r) else 1.0 / r)
    if abs(lhs - rhs) > 1e-12:
        raise ExponentMismatchError(
            f"Young relation 1/p + 1/q = 1 + 1/r violated: {lhs} vs {rhs}")
    if p == 1 and q == 1:
        return angular_l1_norm(b)
    rp = _conjugate(r)
    pp = _conjugate(p)
    qp = _conjugate(q)
    alpha = 0.0 if np.isinf(rp) else b.d / (2.0 * rp)
    exp_p = 0.0 if np.isinf(pp) else rp / pp
    exp_q = 0.0 if np.isinf(qp) else rp / qp
    out = 1.0
    if exp_p != 0.0:
        out *= reduced_sphere_integral(b, alpha_plus=alpha) ** exp_p
    if exp_q != 0.0:
        out *= reduced_sphere_integral(b, alpha_minus=alpha) ** exp_q
    return out


# ---------------------------------------------------------------------------
# impact <-> scattering representation
# ---------------------------------------------------------------------------


def impact_to_scattering(b_eta, d=3):
    """Exchange the angular kernel from impact-direction to scattering-direction
    coordinates: b_sigma(t) = 2^(-d/2) (1-t)^(-(d-2)/2) b_eta(sqrt((1-t)/2)).
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    ex = (d - 2) / 2.0

    def f(t):
        t = np.asarray(t, dtype=float)
        c = np.sqrt(np.clip((1.0 - t) / 2.0, 0.0, 1.0))
        val = np.asarray(b_eta(c), dtype=float) * 2.0 ** (-d / 2.0)
        if ex != 0.0:
            val = val * np.maximum(1.0 - t, 1e-300) ** (-ex)
        return val

    def f_u(u):
        u = np.asarray(u, dtype=float)
        c = np.sqrt(u / 2.0)
        val = np.asarray(b_eta(c), dtype=float) * 2.0 ** (-d / 2.0)
        if ex != 0.0:
            val = val * u ** (-ex)
        return val

    # endpoint power at t=1 set by the transform weight unless b_eta vanishes there
    try:
        v0 = float(np.asarray(b_eta(np.array([0.0]))).ravel()[0])
    except Exception:
        v0 = 1.0
    sing = ex if v0 != 0.0 else 0.0
    return AngularKernel(f, d=d, kind="scattering-transform", sing_plus=sing,
                         func_u_plus=f_u)


def scattering_to_impact(b_sigma, d=3):
    """Inverse of impact_to_scattering: b_eta(c) = 2^(d/2) (2c^2)^((d-2)/2) b_sigma(1-2c^2)."""
    ex = (d - 2) / 2.0

    def f(c):
        c = np.asarray(c, dtype=float)
        t = 1.0 - 2.0 * c * c
        return 2.0 ** (d / 2.0) * (2.0 * c * c) ** ex * np.asarray(b_sigma(t), dtype=float)

    return f


# ---------------------------------------------------------------------------
# spherical product quadrature
# ---------------------------------------------------------------------------


class SphereQuadrature:
    """Product Gauss-Legendre (polar cosine) x uniform (azimuth) rule on S^2.

    Exact on spherical polynomials up to degree min(2*n_polar-1, n_azimuth-1);
    weights sum to 4*pi and the node set is symmetric under sigma -> -sigma
    when n_azimuth is even.
    """

    def __init__(self, n_polar=12, n_azimuth=24):
        if n_polar < 1 or n_azimuth < 1:
            raise ValueError("need at least one node per factor")
        x, w = np.polynomial.legendre.leggauss(n_polar)
        phi = 2.0 * math.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
        st = np.sqrt(1.0 - x * x)
        nodes = np.empty((n_polar * n_azimuth, 3))
        weights = np.empty(n_polar * n_azimuth)
        k = 0
        for i in range(n_polar):
            for j in range(n_azimuth):
                nodes[k, 0] = st[i] * math.cos(phi[j])
                nodes[k, 1] = st[i] * math.sin(phi[j])
                nodes[k, 2] = x[i]
                weights[k] = w[i] * 2.0 * math.pi / n_azimuth
                k += 1
        self.n_polar = n_polar
        self.n_azimuth = n_azimuth
        self.nodes = nodes
        self.weights = weights
        self.order = min(2 * n_polar - 1, n_azimuth - 1)

    def __len__(self):
        return self.weights.size

    def integrate(self, fvals):
        """Sum_j w_j f_j by pairwise (numpy) summation."""
        return float(np.sum(self.weights * fvals))

    def weighted_b(self, b, axis):
        """Quadrature weights times b(axis . sigma_j) for a unit axis."""
        t = self.nodes @ np.asarray(axis, dtype=float)
        return self.weights * np.asarray(b(np.clip(t, -1.0, 1.0)), dtype=float)


def monomial_sphere_integral(px, py, pz):
    """Exact int_{S^2} x^px y^py z^pz dsigma (zero for any odd power)."""
    if px % 2 or py % 2 or pz % 2:
        return 0.0
    a, b, c = px // 2, py // 2, pz // 2

    def dfact(m):
        out = 1
        while m > 1:
            out *= m
            m -= 2
        return out

    num = dfact(2 * a - 1) * dfact(2 * b - 1) * dfact(2 * c - 1)
    return 4.0 * math.pi * num / dfact(2 * (a + b + c) + 1)
