"""Collision operator: geometry, direct quadrature, Carleman gain, and the
Maxwell-molecule Fourier (Bobylev) evaluator.

Three independent numerical routes to Q(f,g):

* ``collide_direct``  - gather quadrature over source pairs and scattering
  directions with trilinear interpolation at the post-collision points;
* ``collide_carleman_gain`` - the gain term as an integral over source points
  and orthogonal planes (truncated potential);
* ``collide_bobylev`` - Fourier-space closed form, Maxwell molecules only.

The solver's production path is ``DirectEvaluator``, which evaluates the
same gather sum regrouped by velocity offset (cache-friendly), with the loss
term as an exact FFT convolution and an optional conservative energy-shell
screen for pairs whose contribution is below threshold.
"""

import math
import warnings

import numpy as np

from . import accel
from .grid import Distribution

_loops = accel.get_loops()


class GridMismatchError(ValueError):
    pass


# ---------------------------------------------------------------------------
# collision geometry
# ---------------------------------------------------------------------------


def post_collision(v, vstar, sigma, tol=1e-12):
    """Post-collisional pair v' = V + |u| sigma / 2, v'* = V - |u| sigma / 2."""
    v = np.asarray(v, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    norms = np.linalg.norm(sigma, axis=-1)
    if np.any(np.abs(norms - 1.0) > tol):
        raise ValueError("sigma must be a unit vector (within 1e-12)")
    u = v - vstar
    V = 0.5 * (v + vstar)
    un = np.linalg.norm(u, axis=-1, keepdims=True)
    vp = V + 0.5 * un * sigma
    vps = V - 0.5 * un * sigma
    return vp, vps


def collision_geometry(v, vstar, sigma):
    """Full pre/post geometry with the derived u, V, u^+- vectors."""
    vp, vps = post_collision(v, vstar, sigma)
    u = np.asarray(v, dtype=float) - np.asarray(vstar, dtype=float)
    un = np.linalg.norm(u, axis=-1, keepdims=True)
    um = 0.5 * (un * sigma - u)   # u^- = (|u| sigma - u)/2, v' = v + u^-
    up = 0.5 * (un * sigma + u)   # u^+ = (|u| sigma + u)/2, v'* = v - u^+
    return {
        "u": u, "V": 0.5 * (np.asarray(v) + np.asarray(vstar)),
        "u_minus": um, "u_plus": up, "v_prime": vp, "v_prime_star": vps,
    }


def energy_identity(v, vstar, sigma, r=1.0):
    """Both sides of the scattering-coordinate energy identity:

    lhs = <v'>^2r + <v'*>^2r,
    rhs = E^r [((1 - xi Vhat.sigma)/2)^r + ((1 + xi Vhat.sigma)/2)^r],
    with E = <v>^2 + <v*>^2 and xi = 2|u||V|/E in [0, 1].

    V = 0 needs no special casing: the product xi Vhat.sigma is evaluated as
    2 |u| (V.sigma) / E, with no unit-vector division.
    """
    v = np.asarray(v, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    vp, vps = post_collision(v, vstar, sigma)
    lhs = (1.0 + np.sum(vp * vp, axis=-1)) ** r + (1.0 + np.sum(vps * vps, axis=-1)) ** r
    u = v - vstar
    V = 0.5 * (v + vstar)
    E = 2.0 + np.sum(v * v, axis=-1) + np.sum(vstar * vstar, axis=-1)
    tau = 2.0 * np.linalg.norm(u, axis=-1) * np.sum(V * sigma, axis=-1) / E
    rhs = E**r * (((1.0 - tau) / 2.0) ** r + ((1.0 + tau) / 2.0) ** r)
    return lhs, rhs


def xi_factor(v, vstar):
    """xi = 2|u||V|/E, always in [0, 1]."""
    v = np.asarray(v, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    u = v - vstar
    V = 0.5 * (v + vstar)
    E = 2.0 + np.sum(v * v, axis=-1) + np.sum(vstar * vstar, axis=-1)
    return 2.0 * np.linalg.norm(u, axis=-1) * np.linalg.norm(V, axis=-1) / E


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------


def _pad(arr):
    n = arr.shape[0]
    out = np.zeros((n + 2, n + 2, n + 2))
    out[1:-1, 1:-1, 1:-1] = arr
    return out


def b_table(b, n=4097):
    """Dense (t, b(t)) table for the evaluator loops.

    Tabulated kernels are passed through exactly; smooth kernels get a
    uniform grid; kernels singular at t = 1 get a mesh graded toward the
    endpoint so linear interpolation stays accurate.
    """
    if b.kind == "table":
        return b.params["t"].copy(), b.params["b"].copy()
    if b.sing_plus > 0:
        u = np.geomspace(1e-12, 2.0, n)
        t = np.concatenate([[-1.0], (1.0 - u)[::-1]])
        t = np.unique(t)
    else:
        t = np.linspace(-1.0, 1.0, n)
    tv = t.copy()
    tv[tv >= 1.0 - 1e-12] = 1.0 - 1e-12
    return t, np.asarray(b(tv), dtype=float)


def _check_same_grid(f, g):
    if f.grid != g.grid:
        raise GridMismatchError("f and g must share one velocity grid")


def phi_kernel_array(grid, pot):
    """Phi(|delta|) over the (2n-1)^3 offset cube (self-offset zeroed)."""
    n = grid.n
    off = np.arange(-(n - 1), n) * grid.h
    OX, OY, OZ = np.meshgrid(off, off, off, indexing="ij")
    dn = np.sqrt(OX**2 + OY**2 + OZ**2)
    ker = pot(dn)
    ker[n - 1, n - 1, n - 1] = 0.0
    return ker


def offset_convolve(fvals, kernel, h3):
    """sum_j kernel(i - j) g_j h^3 as a zero-padded FFT convolution
    (identical to the direct sum up to roundoff)."""
    n = fvals.shape[0]
    size = [2 * n for _ in range(3)]
    F = np.fft.rfftn(fvals, size)
    K = np.fft.rfftn(kernel, size)
    conv = np.fft.irfftn(F * K, size)
    out = conv[n - 1:2 * n - 1, n - 1:2 * n - 1, n - 1:2 * n - 1]
    return out * h3


def conv_phi(f, pot):
    """(f * Phi)(v) on the grid: the collision-frequency convolution."""
    ker = phi_kernel_array(f.grid, pot)
    return offset_convolve(f.values, ker, f.grid.cell_volume)


def energy_envelope(f, g, nbins=512):
    """Conservative envelope F(E) >= sup { f(x) g(y) : |x|^2 + |y|^2 <= E }.

    Built from per-shell maxima of f and g (one-bin dilation on each side),
    it bounds both the pre-collision product f_i g_j and, through energy
    conservation, the post-collision product f(v')g(v'*) of any pair with
    |v_i|^2 + |v_j|^2 = E.  Used to screen negligible pairs.
    """
    e2 = f.grid.speed2.ravel()
    emax = 2.0 * float(e2.max()) + 1e-12
    de = nbins / emax

    def shell_max(vals):
        sm = np.zeros(nbins)
        bi = np.minimum((e2 * de).astype(np.int64), nbins - 1)
        np.maximum.at(sm, bi, np.abs(vals.ravel()))
        # dilate one bin each side (no wraparound), then nonincreasing tail
        dil = sm.copy()
        dil[1:] = np.maximum(dil[1:], sm[:-1])
        dil[:-1] = np.maximum(dil[:-1], sm[1:])
        return np.maximum.accumulate(dil[::-1])[::-1]

    sf = shell_max(f.values)
    sg = shell_max(g.values)
    env = np.zeros(nbins)
    for bsum in range(nbins):
        b1 = np.arange(0, min(bsum + 2, nbins))
        b2 = np.minimum(np.maximum(bsum - b1, 0), nbins - 1)
        env[bsum] = float(np.max(sf[b1] * sg[b2]))
    env = np.maximum.accumulate(env[::-1])[::-1]
    return env, de


# ---------------------------------------------------------------------------
# direct (gather) evaluator
# ---------------------------------------------------------------------------


def collide_direct(f, g, pot, b, squad, screen_tol=0.0, parts=False):
    """Direct quadrature of Q(f,g) on every output node:

    Q_i = sum_j sum_sigma w h^3 Phi(|v_i - v_j|) b(uhat.sigma)
          [f(v') g(v'*) - f_i g_j]

    with trilinear interpolation (zero extension) at the off-grid points.
    screen_tol > 0 skips pairs whose energy-shell envelope falls below
    screen_tol times its peak; parts=True returns (Q, gain, loss).
    """
    _check_same_grid(f, g)
    grid = f.grid
    t_tab, bt = b_table(b)
    if screen_tol > 0.0:
        env, de = energy_envelope(f, g)
        thresh = screen_tol * float(env.max())
    else:
        env, de = np.ones(1), 1.0
        thresh = 0.0
    gain, loss = _loops.gather_parts(
        _pad(f.values), _pad(g.values), grid.axis, squad.weights, squad.nodes,
        pot.gamma, pot.eps, grid.cell_volume, t_tab, bt, env, de, thresh)
    Q = gain - loss
    if parts:
        return Q, gain, loss
    return Q


class DirectEvaluator:
    """Streaming direct evaluator for time stepping.

    Precomputes, per (offset delta, sigma) pair, the scattering stencil and
    the combined weight h^3 w_sigma Phi(|delta|) b(deltahat.sigma); each
    evaluation sweeps output blocks per stencil (identical terms to
    collide_direct's gather sum) and computes the loss term by exact FFT
    convolution against the direction-averaged kernel.
    """

    def __init__(self, grid, pot, b, squad, screen_tol=1e-9, quadratic=False):
        self.grid = grid
        self.pot = pot
        self.b = b
        self.squad = squad
        self.screen_tol = float(screen_tol)
        # quadratic=True merges each sigma with its antipode (valid for
        # Q(f, f) only, where the two products coincide): half the entries
        self.quadratic = bool(quadratic)
        self.b_l1_quad = None
        self._build()

    def _sigma_set(self):
        squad = self.squad
        if not self.quadratic:
            return squad.nodes, squad.weights, None
        nodes = squad.nodes
        used = np.zeros(len(squad), dtype=bool)
        keep, anti = [], []
        for m in range(len(squad)):
            if used[m]:
                continue
            dots = nodes @ nodes[m]
            am = int(np.argmin(dots))
            if dots[am] > -1.0 + 1e-12 or used[am]:
                raise ValueError("quadratic merge needs a +-sigma symmetric rule")
            used[m] = used[am] = True
            keep.append(m)
            anti.append(am)
        return nodes[keep], squad.weights[keep], np.asarray(anti)

    def _build(self):
        grid, pot, squad = self.grid, self.pot, self.squad
        n = grid.n
        h = grid.h
        t_tab, bt = b_table(self.b)
        off = np.arange(-(n - 1), n)
        OX, OY, OZ = np.meshgrid(off, off, off, indexing="ij")
        olist = np.stack([OX.ravel(), OY.ravel(), OZ.ravel()], axis=1).astype(np.int64)
        dvec = olist * h
        dn = np.linalg.norm(dvec, axis=1)
        phi = pot(dn)
        phi[dn == 0.0] = 0.0
        keep_o = phi > 0.0
        olist = olist[keep_o]
        dvec = dvec[keep_o]
        dn = dn[keep_o]
        phi = phi[keep_o]
        nofs = olist.shape[0]
        dhat = dvec / dn[:, None]

        nodes, weights, anti = self._sigma_set()
        M = nodes.shape[0]
        K = np.empty((nofs, M))
        ax = np.empty((nofs, M))
        ay = np.empty((nofs, M))
        az = np.empty((nofs, M))
        wdir = np.zeros(nofs)  # sum_sigma w b(deltahat.sigma), per offset
        for m in range(M):
            s = nodes[m]
            t = np.clip(dhat @ s, -1.0, 1.0)
            wb = weights[m] * np.interp(t, t_tab, bt)
            if anti is not None:
                wb = wb + self.squad.weights[anti[m]] * np.interp(
                    np.clip(-t, -1.0, 1.0), t_tab, bt)
            K[:, m] = grid.cell_volume * phi * wb
            wdir += wb
            # v' = v_i + a with a = -delta/2 + |delta| sigma / 2
            avec = -0.5 * dvec + 0.5 * dn[:, None] * s[None, :]
            ax[:, m] = avec[:, 0]
            ay[:, m] = avec[:, 1]
            az[:, m] = avec[:, 2]

        live = K.ravel() != 0.0
        counts = live.reshape(nofs, M).sum(axis=1)
        self.olist = olist
        self.ostart = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.K = K.ravel()[live]
        self.ax = ax.ravel()[live]
        self.ay = ay.ravel()[live]
        self.az = az.ravel()[live]
        self.dn2 = dn**2
        self.b_l1_quad = float(squad.integrate(np.interp(
            np.clip(squad.nodes @ np.array([0.0, 0.0, 1.0]), -1, 1), t_tab, bt)))
        # loss kernel: h^3 Phi(|delta|) sum_sigma w b(deltahat.sigma)
        ker = np.zeros((2 * n - 1,) * 3)
        idx = (olist[:, 0] + n - 1, olist[:, 1] + n - 1, olist[:, 2] + n - 1)
        ker[idx] = phi * wdir
        self._loss_kernel = ker

    def _oboxes(self, f, g):
        grid = self.grid
        n = grid.n
        nofs = self.olist.shape[0]
        obox = np.zeros((nofs, 6), dtype=np.int64)
        # source node j = i - o must lie in the box: i in [o, n-1+o] per axis
        for k in range(3):
            obox[:, 2 * k] = np.maximum(0, self.olist[:, k])
            obox[:, 2 * k + 1] = np.minimum(n - 1, n - 1 + self.olist[:, k])
        if self.screen_tol <= 0.0:
            return obox, np.full(nofs, -1.0)
        env, de = energy_envelope(f, g)
        thresh = self.screen_tol * float(env.max())
        kept = np.nonzero(env >= thresh)[0]
        e_tau = (kept[-1] + 1) / de if kept.size else 0.0
        r2 = 0.5 * (e_tau - 0.5 * self.dn2)
        empty = r2 <= 0.0
        obox[empty, 0] = 1
        obox[empty, 1] = 0
        return obox, r2

    def parts(self, f, g=None):
        """(gain, loss) fields of Q(f, g) (g defaults to f)."""
        if g is None:
            g = f
        elif self.quadratic and g is not f:
            raise ValueError("this evaluator was built for the quadratic "
                             "case Q(f, f) only")
        _check_same_grid(f, g)
        if f.grid != self.grid:
            raise GridMismatchError("evaluator built for a different grid")
        obox, orad2 = self._oboxes(f, g)
        gain = _loops.stream_gain(
            _pad(f.values), _pad(g.values), self.grid.n, self.grid.axis[0],
            1.0 / self.grid.h, self.grid.h, self.olist, self.ostart, self.K,
            self.ax, self.ay, self.az, obox, orad2)
        loss = f.values * offset_convolve(g.values, self._loss_kernel,
                                          self.grid.cell_volume)
        return gain, loss

    def __call__(self, f, g=None):
        gain, loss = self.parts(f, g)
        return gain - loss


# ---------------------------------------------------------------------------
# weak (Maxwell) form
# ---------------------------------------------------------------------------

_PHI_CODES = {"1": 0, "vx": 1, "vy": 2, "vz": 3, "v2": 4, "bracket": 5,
              "logf": 6, "exp": 7}


def weak_form(f, g, phi, pot, b, squad, par1=1.0, par2=0.0, with_scale=False):
    """Weak / Maxwell form of the collision integral:

    1/2 int int f g_* int_sigma [phi(v') + phi(v'*) - phi(v) - phi(v_*)] B

    by direct summation over source pairs; phi is evaluated exactly at the
    post-collision points (no interpolation).  phi is one of the code names
    "1","vx","vy","vz","v2","bracket" (<v>^(2*par1)), "exp"
    (exp(par2 <v>^(2 par1))), or "logf" (log of trilinearly interpolated f).
    with_scale=True also returns the absolute-integrand scale.
    """
    _check_same_grid(f, g)
    if phi not in _PHI_CODES:
        raise ValueError(f"unknown test function {phi!r}; use {sorted(_PHI_CODES)}")
    t_tab, bt = b_table(b)
    rows, rows_abs = _loops.weak_form_rows(
        f.values, g.values, _pad(f.values), f.grid.axis, squad.weights,
        squad.nodes, pot.gamma, pot.eps, t_tab, bt, _PHI_CODES[phi],
        float(par1), float(par2))
    h6 = f.grid.cell_volume**2
    val = float(np.sum(rows)) * h6
    if with_scale:
        return val, float(np.sum(rows_abs)) * h6
    return val


# ---------------------------------------------------------------------------
# Carleman gain
# ---------------------------------------------------------------------------


def collide_carleman_gain(f, g, pot, b, n_radial=24, n_angular=16,
                          r_max=None, source_tol=0.0):
    """Gain term in Carleman (point x orthogonal plane) coordinates, d = 3.

    Requires the potential bounded away from |u| = 0: a truncated kernel
    Phi = |u|^gamma 1_{|u| >= eps}.  The plane integral uses radial
    Gauss-Legendre on [0, r_max] (default 2 L sqrt(3)) times a uniform
    angular rule; f is interpolated trilinearly.
    """
    _check_same_grid(f, g)
    if pot.form != "truncated" and pot.gamma < 1.0:
        raise ValueError(
            "Carleman gain needs the truncated potential when gamma < 1 "
            "(the 1/|x| weight meets the soft singularity otherwise)")
    grid = f.grid
    if r_max is None:
        r_max = 2.0 * grid.L * math.sqrt(3.0)
    xg, wg = np.polynomial.legendre.leggauss(n_radial)
    rad = 0.5 * r_max * (xg + 1.0)
    radw = 0.5 * r_max * wg
    t_tab, bt = b_table(b)
    gtol = source_tol * float(np.max(np.abs(g.values)))
    return _loops.carleman_gain_loop(
        _pad(f.values), g.values, grid.axis, pot.gamma, pot.eps,
        grid.cell_volume, rad, radw, n_angular, t_tab, bt, gtol,
        grid.L * math.sqrt(3.0))


# ---------------------------------------------------------------------------
# Bobylev (Fourier) evaluator, Maxwell molecules
# ---------------------------------------------------------------------------


class MaxwellOnlyError(ValueError):
    pass


def _boundary_tail_fraction(f):
    v = np.abs(f.values)
    total = float(v.sum()) + 1e-300
    shell = (v[0].sum() + v[-1].sum() + v[:, 0].sum() + v[:, -1].sum()
             + v[:, :, 0].sum() + v[:, :, -1].sum())
    return float(shell) / total


def collide_bobylev(f, g, pot, b, squad=None, pad_factor=2,
                    with_mass_residual=False):
    """Maxwell-molecule collision operator via the Fourier-space formula

    Qhat(zeta) = int_sigma b(zetahat.sigma)[fhat(z+) ghat(z-) - fhat(zeta) ghat(0)]

    with z+- = (zeta +- |zeta| sigma)/2, assembled by spherical quadrature and
    trilinear interpolation in Fourier space, then inverted.  Requires
    gamma = 0; the box is zero-padded by pad_factor to suppress aliasing.
    with_mass_residual=True also returns |Qhat(0)| (mass invariance in
    Fourier, zero by construction up to roundoff).
    """
    from .kernels import SphereQuadrature

    _check_same_grid(f, g)
    if pot.gamma != 0.0:
        raise MaxwellOnlyError("Bobylev evaluator requires gamma = 0")
    if squad is None:
        squad = SphereQuadrature(8, 16)
    for dist, name in ((f, "f"), (g, "g")):
        if _boundary_tail_fraction(dist) > 1e-8:
            warnings.warn(f"boundary tail of {name} exceeds 1e-8 of its mass; "
                          "periodization may alias", stacklevel=2)
    grid = f.grid
    n = grid.n
    N = pad_factor * n
    shift = (N - n) // 2
    h = grid.h

    fp = np.zeros((N, N, N))
    gp = np.zeros((N, N, N))
    sl = slice(shift, shift + n)
    fp[sl, sl, sl] = f.values
    gp[sl, sl, sl] = g.values

    v0 = -pad_factor * grid.L + 0.5 * h
    zeta1 = 2.0 * math.pi * np.fft.fftfreq(N, d=h)
    phase = np.exp(-1j * zeta1 * v0)
    P3 = phase[:, None, None] * phase[None, :, None] * phase[None, None, :]

    def forward(vals):
        return h**3 * P3 * np.fft.fftn(vals)

    order = np.argsort(zeta1)
    zaxis = zeta1[order]
    t_tab, bt = b_table(b)
    fhat = forward(fp)[np.ix_(order, order, order)]
    ghat = forward(gp)[np.ix_(order, order, order)]
    # Gaussian envelope normalization: interpolate fhat e^{+c|zeta|^2} and
    # restore the exact envelope off-grid, so the energy identity
    # |z+|^2 + |z-|^2 = |zeta|^2 cancels the envelopes through the collision
    zn2 = (zaxis[:, None, None] ** 2 + zaxis[None, :, None] ** 2
           + zaxis[None, None, :] ** 2)
    cap = 600.0 / float(zn2.max())

    def env_coef(dist):
        T_eff = max(dist.energy() / (3.0 * dist.mass()), 0.0)
        return min(0.5 * T_eff, cap)

    cf = env_coef(f)
    cg = env_coef(g)
    sf = fhat * np.exp(cf * zn2)
    sg = ghat * np.exp(cg * zn2)
    # the potential is the constant Phi = c_phi = C_phi for Maxwell molecules
    scale = pot(np.array([1.0]))[0]
    qhat_sorted = _loops.bobylev_assemble(np.ascontiguousarray(sf),
                                          np.ascontiguousarray(sg),
                                          np.ascontiguousarray(fhat),
                                          np.ascontiguousarray(ghat),
                                          zaxis, squad.weights, squad.nodes,
                                          t_tab, bt, cf, cg)
    i0 = int(np.round(-zaxis[0] / (zaxis[1] - zaxis[0])))
    qhat0 = abs(qhat_sorted[i0, i0, i0]) * scale
    inv = np.argsort(order)
    qhat = qhat_sorted[np.ix_(inv, inv, inv)]
    qfull = np.fft.ifftn(qhat / P3) / h**3
    q = scale * np.real(qfull[sl, sl, sl])
    if with_mass_residual:
        return q, qhat0
    return q
