"""Velocity-space grid, distributions, and integral functionals.

The grid is uniform and cell-centered on [-L, L)^3 so that nodes come in
exact +-v pairs; all functionals are midpoint-rule sums, second order in h
on smooth data.  The Lebesgue bracket convention is <v> = sqrt(1 + |v|^2),
and the k-th moment is m_k[f] = sum f <v>^(2k) h^3.
"""

import math
import warnings

import numpy as np


class BoxTooSmallError(ValueError):
    """Initial datum leaves more than the tolerated mass outside the box."""


class NegativeDensityError(ValueError):
    """Distribution is more negative than the tracking tolerance allows."""


class OverflowRiskError(ValueError):
    """Exponential weight would overflow double precision on this grid."""


class DivergenceWarning(UserWarning):
    """Exponentially weighted integrand does not decay toward the box edge."""


class VelocityGrid:
    """Cell-centered uniform cube: n points per axis on [-L, L)."""

    def __init__(self, n, L):
        n = int(n)
        if n < 8 or n % 2:
            raise ValueError("n must be an even integer >= 8")
        if L <= 0:
            raise ValueError("half-width L must be positive")
        self.n = n
        self.L = float(L)
        self.h = 2.0 * self.L / n
        self.axis = -self.L + (np.arange(n) + 0.5) * self.h
        X, Y, Z = np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")
        self.X, self.Y, self.Z = X, Y, Z
        self.speed2 = X * X + Y * Y + Z * Z
        self.bracket2 = 1.0 + self.speed2  # <v>^2
        self.cell_volume = self.h**3

    def __eq__(self, other):
        return isinstance(other, VelocityGrid) and self.n == other.n and self.L == other.L

    def __hash__(self):
        return hash((self.n, self.L))

    def integrate(self, values):
        """Midpoint-rule integral of a nodal field."""
        return float(np.sum(values)) * self.cell_volume

    def points(self):
        """(n^3, 3) array of node coordinates, vx varying fastest."""
        return np.stack([self.X.ravel(order="F"), self.Y.ravel(order="F"),
                         self.Z.ravel(order="F")], axis=1)


class Distribution:
    """Grid-sampled density f(v) >= 0 (tiny negatives from time stepping are
    tolerated and tracked, never silently clipped)."""

    NEG_TOL = 1e-12

    def __init__(self, grid, values, tag=""):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n, grid.n, grid.n):
            raise ValueError("values must have shape (n, n, n)")
        self.grid = grid
        self.values = values
        self.tag = tag

    @property
    def min_value(self):
        return float(self.values.min())

    def check_negativity(self):
        vmax = float(self.values.max())
        if vmax <= 0:
            raise NegativeDensityError("distribution has no positive part")
        if self.min_value < -self.NEG_TOL * vmax:
            raise NegativeDensityError(
                f"min f = {self.min_value:.3e} below tolerance for max f = {vmax:.3e}")

    def mass(self):
        return self.grid.integrate(self.values)

    def momentum(self):
        g = self.grid
        return np.array([g.integrate(self.values * g.X),
                         g.integrate(self.values * g.Y),
                         g.integrate(self.values * g.Z)])

    def energy(self):
        """int f |v|^2 dv (kinetic part, no bracket)."""
        return self.grid.integrate(self.values * self.grid.speed2)

    def conserved(self):
        """(mass, momentum[3], energy) vector of the five collision invariants."""
        return np.concatenate([[self.mass()], self.momentum(), [self.energy()]])

    def copy(self, values=None, tag=None):
        return Distribution(self.grid,
                            self.values.copy() if values is None else values,
                            self.tag if tag is None else tag)


# ---------------------------------------------------------------------------
# standard data
# ---------------------------------------------------------------------------


def maxwellian(grid, rho=1.0, u=(0.0, 0.0, 0.0), T=1.0, tag="maxwellian"):
    """rho (2 pi T)^(-3/2) exp(-|v-u|^2 / 2T) sampled on the grid.

    Warns when the analytic mass outside the box exceeds 1e-8 of rho and
    raises when it exceeds 1e-4 (box too small for this datum).
    """
    if rho <= 0 or T <= 0:
        raise ValueError("need rho > 0 and T > 0")
    u = np.asarray(u, dtype=float)
    g = grid
    q2 = (g.X - u[0]) ** 2 + (g.Y - u[1]) ** 2 + (g.Z - u[2]) ** 2
    vals = rho * (2 * math.pi * T) ** -1.5 * np.exp(-q2 / (2 * T))

    s = math.sqrt(T)
    inside = 1.0
    for ui in u:
        a = (grid.L - ui) / s
        b = (-grid.L - ui) / s
        inside *= 0.5 * (math.erf(a / math.sqrt(2)) - math.erf(b / math.sqrt(2)))
    tail = rho * (1.0 - inside)
    if tail > 1e-4 * rho:
        raise BoxTooSmallError(
            f"boundary tail mass {tail:.2e} exceeds 1e-4 of rho; enlarge L")
    if tail > 1e-8 * rho:
        warnings.warn(f"boundary tail mass {tail:.2e} exceeds 1e-8 of rho",
                      stacklevel=2)
    return Distribution(grid, vals, tag=tag)


def bimaxwellian(grid, components, tag="bimaxwellian"):
    """Sum of displaced Maxwellians; components = [(rho, u, T), ...]."""
    vals = np.zeros((grid.n,) * 3)
    for rho, u, T in components:
        vals += maxwellian(grid, rho, u, T).values
    return Distribution(grid, vals, tag=tag)


def power_tail(grid, p=5.4, scale=1.0, rho=1.0, tag="power-tail"):
    """Datum rho * c * <v/scale>^(-p), truncated by the box.

    Continuum moments m_k are finite only for 2k < p - 3, which makes this
    the slow-tail datum for moment/tail generation scenarios; on the grid all
    moments are finite through the box truncation.
    """
    if p <= 3:
        raise ValueError("need p > 3 for integrable datum")
    br = 1.0 + grid.speed2 / scale**2
    vals = br ** (-p / 2.0)
    m = grid.integrate(vals)
    return Distribution(grid, vals * (rho / m), tag=tag)


def matched_maxwellian(dist, tag="matched"):
    """Maxwellian with the same mass, bulk velocity and temperature as dist."""
    rho = dist.mass()
    u = dist.momentum() / rho
    T = (dist.energy() / rho - float(u @ u)) / 3.0
    return maxwellian(dist.grid, rho, u, T, tag=tag)


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------


def moment(dist, k, s=1.0):
    """Lebesgue moment m_{sk}[f] = int f <v>^(2 s k) dv (k = 0 gives mass)."""
    if s <= 0 or s > 1:
        raise ValueError("order scale s must lie in (0, 1]")
    w = dist.grid.bracket2 ** (s * k)
    return dist.grid.integrate(dist.values * w)


def monomial_moment(dist, powers):
    """int f vx^a vy^b vz^c dv, for the Maxwell-molecule moment ODE oracle."""
    a, b, c = powers
    g = dist.grid
    w = g.X**a * g.Y**b * g.Z**c
    return g.integrate(dist.values * w)


def lp_norm(dist, p, ell=0.0):
    """Weighted norm ||<v>^ell f||_{L^p}; p = inf returns max <v>^ell |f|."""
    g = dist.grid
    w = g.bracket2 ** (ell / 2.0)
    if np.isinf(p):
        return float(np.max(w * np.abs(dist.values)))
    if p < 1:
        raise ValueError("p must be >= 1")
    return (g.integrate((w * np.abs(dist.values)) ** p)) ** (1.0 / p)


def entropy(dist):
    """H(f) = int f log f dv; cells with f <= 0 contribute 0 (x log x -> 0)."""
    dist.check_negativity()
    v = dist.values
    pos = v > 0
    out = np.zeros_like(v)
    out[pos] = v[pos] * np.log(v[pos])
    return dist.grid.integrate(out)


def relative_entropy(dist, ref):
    """H(f | M) = int f log(f/M) dv >= 0 for mass-matched pairs."""
    dist.check_negativity()
    f = dist.values
    M = ref.values
    pos = f > 0
    if np.any(M[pos] <= 0):
        raise ValueError("reference must be positive where f is")
    out = np.zeros_like(f)
    out[pos] = f[pos] * np.log(f[pos] / M[pos])
    return dist.grid.integrate(out)


def l1_distance(dist, ref):
    return dist.grid.integrate(np.abs(dist.values - ref.values))


def ck_distance_bound(dist, ref):
    """Csiszar-Kullback bound sqrt(2 H(f|M)) dominating ||f - M||_{L^1}."""
    h = relative_entropy(dist, ref)
    return math.sqrt(max(2.0 * h, 0.0))


def exponential_moment(dist, s, z):
    """E_s[f](z) = int f exp(z <v>^(2s)) dv; z = 0 returns the mass.

    Raises when the weight would overflow double precision; emits
    DivergenceWarning when the summand grows toward the box boundary, the
    numerical signature of a divergent continuum integral (e.g. Gaussian
    data with s = 1, z >= 1/2T).  The finite grid value is still returned.
    """
    if z < 0:
        raise ValueError("rate z must be >= 0")
    if s <= 0 or s > 1:
        raise ValueError("order scale s must lie in (0, 1]")
    g = dist.grid
    if z == 0.0:
        return dist.mass()
    wmax = z * (1.0 + 3.0 * g.L**2) ** s
    if wmax >= 700.0:
        raise OverflowRiskError(
            f"z <Lsqrt3>^(2s) = {wmax:.1f} >= 700 would overflow")
    summand = dist.values * np.exp(z * g.bracket2**s)
    interior = max(float(np.max(np.abs(summand[2:-2, 2:-2, 2:-2]))), 1e-300)
    shell = np.abs(summand).max() if g.n <= 4 else max(
        float(np.abs(summand[0]).max()), float(np.abs(summand[-1]).max()),
        float(np.abs(summand[:, 0]).max()), float(np.abs(summand[:, -1]).max()),
        float(np.abs(summand[:, :, 0]).max()), float(np.abs(summand[:, :, -1]).max()))
    if shell > 1e-3 * interior:
        warnings.warn(
            "exponential weight does not decay toward the box boundary; the "
            "continuum integral may diverge (grid value is truncated)",
            DivergenceWarning, stacklevel=2)
    return g.integrate(summand)


def save_snapshot(dist, path, fmt="csv"):
    """Write (vx, vy, vz, f) quadruples, vx varying fastest.

    fmt="csv" writes a text table with a header; fmt="bin" writes flat
    little-endian float64 quadruples in the same row order.
    """
    pts = dist.grid.points()
    quad = np.column_stack([pts, dist.values.ravel(order="F")])
    if fmt == "csv":
        with open(path, "w") as fh:
            fh.write("vx,vy,vz,f\n")
            for row in quad:
                fh.write(f"{row[0]:.17g},{row[1]:.17g},{row[2]:.17g},{row[3]:.17g}\n")
    elif fmt == "bin":
        quad.astype("<f8").tofile(path)
    else:
        raise ValueError(f"unknown snapshot format {fmt!r}")


def load_snapshot(path, fmt="csv"):
    """Read a snapshot written by save_snapshot; the grid is reconstructed
    from the coordinate columns."""
    if fmt == "csv":
        quad = np.loadtxt(path, delimiter=",", skiprows=1)
    elif fmt == "bin":
        quad = np.fromfile(path, dtype="<f8").reshape(-1, 4)
    else:
        raise ValueError(f"unknown snapshot format {fmt!r}")
    xs = np.unique(quad[:, 0])
    n = xs.size
    h = xs[1] - xs[0]
    L = -(xs[0] - 0.5 * h)
    grid = VelocityGrid(n, L)
    vals = quad[:, 3].reshape((n, n, n), order="F")
    return Distribution(grid, vals, tag="snapshot")


def ledger(dist, moments=(), lp=(), exp_orders=(), ref=None):
    """Snapshot of the configured functionals at one time instant."""
    out = {
        "mass": dist.mass(),
        "momentum": dist.momentum().tolist(),
        "energy": dist.energy(),
        "min_f": dist.min_value,
    }
    out["moments"] = {f"{k:g}": moment(dist, k) for k in moments}
    out["lp"] = {f"{p:g}_{ell:g}": lp_norm(dist, p, ell) for p, ell in lp}
    out["exp"] = {f"{s:g}_{z:g}": exponential_moment(dist, s, z)
                  for s, z in exp_orders}
    if ref is not None:
        out["entropy"] = entropy(Distribution(dist.grid, np.maximum(dist.values, 0.0)))
        out["rel_entropy"] = relative_entropy(
            Distribution(dist.grid, np.maximum(dist.values, 0.0)), ref)
    return out
