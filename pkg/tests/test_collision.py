import math
import warnings

import numpy as np
import pytest

from homobol import accel
from homobol.grid import (Distribution, VelocityGrid, bimaxwellian,
                          maxwellian, moment)
from homobol.kernels import AngularKernel, PotentialKernel, SphereQuadrature
from homobol.collision import (DirectEvaluator, GridMismatchError,
                               MaxwellOnlyError, collide_bobylev,
                               collide_carleman_gain, collide_direct,
                               collision_geometry, conv_phi, energy_envelope,
                               energy_identity, offset_convolve,
                               phi_kernel_array, post_collision, weak_form,
                               xi_factor)
from homobol.rng import SplitMix64

accel.set_threads(2)
warnings.filterwarnings("ignore", message="boundary tail")

B_ISO = AngularKernel.isotropic(1.0 / (4 * math.pi))
HS = PotentialKernel(1.0)
SQ = SphereQuadrature(4, 8)


def small_setup(n=12, L=4.0, T=0.5):
    grid = VelocityGrid(n, L)
    f = bimaxwellian(grid, [(0.5, (0.6, 0, 0), T), (0.5, (-0.6, 0, 0), T)])
    return grid, f


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


def test_post_collision_grazing_and_head_on():
    v = np.array([0.3, -0.4, 1.0])
    w = np.array([-1.0, 0.2, 0.1])
    u = v - w
    uhat = u / np.linalg.norm(u)
    vp, vps = post_collision(v, w, uhat)
    assert np.allclose(vp, v, atol=1e-14) and np.allclose(vps, w, atol=1e-14)
    vp, vps = post_collision(v, w, -uhat)
    assert np.allclose(vp, w, atol=1e-14) and np.allclose(vps, v, atol=1e-14)


def test_post_collision_hand_example():
    vp, vps = post_collision([1, 0, 0], [-1, 0, 0], [0, 1, 0])
    assert np.allclose(vp, [0, 1, 0]) and np.allclose(vps, [0, -1, 0])


def test_post_collision_requires_unit_sigma():
    with pytest.raises(ValueError):
        post_collision([1, 0, 0], [0, 0, 0], [0, 1.1, 0])


def test_geometry_invariants_random():
    rng = np.random.default_rng(SplitMix64(7).integer())
    v = rng.normal(size=(4096, 3))
    w = rng.normal(size=(4096, 3))
    s = rng.normal(size=(4096, 3))
    s /= np.linalg.norm(s, axis=1, keepdims=True)
    geo = collision_geometry(v, w, s)
    vp, vps = geo["v_prime"], geo["v_prime_star"]
    assert np.allclose(vp + vps, v + w, atol=1e-13)
    e_pre = np.sum(v * v, 1) + np.sum(w * w, 1)
    e_post = np.sum(vp * vp, 1) + np.sum(vps * vps, 1)
    assert np.max(np.abs(e_post - e_pre) / np.maximum(e_pre, 1)) < 1e-13
    dot = np.sum(geo["u_minus"] * geo["u_plus"], axis=1)
    assert np.max(np.abs(dot)) < 1e-13
    up = np.linalg.norm(vp - vps, axis=1)
    uu = np.linalg.norm(geo["u"], axis=1)
    assert np.allclose(up, uu, atol=1e-13)


def test_energy_identity_exact_r1():
    rng = np.random.default_rng(3)
    v = rng.normal(size=(512, 3))
    w = rng.normal(size=(512, 3))
    s = rng.normal(size=(512, 3))
    s /= np.linalg.norm(s, axis=1, keepdims=True)
    lhs, rhs = energy_identity(v, w, s, r=1.0)
    assert np.max(np.abs(lhs - rhs) / np.abs(lhs)) < 1e-12


def test_energy_identity_hand_case():
    # v=(1,0,0), v*=0, sigma=e_z: E = 3, xi = 2 * 1 * (1/2) / 3 = 1/3
    lhs, rhs = energy_identity([1, 0, 0], [0, 0, 0], [0, 0, 1], r=1.7)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert xi_factor([1, 0, 0], [0, 0, 0]) == pytest.approx(1.0 / 3.0, rel=1e-14)


def test_xi_in_unit_interval_bulk():
    rng = np.random.default_rng(11)
    v = rng.normal(scale=3.0, size=(10**6, 3))
    w = rng.normal(scale=3.0, size=(10**6, 3))
    xi = xi_factor(v, w)
    assert xi.min() >= 0.0 and xi.max() <= 1.0 + 1e-15


def test_energy_identity_general_r_random():
    rng = np.random.default_rng(5)
    v = rng.normal(size=(256, 3))
    w = rng.normal(size=(256, 3))
    s = rng.normal(size=(256, 3))
    s /= np.linalg.norm(s, axis=1, keepdims=True)
    for r in (1.0, 2.0, 3.5):
        lhs, rhs = energy_identity(v, w, s, r=r)
        assert np.allclose(lhs, rhs, rtol=1e-12)


# ---------------------------------------------------------------------------
# direct evaluator
# ---------------------------------------------------------------------------


def test_direct_parts_signs_and_loss_factorization():
    grid, f = small_setup()
    Q, gain, loss = collide_direct(f, f, HS, B_ISO, SQ, parts=True)
    assert gain.min() >= 0.0
    assert loss.min() >= 0.0
    assert np.allclose(Q, gain - loss)
    # loss = ||b||_1 f (f * Phi) exactly for isotropic b (quadrature sums
    # the constant exactly)
    fact = f.values * conv_phi(f, HS) * 1.0
    assert np.max(np.abs(loss - fact)) <= 1e-10 * fact.max()


def test_direct_mass_defect_second_order():
    # int Q dv = 0 holds in the continuum; the gather quadrature carries an
    # O(h^2) defect whose size is fixed here by the two-resolution oracle
    defects = []
    for n in (10, 14):
        grid = VelocityGrid(n, 4.0)
        f = bimaxwellian(grid, [(0.5, (0.6, 0, 0), 0.5), (0.5, (-0.6, 0, 0), 0.5)])
        Q, gain, _ = collide_direct(f, f, HS, B_ISO, SQ, parts=True)
        defects.append(abs(grid.integrate(Q)) / grid.integrate(gain))
    ratio = defects[1] / defects[0]
    expected = (10.0 / 14.0) ** 2
    assert defects[1] < defects[0]
    assert ratio == pytest.approx(expected, abs=0.35)


def test_direct_bilinearity():
    grid, f = small_setup(n=10)
    g = maxwellian(grid, 0.7, (0.2, 0.1, 0), 0.6)
    sq = SphereQuadrature(3, 6)
    Qsum = collide_direct(Distribution(grid, f.values + g.values),
                          Distribution(grid, f.values + g.values), HS, B_ISO, sq)
    Qff = collide_direct(f, f, HS, B_ISO, sq)
    Qfg = collide_direct(f, g, HS, B_ISO, sq)
    Qgf = collide_direct(g, f, HS, B_ISO, sq)
    Qgg = collide_direct(g, g, HS, B_ISO, sq)
    assert np.allclose(Qsum, Qff + Qfg + Qgf + Qgg, atol=1e-12 * np.abs(Qsum).max())


def test_direct_grid_mismatch():
    grid, f = small_setup(n=10)
    other = VelocityGrid(12, 4.0)
    g = maxwellian(other, 1.0, (0, 0, 0), 0.5)
    with pytest.raises(GridMismatchError):
        collide_direct(f, g, HS, B_ISO, SQ)


def test_stream_matches_gather_and_screen_error():
    grid, f = small_setup(n=12)
    Q, gain, loss = collide_direct(f, f, HS, B_ISO, SQ, parts=True)
    for quadratic in (False, True):
        ev = DirectEvaluator(grid, HS, B_ISO, SQ, screen_tol=0.0,
                             quadratic=quadratic)
        g2, l2 = ev.parts(f)
        assert np.max(np.abs(g2 - gain)) <= 1e-12 * gain.max()
        assert np.max(np.abs(l2 - loss)) <= 1e-12 * loss.max()
    ev = DirectEvaluator(grid, HS, B_ISO, SQ, screen_tol=1e-8, quadratic=True)
    g3, _ = ev.parts(f)
    assert np.max(np.abs(g3 - gain)) <= 1e-6 * gain.max()


def test_envelope_dominates_products():
    grid, f = small_setup(n=12)
    env, de = energy_envelope(f, f)
    rng = np.random.default_rng(0)
    idx = rng.integers(0, grid.n, size=(4000, 6))
    e2 = grid.speed2
    vals = f.values
    ei = e2[idx[:, 0], idx[:, 1], idx[:, 2]]
    ej = e2[idx[:, 3], idx[:, 4], idx[:, 5]]
    fi = vals[idx[:, 0], idx[:, 1], idx[:, 2]]
    gj = vals[idx[:, 3], idx[:, 4], idx[:, 5]]
    bins = np.minimum(((ei + ej) * de).astype(int), env.size - 1)
    assert np.all(env[bins] >= fi * gj * (1 - 1e-12))


def test_offset_convolve_matches_direct_sum():
    grid, f = small_setup(n=10)
    ker = phi_kernel_array(grid, HS)
    fast = offset_convolve(f.values, ker, grid.cell_volume)
    n = grid.n
    slow = np.zeros_like(fast)
    vals = f.values
    for ox in range(-(n - 1), n):
        for oy in range(-(n - 1), n):
            src_x = slice(max(0, -ox), min(n, n - ox))
            dst_x = slice(max(0, ox), min(n, n + ox))
            src_y = slice(max(0, -oy), min(n, n - oy))
            dst_y = slice(max(0, oy), min(n, n + oy))
            for oz in range(-(n - 1), n):
                src_z = slice(max(0, -oz), min(n, n - oz))
                dst_z = slice(max(0, oz), min(n, n + oz))
                k = ker[ox + n - 1, oy + n - 1, oz + n - 1]
                if k == 0.0:
                    continue
                slow[dst_x, dst_y, dst_z] += k * vals[src_x, src_y, src_z]
    slow *= grid.cell_volume
    assert np.max(np.abs(fast - slow)) <= 1e-12 * np.abs(slow).max()


# ---------------------------------------------------------------------------
# weak form
# ---------------------------------------------------------------------------


def test_weak_form_collision_invariants():
    grid, f = small_setup(n=10)
    sq = SphereQuadrature(3, 6)
    for phi in ("1", "vx", "vy", "vz", "v2"):
        val, scale = weak_form(f, f, phi, HS, B_ISO, sq, with_scale=True)
        assert abs(val) <= 1e-10 * scale


def test_weak_form_entropy_production_negative():
    grid, f = small_setup(n=10)
    sq = SphereQuadrature(3, 6)
    val = weak_form(f, f, "logf", HS, B_ISO, sq)
    assert val < 0.0


def test_weak_form_vs_direct_moment_route():
    # Two-route comparison: int Q <v>^4 via the weak form (exact phi, the
    # oracle) against the interpolating evaluator.  The gap is the direct
    # route's O(h^2) interpolation defect; assert the measured magnitude and
    # its second-order decay between the two resolutions.
    gaps = []
    scales = []
    for n in (10, 14):
        grid = VelocityGrid(n, 4.0)
        f = bimaxwellian(grid, [(0.5, (0.6, 0, 0), 0.5), (0.5, (-0.6, 0, 0), 0.5)])
        sq = SphereQuadrature(4, 8)
        wf, scale = weak_form(f, f, "bracket", HS, B_ISO, sq, par1=2.0,
                              with_scale=True)
        Q = collide_direct(f, f, HS, B_ISO, sq)
        direct = grid.integrate(Q * grid.bracket2**2)
        gaps.append(abs(wf - direct))
        scales.append(scale)
    assert gaps[1] <= 0.12 * scales[1]          # measured ~0.09 at n=14
    assert gaps[1] / gaps[0] <= 0.75            # O(h^2): (10/14)^2 = 0.51


# ---------------------------------------------------------------------------
# Carleman gain
# ---------------------------------------------------------------------------


def test_carleman_radon_oracle():
    # Point source: the weighted-plane (Radon) structure has the closed form
    # Q+(delta_x0, M)(v) = exp(-(v.xihat)^2/2T) / (pi |xi| sqrt(2 pi T)),
    # xi = v - x0, for hard spheres with b = 1/(4 pi): the plane integral of
    # the Maxwellian is a 1-D Gaussian in the component of v along xi.
    # Sampled at bulk-resolved radii (trilinear interpolation systematically
    # inflates the deep convex tail, a property of the evaluator).
    T = 0.7
    grid = VelocityGrid(16, 4.4)
    M = maxwellian(grid, 1.0, (0, 0, 0), T)
    gv = np.zeros_like(M.values)
    i0 = grid.n // 2  # node at (h/2, h/2, h/2)
    gv[i0, i0, i0] = 1.0 / grid.cell_volume
    delta = Distribution(grid, gv)
    x0 = np.array([grid.axis[i0]] * 3)
    pot = PotentialKernel(1.0, form="truncated", eps=0.01 * grid.h)
    gain = collide_carleman_gain(M, delta, pot, B_ISO, n_radial=32, n_angular=24)
    checked = 0
    for idx in [(5, 8, 8), (6, 9, 8), (9, 6, 9), (8, 5, 9)]:
        v = np.array([grid.axis[idx[0]], grid.axis[idx[1]], grid.axis[idx[2]]])
        xi = v - x0
        xin = np.linalg.norm(xi)
        vpar = float(v @ xi) / xin
        exact = math.exp(-vpar**2 / (2 * T)) / (math.pi * xin * math.sqrt(2 * math.pi * T))
        got = gain[idx]
        assert got == pytest.approx(exact, rel=0.1)
        checked += 1
    assert checked == 4


def test_carleman_equilibrium_balance_small():
    grid = VelocityGrid(14, 4.2)
    M = maxwellian(grid, 1.0, (0, 0, 0), 0.5)
    pot = PotentialKernel(1.0, form="truncated", eps=0.01 * grid.h)
    gain = collide_carleman_gain(M, M, pot, B_ISO, n_radial=24, n_angular=16,
                                 source_tol=1e-10)
    loss = M.values * conv_phi(M, pot) * 1.0
    core = slice(3, 11)
    rel = np.abs(gain - loss)[core, core, core] / loss[core, core, core].max()
    assert rel.max() <= 0.2  # measured ~0.16 at n=14; refined in acceptance


def test_carleman_requires_truncation_for_soft_gamma():
    grid, f = small_setup(n=10)
    with pytest.raises(ValueError):
        collide_carleman_gain(f, f, PotentialKernel(0.5), B_ISO)


# ---------------------------------------------------------------------------
# Bobylev evaluator
# ---------------------------------------------------------------------------


def test_bobylev_requires_maxwell():
    grid, f = small_setup(n=10)
    with pytest.raises(MaxwellOnlyError):
        collide_bobylev(f, f, HS, B_ISO)


def test_bobylev_mass_residual_zero():
    grid = VelocityGrid(16, 5.0)
    f = bimaxwellian(grid, [(0.5, (0.5, 0, 0), 0.4), (0.5, (-0.5, 0, 0), 0.4)])
    pot0 = PotentialKernel(0.0)
    q, res = collide_bobylev(f, f, pot0, B_ISO, with_mass_residual=True)
    assert res <= 1e-10
    # the box integral differs from Qhat(0) = 0 by the cropped-out ringing
    assert abs(grid.integrate(q)) <= 1e-3


def test_bobylev_equilibrium_small():
    # with envelope normalization the Maxwellian transform is reproduced
    # without interpolation error, so Q(M, M) sits at the noise floor
    grid = VelocityGrid(24, 5.0)
    M = maxwellian(grid, 1.0, (0, 0, 0), 0.5)
    pot0 = PotentialKernel(0.0)
    q = collide_bobylev(M, M, pot0, B_ISO, squad=SphereQuadrature(6, 12))
    scale = M.values.max() * 1.0  # ||b||_1 * max f * mass
    assert np.abs(q).max() <= 1e-6 * scale


def test_bobylev_boosted_maxwellian_stationary():
    grid = VelocityGrid(16, 4.6)
    Mb = maxwellian(grid, 1.0, (0.5, 0, 0), 0.45)
    pot0 = PotentialKernel(0.0)
    q = collide_bobylev(Mb, Mb, pot0, B_ISO, squad=SphereQuadrature(6, 12))
    assert np.abs(q).max() <= 2e-3 * Mb.values.max()


def test_bobylev_agrees_with_direct():
    # The gap at this resolution is dominated by the direct route's O(h^2)
    # interpolation error (the Fourier route with envelope normalization is
    # far sharper: boosted-Maxwellian residuals differ by ~100x); assert the
    # measured n=16 gap and leave the refined comparison to the acceptance
    # suite.
    grid = VelocityGrid(16, 4.6)
    f = bimaxwellian(grid, [(0.8, (0.9, 0, 0), 0.35), (0.8, (-0.9, 0, 0), 0.35)])
    pot0 = PotentialKernel(0.0)
    sq = SphereQuadrature(6, 12)
    qb = collide_bobylev(f, f, pot0, B_ISO, squad=sq)
    qd = collide_direct(f, f, pot0, B_ISO, sq)
    rel = np.linalg.norm(qb - qd) / np.linalg.norm(qd)
    assert rel <= 0.35


def test_bobylev_aliasing_warning():
    grid = VelocityGrid(12, 1.8)
    vals = np.exp(-grid.speed2 / 4.0)
    f = Distribution(grid, vals / grid.integrate(vals))
    pot0 = PotentialKernel(0.0)
    with pytest.warns(UserWarning):
        collide_bobylev(f, f, pot0, B_ISO)
