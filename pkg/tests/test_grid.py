import math

import numpy as np
import pytest

from homobol.grid import (
    BoxTooSmallError,
    Distribution,
    DivergenceWarning,
    NegativeDensityError,
    OverflowRiskError,
    VelocityGrid,
    bimaxwellian,
    ck_distance_bound,
    entropy,
    exponential_moment,
    l1_distance,
    load_snapshot,
    lp_norm,
    matched_maxwellian,
    maxwellian,
    moment,
    power_tail,
    relative_entropy,
    save_snapshot,
)

GRID = VelocityGrid(32, 6.0)
STD = maxwellian(GRID, 1.0, (0, 0, 0), 1.0)


def gaussian_abs_moment(T, order):
    # E |v|^order for the 3-D centered Maxwellian: T^(m) (2m+1)!! at order 2m
    m = order // 2
    out = 1.0
    for j in range(1, m + 1):
        out *= (2 * j + 1) * T
    return out


def test_grid_symmetry_and_shape():
    g = VelocityGrid(16, 4.0)
    assert np.allclose(g.axis, -g.axis[::-1])
    assert g.h == pytest.approx(0.5)
    with pytest.raises(ValueError):
        VelocityGrid(15, 4.0)
    with pytest.raises(ValueError):
        VelocityGrid(6, 4.0)


def test_maxwellian_mass_momentum():
    # quadrature tolerance: boundary-tail truncation ~ 1e-8 at L = 6
    assert STD.mass() == pytest.approx(1.0, abs=1e-7)
    m2 = maxwellian(GRID, 2.0, (1.0, 0, 0), 1.0)
    assert np.allclose(m2.momentum(), [2.0, 0, 0], atol=2e-6)
    assert m2.mass() == pytest.approx(2.0, rel=1e-6)


def test_maxwellian_box_too_small():
    small = VelocityGrid(8, 1.0)
    with pytest.raises(BoxTooSmallError):
        maxwellian(small, 1.0, (0, 0, 0), 1.0)


def test_maxwellian_tail_warning():
    g = VelocityGrid(24, 4.2)  # tail between 1e-8 and 1e-4
    with pytest.warns(UserWarning):
        maxwellian(g, 1.0, (0, 0, 0), 1.0)


def test_moment_oracles():
    # m_0 = mass exactly
    assert moment(STD, 0.0) == STD.mass()
    # m_1 = 1 + 3T = 4  (Gaussian second-moment identity)
    assert moment(STD, 1.0) == pytest.approx(4.0, rel=1e-6)
    # m_2 = E<v>^4 = 1 + 2*3T + 15 T^2 = 22 at T = 1
    assert moment(STD, 2.0) == pytest.approx(
        1.0 + 2 * gaussian_abs_moment(1.0, 2) + gaussian_abs_moment(1.0, 4), rel=1e-6)


def test_moment_monotone_in_k():
    f = bimaxwellian(GRID, [(0.5, (0.9, 0, 0), 0.8), (0.5, (-0.9, 0, 0), 0.8)])
    ks = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0]
    ms = [moment(f, k) for k in ks]
    assert all(a <= b * (1 + 1e-14) for a, b in zip(ms[:-1], ms[1:]))


def test_lp_norm_oracles():
    # ||f||_{L^1_2} = m_1 for nonnegative f
    assert lp_norm(STD, 1, 2.0) == pytest.approx(moment(STD, 1.0), rel=1e-12)
    # peak value (2 pi)^(-3/2) within h^2
    peak = (2 * math.pi) ** -1.5
    assert lp_norm(STD, math.inf, 0.0) == pytest.approx(peak, rel=GRID.h**2)
    # ||M||_{L^2} = (4 pi T)^(-3/4) from the Gaussian product integral
    assert lp_norm(STD, 2, 0.0) == pytest.approx((4 * math.pi) ** -0.75, rel=1e-6)


def test_entropy_oracles():
    # closed form -(3/2)(1 + log 2 pi) for the standard Maxwellian
    assert entropy(STD) == pytest.approx(-1.5 * (1 + math.log(2 * math.pi)), rel=1e-7)
    assert relative_entropy(STD, STD) == pytest.approx(0.0, abs=1e-12)


def test_relative_entropy_nonneg_and_ck():
    f = bimaxwellian(GRID, [(0.5, (1.0, 0, 0), 0.9), (0.5, (-1.0, 0, 0), 0.9)])
    M = matched_maxwellian(f)
    h = relative_entropy(f, M)
    assert h > 0
    assert l1_distance(f, M) <= ck_distance_bound(f, M)


def test_negative_density_guard():
    vals = STD.values.copy()
    vals[0, 0, 0] = -1e-3 * vals.max()
    bad = Distribution(GRID, vals)
    with pytest.raises(NegativeDensityError):
        entropy(bad)


def test_exponential_moment_oracles():
    assert exponential_moment(STD, 1.0, 0.0) == STD.mass()
    # complete the square: E e^{z<v>^2} = e^z (1 - 2 z T)^(-3/2)
    z = 0.1
    exact = math.exp(z) * (1 - 2 * z) ** -1.5
    assert exponential_moment(STD, 1.0, z) == pytest.approx(exact, rel=1e-6)


def test_exponential_moment_divergence_flag():
    with pytest.warns(DivergenceWarning):
        val = exponential_moment(STD, 1.0, 0.5)
    assert np.isfinite(val)


def test_exponential_moment_overflow_guard():
    g = VelocityGrid(16, 40.0)
    f = maxwellian(g, 1.0, (0, 0, 0), 4.0)
    with pytest.raises(OverflowRiskError):
        exponential_moment(f, 1.0, 0.2)


def test_partial_sum_converges_from_below():
    z, s = 0.08, 1.0
    target = exponential_moment(STD, s, z)
    partial = 0.0
    prev = -1.0
    for k in range(0, 40):
        partial += z**k / math.factorial(k) * moment(STD, k, s)
        assert partial >= prev - 1e-15
        prev = partial
        if partial > target:
            break
    assert partial == pytest.approx(target, rel=1e-8)
    assert partial <= target * (1 + 1e-12)


def test_grid_refinement_second_order():
    # Midpoint rule is O(h^2) when the integrand carries boundary values;
    # the reference is a separable product of fine 1-D Gauss quadratures.
    L = 2.0
    xg, wg = np.polynomial.legendre.leggauss(200)
    x = L * xg
    w = L * wg
    g1 = np.exp(-x * x / 2)
    I0 = float(w @ g1)
    I2 = float(w @ (x * x * g1))
    exact = I0**3 + 3 * I2 * I0**2  # int g^3 (1 + |v|^2) over the box

    errs = []
    for n in (16, 32):
        g = VelocityGrid(n, L)
        vals = np.exp(-(g.X**2 + g.Y**2 + g.Z**2) / 2)
        f = Distribution(g, vals)
        errs.append(abs(moment(f, 1.0) - exact))
    order = math.log(errs[0] / errs[1]) / math.log(2.0)
    assert order >= 1.8


def test_power_tail_datum():
    f = power_tail(GRID, p=5.4, rho=1.0)
    assert f.mass() == pytest.approx(1.0, rel=1e-12)
    # k = 1.2 moment is the largest "finite-tuned" one; higher moments are
    # dominated by the box truncation but still finite on the grid
    assert np.isfinite(moment(f, 1.2))
    assert np.isfinite(moment(f, 3.0))


def test_snapshot_round_trip(tmp_path):
    for fmt in ("csv", "bin"):
        path = tmp_path / f"snap.{fmt}"
        save_snapshot(STD, path, fmt=fmt)
        back = load_snapshot(path, fmt=fmt)
        assert back.grid.n == GRID.n
        assert back.grid.L == pytest.approx(GRID.L)
        tol = 1e-12 if fmt == "bin" else 1e-12
        assert np.allclose(back.values, STD.values, rtol=tol, atol=1e-300)


def test_snapshot_row_order_x_fastest(tmp_path):
    path = tmp_path / "snap.csv"
    save_snapshot(STD, path)
    with open(path) as fh:
        fh.readline()
        first = [float(x) for x in fh.readline().split(",")]
        second = [float(x) for x in fh.readline().split(",")]
    assert second[0] > first[0]          # vx advanced
    assert second[1] == first[1] and second[2] == first[2]
