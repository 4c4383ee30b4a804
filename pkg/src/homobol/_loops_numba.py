"""Numba implementations of the collision hot loops.

Every loop is deterministic for fixed inputs regardless of worker-thread
count: parallelism is over output cells (or output rows), and the reduction
order inside each output element is a fixed serial sweep.
"""

import numba as nb
import numpy as np

NUMBA_OPTS = dict(parallel=True, fastmath=False, cache=True)
NUMBA_FAST = dict(parallel=True, fastmath=True, cache=True)


@nb.njit(inline="always")
def _interp_b(t, t_tab, b_tab):
    # linear interpolation of the angular kernel table, clamped ends
    if t <= t_tab[0]:
        return b_tab[0]
    if t >= t_tab[-1]:
        return b_tab[-1]
    lo = np.searchsorted(t_tab, t) - 1
    w = (t - t_tab[lo]) / (t_tab[lo + 1] - t_tab[lo])
    return b_tab[lo] * (1.0 - w) + b_tab[lo + 1] * w


@nb.njit(inline="always")
def _tri_pad(arr, n, fx, fy, fz):
    """Trilinear gather from a zero-padded (n+2)^3 array at fractional index
    (fx, fy, fz) relative to the unpadded grid; zero outside the box."""
    if fx <= -1.0 or fx >= n or fy <= -1.0 or fy >= n or fz <= -1.0 or fz >= n:
        return 0.0
    ix = int(np.floor(fx))
    iy = int(np.floor(fy))
    iz = int(np.floor(fz))
    tx = fx - ix
    ty = fy - iy
    tz = fz - iz
    x0 = ix + 1
    y0 = iy + 1
    z0 = iz + 1
    c00 = arr[x0, y0, z0] * (1 - tz) + arr[x0, y0, z0 + 1] * tz
    c01 = arr[x0, y0 + 1, z0] * (1 - tz) + arr[x0, y0 + 1, z0 + 1] * tz
    c10 = arr[x0 + 1, y0, z0] * (1 - tz) + arr[x0 + 1, y0, z0 + 1] * tz
    c11 = arr[x0 + 1, y0 + 1, z0] * (1 - tz) + arr[x0 + 1, y0 + 1, z0 + 1] * tz
    c0 = c00 * (1 - ty) + c01 * ty
    c1 = c10 * (1 - ty) + c11 * ty
    return c0 * (1 - tx) + c1 * tx


def _pad(arr):
    n = arr.shape[0]
    out = np.zeros((n + 2, n + 2, n + 2))
    out[1:-1, 1:-1, 1:-1] = arr
    return out


@nb.njit(**NUMBA_FAST)
def gather_parts(fpad, gpad, axis, wsig, sig, gamma, phi_eps, h3,
                 t_tab, b_tab, env, de, thresh):
    """Reference gather evaluator: for each output node the full (j, sigma)
    sum of w h^3 Phi b [f(v')g(v'*) - f_i g_j], gain and loss separately.

    Pairs whose energy-shell envelope lies below `thresh` are skipped
    (thresh = 0 disables screening).
    """
    n = axis.shape[0]
    v0 = axis[0]
    ih = 1.0 / (axis[1] - axis[0])
    M = wsig.shape[0]
    gain = np.zeros((n, n, n))
    loss = np.zeros((n, n, n))
    nenv = env.shape[0]
    for ii in nb.prange(n * n * n):
        ix = ii // (n * n)
        iy = (ii // n) % n
        iz = ii % n
        vx = axis[ix]
        vy = axis[iy]
        vz = axis[iz]
        ei = vx * vx + vy * vy + vz * vz
        fi = fpad[ix + 1, iy + 1, iz + 1]
        gacc = 0.0
        lacc = 0.0
        for jx in range(n):
            ux = vx - axis[jx]
            ex = axis[jx] * axis[jx]
            for jy in range(n):
                uy = vy - axis[jy]
                exy = ex + axis[jy] * axis[jy]
                for jz in range(n):
                    if thresh > 0.0:
                        eb = int((ei + exy + axis[jz] * axis[jz]) * de)
                        if eb >= nenv:
                            eb = nenv - 1
                        if env[eb] < thresh:
                            continue
                    gj = gpad[jx + 1, jy + 1, jz + 1]
                    uz = vz - axis[jz]
                    un2 = ux * ux + uy * uy + uz * uz
                    if un2 <= 0.0:
                        continue
                    un = np.sqrt(un2)
                    if un < phi_eps:
                        continue
                    phi = un**gamma
                    iun = 1.0 / un
                    uhx = ux * iun
                    uhy = uy * iun
                    uhz = uz * iun
                    Vx = vx - 0.5 * ux
                    Vy = vy - 0.5 * uy
                    Vz = vz - 0.5 * uz
                    r = 0.5 * un
                    gs = 0.0
                    ls = 0.0
                    for m in range(M):
                        sx = sig[m, 0]
                        sy = sig[m, 1]
                        sz = sig[m, 2]
                        wb = wsig[m] * _interp_b(uhx * sx + uhy * sy + uhz * sz,
                                                 t_tab, b_tab)
                        fp = _tri_pad(fpad, n, (Vx + r * sx - v0) * ih,
                                      (Vy + r * sy - v0) * ih,
                                      (Vz + r * sz - v0) * ih)
                        gq = _tri_pad(gpad, n, (Vx - r * sx - v0) * ih,
                                      (Vy - r * sy - v0) * ih,
                                      (Vz - r * sz - v0) * ih)
                        gs += wb * fp * gq
                        ls += wb
                    gacc += phi * gs
                    lacc += phi * ls * gj
        gain[ix, iy, iz] = gacc * h3
        loss[ix, iy, iz] = fi * lacc * h3
    return gain, loss


@nb.njit(**NUMBA_FAST)
def stream_gain(fpad, gpad, n, v0, ih, h, olist, ostart, K, axx, axy, axz,
                obox, orad2):
    """Streaming evaluation of the gather gain: identical terms regrouped by
    relative offset delta = v_i - v_j so each (delta, sigma) stencil sweeps a
    contiguous block of output cells.

    olist[(m,3)] integer offsets, entries e in [ostart[m], ostart[m+1]) carry
    the scattering stencils: K[e] = h^3 w phi b and (axx,axy,axz)[e] the
    physical post-collision shift a with v' = v_i + a, v'* = v_i - delta - a.
    obox[m, 6] is the per-offset kept output box (empty boxes marked
    lo > hi); orad2[m] the screening ball radius^2 about delta/2 (negative
    disables the ball clip).
    """
    gain = np.zeros((n, n, n))
    nofs = olist.shape[0]
    for ix in nb.prange(n):
        vx = v0 + ix * h
        for m in range(nofs):
            if obox[m, 0] > obox[m, 1]:
                continue
            if ix < obox[m, 0] or ix > obox[m, 1]:
                continue
            dx = olist[m, 0]
            dy = olist[m, 1]
            dz = olist[m, 2]
            r2 = orad2[m]
            ry2 = -1.0
            cy = 0.0
            cz = 0.0
            if r2 >= 0.0:
                ddx = vx - 0.5 * dx * h
                ry2 = r2 - ddx * ddx
                if ry2 < 0.0:
                    continue
                cy = 0.5 * dy * h
                cz = 0.5 * dz * h
            for e in range(ostart[m], ostart[m + 1]):
                # stencil bases and fractions for v' = v + a, v'* = v - d - a
                cax = axx[e] * ih
                cay = axy[e] * ih
                caz = axz[e] * ih
                cbx = -dx - cax
                cby = -dy - cay
                cbz = -dz - caz
                bax = int(np.floor(cax))
                bay = int(np.floor(cay))
                baz = int(np.floor(caz))
                bbx = int(np.floor(cbx))
                bby = int(np.floor(cby))
                bbz = int(np.floor(cbz))
                tax = cax - bax
                tay = cay - bay
                taz = caz - baz
                tbx = cbx - bbx
                tby = cby - bby
                tbz = cbz - bbz
                # output ranges where both stencils touch the box
                x0 = max(obox[m, 0], -1 - min(bax, bbx), 0)
                x1 = min(obox[m, 1], n - 1 - max(bax, bbx) + 0, n - 1)
                if ix < x0 or ix > x1:
                    continue
                y0 = max(obox[m, 2], -1 - min(bay, bby), 0)
                y1 = min(obox[m, 3], n - 1 - max(bay, bby), n - 1)
                z0 = max(obox[m, 4], -1 - min(baz, bbz), 0)
                z1 = min(obox[m, 5], n - 1 - max(baz, bbz), n - 1)
                if ry2 >= 0.0:
                    ry = np.sqrt(ry2)
                    y0 = max(y0, int(np.ceil((cy - ry - v0) / h)))
                    y1 = min(y1, int(np.floor((cy + ry - v0) / h)))
                if y0 > y1 or z0 > z1:
                    continue
                k = K[e]
                wa00 = (1 - tax) * (1 - tay)
                wa01 = (1 - tax) * tay
                wa10 = tax * (1 - tay)
                wa11 = tax * tay
                wb00 = (1 - tbx) * (1 - tby)
                wb01 = (1 - tbx) * tby
                wb10 = tbx * (1 - tby)
                wb11 = tbx * tby
                fA0 = fpad[ix + bax + 1]
                fA1 = fpad[ix + bax + 2]
                gB0 = gpad[ix + bbx + 1]
                gB1 = gpad[ix + bbx + 2]
                orow = gain[ix]
                for iy in range(y0, y1 + 1):
                    za0 = z0
                    za1 = z1
                    if ry2 >= 0.0:
                        ddy = v0 + iy * h - cy
                        rz2 = ry2 - ddy * ddy
                        if rz2 < 0.0:
                            continue
                        rz = np.sqrt(rz2)
                        za0 = max(z0, int(np.ceil((cz - rz - v0) / h)))
                        za1 = min(z1, int(np.floor((cz + rz - v0) / h)))
                        if za0 > za1:
                            continue
                    fr00 = fA0[iy + bay + 1]
                    fr01 = fA0[iy + bay + 2]
                    fr10 = fA1[iy + bay + 1]
                    fr11 = fA1[iy + bay + 2]
                    gr00 = gB0[iy + bby + 1]
                    gr01 = gB0[iy + bby + 2]
                    gr10 = gB1[iy + bby + 1]
                    gr11 = gB1[iy + bby + 2]
                    out = orow[iy]
                    for iz in range(za0, za1 + 1):
                        za = iz + baz + 1
                        zb = iz + bbz + 1
                        a0 = (wa00 * fr00[za] + wa01 * fr01[za]
                              + wa10 * fr10[za] + wa11 * fr11[za])
                        a1 = (wa00 * fr00[za + 1] + wa01 * fr01[za + 1]
                              + wa10 * fr10[za + 1] + wa11 * fr11[za + 1])
                        b0 = (wb00 * gr00[zb] + wb01 * gr01[zb]
                              + wb10 * gr10[zb] + wb11 * gr11[zb])
                        b1 = (wb00 * gr00[zb + 1] + wb01 * gr01[zb + 1]
                              + wb10 * gr10[zb + 1] + wb11 * gr11[zb + 1])
                        A = a0 * (1 - taz) + a1 * taz
                        B = b0 * (1 - tbz) + b1 * tbz
                        out[iz] += k * A * B
    return gain


@nb.njit(**NUMBA_OPTS)
def weak_form_rows(fvals, gvals, fpad, axis, wsig, sig, gamma, phi_eps,
                   t_tab, b_tab, phi_code, par1, par2):
    """Row sums of the weak form 1/2 sum f_i g_j h^6 sum_sigma w Phi b *
    [phi(v') + phi(v'*) - phi(v_i) - phi(v_j)], with the absolute-integrand
    scale accumulated alongside.

    phi_code: 0:1, 1:vx, 2:vy, 3:vz, 4:|v|^2, 5:<v>^(2*par1),
    6:log of trilinear f (entropy production), 7:exp(par2 <v>^(2 par1)).
    """
    n = axis.shape[0]
    v0 = axis[0]
    ih = 1.0 / (axis[1] - axis[0])
    M = wsig.shape[0]
    rows = np.zeros(n * n * n)
    rows_abs = np.zeros(n * n * n)
    for ii in nb.prange(n * n * n):
        ix = ii // (n * n)
        iy = (ii // n) % n
        iz = ii % n
        fi = fvals[ix, iy, iz]
        if fi == 0.0:
            continue
        vx = axis[ix]
        vy = axis[iy]
        vz = axis[iz]
        acc = 0.0
        aac = 0.0
        for jx in range(n):
            ux = vx - axis[jx]
            for jy in range(n):
                uy = vy - axis[jy]
                for jz in range(n):
                    gj = gvals[jx, jy, jz]
                    if gj == 0.0:
                        continue
                    uz = vz - axis[jz]
                    un2 = ux * ux + uy * uy + uz * uz
                    if un2 <= 0.0:
                        continue
                    un = np.sqrt(un2)
                    if un < phi_eps:
                        continue
                    phi_u = un**gamma
                    iun = 1.0 / un
                    uhx = ux * iun
                    uhy = uy * iun
                    uhz = uz * iun
                    Vx = vx - 0.5 * ux
                    Vy = vy - 0.5 * uy
                    Vz = vz - 0.5 * uz
                    r = 0.5 * un
                    pv = _phi_eval(phi_code, vx, vy, vz, par1, par2, fpad,
                                   n, v0, ih)
                    pw = _phi_eval(phi_code, axis[jx], axis[jy], axis[jz],
                                   par1, par2, fpad, n, v0, ih)
                    sacc = 0.0
                    sabs = 0.0
                    for m in range(M):
                        sx = sig[m, 0]
                        sy = sig[m, 1]
                        sz = sig[m, 2]
                        wb = wsig[m] * _interp_b(uhx * sx + uhy * sy + uhz * sz,
                                                 t_tab, b_tab)
                        p1 = _phi_eval(phi_code, Vx + r * sx, Vy + r * sy,
                                       Vz + r * sz, par1, par2, fpad, n, v0, ih)
                        p2 = _phi_eval(phi_code, Vx - r * sx, Vy - r * sy,
                                       Vz - r * sz, par1, par2, fpad, n, v0, ih)
                        diff = p1 + p2 - pv - pw
                        sacc += wb * diff
                        sabs += wb * (abs(p1) + abs(p2) + abs(pv) + abs(pw))
                    acc += phi_u * gj * sacc
                    aac += phi_u * gj * sabs
        rows[ii] = 0.5 * fi * acc
        rows_abs[ii] = 0.5 * fi * aac
    return rows, rows_abs


@nb.njit(inline="always")
def _phi_eval(code, x, y, z, par1, par2, fpad, n, v0, ih):
    if code == 0:
        return 1.0
    if code == 1:
        return x
    if code == 2:
        return y
    if code == 3:
        return z
    if code == 4:
        return x * x + y * y + z * z
    if code == 5:
        return (1.0 + x * x + y * y + z * z) ** par1
    if code == 6:
        val = _tri_pad(fpad, n, (x - v0) * ih, (y - v0) * ih, (z - v0) * ih)
        if val <= 1e-300:
            val = 1e-300
        return np.log(val)
    if code == 7:
        return np.exp(par2 * (1.0 + x * x + y * y + z * z) ** par1)
    return 0.0


@nb.njit(**NUMBA_FAST)
def carleman_gain_loop(fpad, gvals, axis, gamma, phi_eps, h3,
                       rad_nodes, rad_weights, n_ang, t_tab, b_tab,
                       gtol, rho_box):
    """Carleman form of the gain term, d = 3:

    Q+(v) = 4 sum_x h^3 g(x)/|v-x| int_{z perp (v-x)} f(v+z)
            Phi(|z+xi|) b(1 - 2|z|^2/|z+xi|^2) / |z+xi| dpi_z,  xi = v - x,

    with the plane integral in polar coordinates (Gauss radial x uniform
    angular) and trilinear interpolation of f.  Source nodes with
    g(x) <= gtol are skipped.
    """
    n = axis.shape[0]
    v0 = axis[0]
    ih = 1.0 / (axis[1] - axis[0])
    nr = rad_nodes.shape[0]
    out = np.zeros((n, n, n))
    dphi = 2.0 * np.pi / n_ang
    for ii in nb.prange(n * n * n):
        ix = ii // (n * n)
        iy = (ii // n) % n
        iz = ii % n
        vx = axis[ix]
        vy = axis[iy]
        vz = axis[iz]
        acc = 0.0
        for jx in range(n):
            xx = axis[jx]
            for jy in range(n):
                xy = axis[jy]
                for jz in range(n):
                    gx = gvals[jx, jy, jz]
                    if gx <= gtol:
                        continue
                    xz = axis[jz]
                    qx = vx - xx
                    qy = vy - xy
                    qz = vz - xz
                    qn2 = qx * qx + qy * qy + qz * qz
                    if qn2 <= 0.0:
                        continue
                    qn = np.sqrt(qn2)
                    # orthonormal plane basis, deterministic construction
                    if abs(qx) <= abs(qy) and abs(qx) <= abs(qz):
                        e1x, e1y, e1z = 0.0, -qz, qy
                    elif abs(qy) <= abs(qz):
                        e1x, e1y, e1z = -qz, 0.0, qx
                    else:
                        e1x, e1y, e1z = -qy, qx, 0.0
                    en = np.sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
                    e1x /= en
                    e1y /= en
                    e1z /= en
                    e2x = (qy * e1z - qz * e1y) / qn
                    e2y = (qz * e1x - qx * e1z) / qn
                    e2z = (qx * e1y - qy * e1x) / qn
                    plane = 0.0
                    rho_cut = rho_box + np.sqrt(vx * vx + vy * vy + vz * vz)
                    for irad in range(nr):
                        rho = rad_nodes[irad]
                        if rho > rho_cut:
                            break
                        wr = rad_weights[irad] * rho * dphi
                        for ia in range(n_ang):
                            ang = dphi * (ia + 0.5)
                            zx = rho * (np.cos(ang) * e1x + np.sin(ang) * e2x)
                            zy = rho * (np.cos(ang) * e1y + np.sin(ang) * e2y)
                            zz = rho * (np.cos(ang) * e1z + np.sin(ang) * e2z)
                            yx = zx + qx
                            yy = zy + qy
                            yz = zz + qz
                            yn2 = yx * yx + yy * yy + yz * yz
                            yn = np.sqrt(yn2)
                            if yn < phi_eps or yn2 <= 0.0:
                                continue
                            fv = _tri_pad(fpad, n, (vx + zx - v0) * ih,
                                          (vy + zy - v0) * ih,
                                          (vz + zz - v0) * ih)
                            if fv == 0.0:
                                continue
                            ct = 1.0 - 2.0 * rho * rho / yn2
                            bv = _interp_b(ct, t_tab, b_tab)
                            plane += wr * fv * yn**gamma * bv / yn
                    acc += gx * plane / qn
        out[ix, iy, iz] = 4.0 * acc * h3
    return out


@nb.njit(**NUMBA_OPTS)
def bobylev_assemble(sf, sg, fhat, ghat, zaxis, wsig, sig, t_tab, b_tab,
                     cf, cg):
    """Fourier-space Maxwell-molecule collision operator:

    Qhat(zeta) = sum_sigma w b(zhat.sigma) [fhat(z+) ghat(z-) - fhat(zeta) ghat(0)]

    with z+- = (zeta +- |zeta| sigma)/2.  The off-grid values use trilinear
    interpolation of the envelope-normalized transforms sf = fhat e^{+cf|z|^2}
    (sg likewise) with the exact Gaussian envelope multiplied back at z+-;
    since |z+|^2 + |z-|^2 = |zeta|^2 the envelopes cancel exactly through the
    collision and a Maxwellian transform is reproduced without interpolation
    error.  fhat/ghat are the plain transforms (used for the exact on-grid
    loss term).
    """
    N = zaxis.shape[0]
    z0 = zaxis[0]
    ih = 1.0 / (zaxis[1] - zaxis[0])
    M = wsig.shape[0]
    out = np.zeros((N, N, N), dtype=np.complex128)
    # ghat at zeta = 0 (grid contains 0 exactly)
    i0 = int(np.round(-z0 * ih))
    g0 = ghat[i0, i0, i0]
    for ii in nb.prange(N * N * N):
        ix = ii // (N * N)
        iy = (ii // N) % N
        iz = ii % N
        zx = zaxis[ix]
        zy = zaxis[iy]
        zz = zaxis[iz]
        zn2 = zx * zx + zy * zy + zz * zz
        if zn2 == 0.0:
            out[ix, iy, iz] = 0.0
            continue
        zn = np.sqrt(zn2)
        izn = 1.0 / zn
        zhx = zx * izn
        zhy = zy * izn
        zhz = zz * izn
        fh = fhat[ix, iy, iz]
        acc = 0.0 + 0.0j
        for m in range(M):
            sx = sig[m, 0]
            sy = sig[m, 1]
            sz = sig[m, 2]
            wb = wsig[m] * _interp_b(zhx * sx + zhy * sy + zhz * sz,
                                     t_tab, b_tab)
            px = 0.5 * (zx + zn * sx)
            py = 0.5 * (zy + zn * sy)
            pz = 0.5 * (zz + zn * sz)
            qx = 0.5 * (zx - zn * sx)
            qy = 0.5 * (zy - zn * sy)
            qz = 0.5 * (zz - zn * sz)
            pn2 = px * px + py * py + pz * pz
            qn2 = qx * qx + qy * qy + qz * qz
            fp = _tri_cplx(sf, N, (px - z0) * ih, (py - z0) * ih,
                           (pz - z0) * ih) * np.exp(-cf * pn2)
            gq = _tri_cplx(sg, N, (qx - z0) * ih, (qy - z0) * ih,
                           (qz - z0) * ih) * np.exp(-cg * qn2)
            acc += wb * (fp * gq - fh * g0)
        out[ix, iy, iz] = acc
    return out


@nb.njit(inline="always")
def _tri_cplx(arr, N, fx, fy, fz):
    if fx < 0.0 or fx > N - 1 or fy < 0.0 or fy > N - 1 or fz < 0.0 or fz > N - 1:
        return 0.0 + 0.0j
    ix = int(np.floor(fx))
    iy = int(np.floor(fy))
    iz = int(np.floor(fz))
    if ix == N - 1:
        ix -= 1
    if iy == N - 1:
        iy -= 1
    if iz == N - 1:
        iz -= 1
    tx = fx - ix
    ty = fy - iy
    tz = fz - iz
    c00 = arr[ix, iy, iz] * (1 - tz) + arr[ix, iy, iz + 1] * tz
    c01 = arr[ix, iy + 1, iz] * (1 - tz) + arr[ix, iy + 1, iz + 1] * tz
    c10 = arr[ix + 1, iy, iz] * (1 - tz) + arr[ix + 1, iy, iz + 1] * tz
    c11 = arr[ix + 1, iy + 1, iz] * (1 - tz) + arr[ix + 1, iy + 1, iz + 1] * tz
    c0 = c00 * (1 - ty) + c01 * ty
    c1 = c10 * (1 - ty) + c11 * ty
    return c0 * (1 - tx) + c1 * tx
