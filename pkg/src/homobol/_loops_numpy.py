"""Pure-numpy fallbacks for the collision hot loops.

Same sums as ``_loops_numba`` (possibly different float association order),
selected via HOMOBOL_NO_NUMBA=1.  Vectorized over grid-sized blocks, so they
are usable for small grids and for backend cross-checks; the numba path is
the production one.
"""

import numpy as np


def _pad(arr):
    n = arr.shape[0]
    out = np.zeros((n + 2, n + 2, n + 2))
    out[1:-1, 1:-1, 1:-1] = arr
    return out


def _interp_b_vec(t, t_tab, b_tab):
    return np.interp(t, t_tab, b_tab)


def _tri_gather_vec(arrpad, n, fx, fy, fz):
    """Vectorized trilinear gather with zero extension outside the box."""
    inside = (fx > -1.0) & (fx < n) & (fy > -1.0) & (fy < n) & (fz > -1.0) & (fz < n)
    fx = np.where(inside, fx, 0.0)
    fy = np.where(inside, fy, 0.0)
    fz = np.where(inside, fz, 0.0)
    ix = np.floor(fx).astype(np.int64)
    iy = np.floor(fy).astype(np.int64)
    iz = np.floor(fz).astype(np.int64)
    tx = fx - ix
    ty = fy - iy
    tz = fz - iz
    x0 = ix + 1
    y0 = iy + 1
    z0 = iz + 1
    out = np.zeros_like(fx)
    for dx in (0, 1):
        wx = tx if dx else 1.0 - tx
        for dy in (0, 1):
            wy = ty if dy else 1.0 - ty
            for dz in (0, 1):
                wz = tz if dz else 1.0 - tz
                out = out + wx * wy * wz * arrpad[x0 + dx, y0 + dy, z0 + dz]
    return np.where(inside, out, 0.0)


def _axes(axis):
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
    return X, Y, Z


def gather_parts(fpad, gpad, axis, wsig, sig, gamma, phi_eps, h3,
                 t_tab, b_tab, env, de, thresh):
    n = axis.shape[0]
    v0 = axis[0]
    ih = 1.0 / (axis[1] - axis[0])
    f = fpad[1:-1, 1:-1, 1:-1]
    g = gpad[1:-1, 1:-1, 1:-1]
    X, Y, Z = _axes(axis)
    E = X * X + Y * Y + Z * Z
    gain = np.zeros((n, n, n))
    lossw = np.zeros((n, n, n))
    nenv = env.shape[0]
    for jx in range(n):
        for jy in range(n):
            for jz in range(n):
                gj = g[jx, jy, jz]
                ux = X - axis[jx]
                uy = Y - axis[jy]
                uz = Z - axis[jz]
                un2 = ux * ux + uy * uy + uz * uz
                un = np.sqrt(un2)
                ok = un >= max(phi_eps, 1e-300)
                if thresh > 0.0:
                    ej = axis[jx] ** 2 + axis[jy] ** 2 + axis[jz] ** 2
                    eb = np.minimum(((E + ej) * de).astype(np.int64), nenv - 1)
                    ok &= env[eb] >= thresh
                if not ok.any():
                    continue
                phi = np.where(ok, un**gamma, 0.0)
                iun = np.where(un > 0, 1.0 / np.maximum(un, 1e-300), 0.0)
                uhx = ux * iun
                uhy = uy * iun
                uhz = uz * iun
                Vx = X - 0.5 * ux
                Vy = Y - 0.5 * uy
                Vz = Z - 0.5 * uz
                r = 0.5 * un
                gs = np.zeros((n, n, n))
                ls = np.zeros((n, n, n))
                for m in range(len(wsig)):
                    sx, sy, sz = sig[m]
                    wb = wsig[m] * _interp_b_vec(uhx * sx + uhy * sy + uhz * sz,
                                                 t_tab, b_tab)
                    fp = _tri_gather_vec(fpad, n, (Vx + r * sx - v0) * ih,
                                         (Vy + r * sy - v0) * ih,
                                         (Vz + r * sz - v0) * ih)
                    gq = _tri_gather_vec(gpad, n, (Vx - r * sx - v0) * ih,
                                         (Vy - r * sy - v0) * ih,
                                         (Vz - r * sz - v0) * ih)
                    gs += wb * fp * gq
                    ls += wb
                gain += np.where(ok, phi * gs, 0.0)
                lossw += np.where(ok, phi * ls * gj, 0.0)
    return gain * h3, f * lossw * h3


def stream_gain(fpad, gpad, n, v0, ih, h, olist, ostart, K, axx, axy, axz,
                obox, orad2):
    gain = np.zeros((n, n, n))
    axis = v0 + h * np.arange(n)
    for m in range(olist.shape[0]):
        if obox[m, 0] > obox[m, 1]:
            continue
        dx, dy, dz = olist[m]
        if orad2[m] >= 0.0:
            cx, cy, cz = 0.5 * h * dx, 0.5 * h * dy, 0.5 * h * dz
            ball = ((axis - cx)[:, None, None] ** 2
                    + (axis - cy)[None, :, None] ** 2
                    + (axis - cz)[None, None, :] ** 2) <= orad2[m]
        else:
            ball = None
        for e in range(ostart[m], ostart[m + 1]):
            ca = np.array([axx[e] * ih, axy[e] * ih, axz[e] * ih])
            cb = np.array([-dx, -dy, -dz], dtype=float) - ca
            ba = np.floor(ca).astype(np.int64)
            bb = np.floor(cb).astype(np.int64)
            ta = ca - ba
            tb = cb - bb
            lo = np.maximum.reduce([obox[m, 0::2].astype(np.int64),
                                    -1 - np.minimum(ba, bb),
                                    np.zeros(3, dtype=np.int64)])
            hi = np.minimum.reduce([obox[m, 1::2].astype(np.int64),
                                    n - 1 - np.maximum(ba, bb),
                                    np.full(3, n - 1, dtype=np.int64)])
            if np.any(lo > hi):
                continue
            sl = tuple(slice(int(a), int(b) + 1) for a, b in zip(lo, hi))

            def shifted(pad, base, t):
                acc = 0.0
                for cx in (0, 1):
                    wx = t[0] if cx else 1 - t[0]
                    for cy in (0, 1):
                        wy = t[1] if cy else 1 - t[1]
                        for cz in (0, 1):
                            wz = t[2] if cz else 1 - t[2]
                            block = pad[lo[0] + base[0] + cx + 1: hi[0] + base[0] + cx + 2,
                                        lo[1] + base[1] + cy + 1: hi[1] + base[1] + cy + 2,
                                        lo[2] + base[2] + cz + 1: hi[2] + base[2] + cz + 2]
                            acc = acc + wx * wy * wz * block
                return acc

            A = shifted(fpad, ba, ta)
            B = shifted(gpad, bb, tb)
            term = K[e] * A * B
            if ball is not None:
                term = np.where(ball[sl], term, 0.0)
            gain[sl] += term
    return gain


def weak_form_rows(fvals, gvals, fpad, axis, wsig, sig, gamma, phi_eps,
                   t_tab, b_tab, phi_code, par1, par2):
    n = axis.shape[0]
    v0 = axis[0]
    ih = 1.0 / (axis[1] - axis[0])
    X, Y, Z = _axes(axis)

    def phi_eval(x, y, z):
        if phi_code == 0:
            return np.ones_like(x)
        if phi_code == 1:
            return x
        if phi_code == 2:
            return y
        if phi_code == 3:
            return z
        if phi_code == 4:
            return x * x + y * y + z * z
        if phi_code == 5:
            return (1.0 + x * x + y * y + z * z) ** par1
        if phi_code == 6:
            val = _tri_gather_vec(fpad, n, (x - v0) * ih, (y - v0) * ih,
                                  (z - v0) * ih)
            return np.log(np.maximum(val, 1e-300))
        if phi_code == 7:
            return np.exp(par2 * (1.0 + x * x + y * y + z * z) ** par1)
        raise ValueError("unknown phi code")

    pv = phi_eval(X, Y, Z)
    rows = np.zeros((n, n, n))
    rows_abs = np.zeros((n, n, n))
    for jx in range(n):
        for jy in range(n):
            for jz in range(n):
                gj = gvals[jx, jy, jz]
                if gj == 0.0:
                    continue
                ux = X - axis[jx]
                uy = Y - axis[jy]
                uz = Z - axis[jz]
                un2 = ux * ux + uy * uy + uz * uz
                un = np.sqrt(un2)
                ok = un >= max(phi_eps, 1e-300)
                phi_u = np.where(ok, un**gamma, 0.0)
                iun = np.where(ok, 1.0 / np.maximum(un, 1e-300), 0.0)
                uhx, uhy, uhz = ux * iun, uy * iun, uz * iun
                Vx = X - 0.5 * ux
                Vy = Y - 0.5 * uy
                Vz = Z - 0.5 * uz
                r = 0.5 * un
                pw = float(pv[jx, jy, jz])
                sacc = np.zeros((n, n, n))
                sabs = np.zeros((n, n, n))
                for m in range(len(wsig)):
                    sx, sy, sz = sig[m]
                    wb = wsig[m] * _interp_b_vec(uhx * sx + uhy * sy + uhz * sz,
                                                 t_tab, b_tab)
                    p1 = phi_eval(Vx + r * sx, Vy + r * sy, Vz + r * sz)
                    p2 = phi_eval(Vx - r * sx, Vy - r * sy, Vz - r * sz)
                    sacc += wb * (p1 + p2 - pv - pw)
                    sabs += wb * (np.abs(p1) + np.abs(p2) + np.abs(pv) + abs(pw))
                rows += gj * phi_u * sacc
                rows_abs += gj * phi_u * sabs
    rows = 0.5 * fvals * rows
    rows_abs = 0.5 * fvals * rows_abs
    return rows.ravel(), rows_abs.ravel()


def carleman_gain_loop(fpad, gvals, axis, gamma, phi_eps, h3,
                       rad_nodes, rad_weights, n_ang, t_tab, b_tab,
                       gtol, rho_box):
    n = axis.shape[0]
    v0 = axis[0]
    ih = 1.0 / (axis[1] - axis[0])
    X, Y, Z = _axes(axis)
    src = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    gsrc = gvals.ravel()
    keep = gsrc > gtol
    src = src[keep]
    gsrc = gsrc[keep]
    dphi = 2.0 * np.pi / n_ang
    angs = dphi * (np.arange(n_ang) + 0.5)
    out = np.zeros(n * n * n)
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    for io, v in enumerate(pts):
        xi = v[None, :] - src
        qn = np.linalg.norm(xi, axis=1)
        ok = qn > 0
        xi = xi[ok]
        qn = qn[ok]
        gx = gsrc[ok]
        # deterministic plane basis
        e1 = np.zeros_like(xi)
        ax = np.argmin(np.abs(xi), axis=1)
        for k in range(3):
            rows = ax == k
            e1[rows] = np.cross(np.eye(3)[k], xi[rows])
        e1 /= np.linalg.norm(e1, axis=1)[:, None]
        e2 = np.cross(xi, e1) / qn[:, None]
        acc = np.zeros(xi.shape[0])
        rho_cut = rho_box + np.linalg.norm(v)
        for irad, rho in enumerate(rad_nodes):
            if rho > rho_cut:
                break
            wr = rad_weights[irad] * rho * dphi
            for ang in angs:
                zvec = rho * (np.cos(ang) * e1 + np.sin(ang) * e2)
                y = zvec + xi
                yn = np.linalg.norm(y, axis=1)
                good = yn >= max(phi_eps, 1e-300)
                p = v[None, :] + zvec
                fv = _tri_gather_vec(fpad, n, (p[:, 0] - v0) * ih,
                                     (p[:, 1] - v0) * ih, (p[:, 2] - v0) * ih)
                ct = 1.0 - 2.0 * rho * rho / np.maximum(yn, 1e-300) ** 2
                bv = _interp_b_vec(ct, t_tab, b_tab)
                term = np.where(good, fv * np.maximum(yn, 1e-300) ** (gamma - 1.0) * bv, 0.0)
                acc += wr * term
        out[io] = float(np.sum(gx * acc / qn))
    return 4.0 * h3 * out.reshape((n, n, n))


def bobylev_assemble(sf, sg, fhat, ghat, zaxis, wsig, sig, t_tab, b_tab,
                     cf, cg):
    N = zaxis.shape[0]
    z0 = zaxis[0]
    ih = 1.0 / (zaxis[1] - zaxis[0])
    ZX, ZY, ZZ = np.meshgrid(zaxis, zaxis, zaxis, indexing="ij")
    zn = np.sqrt(ZX**2 + ZY**2 + ZZ**2)
    izn = np.where(zn > 0, 1.0 / np.maximum(zn, 1e-300), 0.0)
    zh = (ZX * izn, ZY * izn, ZZ * izn)
    i0 = int(np.round(-z0 * ih))
    g0 = ghat[i0, i0, i0]
    out = np.zeros((N, N, N), dtype=np.complex128)

    def tri_c(arr, fx, fy, fz):
        inside = (fx >= 0) & (fx <= N - 1) & (fy >= 0) & (fy <= N - 1) \
            & (fz >= 0) & (fz <= N - 1)
        fx = np.where(inside, fx, 0.0)
        fy = np.where(inside, fy, 0.0)
        fz = np.where(inside, fz, 0.0)
        ix = np.minimum(np.floor(fx).astype(np.int64), N - 2)
        iy = np.minimum(np.floor(fy).astype(np.int64), N - 2)
        iz = np.minimum(np.floor(fz).astype(np.int64), N - 2)
        tx, ty, tz = fx - ix, fy - iy, fz - iz
        val = np.zeros(fx.shape, dtype=np.complex128)
        for cx in (0, 1):
            wx = tx if cx else 1 - tx
            for cy in (0, 1):
                wy = ty if cy else 1 - ty
                for cz in (0, 1):
                    wz = tz if cz else 1 - tz
                    val = val + wx * wy * wz * arr[ix + cx, iy + cy, iz + cz]
        return np.where(inside, val, 0.0)

    for m in range(len(wsig)):
        sx, sy, sz = sig[m]
        wb = wsig[m] * _interp_b_vec(zh[0] * sx + zh[1] * sy + zh[2] * sz,
                                     t_tab, b_tab)
        px = 0.5 * (ZX + zn * sx)
        py = 0.5 * (ZY + zn * sy)
        pz = 0.5 * (ZZ + zn * sz)
        qx = 0.5 * (ZX - zn * sx)
        qy = 0.5 * (ZY - zn * sy)
        qz = 0.5 * (ZZ - zn * sz)
        fp = tri_c(sf, (px - z0) * ih, (py - z0) * ih, (pz - z0) * ih) \
            * np.exp(-cf * (px**2 + py**2 + pz**2))
        gq = tri_c(sg, (qx - z0) * ih, (qy - z0) * ih, (qz - z0) * ih) \
            * np.exp(-cg * (qx**2 + qy**2 + qz**2))
        out += wb * (fp * gq - fhat * g0)
    out[zn == 0] = 0.0
    return out
