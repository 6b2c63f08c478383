# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=False
"""Compiled kernel lane.

Statement-for-statement port of ``_kernels_py`` (see that module for the
algorithm notes).  Arithmetic expression trees match the pure lane exactly
and the extension is built with FP contraction off, so both lanes produce
bit-identical results.
"""

import numpy as np

cimport cython
from libc.math cimport cos, exp, fabs, sin, sqrt

from .errors import ConvergenceError, OverflowLimitError, SingularMatrixError

_EPS = 2.220446049250313e-16
cdef double EPS = 2.220446049250313e-16

name = "compiled"


cdef inline double _sign_like(double a, double b) noexcept:
    return fabs(a) if b >= 0.0 else -fabs(a)


# ---------------------------------------------------------------------------
# dense products and solves


def mat_mul(a, b):
    cdef const double[:, ::1] al = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] bl = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = al.shape[0]
    cdef Py_ssize_t k = al.shape[1]
    cdef Py_ssize_t m = bl.shape[1]
    out_arr = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, p, j
    cdef double aip
    for i in range(n):
        for p in range(k):
            aip = al[i, p]
            for j in range(m):
                out[i, j] += aip * bl[p, j]
    return out_arr


def lu_solve(a, rhs, double pivot_rel_tol):
    """Solve a X = rhs with partial pivoting; rhs may have many columns."""
    al_arr = np.array(a, dtype=np.float64, order="C")
    xl_arr = np.array(rhs, dtype=np.float64, order="C")
    cdef double[:, ::1] al = al_arr
    cdef double[:, ::1] xl = xl_arr
    cdef Py_ssize_t n = al.shape[0]
    cdef Py_ssize_t m = xl.shape[1]
    cdef double amax = 0.0, v, pmax, d, f, tmp
    cdef Py_ssize_t i, j, col, piv
    for i in range(n):
        for j in range(n):
            v = fabs(al[i, j])
            if v > amax:
                amax = v
    if amax == 0.0:
        raise SingularMatrixError("matrix is exactly zero")
    cdef double floor = pivot_rel_tol * amax
    for col in range(n):
        piv = col
        pmax = fabs(al[col, col])
        for i in range(col + 1, n):
            v = fabs(al[i, col])
            if v > pmax:
                pmax = v
                piv = i
        if pmax <= floor:
            raise SingularMatrixError(
                f"pivot {pmax:.3e} below tolerance {floor:.3e} at column {col}")
        if piv != col:
            for j in range(n):
                tmp = al[col, j]
                al[col, j] = al[piv, j]
                al[piv, j] = tmp
            for j in range(m):
                tmp = xl[col, j]
                xl[col, j] = xl[piv, j]
                xl[piv, j] = tmp
        d = al[col, col]
        for i in range(col + 1, n):
            f = al[i, col] / d
            if f != 0.0:
                al[i, col] = f
                for j in range(col + 1, n):
                    al[i, j] -= f * al[col, j]
                for j in range(m):
                    xl[i, j] -= f * xl[col, j]
            else:
                al[i, col] = 0.0
    for col in range(n - 1, -1, -1):
        d = al[col, col]
        for j in range(m):
            xl[col, j] /= d
        for i in range(col):
            f = al[i, col]
            if f != 0.0:
                for j in range(m):
                    xl[i, j] -= f * xl[col, j]
    return xl_arr


def mat_exp(a, double t, double scale_norm, double term_tol):
    """exp(a*t) by scaling and squaring of the Taylor series."""
    cdef const double[:, ::1] al = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t n = al.shape[0]
    m_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] m = m_arr
    cdef Py_ssize_t i, j, p, q
    for i in range(n):
        for j in range(n):
            m[i, j] = al[i, j] * t
    cdef double fro2 = 0.0
    for i in range(n):
        for j in range(n):
            fro2 += m[i, j] * m[i, j]
    cdef double fro = sqrt(fro2)
    cdef int k = 0
    while fro > scale_norm:
        fro *= 0.5
        k += 1
    cdef double s
    if k:
        s = 0.5 ** k
        for i in range(n):
            for j in range(n):
                m[i, j] *= s
    result_arr = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] result = result_arr
    for i in range(n):
        result[i, i] = 1.0
    term_arr = result_arr.copy()
    cdef double[:, ::1] term = term_arr
    cdef double[:, ::1] nxt
    cdef double inv, tip, tfro2
    cdef int jj = 0
    while jj < 64:
        jj += 1
        inv = 1.0 / jj
        nxt_arr = np.zeros((n, n), dtype=np.float64)
        nxt = nxt_arr
        tfro2 = 0.0
        for i in range(n):
            for p in range(n):
                tip = term[i, p]
                if tip != 0.0:
                    for q in range(n):
                        nxt[i, q] += tip * m[p, q]
            for q in range(n):
                nxt[i, q] *= inv
                tfro2 += nxt[i, q] * nxt[i, q]
        term_arr = nxt_arr
        term = term_arr
        for i in range(n):
            for q in range(n):
                result[i, q] += term[i, q]
        if sqrt(tfro2) < term_tol:
            break
    cdef double rip
    cdef double[:, ::1] sq
    cdef int step
    for step in range(k):
        sq_arr = np.zeros((n, n), dtype=np.float64)
        sq = sq_arr
        for i in range(n):
            for p in range(n):
                rip = result[i, p]
                if rip != 0.0:
                    for q in range(n):
                        sq[i, q] += rip * result[p, q]
        result_arr = sq_arr
        result = result_arr
    return result_arr


# ---------------------------------------------------------------------------
# eigen solver: Hessenberg reduction + double-shift QR (EISPACK hqr lineage)


cdef int _hessenberg(double[:, ::1] h, Py_ssize_t n) except -1:
    cdef Py_ssize_t i, j, k
    cdef double sigma2, sigma, x0, alpha, vnorm2, beta, s, w
    v_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] v = v_arr
    for k in range(n - 2):
        sigma2 = 0.0
        for i in range(k + 1, n):
            sigma2 += h[i, k] * h[i, k]
        sigma = sqrt(sigma2)
        if sigma == 0.0:
            continue
        x0 = h[k + 1, k]
        alpha = -sigma if x0 >= 0.0 else sigma
        for i in range(k + 1, n):
            v[i - k - 1] = h[i, k]
        v[0] -= alpha
        vnorm2 = 0.0
        for i in range(n - k - 1):
            w = v[i]
            vnorm2 += w * w
        if vnorm2 == 0.0:
            continue
        beta = 2.0 / vnorm2
        for j in range(k, n):
            s = 0.0
            for i in range(k + 1, n):
                s += v[i - k - 1] * h[i, j]
            s *= beta
            for i in range(k + 1, n):
                h[i, j] -= v[i - k - 1] * s
        for i in range(n):
            s = 0.0
            for j in range(k + 1, n):
                s += h[i, j] * v[j - k - 1]
            s *= beta
            for j in range(k + 1, n):
                h[i, j] -= s * v[j - k - 1]
        h[k + 1, k] = alpha
        for i in range(k + 2, n):
            h[i, k] = 0.0
    return 0


cdef int _hqr(double[:, ::1] h, Py_ssize_t n, int budget,
              double[::1] wr, double[::1] wi) except -1:
    """Eigenvalues of an upper Hessenberg matrix (in-place, destroys h)."""
    cdef double anorm = 0.0
    cdef Py_ssize_t i, j, nn, l, ll, m, k, mmin
    cdef int its
    cdef double t, s, x, y, w, p, q, z, r, u, v
    for i in range(n):
        j = i - 1
        if j < 0:
            j = 0
        while j < n:
            anorm += fabs(h[i, j])
            j += 1
    nn = n - 1
    t = 0.0
    p = 0.0
    q = 0.0
    r = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = 0
            for ll in range(nn, 0, -1):
                s = fabs(h[ll - 1, ll - 1]) + fabs(h[ll, ll])
                if s == 0.0:
                    s = anorm
                if fabs(h[ll, ll - 1]) <= EPS * s:
                    h[ll, ll - 1] = 0.0
                    l = ll
                    break
            x = h[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = h[nn - 1, nn - 1]
            w = h[nn, nn - 1] * h[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = sqrt(fabs(q))
                x += t
                if q >= 0.0:
                    z = p + _sign_like(z, p)
                    wr[nn - 1] = x + z
                    wr[nn] = wr[nn - 1]
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = 0.0
                    wi[nn] = 0.0
                else:
                    wr[nn - 1] = x + p
                    wr[nn] = x + p
                    wi[nn - 1] = z
                    wi[nn] = -z
                nn -= 2
                break
            if its >= budget:
                raise ConvergenceError(
                    f"eigen iteration exceeded {budget} sweeps per eigenvalue")
            if its != 0 and its % 10 == 0:
                t += x
                for i in range(l, nn + 1):
                    h[i, i] -= x
                s = fabs(h[nn, nn - 1]) + fabs(h[nn - 1, nn - 2])
                x = 0.75 * s
                y = x
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = h[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / h[m + 1, m] + h[m, m + 1]
                q = h[m + 1, m + 1] - z - r - s
                r = h[m + 2, m + 1]
                s = fabs(p) + fabs(q) + fabs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = fabs(h[m, m - 1]) * (fabs(q) + fabs(r))
                v = fabs(p) * (fabs(h[m - 1, m - 1]) + fabs(z)
                               + fabs(h[m + 1, m + 1]))
                if u <= EPS * v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                h[i, i - 2] = 0.0
            for i in range(m + 3, nn + 1):
                h[i, i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = h[k, k - 1]
                    q = h[k + 1, k - 1]
                    r = 0.0
                    if k != nn - 1:
                        r = h[k + 2, k - 1]
                    x = fabs(p) + fabs(q) + fabs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = _sign_like(sqrt(p * p + q * q + r * r), p)
                if s != 0.0:
                    if k == m:
                        if l != m:
                            h[k, k - 1] = -h[k, k - 1]
                    else:
                        h[k, k - 1] = -s * x
                    p += s
                    x = p / s
                    y = q / s
                    z = r / s
                    q /= p
                    r /= p
                    for j in range(k, nn + 1):
                        p = h[k, j] + q * h[k + 1, j]
                        if k != nn - 1:
                            p += r * h[k + 2, j]
                            h[k + 2, j] -= p * z
                        h[k + 1, j] -= p * y
                        h[k, j] -= p * x
                    mmin = nn if nn < k + 3 else k + 3
                    for i in range(l, mmin + 1):
                        p = x * h[i, k] + y * h[i, k + 1]
                        if k != nn - 1:
                            p += z * h[i, k + 2]
                            h[i, k + 2] -= p * r
                        h[i, k + 1] -= p * q
                        h[i, k] -= p
    return 0


cdef int _csolve_inplace(double[:, ::1] a_re, double[:, ::1] a_im,
                         double[::1] b_re, double[::1] b_im,
                         double floor) except -1:
    """In-place complex LU solve; b is one column."""
    cdef Py_ssize_t n = a_re.shape[0]
    cdef Py_ssize_t col, piv, i, j
    cdef double pmax, v, dre, dim, d2, nre, nim, fre, fim, cre, cim, tmp
    cdef double vre, vim
    for col in range(n):
        piv = col
        pmax = a_re[col, col] * a_re[col, col] + a_im[col, col] * a_im[col, col]
        for i in range(col + 1, n):
            v = a_re[i, col] * a_re[i, col] + a_im[i, col] * a_im[i, col]
            if v > pmax:
                pmax = v
                piv = i
        if piv != col:
            for j in range(n):
                tmp = a_re[col, j]
                a_re[col, j] = a_re[piv, j]
                a_re[piv, j] = tmp
                tmp = a_im[col, j]
                a_im[col, j] = a_im[piv, j]
                a_im[piv, j] = tmp
            tmp = b_re[col]
            b_re[col] = b_re[piv]
            b_re[piv] = tmp
            tmp = b_im[col]
            b_im[col] = b_im[piv]
            b_im[piv] = tmp
        dre = a_re[col, col]
        dim = a_im[col, col]
        d2 = dre * dre + dim * dim
        if d2 < floor * floor:
            dre = floor
            dim = 0.0
            d2 = floor * floor
            a_re[col, col] = dre
            a_im[col, col] = dim
        for i in range(col + 1, n):
            nre = a_re[i, col]
            nim = a_im[i, col]
            if nre != 0.0 or nim != 0.0:
                fre = (nre * dre + nim * dim) / d2
                fim = (nim * dre - nre * dim) / d2
                a_re[i, col] = fre
                a_im[i, col] = fim
                for j in range(col + 1, n):
                    cre = a_re[col, j]
                    cim = a_im[col, j]
                    a_re[i, j] -= fre * cre - fim * cim
                    a_im[i, j] -= fre * cim + fim * cre
                cre = b_re[col]
                cim = b_im[col]
                b_re[i] -= fre * cre - fim * cim
                b_im[i] -= fre * cim + fim * cre
    for col in range(n - 1, -1, -1):
        dre = a_re[col, col]
        dim = a_im[col, col]
        d2 = dre * dre + dim * dim
        vre = b_re[col]
        vim = b_im[col]
        b_re[col] = (vre * dre + vim * dim) / d2
        b_im[col] = (vim * dre - vre * dim) / d2
        for i in range(col):
            fre = a_re[i, col]
            fim = a_im[i, col]
            if fre != 0.0 or fim != 0.0:
                b_re[i] -= fre * b_re[col] - fim * b_im[col]
                b_im[i] -= fre * b_im[col] + fim * b_re[col]
    return 0


def csolve(a_re, a_im, b_re, b_im, double pivot_rel_tol):
    """Complex linear solve (single right-hand side) with pivot flooring."""
    are_arr = np.array(a_re, dtype=np.float64, order="C")
    aim_arr = np.array(a_im, dtype=np.float64, order="C")
    bre_arr = np.array(b_re, dtype=np.float64).ravel()
    bim_arr = np.array(b_im, dtype=np.float64).ravel()
    cdef double[:, ::1] are = are_arr
    cdef double[:, ::1] aim = aim_arr
    cdef double[::1] bre = bre_arr
    cdef double[::1] bim = bim_arr
    cdef Py_ssize_t n = are.shape[0]
    cdef Py_ssize_t i, j
    cdef double amax2 = 0.0, v
    for i in range(n):
        for j in range(n):
            v = are[i, j] * are[i, j] + aim[i, j] * aim[i, j]
            if v > amax2:
                amax2 = v
    if amax2 == 0.0:
        raise SingularMatrixError("complex matrix is exactly zero")
    cdef double floor = pivot_rel_tol * sqrt(amax2)
    _csolve_inplace(are, aim, bre, bim, floor)
    return bre_arr, bim_arr


cdef _inverse_iteration(const double[:, ::1] al, Py_ssize_t n, double lre,
                        double lim, double anorm, int start_kind):
    cdef Py_ssize_t i, j
    sre_arr = np.empty((n, n), dtype=np.float64)
    sim_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] sre = sre_arr
    cdef double[:, ::1] sim = sim_arr
    for i in range(n):
        for j in range(n):
            sre[i, j] = al[i, j]
            sim[i, j] = 0.0
        sre[i, i] -= lre
        sim[i, i] = -lim
    cdef double floor = EPS * anorm
    if floor == 0.0:
        floor = EPS
    vre_arr = np.empty(n, dtype=np.float64)
    vim_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] vre = vre_arr
    cdef double[::1] vim = vim_arr
    if start_kind == 0:
        for i in range(n):
            vre[i] = 1.0
    else:
        for i in range(n):
            vre[i] = 1.0 if (i % 2) == 0 else -1.0
    cdef double[:, ::1] wre, wim
    cdef double[::1] bre, bim
    cdef double norm2, inv
    cdef int it
    for it in range(3):
        wre_arr = sre_arr.copy()
        wim_arr = sim_arr.copy()
        wre = wre_arr
        wim = wim_arr
        bre_arr = vre_arr.copy()
        bim_arr = vim_arr.copy()
        bre = bre_arr
        bim = bim_arr
        _csolve_inplace(wre, wim, bre, bim, floor)
        norm2 = 0.0
        for i in range(n):
            norm2 += bre[i] * bre[i] + bim[i] * bim[i]
        if norm2 == 0.0:
            break
        inv = 1.0 / sqrt(norm2)
        for i in range(n):
            vre[i] = bre[i] * inv
            vim[i] = bim[i] * inv
    cdef Py_ssize_t best = 0
    cdef double bmag = -1.0, m2, mag, pre, pim, xr, xi
    for i in range(n):
        m2 = vre[i] * vre[i] + vim[i] * vim[i]
        if m2 > bmag:
            bmag = m2
            best = i
    mag = sqrt(bmag)
    if mag > 0.0:
        pre = vre[best] / mag
        pim = vim[best] / mag
        for i in range(n):
            xr = vre[i]
            xi = vim[i]
            vre[i] = xr * pre + xi * pim
            vim[i] = xi * pre - xr * pim
    return vre_arr, vim_arr


cdef double _eig_residual(const double[:, ::1] al, Py_ssize_t n, double lre,
                          double lim, double[::1] vre,
                          double[::1] vim) noexcept:
    cdef double res2 = 0.0, accr, acci
    cdef Py_ssize_t i, j
    for i in range(n):
        accr = -(lre * vre[i] - lim * vim[i])
        acci = -(lre * vim[i] + lim * vre[i])
        for j in range(n):
            accr += al[i, j] * vre[j]
            acci += al[i, j] * vim[j]
        res2 += accr * accr + acci * acci
    return sqrt(res2)


def eig(a, bint want_vectors, int budget, double vec_residual_tol):
    """All eigenvalues (optionally eigenvectors) of a real square matrix.

    Same contract as the pure lane: sorted by descending magnitude, ties by
    descending real then imaginary part.
    """
    al_arr = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] al = al_arr
    cdef Py_ssize_t n = al.shape[0]
    cdef Py_ssize_t i, j
    if n == 1:
        w_re = np.array([al[0, 0]], dtype=np.float64)
        w_im = np.zeros(1)
        if want_vectors:
            return w_re, w_im, np.ones((1, 1)), np.zeros((1, 1))
        return w_re, w_im, None, None
    h_arr = al_arr.copy()
    cdef double[:, ::1] h = h_arr
    _hessenberg(h, n)
    wr_arr = np.zeros(n, dtype=np.float64)
    wi_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] wr = wr_arr
    cdef double[::1] wi = wi_arr
    _hqr(h, n, budget, wr, wi)
    mags = [sqrt(wr[i] * wr[i] + wi[i] * wi[i]) for i in range(n)]
    order = sorted(range(n), key=lambda idx: (-mags[idx], -wr[idx], -wi[idx]))
    w_re_arr = np.array([wr[i] for i in order], dtype=np.float64)
    w_im_arr = np.array([wi[i] for i in order], dtype=np.float64)
    if not want_vectors:
        return w_re_arr, w_im_arr, None, None
    cdef double anorm2 = 0.0
    for i in range(n):
        for j in range(n):
            anorm2 += al[i, j] * al[i, j]
    cdef double anorm = sqrt(anorm2)
    cdef double[::1] wre_v = w_re_arr
    cdef double[::1] wim_v = w_im_arr
    vecs_re = []
    vecs_im = []
    cdef double lre, lim, tol
    cdef int start_kind
    cdef bint done
    for idx in range(n):
        lre = wre_v[idx]
        lim = wim_v[idx]
        if lim < 0.0 and idx > 0 and wre_v[idx - 1] == lre and wim_v[idx - 1] == -lim:
            vecs_re.append(vecs_re[idx - 1].copy())
            vecs_im.append(-vecs_im[idx - 1])
            continue
        tol = vec_residual_tol * anorm
        done = False
        for start_kind in range(2):
            vre_arr, vim_arr = _inverse_iteration(al, n, lre, lim, anorm,
                                                  start_kind)
            if _eig_residual(al, n, lre, lim, vre_arr, vim_arr) <= tol:
                done = True
                break
        if not done:
            raise ConvergenceError(
                f"eigenvector residual above {tol:.3e} for eigenvalue "
                f"{lre:+.6e}{lim:+.6e}j")
        vecs_re.append(vre_arr)
        vecs_im.append(vim_arr)
    return (w_re_arr, w_im_arr,
            np.array(vecs_re, dtype=np.float64),
            np.array(vecs_im, dtype=np.float64))


# ---------------------------------------------------------------------------
# field kernels


def march_field(gx, gy, z0, Py_ssize_t height, Py_ssize_t width,
                double limit):
    """Fill an H x W grid from z0 by column steps gx and row steps gy."""
    cdef const double[:, ::1] gxl = np.ascontiguousarray(gx, dtype=np.float64)
    cdef const double[:, ::1] gyl = np.ascontiguousarray(gy, dtype=np.float64)
    cdef const double[::1] z0v = np.ascontiguousarray(z0, dtype=np.float64)
    cdef Py_ssize_t c = gxl.shape[0]
    vals_arr = np.empty((height, width, c), dtype=np.float64)
    cdef double[:, :, ::1] vals = vals_arr
    cdef Py_ssize_t i, j, p, q
    cdef double s
    for p in range(c):
        vals[0, 0, p] = z0v[p]
    for j in range(1, width):
        for p in range(c):
            s = 0.0
            for q in range(c):
                s += gxl[p, q] * vals[0, j - 1, q]
            if not (-limit <= s <= limit):
                raise OverflowLimitError(
                    f"field value exceeded {limit:.1e} at cell (0, {j})")
            vals[0, j, p] = s
    for i in range(1, height):
        for j in range(width):
            for p in range(c):
                s = 0.0
                for q in range(c):
                    s += gyl[p, q] * vals[i - 1, j, q]
                if not (-limit <= s <= limit):
                    raise OverflowLimitError(
                        f"field value exceeded {limit:.1e} at cell ({i}, {j})")
                vals[i, j, p] = s
    return vals_arr


def eigen_field(l_re, l_im, p_re, p_im, c_re, c_im, v_re, v_im,
                Py_ssize_t height, Py_ssize_t width, double spacing):
    """Real part of sum_k c_k exp(l_k x + p_k y) v_k on the grid."""
    cdef const double[::1] lre = np.ascontiguousarray(l_re, dtype=np.float64)
    cdef const double[::1] lim = np.ascontiguousarray(l_im, dtype=np.float64)
    cdef const double[::1] pre = np.ascontiguousarray(p_re, dtype=np.float64)
    cdef const double[::1] pim = np.ascontiguousarray(p_im, dtype=np.float64)
    cdef const double[::1] cre = np.ascontiguousarray(c_re, dtype=np.float64)
    cdef const double[::1] cim = np.ascontiguousarray(c_im, dtype=np.float64)
    cdef const double[:, ::1] vre = np.ascontiguousarray(v_re, dtype=np.float64)
    cdef const double[:, ::1] vim = np.ascontiguousarray(v_im, dtype=np.float64)
    cdef Py_ssize_t n = lre.shape[0]
    cdef Py_ssize_t c = vre.shape[1]
    out_arr = np.zeros((height, width, c), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, q
    cdef double x, y, ere, eim, scale, wre, wim, fre, fim
    for i in range(height):
        y = i * spacing
        for j in range(width):
            x = j * spacing
            for k in range(n):
                ere = lre[k] * x + pre[k] * y
                eim = lim[k] * x + pim[k] * y
                scale = exp(ere)
                wre = scale * cos(eim)
                wim = scale * sin(eim)
                fre = cre[k] * wre - cim[k] * wim
                fim = cre[k] * wim + cim[k] * wre
                for q in range(c):
                    out[i, j, q] += fre * vre[k, q] - fim * vim[k, q]
    return out_arr


def heat_run(u, double lam, Py_ssize_t steps):
    """Explicit Euler steps of the 2-D heat stencil, mirrored boundary."""
    ul_arr = np.array(u, dtype=np.float64, order="C")
    cdef Py_ssize_t height = ul_arr.shape[0]
    cdef Py_ssize_t width = ul_arr.shape[1]
    nxt_arr = np.zeros((height, width), dtype=np.float64)
    cdef double[:, ::1] ul = ul_arr
    cdef double[:, ::1] nxt = nxt_arr
    cdef double[:, ::1] swap
    cdef Py_ssize_t step, i, j, iu, idn
    cdef double left, right, center
    for step in range(steps):
        for i in range(height):
            iu = i - 1 if i > 0 else 0
            idn = i + 1 if i < height - 1 else height - 1
            for j in range(width):
                left = ul[i, j - 1] if j > 0 else ul[i, 0]
                right = ul[i, j + 1] if j < width - 1 else ul[i, width - 1]
                center = ul[i, j]
                nxt[i, j] = center + lam * (ul[iu, j] + ul[idn, j] + left
                                            + right - 4.0 * center)
        swap = ul
        ul = nxt
        nxt = swap
        tmp = ul_arr
        ul_arr = nxt_arr
        nxt_arr = tmp
    return ul_arr


# ---------------------------------------------------------------------------
# prediction / fitting kernels


def project_pairs(values, src_idx, tgt_idx, p):
    """Apply projector p to source cells; return predictions and sq-error."""
    cdef const double[:, ::1] vl = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[:, ::1] pl = np.ascontiguousarray(p, dtype=np.float64)
    cdef const long long[::1] src = np.ascontiguousarray(src_idx, dtype=np.int64)
    cdef const long long[::1] tgt = np.ascontiguousarray(tgt_idx, dtype=np.int64)
    cdef Py_ssize_t c = pl.shape[0]
    cdef Py_ssize_t npairs = src.shape[0]
    preds_arr = np.empty((npairs, c), dtype=np.float64)
    cdef double[:, ::1] preds = preds_arr
    cdef double sqerr = 0.0, s, d
    cdef Py_ssize_t k, i, q, zs, zt
    for k in range(npairs):
        zs = src[k]
        zt = tgt[k]
        for i in range(c):
            s = 0.0
            for q in range(c):
                s += pl[i, q] * vl[zs, q]
            preds[k, i] = s
            d = s - vl[zt, i]
            sqerr += d * d
    return preds_arr, sqerr


def accumulate_normal(values, in_idx, out_idx):
    """Accumulate gram (z_in z_in^T) and cross (z_out z_in^T) sums."""
    cdef const double[:, ::1] vl = np.ascontiguousarray(values, dtype=np.float64)
    cdef const long long[::1] inl = np.ascontiguousarray(in_idx, dtype=np.int64)
    cdef const long long[::1] outl = np.ascontiguousarray(out_idx, dtype=np.int64)
    cdef Py_ssize_t c = vl.shape[1]
    g_arr = np.zeros((c, c), dtype=np.float64)
    r_arr = np.zeros((c, c), dtype=np.float64)
    cdef double[:, ::1] g = g_arr
    cdef double[:, ::1] r = r_arr
    cdef Py_ssize_t k, i, j, zi, zo
    cdef double zii, zoi
    for k in range(inl.shape[0]):
        zi = inl[k]
        zo = outl[k]
        for i in range(c):
            zii = vl[zi, i]
            zoi = vl[zo, i]
            for j in range(c):
                g[i, j] += zii * vl[zi, j]
                r[i, j] += zoi * vl[zi, j]
    return g_arr, r_arr


def residual_grad_pairs(values, src_idx, tgt_idx, p):
    """Sum of squared residuals of p z_s - z_t plus the gradient wrt p."""
    cdef const double[:, ::1] vl = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[:, ::1] pl = np.ascontiguousarray(p, dtype=np.float64)
    cdef const long long[::1] src = np.ascontiguousarray(src_idx, dtype=np.int64)
    cdef const long long[::1] tgt = np.ascontiguousarray(tgt_idx, dtype=np.int64)
    cdef Py_ssize_t c = pl.shape[0]
    g_arr = np.zeros((c, c), dtype=np.float64)
    cdef double[:, ::1] g = g_arr
    resid_arr = np.zeros(c, dtype=np.float64)
    cdef double[::1] resid = resid_arr
    cdef double sqerr = 0.0, s, d, di
    cdef Py_ssize_t k, i, q, zs, zt
    for k in range(src.shape[0]):
        zs = src[k]
        zt = tgt[k]
        for i in range(c):
            s = 0.0
            for q in range(c):
                s += pl[i, q] * vl[zs, q]
            d = s - vl[zt, i]
            resid[i] = d
            sqerr += d * d
        for i in range(c):
            di = resid[i]
            for j in range(c):
                g[i, j] += di * vl[zs, j]
    return sqerr, g_arr


def abs_offdiag_corr(zhat):
    """Sum over unordered position pairs of |mean channel product|."""
    cdef const double[:, ::1] zl = np.ascontiguousarray(zhat, dtype=np.float64)
    cdef Py_ssize_t n = zl.shape[0]
    cdef Py_ssize_t c = zl.shape[1]
    cdef double inv = 1.0 / c
    cdef double total = 0.0, s
    cdef Py_ssize_t i, j, q
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for q in range(c):
                s += zl[i, q] * zl[j, q]
            total += fabs(s * inv)
    return total


def conv2d_valid(img, weights, Py_ssize_t stride):
    """Valid-padding strided convolution with ReLU."""
    cdef const double[:, :, ::1] il = np.ascontiguousarray(img, dtype=np.float64)
    cdef const double[:, :, :, ::1] wl = np.ascontiguousarray(weights,
                                                              dtype=np.float64)
    cdef Py_ssize_t height = il.shape[0]
    cdef Py_ssize_t width = il.shape[1]
    cdef Py_ssize_t cin = il.shape[2]
    cdef Py_ssize_t cout = wl.shape[0]
    cdef Py_ssize_t k = wl.shape[2]
    cdef Py_ssize_t oh = (height - k) // stride + 1
    cdef Py_ssize_t ow = (width - k) // stride + 1
    out_arr = np.empty((oh, ow, cout), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t oi, oj, oc, ic, ky, kx, base_i, base_j
    cdef double s
    for oi in range(oh):
        base_i = oi * stride
        for oj in range(ow):
            base_j = oj * stride
            for oc in range(cout):
                s = 0.0
                for ic in range(cin):
                    for ky in range(k):
                        for kx in range(k):
                            s += wl[oc, ic, ky, kx] * il[base_i + ky,
                                                         base_j + kx, ic]
                if s < 0.0:
                    s = 0.0
                out[oi, oj, oc] = s
    return out_arr
