"""Pure-Python kernel lane.

Numerically identical twin of the compiled ``_core`` extension: the same
algorithms with the same operation order, so both lanes produce bit-equal
results (the extension is compiled with FP contraction off).  All kernels
take and return C-contiguous float64 numpy arrays; internally they work on
plain Python lists, which are much faster to index than numpy scalars.
"""

import math

import numpy as np

from .errors import ConvergenceError, OverflowLimitError, SingularMatrixError

_EPS = 2.220446049250313e-16

name = "python"


def _sign_like(a, b):
    # |a| carrying the sign of b, with b == -0.0 treated as positive
    return abs(a) if b >= 0.0 else -abs(a)


# ---------------------------------------------------------------------------
# dense products and solves


def mat_mul(a, b):
    al = a.tolist()
    bl = b.tolist()
    n = len(al)
    k = len(bl)
    m = len(bl[0]) if k else 0
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        ai = al[i]
        oi = out[i]
        for p in range(k):
            aip = ai[p]
            bp = bl[p]
            for j in range(m):
                oi[j] += aip * bp[j]
    return np.array(out, dtype=np.float64)


def lu_solve(a, rhs, pivot_rel_tol):
    """Solve a X = rhs with partial pivoting; rhs may have many columns."""
    al = [row[:] for row in a.tolist()]
    xl = [row[:] for row in rhs.tolist()]
    n = len(al)
    m = len(xl[0])
    amax = 0.0
    for i in range(n):
        for j in range(n):
            v = abs(al[i][j])
            if v > amax:
                amax = v
    if amax == 0.0:
        raise SingularMatrixError("matrix is exactly zero")
    floor = pivot_rel_tol * amax
    for col in range(n):
        piv = col
        pmax = abs(al[col][col])
        for i in range(col + 1, n):
            v = abs(al[i][col])
            if v > pmax:
                pmax = v
                piv = i
        if pmax <= floor:
            raise SingularMatrixError(
                f"pivot {pmax:.3e} below tolerance {floor:.3e} at column {col}")
        if piv != col:
            al[col], al[piv] = al[piv], al[col]
            xl[col], xl[piv] = xl[piv], xl[col]
        arow = al[col]
        d = arow[col]
        for i in range(col + 1, n):
            airow = al[i]
            f = airow[col] / d
            if f != 0.0:
                airow[col] = f
                for j in range(col + 1, n):
                    airow[j] -= f * arow[j]
                xi = xl[i]
                xc = xl[col]
                for j in range(m):
                    xi[j] -= f * xc[j]
            else:
                airow[col] = 0.0
    for col in range(n - 1, -1, -1):
        arow = al[col]
        xc = xl[col]
        d = arow[col]
        for j in range(m):
            xc[j] /= d
        for i in range(col):
            f = al[i][col]
            if f != 0.0:
                xi = xl[i]
                for j in range(m):
                    xi[j] -= f * xc[j]
    return np.array(xl, dtype=np.float64)


def mat_exp(a, t, scale_norm, term_tol):
    """exp(a*t) by scaling and squaring of the Taylor series."""
    al = a.tolist()
    n = len(al)
    m = [[al[i][j] * t for j in range(n)] for i in range(n)]
    fro2 = 0.0
    for i in range(n):
        for j in range(n):
            fro2 += m[i][j] * m[i][j]
    fro = math.sqrt(fro2)
    k = 0
    while fro > scale_norm:
        fro *= 0.5
        k += 1
    if k:
        s = 0.5 ** k
        for i in range(n):
            for j in range(n):
                m[i][j] *= s
    result = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    term = [row[:] for row in result]
    j = 0
    while j < 64:
        j += 1
        inv = 1.0 / j
        nxt = [[0.0] * n for _ in range(n)]
        tfro2 = 0.0
        for i in range(n):
            ti = term[i]
            ni = nxt[i]
            for p in range(n):
                tip = ti[p]
                if tip != 0.0:
                    mp = m[p]
                    for q in range(n):
                        ni[q] += tip * mp[q]
            for q in range(n):
                ni[q] *= inv
                tfro2 += ni[q] * ni[q]
        term = nxt
        for i in range(n):
            ri = result[i]
            ti = term[i]
            for q in range(n):
                ri[q] += ti[q]
        if math.sqrt(tfro2) < term_tol:
            break
    for _ in range(k):
        sq = [[0.0] * n for _ in range(n)]
        for i in range(n):
            ri = result[i]
            si = sq[i]
            for p in range(n):
                rip = ri[p]
                if rip != 0.0:
                    rp = result[p]
                    for q in range(n):
                        si[q] += rip * rp[q]
        result = sq
    return np.array(result, dtype=np.float64)


# ---------------------------------------------------------------------------
# eigen solver: Hessenberg reduction + double-shift QR (EISPACK hqr lineage)


def _hessenberg(h, n):
    for k in range(n - 2):
        sigma2 = 0.0
        for i in range(k + 1, n):
            sigma2 += h[i][k] * h[i][k]
        sigma = math.sqrt(sigma2)
        if sigma == 0.0:
            continue
        x0 = h[k + 1][k]
        alpha = -sigma if x0 >= 0.0 else sigma
        v = [h[i][k] for i in range(k + 1, n)]
        v[0] -= alpha
        vnorm2 = 0.0
        for w in v:
            vnorm2 += w * w
        if vnorm2 == 0.0:
            continue
        beta = 2.0 / vnorm2
        for j in range(k, n):
            s = 0.0
            for i in range(k + 1, n):
                s += v[i - k - 1] * h[i][j]
            s *= beta
            for i in range(k + 1, n):
                h[i][j] -= v[i - k - 1] * s
        for i in range(n):
            hi = h[i]
            s = 0.0
            for j in range(k + 1, n):
                s += hi[j] * v[j - k - 1]
            s *= beta
            for j in range(k + 1, n):
                hi[j] -= s * v[j - k - 1]
        h[k + 1][k] = alpha
        for i in range(k + 2, n):
            h[i][k] = 0.0


def _hqr(h, n, budget):
    """Eigenvalues of an upper Hessenberg matrix (in-place, destroys h)."""
    wr = [0.0] * n
    wi = [0.0] * n
    anorm = 0.0
    for i in range(n):
        for j in range(max(i - 1, 0), n):
            anorm += abs(h[i][j])
    nn = n - 1
    t = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = 0
            for ll in range(nn, 0, -1):
                s = abs(h[ll - 1][ll - 1]) + abs(h[ll][ll])
                if s == 0.0:
                    s = anorm
                if abs(h[ll][ll - 1]) <= _EPS * s:
                    h[ll][ll - 1] = 0.0
                    l = ll
                    break
            x = h[nn][nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = h[nn - 1][nn - 1]
            w = h[nn][nn - 1] * h[nn - 1][nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
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
                    h[i][i] -= x
                s = abs(h[nn][nn - 1]) + abs(h[nn - 1][nn - 2])
                x = 0.75 * s
                y = x
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = h[m][m]
                r = x - z
                s = y - z
                p = (r * s - w) / h[m + 1][m] + h[m][m + 1]
                q = h[m + 1][m + 1] - z - r - s
                r = h[m + 2][m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(h[m][m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(h[m - 1][m - 1]) + abs(z) + abs(h[m + 1][m + 1]))
                if u <= _EPS * v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                h[i][i - 2] = 0.0
            for i in range(m + 3, nn + 1):
                h[i][i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = h[k][k - 1]
                    q = h[k + 1][k - 1]
                    r = 0.0
                    if k != nn - 1:
                        r = h[k + 2][k - 1]
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = _sign_like(math.sqrt(p * p + q * q + r * r), p)
                if s != 0.0:
                    if k == m:
                        if l != m:
                            h[k][k - 1] = -h[k][k - 1]
                    else:
                        h[k][k - 1] = -s * x
                    p += s
                    x = p / s
                    y = q / s
                    z = r / s
                    q /= p
                    r /= p
                    for j in range(k, nn + 1):
                        p = h[k][j] + q * h[k + 1][j]
                        if k != nn - 1:
                            p += r * h[k + 2][j]
                            h[k + 2][j] -= p * z
                        h[k + 1][j] -= p * y
                        h[k][j] -= p * x
                    mmin = nn if nn < k + 3 else k + 3
                    for i in range(l, mmin + 1):
                        p = x * h[i][k] + y * h[i][k + 1]
                        if k != nn - 1:
                            p += z * h[i][k + 2]
                            h[i][k + 2] -= p * r
                        h[i][k + 1] -= p * q
                        h[i][k] -= p
    return wr, wi


def _csolve_lists(a_re, a_im, b_re, b_im, floor):
    """In-place complex LU solve on list-of-list data; b is one column."""
    n = len(a_re)
    for col in range(n):
        piv = col
        pmax = a_re[col][col] * a_re[col][col] + a_im[col][col] * a_im[col][col]
        for i in range(col + 1, n):
            v = a_re[i][col] * a_re[i][col] + a_im[i][col] * a_im[i][col]
            if v > pmax:
                pmax = v
                piv = i
        if piv != col:
            a_re[col], a_re[piv] = a_re[piv], a_re[col]
            a_im[col], a_im[piv] = a_im[piv], a_im[col]
            b_re[col], b_re[piv] = b_re[piv], b_re[col]
            b_im[col], b_im[piv] = b_im[piv], b_im[col]
        dre = a_re[col][col]
        dim = a_im[col][col]
        d2 = dre * dre + dim * dim
        if d2 < floor * floor:
            dre = floor
            dim = 0.0
            d2 = floor * floor
            a_re[col][col] = dre
            a_im[col][col] = dim
        for i in range(col + 1, n):
            nre = a_re[i][col]
            nim = a_im[i][col]
            if nre != 0.0 or nim != 0.0:
                fre = (nre * dre + nim * dim) / d2
                fim = (nim * dre - nre * dim) / d2
                a_re[i][col] = fre
                a_im[i][col] = fim
                for j in range(col + 1, n):
                    cre = a_re[col][j]
                    cim = a_im[col][j]
                    a_re[i][j] -= fre * cre - fim * cim
                    a_im[i][j] -= fre * cim + fim * cre
                cre = b_re[col]
                cim = b_im[col]
                b_re[i] -= fre * cre - fim * cim
                b_im[i] -= fre * cim + fim * cre
    for col in range(n - 1, -1, -1):
        dre = a_re[col][col]
        dim = a_im[col][col]
        d2 = dre * dre + dim * dim
        vre = b_re[col]
        vim = b_im[col]
        b_re[col] = (vre * dre + vim * dim) / d2
        b_im[col] = (vim * dre - vre * dim) / d2
        for i in range(col):
            fre = a_re[i][col]
            fim = a_im[i][col]
            if fre != 0.0 or fim != 0.0:
                b_re[i] -= fre * b_re[col] - fim * b_im[col]
                b_im[i] -= fre * b_im[col] + fim * b_re[col]


def csolve(a_re, a_im, b_re, b_im, pivot_rel_tol):
    """Complex linear solve (single right-hand side) with pivot flooring."""
    are = [row[:] for row in a_re.tolist()]
    aim = [row[:] for row in a_im.tolist()]
    bre = list(b_re.tolist())
    bim = list(b_im.tolist())
    n = len(are)
    amax2 = 0.0
    for i in range(n):
        for j in range(n):
            v = are[i][j] * are[i][j] + aim[i][j] * aim[i][j]
            if v > amax2:
                amax2 = v
    if amax2 == 0.0:
        raise SingularMatrixError("complex matrix is exactly zero")
    floor = pivot_rel_tol * math.sqrt(amax2)
    _csolve_lists(are, aim, bre, bim, floor)
    return np.array(bre, dtype=np.float64), np.array(bim, dtype=np.float64)


def _inverse_iteration(al, n, lre, lim, anorm, start_kind):
    sre = [[al[i][j] for j in range(n)] for i in range(n)]
    sim = [[0.0] * n for _ in range(n)]
    for i in range(n):
        sre[i][i] -= lre
        sim[i][i] = -lim
    floor = _EPS * anorm
    if floor == 0.0:
        floor = _EPS
    # deterministic start vectors: flat, then alternating
    if start_kind == 0:
        vre = [1.0] * n
    else:
        vre = [1.0 if (i % 2) == 0 else -1.0 for i in range(n)]
    vim = [0.0] * n
    for _ in range(3):
        wre = [[sre[i][j] for j in range(n)] for i in range(n)]
        wim = [[sim[i][j] for j in range(n)] for i in range(n)]
        bre = vre[:]
        bim = vim[:]
        _csolve_lists(wre, wim, bre, bim, floor)
        norm2 = 0.0
        for i in range(n):
            norm2 += bre[i] * bre[i] + bim[i] * bim[i]
        if norm2 == 0.0:
            break
        inv = 1.0 / math.sqrt(norm2)
        vre = [x * inv for x in bre]
        vim = [x * inv for x in bim]
    # rotate the dominant component onto the positive real axis
    best = 0
    bmag = -1.0
    for i in range(n):
        m2 = vre[i] * vre[i] + vim[i] * vim[i]
        if m2 > bmag:
            bmag = m2
            best = i
    mag = math.sqrt(bmag)
    if mag > 0.0:
        pre = vre[best] / mag
        pim = vim[best] / mag
        for i in range(n):
            xr = vre[i]
            xi = vim[i]
            vre[i] = xr * pre + xi * pim
            vim[i] = xi * pre - xr * pim
    return vre, vim


def _eig_residual(al, n, lre, lim, vre, vim):
    res2 = 0.0
    for i in range(n):
        accr = -(lre * vre[i] - lim * vim[i])
        acci = -(lre * vim[i] + lim * vre[i])
        ai = al[i]
        for j in range(n):
            accr += ai[j] * vre[j]
            acci += ai[j] * vim[j]
        res2 += accr * accr + acci * acci
    return math.sqrt(res2)


def eig(a, want_vectors, budget, vec_residual_tol):
    """All eigenvalues (optionally eigenvectors) of a real square matrix.

    Returns (w_re, w_im, v_re, v_im); the vector arrays are None unless
    requested.  Eigenvalues are sorted by descending magnitude, ties by
    descending real then imaginary part, so conjugate pairs stay adjacent.
    """
    al = a.tolist()
    n = len(al)
    if n == 1:
        w_re = np.array([al[0][0]], dtype=np.float64)
        w_im = np.zeros(1)
        if want_vectors:
            return w_re, w_im, np.ones((1, 1)), np.zeros((1, 1))
        return w_re, w_im, None, None
    h = [row[:] for row in al]
    _hessenberg(h, n)
    wr, wi = _hqr(h, n, budget)
    mags = [math.sqrt(wr[i] * wr[i] + wi[i] * wi[i]) for i in range(n)]
    order = sorted(range(n), key=lambda i: (-mags[i], -wr[i], -wi[i]))
    w_re = np.array([wr[i] for i in order], dtype=np.float64)
    w_im = np.array([wi[i] for i in order], dtype=np.float64)
    if not want_vectors:
        return w_re, w_im, None, None
    anorm2 = 0.0
    for i in range(n):
        for j in range(n):
            anorm2 += al[i][j] * al[i][j]
    anorm = math.sqrt(anorm2)
    vecs_re = []
    vecs_im = []
    for idx in range(n):
        lre = float(w_re[idx])
        lim = float(w_im[idx])
        if lim < 0.0 and idx > 0 and w_re[idx - 1] == lre and w_im[idx - 1] == -lim:
            vre = vecs_re[idx - 1][:]
            vim = [-x for x in vecs_im[idx - 1]]
            vecs_re.append(vre)
            vecs_im.append(vim)
            continue
        tol = vec_residual_tol * anorm
        done = False
        for start_kind in (0, 1):
            vre, vim = _inverse_iteration(al, n, lre, lim, anorm, start_kind)
            if _eig_residual(al, n, lre, lim, vre, vim) <= tol:
                done = True
                break
        if not done:
            raise ConvergenceError(
                f"eigenvector residual above {tol:.3e} for eigenvalue "
                f"{lre:+.6e}{lim:+.6e}j")
        vecs_re.append(vre)
        vecs_im.append(vim)
    return (w_re, w_im,
            np.array(vecs_re, dtype=np.float64),
            np.array(vecs_im, dtype=np.float64))


# ---------------------------------------------------------------------------
# field kernels


def march_field(gx, gy, z0, height, width, limit):
    """Fill an H x W grid from z0 by column steps gx and row steps gy."""
    gxl = gx.tolist()
    gyl = gy.tolist()
    c = len(gxl)
    vals = [[None] * width for _ in range(height)]
    cur = list(z0.tolist())
    vals[0][0] = cur
    for j in range(1, width):
        prev = vals[0][j - 1]
        nxt = [0.0] * c
        for p in range(c):
            row = gxl[p]
            s = 0.0
            for q in range(c):
                s += row[q] * prev[q]
            if not (-limit <= s <= limit):
                raise OverflowLimitError(
                    f"field value exceeded {limit:.1e} at cell (0, {j})")
            nxt[p] = s
        vals[0][j] = nxt
    for i in range(1, height):
        above = vals[i - 1]
        here = vals[i]
        for j in range(width):
            prev = above[j]
            nxt = [0.0] * c
            for p in range(c):
                row = gyl[p]
                s = 0.0
                for q in range(c):
                    s += row[q] * prev[q]
                if not (-limit <= s <= limit):
                    raise OverflowLimitError(
                        f"field value exceeded {limit:.1e} at cell ({i}, {j})")
                nxt[p] = s
            here[j] = nxt
    return np.array(vals, dtype=np.float64)


def eigen_field(l_re, l_im, p_re, p_im, c_re, c_im, v_re, v_im,
                height, width, spacing):
    """Real part of sum_k c_k exp(l_k x + p_k y) v_k on the grid."""
    lre = l_re.tolist()
    lim = l_im.tolist()
    pre = p_re.tolist()
    pim = p_im.tolist()
    cre = c_re.tolist()
    cim = c_im.tolist()
    vre = v_re.tolist()
    vim = v_im.tolist()
    n = len(lre)
    c = len(vre[0])
    out = [[[0.0] * c for _ in range(width)] for _ in range(height)]
    for i in range(height):
        y = i * spacing
        for j in range(width):
            x = j * spacing
            cell = out[i][j]
            for k in range(n):
                ere = lre[k] * x + pre[k] * y
                eim = lim[k] * x + pim[k] * y
                scale = math.exp(ere)
                wre = scale * math.cos(eim)
                wim = scale * math.sin(eim)
                fre = cre[k] * wre - cim[k] * wim
                fim = cre[k] * wim + cim[k] * wre
                vk_re = vre[k]
                vk_im = vim[k]
                for q in range(c):
                    cell[q] += fre * vk_re[q] - fim * vk_im[q]
    return np.array(out, dtype=np.float64)


def heat_run(u, lam, steps):
    """Explicit Euler steps of the 2-D heat stencil, mirrored boundary."""
    ul = [row[:] for row in u.tolist()]
    height = len(ul)
    width = len(ul[0])
    for _ in range(steps):
        nxt = [[0.0] * width for _ in range(height)]
        for i in range(height):
            up = ul[i - 1] if i > 0 else ul[0]
            down = ul[i + 1] if i < height - 1 else ul[height - 1]
            row = ul[i]
            out = nxt[i]
            for j in range(width):
                left = row[j - 1] if j > 0 else row[0]
                right = row[j + 1] if j < width - 1 else row[width - 1]
                center = row[j]
                out[j] = center + lam * (up[j] + down[j] + left + right
                                         - 4.0 * center)
        ul = nxt
    return np.array(ul, dtype=np.float64)


# ---------------------------------------------------------------------------
# prediction / fitting kernels


def project_pairs(values, src_idx, tgt_idx, p):
    """Apply projector p to source cells; return predictions and sq-error."""
    vl = values.tolist()
    pl = p.tolist()
    src = src_idx.tolist()
    tgt = tgt_idx.tolist()
    c = len(pl)
    npairs = len(src)
    preds = [[0.0] * c for _ in range(npairs)]
    sqerr = 0.0
    for k in range(npairs):
        zs = vl[src[k]]
        zt = vl[tgt[k]]
        row = preds[k]
        for i in range(c):
            pi = pl[i]
            s = 0.0
            for q in range(c):
                s += pi[q] * zs[q]
            row[i] = s
            d = s - zt[i]
            sqerr += d * d
    return np.array(preds, dtype=np.float64), sqerr


def accumulate_normal(values, in_idx, out_idx):
    """Accumulate gram (z_in z_in^T) and cross (z_out z_in^T) sums."""
    vl = values.tolist()
    inl = in_idx.tolist()
    outl = out_idx.tolist()
    c = len(vl[0])
    g = [[0.0] * c for _ in range(c)]
    r = [[0.0] * c for _ in range(c)]
    for k in range(len(inl)):
        zi = vl[inl[k]]
        zo = vl[outl[k]]
        for i in range(c):
            gi = g[i]
            ri = r[i]
            zii = zi[i]
            zoi = zo[i]
            for j in range(c):
                gi[j] += zii * zi[j]
                ri[j] += zoi * zi[j]
    return np.array(g, dtype=np.float64), np.array(r, dtype=np.float64)


def residual_grad_pairs(values, src_idx, tgt_idx, p):
    """Sum of squared residuals of p z_s - z_t plus the gradient wrt p."""
    vl = values.tolist()
    pl = p.tolist()
    src = src_idx.tolist()
    tgt = tgt_idx.tolist()
    c = len(pl)
    g = [[0.0] * c for _ in range(c)]
    sqerr = 0.0
    resid = [0.0] * c
    for k in range(len(src)):
        zs = vl[src[k]]
        zt = vl[tgt[k]]
        for i in range(c):
            pi = pl[i]
            s = 0.0
            for q in range(c):
                s += pi[q] * zs[q]
            d = s - zt[i]
            resid[i] = d
            sqerr += d * d
        for i in range(c):
            gi = g[i]
            di = resid[i]
            for j in range(c):
                gi[j] += di * zs[j]
    return sqerr, np.array(g, dtype=np.float64)


def abs_offdiag_corr(zhat):
    """Sum over unordered position pairs of |mean channel product|."""
    zl = zhat.tolist()
    n = len(zl)
    c = len(zl[0])
    inv = 1.0 / c
    total = 0.0
    for i in range(n):
        zi = zl[i]
        for j in range(i + 1, n):
            zj = zl[j]
            s = 0.0
            for q in range(c):
                s += zi[q] * zj[q]
            total += abs(s * inv)
    return total


def conv2d_valid(img, weights, stride):
    """Valid-padding strided convolution with ReLU."""
    il = img.tolist()
    wl = weights.tolist()
    height = len(il)
    width = len(il[0])
    cin = len(il[0][0])
    cout = len(wl)
    k = len(wl[0][0])
    oh = (height - k) // stride + 1
    ow = (width - k) // stride + 1
    out = [[[0.0] * cout for _ in range(ow)] for _ in range(oh)]
    for oi in range(oh):
        base_i = oi * stride
        for oj in range(ow):
            base_j = oj * stride
            cell = out[oi][oj]
            for oc in range(cout):
                woc = wl[oc]
                s = 0.0
                for ic in range(cin):
                    wic = woc[ic]
                    for ky in range(k):
                        wrow = wic[ky]
                        irow = il[base_i + ky]
                        for kx in range(k):
                            s += wrow[kx] * irow[base_j + kx][ic]
                if s < 0.0:
                    s = 0.0
                cell[oc] = s
    return np.array(out, dtype=np.float64)
