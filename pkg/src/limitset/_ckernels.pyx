# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numeric kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, isfinite, pow

cnp.import_array()

BACKEND = "cython"


cdef inline void _pgrad(const double[:, ::1] c, double x, double y,
                        double* v_out, double* vx_out, double* vy_out) noexcept nogil:
    cdef Py_ssize_t nx = c.shape[0], ny = c.shape[1], i, j
    cdef double v = 0.0, vx = 0.0, vy = 0.0, r, ry
    for i in range(nx - 1, -1, -1):
        r = 0.0
        ry = 0.0
        for j in range(ny - 1, -1, -1):
            ry = ry * y + r
            r = r * y + c[i, j]
        vx = vx * x + v
        v = v * x + r
        vy = vy * x + ry
    v_out[0] = v
    vx_out[0] = vx
    vy_out[0] = vy


cdef inline void _hm(const double[:, ::1] c, const double[:, ::1] pts, double t, bint square,
                     double x, double y, double* h, double* hx, double* hy) noexcept nogil:
    cdef double v, vx, vy, prod, gx, gy, dx, dy, q, t2
    cdef Py_ssize_t k
    _pgrad(c, x, y, &v, &vx, &vy)
    if square:
        h[0] = v * v
        hx[0] = 2.0 * v * vx
        hy[0] = 2.0 * v * vy
    else:
        h[0] = v
        hx[0] = vx
        hy[0] = vy
    if t != 0.0:
        prod = 1.0
        gx = 0.0
        gy = 0.0
        t2 = t * t
        for k in range(pts.shape[0]):
            dx = x - pts[k, 0]
            dy = y - pts[k, 1]
            q = dx * dx + dy * dy - t2
            gx = gx * q + prod * 2.0 * dx
            gy = gy * q + prod * 2.0 * dy
            prod = prod * q
        h[0] -= t * prod
        hx[0] -= t * gx
        hy[0] -= t * gy


def _prep(coef, pts):
    c = np.ascontiguousarray(coef, dtype=np.float64)
    p = np.ascontiguousarray(np.asarray(pts, dtype=np.float64).reshape(-1, 2))
    return c, p


def hmodel_eval(coef, pts, double t, bint square, xs, ys):
    c_arr, p_arr = _prep(coef, pts)
    cdef const double[:, ::1] c = c_arr
    cdef const double[:, ::1] p = p_arr
    xa = np.asarray(xs, dtype=np.float64)
    ya = np.broadcast_to(np.asarray(ys, dtype=np.float64), xa.shape)
    shape = xa.shape
    cdef const double[::1] xf = np.ascontiguousarray(xa).ravel()
    cdef const double[::1] yf = np.ascontiguousarray(ya).ravel()
    cdef Py_ssize_t n = xf.shape[0], i
    h_arr = np.empty(n)
    hx_arr = np.empty(n)
    hy_arr = np.empty(n)
    cdef double[::1] h = h_arr
    cdef double[::1] hx = hx_arr
    cdef double[::1] hy = hy_arr
    with nogil:
        for i in range(n):
            _hm(c, p, t, square, xf[i], yf[i], &h[i], &hx[i], &hy[i])
    return h_arr.reshape(shape), hx_arr.reshape(shape), hy_arr.reshape(shape)


def hmodel_point(coef, pts, double t, bint square, double x, double y):
    cdef const double[:, ::1] c = coef
    cdef const double[:, ::1] p = pts
    cdef double h, hx, hy
    _hm(c, p, t, square, x, y, &h, &hx, &hy)
    return h, hx, hy


cdef inline void _edge_point(int e, Py_ssize_t i, Py_ssize_t j, double v00, double v10,
                             double v11, double v01, double* a, double* b) noexcept nogil:
    if e == 0:
        a[0] = i + v00 / (v00 - v10)
        b[0] = j
    elif e == 1:
        a[0] = i + 1
        b[0] = j + v10 / (v10 - v11)
    elif e == 2:
        a[0] = i + v01 / (v01 - v11)
        b[0] = j + 1
    else:
        a[0] = i
        b[0] = j + v00 / (v00 - v01)


# per case: up to two (edge, edge) pairs, -1 terminated
cdef int[16][4] _TABLE = [
    [-1, -1, -1, -1], [3, 0, -1, -1], [0, 1, -1, -1], [3, 1, -1, -1],
    [1, 2, -1, -1], [-1, -1, -1, -1], [0, 2, -1, -1], [2, 3, -1, -1],
    [2, 3, -1, -1], [0, 2, -1, -1], [-1, -1, -1, -1], [1, 2, -1, -1],
    [3, 1, -1, -1], [0, 1, -1, -1], [3, 0, -1, -1], [-1, -1, -1, -1],
]


def marching_squares(vals, center):
    cdef const double[:, ::1] v = np.ascontiguousarray(vals, dtype=np.float64)
    cdef const double[:, ::1] cen = np.ascontiguousarray(center, dtype=np.float64)
    cdef Py_ssize_t n0 = v.shape[0], n1 = v.shape[1], i, j, m = 0
    cdef Py_ssize_t cap = max(16, 2 * (n0 + n1))
    out_arr = np.empty((cap, 4))
    cdef double[:, ::1] out = out_arr
    cdef int k, q, ea, eb
    cdef int pairs[4]
    cdef double v00, v10, v11, v01, ax, ay, bx, by
    cdef bint cpos
    for i in range(n0 - 1):
        for j in range(n1 - 1):
            v00 = v[i, j]
            v10 = v[i + 1, j]
            v11 = v[i + 1, j + 1]
            v01 = v[i, j + 1]
            k = (v00 > 0) | ((v10 > 0) << 1) | ((v11 > 0) << 2) | ((v01 > 0) << 3)
            if k == 0 or k == 15:
                continue
            if k == 5 or k == 10:
                cpos = cen[i, j] > 0
                if (k == 5) == cpos:
                    pairs[0] = 3; pairs[1] = 2; pairs[2] = 0; pairs[3] = 1
                else:
                    pairs[0] = 3; pairs[1] = 0; pairs[2] = 1; pairs[3] = 2
            else:
                for q in range(4):
                    pairs[q] = _TABLE[k][q]
            for q in range(0, 4, 2):
                ea = pairs[q]
                eb = pairs[q + 1]
                if ea < 0:
                    break
                if m >= cap:
                    cap *= 2
                    out_arr = np.resize(out_arr, (cap, 4))
                    out = out_arr
                _edge_point(ea, i, j, v00, v10, v11, v01, &ax, &ay)
                _edge_point(eb, i, j, v00, v10, v11, v01, &bx, &by)
                out[m, 0] = ax
                out[m, 1] = ay
                out[m, 2] = bx
                out[m, 3] = by
                m += 1
    return np.array(out_arr[:m])


def label(mask, bint eight=False):
    cdef const cnp.uint8_t[:, ::1] mk = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t n0 = mk.shape[0], n1 = mk.shape[1]
    labels_arr = np.zeros((n0, n1), dtype=np.int32)
    cdef int[:, ::1] lab = labels_arr
    stack_arr = np.empty(max(1, n0 * n1), dtype=np.intp)
    cdef Py_ssize_t[::1] stack = stack_arr
    cdef Py_ssize_t i0, j0, i, j, top, cell, head, a, b
    cdef int da, db
    cdef int count = 0
    with nogil:
        for i0 in range(n0):
            for j0 in range(n1):
                if not mk[i0, j0] or lab[i0, j0]:
                    continue
                count += 1
                lab[i0, j0] = count
                head = 0
                top = 0
                stack[top] = i0 * n1 + j0
                top += 1
                while head < top:
                    cell = stack[head]
                    head += 1
                    i = cell // n1
                    j = cell - i * n1
                    if i > 0 and mk[i - 1, j] and not lab[i - 1, j]:
                        lab[i - 1, j] = count
                        stack[top] = cell - n1
                        top += 1
                    if i < n0 - 1 and mk[i + 1, j] and not lab[i + 1, j]:
                        lab[i + 1, j] = count
                        stack[top] = cell + n1
                        top += 1
                    if j > 0 and mk[i, j - 1] and not lab[i, j - 1]:
                        lab[i, j - 1] = count
                        stack[top] = cell - 1
                        top += 1
                    if j < n1 - 1 and mk[i, j + 1] and not lab[i, j + 1]:
                        lab[i, j + 1] = count
                        stack[top] = cell + 1
                        top += 1
                    if eight:
                        for da in range(-1, 2, 2):
                            for db in range(-1, 2, 2):
                                a = i + da
                                b = j + db
                                if 0 <= a < n0 and 0 <= b < n1 and mk[a, b] and not lab[a, b]:
                                    lab[a, b] = count
                                    stack[top] = a * n1 + b
                                    top += 1
    return labels_arr, count


def directed_hausdorff(a, p0, p1):
    cdef const double[:, ::1] A = np.ascontiguousarray(np.asarray(a, dtype=np.float64).reshape(-1, 2))
    cdef const double[:, ::1] P = np.ascontiguousarray(np.asarray(p0, dtype=np.float64).reshape(-1, 2))
    cdef const double[:, ::1] R = np.ascontiguousarray(np.asarray(p1, dtype=np.float64).reshape(-1, 2))
    cdef Py_ssize_t na = A.shape[0], nb = P.shape[0], i, k, last = 0
    cdef double best = 0.0, cmin, dx, dy, rx, ry, dd, s, ex, ey, d2
    with nogil:
        for i in range(na):
            cmin = 1e308
            # start from the segment that served the previous point
            for k in range(nb):
                s = 0.0
                dx = R[(k + last) % nb, 0] - P[(k + last) % nb, 0]
                dy = R[(k + last) % nb, 1] - P[(k + last) % nb, 1]
                rx = A[i, 0] - P[(k + last) % nb, 0]
                ry = A[i, 1] - P[(k + last) % nb, 1]
                dd = dx * dx + dy * dy
                if dd > 0.0:
                    s = (rx * dx + ry * dy) / dd
                    if s < 0.0:
                        s = 0.0
                    elif s > 1.0:
                        s = 1.0
                ex = rx - s * dx
                ey = ry - s * dy
                d2 = ex * ex + ey * ey
                if d2 < cmin:
                    cmin = d2
                    if cmin <= best:
                        last = (k + last) % nb
                        break
            if cmin > best:
                best = cmin
    return sqrt(best)


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)

cdef double[7] _C = [0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0]
cdef double[7][6] _A = [
    [0, 0, 0, 0, 0, 0],
    [1.0 / 5, 0, 0, 0, 0, 0],
    [3.0 / 40, 9.0 / 40, 0, 0, 0, 0],
    [44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0],
    [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0],
    [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0],
    [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84],
]
cdef double[7] _E = [71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920,
                     -17253.0 / 339200, 22.0 / 525, -1.0 / 40]


cdef class _Field:
    cdef int mode
    cdef const double[:, ::1] coef
    cdef const double[:, ::1] pts
    cdef const double[:, ::1] pc
    cdef const double[:, ::1] qc
    cdef double t, sign
    cdef bint square

    def __init__(self, field):
        mode, coef, pts, t, square, pc, qc, sign = field
        self.mode = int(mode)
        self.coef = np.ascontiguousarray(np.atleast_2d(np.asarray(coef, dtype=np.float64)))
        self.pts = np.ascontiguousarray(np.asarray(pts, dtype=np.float64).reshape(-1, 2))
        self.pc = np.ascontiguousarray(np.atleast_2d(np.asarray(pc, dtype=np.float64)))
        self.qc = np.ascontiguousarray(np.atleast_2d(np.asarray(qc, dtype=np.float64)))
        self.t = float(t)
        self.square = bool(square)
        self.sign = float(sign)

    cdef inline void ev(self, double x, double y, double* u, double* v) noexcept nogil:
        cdef double h, hx, hy, a, b
        if self.mode == 0:
            _hm(self.coef, self.pts, self.t, self.square, x, y, &h, &hx, &hy)
            u[0] = self.sign * (hy + h * hx)
            v[0] = self.sign * (-hx + h * hy)
        else:
            _pgrad(self.pc, x, y, &h, &a, &b)
            u[0] = self.sign * h
            _pgrad(self.qc, x, y, &h, &a, &b)
            v[0] = self.sign * h


cdef inline void _herm(double* y0, double* f0, double* y1, double* f1, double h, double th,
                       double* out) noexcept nogil:
    cdef double th2 = th * th, th3 = th * th * th
    cdef double h00 = 2 * th3 - 3 * th2 + 1, h10 = th3 - 2 * th2 + th
    cdef double h01 = -2 * th3 + 3 * th2, h11 = th3 - th2
    out[0] = h00 * y0[0] + h10 * h * f0[0] + h01 * y1[0] + h11 * h * f1[0]
    out[1] = h00 * y0[1] + h10 * h * f0[1] + h01 * y1[1] + h11 * h * f1[1]


def dopri5(field, double x0, double y0, double t_end, double rtol, double atol, section,
           int max_events, long max_steps, box):
    cdef _Field f = _Field(field)
    cdef double bx0 = box[0], bx1 = box[1], by0 = box[2], by1 = box[3]
    cdef double t = 0.0, h, tn, err, s0, s1, ex, ey, scale0, sc, fac
    cdef double y[2]
    cdef double yn[2]
    cdef double pm[2]
    cdef double k[7][2]
    cdef double px, py, sig = 0.0, sgn, lo, hi, mid
    cdef double sx = 0, sy = 0, tx = 0, ty = 0, nx = 0, ny = 0, half = 0
    cdef bint has_sec = section is not None, stop
    cdef int s, m, it, status = 0, nev = 0
    cdef long steps = 0
    if has_sec:
        sx, sy, tx, ty, nx, ny, half = section
    cap = 1024
    tarr = np.empty(cap)
    xarr = np.empty(cap)
    yarr = np.empty(cap)
    cdef double[::1] tv = tarr
    cdef double[::1] xv = xarr
    cdef double[::1] yv = yarr
    events = []
    cdef Py_ssize_t n = 1
    y[0] = x0
    y[1] = y0
    f.ev(y[0], y[1], &k[0][0], &k[0][1])
    tv[0] = 0.0
    xv[0] = x0
    yv[0] = y0
    scale0 = max(fabs(k[0][0]), fabs(k[0][1]))
    sc = atol + rtol * max(fabs(y[0]), fabs(y[1]))
    h = 0.01 * sc / scale0 if scale0 > 0 else 1e-6
    h = min(max(h, 1e-12), t_end if t_end > 0 else 1.0)
    if has_sec:
        sig = tx * (y[0] - sx) + ty * (y[1] - sy)
    while t < t_end:
        if steps >= max_steps:
            status = 4
            break
        h = min(h, t_end - t)
        if h < 1e-14 * max(1.0, fabs(t)):
            status = 3
            break
        for s in range(1, 7):
            px = y[0]
            py = y[1]
            for m in range(s):
                px += h * _A[s][m] * k[m][0]
                py += h * _A[s][m] * k[m][1]
            f.ev(px, py, &k[s][0], &k[s][1])
        yn[0] = px
        yn[1] = py
        ex = 0.0
        ey = 0.0
        for m in range(7):
            ex += _E[m] * k[m][0]
            ey += _E[m] * k[m][1]
        ex *= h
        ey *= h
        s0 = atol + rtol * max(fabs(y[0]), fabs(yn[0]))
        s1 = atol + rtol * max(fabs(y[1]), fabs(yn[1]))
        err = sqrt(0.5 * ((ex / s0) * (ex / s0) + (ey / s1) * (ey / s1)))
        if not isfinite(err):
            h *= 0.1
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * pow(err, -0.2))
            continue
        steps += 1
        tn = t + h
        stop = False
        if has_sec:
            sgn = tx * (yn[0] - sx) + ty * (yn[1] - sy)
            if sig < 0.0 <= sgn:
                lo = 0.0
                hi = 1.0
                for it in range(60):
                    mid = 0.5 * (lo + hi)
                    _herm(y, k[0], yn, k[6], h, mid, pm)
                    if tx * (pm[0] - sx) + ty * (pm[1] - sy) < 0.0:
                        lo = mid
                    else:
                        hi = mid
                _herm(y, k[0], yn, k[6], h, hi, pm)
                if fabs(nx * (pm[0] - sx) + ny * (pm[1] - sy)) <= half:
                    events.append((t + hi * h, pm[0], pm[1]))
                    nev += 1
                    if nev >= max_events:
                        stop = True
            sig = sgn
        t = tn
        y[0] = yn[0]
        y[1] = yn[1]
        k[0][0] = k[6][0]
        k[0][1] = k[6][1]
        if n >= cap:
            cap *= 2
            tarr = np.resize(tarr, cap)
            xarr = np.resize(xarr, cap)
            yarr = np.resize(yarr, cap)
            tv = tarr
            xv = xarr
            yv = yarr
        tv[n] = t
        xv[n] = y[0]
        yv[n] = y[1]
        n += 1
        if stop:
            status = 1
            break
        if not (bx0 <= y[0] <= bx1 and by0 <= y[1] <= by1):
            status = 2
            break
        if err == 0.0:
            fac = 5.0
        else:
            fac = min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
        h *= fac
    return (status, np.array(tarr[:n]), np.array(xarr[:n]), np.array(yarr[:n]),
            np.array(events, dtype=np.float64).reshape(-1, 3))
