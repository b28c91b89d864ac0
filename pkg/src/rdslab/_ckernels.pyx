# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled step kernels. Mirrors ``_pykernels.py`` name for name."""
from libc.math cimport (M_PI, acos, asin, asinh, atan2, cos, cosh, fabs, floor,
                        hypot, isfinite, log, sin, sinh, sqrt)

import numpy as np

from rdslab.errors import DegenerateAngle, NonFiniteAccumulator, RootFindFailure

GRAZING = 1e-9
SHAPE_POLAR = 0
SHAPE_ELLIPSE = 1
BACKEND = "cython"

cdef double C_GRAZING = 1e-9
cdef int MAX_ROOT_ITER = 100
cdef double TWO_PI = 2.0 * M_PI


cdef struct Frame:
    double x[3]
    double t[3]
    double n[3]
    double kappa


cdef inline double _wrap(double v, double lo, double length) nogil:
    cdef double w = v - length * floor((v - lo) / length)
    if w >= lo + length:
        w -= length
    return w


cdef class StepKernel:
    cdef public double lo2
    cdef public double len2

    def __cinit__(self):
        self.lo2 = 0.0
        self.len2 = 1.0

    cdef int cstep(self, double y0, double y1, double* out) except -1:
        raise NotImplementedError

    def step(self, double y0, double y1):
        cdef double out[6]
        self.cstep(y0, y1, out)
        return out[0], out[1], out[2], out[3], out[4], out[5]


cdef class BilliardKernel(StepKernel):
    """Billiard map on the torus R/Z x R/2Z for one table."""

    cdef public int surface, shape, nknots
    cdef public double p0, p1, p2, length
    cdef double[::1] uk
    cdef double[::1] duk

    def __init__(self, int surface, int shape, double p0, double p1, double p2,
                 double length, u_knots, du_knots):
        self.surface = surface
        self.shape = shape
        self.p0 = p0
        self.p1 = p1
        self.p2 = p2
        self.length = length
        self.uk = np.ascontiguousarray(u_knots, dtype=np.float64)
        self.duk = np.ascontiguousarray(du_knots, dtype=np.float64)
        self.nknots = self.uk.shape[0] - 1
        self.lo2 = -1.0
        self.len2 = 2.0

    def __reduce__(self):
        return (BilliardKernel, (self.surface, self.shape, self.p0, self.p1, self.p2,
                                 self.length, np.asarray(self.uk), np.asarray(self.duk)))

    cdef inline double param(self, double s) nogil:
        cdef int n = self.nknots
        cdef double x, t, t2, t3, h, m0, m1
        cdef int j
        s = s - floor(s)
        x = s * n
        j = <int>x
        if j >= n:
            j = n - 1
        t = x - j
        h = 1.0 / n
        m0 = self.duk[j] * h
        m1 = self.duk[j + 1] * h
        t2 = t * t
        t3 = t2 * t
        return ((2.0 * t3 - 3.0 * t2 + 1.0) * self.uk[j] + (t3 - 2.0 * t2 + t) * m0
                + (-2.0 * t3 + 3.0 * t2) * self.uk[j + 1] + (t3 - t2) * m1)

    cdef inline void curve(self, double u, double* X, double* D1, double* D2) nogil:
        cdef double phi = TWO_PI * u
        cdef double c = cos(phi), sn = sin(phi)
        cdef double a, b, rho0, eps, m, cm, sm, rho, d1, d2
        cdef double S, S1, S2, C, C1, C2, radial1, radial2
        if self.shape == 1:
            a = self.p0
            b = self.p1
            X[0] = a * c; X[1] = b * sn; X[2] = 0.0
            D1[0] = -a * sn; D1[1] = b * c; D1[2] = 0.0
            D2[0] = -a * c; D2[1] = -b * sn; D2[2] = 0.0
            return
        rho0 = self.p0
        eps = self.p1
        m = self.p2
        cm = cos(m * phi)
        sm = sin(m * phi)
        rho = rho0 * (1.0 + eps * cm)
        d1 = -rho0 * eps * m * sm
        d2 = -rho0 * eps * m * m * cm
        if self.surface == 0:
            S = rho; S1 = 1.0; S2 = 0.0
            C = 0.0; C1 = 0.0; C2 = 0.0
        elif self.surface == 1:
            S = sin(rho); S1 = cos(rho); S2 = -S
            C = S1; C1 = -S; C2 = -C
        else:
            S = sinh(rho); S1 = cosh(rho); S2 = S
            C = S1; C1 = S; C2 = C
        radial1 = S1 * d1
        radial2 = S2 * d1 * d1 + S1 * d2
        X[0] = S * c; X[1] = S * sn; X[2] = C
        D1[0] = radial1 * c - S * sn
        D1[1] = radial1 * sn + S * c
        D1[2] = C1 * d1
        D2[0] = radial2 * c - 2.0 * radial1 * sn - S * c
        D2[1] = radial2 * sn + 2.0 * radial1 * c - S * sn
        D2[2] = C2 * d1 * d1 + C1 * d2

    cdef inline double inner(self, const double* a, const double* b) nogil:
        return a[0] * b[0] + a[1] * b[1] + self.surface * a[2] * b[2]

    cdef inline void frame(self, double s, Frame* f) nogil:
        cdef double D1[3]
        cdef double D2[3]
        cdef double sp
        self.curve(self.param(s), f.x, D1, D2)
        sp = sqrt(self.inner(D1, D1))
        f.t[0] = D1[0] / sp; f.t[1] = D1[1] / sp; f.t[2] = D1[2] / sp
        if self.surface == 0:
            f.n[0] = -f.t[1]; f.n[1] = f.t[0]; f.n[2] = 0.0
        else:
            f.n[0] = f.x[1] * f.t[2] - f.x[2] * f.t[1]
            f.n[1] = f.x[2] * f.t[0] - f.x[0] * f.t[2]
            f.n[2] = f.x[0] * f.t[1] - f.x[1] * f.t[0]
            if self.surface == -1:
                f.n[2] = -f.n[2]
        f.kappa = self.inner(D2, f.n) / (sp * sp)

    cdef inline double distance(self, const double* p, const double* q) nogil:
        cdef double w0 = q[0] - p[0], w1 = q[1] - p[1], w2 = q[2] - p[2], c, m2
        if self.surface == 0:
            return hypot(w0, w1)
        if self.surface == 1:
            c = 0.5 * sqrt(w0 * w0 + w1 * w1 + w2 * w2)
            return 2.0 * asin(c if c < 1.0 else 1.0)
        m2 = w0 * w0 + w1 * w1 - w2 * w2
        return 2.0 * asinh(0.5 * sqrt(m2 if m2 > 0.0 else 0.0))

    def chart(self, double s):
        """(point, unit tangent, inward unit normal, geodesic curvature) at s."""
        cdef Frame f
        self.frame(s, &f)
        return ((f.x[0], f.x[1], f.x[2]), (f.t[0], f.t[1], f.t[2]),
                (f.n[0], f.n[1], f.n[2]), f.kappa)

    cdef int ccollide(self, double s, double theta, Frame* fp, Frame* fq,
                      double* res) except -1:
        cdef double lo = 0.0, hi = 1.0, d, dn, f, slope, a, b, s1
        cdef double w[3]
        cdef int it, done = 0
        s = s - floor(s)
        self.frame(s, fp)
        d = theta / M_PI
        for it in range(MAX_ROOT_ITER):
            self.frame(s + d, fq)
            w[0] = fq.x[0] - fp.x[0]; w[1] = fq.x[1] - fp.x[1]; w[2] = fq.x[2] - fp.x[2]
            a = self.inner(w, fp.t)
            b = self.inner(w, fp.n)
            f = atan2(b, a) - theta
            if f > 0.0:
                hi = d
            else:
                lo = d
            slope = self.length * (a * self.inner(fq.t, fp.n) - b * self.inner(fq.t, fp.t)) / (a * a + b * b)
            dn = d - f / slope if slope > 0.0 else -1.0
            if not (lo < dn < hi):
                dn = 0.5 * (lo + hi)
            done = fabs(dn - d) < 1e-15 or hi - lo < 1e-15
            d = dn
            if done:
                break
        if not done:
            raise RootFindFailure(f"collision solver stalled at s={s!r}, theta={theta!r}")
        s1 = s + d
        s1 -= floor(s1)
        self.frame(s1, fq)
        w[0] = fp.x[0] - fq.x[0]; w[1] = fp.x[1] - fq.x[1]; w[2] = fp.x[2] - fq.x[2]
        res[0] = s1
        res[1] = M_PI - atan2(self.inner(w, fq.n), self.inner(w, fq.t))
        res[2] = self.distance(fp.x, fq.x)
        return 0

    def collide(self, double s, double theta):
        """Next collision (s1, theta1, t) from (s, theta)."""
        cdef Frame fp, fq
        cdef double res[3]
        if theta < C_GRAZING or theta > M_PI - C_GRAZING:
            return s - floor(s), theta, 0.0
        self.ccollide(s, theta, &fp, &fq, res)
        return res[0], res[1], res[2]

    cdef inline void cnumerators(self, double k0, double k1, double st, double st1,
                                 double t, double* out) nogil:
        cdef double sn, cs
        if self.surface == 0:
            out[0] = k0 * t - st
            out[1] = t
            out[2] = k1 * k0 * t - k1 * st - k0 * st1
            out[3] = k1 * t - st1
        elif self.surface == 1:
            sn = sin(t); cs = cos(t)
            out[0] = k0 * sn - cs * st
            out[1] = sn
            out[2] = sn * (k0 * k1 - st * st1) - cs * (k1 * st + k0 * st1)
            out[3] = k1 * sn - cs * st1
        else:
            sn = sinh(t); cs = cosh(t)
            out[0] = k0 * sn - cs * st
            out[1] = sn
            out[2] = sn * (k0 * k1 + st * st1) - cs * (k1 * st + k0 * st1)
            out[3] = k1 * sn - cs * st1

    def numerators(self, double k0, double k1, double st, double st1, double t):
        cdef double out[4]
        self.cnumerators(k0, k1, st, st1, t, out)
        return out[0], out[1], out[2], out[3]

    def dphi(self, double s, double theta, double s1, double theta1, double t):
        """Derivative of the (s, theta) billiard map in physical arc length."""
        cdef Frame f0, f1
        cdef double out[4]
        cdef double st, st1
        self.frame(s, &f0)
        if theta < C_GRAZING or theta > M_PI - C_GRAZING:
            return 1.0, 2.0 / f0.kappa, 0.0, 1.0
        self.frame(s1, &f1)
        st = sin(theta)
        st1 = sin(theta1)
        if st1 < 1e-12:
            raise DegenerateAngle(f"theta1={theta1!r} for interior theta={theta!r}")
        self.cnumerators(f0.kappa, f1.kappa, st, st1, t, out)
        return out[0] / st1, out[1] / st1, out[2] / st1, out[3] / st1

    cdef int cstep(self, double y0, double y1, double* out) except -1:
        cdef Frame fp, fq
        cdef double res[3]
        cdef double num[4]
        cdef double s = y0 - floor(y0), r = y1, theta, st, st1, L = self.length
        if r < -1.0 + C_GRAZING or r > 1.0 - C_GRAZING:
            out[0] = s; out[1] = r
            out[2] = 1.0; out[3] = 0.0; out[4] = 0.0; out[5] = 1.0
            return 0
        theta = acos(-r)
        st = sqrt((1.0 - r) * (1.0 + r))
        self.ccollide(s, theta, &fp, &fq, res)
        st1 = sin(res[1])
        if st1 < 1e-12:
            raise DegenerateAngle(f"theta1={res[1]!r} for interior theta={theta!r}")
        self.cnumerators(fp.kappa, fq.kappa, st, st1, res[2], num)
        out[0] = res[0]
        out[1] = -cos(res[1])
        out[2] = num[0] / st1
        out[3] = num[1] / (L * st * st1)
        out[4] = num[2] * L
        out[5] = num[3] / st
        return 0


cdef class KickKernel(StepKernel):
    """``iterations``-fold composition of (y1 + y2 + V(y1), y2 + V(y1)) mod 1."""

    cdef public double v0
    cdef public int iterations, nharm
    cdef double[::1] ac
    cdef double[::1] bs

    def __init__(self, double v0, cos_coeffs, sin_coeffs, int iterations=1):
        self.v0 = v0
        self.ac = np.ascontiguousarray(cos_coeffs, dtype=np.float64)
        self.bs = np.ascontiguousarray(sin_coeffs, dtype=np.float64)
        if self.ac.shape[0] != self.bs.shape[0]:
            raise ValueError("cos_coeffs and sin_coeffs must have equal length")
        self.nharm = self.ac.shape[0]
        self.iterations = iterations
        self.lo2 = 0.0
        self.len2 = 1.0

    def __reduce__(self):
        return (KickKernel, (self.v0, np.asarray(self.ac), np.asarray(self.bs), self.iterations))

    @property
    def cos_coeffs(self):
        return list(np.asarray(self.ac))

    @property
    def sin_coeffs(self):
        return list(np.asarray(self.bs))

    cdef inline void ckick(self, double y, double* v, double* dv) nogil:
        cdef int i
        cdef double w, c, sn
        v[0] = self.v0
        dv[0] = 0.0
        for i in range(self.nharm):
            w = TWO_PI * (i + 1)
            c = cos(w * y)
            sn = sin(w * y)
            v[0] += self.ac[i] * c + self.bs[i] * sn
            dv[0] += w * (self.bs[i] * c - self.ac[i] * sn)

    def kick(self, double y):
        cdef double v, dv
        self.ckick(y, &v, &dv)
        return v, dv

    cdef int cstep(self, double y0, double y1, double* out) except -1:
        cdef double a = 1.0, b = 0.0, c = 0.0, d = 1.0, v, dv, na, nb
        cdef int i
        for i in range(self.iterations):
            self.ckick(y0, &v, &dv)
            na = a + dv * a + c
            nb = b + dv * b + d
            c = dv * a + c
            d = dv * b + d
            a = na
            b = nb
            y1 = _wrap(y1 + v, 0.0, 1.0)
            y0 = _wrap(y0 + y1, 0.0, 1.0)
        out[0] = y0; out[1] = y1
        out[2] = a; out[3] = b; out[4] = c; out[5] = d
        return 0


def accumulate(StepKernel kernel, double[::1] y, double[::1] Q, double[:, ::1] noise, int renorm):
    """Advance the random orbit over ``noise`` and accumulate QR logs (see _pykernels)."""
    cdef double y0 = y[0], y1 = y[1]
    cdef double p00 = Q[0], p01 = Q[1], p10 = Q[2], p11 = Q[3]
    cdef double n00, n01, n10, n11, r11, r22, q0, q1, sgn
    cdef double sum1 = 0.0, sum2 = 0.0
    cdef double det = p00 * p11 - p01 * p10
    cdef double lo2 = kernel.lo2, len2 = kernel.len2
    cdef double out[6]
    cdef Py_ssize_t i, n = noise.shape[0]
    cdef int count = 0
    for i in range(n):
        kernel.cstep(y0, y1, out)
        y0 = _wrap(out[0] + noise[i, 0], 0.0, 1.0)
        y1 = _wrap(out[1] + noise[i, 1], lo2, len2)
        n00 = out[2] * p00 + out[3] * p10
        n01 = out[2] * p01 + out[3] * p11
        n10 = out[4] * p00 + out[5] * p10
        n11 = out[4] * p01 + out[5] * p11
        p00 = n00; p01 = n01; p10 = n10; p11 = n11
        det *= out[2] * out[5] - out[3] * out[4]
        count += 1
        if count == renorm or i == n - 1:
            r11 = hypot(p00, p10)
            if not (isfinite(r11) and r11 > 0.0):
                raise NonFiniteAccumulator(f"cocycle norm {r11!r} at step {i}")
            q0 = p00 / r11
            q1 = p10 / r11
            r22 = det / r11
            if not (isfinite(r22) and r22 != 0.0):
                raise NonFiniteAccumulator(f"cocycle r22 {r22!r} at step {i}")
            sgn = 1.0 if r22 > 0.0 else -1.0
            sum1 += log(r11)
            sum2 += log(fabs(r22))
            p00 = q0; p01 = -sgn * q1; p10 = q1; p11 = sgn * q0
            det = sgn
            count = 0
    y[0] = y0; y[1] = y1
    Q[0] = p00; Q[1] = p01; Q[2] = p10; Q[3] = p11
    return sum1, sum2


def orbit(StepKernel kernel, double[::1] y, double[:, ::1] noise, double[:, ::1] out):
    """Fill ``out[k]`` with the orbit point after k+1 noisy steps from ``y``."""
    cdef double y0 = y[0], y1 = y[1]
    cdef double lo2 = kernel.lo2, len2 = kernel.len2
    cdef double res[6]
    cdef Py_ssize_t i
    for i in range(noise.shape[0]):
        kernel.cstep(y0, y1, res)
        y0 = _wrap(res[0] + noise[i, 0], 0.0, 1.0)
        y1 = _wrap(res[1] + noise[i, 1], lo2, len2)
        out[i, 0] = y0
        out[i, 1] = y1
    y[0] = y0; y[1] = y1


def projective_chain(StepKernel kernel, double[::1] y, double phi, double[:, ::1] noise,
                     double[::1] out):
    """Run the pair chain (y, line angle); ``out[k]`` gets the angle after k+1 steps."""
    cdef double y0 = y[0], y1 = y[1]
    cdef double lo2 = kernel.lo2, len2 = kernel.len2
    cdef double vx = cos(phi), vy = sin(phi), wx, wy, nrm
    cdef double res[6]
    cdef Py_ssize_t i
    for i in range(noise.shape[0]):
        kernel.cstep(y0, y1, res)
        wx = res[2] * vx + res[3] * vy
        wy = res[4] * vx + res[5] * vy
        nrm = hypot(wx, wy)
        vx = wx / nrm
        vy = wy / nrm
        if vy < 0.0 or (vy == 0.0 and vx < 0.0):
            vx = -vx
            vy = -vy
        out[i] = _wrap(atan2(vy, vx), 0.0, M_PI)
        y0 = _wrap(res[0] + noise[i, 0], 0.0, 1.0)
        y1 = _wrap(res[1] + noise[i, 1], lo2, len2)
    y[0] = y0; y[1] = y1
    return atan2(vy, vx)
