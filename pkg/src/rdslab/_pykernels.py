"""Pure-Python step kernels.

This module mirrors ``_ckernels.pyx`` name for name and is used when the
compiled extension is unavailable (or when ``RDSLAB_PURE_PYTHON=1``). Both
backends consume the same pre-drawn noise arrays, so results agree to
floating-point round-off.

A kernel exposes ``step(y0, y1) -> (z0, z1, a, b, c, d)``: the image of a
torus point under the base map together with the 2x2 derivative
``[[a, b], [c, d]]`` at that point.
"""
import math

from rdslab.errors import DegenerateAngle, NonFiniteAccumulator, RootFindFailure

GRAZING = 1e-9
SHAPE_POLAR = 0
SHAPE_ELLIPSE = 1
MAX_ROOT_ITER = 100
TWO_PI = 2.0 * math.pi

BACKEND = "python"


def _wrap(v, lo, length):
    w = v - length * math.floor((v - lo) / length)
    if w >= lo + length:
        w -= length
    return w


def _rows(noise):
    return noise.tolist() if hasattr(noise, "tolist") else noise


class StepKernel:
    lo2 = 0.0
    len2 = 1.0

    def step(self, y0, y1):
        raise NotImplementedError


class BilliardKernel(StepKernel):
    """Billiard map on the torus R/Z x R/2Z for one table.

    ``u_knots``/``du_knots`` tabulate the curve parameter u and du/ds on a
    uniform grid of normalized arc length s (cubic Hermite in between).
    """

    def __init__(self, surface, shape, p0, p1, p2, length, u_knots, du_knots):
        self.surface = int(surface)
        self.shape = int(shape)
        self.p0 = float(p0)
        self.p1 = float(p1)
        self.p2 = float(p2)
        self.length = float(length)
        self.u_knots = [float(v) for v in u_knots]
        self.du_knots = [float(v) for v in du_knots]
        self.nknots = len(self.u_knots) - 1
        self.lo2 = -1.0
        self.len2 = 2.0

    # -- boundary chart -------------------------------------------------
    def param(self, s):
        s = s - math.floor(s)
        n = self.nknots
        x = s * n
        j = int(x)
        if j >= n:
            j = n - 1
        t = x - j
        h = 1.0 / n
        u0 = self.u_knots[j]
        u1 = self.u_knots[j + 1]
        m0 = self.du_knots[j] * h
        m1 = self.du_knots[j + 1] * h
        t2 = t * t
        t3 = t2 * t
        return ((2.0 * t3 - 3.0 * t2 + 1.0) * u0 + (t3 - 2.0 * t2 + t) * m0
                + (-2.0 * t3 + 3.0 * t2) * u1 + (t3 - t2) * m1)

    def curve(self, u):
        """Point and first two derivatives with respect to phi = 2 pi u."""
        phi = TWO_PI * u
        c = math.cos(phi)
        sn = math.sin(phi)
        if self.shape == SHAPE_ELLIPSE:
            a = self.p0
            b = self.p1
            return ((a * c, b * sn, 0.0), (-a * sn, b * c, 0.0),
                    (-a * c, -b * sn, 0.0))
        rho0 = self.p0
        eps = self.p1
        m = self.p2
        cm = math.cos(m * phi)
        sm = math.sin(m * phi)
        rho = rho0 * (1.0 + eps * cm)
        d1 = -rho0 * eps * m * sm
        d2 = -rho0 * eps * m * m * cm
        k = self.surface
        if k == 0:
            S, S1, S2 = rho, 1.0, 0.0
            C, C1, C2 = 0.0, 0.0, 0.0
        elif k == 1:
            S, S1, S2 = math.sin(rho), math.cos(rho), -math.sin(rho)
            C, C1, C2 = math.cos(rho), -math.sin(rho), -math.cos(rho)
        else:
            S, S1, S2 = math.sinh(rho), math.cosh(rho), math.sinh(rho)
            C, C1, C2 = math.cosh(rho), math.sinh(rho), math.cosh(rho)
        radial1 = S1 * d1
        radial2 = S2 * d1 * d1 + S1 * d2
        X = (S * c, S * sn, C)
        D1 = (radial1 * c - S * sn, radial1 * sn + S * c, C1 * d1)
        D2 = (radial2 * c - 2.0 * radial1 * sn - S * c,
              radial2 * sn + 2.0 * radial1 * c - S * sn,
              C2 * d1 * d1 + C1 * d2)
        return X, D1, D2

    def inner(self, a, b):
        return a[0] * b[0] + a[1] * b[1] + self.surface * a[2] * b[2]

    def normal(self, X, T):
        if self.surface == 0:
            return (-T[1], T[0], 0.0)
        cx = X[1] * T[2] - X[2] * T[1]
        cy = X[2] * T[0] - X[0] * T[2]
        cz = X[0] * T[1] - X[1] * T[0]
        if self.surface == 1:
            return (cx, cy, cz)
        return (cx, cy, -cz)

    def chart(self, s):
        """(point, unit tangent, inward unit normal, geodesic curvature) at s."""
        X, D1, D2 = self.curve(self.param(s))
        sp = math.sqrt(self.inner(D1, D1))
        T = (D1[0] / sp, D1[1] / sp, D1[2] / sp)
        N = self.normal(X, T)
        kappa = self.inner(D2, N) / (sp * sp)
        return X, T, N, kappa

    def distance(self, p, q):
        w = (q[0] - p[0], q[1] - p[1], q[2] - p[2])
        if self.surface == 0:
            return math.hypot(w[0], w[1])
        if self.surface == 1:
            c = math.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
            return 2.0 * math.asin(min(0.5 * c, 1.0))
        m2 = w[0] * w[0] + w[1] * w[1] - w[2] * w[2]
        return 2.0 * math.asinh(0.5 * math.sqrt(max(m2, 0.0)))

    # -- billiard map -----------------------------------------------------
    def collide(self, s, theta):
        """Next collision (s1, theta1, t) from (s, theta)."""
        s = s - math.floor(s)
        if theta < GRAZING or theta > math.pi - GRAZING:
            return s, theta, 0.0
        p, T, N, _ = self.chart(s)
        L = self.length
        lo, hi = 0.0, 1.0
        d = theta / math.pi
        for _ in range(MAX_ROOT_ITER):
            q, Tq, _, _ = self.chart(s + d)
            w = (q[0] - p[0], q[1] - p[1], q[2] - p[2])
            a = self.inner(w, T)
            b = self.inner(w, N)
            f = math.atan2(b, a) - theta
            if f > 0.0:
                hi = d
            else:
                lo = d
            slope = L * (a * self.inner(Tq, N) - b * self.inner(Tq, T)) / (a * a + b * b)
            dn = d - f / slope if slope > 0.0 else -1.0
            if not lo < dn < hi:
                dn = 0.5 * (lo + hi)
            done = abs(dn - d) < 1e-15 or hi - lo < 1e-15
            d = dn
            if done:
                break
        else:
            raise RootFindFailure(f"collision solver stalled at s={s!r}, theta={theta!r}")
        s1 = s + d
        s1 -= math.floor(s1)
        q, T1, N1, _ = self.chart(s1)
        w = (p[0] - q[0], p[1] - q[1], p[2] - q[2])
        theta1 = math.pi - math.atan2(self.inner(w, N1), self.inner(w, T1))
        return s1, theta1, self.distance(p, q)

    def numerators(self, k0, k1, st, st1, t):
        """Entries of the (s, theta) derivative before division by sin theta1."""
        if self.surface == 0:
            return (k0 * t - st, t, k1 * k0 * t - k1 * st - k0 * st1, k1 * t - st1)
        if self.surface == 1:
            sn, cs = math.sin(t), math.cos(t)
            return (k0 * sn - cs * st, sn,
                    sn * (k0 * k1 - st * st1) - cs * (k1 * st + k0 * st1),
                    k1 * sn - cs * st1)
        sn, cs = math.sinh(t), math.cosh(t)
        return (k0 * sn - cs * st, sn,
                sn * (k0 * k1 + st * st1) - cs * (k1 * st + k0 * st1),
                k1 * sn - cs * st1)

    def dphi(self, s, theta, s1, theta1, t):
        """Derivative of the (s, theta) billiard map in physical arc length."""
        if theta < GRAZING or theta > math.pi - GRAZING:
            k0 = self.chart(s)[3]
            return 1.0, 2.0 / k0, 0.0, 1.0
        k0 = self.chart(s)[3]
        k1 = self.chart(s1)[3]
        st = math.sin(theta)
        st1 = math.sin(theta1)
        if st1 < 1e-12:
            raise DegenerateAngle(f"theta1={theta1!r} for interior theta={theta!r}")
        a, b, c, d = self.numerators(k0, k1, st, st1, t)
        return a / st1, b / st1, c / st1, d / st1

    def step(self, y0, y1):
        s = y0 - math.floor(y0)
        r = y1
        if r < -1.0 + GRAZING or r > 1.0 - GRAZING:
            return s, r, 1.0, 0.0, 0.0, 1.0
        theta = math.acos(-r)
        st = math.sqrt((1.0 - r) * (1.0 + r))
        s1, theta1, t = self.collide(s, theta)
        st1 = math.sin(theta1)
        if st1 < 1e-12:
            raise DegenerateAngle(f"theta1={theta1!r} for interior theta={theta!r}")
        k0 = self.chart(s)[3]
        k1 = self.chart(s1)[3]
        a, b, c, d = self.numerators(k0, k1, st, st1, t)
        L = self.length
        return s1, -math.cos(theta1), a / st1, b / (L * st * st1), c * L, d / st


class KickKernel(StepKernel):
    """``iterations``-fold composition of (y1 + y2 + V(y1), y2 + V(y1)) mod 1.

    V(y) = v0 + sum_k cos_coeffs[k-1] cos(2 pi k y) + sin_coeffs[k-1] sin(2 pi k y).
    """

    def __init__(self, v0, cos_coeffs, sin_coeffs, iterations=1):
        self.v0 = float(v0)
        self.cos_coeffs = [float(v) for v in cos_coeffs]
        self.sin_coeffs = [float(v) for v in sin_coeffs]
        self.iterations = int(iterations)
        self.lo2 = 0.0
        self.len2 = 1.0

    def kick(self, y):
        v = self.v0
        dv = 0.0
        for i, (a, b) in enumerate(zip(self.cos_coeffs, self.sin_coeffs)):
            w = TWO_PI * (i + 1)
            c = math.cos(w * y)
            sn = math.sin(w * y)
            v += a * c + b * sn
            dv += w * (b * c - a * sn)
        return v, dv

    def step(self, y0, y1):
        a, b, c, d = 1.0, 0.0, 0.0, 1.0
        for _ in range(self.iterations):
            v, dv = self.kick(y0)
            a, b, c, d = (a + dv * a + c, b + dv * b + d, dv * a + c, dv * b + d)
            y1 = _wrap(y1 + v, 0.0, 1.0)
            y0 = _wrap(y0 + y1, 0.0, 1.0)
        return y0, y1, a, b, c, d


# -- drivers --------------------------------------------------------------
def accumulate(kernel, y, Q, noise, renorm):
    """Advance the random orbit over ``noise`` and accumulate QR logs.

    ``y`` (length 2) and ``Q`` (length 4, row-major orthogonal 2x2) are
    updated in place. The product is re-orthonormalized every ``renorm``
    steps and at the end of the block. Returns (sum log r11, sum log r22).

    r22 is taken as det(P) / r11 with det(P) tracked as the product of the
    one-step determinants: the direct formula q0 p11 - q1 p01 cancels
    catastrophically once a block grows by more than about 1e8.
    """
    lo2, len2 = kernel.lo2, kernel.len2
    y0, y1 = float(y[0]), float(y[1])
    p00, p01, p10, p11 = float(Q[0]), float(Q[1]), float(Q[2]), float(Q[3])
    sum1 = 0.0
    sum2 = 0.0
    det = p00 * p11 - p01 * p10
    count = 0
    rows = _rows(noise)
    n = len(rows)
    for i in range(n):
        z0, z1, a, b, c, d = kernel.step(y0, y1)
        y0 = _wrap(z0 + rows[i][0], 0.0, 1.0)
        y1 = _wrap(z1 + rows[i][1], lo2, len2)
        p00, p01, p10, p11 = (a * p00 + b * p10, a * p01 + b * p11,
                              c * p00 + d * p10, c * p01 + d * p11)
        det *= a * d - b * c
        count += 1
        if count == renorm or i == n - 1:
            r11 = math.hypot(p00, p10)
            if not (math.isfinite(r11) and r11 > 0.0):
                raise NonFiniteAccumulator(f"cocycle norm {r11!r} at step {i}")
            q0 = p00 / r11
            q1 = p10 / r11
            r22 = det / r11
            if not (math.isfinite(r22) and r22 != 0.0):
                raise NonFiniteAccumulator(f"cocycle r22 {r22!r} at step {i}")
            sgn = 1.0 if r22 > 0.0 else -1.0
            sum1 += math.log(r11)
            sum2 += math.log(abs(r22))
            p00, p01, p10, p11 = q0, -sgn * q1, q1, sgn * q0
            det = sgn
            count = 0
    y[0], y[1] = y0, y1
    Q[0], Q[1], Q[2], Q[3] = p00, p01, p10, p11
    return sum1, sum2


def orbit(kernel, y, noise, out):
    """Fill ``out[k]`` with the orbit point after k+1 noisy steps from ``y``."""
    lo2, len2 = kernel.lo2, kernel.len2
    y0, y1 = float(y[0]), float(y[1])
    for i, (x0, x1) in enumerate(_rows(noise)):
        z0, z1 = kernel.step(y0, y1)[:2]
        y0 = _wrap(z0 + x0, 0.0, 1.0)
        y1 = _wrap(z1 + x1, lo2, len2)
        out[i][0] = y0
        out[i][1] = y1
    y[0], y[1] = y0, y1


def projective_chain(kernel, y, phi, noise, out):
    """Run the pair chain (y, line angle); ``out[k]`` gets the angle after k+1 steps.

    Returns the final angle; ``y`` is updated in place.
    """
    lo2, len2 = kernel.lo2, kernel.len2
    y0, y1 = float(y[0]), float(y[1])
    vx, vy = math.cos(phi), math.sin(phi)
    for i, (x0, x1) in enumerate(_rows(noise)):
        z0, z1, a, b, c, d = kernel.step(y0, y1)
        wx = a * vx + b * vy
        wy = c * vx + d * vy
        nrm = math.hypot(wx, wy)
        vx, vy = wx / nrm, wy / nrm
        if vy < 0.0 or (vy == 0.0 and vx < 0.0):
            vx, vy = -vx, -vy
        out[i] = _wrap(math.atan2(vy, vx), 0.0, math.pi)
        y0 = _wrap(z0 + x0, 0.0, 1.0)
        y1 = _wrap(z1 + x1, lo2, len2)
    y[0], y[1] = y0, y1
    return math.atan2(vy, vx)
