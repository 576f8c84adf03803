"""Dirichlet solvers for the invariant graph potential equations.

Two problems are solved.

Disc: the potential f on the closed unit disc with f = phi on the unit
circle, where

    ((f_x)^2 + y^2 + a^2)^(-1/2) f_xx + 2 f_yy = 0,

and the graph functions are recovered as u = f_y, v = f_x.  The equation
is discretised in polar coordinates on a tensor grid, uniform in theta
and mildly graded toward r = 1.  Angular differences use trigonometric
denominators (2 sin h and 2 - 2 cos h), which differentiate first
harmonics exactly, so affine potentials beta*x + gamma*y + delta are
reproduced to round-off.  The pole is closed by a ghost value equal to
the mean of the first ring.

Strip: v directly on {|y| <= R} with period P in x and v(x, +-R) given,
where

    d/dx[ (v^2 + y^2 + a^2)^(-1/2) v_x ] + 2 v_yy = 0

in conservative form, so the discrete row integral of v is exactly
y-independent.  u is then reconstructed from v_x, v_y with u(0,0) = 0.

Both solvers run damped Newton with a sparse Jacobian.  Residuals are
evaluated in extended precision (80-bit long double): plain double
second differences on fine grids carry cancellation noise above the
1e-10 convergence target.

The level a = 0 is reached by geometric continuation a_k -> a_min with
warm starts; the a_min field is returned as the singular-level proxy and
the sup-norm increments between consecutive steps are recorded as a
Cauchy diagnostic.
"""

import json
import threading
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RectBivariateSpline

from .errors import (
    ContinuationFailed,
    IncompatibleBoundary,
    MonodromyDefect,
    SolverDiverged,
)

LD = np.longdouble
PI_LD = LD("3.14159265358979323846264338327950288")
COEFF_FLOOR = 1e-16          # floor for v^2 + y^2 + a^2 before the inverse sqrt
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 60
FLOOR_ACCEPT = 1e-8          # stagnated residual below this still counts as converged
GRADING = 0.4                # radial grading strength toward r = 1
DEFAULT_A_MIN = 1e-4


# ---------------------------------------------------------------------------
# boundary data and domains

@dataclass(frozen=True)
class BoundarySpec:
    """Finite trigonometric boundary data.

    Disc: a function of theta on the unit circle.  Strip: a function of
    2*pi*x/P on one edge.  Coefficient maps are harmonic index -> value,
    stored as sorted tuples so specs hash and compare by value.
    """

    constant: float = 0.0
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()

    @staticmethod
    def make(constant=0.0, cos=None, sin=None):
        def norm(d):
            if not d:
                return ()
            items = dict(d).items()
            return tuple(sorted((int(k), float(v)) for k, v in items if float(v) != 0.0))

        return BoundarySpec(float(constant), norm(cos), norm(sin))

    def sample(self, theta):
        """Evaluate at angles theta (any float dtype, kept through the sum)."""
        theta = np.asarray(theta)
        one = theta.dtype.type(1.0) if theta.dtype.kind == "f" else 1.0
        out = np.zeros_like(theta) + one * self.constant
        for k, coeff in self.cos_coeffs:
            out = out + coeff * np.cos(k * theta)
        for k, coeff in self.sin_coeffs:
            out = out + coeff * np.sin(k * theta)
        return out

    def sample_x(self, x, period):
        return self.sample(np.asarray(x) * (2.0 * np.pi / period))

    def max_abs(self):
        thetas = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
        return float(np.max(np.abs(self.sample(thetas))))

    def max_harmonic(self):
        ks = [k for k, _ in self.cos_coeffs] + [k for k, _ in self.sin_coeffs]
        return max(ks) if ks else 0

    def shifted(self, delta):
        return BoundarySpec(self.constant + float(delta), self.cos_coeffs, self.sin_coeffs)

    def key(self):
        return (self.constant, self.cos_coeffs, self.sin_coeffs)

    def to_json(self):
        return {
            "constant": self.constant,
            "cos": {str(k): v for k, v in self.cos_coeffs},
            "sin": {str(k): v for k, v in self.sin_coeffs},
        }

    @staticmethod
    def from_json(obj):
        return BoundarySpec.make(obj.get("constant", 0.0), obj.get("cos"), obj.get("sin"))


@dataclass(frozen=True)
class DomainSpec:
    """Discretised domain: unit disc or periodic strip.

    Disc: n_x = number of radial rings, n_y = number of angles (rounded
    up to a multiple of 4 so both axes and the vertical lie on grid
    rays); R is fixed at 1.  Strip: n_x = nodes per period, n_y = rows
    (rounded up to odd so y = 0 is a grid row).
    """

    kind: str
    R: float = 1.0
    P: float = 2.0 * np.pi
    n_x: int = 128
    n_y: int = 128

    def __post_init__(self):
        if self.kind not in ("disc", "periodic-strip"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not (np.isfinite(self.R) and self.R > 0 and np.isfinite(self.P) and self.P > 0):
            raise ValueError("R and P must be finite and positive")
        if self.n_x < 16 or self.n_y < 16:
            raise ValueError("resolutions must be at least 16")
        if self.kind == "disc":
            if self.R != 1.0:
                raise ValueError("disc radius is fixed at 1")
            object.__setattr__(self, "n_y", int(4 * ((self.n_y + 3) // 4)))
        else:
            if self.n_y % 2 == 0:
                object.__setattr__(self, "n_y", int(self.n_y) + 1)

    @staticmethod
    def disc(n_r=128, n_theta=256):
        return DomainSpec("disc", 1.0, 2.0 * np.pi, n_r, n_theta)

    @staticmethod
    def strip(n_x=256, n_y=129, R=1.0, P=2.0 * np.pi):
        return DomainSpec("periodic-strip", R, P, n_x, n_y)


def geometric_schedule(a_start=1.0, factor=0.5, a_min=DEFAULT_A_MIN):
    """Decreasing level schedule a_start * factor^k, clamped to end at a_min."""
    if not (0 < factor < 1 and 0 < a_min <= a_start):
        raise ValueError("need 0 < factor < 1 and 0 < a_min <= a_start")
    out = []
    a = float(a_start)
    while a > a_min * (1 + 1e-12):
        out.append(a)
        a *= factor
    out.append(float(a_min))
    return tuple(out)


# ---------------------------------------------------------------------------
# disc grid and operators

_GRID_CACHE = {}
_GRID_LOCK = threading.Lock()


def _nonuniform_weights(hm, hp):
    """First/second derivative 3-point weights on spacings hm, hp.

    The centre weights are defined as minus the sum of the neighbours so
    that constants are annihilated exactly in floating point.
    """
    wm = -hp / (hm * (hm + hp))
    wp = hm / (hp * (hm + hp))
    w0 = -(wm + wp)
    vm = 2.0 / (hm * (hm + hp))
    vp = 2.0 / (hp * (hm + hp))
    v0 = -(vm + vp)
    return (wm, w0, wp), (vm, v0, vp)


class DiscGrid:
    """Polar tensor grid on the unit disc with precomputed stencil data."""

    def __init__(self, n_r, n_theta):
        self.N = int(n_r)
        self.M = int(n_theta)
        N, M = self.N, self.M
        lam = LD(str(GRADING))
        xi = np.arange(1, N + 1, dtype=LD) / LD(N)
        self.r = (1 + lam) * xi - lam * xi * xi      # rings 1..N, r[N-1] = 1
        self.theta = (2 * PI_LD / LD(M)) * np.arange(M, dtype=LD)
        h = 2 * PI_LD / LD(M)
        self.inv_2sin = LD(1) / (2 * np.sin(h))
        self.inv_2mcos = LD(1) / (2 - 2 * np.cos(h))
        self.cos = np.cos(self.theta)
        self.sin = np.sin(self.theta)

        # radial weights at interior rings 1..N-1 (array index 0..N-2)
        r_ext = np.concatenate(([LD(0)], self.r))    # rings 0(=centre)..N
        hm = r_ext[1:N] - r_ext[0:N - 1]
        hp = r_ext[2:N + 1] - r_ext[1:N]
        (self.wm, self.w0, self.wp), (self.vm, self.v0, self.vp) = _nonuniform_weights(hm, hp)

        # one-sided first derivative at the boundary ring (rings N-2, N-1, N)
        d = self.r[N - 2] - self.r[N - 3]
        e = self.r[N - 1] - self.r[N - 2]
        self.bnd_w = (e / (d * (d + e)), -(d + e) / (d * e), (d + 2 * e) / (e * (d + e)))

        ri = self.r[: N - 1][:, None]                # interior ring radii, column
        c, s = self.cos[None, :], self.sin[None, :]
        self.coef = {
            "xx": (c * c, -2 * s * c / ri, s * s / ri**2, s * s / ri, 2 * s * c / ri**2),
            "yy": (s * s, 2 * s * c / ri, c * c / ri**2, c * c / ri, -2 * s * c / ri**2),
        }
        self.g_coef = (c + 0 * ri, -s / ri)          # f_x = c f_r - (s/r) f_theta
        self.scale = (ri * ri) + 0 * c               # row scaling r^2 desingularises the pole
        self.y_int = ri * s
        self._ops64 = None

    # -- long-double array evaluation ------------------------------------

    def pad(self, f_int, phi):
        """Stack centre ghost row, interior rings and boundary ring."""
        centre = np.mean(f_int[0])
        return np.vstack([np.full((1, self.M), centre), f_int, phi[None, :]])

    def d_theta(self, A):
        return (np.roll(A, -1, axis=1) - np.roll(A, 1, axis=1)) * self.inv_2sin

    def d_theta2(self, A):
        return (np.roll(A, -1, axis=1) + np.roll(A, 1, axis=1) - 2 * A) * self.inv_2mcos

    def radial(self, F):
        """f_r and f_rr at interior rings from the padded stack F."""
        N = self.N
        wm, w0, wp = self.wm[:, None], self.w0[:, None], self.wp[:, None]
        vm, v0, vp = self.vm[:, None], self.v0[:, None], self.vp[:, None]
        fr = wm * F[0:N - 1] + w0 * F[1:N] + wp * F[2:N + 1]
        frr = vm * F[0:N - 1] + v0 * F[1:N] + vp * F[2:N + 1]
        return fr, frr

    def second_derivs(self, F):
        fr, frr = self.radial(F)
        fint = F[1:self.N]
        fth = self.d_theta(fint)
        fthth = self.d_theta2(fint)
        frth = self.d_theta(fr)
        cxx, cyy = self.coef["xx"], self.coef["yy"]
        fxx = cxx[0] * frr + cxx[1] * frth + cxx[2] * fthth + cxx[3] * fr + cxx[4] * fth
        fyy = cyy[0] * frr + cyy[1] * frth + cyy[2] * fthth + cyy[3] * fr + cyy[4] * fth
        g = self.g_coef[0] * fr + self.g_coef[1] * fth
        return g, fxx, fyy

    def residual(self, f_int, phi, a):
        """Scaled residual r^2 (W f_xx + 2 f_yy) at interior rings."""
        F = self.pad(f_int, phi)
        g, fxx, fyy = self.second_derivs(F)
        q = g * g + self.y_int * self.y_int + a * a
        w = 1.0 / np.sqrt(np.maximum(q, q.dtype.type(COEFF_FLOOR)))
        return self.scale * (w * fxx + 2 * fyy)

    # -- sparse operators for the Jacobian --------------------------------

    def ops64(self):
        """CSR matrices for f_xx, f_yy, f_x over interior unknowns."""
        if self._ops64 is not None:
            return self._ops64
        N, M = self.N, self.M
        n_unknown = (N - 1) * M
        jj = np.arange(M)
        rad_ops = {
            "id": ((0, np.ones(N - 1)),),
            "dr": ((-1, self.wm.astype(float)), (0, self.w0.astype(float)),
                   (1, self.wp.astype(float))),
            "drr": ((-1, self.vm.astype(float)), (0, self.v0.astype(float)),
                    (1, self.vp.astype(float))),
        }
        t1 = float(self.inv_2sin)
        t2 = float(self.inv_2mcos)
        th_ops = {
            "id": ((0, 1.0),),
            "d1": ((-1, -t1), (1, t1)),
            "d2": ((-1, t2), (0, -2.0 * t2), (1, t2)),
        }

        def assemble(term_list):
            rows, cols, vals = [], [], []
            centre_acc = np.zeros(n_unknown)
            for coef, rop, top in term_list:
                coef = np.asarray(coef, dtype=float)
                coef = np.broadcast_to(coef, (N - 1, M))
                for di, wr in rad_ops[rop]:
                    for dj, wt in th_ops[top]:
                        vals_grid = coef * wr[:, None] * wt
                        for i in range(1, N):
                            ii = i + di
                            base = (i - 1) * M
                            r_idx = base + jj
                            v_row = vals_grid[i - 1]
                            if ii == 0:
                                np.add.at(centre_acc, r_idx, v_row)
                            elif ii >= N:
                                continue  # boundary column: folded via pad()
                            else:
                                c_idx = (ii - 1) * M + (jj + dj) % M
                                rows.append(r_idx)
                                cols.append(c_idx)
                                vals.append(v_row)
            # centre ghost = mean of ring 1: spread 1/M over ring-1 columns
            nz = np.nonzero(centre_acc)[0]
            if nz.size:
                rows.append(np.repeat(nz, M))
                cols.append(np.tile(jj, nz.size))
                vals.append(np.repeat(centre_acc[nz] / M, M))
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
            vals = np.concatenate(vals)
            mat = sp.coo_matrix((vals, (rows, cols)), shape=(n_unknown, n_unknown))
            return mat.tocsr()

        cxx = [(c.astype(float), r, t) for c, r, t in zip(
            self.coef["xx"], ("drr", "dr", "id", "dr", "id"), ("id", "d1", "d2", "id", "d1"))]
        cyy = [(c.astype(float), r, t) for c, r, t in zip(
            self.coef["yy"], ("drr", "dr", "id", "dr", "id"), ("id", "d1", "d2", "id", "d1"))]
        cg = [(np.asarray(self.g_coef[0], float), "dr", "id"),
              (np.asarray(self.g_coef[1], float), "id", "d1")]
        self._ops64 = (assemble(cxx), assemble(cyy), assemble(cg))
        return self._ops64

    def jacobian(self, f_int64, phi64, a):
        XX, YY, G = self.ops64()
        F = self.pad(f_int64, phi64)
        g, fxx, _ = self.second_derivs(F)
        q = g * g + np.asarray(self.y_int, float) ** 2 + a * a
        qe = np.maximum(q, COEFF_FLOOR)
        w = 1.0 / np.sqrt(qe)
        dw = np.where(q > COEFF_FLOOR, -g * qe**-1.5, 0.0)
        scale = np.asarray(self.scale, float)
        d1 = np.asarray(scale * dw * fxx, float).ravel()
        d2 = np.asarray(scale * w, float).ravel()
        d3 = 2.0 * scale.ravel()
        return (sp.diags(d1) @ G + sp.diags(d2) @ XX + sp.diags(d3) @ YY).tocsc()

    # -- derived fields ----------------------------------------------------

    def extract_uv(self, f_int, phi):
        """u = f_y and v = f_x on all rings, plus the centre values."""
        N = self.N
        F = self.pad(np.asarray(f_int, LD), np.asarray(phi, LD))
        fr_i, _ = self.radial(F)
        bw = self.bnd_w
        fr_bnd = bw[0] * F[N - 2] + bw[1] * F[N - 1] + bw[2] * F[N]
        fr = np.vstack([fr_i, fr_bnd[None, :]])
        fth = self.d_theta(F[1:N + 1])
        r_all = self.r[:, None]
        c, s = self.cos[None, :], self.sin[None, :]
        u = s * fr + (c / r_all) * fth
        v = c * fr - (s / r_all) * fth
        f_c = float(np.mean(F[1]))
        ring1 = np.asarray(F[1], float) - f_c
        v_c = 2.0 / (self.M * float(self.r[0])) * float(ring1 @ np.asarray(self.cos, float))
        u_c = 2.0 / (self.M * float(self.r[0])) * float(ring1 @ np.asarray(self.sin, float))
        return np.asarray(u, float), np.asarray(v, float), u_c, v_c, f_c

    def harmonic_extension(self, spec):
        """Initial guess: the harmonic function matching the boundary data."""
        f = np.zeros((self.N - 1, self.M), dtype=LD) + LD(str(spec.constant))
        r = self.r[: self.N - 1][:, None]
        for k, coeff in spec.cos_coeffs:
            f = f + coeff * r**k * np.cos(k * self.theta)[None, :]
        for k, coeff in spec.sin_coeffs:
            f = f + coeff * r**k * np.sin(k * self.theta)[None, :]
        return f


def disc_grid(n_r, n_theta):
    key = ("disc", n_r, n_theta)
    with _GRID_LOCK:
        grid = _GRID_CACHE.get(key)
        if grid is None:
            grid = DiscGrid(n_r, n_theta)
            _GRID_CACHE[key] = grid
        return grid


# ---------------------------------------------------------------------------
# strip grid

class StripGrid:
    """Uniform periodic-in-x grid on the strip |y| <= R."""

    def __init__(self, n_x, n_y, R, P):
        self.n_x = int(n_x)
        self.n_y = int(n_y)
        self.R = float(R)
        self.P = float(P)
        self.hx = LD(str(P)) / LD(self.n_x)
        self.hy = 2 * LD(str(R)) / LD(self.n_y - 1)
        self.x = self.hx * np.arange(self.n_x, dtype=LD)
        self.y = -LD(str(R)) + self.hy * np.arange(self.n_y, dtype=LD)
        self._jidx = None

    def residual(self, v_int, top, bot, a):
        """Conservative-form residual on interior rows."""
        V = np.vstack([bot[None, :], v_int, top[None, :]])
        y2 = (self.y[:, None] * np.ones((1, self.n_x), dtype=V.dtype)) ** 2
        dp = np.roll(V, -1, axis=1) - V
        dm = V - np.roll(V, 1, axis=1)
        qp = (0.5 * (V + np.roll(V, -1, axis=1))) ** 2 + y2 + a * a
        qm = (0.5 * (V + np.roll(V, 1, axis=1))) ** 2 + y2 + a * a
        wp = 1.0 / np.sqrt(np.maximum(qp, V.dtype.type(COEFF_FLOOR)))
        wm = 1.0 / np.sqrt(np.maximum(qm, V.dtype.type(COEFF_FLOOR)))
        rx = (wp * dp - wm * dm) / (self.hx * self.hx)
        ry = (V[2:] - 2 * V[1:-1] + V[:-2]) * (2 / (self.hy * self.hy))
        return rx[1:-1] + ry

    def _indices(self):
        if self._jidx is not None:
            return self._jidx
        ny, nx = self.n_y, self.n_x
        rows_interior = ny - 2
        k = (np.arange(rows_interior)[:, None] * nx + np.arange(nx)[None, :])
        kxp = (np.arange(rows_interior)[:, None] * nx + (np.arange(nx)[None, :] + 1) % nx)
        kxm = (np.arange(rows_interior)[:, None] * nx + (np.arange(nx)[None, :] - 1) % nx)
        self._jidx = (k, kxp, kxm)
        return self._jidx

    def jacobian(self, v_int64, top64, bot64, a):
        ny, nx = self.n_y, self.n_x
        hx2 = float(self.hx) ** 2
        hy2 = float(self.hy) ** 2
        V = np.vstack([bot64[None, :], v_int64, top64[None, :]])
        y2 = (np.asarray(self.y, float)[:, None]) ** 2
        vp_mid = 0.5 * (V + np.roll(V, -1, axis=1))
        vm_mid = 0.5 * (V + np.roll(V, 1, axis=1))
        qp = vp_mid**2 + y2 + a * a
        qm = vm_mid**2 + y2 + a * a
        qpe = np.maximum(qp, COEFF_FLOOR)
        qme = np.maximum(qm, COEFF_FLOOR)
        wp = qpe**-0.5
        wm = qme**-0.5
        dwp = np.where(qp > COEFF_FLOOR, -vp_mid * qpe**-1.5, 0.0)
        dwm = np.where(qm > COEFF_FLOOR, -vm_mid * qme**-1.5, 0.0)
        dp = np.roll(V, -1, axis=1) - V
        dm = V - np.roll(V, 1, axis=1)

        sl = slice(1, ny - 1)
        c_xp = (wp[sl] + 0.5 * dwp[sl] * dp[sl]) / hx2
        c_xm = (wm[sl] - 0.5 * dwm[sl] * dm[sl]) / hx2
        c_0 = (-wp[sl] - wm[sl] + 0.5 * dwp[sl] * dp[sl] - 0.5 * dwm[sl] * dm[sl]) / hx2 \
            - 4.0 / hy2
        k, kxp, kxm = self._indices()
        rows = [k.ravel(), k.ravel(), k.ravel()]
        cols = [k.ravel(), kxp.ravel(), kxm.ravel()]
        vals = [c_0.ravel(), c_xp.ravel(), c_xm.ravel()]
        cy = 2.0 / hy2
        if ny - 2 > 1:
            up = k[:-1].ravel()
            rows.append(up)
            cols.append((k[:-1] + nx).ravel())
            vals.append(np.full(up.size, cy))
            dn = k[1:].ravel()
            rows.append(dn)
            cols.append((k[1:] - nx).ravel())
            vals.append(np.full(dn.size, cy))
        n_unknown = (ny - 2) * nx
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n_unknown, n_unknown),
        )
        return mat.tocsc()


def strip_grid(n_x, n_y, R, P):
    key = ("strip", n_x, n_y, R, P)
    with _GRID_LOCK:
        grid = _GRID_CACHE.get(key)
        if grid is None:
            grid = StripGrid(n_x, n_y, R, P)
            _GRID_CACHE[key] = grid
        return grid


# ---------------------------------------------------------------------------
# Newton driver

def _newton(x0_ld, eval_res, build_jac, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Damped Newton with sup-norm line search on an extended-precision residual."""
    x = np.asarray(x0_ld, dtype=LD)
    res = eval_res(x)
    norm = float(np.max(np.abs(res)))
    history = [norm]
    stall = 0
    for it in range(max_iter):
        if norm < tol:
            return x, norm, it, {"history": history, "stagnated": False}
        jac = build_jac(np.asarray(x, float))
        rhs = -np.asarray(res, float).ravel()
        delta = spla.spsolve(jac, rhs).reshape(x.shape)
        lam = 1.0
        accepted = False
        while lam >= 2.0**-14:
            x_new = x + LD(lam) * delta
            res_new = eval_res(x_new)
            norm_new = float(np.max(np.abs(res_new)))
            if norm_new <= (1.0 - 1e-4 * lam) * norm:
                x, res, norm = x_new, res_new, norm_new
                accepted = True
                break
            lam *= 0.5
        history.append(norm)
        if not accepted or norm > 0.9 * history[-2]:
            stall += 1
        else:
            stall = 0
        if not accepted and stall >= 2 or stall >= 4:
            if norm < FLOOR_ACCEPT:
                # round-off floor of the residual evaluation: accept
                return x, norm, it + 1, {"history": history, "stagnated": True}
            raise SolverDiverged("newton stalled", residual=norm, iterations=it + 1)
    if norm < tol:
        return x, norm, max_iter, {"history": history, "stagnated": False}
    if norm < FLOOR_ACCEPT:
        return x, norm, max_iter, {"history": history, "stagnated": True}
    raise SolverDiverged("newton iteration budget exhausted", residual=norm,
                         iterations=max_iter)


# ---------------------------------------------------------------------------
# solution container

@dataclass
class SolutionField:
    """A solved (or synthetic) graph field on a disc or strip domain.

    Disc grids have shape (n_r, n_theta) over rings 1..n_r (the last ring
    is the boundary circle) plus explicit centre values.  Strip grids
    have shape (n_y, n_x), rows ordered bottom (y = -R) to top.
    """

    kind: str
    domain: DomainSpec
    a: float
    u: np.ndarray
    v: np.ndarray
    f: np.ndarray = None
    f_center: float = 0.0
    u_center: float = 0.0
    v_center: float = 0.0
    boundary: dict = dc_field(default_factory=dict)
    converged: bool = False
    residual_norm: float = np.inf
    is_limit: bool = False
    cauchy_increments: tuple = ()
    diagnostics: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self._interp = {}

    # -- geometry ----------------------------------------------------------

    def grid_axes(self):
        if self.kind == "disc":
            g = disc_grid(self.domain.n_x, self.domain.n_y)
            return np.asarray(g.r, float), np.asarray(g.theta, float)
        g = strip_grid(self.domain.n_x, self.domain.n_y, self.domain.R, self.domain.P)
        return np.asarray(g.x, float), np.asarray(g.y, float)

    def node_arrays(self):
        """Cartesian node coordinates and the u, v grids."""
        if self.kind == "disc":
            r, th = self.grid_axes()
            xg = r[:, None] * np.cos(th)[None, :]
            yg = r[:, None] * np.sin(th)[None, :]
            return xg, yg, self.u, self.v
        x, y = self.grid_axes()
        xg = np.broadcast_to(x[None, :], self.v.shape)
        yg = np.broadcast_to(y[:, None], self.v.shape)
        return xg, yg, self.u, self.v

    def interior_mask(self):
        mask = np.zeros(self.v.shape, dtype=bool)
        if self.kind == "disc":
            mask[:-1, :] = True
        else:
            mask[1:-1, :] = True
        return mask

    def cell_scale(self):
        if self.kind == "disc":
            r, th = self.grid_axes()
            return float(max(np.max(np.diff(r)), r[0]))
        x, y = self.grid_axes()
        return float(max(x[1] - x[0], y[1] - y[0]))

    def contains(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.kind == "disc":
            return np.hypot(x, y) <= 1.0 + 1e-12
        return np.abs(y) <= self.domain.R + 1e-12

    @property
    def is_singular_level(self):
        return self.is_limit or self.a == 0.0

    # -- interpolation -----------------------------------------------------

    def _interpolator(self, grid, center_value):
        pad = 4  # wrap columns so the periodic coordinate stays smooth
        if self.kind == "disc":
            r, th = self.grid_axes()
            th_ext = np.concatenate([th[-pad:] - 2 * np.pi, th, th[:pad] + 2 * np.pi])
            vals = np.concatenate([grid[:, -pad:], grid, grid[:, :pad]], axis=1)
            r_ext = np.concatenate([[0.0], r])
            centre_row = np.full((1, vals.shape[1]), center_value)
            vals = np.concatenate([centre_row, vals], axis=0)
            return RectBivariateSpline(r_ext, th_ext, vals, kx=3, ky=3, s=0)
        x, y = self.grid_axes()
        x_ext = np.concatenate([x[-pad:] - self.domain.P, x, x[:pad] + self.domain.P])
        vals = np.concatenate([grid[:, -pad:], grid, grid[:, :pad]], axis=1)
        return RectBivariateSpline(y, x_ext, vals, kx=3, ky=3, s=0)

    def _get_interp(self, name):
        if name not in self._interp:
            grid = getattr(self, name)
            center = {"u": self.u_center, "v": self.v_center, "f": self.f_center}[name]
            self._interp[name] = self._interpolator(grid, center)
        return self._interp[name]

    def _eval(self, name, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        shape = np.broadcast(x, y).shape
        x = np.broadcast_to(x, shape).ravel()
        y = np.broadcast_to(y, shape).ravel()
        if self.kind == "disc":
            out = self._get_interp(name).ev(np.hypot(x, y),
                                            np.mod(np.arctan2(y, x), 2.0 * np.pi))
        else:
            out = self._get_interp(name).ev(y, np.mod(x, self.domain.P))
        return out.reshape(shape)

    def uv(self, x, y):
        return self._eval("u", x, y), self._eval("v", x, y)

    def potential_at(self, x, y):
        if self.f is None:
            raise ValueError("field carries no potential grid")
        return self._eval("f", x, y)

    # -- axis sampling -------------------------------------------------------

    def axis_samples(self):
        """Positions x and values (u, v) along the y = 0 axis segment."""
        if self.kind == "disc":
            r, _ = self.grid_axes()
            jpi = self.domain.n_y // 2
            xs = np.concatenate([-r[::-1], [0.0], r])
            vs = np.concatenate([self.v[::-1, jpi], [self.v_center], self.v[:, 0]])
            us = np.concatenate([self.u[::-1, jpi], [self.u_center], self.u[:, 0]])
            return xs, us, vs
        x, y = self.grid_axes()
        j0 = (self.domain.n_y - 1) // 2
        xs = np.concatenate([x, [self.domain.P]])
        vs = np.concatenate([self.v[j0], [self.v[j0, 0]]])
        us = np.concatenate([self.u[j0], [self.u[j0, 0]]])
        return xs, us, vs

    # -- diagnostics ---------------------------------------------------------

    def cartesian_gradient(self, grid):
        """(d/dx, d/dy) of a ring-grid scalar via polar transforms (disc only)."""
        if self.kind != "disc":
            raise ValueError("cartesian_gradient is for disc fields")
        r, th = self.grid_axes()
        g = disc_grid(self.domain.n_x, self.domain.n_y)
        N = self.domain.n_x
        gr = np.empty_like(grid)
        # one-sided at the first and last ring, central elsewhere
        for i in range(N):
            if i == 0:
                h1, h2 = r[1] - r[0], r[2] - r[1]
                gr[0] = (-(2 * h1 + h2) / (h1 * (h1 + h2)) * grid[0]
                         + (h1 + h2) / (h1 * h2) * grid[1]
                         - h1 / (h2 * (h1 + h2)) * grid[2])
            elif i == N - 1:
                d, e = r[N - 2] - r[N - 3], r[N - 1] - r[N - 2]
                gr[i] = (e / (d * (d + e)) * grid[N - 3]
                         - (d + e) / (d * e) * grid[N - 2]
                         + (d + 2 * e) / (e * (d + e)) * grid[N - 1])
            else:
                hm, hp = r[i] - r[i - 1], r[i + 1] - r[i]
                (wm, w0, wp), _ = _nonuniform_weights(hm, hp)
                gr[i] = wm * grid[i - 1] + w0 * grid[i] + wp * grid[i + 1]
        gth = (np.roll(grid, -1, axis=1) - np.roll(grid, 1, axis=1)) * float(g.inv_2sin)
        c, s = np.cos(th)[None, :], np.sin(th)[None, :]
        rr = r[:, None]
        gx = c * gr - (s / rr) * gth
        gy = s * gr + (c / rr) * gth
        return gx, gy

    def validate(self, tol_boundary=1e-12, tol_maxprin=1e-8):
        """Check the container invariants; raises AssertionError on failure."""
        if self.kind == "disc":
            g = disc_grid(self.domain.n_x, self.domain.n_y)
            phi = np.asarray(self.boundary["circle"].sample(g.theta), float)
            assert np.max(np.abs(self.f[-1] - phi)) <= tol_boundary, "boundary mismatch"
            v_bnd = self.v[-1]
            interior = self.v[:-1]
        else:
            g = strip_grid(self.domain.n_x, self.domain.n_y, self.domain.R, self.domain.P)
            x = np.asarray(g.x, float)
            top = np.asarray(self.boundary["top"].sample_x(x, self.domain.P), float)
            bot = np.asarray(self.boundary["bottom"].sample_x(x, self.domain.P), float)
            assert np.max(np.abs(self.v[-1] - top)) <= tol_boundary, "top boundary mismatch"
            assert np.max(np.abs(self.v[0] - bot)) <= tol_boundary, "bottom boundary mismatch"
            v_bnd = np.concatenate([self.v[0], self.v[-1]])
            interior = self.v[1:-1]
            j0 = (self.domain.n_y - 1) // 2
            assert abs(self.u[j0, 0]) <= 1e-12, "u(0,0) normalisation broken"
        assert interior.max() <= v_bnd.max() + tol_maxprin, "maximum principle violated"
        assert interior.min() >= v_bnd.min() - tol_maxprin, "minimum principle violated"
        return True


# ---------------------------------------------------------------------------
# synthetic fields (used by analysis tests and the CLI classify path)

def field_from_callables(domain, a, u_fn, v_fn, is_limit=None):
    """Sample callables u(x, y), v(x, y) into a SolutionField container."""
    if domain.kind == "disc":
        g = disc_grid(domain.n_x, domain.n_y)
        r = np.asarray(g.r, float)
        th = np.asarray(g.theta, float)
        xg = r[:, None] * np.cos(th)[None, :]
        yg = r[:, None] * np.sin(th)[None, :]
        u = np.asarray(u_fn(xg, yg), float)
        v = np.asarray(v_fn(xg, yg), float)
        fld = SolutionField("disc", domain, float(a), u, v,
                            f=np.zeros_like(u), boundary={},
                            u_center=float(u_fn(0.0, 0.0)),
                            v_center=float(v_fn(0.0, 0.0)),
                            converged=True, residual_norm=0.0)
    else:
        g = strip_grid(domain.n_x, domain.n_y, domain.R, domain.P)
        x = np.asarray(g.x, float)
        y = np.asarray(g.y, float)
        xg, yg = np.meshgrid(x, y)
        u = np.asarray(u_fn(xg, yg), float)
        v = np.asarray(v_fn(xg, yg), float)
        fld = SolutionField("periodic-strip", domain, float(a), u, v,
                            boundary={}, converged=True, residual_norm=0.0)
    fld.is_limit = bool(is_limit) if is_limit is not None else (float(a) == 0.0)
    return fld


# ---------------------------------------------------------------------------
# disc solver

def solve_disc(boundary, a, domain=None, initial=None, tol=NEWTON_TOL):
    """Solve the disc problem at level a != 0 with Dirichlet potential data."""
    if a == 0.0:
        raise ValueError("level a = 0 is reached through solve_disc_limit")
    a = abs(float(a))  # solutions at a and -a coincide
    domain = domain or DomainSpec.disc()
    grid = disc_grid(domain.n_x, domain.n_y)
    phi_ld = np.asarray(boundary.sample(grid.theta), LD)
    f0 = initial if initial is not None else grid.harmonic_extension(boundary)

    def eval_res(f_int):
        return grid.residual(f_int, phi_ld, LD(str(a)))

    def build_jac(f_int64):
        return grid.jacobian(f_int64, np.asarray(phi_ld, float), a)

    f_sol, norm, iters, diag = _newton(f0, eval_res, build_jac, tol=tol)
    u, v, u_c, v_c, f_c = grid.extract_uv(f_sol, phi_ld)
    f_full = np.vstack([np.asarray(f_sol, float), np.asarray(phi_ld, float)[None, :]])
    return SolutionField(
        "disc", domain, a, u, v, f=f_full, f_center=f_c, u_center=u_c, v_center=v_c,
        boundary={"circle": boundary}, converged=True, residual_norm=norm,
        diagnostics={"newton_iterations": iters, **diag},
    )


def solve_disc_limit(boundary, domain=None, schedule=None, tol=NEWTON_TOL):
    """Continuation along a decreasing level schedule; returns the a_min proxy."""
    schedule = tuple(schedule) if schedule is not None else geometric_schedule()
    if len(schedule) == 0 or any(s <= 0 for s in schedule) or \
            any(schedule[i + 1] >= schedule[i] for i in range(len(schedule) - 1)):
        raise ValueError("schedule must be a decreasing positive sequence")
    domain = domain or DomainSpec.disc()
    fld = None
    f_prev = None
    increments_u, increments_v = [], []
    for a_k in schedule:
        try:
            nxt = solve_disc(boundary, a_k, domain, initial=f_prev, tol=tol)
        except SolverDiverged as exc:
            raise ContinuationFailed(f"continuation step failed at a={a_k}",
                                     a=a_k, residual=exc.data.get("residual")) from exc
        if fld is not None:
            increments_u.append(float(np.max(np.abs(nxt.u - fld.u))))
            increments_v.append(float(np.max(np.abs(nxt.v - fld.v))))
        fld = nxt
        f_prev = np.asarray(fld.f[:-1], LD)
    fld.is_limit = True
    fld.cauchy_increments = tuple(increments_v)
    fld.diagnostics["cauchy_u"] = tuple(increments_u)
    fld.diagnostics["cauchy_v"] = tuple(increments_v)
    fld.diagnostics["schedule"] = tuple(float(s) for s in schedule)
    return fld


# ---------------------------------------------------------------------------
# strip solver

def solve_strip(top, bottom, a, domain=None, initial=None, tol=NEWTON_TOL):
    """Solve the strip problem at level a != 0 with edge data for v."""
    if a == 0.0:
        raise ValueError("level a = 0 is reached through solve_strip_limit")
    a = abs(float(a))
    scale = max(1.0, top.max_abs(), bottom.max_abs())
    if abs(top.constant - bottom.constant) > 1e-12 * scale:
        raise IncompatibleBoundary("edge data must have equal means",
                                   top_mean=top.constant, bottom_mean=bottom.constant)
    domain = domain or DomainSpec.strip()
    grid = strip_grid(domain.n_x, domain.n_y, domain.R, domain.P)
    top_ld = np.asarray(top.sample_x(grid.x, LD(str(domain.P))), LD)
    bot_ld = np.asarray(bottom.sample_x(grid.x, LD(str(domain.P))), LD)
    if initial is not None:
        v0 = initial
    else:
        # linear blend between the edges
        w = (np.asarray(grid.y[1:-1], LD)[:, None] + LD(str(domain.R))) / (2 * LD(str(domain.R)))
        v0 = bot_ld[None, :] * (1 - w) + top_ld[None, :] * w

    def eval_res(v_int):
        return grid.residual(v_int, top_ld, bot_ld, LD(str(a)))

    def build_jac(v_int64):
        return grid.jacobian(v_int64, np.asarray(top_ld, float), np.asarray(bot_ld, float), a)

    v_sol, norm, iters, diag = _newton(v0, eval_res, build_jac, tol=tol)
    v_full = np.vstack([np.asarray(bot_ld, float), np.asarray(v_sol, float),
                        np.asarray(top_ld, float)])
    fld = SolutionField(
        "periodic-strip", domain, a, np.zeros_like(v_full), v_full,
        boundary={"top": top, "bottom": bottom}, converged=True, residual_norm=norm,
        diagnostics={"newton_iterations": iters, **diag},
    )
    return reconstruct_u(fld)


def solve_strip_limit(top, bottom, domain=None, schedule=None, tol=NEWTON_TOL):
    """Continuation wrapper for the strip problem down to the a_min proxy."""
    schedule = tuple(schedule) if schedule is not None else geometric_schedule()
    if len(schedule) == 0 or any(s <= 0 for s in schedule) or \
            any(schedule[i + 1] >= schedule[i] for i in range(len(schedule) - 1)):
        raise ValueError("schedule must be a decreasing positive sequence")
    domain = domain or DomainSpec.strip()
    fld = None
    v_prev = None
    increments_u, increments_v = [], []
    for a_k in schedule:
        try:
            nxt = solve_strip(top, bottom, a_k, domain, initial=v_prev, tol=tol)
        except SolverDiverged as exc:
            raise ContinuationFailed(f"continuation step failed at a={a_k}",
                                     a=a_k, residual=exc.data.get("residual")) from exc
        if fld is not None:
            increments_u.append(float(np.max(np.abs(nxt.u - fld.u))))
            increments_v.append(float(np.max(np.abs(nxt.v - fld.v))))
        fld = nxt
        v_prev = np.asarray(fld.v[1:-1], LD)
    fld.is_limit = True
    fld.cauchy_increments = tuple(increments_v)
    fld.diagnostics["cauchy_u"] = tuple(increments_u)
    fld.diagnostics["cauchy_v"] = tuple(increments_v)
    fld.diagnostics["schedule"] = tuple(float(s) for s in schedule)
    return fld


def reconstruct_u(field, defect_tol=1e-6):
    """Rebuild u from v on a strip via u_x = v_y and the x = 0 column.

    u(0, y) comes from integrating u_y = -(1/2)(v^2+y^2+a^2)^(-1/2) v_x up
    the column x = 0 from the anchor u(0,0) = 0, then each row integrates
    u_x = v_y.  The periodic closure defect of every row is recorded; a
    defect above tolerance signals an unconverged v or incompatible data.
    """
    if field.kind != "periodic-strip":
        raise ValueError("reconstruct_u applies to strip fields")
    grid = strip_grid(field.domain.n_x, field.domain.n_y, field.domain.R, field.domain.P)
    v = field.v
    hx = float(grid.hx)
    hy = float(grid.hy)
    y = np.asarray(grid.y, float)
    a = field.a
    vx = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / (2 * hx)
    vy = np.gradient(v, hy, axis=0, edge_order=2)

    defects = hx * vy.sum(axis=1)
    worst = float(np.max(np.abs(defects)))
    if worst > defect_tol:
        raise MonodromyDefect("periodic closure of u failed", defect=worst)

    q = v**2 + y[:, None] ** 2 + a * a
    uy = -0.5 * vx / np.sqrt(np.maximum(q, COEFF_FLOOR))
    j0 = (field.domain.n_y - 1) // 2
    u0 = np.zeros(field.domain.n_y)
    for j in range(j0 + 1, field.domain.n_y):
        u0[j] = u0[j - 1] + 0.5 * hy * (uy[j - 1, 0] + uy[j, 0])
    for j in range(j0 - 1, -1, -1):
        u0[j] = u0[j + 1] - 0.5 * hy * (uy[j + 1, 0] + uy[j, 0])

    u = np.empty_like(v)
    u[:, 0] = u0
    incr = 0.5 * hx * (vy + np.roll(vy, -1, axis=1))  # trapezoid per cell
    u[:, 1:] = u0[:, None] + np.cumsum(incr[:, :-1], axis=1)

    field.u = u
    field.diagnostics["closure_defect"] = worst
    field._interp.pop("u", None)
    return field


def mean_flux(field, row):
    """Periodic trapezoid mean of v along a grid row of a strip field."""
    if field.kind != "periodic-strip":
        raise ValueError("mean_flux applies to strip fields")
    return float(np.mean(field.v[row]))


# ---------------------------------------------------------------------------
# field dump input/output

def save_field(field, path):
    """Write the dump: one JSON header line, then a CSV body.

    Disc rows: centre first, then rings inner to outer, angles ascending;
    columns x, y, f, u, v.  Strip rows: y ascending then x ascending;
    columns x, y, u, v.
    """
    header = {
        "kind": field.kind,
        "a": field.a,
        "R": field.domain.R,
        "P": field.domain.P,
        "n_x": field.domain.n_x,
        "n_y": field.domain.n_y,
        "boundary": {k: spec.to_json() for k, spec in field.boundary.items()},
        "residual_norm": field.residual_norm,
        "converged": bool(field.converged),
        "is_limit": bool(field.is_limit),
    }
    lines = [json.dumps(header, sort_keys=True)]
    if field.kind == "disc":
        lines.append("x,y,f,u,v")
        lines.append("0.0,0.0," + ",".join(
            repr(float(v)) for v in (field.f_center, field.u_center, field.v_center)))
        xg, yg, u, v = field.node_arrays()
        cols = (xg, yg, field.f, u, v)
    else:
        lines.append("x,y,u,v")
        xg, yg, u, v = field.node_arrays()
        cols = (xg, yg, u, v)
    flat = [np.asarray(c, float).ravel() for c in cols]
    for row in zip(*flat):
        lines.append(",".join(repr(val) for val in map(float, row)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path):
    """Rebuild a SolutionField from a dump written by save_field."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        names = fh.readline().strip().split(",")
        body = np.loadtxt(fh, delimiter=",").reshape(-1, len(names))
    kind = header["kind"]
    if kind == "disc":
        domain = DomainSpec.disc(header["n_x"], header["n_y"])
        n, m = domain.n_x, domain.n_y
        f_c, u_c, v_c = body[0, 2], body[0, 3], body[0, 4]
        rows = body[1:]
        f = rows[:, 2].reshape(n, m)
        u = rows[:, 3].reshape(n, m)
        v = rows[:, 4].reshape(n, m)
        boundary = {k: BoundarySpec.from_json(o) for k, o in header["boundary"].items()}
        fld = SolutionField(kind, domain, header["a"], u, v, f=f, f_center=float(f_c),
                            u_center=float(u_c), v_center=float(v_c), boundary=boundary,
                            converged=header["converged"],
                            residual_norm=header["residual_norm"],
                            is_limit=header["is_limit"])
        return fld
    domain = DomainSpec.strip(header["n_x"], header["n_y"], header["R"], header["P"])
    u = body[:, 2].reshape(domain.n_y, domain.n_x)
    v = body[:, 3].reshape(domain.n_y, domain.n_x)
    boundary = {k: BoundarySpec.from_json(o) for k, o in header["boundary"].items()}
    return SolutionField(kind, domain, header["a"], u, v, boundary=boundary,
                         converged=header["converged"],
                         residual_norm=header["residual_norm"],
                         is_limit=header["is_limit"])
