"""Assembly of the solver-backed fibration families and their discriminants.

Two concrete families are built.

Disc sweep: potential data phi_alpha = alpha cos(theta) - cos(3 theta) on
the unit circle, fibres indexed by (a, alpha, beta) where beta only
translates Im z3.  At level zero the family bifurcates at two parameter
values: alpha0, where v(0,0) crosses zero and a fused double singular
point appears at the origin, and alpha1, where v(1,0) crosses zero and
the singular points exit through the domain boundary.  The discriminant
is the ribbon {0} x [alpha0, alpha1) x R.

Strip sweep: edge data b + t cos(x) with period 2 pi on both edges,
fibres indexed by (a, b, c).  For t > 0 the level-zero fibres carry
singular points for b in the band [alpha(t), beta(t)], where alpha(t)
and beta(t) are the roots in b of v(0,0) and v(pi,0); at t = 0 the band
degenerates to the codimension-two line b = 0.

All parameter searches use bisection on solver probes, justified by the
strict monotonicity of v in the boundary data; solver results are cached
in memory (and on disk when SLFIB_CACHE_DIR is set).
"""

import hashlib
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .elliptic import (
    BoundarySpec,
    DomainSpec,
    geometric_schedule,
    load_field,
    save_field,
    solve_disc,
    solve_disc_limit,
    solve_strip,
    solve_strip_limit,
)
from .errors import BracketFailed, OutsideTotalSpace
from .singularities import detect_axis_zeros

DEFAULT_DISC_RESOLUTION = (64, 128)
DEFAULT_STRIP_RESOLUTION = (128, 65)
DEFAULT_SCHEDULE = geometric_schedule(1.0, 0.25)
ROOT_TOL = 1e-6
CURVE_TOL = 1e-5
CACHE_ENV = "SLFIB_CACHE_DIR"


@dataclass(frozen=True)
class FiberCoordinates:
    """Base coordinates of a solver-backed fibre."""

    a: float
    b: float
    c: float


@dataclass(frozen=True)
class DiscriminantRibbon:
    """Codimension-one discriminant component at level a = 0."""

    a_plane: float
    b_interval: tuple
    c_range: str                      # "all-reals" for both families here
    endpoint_kind: tuple              # kind at (b_lo, b_hi)
    counts: tuple                     # singular points per fibre: (exterior, edge, interior)
    degenerate: bool = False

    def width(self):
        return self.b_interval[1] - self.b_interval[0]


@dataclass(frozen=True)
class FamilySpec:
    """One of the two concrete sweep families."""

    kind: str                         # "disc-sweep" | "strip-sweep"
    t: float = 0.0                    # strip deformation parameter
    R: float = 1.0
    P: float = 2.0 * np.pi
    a_grid: tuple = ()
    b_grid: tuple = ()
    t_grid: tuple = ()

    def __post_init__(self):
        if self.kind not in ("disc-sweep", "strip-sweep"):
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == "strip-sweep" and abs(self.P - 2.0 * np.pi) > 1e-12:
            raise ValueError("the strip sweep family is defined at period 2 pi")

    def boundary(self, b):
        """Boundary data at family parameter b (alpha for the disc sweep)."""
        if self.kind == "disc-sweep":
            return BoundarySpec.make(cos={1: b, 3: -1.0})
        spec = BoundarySpec.make(constant=b, cos={1: self.t} if self.t else None)
        return spec, spec


def disc_family():
    return FamilySpec("disc-sweep")


def strip_family(t):
    return FamilySpec("strip-sweep", t=float(t))


# ---------------------------------------------------------------------------
# solver cache

class SolverCache:
    """LRU cache of solved fields, optionally persisted to SLFIB_CACHE_DIR."""

    def __init__(self, maxsize=48):
        self.maxsize = maxsize
        self._store = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _disk_path(self, key):
        root = os.environ.get(CACHE_ENV)
        if not root:
            return None
        os.makedirs(root, exist_ok=True)
        digest = hashlib.sha256(repr(key).encode()).hexdigest()[:24]
        return os.path.join(root, f"field-{digest}.csv")

    def get_or_solve(self, key, solve_fn):
        with self._lock:
            if key in self._store:
                self.hits += 1
                self._store.move_to_end(key)
                return self._store[key]
        path = self._disk_path(key)
        fld = None
        if path and os.path.exists(path):
            fld = load_field(path)
        if fld is None:
            self.misses += 1
            fld = solve_fn()
            if path:
                save_field(fld, path)
        with self._lock:
            self._store[key] = fld
            self._store.move_to_end(key)
            while len(self._store) > self.maxsize:
                self._store.popitem(last=False)
        return fld


_shared_cache = SolverCache()


def solve_family_member(family, a, b, resolution=None, schedule=None, cache=None):
    """Solve (or fetch) the family field at level a and parameter b."""
    cache = cache or _shared_cache
    schedule = tuple(schedule) if schedule is not None else DEFAULT_SCHEDULE
    if family.kind == "disc-sweep":
        res = resolution or DEFAULT_DISC_RESOLUTION
        domain = DomainSpec.disc(*res)
        spec = family.boundary(b)
        key = ("disc", round(float(a), 15), spec.key(), res, schedule if a == 0 else None)
        if a == 0.0:
            return cache.get_or_solve(key, lambda: solve_disc_limit(spec, domain, schedule))
        return cache.get_or_solve(key, lambda: solve_disc(spec, a, domain))
    res = resolution or DEFAULT_STRIP_RESOLUTION
    domain = DomainSpec.strip(res[0], res[1], family.R, family.P)
    top, bottom = family.boundary(b)
    key = ("strip", round(float(a), 15), family.t, top.key(), bottom.key(), res,
           (family.R, family.P), schedule if a == 0 else None)
    if a == 0.0:
        return cache.get_or_solve(
            key, lambda: solve_strip_limit(top, bottom, domain, schedule))
    return cache.get_or_solve(key, lambda: solve_strip(top, bottom, a, domain))


# ---------------------------------------------------------------------------
# probes and root searches

def vhat_probe(a, alpha, point, resolution=None, schedule=None, cache=None):
    """Interpolated v of the disc-family field at a point of the closed disc."""
    x, y = point
    if np.hypot(x, y) > 1.0 + 1e-12:
        raise OutsideTotalSpace("probe point outside the closed disc", x=x, y=y)
    fld = solve_family_member(disc_family(), a, alpha, resolution, schedule, cache)
    if x == 0.0 and y == 0.0:
        return float(fld.v_center)
    _, v = fld.uv(x, y)
    return float(v)


def _bisect(fn, lo, hi, tol, max_iter=200):
    flo = fn(lo)
    fhi = fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo < 0.0) == (fhi < 0.0):
        raise BracketFailed("no sign change over the bracket", lo=lo, hi=hi,
                            f_lo=flo, f_hi=fhi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            return mid
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_alpha0_alpha1(schedule=None, resolution=None, bracket=(-20.0, 20.0),
                       tol=ROOT_TOL, cache=None):
    """The two bifurcation values of the disc sweep at level zero.

    alpha0 is the unique root of alpha -> v(0,0) and alpha1 of
    alpha -> v(1,0); both probes are strictly increasing in alpha.
    """
    alpha0 = _bisect(
        lambda al: vhat_probe(0.0, al, (0.0, 0.0), resolution, schedule, cache),
        bracket[0], bracket[1], tol)
    alpha1 = _bisect(
        lambda al: vhat_probe(0.0, al, (1.0, 0.0), resolution, schedule, cache),
        bracket[0], bracket[1], tol)
    if not alpha0 < alpha1:
        raise BracketFailed("bifurcation values out of order",
                            alpha0=alpha0, alpha1=alpha1)
    return alpha0, alpha1


def _grown_bracket(fn, tol, b0=2.0, b_max=1024.0):
    b = b0
    while b <= b_max:
        try:
            return _bisect(fn, -b, b, tol)
        except BracketFailed:
            b *= 2.0
    raise BracketFailed("no sign change up to the maximal bracket", b_max=b_max)


def project_to_base(p, family, resolution=None, schedule=None, cache=None,
                    tol=ROOT_TOL):
    """Base coordinates of a total-space point under the family fibration.

    The level is read off the moment map; the family parameter b is the
    unique root of the strictly increasing map b -> v_(a,b)(x, y) minus
    Re(z1 z2); the translation c is Im z3 - u_(a,b)(x, y).
    """
    z1, z2, z3 = p.z1, p.z2, p.z3
    x = z3.real
    y = (z1 * z2).imag
    target = (z1 * z2).real
    a = 0.5 * (abs(z1) ** 2 - abs(z2) ** 2)
    if family.kind == "disc-sweep":
        if x * x + y * y >= 1.0:
            raise OutsideTotalSpace("(Re z3)^2 + (Im z1 z2)^2 must be below 1",
                                    x=x, y=y)
    else:
        if abs(y) >= family.R:
            raise OutsideTotalSpace("|Im z1 z2| must be below R", y=y)

    def probe(b):
        fld = solve_family_member(family, a, b, resolution, schedule, cache)
        if family.kind == "disc-sweep" and x == 0.0 and y == 0.0:
            return float(fld.v_center) - target
        _, v = fld.uv(x, y)
        return float(v) - target

    b = _grown_bracket(probe, tol)
    fld = solve_family_member(family, a, b, resolution, schedule, cache)
    if family.kind == "disc-sweep" and x == 0.0 and y == 0.0:
        u_val = float(fld.u_center)
    else:
        u_val, _ = fld.uv(x, y)
        u_val = float(u_val)
    c = z3.imag - u_val
    return FiberCoordinates(float(a), float(b), float(c))


def alpha_beta_curves(t_grid, resolution=None, schedule=None, tol=CURVE_TOL,
                      cache=None):
    """Edge curves of the strip-sweep discriminant band over a t grid.

    alpha(t) and beta(t) are the roots in b of the level-zero probes
    v(0,0) and v(pi,0); alpha <= beta because v(., 0) peaks at x = 0.
    """
    out = []
    for t in t_grid:
        fam = strip_family(t)

        def probe_at(x0):
            def fn(b):
                fld = solve_family_member(fam, 0.0, b, resolution, schedule, cache)
                _, v = fld.uv(x0, 0.0)
                return float(v)
            return fn

        alpha_t = _grown_bracket(probe_at(0.0), tol)
        beta_t = _grown_bracket(probe_at(np.pi), tol)
        out.append((float(t), alpha_t, beta_t))
    return out


def refine_band_edge(family, which, coarse, tol=1e-9, resolution=None,
                     schedule=None, cache=None, window=1e-4):
    """Re-bisect a band-edge root to high accuracy from a coarse value."""
    x0 = 0.0 if which == "alpha" else np.pi

    def fn(b):
        fld = solve_family_member(family, 0.0, b, resolution, schedule, cache)
        _, v = fld.uv(x0, 0.0)
        return float(v)

    lo, hi = coarse - window, coarse + window
    while fn(lo) > 0:
        lo -= window
    while fn(hi) < 0:
        hi += window
    return _bisect(fn, lo, hi, tol)


def ribbon_report(family, params, resolution=None, schedule=None, cache=None):
    """Discriminant ribbon data for a family.

    Disc sweep: params = (alpha0, alpha1); the lower end is a fold edge
    (a fused double point), the upper end is where the singular points
    reach the domain boundary.  Strip sweep: params = (alpha_t, beta_t);
    at t = 0 the band degenerates to the codimension-two line b = 0.
    """
    if family.kind == "disc-sweep":
        alpha0, alpha1 = params
        return DiscriminantRibbon(
            a_plane=0.0, b_interval=(float(alpha0), float(alpha1)),
            c_range="all-reals", endpoint_kind=("fold-boundary", "domain-boundary"),
            counts=(0, 1, 2))
    alpha_t, beta_t = params
    degenerate = abs(beta_t - alpha_t) < 1e-7
    return DiscriminantRibbon(
        a_plane=0.0, b_interval=(float(alpha_t), float(beta_t)),
        c_range="all-reals", endpoint_kind=("fold-boundary", "fold-boundary"),
        counts=(0, 1, 2), degenerate=degenerate)


def singular_count_profile(family, t, b_samples=None, resolution=None,
                           schedule=None, cache=None, cluster_tol=None,
                           tangential_threshold=None):
    """Axis-zero counts per period across the discriminant band.

    With no explicit samples the band edges are refined to 1e-9 and the
    profile is sampled just outside, at both edges and at the midpoint,
    where the expected counts are 0 / 1 / 2 / 1 / 0.
    """
    if not 0.0 < t <= 1.0:
        raise ValueError("the profile is defined for t in (0, 1]")
    fam = strip_family(t)
    if b_samples is None:
        (_, alpha_c, beta_c), = alpha_beta_curves([t], resolution, schedule,
                                                  cache=cache)
        alpha_t = refine_band_edge(fam, "alpha", alpha_c, resolution=resolution,
                                   schedule=schedule, cache=cache)
        beta_t = refine_band_edge(fam, "beta", beta_c, resolution=resolution,
                                  schedule=schedule, cache=cache)
        width = beta_t - alpha_t
        delta = max(0.05 * width, 1e-3)
        b_samples = [alpha_t - delta, alpha_t, 0.5 * (alpha_t + beta_t),
                     beta_t, beta_t + delta]
    out = []
    for b in b_samples:
        fld = solve_family_member(fam, 0.0, b, resolution, schedule, cache)
        kwargs = {}
        if cluster_tol is not None:
            kwargs["cluster_tol"] = cluster_tol
        if tangential_threshold is not None:
            kwargs["tangential_threshold"] = tangential_threshold
        zeros = detect_axis_zeros(fld, **kwargs)
        out.append((float(b), len(zeros), tuple(zeros)))
    return out
