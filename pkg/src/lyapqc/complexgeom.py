"""Complex-plane geometry: curves, Lyapunov regions, isometries, constants.

Points are plain Python/numpy complex numbers.  The point at infinity is the
singleton :data:`INF`; it is accepted only by the Moebius maps in
:mod:`lyapqc.qhyperbolic` and by :class:`Isometry`.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DataError, NumericalError, ParameterDomainError
from .sampling import kronecker2d

HALF_PI = 0.5 * math.pi


class Infinity:
    """The point at infinity of the extended plane (singleton :data:`INF`)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()


def is_inf(z):
    return z is INF


def arg_upper(w):
    """Argument on the branch (-pi/2, 3pi/2]; used only for region membership."""
    a = np.angle(w)
    return np.where(a <= -HALF_PI, a + 2.0 * math.pi, a)


# ---------------------------------------------------------------------------
# Sampled curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledCurve:
    """Polyline with cumulative chord length ``cum_length``.

    For closed curves the closing segment (last -> first) is implicit and
    :attr:`length` includes it.
    """

    points: np.ndarray
    cum_length: np.ndarray
    closed: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        s = np.asarray(self.cum_length, dtype=float)
        if pts.ndim != 1 or pts.shape != s.shape:
            raise DataError("points and cum_length must be 1-D arrays of equal length")
        if len(pts) < 2:
            raise DataError("a curve needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise DataError("curve points must be finite")
        if s[0] != 0.0 or np.any(np.diff(s) <= 0.0):
            raise DataError("cum_length must start at 0 and increase strictly")
        if self.closed and pts[0] == pts[-1]:
            raise DataError("closed curves store the first point only once")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "cum_length", s)

    @classmethod
    def from_points(cls, points, closed=False):
        pts = np.asarray(points, dtype=complex)
        seg = np.abs(np.diff(pts))
        if np.any(seg == 0.0):
            i = int(np.argmin(seg))
            raise DataError(f"repeated consecutive points at index {i}")
        return cls(pts, np.concatenate(([0.0], np.cumsum(seg))), closed)

    def __len__(self):
        return len(self.points)

    @property
    def length(self):
        total = self.cum_length[-1]
        if self.closed:
            total += abs(self.points[0] - self.points[-1])
        return float(total)

    def scaled(self, factor):
        return SampledCurve(self.points * factor, self.cum_length * abs(factor), self.closed)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "s"])
        for z, s in zip(self.points, self.cum_length):
            w.writerow([f"{z.real:.17g}", f"{z.imag:.17g}", f"{s:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, closed=False):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [h.strip() for h in rows[0]] != ["re", "im", "s"]:
            raise DataError("curve CSV must start with header re,im,s")
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
        if data.size == 0:
            raise DataError("curve CSV has no samples")
        return cls(data[:, 0] + 1j * data[:, 1], data[:, 2], closed)


def build_graph_curve(c, mu, x0, n):
    """Graph of y = c|x|^(1+mu) on [-x0, x0]; always samples x = 0.

    ``2 * (n // 2) + 1`` samples are returned, equally spaced in x.
    """
    _check_c_mu(c, mu)
    if not x0 > 0:
        raise ParameterDomainError("x0 must be positive")
    if n < 16:
        raise ParameterDomainError("n must be at least 16")
    m = n // 2
    x = np.linspace(-x0, x0, 2 * m + 1)
    x[m] = 0.0
    y = c * np.abs(x) ** (1.0 + mu)
    return SampledCurve.from_points(x + 1j * y)


def gamma_branch(c, mu, rho):
    """Right branch of the elementary Lyapunov curve: rho * exp(i c rho^mu)."""
    rho = np.asarray(rho, dtype=float)
    return rho * np.exp(1j * c * rho**mu)


def build_gamma_curve(c, mu, r0, n):
    """Polar curve joining phi = c r^mu and pi - phi = c r^mu at the origin.

    Oriented left to right: from the left branch at r = r0 down to 0, then
    out along the right branch.  ``2 * (n // 2) + 1`` samples, uniform in r.
    """
    _check_c_mu(c, mu)
    if not r0 > 0:
        raise ParameterDomainError("r0 must be positive")
    if not c * r0**mu < HALF_PI:
        raise ParameterDomainError(f"admissibility c*r0^mu < pi/2 violated ({c * r0 ** mu:.6g})")
    if n < 16:
        raise ParameterDomainError("n must be at least 16")
    m = n // 2
    r = np.linspace(0.0, r0, m + 1)[1:]
    right = gamma_branch(c, mu, r)
    left = -np.conj(right[::-1])
    pts = np.concatenate((left, [0j], right))
    return SampledCurve.from_points(pts)


def build_circle_curve(center, radius, n, start=0.0):
    """Counter-clockwise closed circle sampled at ``n`` equispaced angles."""
    t = start + 2.0 * math.pi * np.arange(n) / n
    return SampledCurve.from_points(center + radius * np.exp(1j * t), closed=True)


def _check_c_mu(c, mu):
    if not c > 0:
        raise ParameterDomainError("c must be positive")
    if not 0.0 < mu < 1.0:
        raise ParameterDomainError("mu must lie in (0, 1)")


def _clustered(n, power=2.0):
    """n values in (0, 1], clustered near 0."""
    return (np.arange(1, n + 1) / n) ** power


# ---------------------------------------------------------------------------
# Lyapunov regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LypRegionSpec:
    """Lyp(eps, c, mu) = {c|w|^mu < arg w < pi - c|w|^mu, |w| < eps}."""

    eps: float
    c: float
    mu: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ParameterDomainError("eps must be positive")
        _check_c_mu(self.c, self.mu)
        if not self.c * self.eps**self.mu < HALF_PI:
            raise ParameterDomainError(
                f"admissibility c*eps^mu < pi/2 violated ({self.c * self.eps ** self.mu:.6g})"
            )

    kind = "lyp"

    def contains(self, w):
        return region_contains(self, w)

    def margin(self, w):
        """Distance-like signed margin: positive inside, negative outside."""
        w = np.asarray(w, dtype=complex)
        rho = np.abs(w)
        th = arg_upper(w)
        bound = self.c * rho**self.mu
        return np.minimum.reduce([self.eps - rho, rho * (th - bound), rho * (math.pi - bound - th)])

    def closure_contains(self, w, tol=1e-9):
        return self.margin(w) >= -tol

    def boundary(self, n=2000):
        """Closed counter-clockwise boundary polyline (starts at the vertex 0)."""
        m = max(n // 3, 8)
        rho = self.eps * _clustered(m)
        right = gamma_branch(self.c, self.mu, rho)
        a0 = self.c * self.eps**self.mu
        t = np.linspace(a0, math.pi - a0, m + 2)[1:-1]
        arc = self.eps * np.exp(1j * t)
        left = -np.conj(right[::-1])
        return np.concatenate(([0j], right, arc, left))

    def sample(self, n, seed=0, vertex_fraction=0.25):
        """Quasi-uniform interior samples, with a share placed log-uniformly near 0."""
        u = kronecker2d(n, seed)
        # sample k is a vertex sample independently of n, so refinement extends
        k = np.arange(n)
        near = np.floor((k + 1) * vertex_fraction) > np.floor(k * vertex_fraction)
        rho = self.eps * np.sqrt(u[:, 0])
        rho[near] = self.eps * 10.0 ** (-6.0 * u[near, 0])
        lo = self.c * rho**self.mu
        th = lo + u[:, 1] * (math.pi - 2.0 * lo)
        return rho * np.exp(1j * th)

    def scaled(self, factor):
        return ScaledRegion(self, factor)

    def to_kv(self):
        return f"kind=lyp\neps={self.eps!r}\nc={self.c!r}\nmu={self.mu!r}\n"


def region_contains(spec, w):
    """Strict membership in Lyp(eps, c, mu); vectorised.  ``w = 0`` is outside."""
    w = np.asarray(w, dtype=complex)
    rho = np.abs(w)
    th = arg_upper(w)
    bound = spec.c * rho**spec.mu
    inside = (rho < spec.eps) & (bound < th) & (th < math.pi - bound) & (rho > 0)
    return inside if inside.ndim else bool(inside)


@dataclass(frozen=True)
class ElementaryDomainSpec:
    """Lyp^-(eps, c): region between gamma(c, mu) and the upper arc of C(iv, r)."""

    region: LypRegionSpec
    circle_center_v: float
    circle_radius: float
    touch_points: tuple

    kind = "elementary"

    @property
    def center(self):
        return 1j * self.circle_center_v

    @property
    def touch_rho(self):
        return abs(self.touch_points[1])

    def contains(self, w):
        return self.margin(w) > 0

    def closure_contains(self, w, tol=1e-9):
        return self.margin(w) >= -tol

    def margin(self, w):
        w = np.asarray(w, dtype=complex)
        disk = self.circle_radius - np.abs(w - self.center)
        u2 = self.touch_points[1].real
        rho = np.abs(w)
        th = arg_upper(w)
        bound = self.region.c * rho**self.region.mu
        sliver = np.minimum.reduce(
            [
                u2 - np.abs(w.real),
                self.circle_center_v - w.imag,
                rho * (th - bound),
                rho * (math.pi - bound - th),
            ]
        )
        return np.maximum(disk, sliver)

    def upper_arc(self, n):
        """The arc l+ from w2 to w1, chosen as the arc with larger imaginary midpoint."""
        w1, w2 = self.touch_points
        p1 = math.atan2((w1 - self.center).imag, (w1 - self.center).real)
        p2 = math.atan2((w2 - self.center).imag, (w2 - self.center).real)
        ccw = (p1 - p2) % (2.0 * math.pi)
        cw = ccw - 2.0 * math.pi
        mid_ccw = (self.center + self.circle_radius * np.exp(1j * (p2 + ccw / 2))).imag
        mid_cw = (self.center + self.circle_radius * np.exp(1j * (p2 + cw / 2))).imag
        span = ccw if mid_ccw >= mid_cw else cw
        t = p2 + span * np.linspace(0.0, 1.0, n + 2)[1:-1]
        return self.center + self.circle_radius * np.exp(1j * t)

    def boundary(self, n=2000):
        """Closed boundary polyline: gamma part w1 -> 0 -> w2, then l+ back to w1."""
        m = max(n // 3, 8)
        rho = self.touch_rho * _clustered(m)
        right = gamma_branch(self.region.c, self.region.mu, rho)
        right[-1] = self.touch_points[1]
        left = -np.conj(right[::-1])
        return np.concatenate(([0j], right, self.upper_arc(n - 2 * m - 1), left))

    def sample(self, n, seed=0, vertex_fraction=0.25):
        """Quasi-uniform interior samples (rejection from the bounding box) plus a
        share placed log-uniformly in radius inside the cusp near the vertex."""
        nv = int(n * vertex_fraction)
        nb = n - nv
        u2 = self.touch_points[1].real
        half_w = max(self.circle_radius, u2)
        top = self.circle_center_v + self.circle_radius
        out = []
        got = 0
        k = max(2 * nb, 64)
        seq = kronecker2d(k, seed)
        while got < nb:
            cand = (-half_w + 2 * half_w * seq[:, 0]) + 1j * (top * seq[:, 1])
            keep = cand[self.contains(cand)]
            out.append(keep[: nb - got])
            got += len(out[-1])
            k *= 2
            seq = kronecker2d(k, seed)[k // 2 :]
        pts = np.concatenate(out) if out else np.zeros(0, complex)
        if nv:
            u = kronecker2d(nv, seed + 1)
            rmax = 0.5 * min(u2, self.circle_center_v)
            rho = rmax * 10.0 ** (-6.0 * u[:, 0])
            lo = self.region.c * rho**self.region.mu
            th = lo + u[:, 1] * (math.pi - 2.0 * lo)
            pts = np.concatenate((rho * np.exp(1j * th), pts))
        return pts

    def tangency_residual(self):
        """Worst of |dist(iv, w_k) - r| / r and the normalised foot-point condition."""
        res = 0.0
        for w in self.touch_points:
            res = max(res, abs(abs(w - self.center) - self.circle_radius) / self.circle_radius)
        rho = self.touch_rho
        res = max(res, abs(_foot_derivative(self.region.c, self.region.mu, self.circle_center_v, rho)) / (rho + self.circle_center_v))
        return res

    def scaled(self, factor):
        return ScaledRegion(self, factor)

    def to_kv(self):
        r = self.region
        return (
            f"kind=elementary\neps={r.eps!r}\nc={r.c!r}\nmu={r.mu!r}\n"
            f"v={self.circle_center_v!r}\nr={self.circle_radius!r}\n"
        )


@dataclass(frozen=True)
class ScaledRegion:
    """Homothetic copy ``factor * base`` of a region about the origin."""

    base: object
    factor: float

    kind = "scaled"

    def contains(self, w):
        return self.base.contains(np.asarray(w) / self.factor)

    def closure_contains(self, w, tol=1e-9):
        return self.base.closure_contains(np.asarray(w) / self.factor, tol / self.factor)

    def margin(self, w):
        return self.factor * self.base.margin(np.asarray(w) / self.factor)

    def boundary(self, n=2000):
        return self.factor * self.base.boundary(n)

    def sample(self, n, seed=0, vertex_fraction=0.25):
        return self.factor * self.base.sample(n, seed, vertex_fraction)

    def to_kv(self):
        base = "".join(f"base_{line}\n" for line in self.base.to_kv().splitlines())
        return f"kind=scaled\nfactor={self.factor!r}\n" + base


def _foot_derivative(c, mu, v, rho):
    """(1/2) d/drho |gamma(rho) - iv|^2 on the right branch."""
    th = c * rho**mu
    w = rho * np.exp(1j * th)
    dw = np.exp(1j * th) * (1.0 + 1j * c * mu * rho**mu)
    return np.real(np.conj(w - 1j * v) * dw)


def _foot_point(c, mu, v, rho_max):
    """Nearest point of the right branch (rho in (0, rho_max]) to iv.

    Local minima of the distance are bracketed by sign changes of the foot
    derivative; comparing squared distances directly loses the minimiser to
    cancellation when it sits very close to the vertex.
    """
    rho = np.concatenate(([rho_max * 1e-12], rho_max * _clustered(4000, 3.0)[1:]))
    fd = _foot_derivative(c, mu, v, rho)
    cand = np.flatnonzero((fd[:-1] < 0) & (fd[1:] >= 0))
    ends = [rho_max] if fd[-1] < 0 else []
    if fd[0] >= 0:
        ends.append(rho[0])
    if not len(cand):
        if not ends:
            raise NumericalError("no foot point on the branch")
        return min(ends, key=lambda r: abs(gamma_branch(c, mu, r) - 1j * v))

    def root(k):
        f = lambda r: _foot_derivative(c, mu, v, r)  # noqa: E731
        return brentq(f, rho[k], rho[k + 1], xtol=1e-16 * rho[k + 1], rtol=1e-15, maxiter=200)

    roots = [root(k) for k in cand] + ends
    return min(roots, key=lambda r: abs(gamma_branch(c, mu, r) - 1j * v))


def build_elementary_domain(c, mu, eps, max_iter=200):
    """Largest inscribed tangency circle C(iv, r) with v + r = eps.

    Bisection on the centre height v (monotone: v + dist(iv, gamma) grows
    with v); the inner solve locates the foot point on the right branch and
    the left touch point is its mirror image.
    """
    region = LypRegionSpec(eps, c, mu)
    rho_max = min(eps, 0.999 * (HALF_PI / c) ** (1.0 / mu))

    def excess(v):
        rho = _foot_point(c, mu, v, rho_max)
        r = abs(gamma_branch(c, mu, rho) - 1j * v)
        return v + r - eps, rho, r

    lo, hi = 0.0, eps
    history = []
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f, rho, r = excess(mid)
        history.append(f)
        if f > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * eps:
            break
    else:
        raise NumericalError("tangency bisection did not converge", residual=history)
    v = 0.5 * (lo + hi)
    f, rho, r = excess(v)
    if abs(f) > 1e-9 * eps:
        raise NumericalError("tangency solve left a residual", residual=f)
    w2 = complex(gamma_branch(c, mu, rho))
    w1 = -w2.conjugate()
    dom = ElementaryDomainSpec(region, float(v), float(r), (w1, w2))
    # the circle must lie locally below gamma near the touch point
    near = gamma_branch(c, mu, rho * np.linspace(0.8, min(1.2, rho_max / rho), 401))
    if np.min(np.abs(near - 1j * v)) < r * (1.0 - 1e-9):
        raise NumericalError("tangency circle crosses gamma near the touch point")
    return dom


# ---------------------------------------------------------------------------
# Isometries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Isometry:
    """Orientation-preserving isometry w -> exp(i*rotation) * w + translation."""

    rotation: float = 0.0
    translation: complex = 0j

    def __call__(self, z):
        if z is INF:
            return INF
        return np.exp(1j * self.rotation) * np.asarray(z) + self.translation

    def compose(self, other):
        """``self o other``."""
        return Isometry(
            self.rotation + other.rotation,
            np.exp(1j * self.rotation) * other.translation + self.translation,
        )

    def inverse(self):
        return Isometry(-self.rotation, -np.exp(-1j * self.rotation) * self.translation)


def apply_isometry(iso, z):
    return iso(z)


def make_T_b(b, beta):
    """T_b(w) = -i e^{i beta} w + b: 0 -> b, the direction i -> e^{i beta}."""
    return Isometry(beta - HALF_PI, complex(b))


def make_R_a(alpha):
    return Isometry(float(alpha), 0j)


# ---------------------------------------------------------------------------
# Constant estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantEstimates:
    l1: float
    b_arc: float
    l2: float
    mu: float
    samples: int = field(default=0)


def unit_tangents(curve):
    """Unit tangents by central differences in arc length (one-sided at the
    ends of open curves, periodic for closed ones)."""
    p, s = curve.points, curve.cum_length
    if len(p) < 3:
        raise DataError("need at least 3 points")
    if curve.closed:
        L = curve.length
        nxt = np.roll(p, -1)
        prv = np.roll(p, 1)
        ds = np.roll(s, -1) - np.roll(s, 1)
        ds[0] += L
        ds[-1] += L
        t = (nxt - prv) / ds
    else:
        t = np.empty_like(p)
        t[1:-1] = (p[2:] - p[:-2]) / (s[2:] - s[:-2])
        t[0] = (p[1] - p[0]) / (s[1] - s[0])
        t[-1] = (p[-1] - p[-2]) / (s[-1] - s[-2])
    mag = np.abs(t)
    if np.any(mag == 0.0):
        raise DataError("degenerate tangent (repeated points)")
    return t / mag


def _pair_max(values_fn, n, block=512):
    best = 0.0
    for i0 in range(0, n - 1, block):
        rows = values_fn(slice(i0, min(i0 + block, n - 1)))
        if rows.size:
            best = max(best, float(np.max(rows)))
    return best


def estimate_l1(curve, mu):
    """Sampled Lyapunov multiplicative constant: max |g'(t)-g'(s)| / |t-s|^mu.

    A lower bound of the supremum over the true curve.
    """
    if not 0.0 < mu < 1.0:
        raise ParameterDomainError("mu must lie in (0, 1)")
    tan = unit_tangents(curve)
    s = curve.cum_length
    n = len(s)
    idx = np.arange(n)

    def rows(sl):
        i = idx[sl][:, None]
        j = idx[None, :]
        dt = np.abs(tan[i] - tan[j])
        ds = s[j] - s[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(j > i, dt / np.where(ds > 0, ds, 1.0) ** mu, 0.0)
        return q

    return _pair_max(rows, n)


def arc_chord_ratio(curve, i, j):
    """min(arc_1, arc_2) / |z_i - z_j| for one pair of samples."""
    s, p = curve.cum_length, curve.points
    arc = abs(s[j] - s[i])
    if curve.closed:
        arc = min(arc, curve.length - arc)
    chord = abs(p[j] - p[i])
    if chord == 0.0:
        raise DataError("coincident sample points")
    return arc / chord


def estimate_arc_chord(curve):
    """Arc-chord constant: global for closed curves, at the first point for open ones."""
    p, s = curve.points, curve.cum_length
    n = len(p)
    if not curve.closed:
        chord = np.abs(p[1:] - p[0])
        if np.any(chord == 0.0):
            raise DataError("coincident sample points")
        return max(1.0, float(np.max(s[1:] / chord)))
    L = curve.length
    idx = np.arange(n)

    def rows(sl):
        i = idx[sl][:, None]
        j = idx[None, :]
        upper = j > i
        chord = np.abs(p[i] - p[j])
        if np.any(upper & (chord == 0.0)):
            raise DataError("coincident sample points")
        arc = np.abs(s[j] - s[i])
        arc = np.minimum(arc, L - arc)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(upper, arc / np.where(chord > 0, chord, 1.0), 0.0)

    return max(1.0, _pair_max(rows, n))


def second_constant(l1, b_arc, mu):
    """l2 = (pi/2) * l1 * b_arc^(1+mu)."""
    if l1 < 0 or b_arc < 1:
        raise ParameterDomainError("need l1 >= 0 and b_arc >= 1")
    return HALF_PI * l1 * b_arc ** (1.0 + mu)


def estimate_constants(curve, mu):
    l1 = estimate_l1(curve, mu)
    b = estimate_arc_chord(curve)
    return ConstantEstimates(l1, b, second_constant(l1, b, mu), mu, len(curve))


# ---------------------------------------------------------------------------
# Flat key-value specs
# ---------------------------------------------------------------------------


def parse_kv(text):
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"line {lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def region_from_kv(text):
    kv = parse_kv(text)
    kind = kv.get("kind", "lyp")
    if kind == "scaled":
        base = "\n".join(f"{k[5:]}={v}" for k, v in kv.items() if k.startswith("base_"))
        try:
            return ScaledRegion(region_from_kv(base), float(kv["factor"]))
        except KeyError as e:
            raise DataError(f"missing key {e.args[0]}") from None
    try:
        eps, c, mu = float(kv["eps"]), float(kv["c"]), float(kv["mu"])
    except KeyError as e:
        raise DataError(f"missing key {e.args[0]}") from None
    if kind == "lyp":
        return LypRegionSpec(eps, c, mu)
    if kind == "elementary":
        return build_elementary_domain(c, mu, eps)
    raise DataError(f"unknown region kind {kind!r}")
