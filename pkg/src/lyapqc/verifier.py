"""Sampled checks of inclusion, Hoelder, Harnack and co-Lipschitz type.

Every report is evidence from finite samples, never a proof: it records the
sample count, the worst margin and witness points, and serialises to CSV
(one row per sample) plus a flat key-value summary.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from .complexgeom import (
    ElementaryDomainSpec,
    Isometry,
    LypRegionSpec,
    SampledCurve,
    estimate_constants,
    make_T_b,
    unit_tangents,
)
from .errors import GeometryError, NumericalError, ParameterDomainError, PreconditionError
from .mapzoo import dilatation_arrays
from .qhyperbolic import mobius_A0
from .sampling import kronecker2d, make_rng, random_disk_points

LABEL = "sampled verification"


def _fmt(x):
    if isinstance(x, (complex, np.complexfloating)):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _csv(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _kv(verdict, min_margin, samples, constants, extra=None):
    consts = ";".join(f"{k}:{_fmt(v)}" for k, v in sorted(constants.items()))
    lines = [
        f"verdict={'pass' if verdict else 'fail'}",
        f"min_margin={_fmt(float(min_margin))}",
        f"samples={samples}",
        f"constants_used={consts}",
        f"label={LABEL}",
    ]
    for k, v in (extra or {}).items():
        lines.append(f"{k}={_fmt(v)}")
    return "\n".join(lines) + "\n"


@dataclass
class Report:
    """Generic check outcome; ``rows`` follow ``columns`` for CSV output."""

    check: str
    verdict: bool
    samples: int
    min_margin: float
    witnesses: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    columns: tuple = ()
    rows: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_csv(self):
        return _csv(self.columns, self.rows)

    def summary_kv(self):
        return _kv(self.verdict, self.min_margin, self.samples, self.constants, self.extra)


# ---------------------------------------------------------------------------
# Hoelder bounds at a boundary point and Mori's theorem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HolderCheckParams:
    K1: float
    l0: float
    base_points: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.K1 >= 1:
            raise ParameterDomainError("K1 must be >= 1")
        if not self.l0 > 0:
            raise ParameterDomainError("l0 must be positive")

    @property
    def alpha(self):
        return 1.0 / self.K1


def holder_constant_l0(alpha, k1):
    """l0 = 16 * 2^alpha / k1 from a lower Kellogg constant k1."""
    if not (0 < alpha <= 1 and k1 > 0):
        raise ParameterDomainError("need alpha in (0, 1] and k1 > 0")
    return 16.0 * 2.0**alpha / k1


def _default_base_points(hmap, n, seed):
    if hmap.domain_tag == "upper-half-plane":
        z = random_disk_points(2 * n, seed)
        z = np.where(z.imag > 0, z, np.conj(z))
        z = z[z.imag > 0][:n]
        return z
    r = 1.0 - max(hmap.boundary_margin, 0.0)
    return random_disk_points(n, seed, radius=r)


def check_holder_at_zero(hmap, params, n=4000, seed=0):
    """Tightest l0 with |h(z)| <= l0 |z|^(1/K1) on samples of |z| <= 1."""
    h0 = abs(complex(hmap.evaluate(np.array([0j]))[0])) if hmap.domain_tag != "upper-half-plane" else abs(
        complex(hmap.func(np.array([0j]))[0])
    )
    if not h0 < 1e-9:
        raise PreconditionError("map does not fix 0", witness=0j)
    z = params.base_points if params.base_points is not None else _default_base_points(hmap, n, seed)
    z = np.asarray(z, dtype=complex)
    z = z[(z != 0) & (np.abs(z) <= 1.0)]
    ratio = np.abs(hmap.evaluate(z)) / np.abs(z) ** params.alpha
    tight = float(np.max(ratio))
    half = float(np.max(ratio[: len(ratio) // 2]))
    stable = math.isfinite(tight) and abs(tight - half) <= 1e-2 * tight
    bad = ratio > params.l0 * (1 + 1e-12)
    return Report(
        "holder_at_zero",
        bool(not np.any(bad)),
        len(z),
        float(np.min(params.l0 - ratio)),
        [complex(w) for w in z[bad]],
        {"K1": params.K1, "alpha": params.alpha, "l0": params.l0},
        ("re", "im", "ratio"),
        [(p.real, p.imag, r) for p, r in zip(z, ratio)],
        {"tightest_l0": tight, "tightest_l0_half": half, "stable": stable, "rel_tolerance": 1e-12},
    )


def check_mori(hmap, K, n_pairs=10_000, seed=0, constant=16.0):
    """|f(z1) - f(z2)| <= 16 |z1 - z2|^(1/K) over random pairs in the disk."""
    r = 1.0 - max(hmap.boundary_margin, 0.0)
    z1 = random_disk_points(n_pairs, seed, radius=r)
    z2 = random_disk_points(n_pairs, seed + 1, radius=r)
    keep = z1 != z2
    z1, z2 = z1[keep], z2[keep]
    ratio = np.abs(hmap.evaluate(z1) - hmap.evaluate(z2)) / np.abs(z1 - z2) ** (1.0 / K)
    bad = ratio > constant
    return Report(
        "mori",
        bool(not np.any(bad)),
        len(z1),
        float(constant - np.max(ratio)),
        [(complex(a), complex(b)) for a, b in zip(z1[bad], z2[bad])],
        {"K": K, "constant": constant},
        ("z1_re", "z1_im", "z2_re", "z2_im", "ratio"),
        [(a.real, a.imag, b.real, b.imag, q) for a, b, q in zip(z1, z2, ratio)],
        {"max_ratio": float(np.max(ratio))},
    )


# ---------------------------------------------------------------------------
# Boundary argument bound
# ---------------------------------------------------------------------------


def check_boundary_arg_bound(boundary, mu, eps, c=None, tol=1e-9, angle_tol=1e-3):
    """|arg w| < c|w|^mu or |pi - arg w| < c|w|^mu for boundary samples with |w| < eps.

    With ``c=None`` the opening constant is l2 from the estimated l1 and
    arc-chord constant of ``boundary``.
    """
    if not isinstance(boundary, SampledCurve):
        raise ParameterDomainError("boundary must be a SampledCurve")
    p = boundary.points
    i0 = int(np.argmin(np.abs(p)))
    if abs(p[i0]) > tol:
        raise PreconditionError("boundary does not pass through 0", witness=complex(p[i0]))
    t0 = unit_tangents(boundary)[i0]
    if abs(np.angle(t0)) > angle_tol:
        raise PreconditionError("tangent at 0 is not horizontal with inner normal up", witness=complex(t0))
    consts = {}
    if c is None:
        est = estimate_constants(boundary, mu)
        c = est.l2
        consts.update(l1=est.l1, b_arc=est.b_arc, l2=est.l2)
    consts.update(c=c, mu=mu, eps=eps)
    r = np.abs(p)
    sel = (r < eps) & (r > tol)
    w = p[sel]
    rho = r[sel]
    bound = c * rho**mu
    margin = np.maximum(bound - np.abs(np.angle(w)), bound - np.abs(np.angle(-w)))
    bad = margin <= 0
    return Report(
        "boundary_arg_bound",
        bool(len(w) and not np.any(bad)),
        len(w),
        float(np.min(margin)) if len(w) else math.nan,
        [complex(x) for x in w[bad]],
        consts,
        ("re", "im", "arg", "bound", "margin"),
        [(x.real, x.imag, np.angle(x), b, m) for x, b, m in zip(w, bound, margin)],
    )


# ---------------------------------------------------------------------------
# Region inclusions
# ---------------------------------------------------------------------------


def transform_region_params(eps, c, mu, K1, l0, c1):
    """H0 = Lyp((eps/l0)^K1, c1, mu/K1^2); ``c1`` must come from an explicit policy."""
    for name, v in (("eps", eps), ("c", c), ("l0", l0), ("c1", c1)):
        if not v > 0:
            raise ParameterDomainError(f"{name} must be positive")
    if not K1 >= 1:
        raise ParameterDomainError("K1 must be >= 1")
    LypRegionSpec(eps, c, mu)
    return LypRegionSpec((eps / l0) ** K1, c1, mu / K1**2)


@dataclass
class InclusionReport:
    samples_tested: int
    violations: list
    min_margin: float
    which: str = "forward"
    constants: dict = field(default_factory=dict)
    points: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    images: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    margins: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tags: list = field(default_factory=list)
    tolerance: float = 0.0
    indeterminate: int = 0

    @property
    def verdict(self):
        return not self.violations

    @property
    def witnesses(self):
        return [v[0] for v in self.violations]

    def to_csv(self):
        tags = self.tags or [self.which] * len(self.points)
        rows = [
            (i, t, p.real, p.imag, q.real, q.imag, m, int(m > 0))
            for i, (t, p, q, m) in enumerate(zip(tags, self.points, self.images, self.margins))
        ]
        return _csv(("index", "which", "re", "im", "img_re", "img_im", "margin", "inside"), rows)

    def summary_kv(self):
        extra = {"violations": len(self.violations), "indeterminate": self.indeterminate, "tolerance": self.tolerance}
        return _kv(self.verdict, self.min_margin, self.samples_tested, self.constants, extra)


def merge_reports(reports, constants=None):
    """Concatenate inclusion reports (e.g. both halves of a sandwich)."""
    tags = []
    for r in reports:
        tags.extend(r.tags or [r.which] * len(r.points))
    return InclusionReport(
        sum(r.samples_tested for r in reports),
        [v for r in reports for v in r.violations],
        min(r.min_margin for r in reports),
        "+".join(r.which for r in reports),
        constants or {k: v for r in reports for k, v in r.constants.items()},
        np.concatenate([r.points for r in reports]),
        np.concatenate([r.images for r in reports]),
        np.concatenate([r.margins for r in reports]),
        tags,
        max(r.tolerance for r in reports),
        sum(r.indeterminate for r in reports),
    )


def _inclusion(points, images, margins, which, constants, tol=0.0):
    """Violations have margin <= -tol; margins in (-tol, 0] are within the
    discretisation error of a boundary polygon and only counted."""
    bad = margins <= -tol if tol > 0 else margins <= 0
    unsure = int(np.sum((margins <= 0) & ~bad))
    viol = [(complex(q), which, float(m)) for q, m in zip(images[bad], margins[bad])]
    mm = float(np.min(margins)) if len(margins) else math.nan
    return InclusionReport(len(points), viol, mm, which, constants, points, images, margins, [], tol, unsure)


def image_polygon(mapfn, source, boundary_n):
    """Mapped boundary polygon and its discretisation error, measured as the
    largest distance from the image of a twice finer boundary sampling."""
    poly = np.asarray(mapfn(source.boundary(boundary_n)))
    check_boundary_injective(poly)
    fine = np.asarray(mapfn(source.boundary(2 * boundary_n)))
    return poly, float(np.max(distance_to_polyline(poly, fine)))


def _polygon_margins(poly, q):
    wn = winding_numbers(poly, q)
    if np.any(np.abs(wn) > 1):
        raise GeometryError("boundary image winds more than once")
    dist = distance_to_polyline(poly, q)
    return np.where(wn != 0, dist, -dist)


def check_inclusion_forward(hmap, source, target, n=10_000, seed=0, constants=None):
    """h(source) inside target, tested on ``n`` quasi-uniform source samples."""
    pts = source.sample(n, seed)
    if not np.all(hmap.in_domain(pts)):
        raise PreconditionError("source samples leave the map's domain", witness=complex(pts[~hmap.in_domain(pts)][0]))
    img = np.asarray(hmap.evaluate(pts))
    margins = np.where(target.contains(img), target.margin(img), np.minimum(target.margin(img), 0.0))
    return _inclusion(pts, img, margins, "forward", constants or {})


def winding_numbers(polygon, q, block=256):
    """Winding number of the closed polyline around each query point."""
    poly = np.asarray(polygon, dtype=complex)
    nxt = np.roll(poly, -1)
    q = np.asarray(q, dtype=complex).ravel()
    out = np.empty(len(q))
    for i in range(0, len(q), block):
        qq = q[i : i + block, None]
        # a query on a vertex contributes nothing; callers treat it via distance
        with np.errstate(divide="ignore", invalid="ignore"):
            out[i : i + block] = np.nansum(np.angle((nxt - qq) / (poly - qq)), axis=1) / (2 * math.pi)
    return np.rint(out).astype(int)


def distance_to_polyline(polygon, q, block=256):
    poly = np.asarray(polygon, dtype=complex)
    a, b = poly, np.roll(poly, -1)
    d = b - a
    dd = np.maximum(np.abs(d) ** 2, 1e-300)
    q = np.asarray(q, dtype=complex).ravel()
    out = np.empty(len(q))
    for i in range(0, len(q), block):
        qq = q[i : i + block, None]
        t = np.clip(np.real((qq - a) * np.conj(d)) / dd, 0.0, 1.0)
        out[i : i + block] = np.min(np.abs(qq - (a + t * d)), axis=1)
    return out


def check_boundary_injective(image):
    """Nearest-neighbour collision test on a closed boundary image."""
    img = np.asarray(image, dtype=complex)
    k = len(img)
    seg = np.abs(np.roll(img, -1) - img)
    local = np.minimum(seg, np.roll(seg, 1))
    tree = cKDTree(np.column_stack((img.real, img.imag)))
    dist, idx = tree.query(np.column_stack((img.real, img.imag)), k=min(5, k))
    for i in range(k):
        for dj, j in zip(dist[i, 1:], idx[i, 1:]):
            gap = min((i - j) % k, (j - i) % k)
            if gap > 2 and dj < 0.5 * min(local[i], local[j]):
                raise GeometryError(f"boundary image is not injective near {img[i]!r}")


def check_inclusion_reverse(hmap, source, inner, n=10_000, seed=0, boundary_n=4000, constants=None):
    """inner inside h(source): winding number of the mapped source boundary."""
    poly, tau = image_polygon(hmap.evaluate, source, boundary_n)
    q = inner.sample(n, seed)
    return _inclusion(q, q, _polygon_margins(poly, q), "reverse", constants or {}, tau)


def derive_c1(hmap, eps, c, mu, K1, l0, target=None, c1_start=None, n=10_000, seed=0, max_doublings=40):
    """Smallest c1 in the doubling sequence c1_start * 2^k passing the forward check."""
    target = target or LypRegionSpec(eps, c, mu)
    c1 = c1_start or c
    for _ in range(max_doublings):
        try:
            h0 = transform_region_params(eps, c, mu, K1, l0, c1)
        except ParameterDomainError as exc:
            raise NumericalError(f"c1 doubling left the admissible range at c1={c1}") from exc
        rep = check_inclusion_forward(hmap, h0, target, n, seed, {"c1": c1, "l0": l0, "K1": K1})
        if rep.verdict:
            return h0, c1, rep
        c1 *= 2.0
    raise NumericalError("no c1 found by doubling", residual=c1)


# ---------------------------------------------------------------------------
# Sandwich of a map's image between local model regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionTriple:
    """inner (local) subset h(R_a(A0(source))) subset outer (local), in T_b coordinates.

    The nesting inner subset outer is checked on samples at construction
    unless ``verify`` is off (the factory checks it once for all a).
    """

    inner: object
    source: ElementaryDomainSpec
    outer: object
    anchor: complex = 0j
    isometry: Isometry = Isometry()
    verify: bool = True

    def __post_init__(self):
        if not self.verify:
            return
        pts = self.inner.sample(2000, seed=11)
        ok = self.outer.contains(pts)
        if not np.all(ok):
            raise GeometryError(f"inner region is not inside outer region (at {pts[~ok][0]!r})")


def triple_factory(source, inner, outer):
    """Per-a factory using the same local regions at every boundary point."""
    RegionTriple(inner, source, outer)

    def make(a, b, iso):
        return RegionTriple(inner, source, outer, b, iso, verify=False)

    return make


def estimate_inner_normal(hmap, a, radius, step=1e-3):
    """Inner normal at b = h(radius * a) from a quadratic fit through 5 boundary samples."""
    k = np.arange(-2, 3)
    tau = k * step
    w = np.asarray(hmap.evaluate(radius * a * np.exp(1j * tau)))
    cr = np.polyfit(tau, w.real, 2)
    ci = np.polyfit(tau, w.imag, 2)
    tangent = complex(cr[1], ci[1])
    scale = np.max(np.abs(w - w[2]))
    if not abs(tangent) * step > 1e-12 * max(scale, 1e-300) or abs(tangent) == 0:
        raise GeometryError(f"degenerate boundary tangent at a={a!r}")
    return 1j * tangent / abs(tangent)


def check_triple(hmap, a_samples, factory, n=2000, seed=0, boundary_n=2000, delta=None):
    """For each a on the circle: T_b^-1 h(a A0(H^1)) sandwiched between inner and outer.

    ``factory(a, b, iso)`` returns the RegionTriple; b = h((1 - delta) a) and
    T_b comes from the estimated inner normal at b.
    """
    if hmap.domain_tag != "unit-disk":
        raise ParameterDomainError("check_triple needs a map on the unit disk")
    delta = max(hmap.boundary_margin, 0.0) if delta is None else delta
    rad = 1.0 - delta
    reports = []
    for a in np.asarray(a_samples, dtype=complex):
        a = a / abs(a)
        b = complex(hmap.evaluate(np.array([rad * a]))[0])
        nb = estimate_inner_normal(hmap, a, rad)
        iso = make_T_b(b, float(np.angle(nb)))
        tri = factory(a, b, iso)
        inv = tri.isometry.inverse()

        def local(z):
            u = a * mobius_A0(z)
            u = u * np.minimum(1.0, rad / np.maximum(np.abs(u), 1e-300))
            return inv(np.asarray(hmap.evaluate(u)))

        src = tri.source.sample(n, seed)
        img = local(src)
        om = tri.outer.margin(img)
        om = np.where(tri.outer.contains(img), om, np.minimum(om, 0.0))
        outer_rep = _inclusion(src, img, om, "outer", {})
        poly, tau = image_polygon(local, tri.source, boundary_n)
        q = tri.inner.sample(n, seed)
        inner_rep = _inclusion(q, q, _polygon_margins(poly, q), "inner", {}, tau)
        x0 = complex(mobius_A0(0.5j * tri.source.region.eps))
        rep = merge_reports(
            [outer_rep, inner_rep],
            {"a": complex(a), "b": b, "normal": complex(nb), "x0": x0, "delta": delta},
        )
        rep.which = "triple"
        reports.append(rep)
    return reports


def aggregate(reports):
    """Worst margin and total violations over a list of reports."""
    return {
        "verdict": all(r.verdict for r in reports),
        "min_margin": min(r.min_margin for r in reports),
        "violations": sum(len(r.violations) for r in reports),
        "samples": sum(r.samples_tested for r in reports),
    }


# ---------------------------------------------------------------------------
# Harnack-type lower bound
# ---------------------------------------------------------------------------


def check_harnack_lower(hmap, b, normal, R0, grid=None, n=1000, seed=0, boundary_n=2048, tol=1e-12):
    """u(z) = Re((h(z) - b) conj(n)) >= (1 - |z|) R0 / 2 on an interior grid."""
    if hmap.domain_tag != "unit-disk":
        raise ParameterDomainError("Harnack check needs a map on the unit disk")
    n_dir = complex(normal) / abs(normal)
    rad = 1.0 - max(hmap.boundary_margin, 0.0)
    if grid is None:
        grid = random_disk_points(n, seed, radius=rad)
    grid = np.asarray(grid, dtype=complex)
    ring = rad * np.exp(2j * math.pi * np.arange(boundary_n) / boundary_n)
    probe = np.concatenate((grid, ring))
    u_probe = np.real((np.asarray(hmap.evaluate(probe)) - b) * np.conj(n_dir))
    if np.any(u_probe < -tol):
        i = int(np.argmin(u_probe))
        raise PreconditionError("image leaves the half-plane at b", witness=complex(probe[i]))
    h0 = complex(hmap.evaluate(np.array([0j]))[0])
    ring_img = np.asarray(hmap.evaluate(ring))
    ball_ok = bool(np.min(np.abs(ring_img - h0)) >= R0 * (1 - 1e-9))
    u = u_probe[: len(grid)]
    rhs = (1.0 - np.abs(grid)) * R0 / 2.0
    margin = u - rhs
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, u / rhs, np.inf)
    bad = margin < 0
    return Report(
        "harnack_lower",
        bool(not np.any(bad)),
        len(grid),
        float(np.min(margin)),
        [complex(z) for z in grid[bad]],
        {"b": complex(b), "normal": n_dir, "R0": R0, "c_n": 0.5},
        ("re", "im", "u", "rhs", "ratio"),
        [(z.real, z.imag, a, r, q) for z, a, r, q in zip(grid, u, rhs, ratio)],
        {"min_ratio": float(np.min(ratio)), "ball_inside": ball_ok},
    )


def estimate_R0(hmap, boundary_n=4096):
    """Distance from h(0) to the sampled boundary image."""
    rad = 1.0 - max(hmap.boundary_margin, 0.0)
    ring = rad * np.exp(2j * math.pi * np.arange(boundary_n) / boundary_n)
    h0 = complex(hmap.evaluate(np.array([0j]))[0])
    return float(np.min(np.abs(np.asarray(hmap.evaluate(ring)) - h0)))


# ---------------------------------------------------------------------------
# Distance to a power graph
# ---------------------------------------------------------------------------


def lemma_eps0(c, mu):
    """Positive root of c^2 (1 + mu) x^(2 mu) = 1."""
    if not (c > 0 and 0 < mu < 1):
        raise ParameterDomainError("need c > 0 and mu in (0, 1)")
    return (c * c * (1.0 + mu)) ** (-1.0 / (2.0 * mu))


def graph_distance(c, mu, d, grid_n=10**6):
    """dist((0, d), {y = c|x|^(1+mu)}) by grid search on [0, d] and bounded refinement."""
    x = np.linspace(0.0, d, grid_n)
    f = x * x + (d - c * x ** (1.0 + mu)) ** 2
    i = int(np.argmin(f))
    lo, hi = x[max(i - 1, 0)], x[min(i + 1, grid_n - 1)]

    def obj(t):
        return t * t + (d - c * t ** (1.0 + mu)) ** 2

    res = minimize_scalar(obj, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14 * max(d, 1e-300)})
    if not res.success:
        raise NumericalError("distance minimisation failed", residual=res.fun)
    x1 = float(res.x) if res.fun <= f[i] else float(x[i])
    return math.sqrt(min(res.fun, f[i])), x1


def check_lemma_distance(c, mu, d, grid_n=10**6):
    """d <= 2 d' for d <= C(eps0), with d' the distance from (0, d) to the graph."""
    if not d > 0:
        raise ParameterDomainError("d must be positive")
    e0 = lemma_eps0(c, mu)
    C = c * e0 ** (1.0 + mu)
    dp, x1 = graph_distance(c, mu, d, grid_n)
    d_stat = x1 ** (1.0 - mu) * (1.0 + c * c * (1.0 + mu) * x1 ** (2.0 * mu)) / (c * (1.0 + mu)) if x1 > 0 else math.nan
    applicable = d <= C
    holds = d <= 2.0 * dp
    return Report(
        "lemma_distance",
        bool(holds or not applicable),
        1,
        2.0 * dp - d,
        [] if holds or not applicable else [complex(0, d)],
        {"c": c, "mu": mu, "eps0": e0, "C_eps0": C},
        ("d", "d_prime", "x1", "d_stationary", "applicable", "holds"),
        [(d, dp, x1, d_stat, int(applicable), int(holds))],
        {"eps0": e0, "C_eps0": C, "d_prime": dp, "x1": x1, "stationarity_residual": abs(d_stat - d) / d},
    )


def lemma_sweep(n_pairs=100, n_d=10, seed=0, grid_n=20_000):
    """Random (c, mu) in [0.1, 5] x [0.1, 0.9], d swept over (0, C(eps0)]."""
    g = make_rng(seed)
    cs = g.uniform(0.1, 5.0, n_pairs)
    mus = g.uniform(0.1, 0.9, n_pairs)
    rows, bad = [], []
    worst = math.inf
    for c, mu in zip(cs, mus):
        C = c * lemma_eps0(c, mu) ** (1.0 + mu)
        for frac in np.geomspace(1e-4, 1.0, n_d):
            r = check_lemma_distance(c, mu, C * frac, grid_n)
            rows.extend((c, mu) + row for row in r.rows)
            worst = min(worst, r.min_margin / (C * frac))
            if not r.verdict:
                bad.append((c, mu, C * frac))
    return Report(
        "lemma_sweep",
        not bad,
        len(rows),
        worst,
        bad,
        {"seed": seed, "grid_n": grid_n},
        ("c", "mu", "d", "d_prime", "x1", "d_stationary", "applicable", "holds"),
        rows,
    )


# ---------------------------------------------------------------------------
# Co-Lipschitz scans
# ---------------------------------------------------------------------------


@dataclass
class CoLipReport:
    grid: str
    min_lambda: float
    argmin: complex
    boundary_margin: float
    samples: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    lambdas: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def verdict(self):
        return self.min_lambda > 0

    def to_csv(self):
        return _csv(("re", "im", "lambda"), [(z.real, z.imag, l) for z, l in zip(self.samples, self.lambdas)])

    def summary_kv(self):
        return _kv(self.verdict, self.min_lambda, len(self.samples), {"grid": self.grid},
                   {"argmin": self.argmin, "boundary_margin": self.boundary_margin})


def shell_grid(radius, n=512, upper_half=False):
    if upper_half:
        t = math.pi * (np.arange(n) + 0.5) / n
    else:
        t = 2.0 * math.pi * np.arange(n) / n
    return radius * np.exp(1j * t)


def colip_scan(hmap, grid, description="grid", boundary_margin=math.nan, mode="auto"):
    grid = np.asarray(grid, dtype=complex).ravel()
    lam, _, _ = dilatation_arrays(hmap, grid, mode)
    i = int(np.argmin(lam))
    return CoLipReport(description, float(lam[i]), complex(grid[i]), boundary_margin, grid, lam)


@dataclass
class TrendReport:
    levels: list
    reports: list
    expect: str
    ratios: list
    per_decade: list
    verdict: bool

    @property
    def min_lambdas(self):
        return [r.min_lambda for r in self.reports]

    def to_csv(self):
        rows = [(lv, r.min_lambda, r.argmin.real, r.argmin.imag) for lv, r in zip(self.levels, self.reports)]
        return _csv(("level", "min_lambda", "argmin_re", "argmin_im"), rows)

    def summary_kv(self):
        m = min(self.min_lambdas)
        return _kv(self.verdict, m, sum(len(r.samples) for r in self.reports), {"expect": self.expect},
                   {"ratios": ";".join(_fmt(x) for x in self.ratios)})


def colip_trend(hmap, levels, grid_for_level, expect="flat", decay_ratio=0.5, flat_ratio=0.5):
    """Min lambda across a family of grids.

    ``expect='flat'``: every level positive and each consecutive ratio >= flat_ratio.
    ``expect='decay'``: strictly decreasing with ratio per decade of level < decay_ratio.
    """
    reports = [colip_scan(hmap, grid_for_level(lv), f"level={lv!r}", lv) for lv in levels]
    m = [r.min_lambda for r in reports]
    ratios = [m[i + 1] / m[i] for i in range(len(m) - 1)]
    per_dec = []
    for i in range(len(m) - 1):
        dec = abs(math.log10(levels[i] / levels[i + 1]))
        per_dec.append(ratios[i] ** (1.0 / dec) if dec > 0 else math.nan)
    if expect == "flat":
        ok = all(x > 0 for x in m) and all(r >= flat_ratio for r in ratios)
    elif expect == "decay":
        ok = all(m[i + 1] < m[i] for i in range(len(m) - 1)) and all(r < decay_ratio for r in per_dec)
    else:
        raise ParameterDomainError("expect must be 'flat' or 'decay'")
    return TrendReport(list(levels), reports, expect, ratios, per_dec, bool(ok))


def s2_scan(hmap, grid, image_boundary):
    """Ratio d(z) Lambda_h(z) / d_h(z); one positive lower constant per map."""
    grid = np.asarray(grid, dtype=complex).ravel()
    _, Lam, _ = dilatation_arrays(hmap, grid)
    d = np.asarray(hmap.dist_to_boundary(grid)) + max(hmap.boundary_margin, 0.0)
    bnd = np.asarray(image_boundary, dtype=complex)
    tree = cKDTree(np.column_stack((bnd.real, bnd.imag)))
    img = np.asarray(hmap.evaluate(grid))
    dh, _ = tree.query(np.column_stack((img.real, img.imag)))
    ratio = d * Lam / dh
    lo = float(np.min(ratio))
    return Report(
        "s2_ratio",
        bool(lo > 0 and np.all(np.isfinite(ratio))),
        len(grid),
        lo,
        [],
        {"boundary_samples": len(bnd)},
        ("re", "im", "d", "Lambda", "d_h", "ratio"),
        [(z.real, z.imag, a, b, c, r) for z, a, b, c, r in zip(grid, d, Lam, dh, ratio)],
        {"min_ratio": lo, "max_ratio": float(np.max(ratio))},
    )
