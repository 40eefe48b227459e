"""Evaluable planar maps with Wirtinger derivatives and dilatation scans."""

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import CompositionError, DataError, DomainError, NumericalError, ParameterDomainError
from .qhyperbolic import mobius_A0, mobius_A0_inv

DOMAIN_TAGS = ("unit-disk", "upper-half-plane", "plane", "other")


class DegeneracyWarning(UserWarning):
    """Raised (as a warning) when a sampled Jacobian is not positive."""


def _default_domain(tag):
    if tag == "unit-disk":
        return lambda z: np.abs(z) < 1.0
    if tag == "upper-half-plane":
        return lambda z: np.imag(z) > 0.0
    return lambda z: np.isfinite(z)


def _default_distance(tag):
    if tag == "unit-disk":
        return lambda z: 1.0 - np.abs(z)
    if tag == "upper-half-plane":
        return lambda z: np.imag(z)
    # plane: distance to the normalisation point 0, where model maps are singular
    return lambda z: np.abs(z)


@dataclass(frozen=True, eq=False)
class MapHandle:
    """A planar map ``func`` with optional analytic Wirtinger derivatives.

    ``derivs(z)`` returns ``(h_z, h_zbar)``.  When absent, centred finite
    differences are used with step ``max(1e-6, 1e-3 d)`` clamped to ``d/2``,
    where ``d`` is the distance to the domain boundary.
    """

    func: Callable
    derivs: Optional[Callable] = None
    domain_tag: str = "plane"
    declared_K: Optional[float] = None
    name: str = "map"
    domain: Optional[Callable] = None
    boundary_distance: Optional[Callable] = None
    strict: bool = False
    boundary_margin: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.domain_tag not in DOMAIN_TAGS:
            raise ParameterDomainError(f"unknown domain tag {self.domain_tag!r}")
        if self.declared_K is not None and self.declared_K < 1:
            raise ParameterDomainError("declared_K must be >= 1")

    def in_domain(self, z):
        pred = self.domain or _default_domain(self.domain_tag)
        return pred(np.asarray(z, dtype=complex))

    def dist_to_boundary(self, z):
        fn = self.boundary_distance or _default_distance(self.domain_tag)
        return fn(np.asarray(z, dtype=complex))

    def __call__(self, z):
        return self.evaluate(z)

    def evaluate(self, z):
        z = np.asarray(z, dtype=complex)
        if self.strict and not np.all(self.in_domain(z)):
            bad = z.ravel()[~np.asarray(self.in_domain(z)).ravel()][0]
            raise DomainError(f"{self.name}: point {bad!r} outside the evaluation domain")
        out = self.func(z)
        return out if np.ndim(out) else complex(out)

    def fd_step(self, z):
        d = self.dist_to_boundary(z)
        d = np.where(np.isfinite(d), d, 1.0)
        return np.minimum(np.maximum(1e-6, 1e-3 * d), 0.5 * d)

    def wirtinger_fd(self, z, step=None):
        z = np.asarray(z, dtype=complex)
        h = self.fd_step(z) if step is None else np.broadcast_to(np.asarray(step, dtype=float), z.shape)
        hx = (self.func(z + h) - self.func(z - h)) / (2 * h)
        hy = (self.func(z + 1j * h) - self.func(z - 1j * h)) / (2 * h)
        return 0.5 * (hx - 1j * hy), 0.5 * (hx + 1j * hy)

    def wirtinger(self, z, mode="auto"):
        """(h_z, h_zbar) at z; mode is 'auto', 'analytic' or 'fd'."""
        z = np.asarray(z, dtype=complex)
        if mode == "fd" or (mode == "auto" and self.derivs is None):
            return self.wirtinger_fd(z)
        if self.derivs is None:
            raise ParameterDomainError(f"{self.name} has no analytic derivatives")
        dz, dzb = self.derivs(z)
        return np.broadcast_to(dz, z.shape).astype(complex), np.broadcast_to(dzb, z.shape).astype(complex)

    def restrict(self, domain_tag, **kw):
        """Same formula, declared on another domain (e.g. the disk or H)."""
        return replace(self, domain_tag=domain_tag, domain=None, boundary_distance=None, **kw)


# ---------------------------------------------------------------------------
# Model maps
# ---------------------------------------------------------------------------


def identity_map(domain_tag="plane"):
    return MapHandle(
        func=lambda z: np.asarray(z, dtype=complex) + 0j,
        derivs=lambda z: (np.ones_like(z), np.zeros_like(z)),
        domain_tag=domain_tag,
        declared_K=1.0,
        name="identity",
    )


def make_mobius(a, b, c, d, domain_tag="plane", name="mobius"):
    det = a * d - b * c
    if det == 0:
        raise ParameterDomainError("degenerate Moebius coefficients")
    return MapHandle(
        func=lambda z: (a * z + b) / (c * z + d),
        derivs=lambda z: (det / (c * z + d) ** 2, np.zeros_like(z)),
        domain_tag=domain_tag,
        declared_K=1.0,
        name=name,
    )


def make_disk_automorphism(a):
    """z -> (z - a) / (1 - conj(a) z)."""
    if abs(a) >= 1:
        raise ParameterDomainError("|a| must be < 1")
    return make_mobius(1.0, -a, -np.conj(a), 1.0, "unit-disk", name=f"disk-automorphism({a})")


def make_A0_map():
    return MapHandle(
        func=mobius_A0,
        derivs=lambda z: (-8j / (4j + z) ** 2, np.zeros_like(z)),
        domain_tag="upper-half-plane",
        declared_K=1.0,
        name="A0",
    )


def make_A0_inv_map():
    return MapHandle(
        func=mobius_A0_inv,
        derivs=lambda w: (-8j / (1 + w) ** 2, np.zeros_like(w)),
        domain_tag="unit-disk",
        declared_K=1.0,
        name="A0_inv",
    )


def make_radial_stretch(K):
    """f(z) = z |z|^(1/K - 1), a K-qc map of the plane fixing 0 and infinity."""
    if not K >= 1:
        raise ParameterDomainError("K must be >= 1")
    a = 1.0 / K

    def func(z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = z * np.where(r > 0, r, 1.0) ** (a - 1.0)
        return np.where(r > 0, out, 0j)

    def derivs(z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = r ** (a - 1.0)
            return 0.5 * (a + 1.0) * s + 0j, 0.5 * (a - 1.0) * s * z / np.conj(z)

    return MapHandle(func, derivs, "plane", float(K), name=f"radial-stretch(K={K})")


def make_angular_stretch(psi, dpsi=None, grid_n=4096):
    """f(r e^{it}) = r e^{i psi(t)} for an increasing lift psi with psi(t+2pi) = psi(t)+2pi."""
    t = 2.0 * math.pi * np.arange(grid_n) / grid_n
    vals = np.asarray(psi(np.append(t, 2.0 * math.pi)), dtype=float)
    if np.any(np.diff(vals) <= 0.0):
        raise DataError("psi must be strictly increasing")
    if abs(vals[-1] - vals[0] - 2.0 * math.pi) > 1e-8:
        raise DataError("psi must advance by 2*pi over one period")
    if dpsi is None:
        h = 1e-6
        d = (np.asarray(psi(t + h)) - np.asarray(psi(t - h))) / (2 * h)
    else:
        d = np.asarray(dpsi(t), dtype=float)
    if np.any(d <= 0.0):
        raise DataError("psi' must be positive")
    K = float(np.max(np.maximum(d, 1.0 / d)))

    def func(z):
        z = np.asarray(z, dtype=complex)
        return np.abs(z) * np.exp(1j * np.asarray(psi(np.angle(z))))

    derivs = None
    if dpsi is not None:

        def derivs(z):
            z = np.asarray(z, dtype=complex)
            th = np.angle(z)
            ps = np.asarray(psi(th))
            dp = np.asarray(dpsi(th))
            return 0.5 * np.exp(1j * (ps - th)) * (1 + dp), 0.5 * np.exp(1j * (ps + th)) * (1 - dp)

    return MapHandle(func, derivs, "plane", K, name="angular-stretch")


def make_log_quotient(r_max=0.2):
    """A(z) = z / ln(1/z) on {|z| < r_max, Im z > 0} (principal logarithm)."""

    def func(z):
        return -z / np.log(z)

    def derivs(z):
        L = np.log(z)
        return -1.0 / L + 1.0 / L**2, np.zeros_like(z)

    return MapHandle(
        func,
        derivs,
        "other",
        None,
        name="log-quotient",
        domain=lambda z: (np.abs(z) < r_max) & (np.imag(z) > 0) & (z != 0),
        boundary_distance=lambda z: np.minimum.reduce([np.imag(z), r_max - np.abs(z), np.abs(z)]),
        strict=True,
    )


# ---------------------------------------------------------------------------
# Boundary functions and harmonic extension
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """Periodic map t -> C sampled at t_k = 2 pi k / M."""

    values: np.ndarray
    interpolation: str = "trig"
    homeomorphism: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", v)
        if self.interpolation not in ("trig", "linear"):
            raise ParameterDomainError("interpolation must be 'trig' or 'linear'")
        if len(v) < 8:
            raise DataError("need at least 8 boundary samples")
        if self.homeomorphism:
            if np.any(v == 0):
                raise DataError("homeomorphism samples must avoid 0")
            a = np.unwrap(np.angle(np.append(v, v[0])))
            if np.any(np.diff(a) <= 0) or abs(a[-1] - a[0] - 2 * math.pi) > 1e-6:
                raise DataError("argument of a homeomorphism must increase by 2*pi")

    @classmethod
    def from_callable(cls, fn, m, interpolation="trig", homeomorphism=False):
        t = 2.0 * math.pi * np.arange(m) / m
        return cls(np.asarray(fn(t), dtype=complex), interpolation, homeomorphism)

    @property
    def nodes(self):
        m = len(self.values)
        return 2.0 * math.pi * np.arange(m) / m

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        v = self.values
        m = len(v)
        if self.interpolation == "linear":
            tt = np.append(self.nodes, 2 * math.pi)
            vv = np.append(v, v[0])
            tm = np.mod(t, 2 * math.pi)
            return np.interp(tm, tt, vv.real) + 1j * np.interp(tm, tt, vv.imag)
        return trig_eval(np.fft.fft(v) / m, t)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "re", "im"])
        for t, z in zip(self.nodes, self.values):
            w.writerow([f"{t:.17g}", f"{z.real:.17g}", f"{z.imag:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, interpolation="trig", homeomorphism=False):
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows or [h.strip() for h in rows[0]] != ["t", "re", "im"]:
            raise DataError("boundary CSV must start with header t,re,im")
        data = np.array([[float(x) for x in r] for r in rows[1:]])
        m = len(data)
        if m < 8:
            raise DataError("need at least 8 boundary samples")
        expect = 2.0 * math.pi * np.arange(m) / m
        if np.max(np.abs(data[:, 0] - expect)) > 1e-9:
            raise DataError("boundary CSV requires uniform t = 2*pi*k/M")
        return cls(data[:, 1] + 1j * data[:, 2], interpolation, homeomorphism)


def trig_eval(coef, t, block=512):
    """Evaluate the trigonometric interpolant with DFT coefficients ``coef``."""
    m = len(coef)
    k = np.fft.fftfreq(m, 1.0 / m)
    c = coef.copy()
    if m % 2 == 0:
        # split the Nyquist term symmetrically
        c = np.append(c, c[m // 2] / 2)
        c[m // 2] /= 2
        k = np.append(k, m // 2)
        k[m // 2] = -m // 2
    t = np.asarray(t, dtype=float)
    flat = t.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for i in range(0, len(flat), block):
        out[i : i + block] = np.exp(1j * np.outer(flat[i : i + block], k)) @ c
    return out.reshape(t.shape)


def poisson_extend(boundary, quadrature_n=4096, block=256):
    """Harmonic extension to the disk by the periodic trapezoid rule.

    Evaluation is refused for |z| > 1 - 10/quadrature_n, where the kernel
    peak is no longer resolved by the nodes.
    """
    if quadrature_n < 64:
        raise ParameterDomainError("quadrature_n must be >= 64")
    t = 2.0 * math.pi * np.arange(quadrature_n) / quadrature_n
    zeta = np.exp(1j * t)
    g = np.asarray(boundary(t), dtype=complex)
    if not np.all(np.isfinite(g)):
        raise DataError("boundary values must be finite")
    wg = g / quadrature_n
    r_cap = 1.0 - 10.0 / quadrature_n

    def blocks(z, kernel):
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=complex)
        for i in range(0, len(flat), block):
            zz = flat[i : i + block, None]
            out[i : i + block] = kernel(zz) @ wg
        return out.reshape(z.shape)

    def func(z):
        z = np.asarray(z, dtype=complex)
        return blocks(z, lambda zz: (1 - np.abs(zz) ** 2) / np.abs(zeta - zz) ** 2)

    def derivs(z):
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        dz = np.empty(flat.shape, dtype=complex)
        dzb = np.empty(flat.shape, dtype=complex)
        for i in range(0, len(flat), block):
            k = zeta / (zeta - flat[i : i + block, None]) ** 2
            dz[i : i + block] = k @ wg
            dzb[i : i + block] = np.conj(k) @ wg
        return dz.reshape(z.shape), dzb.reshape(z.shape)

    return MapHandle(
        func,
        derivs,
        "unit-disk",
        None,
        name="poisson-extension",
        domain=lambda z: np.abs(z) <= r_cap * (1 + 1e-12),
        boundary_distance=lambda z: r_cap - np.abs(z),
        strict=True,
        boundary_margin=10.0 / quadrature_n,
        meta={"quadrature_n": quadrature_n, "boundary": boundary},
    )


# ---------------------------------------------------------------------------
# Dilatation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DilatationSample:
    z: complex
    lam: float
    Lam: float
    D: float


@dataclass
class DilatationScan:
    samples: list
    min_lambda: float
    argmin_lambda: complex
    max_Lambda: float
    argmax_Lambda: complex
    max_D: float
    argmax_D: complex
    degenerate: list

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "lambda", "Lambda", "D"])
        for s in self.samples:
            w.writerow([f"{s.z.real:.17g}", f"{s.z.imag:.17g}", f"{s.lam:.17g}", f"{s.Lam:.17g}", f"{s.D:.17g}"])
        return buf.getvalue()


def dilatation_arrays(hmap, z, mode="auto"):
    """Vectorised (lambda, Lambda, D) at points z."""
    dz, dzb = hmap.wirtinger(z, mode)
    a, b = np.abs(dz), np.abs(dzb)
    lam = a - b
    Lam = a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        D = np.where(lam > 0, Lam / np.where(lam > 0, lam, 1.0), np.inf)
    return lam, Lam, D


def dilatation_at(hmap, z, mode="auto"):
    lam, Lam, D = dilatation_arrays(hmap, np.asarray([z], dtype=complex), mode)
    if lam[0] <= 0:
        warnings.warn(f"{hmap.name}: non-positive lambda at {z!r}", DegeneracyWarning, stacklevel=2)
    return DilatationSample(complex(z), float(lam[0]), float(Lam[0]), float(D[0]))


def dilatation_scan(hmap, grid, mode="auto"):
    grid = np.asarray(grid, dtype=complex).ravel()
    lam, Lam, D = dilatation_arrays(hmap, grid, mode)
    samples = [DilatationSample(complex(z), float(a), float(b), float(d)) for z, a, b, d in zip(grid, lam, Lam, D)]
    bad = [complex(z) for z in grid[lam <= 0]]
    if bad:
        warnings.warn(f"{hmap.name}: non-positive lambda at {len(bad)} grid points", DegeneracyWarning, stacklevel=2)
    i, j, k = int(np.argmin(lam)), int(np.argmax(Lam)), int(np.argmax(D))
    return DilatationScan(
        samples, float(lam[i]), complex(grid[i]), float(Lam[j]), complex(grid[j]), float(D[k]), complex(grid[k]), bad
    )


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------

_VALIDATION = {
    "unit-disk": np.array([0.1, 0.5j, -0.4 + 0.3j, 0.6 - 0.2j, -0.2 - 0.7j]),
    "upper-half-plane": np.array([1j, 0.5 + 0.5j, -0.3 + 0.2j, 2 + 0.1j]),
    "plane": np.array([0.5, -0.7 + 0.2j, 1.3j, -0.4 - 0.9j]),
    "other": np.array([]),
}


def compose(maps, validation_points=None):
    """maps[0] o maps[1] o ... o maps[-1], with the Wirtinger chain rule."""
    maps = list(maps)
    if not maps:
        raise CompositionError("nothing to compose")
    inner = maps[-1]
    pts = _VALIDATION[inner.domain_tag] if validation_points is None else np.asarray(validation_points, complex)
    if len(pts):
        w = inner.evaluate(pts) if not inner.strict else inner.func(pts)
        for m in reversed(maps[:-1]):
            ok = m.in_domain(w)
            if not np.all(ok):
                bad = np.asarray(w)[~np.asarray(ok)][0]
                raise CompositionError(f"validation point lands outside {m.name} (at {bad!r})")
            w = m.func(w)

    def func(z):
        w = np.asarray(z, dtype=complex)
        for m in reversed(maps):
            w = m.evaluate(w)
        return w

    def derivs(z):
        w = np.asarray(z, dtype=complex)
        dz, dzb = np.ones_like(w), np.zeros_like(w)
        for m in reversed(maps):
            fz, fzb = m.wirtinger(w)
            dz, dzb = fz * dz + fzb * np.conj(dzb), fz * dzb + fzb * np.conj(dz)
            w = m.evaluate(w)
        return dz, dzb

    Ks = [m.declared_K for m in maps]
    K = math.prod(Ks) if all(k is not None for k in Ks) else None
    return MapHandle(
        func,
        derivs,
        inner.domain_tag,
        K,
        name=" o ".join(m.name for m in maps),
        domain=inner.domain,
        boundary_distance=inner.boundary_distance,
        strict=inner.strict,
        boundary_margin=inner.boundary_margin,
    )


# ---------------------------------------------------------------------------
# Conformal map onto a starlike domain
# ---------------------------------------------------------------------------


def starlike_boundary(radius_fn, m=256):
    """Boundary sampled at its own polar angles: rho(theta) e^{i theta}."""
    return BoundaryFunction.from_callable(lambda t: radius_fn(t) * np.exp(1j * t), m)


def _conjugate(u):
    """Periodic conjugate function (Hilbert transform on the circle) by FFT."""
    n = len(u)
    c = np.fft.fft(u)
    k = np.fft.fftfreq(n, 1.0 / n)
    c = -1j * np.sign(k) * c
    if n % 2 == 0:
        c[n // 2] = 0
    return np.real(np.fft.ifft(c))


def theodorsen_conformal(boundary, iterations=200, tol=1e-12):
    """Conformal map of the disk onto a starlike domain, f(0) = 0, f'(0) > 0.

    ``boundary`` must be sampled at its own polar angles.  The boundary
    correspondence theta(t) solves theta = t + conj[log rho(theta)] by fixed
    point iteration (damped by 0.5 once the residual stops decreasing);
    then f(z) = z exp(G(z)) with Re G = log rho(theta(t)) on the circle.
    """
    v = boundary.values
    n = len(v)
    t = boundary.nodes
    if np.any(v == 0) or np.max(np.abs(np.angle(v * np.exp(-1j * t)))) > 1e-9:
        raise DataError("starlike boundary must be sampled at its own polar angles")
    lr_coef = np.fft.fft(np.log(np.abs(v))) / n

    def logrho(theta):
        return np.real(trig_eval(lr_coef, theta))

    theta = t.copy()
    omega = 1.0
    history = []
    for _ in range(iterations):
        new = t + _conjugate(logrho(theta))
        res = float(np.max(np.abs(new - theta)))
        if history and res > history[-1]:
            omega = 0.5
        history.append(res)
        theta = theta + omega * (new - theta)
        if res < tol:
            break
    else:
        raise NumericalError("Theodorsen iteration did not converge", residual=history)
    u = logrho(theta)
    uc = np.fft.fft(u) / n
    a = np.zeros(n // 2, dtype=complex)
    a[0] = uc[0].real
    a[1:] = 2.0 * uc[1 : n // 2]
    da = a[1:] * np.arange(1, len(a))

    def func(z):
        z = np.asarray(z, dtype=complex)
        return z * np.exp(np.polynomial.polynomial.polyval(z, a))

    def derivs(z):
        z = np.asarray(z, dtype=complex)
        G = np.polynomial.polynomial.polyval(z, a)
        dG = np.polynomial.polynomial.polyval(z, da)
        return np.exp(G) * (1.0 + z * dG), np.zeros_like(z)

    return MapHandle(
        func,
        derivs,
        "unit-disk",
        1.0,
        name="theodorsen",
        domain=lambda z: np.abs(z) <= 1.0,
        meta={"residual_history": history, "correspondence": theta, "coefficients": a},
    )
