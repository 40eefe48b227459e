"""Scenario files: parse, validate, then execute checks and write artifacts.

A scenario is an INI file with sections ``[scenario]``, ``[map.NAME]``,
``[region.NAME]``, ``[curve.NAME]``, ``[check.NAME]`` and ``[figure.NAME]``.
Everything is parsed and every cross reference resolved before the first
artifact is written, so a configuration error leaves no partial output.
"""

import builtins
import configparser
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import complexgeom as cg
from . import mapzoo as mz
from . import qhyperbolic as qh
from . import verifier as vf
from .errors import DataError, LyapqcError, ParameterDomainError, ScenarioError
from .figure import FigureSpec, Layer, render_figure
from .sampling import polar_grid

SECTION_KINDS = ("map", "region", "curve", "check", "figure")
_REQUIRED = object()


def _line_of(text, section, key=None):
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return no
            continue
        if current == section and key is not None and "=" in line:
            if line.split("=", 1)[0].strip() == key:
                return no
    return 0


class _Section:
    """Typed access to one INI section; unused keys are rejected afterwards."""

    def __init__(self, name, data, ctx):
        self.name = name
        self.data = dict(data)
        self.ctx = ctx
        self.used = set()

    def error(self, key, msg):
        line = _line_of(self.ctx.text, self.name, key)
        where = f"{self.ctx.path}:{line}: [{self.name}]" + (f" {key}" if key else "")
        return ScenarioError(f"{where}: {msg}")

    def raw(self, key, default=_REQUIRED):
        self.used.add(key)
        if key in self.data:
            return self.data[key].strip()
        if default is _REQUIRED:
            raise self.error(key, "missing required field")
        return default

    def _conv(self, key, fn, default, what):
        v = self.raw(key, default)
        if v is default and default is not _REQUIRED:
            return v
        try:
            return fn(v)
        except (TypeError, ValueError):
            raise self.error(key, f"expected {what}, got {v!r}") from None

    def float(self, key, default=_REQUIRED):
        return self._conv(key, float, default, "a number")

    def int(self, key, default=_REQUIRED):
        return self._conv(key, int, default, "an integer")

    def complex(self, key, default=_REQUIRED):
        return self._conv(key, lambda s: complex(s.replace(" ", "")), default, "a complex number")

    def bool(self, key, default=_REQUIRED):
        table = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}
        return self._conv(key, lambda s: table[s.lower()] if s.lower() in table else _bad(), default, "a boolean")

    def str(self, key, default=_REQUIRED):
        return self.raw(key, default)

    def list(self, key, default=_REQUIRED, conv=builtins.str):
        v = self.raw(key, default)
        if v is default and default is not _REQUIRED:
            return v
        try:
            return [conv(x.strip()) for x in v.split(",") if x.strip()]
        except ValueError:
            raise self.error(key, f"bad list {v!r}") from None

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise self.error(extra[0], "unknown field")


def _bad():
    raise ValueError


@dataclass
class CheckSpec:
    name: str
    kind: str
    run: object  # zero-argument callable returning a report


@dataclass
class Scenario:
    name: str
    path: str
    seed: int
    samples: int
    output_dir: str
    maps: dict = field(default_factory=dict)
    regions: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    curve_mu: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    figures: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _domain(sec, default):
    tag = sec.str("domain", default)
    if tag not in mz.DOMAIN_TAGS:
        raise sec.error("domain", f"unknown domain tag {tag!r}")
    return tag


def _boundary_function(sec, ctx, m_default=256):
    src = sec.str("boundary")
    if src == "sine":
        a = sec.float("amplitude", 0.3)
        m = sec.int("boundary_samples", m_default)
        return mz.BoundaryFunction.from_callable(lambda t: np.exp(1j * (t + a * np.sin(t))), m, homeomorphism=True)
    if src == "ellipse":
        ax, ay = sec.float("ax"), sec.float("ay")
        m = sec.int("boundary_samples", m_default)
        return mz.starlike_boundary(lambda t: 1.0 / np.sqrt((np.cos(t) / ax) ** 2 + (np.sin(t) / ay) ** 2), m)
    path = Path(ctx.base_dir, src)
    if not path.is_file():
        raise sec.error("boundary", f"boundary file {str(path)!r} does not exist")
    interp = sec.str("interpolation", "trig")
    return mz.BoundaryFunction.from_csv(path.read_text(), interp, sec.bool("homeomorphism", False))


def _build_map(sec, ctx, maps):
    kind = sec.str("kind")
    if kind == "identity":
        return mz.identity_map(_domain(sec, "plane"))
    if kind == "radial-stretch":
        m = mz.make_radial_stretch(sec.float("K"))
        return m.restrict(_domain(sec, "plane"))
    if kind == "angular-stretch":
        a = sec.float("amplitude")
        return mz.make_angular_stretch(lambda t: t + a * np.sin(t), lambda t: 1 + a * np.cos(t))
    if kind == "log-quotient":
        return mz.make_log_quotient(sec.float("r_max", 0.2))
    if kind == "poisson":
        b = _boundary_function(sec, ctx)
        return mz.poisson_extend(b, sec.int("quadrature_n", 4096))
    if kind == "mobius":
        return mz.make_mobius(sec.complex("a"), sec.complex("b"), sec.complex("c"), sec.complex("d"), _domain(sec, "plane"))
    if kind == "disk-automorphism":
        return mz.make_disk_automorphism(sec.complex("a"))
    if kind == "A0":
        return mz.make_A0_map()
    if kind == "composition":
        names = sec.list("maps")
        for n in names:
            if n not in maps:
                raise sec.error("maps", f"unknown map {n!r}")
        return mz.compose([maps[n] for n in names])
    if kind == "theodorsen":
        b = _boundary_function(sec, ctx)
        return mz.theodorsen_conformal(b, sec.int("iterations", 200), sec.float("tol", 1e-12))
    raise sec.error("kind", f"unknown map kind {kind!r}")


def _build_region(sec, ctx, scen):
    kind = sec.str("kind")
    if kind == "lyp":
        return cg.LypRegionSpec(sec.float("eps"), sec.float("c"), sec.float("mu"))
    if kind == "elementary":
        return cg.build_elementary_domain(sec.float("c"), sec.float("mu"), sec.float("eps"))
    if kind == "scaled":
        base = _ref(sec, "base", scen.regions, "region")
        return cg.ScaledRegion(base, sec.float("factor"))
    if kind == "transformed":
        base = _ref(sec, "from", scen.regions, "region")
        if not isinstance(base, cg.LypRegionSpec):
            raise sec.error("from", "transformed regions need a lyp base region")
        K1, l0 = sec.float("K1"), sec.float("l0")
        c1 = sec.str("c1")
        if c1 == "search":
            hmap = _ref(sec, "map", scen.maps, "map")
            n = sec.int("samples", scen.samples)
            h0, _, _ = vf.derive_c1(hmap, base.eps, base.c, base.mu, K1, l0, base, n=n, seed=scen.seed)
            return h0
        try:
            c1 = float(c1)
        except ValueError:
            raise sec.error("c1", "expected a number or 'search'") from None
        return vf.transform_region_params(base.eps, base.c, base.mu, K1, l0, c1)
    raise sec.error("kind", f"unknown region kind {kind!r}")


def _build_curve(sec, ctx):
    kind = sec.str("kind")
    if kind == "graph":
        return cg.build_graph_curve(sec.float("c"), sec.float("mu"), sec.float("x0"), sec.int("n", 2001))
    if kind == "gamma":
        return cg.build_gamma_curve(sec.float("c"), sec.float("mu"), sec.float("r0"), sec.int("n", 2001))
    if kind == "circle":
        return cg.build_circle_curve(sec.complex("center"), sec.float("radius"), sec.int("n", 2000), sec.float("start", 0.0))
    if kind == "csv":
        path = Path(ctx.base_dir, sec.str("file"))
        if not path.is_file():
            raise sec.error("file", f"curve file {str(path)!r} does not exist")
        return cg.SampledCurve.from_csv(path.read_text(), closed=sec.bool("closed", False))
    raise sec.error("kind", f"unknown curve kind {kind!r}")


def _ref(sec, key, table, what):
    name = sec.str(key)
    if name not in table:
        raise sec.error(key, f"unknown {what} {name!r}")
    return table[name]


def _grid(sec, hmap, scen):
    """Interior grid: polar tensor grid within ``radius`` (default inside the map's cap)."""
    cap = 1.0 - max(hmap.boundary_margin, 0.0) if hmap.domain_tag == "unit-disk" else 1.0
    radius = sec.float("radius", min(cap, 0.95))
    return polar_grid(sec.int("n_radial", 25), sec.int("n_angular", 40), radius, sec.float("r_min", 0.0),
                      sec.bool("upper_half", hmap.domain_tag == "upper-half-plane"))


def _dilatation_check(hmap, grid, K):
    scan = mz.dilatation_scan(hmap, grid)
    ok = scan.min_lambda > 0 and (K is None or scan.max_D <= K * (1 + 5e-3))
    margin = (K * (1 + 5e-3) - scan.max_D) if K is not None else scan.min_lambda
    return vf.Report(
        "dilatation",
        bool(ok),
        len(grid),
        float(margin),
        scan.degenerate,
        {"declared_K": K if K is not None else math.nan},
        ("re", "im", "lambda", "Lambda", "D"),
        [(s.z.real, s.z.imag, s.lam, s.Lam, s.D) for s in scan.samples],
        {"min_lambda": scan.min_lambda, "max_D": scan.max_D, "argmax_D": scan.argmax_D},
    )


def _angle_sweep_check(hmap, alpha, c, n):
    thetas = np.linspace(0.0, math.pi, n + 1)[1:]
    recs = qh.angle_distortion_sweep(hmap.evaluate, thetas, alpha, c)
    tight = max(r.tightest_c for r in recs)
    return vf.Report(
        "angle_sweep",
        all(r.satisfied for r in recs),
        len(recs),
        min(r.margin for r in recs),
        [r.theta for r in recs if not r.satisfied],
        {"alpha": alpha, "c": c},
        ("theta", "theta_star", "bound", "tightest_c"),
        [(r.theta, r.theta_star, r.bound, r.tightest_c) for r in recs],
        {"tightest_c": tight},
    )


def _region_consts(prefix, reg):
    base = getattr(reg, "region", reg)
    out = {f"{prefix}_{k}": getattr(base, k) for k in ("eps", "c", "mu") if hasattr(base, k)}
    if hasattr(reg, "factor"):
        out[f"{prefix}_factor"] = reg.factor
    return out


def _build_check(sec, ctx, scen):
    kind = sec.str("type")
    n = sec.int("samples", scen.samples)
    seed = sec.int("seed", scen.seed)
    if kind == "inclusion-forward":
        h, src, tgt = _ref(sec, "map", scen.maps, "map"), _ref(sec, "source", scen.regions, "region"), _ref(sec, "target", scen.regions, "region")
        consts = {**_region_consts("source", src), **_region_consts("target", tgt)}
        return lambda: vf.check_inclusion_forward(h, src, tgt, n, seed, consts)
    if kind == "inclusion-reverse":
        h, src, inner = _ref(sec, "map", scen.maps, "map"), _ref(sec, "source", scen.regions, "region"), _ref(sec, "inner", scen.regions, "region")
        bn = sec.int("boundary_samples", 4000)
        consts = {**_region_consts("source", src), **_region_consts("inner", inner)}
        return lambda: vf.check_inclusion_reverse(h, src, inner, n, seed, bn, consts)
    if kind == "triple":
        h = _ref(sec, "map", scen.maps, "map")
        src, inner, outer = (_ref(sec, k, scen.regions, "region") for k in ("source", "inner", "outer"))
        if not isinstance(src, cg.ElementaryDomainSpec):
            raise sec.error("source", "triple source must be an elementary region")
        k = sec.int("points", 32)
        a = np.exp(2j * math.pi * np.arange(k) / k)
        bn = sec.int("boundary_samples", 2000)

        def run():
            reps = vf.check_triple(h, a, vf.triple_factory(src, inner, outer), n, seed, bn)
            return vf.merge_reports(reps, {"points": k})

        return run
    if kind == "holder":
        h = _ref(sec, "map", scen.maps, "map")
        params = vf.HolderCheckParams(sec.float("K1"), sec.float("l0"))
        return lambda: vf.check_holder_at_zero(h, params, n, seed)
    if kind == "mori":
        h = _ref(sec, "map", scen.maps, "map")
        K = sec.float("K")
        return lambda: vf.check_mori(h, K, n, seed)
    if kind == "harnack":
        h = _ref(sec, "map", scen.maps, "map")
        b, normal = sec.complex("b"), sec.complex("normal")
        r0 = sec.str("R0", "auto")
        if r0 != "auto":
            try:
                r0 = float(r0)
            except ValueError:
                raise sec.error("R0", "expected a number or 'auto'") from None

        def run():
            R0 = vf.estimate_R0(h) if r0 == "auto" else r0
            return vf.check_harnack_lower(h, b, normal, R0, n=n, seed=seed)

        return run
    if kind == "colip":
        h = _ref(sec, "map", scen.maps, "map")
        levels = sec.list("levels", conv=float)
        shell = sec.str("shell", "boundary")
        if shell not in ("boundary", "origin"):
            raise sec.error("shell", "expected 'boundary' or 'origin'")
        pts = sec.int("points", 512)
        upper = sec.bool("upper_half", h.domain_tag != "unit-disk")
        expect = sec.str("expect", "flat")
        if expect not in ("flat", "decay"):
            raise sec.error("expect", "expected 'flat' or 'decay'")
        ratio = sec.float("decay_ratio", 0.5)

        def grid(lv):
            return vf.shell_grid(1.0 - lv if shell == "boundary" else lv, pts, upper)

        return lambda: vf.colip_trend(h, levels, grid, expect, decay_ratio=ratio)
    if kind == "lemma":
        c, mu, d = sec.float("c"), sec.float("mu"), sec.float("d")
        return lambda: vf.check_lemma_distance(c, mu, d)
    if kind == "lemma-sweep":
        pairs, nd = sec.int("pairs", 100), sec.int("levels", 10)
        return lambda: vf.lemma_sweep(pairs, nd, seed)
    if kind == "arg-bound":
        curve = _ref(sec, "curve", scen.curves, "curve")
        mu, eps = sec.float("mu"), sec.float("eps")
        c = sec.float("c", None)
        return lambda: vf.check_boundary_arg_bound(curve, mu, eps, c)
    if kind == "dilatation":
        h = _ref(sec, "map", scen.maps, "map")
        g = _grid(sec, h, scen)
        K = sec.float("K", h.declared_K)
        return lambda: _dilatation_check(h, g, K)
    if kind == "s2":
        h = _ref(sec, "map", scen.maps, "map")
        g = _grid(sec, h, scen)
        m = sec.int("boundary_samples", 8192)

        def run():
            rad = 1.0 - max(h.boundary_margin, 0.0)
            ring = np.asarray(h.evaluate(rad * np.exp(2j * math.pi * np.arange(m) / m)))
            return vf.s2_scan(h, g, ring)

        return run
    if kind == "angle-sweep":
        h = _ref(sec, "map", scen.maps, "map")
        alpha, c = sec.float("alpha"), sec.float("c")
        return lambda: _angle_sweep_check(h, alpha, c, n)
    raise sec.error("type", f"unknown check type {kind!r}")


def _build_figure(sec, ctx, scen):
    refs = sec.list("layers")
    if not refs:
        raise sec.error("layers", "no layers given")
    colors = sec.list("colors", [])
    labels = sec.list("labels", [])
    layers = []
    for k, ref in enumerate(refs):
        parts = ref.split(":")
        if parts[0] == "region" and len(parts) == 2:
            src = _ref_name(sec, parts[1], scen.regions, "region")
        elif parts[0] == "curve" and len(parts) == 2:
            src = _ref_name(sec, parts[1], scen.curves, "curve")
        elif parts[0] == "image" and len(parts) == 3:
            h = _ref_name(sec, parts[1], scen.maps, "map")
            reg = _ref_name(sec, parts[2], scen.regions, "region")
            src = (lambda h, reg: lambda n: h.evaluate(reg.boundary(n)))(h, reg)
        else:
            raise sec.error("layers", f"bad layer reference {ref!r}")
        name = "-".join(parts[1:])
        layers.append(Layer(name, src, colors[k] if k < len(colors) else "", labels[k] if k < len(labels) else name))
    vp = sec.list("viewport", None, conv=float)
    if vp is not None and len(vp) != 4:
        raise sec.error("viewport", "expected xmin,xmax,ymin,ymax")
    return FigureSpec(tuple(layers), tuple(vp) if vp else None, sec.int("samples", 1200), title=sec.str("title", ""))


def _ref_name(sec, name, table, what):
    if name not in table:
        raise sec.error("layers", f"unknown {what} {name!r}")
    return table[name]


@dataclass
class _Ctx:
    path: str
    text: str
    base_dir: str


def load_scenario(path, seed=None, samples=None, out=None):
    """Parse and validate; every object is built here, nothing is written."""
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario ({exc.strerror})") from None
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    ctx = _Ctx(path, text, str(Path(path).resolve().parent))
    if not parser.has_section("scenario"):
        raise ScenarioError(f"{path}: missing [scenario] section")
    head = _Section("scenario", parser["scenario"], ctx)
    scen = Scenario(
        name=head.str("name", Path(path).stem),
        path=path,
        seed=seed if seed is not None else head.int("seed", 0),
        samples=samples if samples is not None else head.int("samples", 2000),
        output_dir=out if out is not None else head.str("output_dir", ""),
    )
    head.raw("seed", None)
    head.raw("samples", None)
    head.raw("output_dir", None)
    head.finish()
    for name in parser.sections():
        if name == "scenario":
            continue
        kind, _, label = name.partition(".")
        if kind not in SECTION_KINDS or not label:
            raise ScenarioError(f"{path}:{_line_of(text, name)}: unknown section [{name}]")
        sec = _Section(name, parser[name], ctx)
        try:
            if kind == "map":
                scen.maps[label] = _build_map(sec, ctx, scen.maps)
            elif kind == "region":
                scen.regions[label] = _build_region(sec, ctx, scen)
            elif kind == "curve":
                scen.curves[label] = _build_curve(sec, ctx)
                mu = sec.float("mu", None)
                if mu is not None:
                    scen.curve_mu[label] = mu
            elif kind == "check":
                scen.checks.append(CheckSpec(label, sec.str("type"), _build_check(sec, ctx, scen)))
            else:
                scen.figures[label] = _build_figure(sec, ctx, scen)
        except (ParameterDomainError, DataError) as exc:
            raise sec.error(None, str(exc)) from None
        sec.finish()
    if not scen.output_dir:
        raise ScenarioError(f"{path}: no output directory (set output_dir or pass --out)")
    return scen


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class CheckOutcome:
    name: str
    kind: str
    verdict: bool
    summary: str
    error: str = ""


def run_checks(scen, log=None):
    """Run every check (a failure or error never stops later ones)."""
    out = Path(scen.output_dir)
    outcomes = []
    for chk in scen.checks:
        try:
            rep = chk.run()
        except LyapqcError as exc:
            msg = f"check {chk.name!r} in {scen.path}: {type(exc).__name__}: {exc}"
            if log:
                log(msg)
            summary = f"verdict=fail\nerror={type(exc).__name__}: {exc}\n"
            write_atomic(out / f"{chk.name}.csv", "error\n" + f"{type(exc).__name__}: {exc}\n")
            outcomes.append(CheckOutcome(chk.name, chk.kind, False, summary, str(exc)))
            continue
        write_atomic(out / f"{chk.name}.csv", rep.to_csv())
        outcomes.append(CheckOutcome(chk.name, chk.kind, bool(rep.verdict), rep.summary_kv()))
    return outcomes


def write_summary(scen, outcomes):
    failed = [o.name for o in outcomes if not o.verdict]
    lines = [
        f"scenario={scen.name}",
        f"verdict={'pass' if not failed else 'fail'}",
        f"checks={len(outcomes)}",
        f"failed={','.join(failed)}",
        f"seed={scen.seed}",
        "",
    ]
    for o in outcomes:
        lines.append(f"[check.{o.name}]")
        lines.append(f"type={o.kind}")
        lines.append(o.summary.rstrip("\n"))
        lines.append("")
    write_atomic(Path(scen.output_dir) / "summary.txt", "\n".join(lines))
    return not failed


def render_figures(scen):
    paths = []
    for name, spec in scen.figures.items():
        p = Path(scen.output_dir) / f"{name}.svg"
        write_atomic(p, render_figure(spec))
        paths.append(p)
    return paths


def construct_artifacts(scen):
    out = Path(scen.output_dir)
    for name, reg in scen.regions.items():
        write_atomic(out / f"region_{name}.kv", reg.to_kv())
        pts = reg.boundary(2000)
        write_atomic(out / f"region_{name}.csv", cg.SampledCurve.from_points(pts, closed=True).to_csv())
    for name, curve in scen.curves.items():
        write_atomic(out / f"curve_{name}.csv", curve.to_csv())


def measure_constants(scen):
    rows = ["curve,mu,samples,l1,b_arc,l2"]
    for name, curve in scen.curves.items():
        if name not in scen.curve_mu:
            continue
        est = cg.estimate_constants(curve, scen.curve_mu[name])
        rows.append(f"{name},{est.mu!r},{est.samples},{est.l1!r},{est.b_arc!r},{est.l2!r}")
    write_atomic(Path(scen.output_dir) / "measure.csv", "\n".join(rows) + "\n")
    return rows
