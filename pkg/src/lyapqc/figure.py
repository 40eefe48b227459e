"""Deterministic SVG rendering of nested boundary curves."""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .complexgeom import SampledCurve
from .errors import ParameterDomainError, RenderError

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b")


@dataclass(frozen=True)
class Layer:
    """One boundary: a region (anything with ``boundary(n)``), a SampledCurve,
    a callable ``n -> points`` or a fixed point array."""

    name: str
    source: Union[object, Callable, np.ndarray]
    color: str = ""
    label: str = ""
    closed: bool = True

    def points(self, n):
        src = self.source
        if isinstance(src, SampledCurve):
            return np.asarray(src.points, dtype=complex)
        if hasattr(src, "boundary"):
            return np.asarray(src.boundary(n), dtype=complex)
        if callable(src):
            return np.asarray(src(n), dtype=complex)
        return np.asarray(src, dtype=complex)

    @property
    def is_closed(self):
        return self.source.closed if isinstance(self.source, SampledCurve) else self.closed


@dataclass(frozen=True)
class FigureSpec:
    layers: tuple
    viewport: Optional[tuple] = None
    samples_per_curve: int = 1200
    width: int = 800
    title: str = ""

    def __post_init__(self):
        names = [l.name for l in self.layers]
        if len(set(names)) != len(names):
            raise ParameterDomainError("layer names must be unique")
        if self.viewport is not None:
            x0, x1, y0, y1 = self.viewport
            if not (x1 > x0 and y1 > y0):
                raise ParameterDomainError("viewport must be nonempty")
        if self.samples_per_curve < 8:
            raise ParameterDomainError("samples_per_curve must be >= 8")


def sample_layers(spec):
    out = []
    for layer in spec.layers:
        pts = layer.points(spec.samples_per_curve)
        pts = pts[np.isfinite(pts)]
        if len(pts) < 2:
            raise RenderError(f"layer {layer.name!r} is empty after sampling")
        out.append(pts)
    return out


def _viewport(spec, sampled):
    if spec.viewport is not None:
        return tuple(float(v) for v in spec.viewport)
    allp = np.concatenate(sampled)
    x0, x1 = float(allp.real.min()), float(allp.real.max())
    y0, y1 = float(allp.imag.min()), float(allp.imag.max())
    pad = 0.05 * max(x1 - x0, y1 - y0, 1e-12)
    return x0 - pad, x1 + pad, y0 - pad, y1 + pad


def render_figure(spec):
    """Standalone SVG: one <path> per layer plus a text legend."""
    sampled = sample_layers(spec)
    x0, x1, y0, y1 = _viewport(spec, sampled)
    W = spec.width
    H = max(1, int(round(W * (y1 - y0) / (x1 - x0))))
    legend_h = 22 * len(spec.layers) + 10
    sx = W / (x1 - x0)

    def coords(p):
        return (p.real - x0) * sx, (y1 - p.imag) * sx

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H + legend_h}" '
        f'viewBox="0 0 {W} {H + legend_h}">',
    ]
    if spec.title:
        lines.append(f"<title>{escape(spec.title)}</title>")
    lines.append(f'<rect x="0" y="0" width="{W}" height="{H}" fill="white" stroke="#cccccc"/>')
    for k, (layer, pts) in enumerate(zip(spec.layers, sampled)):
        color = layer.color or PALETTE[k % len(PALETTE)]
        X, Y = coords(pts)
        d = "M " + " L ".join(f"{x:.3f},{y:.3f}" for x, y in zip(X, Y))
        if layer.is_closed:
            d += " Z"
        lines.append(
            f'<path id={quoteattr("layer-" + layer.name)} d="{d}" fill="none" '
            f'stroke={quoteattr(color)} stroke-width="1.2"/>'
        )
    lines.append('<g id="legend" font-family="sans-serif" font-size="13">')
    for k, layer in enumerate(spec.layers):
        color = layer.color or PALETTE[k % len(PALETTE)]
        y = H + 18 + 22 * k
        lines.append(f'<line x1="10" y1="{y - 4}" x2="34" y2="{y - 4}" stroke={quoteattr(color)} stroke-width="3"/>')
        lines.append(f'<text x="42" y="{y}">{escape(layer.label or layer.name)}</text>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Nesting diagnostics
# ---------------------------------------------------------------------------


def _orient(a, b, c):
    return np.imag(np.conj(b - a) * (c - a))


def proper_crossings(p, q, closed=True):
    """Index pairs (i, j) where segment i of p crosses segment j of q transversally."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    pa, pb = (p, np.roll(p, -1)) if closed else (p[:-1], p[1:])
    qa, qb = (q, np.roll(q, -1)) if closed else (q[:-1], q[1:])
    hits = []
    for i in range(0, len(pa), 256):
        A, B = pa[i : i + 256, None], pb[i : i + 256, None]
        o1 = _orient(A, B, qa)
        o2 = _orient(A, B, qb)
        o3 = _orient(qa, qb, A)
        o4 = _orient(qa, qb, B)
        ii, jj = np.nonzero((o1 * o2 < 0) & (o3 * o4 < 0))
        hits.extend(zip((ii + i).tolist(), jj.tolist()))
    return hits


def nesting_defects(outer, inner, tol):
    """Evidence that ``inner`` leaves the polygon ``outer`` by more than ``tol``.

    Returns (crossings, escaped_vertices): transversal segment crossings whose
    segments are not within ``tol`` of the other curve (coincident pieces of
    shared boundary are ignored), and inner vertices outside ``outer`` farther
    than ``tol``.
    """
    from .verifier import distance_to_polyline, winding_numbers

    outer = np.asarray(outer, dtype=complex)
    inner = np.asarray(inner, dtype=complex)
    d_in = distance_to_polyline(outer, inner)
    d_out = distance_to_polyline(inner, outer)
    crossings = []
    for i, j in proper_crossings(outer, inner):
        ends_o = (d_out[i], d_out[(i + 1) % len(outer)])
        ends_i = (d_in[j], d_in[(j + 1) % len(inner)])
        if max(ends_o) > tol or max(ends_i) > tol:
            crossings.append((i, j))
    wn = winding_numbers(outer, inner)
    escaped = [complex(z) for z, w, d in zip(inner, wn, d_in) if w == 0 and d > tol]
    return crossings, escaped


def viewport_resolution(spec, sampled=None):
    """Length of one rendered unit (1e-3 px precision is printed)."""
    sampled = sampled or sample_layers(spec)
    x0, x1, _, _ = _viewport(spec, sampled)
    return (x1 - x0) / spec.width
