"""Deterministic point generation.

Random clouds use numpy's counter-based ``Philox`` bit generator so that a
scenario seed fixes every sample.  Quasi-uniform sets use the additive
recurrence (Kronecker) sequence built on the plastic number, shifted by a
seed-dependent offset.
"""

import numpy as np

# Plastic number: real root of x^3 = x + 1.
_PLASTIC = 1.324717957244746
_ALPHA2 = np.array([1.0 / _PLASTIC, 1.0 / _PLASTIC**2])


def make_rng(seed):
    """Counter-based generator used for every random cloud in the package."""
    return np.random.Generator(np.random.Philox(int(seed)))


def kronecker2d(n, seed=0):
    """``n`` quasi-uniform points in the open unit square, shape (n, 2).

    Point ``k`` is the same for every ``n > k`` so that larger sets extend
    smaller ones (refinement keeps earlier samples).
    """
    shift = make_rng(seed).random(2)
    k = np.arange(1, n + 1, dtype=float)[:, None]
    pts = np.mod(shift + k * _ALPHA2, 1.0)
    # keep strictly inside (0, 1)
    return np.clip(pts, 1e-15, 1.0 - 1e-15)


def random_disk_points(n, seed=0, radius=1.0):
    """Area-uniform random points in the open disk of the given radius."""
    g = make_rng(seed)
    r = radius * np.sqrt(g.random(n))
    t = 2.0 * np.pi * g.random(n)
    return r * np.exp(1j * t)


def polar_grid(n_radial, n_angular, r_max, r_min=0.0, upper_half=False):
    """Tensor grid in polar coordinates, flattened to a complex array."""
    r = np.linspace(r_min, r_max, n_radial + 1)[1:] if r_min == 0.0 else np.linspace(r_min, r_max, n_radial)
    if upper_half:
        t = np.linspace(0.0, np.pi, n_angular + 2)[1:-1]
    else:
        t = np.linspace(0.0, 2.0 * np.pi, n_angular, endpoint=False)
    return (r[:, None] * np.exp(1j * t[None, :])).ravel()
