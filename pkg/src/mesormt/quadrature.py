"""Composite Gauss-Legendre rules on panel decompositions.

Everything here is vectorised: a rule is a pair ``(nodes, weights)`` of flat
arrays, and integrals are formed as ``weights @ values`` (numpy's pairwise
summation keeps the result reproducible for a fixed rule).
"""

from functools import lru_cache

import numpy as np

__all__ = [
    "gauss_legendre",
    "panel_rule",
    "geometric_edges",
    "half_line_rule",
    "real_line_rule",
]


@lru_cache(maxsize=64)
def _leggauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(order, a=-1.0, b=1.0):
    """Gauss-Legendre nodes and weights of the given order on ``[a, b]``."""
    x, w = _leggauss(int(order))
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def panel_rule(edges, order):
    """Composite rule with one Gauss-Legendre panel per consecutive edge pair.

    ``edges`` may be an array of shape ``(..., P + 1)``; the result then has
    shape ``(..., P * order)`` so that a batch of decompositions sharing the
    panel count can be handled at once.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(int(order))
    lo = edges[..., :-1, None]
    hi = edges[..., 1:, None]
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (hi + lo) + half * x
    weights = half * w
    shape = edges.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def geometric_edges(start, stop, count):
    """``count + 1`` edges from ``start`` to ``stop`` in geometric progression.

    ``start`` and ``stop`` may be arrays (broadcast together); both must be
    positive.
    """
    start = np.asarray(start, dtype=float)
    stop = np.asarray(stop, dtype=float)
    t = np.linspace(0.0, 1.0, int(count) + 1)
    return start[..., None] * (stop / start)[..., None] ** t


def half_line_rule(core, stop, order=16, core_panels=8, outer_panels=24,
                   far=1e7):
    """Rule for ``int_{-far}^{stop} h(x) dx`` when ``h`` is concentrated near 0.

    The interval ``[-core, min(core, stop)]`` gets uniform panels, and the
    remaining pieces are graded geometrically away from the origin.  ``stop``
    may be an array; all rules in the batch have the same node count, which
    is what the correlation integrals in :mod:`mesormt.variance_kernel` need.
    Requires ``stop >= core``.
    """
    stop = np.atleast_1d(np.asarray(stop, dtype=float))
    if np.any(stop < core):
        raise ValueError("half_line_rule needs stop >= core")
    centre = np.linspace(-core, core, core_panels + 1)
    left = -geometric_edges(core, far, outer_panels)[::-1]
    xl, wl = panel_rule(left, order)
    xc, wc = panel_rule(centre, order)
    # Right piece [core, stop]; degenerate panels (stop == core) get zero weight.
    right = geometric_edges(core, np.maximum(stop, core * (1 + 1e-15)),
                            outer_panels)
    xr, wr = panel_rule(right, order)
    n = stop.size
    nodes = np.concatenate([np.broadcast_to(xl, (n, xl.size)),
                            np.broadcast_to(xc, (n, xc.size)), xr], axis=1)
    weights = np.concatenate([np.broadcast_to(wl, (n, wl.size)),
                              np.broadcast_to(wc, (n, wc.size)), wr], axis=1)
    return nodes, weights


def real_line_rule(core, order=16, core_panels=16, outer_panels=24, far=1e7,
                   centre=0.0):
    """Rule for the whole line, uniform on ``centre +- core`` and graded outside."""
    inner = centre + np.linspace(-core, core, core_panels + 1)
    outer = geometric_edges(core, far, outer_panels)
    xi, wi = panel_rule(inner, order)
    xo, wo = panel_rule(outer, order)
    nodes = np.concatenate([centre - xo[::-1], xi, centre + xo])
    weights = np.concatenate([wo[::-1], wi, wo])
    return nodes, weights
