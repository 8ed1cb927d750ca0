"""Single contour integrals of ``exp(itz) m_sc(z)^n`` around the cut [-2, 2]."""
from __future__ import annotations

import numpy as np

from blockeq.errors import NotConverged, OutOfRange
from blockeq.theory.special import bessel_j, m_sc

HALF_WIDTH = 3.0
GL_ORDER = 16
MAX_POINTS = 1 << 21


def contour_msc_power_closed(n: int, t: float) -> complex:
    """``i^(n+1) J_{n+1}(-2t) - i^(n-1) J_{n-1}(-2t)``."""
    n = int(n)
    if n < 1:
        raise OutOfRange(f"power must be >= 1, got {n}")
    x = -2.0 * float(t)
    return complex(1j ** (n + 1) * bessel_j(n + 1, x) - 1j ** (n - 1) * bessel_j(n - 1, x))


def stadium_nodes(dist: float, panels: int, order: int = GL_ORDER):
    """Nodes and weights (``dz``) on the stadium at distance ``dist`` from [-3, 3].

    Counterclockwise: bottom edge left to right, right cap, top edge right to
    left, left cap. Each of the four pieces gets ``panels`` Gauss-Legendre panels.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    s = (0.5 * (b - a) * x[None, :] + 0.5 * (a + b)).ravel()
    ws = (0.5 * (b - a) * w[None, :]).ravel()

    L = 2 * HALF_WIDTH
    z_parts, dz_parts = [], []
    # bottom: -3 - i d -> 3 - i d
    z_parts.append(-HALF_WIDTH + L * s - 1j * dist)
    dz_parts.append(np.full_like(s, L, dtype=complex) * ws)
    # right cap: angle -pi/2 -> pi/2
    th = -0.5 * np.pi + np.pi * s
    z_parts.append(HALF_WIDTH + dist * np.exp(1j * th))
    dz_parts.append(1j * dist * np.exp(1j * th) * np.pi * ws)
    # top: 3 + i d -> -3 + i d
    z_parts.append(HALF_WIDTH - L * s + 1j * dist)
    dz_parts.append(np.full_like(s, -L, dtype=complex) * ws)
    # left cap: angle pi/2 -> 3pi/2
    th = 0.5 * np.pi + np.pi * s
    z_parts.append(-HALF_WIDTH + dist * np.exp(1j * th))
    dz_parts.append(1j * dist * np.exp(1j * th) * np.pi * ws)
    return np.concatenate(z_parts), np.concatenate(dz_parts)


def _quadrature(n: int, t: float, dist: float, points: int) -> complex:
    panels = max(1, -(-points // (4 * GL_ORDER)))
    z, dz = stadium_nodes(dist, panels)
    vals = np.exp(1j * t * z) * m_sc(z) ** n
    return complex(np.sum(vals * dz) / (2j * np.pi))


def contour_msc_power_quadrature(
    n: int, t: float, dist: float | None = None, points: int = 4096, tol: float = 1e-9
) -> complex:
    """``(1/2 pi i) oint exp(itz) m_sc(z)^n dz`` by composite Gauss-Legendre.

    ``dist`` defaults to ``1/t`` (0.5 at ``t = 0``). The node count doubles
    until two successive values agree within ``tol``.
    """
    n = int(n)
    if n < 1:
        raise OutOfRange(f"power must be >= 1, got {n}")
    if dist is None:
        dist = 1.0 / abs(t) if t != 0 else 0.5
    if dist <= 0:
        raise OutOfRange(f"contour distance must be positive, got {dist}")
    if points < 1000:
        raise OutOfRange(f"need at least 1000 quadrature points, got {points}")
    prev = _quadrature(n, t, dist, points)
    while points < MAX_POINTS:
        points *= 2
        cur = _quadrature(n, t, dist, points)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise NotConverged(f"contour quadrature did not settle for n={n}, t={t}, dist={dist}")
