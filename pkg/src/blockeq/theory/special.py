"""Semicircle Stieltjes transform and Bessel functions of the first kind."""
from __future__ import annotations

import math

import numpy as np

from blockeq.errors import OnCut, OutOfRange

MAX_ORDER = 10_000
MAX_ARG = 1.0e6
SERIES_CUTOFF = 1.0e-2
_RESCALE = 1.0e200
SERIES_MAX_ORDER = 4_000_000


def m_sc(z, side: str | None = None):
    """Stieltjes transform of the semicircle law on [-2, 2].

    Returns the root of ``m**2 + z*m + 1 = 0`` with ``Im z * Im m > 0``,
    equivalently the root with ``|m| < 1`` off the cut. Points on the cut
    need ``side='upper'`` or ``side='lower'`` (boundary values from
    ``Im z -> 0+`` or ``0-``).

    Accepts scalars or arrays.
    """
    z_arr = np.asarray(z, dtype=complex)
    on_cut = (z_arr.imag == 0.0) & (np.abs(z_arr.real) <= 2.0)
    if np.any(on_cut) and side is None:
        raise OnCut(f"z on [-2, 2] requires side='upper' or 'lower': {z!r}")
    if side not in (None, "upper", "lower"):
        raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")

    # sqrt(z-2)*sqrt(z+2) ~ z at infinity and is analytic off [-2, 2]
    root = np.sqrt(z_arr - 2.0) * np.sqrt(z_arr + 2.0)
    m = 0.5 * (-z_arr + root)
    if np.any(on_cut):
        x = z_arr.real[on_cut]
        boundary = 0.5 * (-x + 1j * np.sqrt(np.maximum(4.0 - x * x, 0.0)))
        if side == "lower":
            boundary = np.conj(boundary)
        m = np.array(m, copy=True)
        m[on_cut] = boundary
    if np.ndim(z) == 0:
        return complex(m)
    return m


def _check_args(nmax: int, x: float, max_arg: float = MAX_ARG, max_order: int = MAX_ORDER) -> None:
    if nmax > max_order:
        raise OutOfRange(f"Bessel order {nmax} exceeds {max_order}")
    if not math.isfinite(x) or abs(x) > max_arg:
        raise OutOfRange(f"Bessel argument {x} outside [-{max_arg:g}, {max_arg:g}]")


def _series_sequence(nmax: int, ax: float) -> np.ndarray:
    half = 0.5 * ax
    q = -half * half
    out = np.zeros(nmax + 1)
    lead = 1.0  # (x/2)^n / n!
    for n in range(nmax + 1):
        if n > 0:
            lead *= half / n
        if lead == 0.0:
            break
        term = lead
        total = lead
        m = 0
        while abs(term) > 1e-17 * abs(total):
            m += 1
            term *= q / (m * (m + n))
            total += term
        out[n] = total
    return out


def _miller_sequence(nmax: int, ax: float) -> np.ndarray:
    start = nmax + 20 + math.ceil(1.5 * ax)
    start += start % 2
    out = np.zeros(nmax + 1)
    two_over_x = 2.0 / ax
    j_above = 0.0
    j_here = 1.0e-250
    norm = 0.0
    for k in range(start, 0, -1):
        j_below = k * two_over_x * j_here - j_above
        j_above, j_here = j_here, j_below
        # j_here now holds (unnormalised) J_{k-1}
        if k - 1 <= nmax:
            out[k - 1] = j_here
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_here
        if abs(j_here) > _RESCALE:
            j_here /= _RESCALE
            j_above /= _RESCALE
            norm /= _RESCALE
            if k - 1 <= nmax:
                out[k - 1 :] /= _RESCALE
    norm += out[0]
    return out / norm


def bessel_j_sequence(
    nmax: int, x: float, *, max_arg: float = MAX_ARG, max_order: int = MAX_ORDER
) -> np.ndarray:
    """``J_0(x), ..., J_nmax(x)`` for a real scalar ``x``.

    Power series for ``|x| < 1e-2``; otherwise Miller's downward recurrence
    started at ``nmax + 20 + ceil(1.5|x|)`` and normalised with
    ``J_0 + 2 sum_k J_2k = 1``.
    """
    nmax = int(nmax)
    if nmax < 0:
        raise OutOfRange("nmax must be non-negative")
    x = float(x)
    _check_args(nmax, x, max_arg, max_order)
    ax = abs(x)
    if ax == 0.0:
        out = np.zeros(nmax + 1)
        out[0] = 1.0
        return out
    if ax < SERIES_CUTOFF:
        out = _series_sequence(nmax, ax)
    else:
        out = _miller_sequence(nmax, ax)
    if x < 0:
        out[1::2] *= -1.0
    return out


def bessel_j(n: int, x):
    """Bessel function of the first kind ``J_n(x)`` for integer ``n``.

    Negative orders use ``J_{-n} = (-1)^n J_n``. ``x`` may be an array.
    """
    n = int(n)
    sign = -1.0 if (n < 0 and n % 2) else 1.0
    order = abs(n)
    if np.ndim(x) == 0:
        return sign * float(bessel_j_sequence(order, float(x))[order])
    xs = np.asarray(x, dtype=float)
    flat = [sign * bessel_j_sequence(order, xi)[order] for xi in xs.ravel()]
    return np.array(flat).reshape(xs.shape)


def bessel_square_weights(kmax: int, t: float) -> np.ndarray:
    """Weights ``B_k(t) = (k J_k(2t) / t)**2`` for ``k = 0..kmax``.

    ``B_0 = 0`` and at ``t = 0`` the limit ``B_k = delta_{k1}`` is used.
    Every double contour integral of ``exp(it(z - z~)) f(m m~)`` reduces to
    ``sum_k a_k B_k(t)`` with ``a_k`` the Taylor coefficients of ``f``, and
    ``sum_k B_k(t) = 1``.
    """
    t = abs(float(t))
    out = np.zeros(kmax + 1)
    if t == 0.0:
        if kmax >= 1:
            out[1] = 1.0
        return out
    # series callers take t up to MAX_ARG, so the kernel argument reaches
    # 2*MAX_ARG; near-critical ratios also need orders past MAX_ORDER
    j = bessel_j_sequence(kmax, 2.0 * t, max_arg=2.0 * MAX_ARG, max_order=SERIES_MAX_ORDER)
    k = np.arange(kmax + 1)
    out[:] = (k * j / t) ** 2
    return out
