"""Bessel-square series for the sphere-averaged weights ``w_{mu nu}(t)``.

Every quantity here is a double contour integral of ``exp(it(z - z~))``
times a rational function of ``m = m_sc(z) m_sc(z~)``. Expanding in powers
of ``m`` turns it into ``sum_k a_k B_k(t)`` with ``B_k = (k J_k(2t)/t)^2``,
so everything reduces to weighted geometric sums of the ``B_k``.
"""
from __future__ import annotations

import math

import numpy as np

from blockeq.errors import NotConverged, OutOfRange, UnsupportedPair
from blockeq.theory.special import SERIES_MAX_ORDER, bessel_square_weights
from blockeq.theory.stability import n_hat, n_values

DEFAULT_TOL = 1e-14
DEGENERATE_GAP = 1e-8


def truncation_order(rho: float, t: float, tol: float = DEFAULT_TOL) -> int:
    """Number of ``B_k`` terms needed for ``sum rho^k B_k`` to reach ``tol``.

    ``B_k`` is negligible once ``k`` clears the transition region ``2t + O(t^(1/3))``;
    independently ``rho^k`` kills the tail once ``rho^k < tol (1-rho)``.
    """
    t = abs(float(t))
    k_decay = math.ceil(2 * t + 20 * (2 * t) ** (1 / 3)) + 40
    k_nominal = max(50, math.ceil(8 * t))
    k = min(k_nominal, k_decay)
    if rho < 1.0:
        k_geom = math.ceil(math.log(tol * (1 - rho) * 0.01) / math.log(rho))
        k = min(k, max(k_geom, 2))
    return k


def _weights(rho_max: float, t: float, tol: float) -> np.ndarray:
    kmax = truncation_order(rho_max, t, tol)
    if kmax > SERIES_MAX_ORDER:
        raise NotConverged(f"series at t={t}, rho={rho_max} needs {kmax} terms")
    B = bessel_square_weights(kmax, t)
    # past the cutoff the terms are dominated by a geometric tail from here
    tail = rho_max**kmax * B[-1] / max(1.0 - rho_max, 1e-300)
    if tail > tol:
        raise NotConverged(f"series tail {tail:.3e} above tol {tol:.1e} (t={t}, rho={rho_max})")
    return B


def geometric_bessel_sum(rho: float, t: float, start: int = 1, tol: float = DEFAULT_TOL) -> float:
    """``sum_{k >= start} rho^k B_k(t)`` for ``0 < rho <= 1``."""
    if not 0.0 < rho <= 1.0:
        raise OutOfRange(f"rho must lie in (0, 1], got {rho}")
    if rho == 1.0:
        # sum_k B_k = 1, so only the head is needed
        return max(0.0, 1.0 - float(bessel_square_weights(max(start - 1, 0), t)[:start].sum()))
    B = _weights(rho, t, tol)
    k = np.arange(B.size)
    return float(np.sum(B[start:] * rho ** k[start:].astype(float)))


def _check_r(r: float) -> float:
    r = float(r)
    if not 0.0 < r < 1.0:
        raise OutOfRange(f"r must lie in (0, 1), got {r}")
    return r


def integral_fraction_series(r: float, t: float, tol: float = DEFAULT_TOL) -> float:
    """Double contour integral of ``exp(it(z-z~)) m^2 / ((1-m)(1-r m))``.

    Equals ``(1 - sum_{n>=0} r^n B_{n+1}(t)) / (1-r)``.
    """
    r = _check_r(r)
    head = geometric_bessel_sum(r, t, 1, tol * (1 - r)) / r
    return (1.0 - head) / (1.0 - r)


def integral_fraction_correction(r: float, t: float, tol: float = DEFAULT_TOL) -> float:
    """``integral_fraction_series - 1/(1-r)`` without the cancellation."""
    r = _check_r(r)
    return -geometric_bessel_sum(r, t, 1, tol * (1 - r)) / (r * (1 - r))


def integral_fraction_asymptotic(r: float, t: float, threshold: float = 1.0) -> tuple[float, bool]:
    """Large-``t(1-r)`` form and its validity flag (``t(1-r) > threshold``)."""
    r = _check_r(r)
    gap = 1.0 - r
    value = 1.0 / gap - 1.0 / (math.pi * t**3 * gap**4)
    return value, bool(t * gap > threshold)


def t1_value(t: float) -> float:
    """``1 - J_1(2t)^2 / t^2``."""
    B = bessel_square_weights(1, t)
    return 1.0 - float(B[1])


def t2_series(r: float, t: float, tol: float = DEFAULT_TOL) -> float:
    """``sum_{n>=0} r^(n+1) B_{n+2}(t)``."""
    r = _check_r(r)
    return geometric_bessel_sum(r, t, 2, tol) / r


def t2_asymptotic(r: float, t: float) -> float:
    return 1.0 / (math.pi * ((1.0 - _check_r(r)) * t) ** 3)


def w12_series_2x2(lam: float, t: float, tol: float = DEFAULT_TOL) -> float:
    """``d2/N (1 - sum_{n>=0} (1-lam)^n B_{n+1}(t))`` for the two-block model."""
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise OutOfRange(f"lambda must lie in (0, 1), got {lam}")
    r = 1.0 - lam
    head = geometric_bessel_sum(r, t, 1, tol * lam) / r
    return (1.0 - head) / (1.0 + lam)


# --- two-pole sums -----------------------------------------------------------

HAT = "hat"


def _pole_sums(j, r1: float, r2: float, t: float, tol: float) -> tuple[float, float]:
    """Leading constant and ``t``-dependent part of ``A_j`` / ``A_hat``.

    Partial fractions split the integrand into geometric series in ``m``,
    ``r1 m`` and ``r2 m``; each becomes a weighted sum of ``B_k``.
    """
    r1, r2 = _check_r(r1), _check_r(r2)
    B = _weights(max(r1, r2), t, tol * min(1 - r1, 1 - r2) ** 2)
    k = np.arange(B.size, dtype=float)
    degenerate = abs(r1 - r2) < DEGENERATE_GAP
    rbar = 0.5 * (r1 + r2)

    if j == HAT:
        # m^2/((1-r1 m)(1-r2 m)) = [f(r1) - f(r2)]/(r1 - r2), f(r) = sum_{k>=2} r^(k-1) B_k
        Bk, kk = B[2:], k[2:]
        if degenerate:
            return 0.0, float(np.sum((kk - 1) * rbar ** (kk - 2) * Bk))
        f1 = np.sum(r1 ** (kk - 1) * Bk)
        f2 = np.sum(r2 ** (kk - 1) * Bk)
        return 0.0, float((f1 - f2) / (r1 - r2))

    if j not in (2, 3):
        raise OutOfRange(f"A_j defined for j in {{2, 3}} or hat, got {j!r}")
    lead = 1.0 / ((1 - r1) * (1 - r2))
    head = float(B[1:j].sum())
    Bk, kk = B[j:], k[j:]
    # g(r) = r^(2-j) S_j(r) / (1-r) with S_j(r) = sum_{k>=j} r^k B_k
    p = kk + 2 - j
    if degenerate:
        dg = np.sum(Bk * (p * rbar ** (p - 1) / (1 - rbar) + rbar**p / (1 - rbar) ** 2))
        return lead, float(-lead * head - dg)
    g1 = np.sum(Bk * r1**p) / (1 - r1)
    g2 = np.sum(Bk * r2**p) / (1 - r2)
    return lead, float(-lead * head - (g1 - g2) / (r1 - r2))


def A_series(j, r1: float, r2: float, t: float, tol: float = DEFAULT_TOL) -> float:
    """Double contour integrals ``A_2``, ``A_3`` (``j`` = 2, 3) and ``A_hat`` (``j='hat'``).

    ``A_j = oint oint e^{it(z-z~)} m^j / ((1-m)(1-r1 m)(1-r2 m))`` and
    ``A_hat = oint oint e^{it(z-z~)} m^2 / ((1-r1 m)(1-r2 m))``.
    """
    lead, varying = _pole_sums(j, r1, r2, t, tol)
    return lead + varying


def A_correction(j, r1: float, r2: float, t: float, tol: float = DEFAULT_TOL) -> float:
    """``A_series`` minus its ``t -> infinity`` limit."""
    return _pole_sums(j, r1, r2, t, tol)[1]


def A_asymptotic(j, r1: float, r2: float, t: float) -> float:
    r1, r2 = _check_r(r1), _check_r(r2)
    power = 3 if j == HAT else 4
    lead = 0.0 if j == HAT else 1.0 / ((1 - r1) * (1 - r2))
    if abs(r1 - r2) < DEGENERATE_GAP:
        rbar = 0.5 * (r1 + r2)
        diff = power / (1 - rbar) ** (power + 1)
    else:
        diff = ((1 - r1) ** -power - (1 - r2) ** -power) / (r1 - r2)
    sign = 1.0 if j == HAT else -1.0
    return lead + sign * diff / (math.pi * t**3)


# --- assembled weights ---------------------------------------------------------


def _three_block_terms(lam: float, t: float, tol: float, part: str) -> dict:
    n2, n3 = n_values(lam)
    r1, r2 = 1.0 / n2, 1.0 / n3
    a, g = 1 + lam, 1 + lam + lam**2
    pick = A_series if part == "full" else A_correction
    A2 = pick(2, r1, r2, t, tol)
    A3 = pick(3, r1, r2, t, tol)
    Ah = pick(HAT, r1, r2, t, tol)
    den = n_hat(lam) * n2 * n3
    return {
        (1, 2): -g * a * lam * ((1 + lam) * Ah + lam**2 * A2) / den,
        (1, 3): -a * g * lam**2 * A3 / den,
        (2, 3): -lam * g * (Ah + lam * (1 + lam) * A2) / den,
    }


def _dims(model: str, lam: float) -> np.ndarray:
    if model == "2x2":
        return np.array([lam, 1.0])
    if model == "3x3":
        return np.array([lam**2, lam, 1.0])
    raise OutOfRange(f"unknown model {model!r}")


def _complete(upper: dict, rel: np.ndarray) -> np.ndarray:
    """Fill a weight table from its upper triangle.

    Uses ``w_{nu mu} = (d_mu/d_nu) w_{mu nu}`` (the series are even in ``t``)
    and the row sum rule ``sum_nu w_{mu nu} = 1``.
    """
    n = rel.size
    w = np.zeros((n, n))
    for (mu, nu), value in upper.items():
        w[mu - 1, nu - 1] = value
        w[nu - 1, mu - 1] = rel[mu - 1] / rel[nu - 1] * value
    for mu in range(n):
        w[mu, mu] = 1.0 - (w[mu].sum() - w[mu, mu])
    return w


def theory_w_table(model: str, lam: float, t: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """All ``w_{mu nu}(t)`` for one model as an ``n x n`` array (0-based)."""
    lam = float(lam)
    rel = _dims(model, lam)
    if t == 0:
        return np.eye(rel.size)
    if model == "2x2":
        upper = {(1, 2): w12_series_2x2(lam, t, tol)}
    else:
        upper = _three_block_terms(lam, t, tol, "full")
    return _complete(upper, rel)


def theory_w_3x3(mu: int, nu: int, lam: float, t: float, tol: float = DEFAULT_TOL) -> float:
    """``w_{mu nu}(t)`` for the three-block model, off-diagonal pairs only."""
    if mu == nu:
        raise UnsupportedPair(f"w_{mu}{nu} is fixed by the sum rule; request the off-diagonal pairs")
    if not (1 <= mu <= 3 and 1 <= nu <= 3):
        raise UnsupportedPair(f"pair ({mu}, {nu}) outside the three-block model")
    return float(theory_w_table("3x3", lam, t, tol)[mu - 1, nu - 1])


def theory_w(model: str, mu: int, nu: int, lam: float, t: float, tol: float = DEFAULT_TOL) -> float:
    """Any ``w_{mu nu}(t)``, diagonal pairs included (via the sum rule)."""
    n = _dims(model, float(lam)).size
    if not (1 <= mu <= n and 1 <= nu <= n):
        raise UnsupportedPair(f"pair ({mu}, {nu}) outside model {model}")
    return float(theory_w_table(model, lam, t, tol)[mu - 1, nu - 1])


def theory_w_correction(model: str, mu: int, nu: int, lam: float, t: float, tol: float = DEFAULT_TOL) -> float:
    """``w_{mu nu}(t) - d_nu/N`` computed without subtracting two O(1) numbers."""
    lam = float(lam)
    rel = _dims(model, lam)
    if model == "2x2":
        upper = {(1, 2): lam * integral_fraction_correction(1 - lam, t, tol) / (1 + lam)}
    else:
        upper = _three_block_terms(lam, t, tol, "correction")
    n = rel.size
    w = np.zeros((n, n))
    for (a, b), value in upper.items():
        w[a - 1, b - 1] = value
        w[b - 1, a - 1] = rel[a - 1] / rel[b - 1] * value
    for a in range(n):
        w[a, a] = -(w[a].sum() - w[a, a])
    return float(w[mu - 1, nu - 1])


def reduced_matrix(model: str, lam: float) -> np.ndarray:
    """Row-stochastic ``S_hat[mu, nu] = s_{mu nu} d_nu`` (``delta = lambda`` for 3x3)."""
    lam = float(lam)
    if model == "2x2":
        return np.array([[1.0, lam], [lam**2, 1 + lam - lam**2]]) / (1 + lam)
    g = 1 + lam + lam**2
    s = np.array(
        [
            [1 / lam**2, 1 + lam, 0.0],
            [1 + lam, (1 - lam**3) / lam, lam],
            [0.0, lam, 1 + lam * (1 - lam) + lam**2],
        ]
    ) / g
    return s * _dims("3x3", lam)[None, :]


def w_series_reduced(S_hat: np.ndarray, mu: int, nu: int, t: float, kmax: int | None = None) -> float:
    """``sum_{k>=1} (S_hat^(k-1))_{mu nu} B_k(t)`` by repeated matrix powers.

    Independent of the pole algebra; used as a cross-check.
    """
    kmax = kmax or truncation_order(1.0, t)
    B = bessel_square_weights(kmax, t)
    power = np.eye(S_hat.shape[0])
    total = 0.0
    for k in range(1, kmax + 1):
        total += power[mu - 1, nu - 1] * B[k]
        power = power @ S_hat
    return float(total)
