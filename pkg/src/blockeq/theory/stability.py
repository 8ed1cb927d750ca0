"""Block-constant inverses of the two-body stability operator ``1 - m m~ S``.

Both band models have a block-constant variance matrix ``S``, so the inverse
is ``1 + sum_{mu,nu} b_{mu nu} E_{mu nu}`` with ``E_{mu nu}`` the all-ones
block. The ``b`` coefficients carry a ``1/D`` that is applied when the
inverse is materialised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from blockeq.errors import NearPole, OutOfRange
from blockeq.theory.special import m_sc

POLE_DISTANCE = 1e-10


@dataclass(frozen=True)
class SpectralPair:
    z: complex
    z_tilde: complex
    m: complex
    m_tilde: complex

    @property
    def frak_m(self) -> complex:
        return self.m * self.m_tilde


def spectral_pair(z, z_tilde) -> SpectralPair:
    """Evaluate ``m_sc`` at both spectral parameters (both must be off the cut)."""
    return SpectralPair(complex(z), complex(z_tilde), m_sc(z), m_sc(z_tilde))


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise OutOfRange(f"lambda must lie in (0, 1), got {lam}")
    return lam


def _frak(pair_or_m) -> complex:
    if isinstance(pair_or_m, SpectralPair):
        return pair_or_m.frak_m
    return complex(pair_or_m)


def _expand_blocks(coeff: np.ndarray, dims: list[int]) -> np.ndarray:
    """N x N matrix with block (mu, nu) filled by ``coeff[mu, nu]``."""
    index = np.repeat(np.arange(len(dims)), dims)
    return coeff[np.ix_(index, index)]


@dataclass(frozen=True)
class StabilityBlocks2:
    """Inverse for the two-block model.

    ``b_{mu nu} = scale * entries[mu, nu] / D``.
    """

    lam: float
    frak_m: complex
    scale: complex
    entries: np.ndarray

    def prefactor(self, D: int) -> complex:
        return self.scale / D

    def coefficients(self, D: int) -> np.ndarray:
        return self.scale * self.entries / D

    def dims(self, D: int) -> list[int]:
        return [round(self.lam * D), int(D)]

    def materialize(self, D: int) -> np.ndarray:
        dims = self.dims(D)
        return np.eye(sum(dims), dtype=complex) + _expand_blocks(self.coefficients(D), dims)

    def two_resolvent_value(self, mu: int, nu: int) -> complex:
        """``<P_mu M(z, P_nu, z~)>`` with ``M = m m~ B^{-1}[P_nu]``; indices are 1-based."""
        return _two_resolvent(self, np.array([self.lam, 1.0]), mu, nu)


@dataclass(frozen=True)
class StabilityBlocks3:
    """Inverse for the three-block model with ``delta = lambda``.

    ``b_{mu nu} = -b_hat[mu, nu] / (D n_hat n2 n3 (1-m)(1-m/n2)(1-m/n3))``.
    """

    lam: float
    frak_m: complex
    alpha: float
    beta: float
    gamma: float
    n2: float
    n3: float
    n_hat: float
    R: complex
    b_hat: np.ndarray

    @property
    def denominator(self) -> complex:
        m = self.frak_m
        return self.n_hat * self.n2 * self.n3 * (1 - m) * (1 - m / self.n2) * (1 - m / self.n3)

    def coefficients(self, D: int) -> np.ndarray:
        return -self.b_hat / (D * self.denominator)

    def dims(self, D: int) -> list[int]:
        return [round(self.lam**2 * D), round(self.lam * D), int(D)]

    def materialize(self, D: int) -> np.ndarray:
        dims = self.dims(D)
        return np.eye(sum(dims), dtype=complex) + _expand_blocks(self.coefficients(D), dims)

    def two_resolvent_value(self, mu: int, nu: int) -> complex:
        return _two_resolvent(self, np.array([self.lam**2, self.lam, 1.0]), mu, nu)


def _two_resolvent(blocks, rel_dims: np.ndarray, mu: int, nu: int) -> complex:
    # <P_mu M> = (d_mu/N) m [delta_{mu nu} + d_nu b_{mu nu}], D cancels
    i, j = mu - 1, nu - 1
    coeff = blocks.coefficients(1)
    frac_mu = rel_dims[i] / rel_dims.sum()
    inner = (1.0 if i == j else 0.0) + rel_dims[j] * coeff[i, j]
    return frac_mu * blocks.frak_m * inner


def stability_inverse_2x2(pair, lam: float) -> StabilityBlocks2:
    lam = _check_lambda(lam)
    m = _frak(pair)
    if abs(1 - m) <= POLE_DISTANCE or abs(1 - (1 - lam) * m) <= POLE_DISTANCE:
        raise NearPole(f"frak_m={m} too close to a pole of the 2x2 inverse")
    scale = m / ((1 + lam) * (1 - m) * (1 - (1 - lam) * m))
    entries = np.array(
        [
            [(1 - m + lam**2 * m) / lam, lam],
            [lam, 1 + lam - lam**2 - m + lam**2 * m],
        ],
        dtype=complex,
    )
    return StabilityBlocks2(lam, m, scale, entries)


def n_values(lam: float) -> tuple[float, float]:
    """Non-trivial poles ``n2 < n3`` of the three-block inverse (``delta = lambda``)."""
    lam = _check_lambda(lam)
    den = 2.0 * (1.0 - lam - lam**2)
    if abs(den) < 1e-12:
        raise OutOfRange(f"n-values undefined at lambda={lam}")
    root = math.sqrt((1 + lam) * (4 * lam**3 + lam**4 + lam**5))
    base = 2.0 - lam**2 - lam**3
    return (base - root) / den, (base + root) / den


def n_hat(lam: float) -> float:
    a, b, g = 1 + lam, 1 - lam**3, 1 + lam + lam**2
    return a * lam**3 * (g + lam) + lam**3 - a * b


def stability_inverse_3x3(pair, lam: float) -> StabilityBlocks3:
    lam = _check_lambda(lam)
    m = _frak(pair)
    n2, n3 = n_values(lam)
    for pole in (1.0, n2, n3):
        if abs(m - pole) <= POLE_DISTANCE:
            raise NearPole(f"frak_m={m} too close to pole {pole}")
    a, b, g = 1 + lam, 1 - lam**3, 1 + lam + lam**2
    R = (g - m * b) * (g - m) - (m * a) ** 2 * lam**3
    inner = R * (g - m * a) - m**2 * lam**3 * (g - m)

    b11 = ((m / lam**2) * inner + m**2 * a**2 * lam * g * (g - m * a)) / (g - m)
    b12 = m * a * g * (g - m * a)
    b13 = m**2 * a * lam**2 * g
    b22 = ((m * b / lam * (g - m) + (m * a * lam) ** 2) * inner + m**2 * lam**2 * g * (g - m) ** 2) / R
    b23 = m * lam * g * (g - m)
    b33 = m * a * ((g - m) * (g - m * b) - (m * a) ** 2 * lam**3) + m**2 * lam**3 * (g - m)
    b_hat = np.array([[b11, b12, b13], [b12, b22, b23], [b13, b23, b33]], dtype=complex)
    return StabilityBlocks3(lam, m, a, b, g, n2, n3, n_hat(lam), R, b_hat)
