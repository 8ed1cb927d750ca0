"""Large-``t lambda`` forms ``d_nu/N + sum_i c_i / (pi lambda^a_i t^3)``."""
from __future__ import annotations

import math
from dataclasses import dataclass

from blockeq.errors import UncoveredPair

VALIDITY_THRESHOLD = 10.0

# off-diagonal (mu, nu) -> [(coefficient, lambda power)]; the t power is always 3
_OFF_DIAGONAL = {
    "2x2": {
        (1, 2): [(-1.0, 3)],
        (2, 1): [(-1.0, 2)],
    },
    "3x3": {
        (1, 2): [(3.0, 3)],
        (1, 3): [(-4.0, 3)],
        (2, 3): [(-1.0, 3)],
        (2, 1): [(3.0, 2)],
        (3, 1): [(-4.0, 1)],
        (3, 2): [(-1.0, 2)],
    },
}
_SIZES = {"2x2": 2, "3x3": 3}


def _diagonal_terms(model: str, mu: int) -> list[tuple[float, int]]:
    # sum rule: w_mu,mu = 1 - sum_{nu != mu} w_mu,nu, and the equilibria sum to 1
    collected: dict[int, float] = {}
    for (a, b), terms in _OFF_DIAGONAL[model].items():
        if a != mu:
            continue
        for c, power in terms:
            collected[power] = collected.get(power, 0.0) - c
    return sorted(((c, p) for p, c in collected.items() if c != 0.0), key=lambda cp: -cp[1])


def relative_dims(model: str, lam: float) -> list[float]:
    return [lam, 1.0] if model == "2x2" else [lam**2, lam, 1.0]


@dataclass(frozen=True)
class AsymptoticPrediction:
    model: str
    kind: str
    pair: tuple[int, int]
    lam: float
    t: float
    equilibrium: float
    terms: tuple[tuple[float, int], ...]
    t_power: int = 3
    threshold: float = VALIDITY_THRESHOLD

    @property
    def coefficient(self) -> float:
        if len(self.terms) != 1:
            raise ValueError("correction has several lambda powers; inspect .terms")
        return self.terms[0][0]

    @property
    def lambda_power(self) -> int:
        if len(self.terms) != 1:
            raise ValueError("correction has several lambda powers; inspect .terms")
        return self.terms[0][1]

    @property
    def correction(self) -> float:
        return sum(c / (math.pi * self.lam**a * self.t**self.t_power) for c, a in self.terms)

    @property
    def value(self) -> float:
        return self.equilibrium + self.correction

    @property
    def valid(self) -> bool:
        return self.t * self.lam > self.threshold


def asymptotic_prediction(
    model: str, kind: str, mu: int, nu: int, lam: float, t: float, threshold: float = VALIDITY_THRESHOLD
) -> AsymptoticPrediction:
    """Leading large-time behaviour of ``w_{mu nu}(t)`` (``kind='w'``) or of the
    state occupation ``||P_nu psi_t||^2`` with ``psi_0`` in macro space ``mu``
    (``kind='state'``). Both share the same deterministic approximation.
    """
    if model not in _SIZES:
        raise UncoveredPair(f"unknown model {model!r}")
    if kind not in ("w", "state"):
        raise ValueError(f"kind must be 'w' or 'state', got {kind!r}")
    n = _SIZES[model]
    if not (1 <= mu <= n and 1 <= nu <= n):
        raise UncoveredPair(f"pair ({mu}, {nu}) not covered for model {model}")
    terms = _diagonal_terms(model, mu) if mu == nu else _OFF_DIAGONAL[model][(mu, nu)]
    rel = relative_dims(model, float(lam))
    return AsymptoticPrediction(
        model, kind, (mu, nu), float(lam), float(t), rel[nu - 1] / sum(rel), tuple(terms), 3, threshold
    )


def approach_direction(model: str, mu: int, nu: int) -> int:
    """Sign of ``w_{mu nu}(t) - d_nu/N`` at large ``t``: -1 below, +1 above."""
    pred = asymptotic_prediction(model, "w", mu, nu, 0.1, 1.0)
    lead_power = max(p for _, p in pred.terms)
    lead = sum(c for c, p in pred.terms if p == lead_power)
    return 1 if lead > 0 else -1
