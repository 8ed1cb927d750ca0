"""Closed forms for sums over products of Bessel functions (Graf's addition theorem)."""
from __future__ import annotations

from blockeq.errors import OddOffset, OutOfRange
from blockeq.theory.special import bessel_j, bessel_j_sequence

KINDS = ("prod0", "shifted", "offset")


def _prod0(x: float, y: float) -> float:
    # sum_{n>=0} (-1)^n J_n(x) J_n(y)
    return 0.5 * (bessel_j(0, x) * bessel_j(0, y) + bessel_j(0, abs(x + y)))


def _shifted(p: int, x: float) -> float:
    # sum_{k>=p} J_k(x)^2
    if p < 1:
        raise OutOfRange(f"shifted sum needs p >= 1, got {p}")
    J = bessel_j_sequence(max(p - 1, 0), x)
    return 0.5 * (1.0 - J[0] ** 2) - float((J[1:p] ** 2).sum())


def _offset(q: int, x: float) -> float:
    # sum_{n>=0} i^{-(2n+q)} J_{n+q}(x) J_n(-x)
    if q % 2:
        raise OddOffset(f"offset sum needs an even q, got {q}")
    if q < 2:
        raise OutOfRange(f"offset sum needs q >= 2, got {q}")
    J = bessel_j_sequence(q, x)
    total = 1j ** (-q) * J[q] * J[0]
    for k in range(q):
        total -= 1j ** (-(2 * k - q)) * J[k] * bessel_j(k - q, -x)
    return float((0.5 * total).real)


def graf_sum(kind: str, *params) -> float:
    """Closed form of one of three Bessel product sums.

    ``prod0(x, y)``: ``sum_{n>=0} (-1)^n J_n(x) J_n(y)``.
    ``shifted(p, x)``: ``sum_{n>=0} (-1)^(n+p) J_{n+p}(x) J_{n+p}(-x)``, i.e. ``sum_{k>=p} J_k(x)^2``.
    ``offset(q, x)``: ``sum_{n>=0} i^{-(2n+q)} J_{n+q}(x) J_n(-x)`` for even ``q >= 2``.
    """
    if kind == "prod0":
        x, y = params
        return float(_prod0(float(x), float(y)))
    if kind == "shifted":
        p, x = params
        return float(_shifted(int(p), float(x)))
    if kind == "offset":
        q, x = params
        return _offset(int(q), float(x))
    raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
