"""Quick structural checks run by ``blockeq verify``.

Each check compares a production routine against an independent route
(direct sums, quadrature, explicit matrices, matrix exponentials).
"""
from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.special import jv

from blockeq.dynamics import eigendecompose, haar_state, macro_weight, trace_curves
from blockeq.ensemble import build_profile_2x2, build_profile_3x3, dyson_residual, expand_variance_matrix, sample_hamiltonian
from blockeq.experiments import Criterion
from blockeq.theory.contour import contour_msc_power_closed, contour_msc_power_quadrature
from blockeq.theory.graf import graf_sum
from blockeq.theory.special import m_sc
from blockeq.theory.stability import spectral_pair, stability_inverse_2x2, stability_inverse_3x3

SPECTRAL_POINTS = [0.5 + 0.8j, -1.5 + 0.1j, 2.5 + 0.01j, 0.0 + 3.0j, -3.0 - 0.5j, 1.0 - 1.0j, 0.1 + 0.05j, -0.7 - 2.0j, 4.0 + 1e-3j, 1.9 - 0.2j]


def _graf_lhs(kind: str, a, x, y=None) -> float:
    total, n = 0.0, 0
    while True:
        if kind == "prod0":
            term = (-1) ** n * jv(n, a) * jv(n, y)
        elif kind == "shifted":
            term = (-1) ** (n + a) * jv(n + a, x) * jv(n + a, -x)
        else:
            term = (1j ** (-(2 * n + a)) * jv(n + a, x) * jv(n, -x)).real
        total += term
        n += 1
        if n > abs(x if y is None else max(abs(a), abs(y))) + 30 and abs(term) < 1e-16:
            return total


def check_dyson() -> Criterion:
    worst = 0.0
    for prof in (build_profile_2x2(0.2, 40), build_profile_3x3(0.5, 0.5, 8)):
        for z in SPECTRAL_POINTS:
            worst = max(worst, dyson_residual(prof, z, expanded=True))
    return Criterion("dyson_residual", worst < 1e-12, worst, 1e-12)


def check_graf(seed: int = 0) -> Criterion:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        x, y = rng.uniform(-20, 20, 2)
        worst = max(worst, abs(graf_sum("prod0", x, y) - _graf_lhs("prod0", x, x, y)))
        for p in range(1, 6):
            worst = max(worst, abs(graf_sum("shifted", p, x) - _graf_lhs("shifted", p, x)))
        for q in (2, 4, 6):
            worst = max(worst, abs(graf_sum("offset", q, x) - _graf_lhs("offset", q, x)))
    return Criterion("graf_identities", worst < 1e-10, worst, 1e-10)


def check_contour() -> Criterion:
    worst = 0.0
    for n in range(1, 13):
        for t in (0.0, 0.5, 1.0, 3.0, 10.0):
            worst = max(worst, abs(contour_msc_power_closed(n, t) - contour_msc_power_quadrature(n, t)))
    return Criterion("contour_closed_vs_quadrature", worst < 1e-8, worst, 1e-8)


def _random_off_cut(rng) -> complex:
    sign = rng.choice([-1.0, 1.0])
    return complex(rng.uniform(-3, 3), sign * rng.uniform(0.05, 1.0))


def check_stability(seed: int = 0) -> Criterion:
    rng = np.random.default_rng(seed)
    worst = 0.0
    cases = [("2x2", 0.2, 30), ("2x2", 0.2, 40), ("3x3", 0.2, 25), ("3x3", 0.5, 40)]
    for model, lam, D in cases:
        prof = build_profile_2x2(lam, D) if model == "2x2" else build_profile_3x3(lam, lam, D)
        S = expand_variance_matrix(prof)
        for _ in range(20):
            pair = spectral_pair(_random_off_cut(rng), _random_off_cut(rng))
            inv = (stability_inverse_2x2 if model == "2x2" else stability_inverse_3x3)(pair, lam).materialize(D)
            B = np.eye(prof.N) - pair.frak_m * S
            worst = max(worst, float(np.max(np.abs(B @ inv - np.eye(prof.N)))))
    return Criterion("stability_inverse", worst <= 1e-10, worst, 1e-10)


def check_branch() -> Criterion:
    worst = 0.0
    ok = True
    for z in SPECTRAL_POINTS:
        m = m_sc(z)
        worst = max(worst, abs(m * m + z * m + 1))
        ok &= (z.imag > 0) == (m.imag > 0) and abs(m_sc(z.conjugate()) - m.conjugate()) < 1e-15
    return Criterion("m_sc_branch", ok and worst < 1e-12, worst, 1e-12)


def check_sum_rules(seed: int = 0) -> Criterion:
    worst = 0.0
    times = np.linspace(0.0, 10.0, 11)
    for prof in (build_profile_2x2(0.2, 50), build_profile_3x3(0.2, 0.2, 50)):
        eig = eigendecompose(sample_hamiltonian(prof, seed))
        n = len(prof.dims)
        pairs = [(a, b) for a in range(1, n + 1) for b in range(1, n + 1)]
        fwd = trace_curves(eig, pairs, times)
        back = trace_curves(eig, pairs, -times)
        for a in range(1, n + 1):
            worst = max(worst, float(np.max(np.abs(sum(fwd[(a, b)] for b in range(1, n + 1)) - 1))))
            for b in range(1, n + 1):
                ratio = prof.dims[b - 1] / prof.dims[a - 1]
                worst = max(worst, float(np.max(np.abs(fwd[(a, b)] - ratio * back[(b, a)]))))
    return Criterion("w_sum_rules", worst <= 1e-12, worst, 1e-12)


def check_bruteforce(seed: int = 0) -> Criterion:
    prof = build_profile_2x2(0.5, 8)
    sample = sample_hamiltonian(prof, seed)
    eig = eigendecompose(sample)
    psi0 = haar_state(prof.decomp, 1, seed)
    worst = 0.0
    for t in (0.1, 1.0, 5.0, 25.0):
        psi_t = scipy.linalg.expm(-1j * t * sample.matrix) @ psi0
        for nu in (1, 2):
            exact = float(np.sum(np.abs(psi_t[prof.decomp.slice(nu)]) ** 2))
            worst = max(worst, abs(exact - macro_weight(eig, psi0, nu, t)))
    return Criterion("expm_equivalence", worst <= 1e-10, worst, 1e-10)


CHECKS = {
    "dyson_residual": check_dyson,
    "graf_identities": check_graf,
    "contour_closed_vs_quadrature": check_contour,
    "stability_inverse": check_stability,
    "m_sc_branch": check_branch,
    "w_sum_rules": check_sum_rules,
    "expm_equivalence": check_bruteforce,
}


def run_suite(names=None) -> list[Criterion]:
    return [CHECKS[name]() for name in (names or CHECKS)]
