"""Exact finite-N dynamics from one eigendecomposition per sample.

With ``H = U diag(e) U^H`` every quantity is a phase-invariant combination
of eigenvector overlaps:

* ``||P_nu psi_t||^2 = ||U_nu (c * exp(-i e t))||^2`` with ``c = U^H psi_0``;
* ``w_{mu nu}(t) = d_mu^-1 phi^T (conj(A_mu) * A_nu) conj(phi)`` with
  ``A_mu = U_mu^H U_mu`` and ``phi = exp(i e t)``;
* ``M_{mu nu} = d_mu^-1 sum_j ||P_mu u_j||^2 ||P_nu u_j||^2`` for a simple spectrum.

``U_mu`` denotes the rows of ``U`` in macro space ``mu``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from blockeq.ensemble import STATE_STREAM, HamiltonianSample, MacroDecomposition, stream
from blockeq.errors import ConvergenceFailure, EmptyGrid

CSV_HEADER = ["t", "mean", "stderr", "trials", "mu", "nu", "mode"]


@dataclass(frozen=True)
class EigenSystem:
    values: np.ndarray
    vectors: np.ndarray = field(repr=False)
    decomp: MacroDecomposition | None = None
    seed: int | None = None

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.vectors)

    def rows(self, mu: int) -> np.ndarray:
        return self.vectors[self.decomp.slice(mu)]

    def dim(self, mu: int) -> int:
        return self.decomp.dims[mu - 1]


def eigendecompose(sample, decomp: MacroDecomposition | None = None) -> EigenSystem:
    """Ascending eigenvalues and orthonormal eigenvectors of a Hermitian matrix.

    Accepts a ``HamiltonianSample`` or a bare array (then ``decomp`` is used
    if given).
    """
    seed = None
    if isinstance(sample, HamiltonianSample):
        H, decomp, seed = sample.matrix, sample.profile.decomp, sample.seed
    else:
        H = np.asarray(sample)
    # MRRR for complex input, divide and conquer for real: fastest LAPACK paths here
    driver = "evr" if np.iscomplexobj(H) else "evd"
    try:
        values, vectors = scipy.linalg.eigh(H, driver=driver, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(f"eigendecomposition failed: {exc}") from exc
    # row blocks U_mu must be contiguous or matmul leaves the BLAS fast path
    return EigenSystem(values, np.ascontiguousarray(vectors), decomp, seed)


def haar_state(decomp: MacroDecomposition, mu: int, seed: int) -> np.ndarray:
    """Uniform random unit vector of the complex sphere of macro space ``mu``."""
    rng = stream(seed, STATE_STREAM, mu)
    d = decomp.dims[mu - 1]
    g = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi = np.zeros(decomp.N, dtype=complex)
    psi[decomp.slice(mu)] = g / np.linalg.norm(g)
    return psi


def _rows_times(rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``rows @ x`` without promoting a real ``rows`` to complex."""
    if np.iscomplexobj(rows) or not np.iscomplexobj(x):
        return rows @ x
    # .real/.imag are strided views; copy so the product stays in BLAS
    return rows @ np.ascontiguousarray(x.real) + 1j * (rows @ np.ascontiguousarray(x.imag))


def evolve(eig: EigenSystem, psi0: np.ndarray, t: float) -> np.ndarray:
    c = eig.vectors.conj().T @ psi0
    return eig.vectors @ (c * np.exp(-1j * eig.values * t))


def macro_weight(eig: EigenSystem, psi0: np.ndarray, nu: int, t: float) -> float:
    """``||P_nu exp(-iHt) psi_0||^2``."""
    c = eig.vectors.conj().T @ psi0
    piece = _rows_times(eig.rows(nu), c * np.exp(-1j * eig.values * t))
    return float(np.vdot(piece, piece).real)


def w_pair(eig: EigenSystem, mu: int, nu: int, t: float) -> float:
    """``d_mu^-1 tr[P_mu exp(iHt) P_nu exp(-iHt)]`` as a Frobenius norm."""
    block = _rows_times(eig.rows(nu), np.exp(-1j * eig.values * t)[:, None] * eig.rows(mu).conj().T)
    return float(np.vdot(block, block).real / eig.dim(mu))


def overlap_matrices(eig: EigenSystem) -> list[np.ndarray]:
    """``A_mu = U_mu^H U_mu`` for every macro space; the largest one comes from ``sum A = I``."""
    n = len(eig.decomp.dims)
    big = int(np.argmax(eig.decomp.dims)) + 1
    A: list[np.ndarray | None] = [None] * n
    rest = np.eye(eig.N, dtype=eig.vectors.dtype)
    for mu in range(1, n + 1):
        if mu == big:
            continue
        U = eig.rows(mu)
        A[mu - 1] = U.conj().T @ U
        rest -= A[mu - 1]
    A[big - 1] = rest
    return A


def _quadratic_form(F: np.ndarray, values: np.ndarray, times: np.ndarray, chunk: int = 64) -> np.ndarray:
    """``phi(t)^T F conj(phi(t))`` with ``phi = exp(i e t)``, for Hermitian ``F``."""
    out = np.empty(times.size)
    for start in range(0, times.size, chunk):
        tt = times[start : start + chunk]
        arg = np.outer(tt, values)
        if np.iscomplexobj(F):
            phi = np.exp(1j * arg)
            out[start : start + chunk] = np.einsum("tj,tj->t", phi @ F, phi.conj()).real
        else:
            # real symmetric F: cross terms cancel
            c, s = np.cos(arg), np.sin(arg)
            out[start : start + chunk] = np.einsum("tj,tj->t", c @ F, c) + np.einsum("tj,tj->t", s @ F, s)
    return out


def trace_curves(eig: EigenSystem, pairs, times, overlaps=None) -> dict:
    """``w_{mu nu}`` on a time grid for several pairs, reusing the overlap matrices."""
    times = np.asarray(times, dtype=float)
    A = overlaps if overlaps is not None else overlap_matrices(eig)
    out = {}
    for mu, nu in pairs:
        F = A[mu - 1].conj() * A[nu - 1]
        out[(mu, nu)] = _quadratic_form(F, eig.values, times) / eig.dim(mu)
    return out


def state_curves(eig: EigenSystem, psi0: np.ndarray, nus, times, chunk: int = 64) -> dict:
    """``||P_nu psi_t||^2`` on a time grid for several target spaces."""
    times = np.asarray(times, dtype=float)
    c = eig.vectors.conj().T @ psi0
    out = {nu: np.empty(times.size) for nu in nus}
    for start in range(0, times.size, chunk):
        tt = times[start : start + chunk]
        X = c[:, None] * np.exp(-1j * np.outer(eig.values, tt))
        for nu in nus:
            Y = _rows_times(eig.rows(nu), X)
            out[nu][start : start + chunk] = np.einsum("it,it->t", Y.conj(), Y).real
    return out


def eigen_clusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Runs of consecutive eigenvalues whose gaps are at most ``tol * max(1, |e|)``."""
    if values.size == 0:
        return []
    gaps = np.diff(values)
    scale = np.maximum(1.0, np.abs(values[1:]))
    breaks = np.nonzero(gaps > tol * scale)[0] + 1
    return np.split(np.arange(values.size), breaks)


def time_average_M(eig: EigenSystem, mu: int, nu: int, degeneracy_tol: float = 0.0) -> float:
    """Infinite time average of ``w_{mu nu}``: ``d_mu^-1 sum_e tr(Pi_e P_mu Pi_e P_nu)``."""
    if degeneracy_tol < 0:
        raise ValueError("degeneracy_tol must be non-negative")
    Umu, Unu = eig.rows(mu), eig.rows(nu)
    total = 0.0
    if degeneracy_tol == 0.0:
        a_mu = np.sum(np.abs(Umu) ** 2, axis=0)
        a_nu = np.sum(np.abs(Unu) ** 2, axis=0)
        total = float(a_mu @ a_nu)
    else:
        for cl in eigen_clusters(eig.values, degeneracy_tol):
            G_mu = Umu[:, cl].conj().T @ Umu[:, cl]
            G_nu = Unu[:, cl].conj().T @ Unu[:, cl]
            total += float(np.sum(G_mu.conj() * G_nu).real)
    return total / eig.dim(mu)


def time_average_table(eig: EigenSystem, degeneracy_tol: float = 0.0) -> np.ndarray:
    n = len(eig.decomp.dims)
    return np.array([[time_average_M(eig, a, b, degeneracy_tol) for b in range(1, n + 1)] for a in range(1, n + 1)])


# --- aggregation ---------------------------------------------------------------


class Accumulator:
    """Mergeable running statistics: count, sum and centred sum of squares.

    Merging uses the pairwise update for the centred second moment, so
    identical inputs give exactly zero spread.
    """

    def __init__(self, size: int):
        self.count = 0
        self.total = np.zeros(size)
        self._mean = np.zeros(size)
        self.m2 = np.zeros(size)

    def add(self, values) -> "Accumulator":
        values = np.asarray(values, dtype=float)
        self.count += 1
        delta = values - self._mean
        self._mean = self._mean + delta / self.count
        self.m2 = self.m2 + delta * (values - self._mean)
        self.total = self.total + values
        return self

    def merge(self, other: "Accumulator") -> "Accumulator":
        out = Accumulator(self.total.size)
        n = self.count + other.count
        out.count = n
        out.total = self.total + other.total
        if n == 0:
            return out
        delta = other._mean - self._mean
        out._mean = out.total / n
        out.m2 = self.m2 + other.m2 + delta**2 * self.count * other.count / n
        return out

    @property
    def mean(self) -> np.ndarray:
        if self.count == 0:
            return np.full(self.total.size, np.nan)
        return self.total / self.count

    @property
    def stderr(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros(self.total.size)
        var = np.maximum(self.m2, 0.0) / (self.count - 1)
        return np.sqrt(var / self.count)


@dataclass
class CurveSeries:
    times: np.ndarray
    pair: tuple[int, int]
    mode: str
    mean: np.ndarray
    stderr: np.ndarray
    trials: int

    @property
    def insufficient(self) -> bool:
        return self.trials < 2

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        mu, nu = self.pair
        for t, m, s in zip(self.times, self.mean, self.stderr):
            writer.writerow([repr(float(t)), repr(float(m)), repr(float(s)), self.trials, mu, nu, self.mode])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CurveSeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise EmptyGrid("CSV has no data rows")
        first = rows[0]
        return cls(
            np.array([float(r["t"]) for r in rows]),
            (int(first["mu"]), int(first["nu"])),
            first["mode"],
            np.array([float(r["mean"]) for r in rows]),
            np.array([float(r["stderr"]) for r in rows]),
            int(first["trials"]),
        )


def check_grid(times) -> np.ndarray:
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0:
        raise EmptyGrid("time grid is empty")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if not np.all(np.isfinite(times)):
        raise ValueError("time grid must be finite")
    return times


def series_from_accumulator(acc: Accumulator, times, pair, mode: str) -> CurveSeries:
    return CurveSeries(np.asarray(times, dtype=float), tuple(pair), mode, acc.mean, acc.stderr, acc.count)


def curve(eigs, mu: int, nu: int, times, mode: str = "trace", states=None) -> CurveSeries:
    """Trial-averaged curve over a set of eigensystems.

    ``mode='trace'`` averages ``w_{mu nu}``; ``mode='state'`` averages
    ``||P_nu psi_t||^2`` with one ``psi_0`` in macro space ``mu`` per trial
    (``states`` if given, otherwise drawn from each system's seed).
    """
    times = check_grid(times)
    if mode not in ("trace", "state"):
        raise ValueError(f"mode must be 'trace' or 'state', got {mode!r}")
    acc = Accumulator(times.size)
    for i, eig in enumerate(eigs):
        if mode == "trace":
            acc.add(trace_curves(eig, [(mu, nu)], times)[(mu, nu)])
        else:
            psi0 = states[i] if states is not None else haar_state(eig.decomp, mu, eig.seed or 0)
            acc.add(state_curves(eig, psi0, [nu], times)[nu])
    return series_from_accumulator(acc, times, (mu, nu), mode)


def spectrum_within(eig: EigenSystem, bound: float) -> bool:
    return bool(eig.values[0] >= -bound and eig.values[-1] <= bound)


def unit_norm(psi: np.ndarray) -> float:
    return abs(math.sqrt(float(np.vdot(psi, psi).real)) - 1.0)
