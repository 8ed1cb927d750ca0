"""Block variance profiles and Hermitian random matrices drawn from them."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from blockeq.errors import CapExceeded, NegativeVariance, NonIntegerDimension, OutOfRange, ProfileError
from blockeq.theory.special import m_sc

EXPAND_CAP = 10_000
_INT_TOL = 1e-9


class Model(str, enum.Enum):
    TWO = "2x2"
    THREE = "3x3"


class EntryLaw(str, enum.Enum):
    COMPLEX = "complex_gaussian"
    REAL = "real_gaussian"

    @classmethod
    def parse(cls, value) -> "EntryLaw":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"complexgaussian": cls.COMPLEX, "complex": cls.COMPLEX, "realgaussian": cls.REAL, "real": cls.REAL}
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class MacroDecomposition:
    dims: tuple[int, ...]

    def __post_init__(self):
        if len(self.dims) not in (2, 3) or any(int(d) != d or d < 1 for d in self.dims):
            raise ProfileError(f"macro dimensions must be 2 or 3 positive integers, got {self.dims}")

    @property
    def N(self) -> int:
        return int(sum(self.dims))

    @property
    def ranges(self) -> list[tuple[int, int]]:
        edges = np.concatenate([[0], np.cumsum(self.dims)])
        return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]

    def block_of(self) -> np.ndarray:
        """Macro index (0-based) of every basis vector."""
        return np.repeat(np.arange(len(self.dims)), self.dims)

    def slice(self, mu: int) -> slice:
        """Index range of macro space ``mu`` (1-based)."""
        a, b = self.ranges[mu - 1]
        return slice(a, b)


@dataclass(frozen=True)
class VarianceProfile:
    model: Model
    lam: float
    D: int
    decomp: MacroDecomposition
    blocks: np.ndarray = field(repr=False)
    delta: float | None = None

    @property
    def N(self) -> int:
        return self.decomp.N

    @property
    def dims(self) -> tuple[int, ...]:
        return self.decomp.dims

    def block_variance(self, mu: int, nu: int) -> float:
        """Entry variance ``s_{mu nu}`` inside block (mu, nu), 1-based."""
        return float(self.blocks[mu - 1, nu - 1])

    def reduced_matrix(self) -> np.ndarray:
        """Row-stochastic ``s_{mu nu} d_nu``."""
        return self.blocks * np.asarray(self.dims, dtype=float)[None, :]

    def to_dict(self) -> dict:
        out = {"model": self.model.value, "lambda": repr(self.lam), "D": str(self.D)}
        if self.delta is not None:
            out["delta"] = repr(self.delta)
        return out


def _as_int(value: float, what: str) -> int:
    k = round(value)
    if abs(value - k) > _INT_TOL * max(1.0, abs(value)):
        raise NonIntegerDimension(f"{what} = {value!r} is not an integer")
    return int(k)


def _check_common(lam: float, D) -> tuple[float, int]:
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise OutOfRange(f"lambda must lie in (0, 1), got {lam}")
    if int(D) != D or D < 1:
        raise OutOfRange(f"D must be a positive integer, got {D}")
    return lam, int(D)


def build_profile_2x2(lam: float, D: int) -> VarianceProfile:
    lam, D = _check_common(lam, D)
    d1 = _as_int(lam * D, "lambda*D")
    if d1 < 1:
        raise NonIntegerDimension(f"lambda*D = {lam * D} gives an empty macro space")
    N = d1 + D
    blocks = np.array(
        [
            [1.0 / (N * lam), lam / N],
            [lam / N, (1 + lam - lam**2) / N],
        ]
    )
    return VarianceProfile(Model.TWO, lam, D, MacroDecomposition((d1, D)), blocks)


def build_profile_3x3(lam: float, delta: float, D: int) -> VarianceProfile:
    lam, D = _check_common(lam, D)
    delta = float(delta)
    if delta < 0:
        raise NegativeVariance(f"delta must be non-negative, got {delta}")
    d1 = _as_int(lam**2 * D, "lambda^2*D")
    d2 = _as_int(lam * D, "lambda*D")
    if d1 < 1:
        raise NonIntegerDimension(f"lambda^2*D = {lam**2 * D} gives an empty macro space")
    N = d1 + d2 + D
    s22 = (1 + lam - lam**3 - delta) / (lam * N)
    s33 = (1 + lam * (1 - delta) + lam**2) / N
    if s22 < 0 or s33 < 0:
        raise NegativeVariance(f"delta={delta} makes a block variance negative at lambda={lam}")
    blocks = np.array(
        [
            [1.0 / (lam**2 * N), (1 + lam) / N, 0.0],
            [(1 + lam) / N, s22, delta / N],
            [0.0, delta / N, s33],
        ]
    )
    return VarianceProfile(Model.THREE, lam, D, MacroDecomposition((d1, d2, D)), blocks, delta)


def build_profile(model, lam: float, D: int, delta: float | None = None) -> VarianceProfile:
    model = Model(model)
    if model is Model.TWO:
        return build_profile_2x2(lam, D)
    return build_profile_3x3(lam, lam if delta is None else delta, D)


def profile_from_dict(values: dict) -> VarianceProfile:
    """Inverse of ``VarianceProfile.to_dict`` (extra keys are ignored)."""
    delta = values.get("delta")
    return build_profile(
        values["model"], float(values["lambda"]), int(values["D"]), None if delta in (None, "") else float(delta)
    )


def expand_variance_matrix(profile: VarianceProfile, cap: int = EXPAND_CAP) -> np.ndarray:
    """Full ``N x N`` matrix ``S[i, j] = s_{mu(i) nu(j)}``."""
    if profile.N > cap:
        raise CapExceeded(f"N={profile.N} exceeds the expansion cap {cap}")
    idx = profile.decomp.block_of()
    return profile.blocks[np.ix_(idx, idx)]


def dyson_residual(profile: VarianceProfile, z: complex, expanded: bool = False) -> float:
    """``max_j |1/m_j + z + sum_k S_jk m_k|`` at the constant solution ``m_j = m_sc(z)``."""
    m = m_sc(z)
    if expanded:
        S = expand_variance_matrix(profile)
        mvec = np.full(profile.N, m)
        return float(np.max(np.abs(1.0 / mvec + z + S @ mvec)))
    row = profile.reduced_matrix().sum(axis=1)
    return float(np.max(np.abs(1.0 / m + z + row * m)))


# --- sampling ------------------------------------------------------------------

SAMPLE_STREAM = 0
STATE_STREAM = 1


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key)``; keys separate sample and state draws."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True)
class HamiltonianSample:
    matrix: np.ndarray = field(repr=False)
    profile: VarianceProfile
    seed: int
    entry_law: EntryLaw


def _sigma_table(profile: VarianceProfile) -> np.ndarray:
    return np.sqrt(profile.blocks)


def sample_hamiltonian(profile: VarianceProfile, seed: int, entry_law=EntryLaw.COMPLEX) -> HamiltonianSample:
    """Hermitian draw with independent centred Gaussian entries of variance ``s_{mu nu}``.

    Only the upper triangle is drawn and mirrored. Complex law: off-diagonal
    entries ``sqrt(s/2)(g1 + i g2)``; the diagonal is real with variance
    ``s``. Real law: real symmetric with variance ``s`` everywhere.
    """
    law = EntryLaw.parse(entry_law)
    rng = stream(seed, SAMPLE_STREAM)
    N = profile.N
    sig = _sigma_table(profile)
    ranges = profile.decomp.ranges

    if law is EntryLaw.REAL:
        H = rng.standard_normal((N, N))
    else:
        H = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        H *= math.sqrt(0.5)
    for i, (a, b) in enumerate(ranges):
        for j, (c, d) in enumerate(ranges):
            if j >= i:
                H[a:b, c:d] *= sig[i, j]
    H = np.triu(H, 1)
    diag = rng.standard_normal(N) * sig[profile.decomp.block_of(), profile.decomp.block_of()]
    H = H + H.conj().T
    H[np.diag_indices(N)] = diag
    return HamiltonianSample(H, profile, int(seed), law)


def identity_sampler(profile: VarianceProfile, seed: int, entry_law=EntryLaw.COMPLEX) -> HamiltonianSample:
    """Debug hook: the identity matrix in place of a random draw."""
    return HamiltonianSample(np.eye(profile.N), profile, int(seed), EntryLaw.parse(entry_law))
