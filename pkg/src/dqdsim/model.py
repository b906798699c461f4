"""Parameters and small-matrix helpers for a two-mode fermionic system.

The system is a pair of localized fermionic modes (a double quantum dot)
with on-site energies eps1, eps2 and an interdot tunneling amplitude g,
each mode coupled diagonally to its own electron reservoir.  All energies
are measured in units of the common coupling strength Gamma and times in
1/Gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

# Tolerance for treating an energy matrix as Hermitian (relative).
HERMITICITY_RTOL = 1e-12

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)


class ConfigError(ValueError):
    """Rejected configuration (bad parameter values or config file)."""


class SolverError(RuntimeError):
    """A numerical routine could not produce a trustworthy result."""


class InvariantViolation(RuntimeError):
    """A computed quantity broke a physical invariant beyond tolerance."""


def as_mat2(m) -> np.ndarray:
    """Coerce to a 2x2 complex ndarray (copies only when needed)."""
    a = np.asarray(m, dtype=complex)
    if a.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def det2(m: np.ndarray) -> complex:
    """Determinant of a 2x2 matrix without the LAPACK round trip."""
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def adjugate2(m: np.ndarray) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex)


def inv2(m: np.ndarray) -> np.ndarray:
    """Inverse of a 2x2 matrix; raises SolverError when singular."""
    d = det2(m)
    scale = max(abs(m).max(), 1.0)
    if abs(d) <= 1e-300 or abs(d) < 1e-14 * scale * scale:
        raise SolverError(f"singular 2x2 matrix (det = {d!r})")
    return adjugate2(m) / d


def is_hermitian(m: np.ndarray, rtol: float = HERMITICITY_RTOL) -> bool:
    scale = max(float(np.abs(m).max()), 1.0)
    return bool(np.abs(m - dagger(m)).max() <= rtol * scale)


def require_hermitian(m: np.ndarray, what: str, rtol: float = HERMITICITY_RTOL) -> np.ndarray:
    if not is_hermitian(m, rtol):
        raise ConfigError(f"{what} must be Hermitian to relative tolerance {rtol:g}")
    return m


class SpectralKind(Enum):
    """Shape of the reservoir spectral density."""

    LORENTZIAN = "lorentzian"
    CUTOFF_LORENTZIAN = "cutoff_lorentzian"
    WIDE_BAND = "wideband"

    @classmethod
    def from_name(cls, name: str) -> "SpectralKind":
        key = name.strip().lower().replace("-", "_")
        for kind in cls:
            if kind.value == key:
                return kind
        names = ", ".join(k.value for k in cls)
        raise ConfigError(f"unknown spectral kind {name!r} (expected one of: {names})")


@dataclass(frozen=True)
class SystemParams:
    """On-site energies and interdot tunneling of the two modes.

    g_coupling may be complex; the one-particle energy matrix built from
    it is Hermitian by construction.
    """

    eps1: float
    eps2: float
    g_coupling: complex = 0.0

    def __post_init__(self):
        for name in ("eps1", "eps2"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"{name} must be finite, got {v!r}")
        g = complex(self.g_coupling)
        if not (math.isfinite(g.real) and math.isfinite(g.imag)):
            raise ConfigError(f"g_coupling must be finite, got {g!r}")


@dataclass(frozen=True)
class ReservoirParams:
    """One electron reservoir: coupling, band shape, filling.

    Parameters
    ----------
    gamma : float
        Coupling strength of this lead (>= 0), in units of Gamma.
    bandwidth : float
        Lorentzian width d of the spectral density (> 0).
    mu : float
        Chemical potential; the spectral density is centered on it.
    k_t : float
        Temperature in energy units (>= 0); 0 selects the sharp Fermi step.
    cutoff : float
        Half-width of the hard band cutoff around mu (> 0, may be inf);
        only meaningful for the cutoff-Lorentzian spectral kind.
    """

    gamma: float = 1.0
    bandwidth: float = 0.5
    mu: float = 0.0
    k_t: float = 0.0
    cutoff: float = math.inf

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma >= 0.0):
            raise ConfigError(f"gamma must be finite and >= 0, got {self.gamma!r}")
        if not (math.isfinite(self.bandwidth) and self.bandwidth > 0.0):
            raise ConfigError(f"bandwidth must be finite and > 0, got {self.bandwidth!r}")
        if not math.isfinite(self.mu):
            raise ConfigError(f"mu must be finite, got {self.mu!r}")
        if not (math.isfinite(self.k_t) and self.k_t >= 0.0):
            raise ConfigError(f"k_t must be finite and >= 0, got {self.k_t!r}")
        if math.isnan(self.cutoff) or self.cutoff <= 0.0:
            raise ConfigError(f"cutoff must be > 0 (inf allowed), got {self.cutoff!r}")


@dataclass(frozen=True)
class ModelConfig:
    """Complete physical configuration: system plus its two reservoirs."""

    system: SystemParams
    left: ReservoirParams
    right: ReservoirParams
    spectral_kind: SpectralKind = SpectralKind.LORENTZIAN

    @property
    def reservoirs(self) -> tuple[ReservoirParams, ReservoirParams]:
        return (self.left, self.right)


def build_hamiltonian(system: SystemParams) -> np.ndarray:
    """One-particle energy matrix M = [[eps1, g], [conj(g), eps2]]."""
    g = complex(system.g_coupling)
    m = np.array([[system.eps1, g], [np.conj(g), system.eps2]], dtype=complex)
    return require_hermitian(m, "energy matrix")


def gamma_matrix(config: ModelConfig) -> np.ndarray:
    """Diagonal lead-coupling matrix diag(gamma_L, gamma_R)."""
    return np.diag([config.left.gamma, config.right.gamma]).astype(complex)
