"""Brute-force cross-check: discretize the reservoirs and solve exactly.

The model is quadratic, so one eigendecomposition of the full one-particle
Hamiltonian (2 dot modes + K modes per lead) gives U(t), V(t) and the
bound-state content with no memory-kernel machinery at all. Slow and
honest; used to validate the solver modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .greens import GreensSolution, TimeGrid
from .model import ConfigError, ModelConfig, SpectralKind, build_hamiltonian
from .spectral import fermi_occupation, lead_density

# Uniform midpoint discretization resolves the kernel's support, but the
# recurrence time 2 pi / (window/K) must stay past the simulated horizon;
# the cap keeps it above ~12 for the default K regardless of bandwidth.
_RECURRENCE_MARGIN = 12.0


@dataclass
class DiscretizedBath:
    """Star-discretized reservoirs around the two dot modes.

    energies, couplings, occupations: (2, K) arrays, row l for lead l;
    couplings are real with |V_k|^2 = J(e_k) de / (2 pi).
    """

    config: ModelConfig
    energies: np.ndarray
    couplings: np.ndarray
    occupations: np.ndarray

    @property
    def modes_per_lead(self) -> int:
        return self.energies.shape[1]

    def hamiltonian(self) -> np.ndarray:
        """Full one-particle matrix: dots block, bath diagonal, star couplings."""
        k = self.modes_per_lead
        dim = 2 + 2 * k
        h = np.zeros((dim, dim), dtype=complex)
        h[:2, :2] = build_hamiltonian(self.config.system)
        for lead in range(2):
            rows = slice(2 + lead * k, 2 + (lead + 1) * k)
            h[rows, rows] = np.diag(self.energies[lead])
            h[lead, rows] = self.couplings[lead]
            h[rows, lead] = self.couplings[lead]
        return h

    def bath_occupation_diagonal(self) -> np.ndarray:
        """Initial occupations on the bath entries, zeros on the dots."""
        return np.concatenate(
            [np.zeros(2), self.occupations[0], self.occupations[1]]
        )


def _default_window(res, kind, modes_per_lead):
    if kind is SpectralKind.CUTOFF_LORENTZIAN:
        if math.isinf(res.cutoff):
            raise ConfigError("cutoff spectra need a finite cutoff to discretize")
        return (res.mu - res.cutoff, res.mu + res.cutoff)
    d = res.bandwidth
    half = max(20.0 * d, 20.0 * res.k_t + 10.0 * d)
    cap = math.pi * modes_per_lead / _RECURRENCE_MARGIN
    half = min(half, cap)
    return (res.mu - half, res.mu + half)


def discretize(
    config: ModelConfig, modes_per_lead: int, window=None
) -> DiscretizedBath:
    """Uniform midpoint sampling of each lead's spectral density.

    The default window covers the band (cutoff case) or ~20 bandwidths
    around mu, capped so the discretization recurrence time stays well past
    t = 12; pass an explicit window for longer horizons.
    """
    if modes_per_lead < 2:
        raise ConfigError(f"modes_per_lead must be >= 2, got {modes_per_lead}")
    kind = config.spectral_kind
    if kind is SpectralKind.WIDE_BAND:
        raise ConfigError(
            "the flat spectrum has no scale to discretize; use a closed-form"
            " solver for the wide-band limit"
        )
    energies = np.empty((2, modes_per_lead))
    couplings = np.empty((2, modes_per_lead))
    occupations = np.empty((2, modes_per_lead))
    for lead, res in enumerate(config.reservoirs):
        win = window if window is not None else _default_window(
            res, kind, modes_per_lead
        )
        lo, hi = float(win[0]), float(win[1])
        if not hi > lo:
            raise ConfigError(f"empty discretization window ({lo}, {hi})")
        if kind is SpectralKind.CUTOFF_LORENTZIAN and res.gamma > 0.0:
            if lo > res.mu - res.cutoff or hi < res.mu + res.cutoff:
                raise ConfigError(
                    "discretization window must cover the full band of the"
                    f" cutoff spectrum ({res.mu - res.cutoff}, {res.mu + res.cutoff})"
                )
        de = (hi - lo) / modes_per_lead
        mids = lo + (np.arange(modes_per_lead) + 0.5) * de
        energies[lead] = mids
        couplings[lead] = np.sqrt(
            lead_density(res, kind, mids) * de / (2.0 * math.pi)
        )
        occupations[lead] = fermi_occupation(mids, res.mu, res.k_t)
    return DiscretizedBath(
        config=config,
        energies=energies,
        couplings=couplings,
        occupations=occupations,
    )


def exact_greens(bath: DiscretizedBath, grid: TimeGrid) -> GreensSolution:
    """U and V of the discretized model by one eigendecomposition.

    U(t) is the dot-block of e^{-iht}; V(t) the dot-block of
    e^{-iht} D e^{iht} with D the initial bath occupations. Both are exact
    for the discretized Hamiltonian at every t.
    """
    h = bath.hamiltonian()
    evals, q = np.linalg.eigh(h)
    q_dots = q[:2, :]  # (2, D)
    phases = np.exp(-1j * np.outer(grid.times, evals))  # (n+1, D)
    u = np.einsum("ad,td,bd->tab", q_dots, phases, np.conj(q_dots))
    u[0] = np.eye(2)  # exact; Q Q^dag carries rounding noise

    d_b = bath.bath_occupation_diagonal()
    w_mat = (np.conj(q.T) * d_b[None, :]) @ q  # Q^dag D Q, (D, D)
    x = q_dots[None, :, :] * phases[:, None, :]  # (n+1, 2, D)
    v = x @ w_mat @ np.conj(np.transpose(x, (0, 2, 1)))
    v = 0.5 * (v + np.conj(np.transpose(v, (0, 2, 1))))
    v[0] = 0.0
    return GreensSolution(grid, u, v)


def localized_eigenstates(bath: DiscretizedBath, weight_threshold: float = 0.5):
    """Eigenpairs of the full Hamiltonian concentrated on the dot modes.

    Returns (energy, dot_weight) for every eigenvector whose probability
    weight on the two dot components exceeds the threshold; these are the
    discretized bound states.
    """
    if not 0.0 < weight_threshold < 1.0:
        raise ConfigError(
            f"weight_threshold must lie in (0, 1), got {weight_threshold}"
        )
    h = bath.hamiltonian()
    evals, q = np.linalg.eigh(h)
    weights = np.abs(q[0, :]) ** 2 + np.abs(q[1, :]) ** 2
    picks = weights > weight_threshold
    return [
        (float(e), float(w)) for e, w in zip(evals[picks], weights[picks])
    ]
