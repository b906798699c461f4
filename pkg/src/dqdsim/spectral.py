"""Reservoir spectral densities, Fermi occupations, self-energies, kernels.

Every reservoir couples diagonally to its own mode, so the spectral
density, the real self-energy and the two memory kernels are all 2x2
diagonal matrices.  Energies are in units of Gamma, times in 1/Gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .model import ConfigError, ModelConfig, ReservoirParams, SpectralKind

GL_ORDER = 10
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)

# Fermi tails are dead beyond this many k_t from mu.
_FERMI_RANGE = 45.0
# Oscillation resolution: panel width <= pi / (_OSC_FACTOR * |tau|).
_OSC_FACTOR = 4.0


@dataclass(frozen=True)
class SpectralModel:
    """Spectral-density shape plus the two reservoirs it applies to."""

    kind: SpectralKind
    left: ReservoirParams
    right: ReservoirParams

    @classmethod
    def from_config(cls, config: ModelConfig) -> "SpectralModel":
        return cls(config.spectral_kind, config.left, config.right)

    @property
    def reservoirs(self) -> tuple[ReservoirParams, ReservoirParams]:
        return (self.left, self.right)


def fermi_occupation(omega, mu: float, k_t: float):
    """Mean occupation of a reservoir level at energy omega.

    k_t = 0 gives the sharp step (value 1/2 exactly at omega = mu).
    Accepts scalars or arrays and preserves the input shape.
    """
    w = np.asarray(omega, dtype=float)
    if k_t == 0.0:
        out = np.where(w < mu, 1.0, np.where(w > mu, 0.0, 0.5))
    else:
        x = np.clip((w - mu) / k_t, -700.0, 700.0)
        out = 1.0 / (np.exp(x) + 1.0)
    if np.ndim(omega) == 0:
        return float(out)
    return out


def lead_density(res: ReservoirParams, kind: SpectralKind, omega):
    """Scalar spectral density J_l(omega) of one lead (vectorized)."""
    w = np.asarray(omega, dtype=float)
    if kind is SpectralKind.WIDE_BAND:
        j = np.full(w.shape, res.gamma)
    else:
        x = w - res.mu
        d = res.bandwidth
        j = res.gamma * d * d / (x * x + d * d)
        if kind is SpectralKind.CUTOFF_LORENTZIAN:
            j = np.where(np.abs(x) <= res.cutoff, j, 0.0)
    if np.ndim(omega) == 0:
        return float(j)
    return j


def spectral_density(model: SpectralModel, omega: float) -> np.ndarray:
    """Diagonal 2x2 spectral-density matrix J(omega)."""
    return np.diag([lead_density(r, model.kind, omega) for r in model.reservoirs]).astype(float)


def lead_self_energy_real(res: ReservoirParams, kind: SpectralKind, omega):
    """Real (level-shift) part of one lead's retarded self-energy.

    For the cutoff-Lorentzian shape the closed form is only valid outside
    the band; in-band evaluation is rejected.
    """
    w = np.asarray(omega, dtype=float)
    x = w - res.mu
    d = res.bandwidth
    if kind is SpectralKind.WIDE_BAND:
        out = np.zeros(w.shape)
    elif kind is SpectralKind.LORENTZIAN:
        out = res.gamma * d * x / (2.0 * (d * d + x * x))
    else:
        cut = res.cutoff
        if math.isinf(cut):
            out = res.gamma * d * x / (2.0 * (d * d + x * x))
        else:
            if np.any(np.abs(x) <= cut):
                raise ConfigError(
                    "real self-energy of a cutoff-Lorentzian lead is only "
                    "available outside the band |omega - mu| > cutoff")
            j_env = res.gamma * d * d / (x * x + d * d)
            out = j_env / (2.0 * np.pi) * (
                np.log((x + cut) / (x - cut)) + 2.0 * x / d * math.atan(cut / d))
    if np.ndim(omega) == 0:
        return float(out)
    return out


def self_energy_real(model: SpectralModel, omega: float) -> np.ndarray:
    """Diagonal 2x2 matrix of real self-energies at a real frequency."""
    return np.diag(
        [lead_self_energy_real(r, model.kind, omega) for r in model.reservoirs]
    ).astype(float)


# ---------------------------------------------------------------------------
# scaled exponential integrals (stable for large arguments)

def _e1_scaled(x: np.ndarray) -> np.ndarray:
    """exp(x) * E1(x) for x > 0, overflow-free."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 50.0
    xs = x[small]
    out[small] = np.exp(xs) * special.exp1(xs)
    xl = x[~small]
    acc = np.zeros_like(xl)
    term = 1.0 / xl
    for k in range(25):
        acc = acc + term
        term = term * (-(k + 1.0)) / xl
    out[~small] = acc
    return out


def _ei_scaled(x: np.ndarray) -> np.ndarray:
    """exp(-x) * Ei(x) for x > 0, overflow-free."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 50.0
    xs = x[small]
    out[small] = np.exp(-xs) * special.expi(xs)
    xl = x[~small]
    acc = np.zeros_like(xl)
    term = 1.0 / xl
    for k in range(25):
        acc = acc + term
        term = term * (k + 1.0) / xl
    out[~small] = acc
    return out


def _half_lorentzian_fourier(res: ReservoirParams, taus: np.ndarray) -> np.ndarray:
    """Exact integral of J_l(w) e^{-i w tau} / 2pi over w in (-inf, mu].

    This is the zero-temperature noise kernel of one Lorentzian lead.
    Valid for tau >= 0; negative tau follows from conjugation by the caller.
    """
    taus = np.asarray(taus, dtype=float)
    d = res.bandwidth
    x = d * taus
    c = np.empty(taus.shape, dtype=complex)
    zero = x == 0.0
    c[zero] = np.pi / (2.0 * d)
    xs = x[~zero]
    c[~zero] = (-_e1_scaled(xs) - _ei_scaled(xs) + 1j * np.pi * np.exp(-xs)) / (2j * d)
    pref = res.gamma * d * d / (2.0 * np.pi)
    return pref * np.exp(-1j * res.mu * taus) * c


# ---------------------------------------------------------------------------
# panel Gauss-Legendre machinery for batched Fourier tables

def _panel_nodes(segments) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights over [lo, hi, width_cap] segments."""
    xs, ws = [], []
    for lo, hi, cap in segments:
        if hi - lo <= 0.0:
            continue
        n = max(1, int(math.ceil((hi - lo) / cap)))
        edges = np.linspace(lo, hi, n + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * np.diff(edges)
        xs.append((mid[:, None] + half[:, None] * _GL_X[None, :]).ravel())
        ws.append((half[:, None] * _GL_W[None, :]).ravel())
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ws)


def _fourier_sum(nodes: np.ndarray, coefs: np.ndarray, taus: np.ndarray,
                 chunk: int = 256) -> np.ndarray:
    """Sum_k coefs[k] e^{-i nodes[k] tau} for every tau, chunked."""
    out = np.empty(taus.size, dtype=complex)
    for s in range(0, taus.size, chunk):
        t = taus[s:s + chunk]
        out[s:s + chunk] = np.exp(-1j * np.outer(t, nodes)) @ coefs
    return out


def _osc_cap(tau_max: float) -> float:
    if tau_max <= 0.0:
        return math.inf
    return math.pi / (_OSC_FACTOR * tau_max)


def _memory_segments(res: ReservoirParams, tau_max: float) -> list:
    """Frequency panels for the cutoff-band memory-kernel table.

    Only called for a finite cutoff; the band must be covered in full
    because its hard edge carries real spectral weight.
    """
    mu = res.mu
    cap = min(res.bandwidth / 2.0, 0.5, _osc_cap(tau_max))
    return [(mu - res.cutoff, mu + res.cutoff, cap)]


def _noise_segments(res: ReservoirParams, kind: SpectralKind, tau_max: float) -> list:
    """Frequency panels for the occupied-weighted kernel table.

    For the pure Lorentzian only the finite-temperature correction
    n - step(mu - w) is integrated here; the step part has a closed form.
    """
    d, mu, kt = res.bandwidth, res.mu, res.k_t
    base = min(d / 2.0, 0.5, _osc_cap(tau_max))
    fine = min(base, kt / 2.0) if kt > 0.0 else base
    if kind is SpectralKind.LORENTZIAN or math.isinf(res.cutoff):
        if kt == 0.0:
            return []
        half = _FERMI_RANGE * kt
        return [(mu - half, mu, fine), (mu, mu + half, fine)]
    # occupation is exponentially small above mu + 45 kT; below mu the whole
    # remaining band contributes with n close to 1
    lo = mu - res.cutoff
    hi = mu + min(res.cutoff, _FERMI_RANGE * kt)
    if kt == 0.0:
        return [(lo, mu, base)]
    edge = 14.0 * kt
    return [
        (lo, max(lo, mu - edge), base),
        (max(lo, mu - edge), mu, fine),
        (mu, min(hi, mu + edge), fine),
        (min(hi, mu + edge), hi, base),
    ]


@dataclass(frozen=True)
class KernelTable:
    """Sampled diagonal kernels on a uniform half-grid tau >= 0.

    memory[k, c] and noise[k, c] hold channel c of g(tau_k) and of the
    occupied-weighted kernel; values at negative tau follow from the
    conjugation symmetry g(-tau) = g(tau)^dagger.
    """

    taus: np.ndarray
    memory: np.ndarray
    noise: np.ndarray | None

    def __post_init__(self):
        if self.taus.ndim != 1 or self.taus[0] != 0.0:
            raise ValueError("kernel table requires a tau grid starting at 0")


def build_kernel_table(model: SpectralModel, taus: np.ndarray,
                       include_noise: bool = True) -> KernelTable:
    """Tabulate the memory kernels of both leads on a uniform time grid."""
    taus = np.asarray(taus, dtype=float)
    tau_max = float(taus[-1]) if taus.size else 0.0
    memory = np.zeros((taus.size, 2), dtype=complex)
    noise = np.zeros((taus.size, 2), dtype=complex) if include_noise else None
    if model.kind is SpectralKind.WIDE_BAND:
        if model.left.gamma == 0.0 and model.right.gamma == 0.0:
            return KernelTable(taus, memory, noise)
        raise ConfigError(
            "wide-band kernels are Dirac deltas and are never tabulated; "
            "use the dedicated wide-band propagator instead")
    for c, res in enumerate(model.reservoirs):
        if res.gamma == 0.0:
            continue
        d, mu = res.bandwidth, res.mu
        lorentz_like = (model.kind is SpectralKind.LORENTZIAN
                        or math.isinf(res.cutoff))
        if lorentz_like:
            memory[:, c] = 0.5 * res.gamma * d * np.exp(-1j * mu * taus - d * taus)
        else:
            nodes, w = _panel_nodes(_memory_segments(res, tau_max))
            coefs = w * lead_density(res, model.kind, nodes) / (2.0 * np.pi)
            memory[:, c] = _fourier_sum(nodes, coefs, taus)
        if not include_noise:
            continue
        if lorentz_like:
            noise[:, c] = _half_lorentzian_fourier(res, taus)
            segs = _noise_segments(res, SpectralKind.LORENTZIAN, tau_max)
            if segs:
                nodes, w = _panel_nodes(segs)
                corr = fermi_occupation(nodes, mu, res.k_t) - (nodes < mu)
                coefs = w * lead_density(res, SpectralKind.LORENTZIAN, nodes) \
                    * corr / (2.0 * np.pi)
                noise[:, c] += _fourier_sum(nodes, coefs, taus)
        else:
            nodes, w = _panel_nodes(_noise_segments(res, model.kind, tau_max))
            occ = fermi_occupation(nodes, mu, res.k_t)
            coefs = w * lead_density(res, model.kind, nodes) * occ / (2.0 * np.pi)
            noise[:, c] = _fourier_sum(nodes, coefs, taus)
    return KernelTable(taus, memory, noise)


# ---------------------------------------------------------------------------
# pointwise kernels (adaptive quadrature; slower but window-free)

def _quad_fourier(f, a: float, b: float, tau: float, points=None) -> complex:
    """Adaptive integral of f(w) e^{-i w tau} over [a, b] for real f."""
    inner = sorted(p for p in (points or []) if a < p < b)
    if tau == 0.0:
        re = integrate.quad(f, a, b, points=inner or None, limit=400)[0]
        return complex(re, 0.0)
    edges = [a, *inner, b]
    val = 0.0 + 0.0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        c = integrate.quad(f, lo, hi, weight="cos", wvar=tau, limit=400)[0]
        s = integrate.quad(f, lo, hi, weight="sin", wvar=tau, limit=400)[0]
        val += c - 1j * s
    return val


def _lead_memory_kernel(res: ReservoirParams, kind: SpectralKind, tau: float) -> complex:
    if kind is SpectralKind.WIDE_BAND:
        raise ConfigError("wide-band memory kernel is a Dirac delta; not evaluable pointwise")
    if res.gamma == 0.0:
        return 0.0 + 0.0j
    if tau < 0.0:
        return np.conj(_lead_memory_kernel(res, kind, -tau))
    d, mu = res.bandwidth, res.mu
    if kind is SpectralKind.LORENTZIAN or math.isinf(res.cutoff):
        return 0.5 * res.gamma * d * np.exp(-1j * mu * tau - d * tau)
    cut = res.cutoff
    if tau == 0.0:
        return complex(res.gamma * d * math.atan(cut / d) / math.pi, 0.0)

    def envelope(x):
        return res.gamma * d * d / (x * x + d * d)

    # J is even about mu, so the band integral reduces to a cosine transform.
    re = 2.0 * integrate.quad(envelope, 0.0, cut, weight="cos", wvar=tau, limit=400)[0]
    return np.exp(-1j * mu * tau) * re / (2.0 * np.pi)


def _lead_noise_kernel(res: ReservoirParams, kind: SpectralKind, tau: float) -> complex:
    if kind is SpectralKind.WIDE_BAND:
        raise ConfigError("wide-band noise kernel is a Dirac delta; not evaluable pointwise")
    if res.gamma == 0.0:
        return 0.0 + 0.0j
    if tau < 0.0:
        return np.conj(_lead_noise_kernel(res, kind, -tau))
    d, mu, kt = res.bandwidth, res.mu, res.k_t
    if kind is SpectralKind.LORENTZIAN or math.isinf(res.cutoff):
        val = complex(_half_lorentzian_fourier(res, np.array([tau]))[0])
        if kt > 0.0 and tau > 0.0:
            # (n - step) is odd about x = w - mu and equals the bare Fermi
            # factor for x > 0, so only the sine transform survives; the
            # Fourier-weighted rule integrates the oscillatory tail exactly.
            def odd_part(x):
                return (res.gamma * d * d / (x * x + d * d)
                        / (math.exp(min(x / kt, 700.0)) + 1.0))

            sin_t, _ = integrate.quad(
                odd_part, 0.0, np.inf, weight="sin", wvar=tau,
                limit=400, limlst=200)
            val -= 1j * sin_t * np.exp(-1j * mu * tau) / np.pi
        return val
    cut = res.cutoff

    def weighted(w):
        return lead_density(res, kind, w) * fermi_occupation(w, mu, kt)

    hi = mu + cut if kt > 0.0 else mu
    pts = [mu - 14.0 * kt, mu, mu + 14.0 * kt] if kt > 0.0 else None
    return _quad_fourier(weighted, mu - cut, hi, tau, points=pts) / (2.0 * np.pi)


def memory_kernel(model: SpectralModel, tau: float) -> np.ndarray:
    """Diagonal 2x2 memory kernel g(tau) = sum_l int J_l e^{-i w tau} dw / 2pi."""
    return np.diag([_lead_memory_kernel(r, model.kind, tau) for r in model.reservoirs])


def noise_kernel(model: SpectralModel, tau: float) -> np.ndarray:
    """Diagonal 2x2 occupation-weighted kernel with J_l n_l in place of J_l."""
    return np.diag([_lead_noise_kernel(r, model.kind, tau) for r in model.reservoirs])
