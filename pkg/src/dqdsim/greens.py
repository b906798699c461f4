"""Nonequilibrium Green's functions of the double dot.

Solves the Dyson integro-differential equation for the retarded propagator
U(t), assembles the fluctuation matrix V(t) by double convolution with the
noise kernel, and provides the pole expansion, steady-state, wide-band and
Born-Markov closed forms.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg as sla
from scipy import special
from scipy.integrate import quad
from scipy.signal import fftconvolve

from .model import (
    IDENTITY2,
    ConfigError,
    InvariantViolation,
    ModelConfig,
    SolverError,
    SpectralKind,
    adjugate2,
    as_mat2,
    build_hamiltonian,
    dagger,
    gamma_matrix,
    inv2,
)
from .spectral import (
    SpectralModel,
    build_kernel_table,
    fermi_occupation,
    lead_density,
)

HERMITICITY_TOL = 1e-8
EIGENVALUE_FLOOR = -1e-8
EIGENVALUE_CEIL = 1.0 + 1e-8
SINGULAR_VALUE_CEIL = 1.0 + 1e-6
RESIDUE_SUM_TOL = 1e-8

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [0, t_max] with n_steps intervals."""

    t_max: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.t_max) and self.t_max > 0.0):
            raise ConfigError(f"t_max must be positive and finite, got {self.t_max}")
        if not (isinstance(self.n_steps, int) and self.n_steps >= 1):
            raise ConfigError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.t_max / self.n_steps

    @cached_property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_steps + 1)


def _check_solution(grid, u_seq, v_seq):
    u = np.asarray(u_seq)
    v = np.asarray(v_seq)
    n = grid.n_steps + 1
    if u.shape != (n, 2, 2) or v.shape != (n, 2, 2):
        raise InvariantViolation(
            f"solution shape mismatch: expected ({n}, 2, 2), got {u.shape} and {v.shape}"
        )
    if not np.allclose(u[0], IDENTITY2, atol=1e-13, rtol=0.0):
        raise InvariantViolation("U(0) != identity")
    if not np.allclose(v[0], 0.0, atol=1e-13, rtol=0.0):
        raise InvariantViolation("V(0) != 0")
    herm_err = np.max(np.abs(v - np.conj(np.transpose(v, (0, 2, 1)))))
    if herm_err > HERMITICITY_TOL:
        raise InvariantViolation(f"V(t) not Hermitian: max deviation {herm_err:.3e}")
    eigs = np.linalg.eigvalsh(0.5 * (v + np.conj(np.transpose(v, (0, 2, 1)))))
    if eigs.min() < EIGENVALUE_FLOOR or eigs.max() > EIGENVALUE_CEIL:
        raise InvariantViolation(
            f"V(t) spectrum [{eigs.min():.3e}, {eigs.max():.3e}] leaves [0, 1]"
        )
    svals = np.linalg.svd(u, compute_uv=False)
    if svals.max() > SINGULAR_VALUE_CEIL:
        raise InvariantViolation(
            f"U(t) singular value {svals.max():.8f} exceeds contraction bound"
        )


@dataclass
class GreensSolution:
    """U(t) and V(t) sampled on a common time grid."""

    grid: TimeGrid
    u_seq: np.ndarray
    v_seq: np.ndarray

    def __post_init__(self):
        self.u_seq = np.ascontiguousarray(np.asarray(self.u_seq, dtype=complex))
        self.v_seq = np.ascontiguousarray(np.asarray(self.v_seq, dtype=complex))
        _check_solution(self.grid, self.u_seq, self.v_seq)


@dataclass
class PoleExpansion:
    """U(t) = sum_j Z_j exp(-i r_j t) with all poles in the lower half plane."""

    poles: list
    residues: list

    def __post_init__(self):
        for r in self.poles:
            if r.imag > 1e-12:
                raise InvariantViolation(f"pole {r} lies in the upper half plane")
        total = sum(self.residues)
        if np.max(np.abs(total - IDENTITY2)) > RESIDUE_SUM_TOL:
            raise InvariantViolation(
                f"residues sum to {total}, expected identity"
            )

    def reconstruct(self, times) -> np.ndarray:
        """Evaluate sum_j Z_j exp(-i r_j t) on an array of times."""
        t = np.asarray(times, dtype=float)
        u = np.zeros(t.shape + (2, 2), dtype=complex)
        for r, z in zip(self.poles, self.residues):
            u += np.exp(-1j * r * t)[..., None, None] * z
        return u


def _memory_table(config: ModelConfig, grid: TimeGrid, include_noise):
    model = SpectralModel.from_config(config)
    if model.kind is SpectralKind.WIDE_BAND:
        raise ConfigError(
            "the wide-band memory kernel is a delta function; use wbl_greens"
        )
    return build_kernel_table(model, grid.times, include_noise=include_noise)


def solve_dyson(config: ModelConfig, grid: TimeGrid) -> np.ndarray:
    """Propagate U(t) through the memory-kernel Volterra equation.

    Product-integration trapezoidal rule, implicit in the newest value; the
    implicit step is a single 2x2 solve. Second order in dt and exactly
    unitary (Cayley form) when the coupling vanishes.
    """
    table = _memory_table(config, grid, include_noise=False)
    mem = table.memory  # (n+1, 2) per-lead diagonal samples
    n = grid.n_steps
    dt = grid.dt
    m_mat = build_hamiltonian(config.system)
    i_m = 1j * m_mat

    u = np.empty((n + 1, 2, 2), dtype=complex)
    u[0] = IDENTITY2

    g0 = mem[0]
    lhs = IDENTITY2 + (dt / 2.0) * i_m + (dt * dt / 4.0) * np.diag(g0)
    lhs_inv = inv2(lhs)

    conv = np.zeros((2, 2), dtype=complex)  # trapezoid convolution at t_n
    for step in range(n):
        # known part of the convolution at t_{n+1}: weight 1/2 on U_0,
        # full weight on U_1..U_n, the implicit 1/2 g0 U_{n+1} lives in lhs
        tail = 0.5 * mem[step + 1][:, None] * u[0]
        if step >= 1:
            tail = tail + np.einsum(
                "jl,jlc->lc", mem[1 : step + 1][::-1], u[1 : step + 1]
            )
        partial = dt * tail
        rhs = u[step] - (dt / 2.0) * (i_m @ u[step]) - (dt / 2.0) * (conv + partial)
        nxt = lhs_inv @ rhs
        u[step + 1] = nxt
        conv = partial + dt * 0.5 * g0[:, None] * nxt
    return u


def compute_fluctuation(u_seq, config: ModelConfig, grid: TimeGrid) -> np.ndarray:
    """Assemble V(t) = int int U(t-s1) gtilde(s1-s2) U(t-s2)^dag ds1 ds2.

    Trapezoidal double sum on the grid, evaluated for every grid time at
    once: the flat-weight core follows a cumulative recursion fed by causal
    FFT convolutions, and the trapezoid end corrections are added in closed
    form. The discrete quadratic form inherits positivity from the noise
    kernel, so V stays positive semidefinite to rounding.
    """
    table = _memory_table(config, grid, include_noise=True)
    g = table.noise  # (n+1, 2), diagonal kernel samples at lags >= 0
    u = np.asarray(u_seq, dtype=complex)
    n = grid.n_steps
    dt = grid.dt

    # c[n] = sum_k U_k gtilde(t_{n-k}), per diagonal component of the kernel
    c = np.empty_like(u)
    for a in range(2):
        for b in range(2):
            c[:, a, b] = fftconvolve(u[:, a, b], g[:, b])[: n + 1]

    u_dag = np.conj(np.transpose(u, (0, 2, 1)))
    # e[n] = gtilde(t_n) U_n^dag   (rows scaled by the kernel)
    e = g[:, :, None] * u_dag
    p = np.cumsum(e, axis=0)  # P_n = sum_{l<=n} gtilde(t_l) U_l^dag

    cu = np.einsum("nab,ncb->nac", c, np.conj(u))  # C_n U_n^dag
    cu_dag = np.conj(np.transpose(cu, (0, 2, 1)))
    ugu = np.einsum("nab,b,ncb->nac", u, g[0], np.conj(u))  # U_n gtilde(0) U_n^dag
    core = np.cumsum(cu + cu_dag - ugu, axis=0)

    e_dag = np.conj(np.transpose(e, (0, 2, 1)))
    p_dag = np.conj(np.transpose(p, (0, 2, 1)))
    corner = np.diag(g[0])[None, :, :] + e + e_dag + ugu

    v = dt * dt * (core - 0.5 * (p + p_dag + cu + cu_dag) + 0.25 * corner)
    v = 0.5 * (v + np.conj(np.transpose(v, (0, 2, 1))))
    v[0] = 0.0
    return v


def solve(config: ModelConfig, grid: TimeGrid) -> GreensSolution:
    """Full (U, V) solution dispatched on the spectral kind."""
    if config.spectral_kind is SpectralKind.WIDE_BAND:
        return wbl_greens(config, grid)
    u = solve_dyson(config, grid)
    v = compute_fluctuation(u, config, grid)
    return GreensSolution(grid, u, v)


# ---------------------------------------------------------------------------
# Pole expansion for the pure Lorentzian spectrum
# ---------------------------------------------------------------------------


def _quadratic_channel(eps, res):
    """Poles and scalar residues of one decoupled channel."""
    c = res.gamma * res.bandwidth / 2.0
    q = np.array([1.0, -(res.mu - 1j * res.bandwidth)], dtype=complex)
    poly = np.polysub(np.polymul([1.0, -eps], q), [c])
    roots = np.roots(poly)
    deriv = np.polyder(poly)
    out = []
    for r in roots:
        qv = np.polyval(q, r)
        scale = max(1.0, abs(r))
        if abs(qv) < 1e-12 * scale:
            continue  # root of the cleared denominator, not of det
        det_val = r - eps - c / qv
        if abs(det_val) > 1e-8 * scale:
            continue
        dp = np.polyval(deriv, r)
        if abs(dp) < 1e-10 * scale:
            raise SolverError(f"degenerate pole configuration near z = {r}")
        out.append((complex(r), complex(qv / dp)))
    return out


def pole_expansion_lorentzian(config: ModelConfig) -> PoleExpansion:
    """Roots and matrix residues of det[zI - M - Sigma(z)] for Lorentzian leads.

    The analytically continued self-energy is rational,
    Sigma_l(z) = (Gamma_l d_l / 2) / (z - mu_l + i d_l), so clearing
    denominators leaves a quartic solved by the companion matrix; spurious
    roots introduced by the clearing are rejected against the original
    determinant.
    """
    if config.spectral_kind is not SpectralKind.LORENTZIAN:
        raise ConfigError("pole expansion requires the pure Lorentzian spectrum")
    sys_p = config.system
    left, right = config.left, config.right
    m_mat = build_hamiltonian(sys_p)
    g_abs2 = abs(sys_p.g_coupling) ** 2

    if g_abs2 == 0.0:
        poles, residues = [], []
        for idx, (eps, res) in enumerate(
            ((sys_p.eps1, left), (sys_p.eps2, right))
        ):
            for r, zres in _quadratic_channel(eps, res):
                z = np.zeros((2, 2), dtype=complex)
                z[idx, idx] = zres
                poles.append(r)
                residues.append(z)
        order = np.argsort([(p.real, p.imag) for p in poles], axis=0)[:, 0]
        return PoleExpansion(
            [poles[i] for i in order], [residues[i] for i in order]
        )

    c_l = left.gamma * left.bandwidth / 2.0
    c_r = right.gamma * right.bandwidth / 2.0
    q_l = np.array([1.0, -(left.mu - 1j * left.bandwidth)], dtype=complex)
    q_r = np.array([1.0, -(right.mu - 1j * right.bandwidth)], dtype=complex)
    f_l = np.polysub(np.polymul([1.0, -sys_p.eps1], q_l), [c_l])
    f_r = np.polysub(np.polymul([1.0, -sys_p.eps2], q_r), [c_r])
    poly = np.polysub(np.polymul(f_l, f_r), g_abs2 * np.polymul(q_l, q_r))
    deriv = np.polyder(poly)

    roots = np.roots(poly)
    roots = roots[np.lexsort((roots.imag, roots.real))]
    poles, residues = [], []
    for r in roots:
        qlv = np.polyval(q_l, r)
        qrv = np.polyval(q_r, r)
        scale = max(1.0, abs(r) ** 2)
        if min(abs(qlv), abs(qrv)) < 1e-12 * max(1.0, abs(r)):
            continue
        sig = np.diag([c_l / qlv, c_r / qrv])
        a_mat = r * IDENTITY2 - m_mat - sig
        det_val = a_mat[0, 0] * a_mat[1, 1] - a_mat[0, 1] * a_mat[1, 0]
        if abs(det_val) > 1e-8 * scale:
            continue
        dp = np.polyval(deriv, r)
        if abs(dp) < 1e-10 * scale:
            raise SolverError(f"degenerate pole configuration near z = {r}")
        z = adjugate2(a_mat) * (qlv * qrv / dp)
        poles.append(complex(r))
        residues.append(z)
    return PoleExpansion(poles, residues)


def steady_state_fluctuation(
    expansion: PoleExpansion, config: ModelConfig
) -> np.ndarray:
    """V^s = int v(w) dw with v = S(w) J(w) nbar(w) S(w)^dag / (2 pi).

    Adaptive quadrature with forced subdivisions at the chemical potentials
    and at the pole shadows Re r_j; the tails fall off like 1/w^4.
    """
    if config.spectral_kind is not SpectralKind.LORENTZIAN:
        raise ConfigError("the pole-expansion steady state requires the Lorentzian spectrum")
    model = SpectralModel.from_config(config)
    poles = np.array(expansion.poles)
    residues = np.stack(expansion.residues)

    def s_mat(w):
        return np.sum(residues / (w - poles)[:, None, None], axis=0)

    # diagonal J(w) nbar(w) per lead
    def weight(w):
        out = np.empty(2)
        for i, res in enumerate(model.reservoirs):
            out[i] = lead_density(res, model.kind, w) * fermi_occupation(
                w, res.mu, res.k_t
            )
        return out

    def component(w, row, col, part):
        s = s_mat(w)
        jw = weight(w)
        val = (s[row, 0] * jw[0] * np.conj(s[col, 0])) + (
            s[row, 1] * jw[1] * np.conj(s[col, 1])
        )
        val /= _TWO_PI
        return val.real if part == 0 else val.imag

    pts = sorted(
        {config.left.mu, config.right.mu, *(p.real for p in poles)}
    )
    span = 30.0 * max(
        1.0,
        config.left.bandwidth,
        config.right.bandwidth,
        config.left.k_t,
        config.right.k_t,
    )
    lo, hi = min(pts) - span, max(pts) + span

    def integrate(row, col, part):
        mid, _ = quad(
            component, lo, hi, args=(row, col, part), points=pts, limit=400
        )
        left_tail, _ = quad(component, -np.inf, lo, args=(row, col, part), limit=200)
        right_tail, _ = quad(component, hi, np.inf, args=(row, col, part), limit=200)
        return mid + left_tail + right_tail

    v = np.empty((2, 2), dtype=complex)
    v[0, 0] = integrate(0, 0, 0)
    v[1, 1] = integrate(1, 1, 0)
    v[0, 1] = integrate(0, 1, 0) + 1j * integrate(0, 1, 1)
    v[1, 0] = np.conj(v[0, 1])
    eigs = np.linalg.eigvalsh(v)
    if eigs.min() < EIGENVALUE_FLOOR or eigs.max() > EIGENVALUE_CEIL:
        raise InvariantViolation(
            f"steady fluctuation spectrum [{eigs.min():.3e}, {eigs.max():.3e}] leaves [0, 1]"
        )
    return v


# ---------------------------------------------------------------------------
# Wide-band limit
# ---------------------------------------------------------------------------


def _scaled_exp1(w):
    """exp(w) E1(w) for complex w, stable at large |w|.

    Direct evaluation below |w| = 50; the 2F0-style asymptotic tail above,
    where scipy's exp1 would overflow for Re w << 0.
    """
    w = np.asarray(w, dtype=complex)
    out = np.empty(w.shape, dtype=complex)
    small = np.abs(w) < 50.0
    ws = w[small]
    out[small] = np.exp(ws) * special.exp1(ws)
    wl = w[~small]
    if wl.size:
        acc = np.zeros_like(wl)
        term = np.ones_like(wl)
        for k in range(1, 26):
            term = term * (-k) / wl
            acc = acc + term
        out[~small] = (1.0 + acc) / wl
    return out


def _effective_hamiltonian_modes(m_mat, gam):
    m_eff = m_mat - 0.5j * gam
    vals, vecs = np.linalg.eig(m_eff)
    if np.linalg.cond(vecs) > 1e8:
        raise SolverError(
            "defective effective Hamiltonian; perturb the parameters slightly"
        )
    vecs_inv = np.linalg.inv(vecs)
    projectors = [np.outer(vecs[:, j], vecs_inv[j, :]) for j in range(2)]
    return vals, projectors


def _halfline_phase_integral(lam, mu, times):
    """E(lam; t) = int_{-inf}^{mu} exp(i w t) / (w - lam) dw for t > 0.

    Written through the scaled exponential integral so the result stays
    bounded at large t |mu - lam|. For poles in the upper half plane the
    principal branch must be corrected by the 2 pi i residue jump once the
    E1 argument crosses its cut; the region rule below was pinned against
    high-precision quadrature.
    """
    t = np.asarray(times, dtype=float)
    zeta = mu - lam
    w = -1j * t * zeta
    if abs(zeta) == 0.0:
        raise SolverError("half-line integral evaluated at its singular point")
    # keep the from-above boundary value when the argument lands on the cut
    on_cut = (np.abs(w.imag) < 1e-300) & (w.real < 0.0)
    if np.any(on_cut):
        w = np.where(on_cut, w + 1e-300j, w)
    val = -np.exp(1j * mu * t) * _scaled_exp1(w)
    if lam.imag > 0.0 and zeta.real > 0.0:
        # the cut of E1 was crossed while continuing from w -> -i inf
        val = val + _TWO_PI * 1j * np.exp(1j * lam * t)
    return val


def _halfline_pair_integrals(lams, mu, times, pairs, with_phase):
    """N_jk and O_jk(t) building blocks of the zero-temperature backbone.

    N_jk  = int_{-inf}^{mu} dw / ((w - lam_j)(w - conj(lam_k)))
    O_jk  = int_{-inf}^{mu} exp(i w t) dw / ((w - lam_j)(w - conj(lam_k)))

    Evaluated only for the requested (j, k) pairs; pruned pairs may involve
    an undamped mode whose pair integral is singular but carries no weight.
    """
    nt = len(times)
    n_jk = np.zeros((2, 2), dtype=complex)
    o_jk = np.zeros((2, 2, nt), dtype=complex)
    e_lo, e_hi = {}, {}
    for j, k in pairs:
        a, b = lams[j], np.conj(lams[k])
        denom = a - b
        if abs(denom) < 1e-12:
            raise SolverError(
                "effectively undamped mode still couples to a lead; no"
                " wide-band closed form applies"
            )
        n_jk[j, k] = (np.log(mu - a) - np.log(mu - b) - _TWO_PI * 1j) / denom
        if with_phase:
            if j not in e_lo:
                e_lo[j] = _halfline_phase_integral(lams[j], mu, times)
            if k not in e_hi:
                e_hi[k] = _halfline_phase_integral(np.conj(lams[k]), mu, times)
            o_jk[j, k] = (e_lo[j] - e_hi[k]) / denom
    return n_jk, o_jk


_THERMAL_WINDOW = 45.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _thermal_panel_nodes(res, t_max):
    """Gauss-Legendre nodes and weights for nbar - theta(mu - w), split at mu."""
    half = _THERMAL_WINDOW * res.k_t
    width = min(res.k_t / 2.0, math.pi / (4.0 * max(t_max, 1e-9)))
    nodes, weights = [], []
    for lo, hi in ((res.mu - half, res.mu), (res.mu, res.mu + half)):
        count = max(2, int(math.ceil((hi - lo) / width)))
        edges = np.linspace(lo, hi, count + 1)
        centers = 0.5 * (edges[:-1] + edges[1:])
        scales = 0.5 * (edges[1:] - edges[:-1])
        nodes.append((centers[:, None] + scales[:, None] * _GL_NODES).ravel())
        weights.append((scales[:, None] * _GL_WEIGHTS).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def _cexpm1(z):
    """expm1 for complex arrays (numpy's expm1 rejects complex input)."""
    out = np.exp(z) - 1.0
    small = np.abs(z) < 1e-6
    if np.any(small):
        zs = z[small]
        out[small] = zs * (1.0 + zs * (0.5 + zs / 6.0))
    return out


def _wbl_lead_fluctuation(lams, projectors, res, lead_index, times, steady):
    """One lead's contribution to V_WBL(t), or to V_WBL^s when steady."""
    gam_l = np.zeros((2, 2))
    gam_l[lead_index, lead_index] = res.gamma
    theta = [
        [projectors[j] @ gam_l @ dagger(projectors[k]) for k in range(2)]
        for j in range(2)
    ]
    keep = [
        (j, k)
        for j in range(2)
        for k in range(2)
        if np.max(np.abs(theta[j][k])) > 1e-14 * res.gamma
    ]
    nt = len(times)
    out = np.zeros((nt, 2, 2), dtype=complex)
    if not keep:
        return out

    if steady:
        n_jk, _ = _halfline_pair_integrals(
            lams, res.mu, np.array([1.0]), keep, False
        )
        for j, k in keep:
            out[:, :, :] += theta[j][k] * n_jk[j, k]
    else:
        pair_set = set(keep)
        pair_set.update((k, j) for j, k in keep)  # conj(o_jk[k, j]) is used
        n_jk, o_jk = _halfline_pair_integrals(
            lams, res.mu, times, sorted(pair_set), True
        )
        for j, k in keep:
            a, b = lams[j], np.conj(lams[k])
            c0 = 1.0 + np.exp(1j * (b - a) * times)
            c1 = np.exp(-1j * a * times)
            c2 = np.exp(1j * b * times)
            i_jk = c0 * n_jk[j, k] - c1 * o_jk[j, k] - c2 * np.conj(o_jk[k, j])
            out += i_jk[:, None, None] * theta[j][k]

    if res.k_t > 0.0:
        t_max = 0.0 if steady else float(times[-1])
        omega, wts = _thermal_panel_nodes(res, t_max)
        s_val = fermi_occupation(omega, res.mu, res.k_t) - np.where(
            omega < res.mu, 1.0, 0.0
        )
        coef = wts * s_val
        used = {j for j, _ in keep} | {k for _, k in keep}
        chunk = 512
        for start in range(0, nt, chunk):
            tt = times[start : start + chunk]
            gam_fac = [None, None]
            for j in used:
                if steady:
                    gj = np.broadcast_to(
                        -1.0 / (omega - lams[j]), (len(tt), len(omega))
                    )
                else:
                    z = 1j * np.outer(tt, omega - lams[j])
                    gj = _cexpm1(z) / (omega - lams[j])[None, :]
                gam_fac[j] = gj
            for j, k in keep:
                s_sum = np.einsum(
                    "w,tw->t", coef, gam_fac[j] * np.conj(gam_fac[k])
                )
                out[start : start + chunk] += (
                    s_sum[:, None, None] * theta[j][k]
                )
    return out / _TWO_PI


def wbl_greens(config: ModelConfig, grid: TimeGrid) -> GreensSolution:
    """Wide-band-limit solution: U = exp(-(iM + Gamma/2) t), V by the
    frequency integral of the flat-spectrum closed form.

    The frequency integral is taken exactly: its sharp-Fermi-sea part
    reduces to logarithms and exponential integrals of the effective-mode
    poles, and the finite-temperature remainder is exponentially confined
    to a few k_T around each chemical potential where fixed Gauss panels
    resolve it. This keeps V positive semidefinite to rounding, which a
    truncated frequency window cannot guarantee.
    """
    if config.spectral_kind is not SpectralKind.WIDE_BAND:
        raise ConfigError("wbl_greens requires the wide-band spectral kind")
    m_mat = build_hamiltonian(config.system)
    gam = gamma_matrix(config)
    lams, projectors = _effective_hamiltonian_modes(m_mat, gam)

    times = grid.times
    phases = np.exp(-1j * np.outer(times, lams))  # (n+1, 2)
    u = np.einsum("tj,jab->tab", phases, np.stack(projectors))
    u[0] = IDENTITY2  # exact; the projector sum carries rounding noise

    v = np.zeros((len(times), 2, 2), dtype=complex)
    positive = times > 0.0
    tpos = times[positive]
    if tpos.size:
        acc = np.zeros((len(tpos), 2, 2), dtype=complex)
        for idx, res in enumerate(config.reservoirs):
            if res.gamma == 0.0:
                continue
            acc += _wbl_lead_fluctuation(lams, projectors, res, idx, tpos, False)
        v[positive] = acc
    v = 0.5 * (v + np.conj(np.transpose(v, (0, 2, 1))))
    return GreensSolution(grid, u, v)


def wbl_steady_fluctuation(config: ModelConfig) -> np.ndarray:
    """t -> infinity limit of the wide-band fluctuation matrix."""
    if config.spectral_kind is not SpectralKind.WIDE_BAND:
        raise ConfigError("wbl_steady_fluctuation requires the wide-band spectral kind")
    m_mat = build_hamiltonian(config.system)
    gam = gamma_matrix(config)
    if np.trace(gam) == 0.0:
        raise SolverError("no damping: the wide-band steady state is undefined")
    lams, projectors = _effective_hamiltonian_modes(m_mat, gam)
    v = np.zeros((1, 2, 2), dtype=complex)
    for idx, res in enumerate(config.reservoirs):
        if res.gamma == 0.0:
            continue
        v += _wbl_lead_fluctuation(
            lams, projectors, res, idx, np.array([1.0]), True
        )
    v2 = 0.5 * (v[0] + dagger(v[0]))
    eigs = np.linalg.eigvalsh(v2)
    if eigs.min() < EIGENVALUE_FLOOR or eigs.max() > EIGENVALUE_CEIL:
        raise InvariantViolation(
            f"wide-band steady spectrum [{eigs.min():.3e}, {eigs.max():.3e}] leaves [0, 1]"
        )
    return v2


# ---------------------------------------------------------------------------
# Born-Markov limit
# ---------------------------------------------------------------------------


def bm_fluctuation(config: ModelConfig, grid: TimeGrid):
    """Born-Markov fluctuation V_BM(t) and its stationary value.

    V_BM(t) = int_0^t U_WBL(s) nbar(eps, T) Gamma U_WBL(s)^dag ds solved in
    closed form through the Sylvester equation A X + X A^dag = nbar Gamma
    with A = iM + Gamma/2, giving V_BM(t) = X - U X U^dag exactly.
    """
    if config.spectral_kind is not SpectralKind.WIDE_BAND:
        raise ConfigError("bm_fluctuation requires the wide-band spectral kind")
    m_mat = build_hamiltonian(config.system)
    gam = gamma_matrix(config)
    occ = np.diag(
        [
            fermi_occupation(config.system.eps1, config.left.mu, config.left.k_t),
            fermi_occupation(config.system.eps2, config.right.mu, config.right.k_t),
        ]
    )
    source = occ @ gam
    times = grid.times
    if np.max(np.abs(source)) == 0.0:
        zeros = np.zeros((len(times), 2, 2), dtype=complex)
        return zeros, np.zeros((2, 2), dtype=complex)

    a_mat = 1j * m_mat + 0.5 * gam
    try:
        x = sla.solve_sylvester(a_mat, dagger(a_mat), source.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"Born-Markov Sylvester equation is singular: {exc}")
    lams, projectors = _effective_hamiltonian_modes(m_mat, gam)
    phases = np.exp(-1j * np.outer(times, lams))
    u = np.einsum("tj,jab->tab", phases, np.stack(projectors))
    u_dag = np.conj(np.transpose(u, (0, 2, 1)))
    v = x[None, :, :] - u @ x @ u_dag
    v = 0.5 * (v + np.conj(np.transpose(v, (0, 2, 1))))
    v[0] = 0.0
    x = 0.5 * (x + dagger(x))
    return v, x
