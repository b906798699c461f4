"""Fermionic entanglement of formation for the two-mode even-parity state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import InvariantViolation, as_mat2, det2
from .state import DensityBlocks

DEGENERATE_TOL = 1e-12
ROUNDING_CLAMP = 1e-9


@dataclass(frozen=True)
class EofResult:
    """Entanglement of formation with its per-block ingredients."""

    value: float
    lam: tuple
    k_terms: tuple


def _lambda_k(block) -> tuple:
    """(lambda, K) of one 2x2 block.

    The degenerate case (equal diagonals, vanishing off-diagonal) is the
    0/0 point of the lambda formula; there K = 0 identically.
    """
    diff = (block[0, 0] - block[1, 1]).real
    off = block[0, 1]
    if abs(diff) < DEGENERATE_TOL and abs(off) < DEGENERATE_TOL:
        return 0.0, 0.0
    lam = diff / np.sqrt(diff * diff + 4.0 * abs(off) ** 2)
    k = 0.0
    for s in (-1.0, +1.0):
        p = 1.0 + s * lam
        if p > 0.0:
            k += p * np.log2(p / 2.0)
    return float(lam), float(k)


def fermionic_eof(rho: DensityBlocks) -> EofResult:
    """EoF of a valid pair of density blocks: -1/2 sum_s tr(rho_s) K_s."""
    lam1, k1 = _lambda_k(rho.rho1)
    lam2, k2 = _lambda_k(rho.rho2)
    tr1 = np.trace(rho.rho1).real
    tr2 = np.trace(rho.rho2).real
    value = -0.5 * (tr1 * k1 + tr2 * k2)
    value = _checked_value(value)
    return EofResult(value=value, lam=(lam1, lam2), k_terms=(k1, k2))


def steady_state_eof(v_s) -> float:
    """Stationary EoF straight from V^s: (det V - tr V / 2) K_2.

    Agrees with fermionic_eof(steady_state_density(v_s)) because the
    stationary rho1 is diagonal, which forces K_1 = 0.
    """
    v = as_mat2(v_s)
    det_v = det2(v).real
    tr_v = np.trace(v).real
    rho2 = v - det_v * np.eye(2)
    _, k2 = _lambda_k(rho2)
    return _checked_value((det_v - 0.5 * tr_v) * k2)


def _checked_value(value: float) -> float:
    if value > 1.0 + ROUNDING_CLAMP:
        raise InvariantViolation(f"entanglement {value} exceeds 1")
    if value < -ROUNDING_CLAMP:
        raise InvariantViolation(f"entanglement {value} is negative")
    if value <= 0.0:
        return 0.0  # rounding dust (also normalizes -0.0)
    return float(value)
