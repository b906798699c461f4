"""Even-parity density blocks of the double dot and their propagation.

The reduced state lives in two 2x2 blocks: rho1 on the {vacuum, doubly
occupied} pair and rho2 on the {mode 1, mode 2} single-occupancy pair.
Parity superselection forbids coherences between the blocks, so this is
the complete state. Evolution needs only (U, V) through four coefficient
matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    IDENTITY2,
    InvariantViolation,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Y,
    SolverError,
    as_mat2,
    dagger,
    det2,
    inv2,
)

TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8
BLOCK_HERMITICITY_TOL = 1e-8


@dataclass
class PropagatorCoefficients:
    """J1, J2, J3 and the normalization A of the Gaussian propagator."""

    j1: np.ndarray
    j2: np.ndarray
    j3: np.ndarray
    a: complex


def propagator_coefficients(u, v) -> PropagatorCoefficients:
    """Coefficients (J1, J2, J3, A) from a propagator pair (U, V).

    W = (I - V)^-1, J1 = W U, J2 = W - I, J3 = U^dag W U - I, A = 1/det W.
    The inverse fails only at a fully occupied point (V eigenvalue 1).
    """
    u = as_mat2(u)
    v = as_mat2(v)
    one_minus_v = IDENTITY2 - v
    det_w_inv = det2(one_minus_v)
    if abs(det_w_inv) < 1e-14:
        raise SolverError(
            "I - V is singular (occupation reached 1); coefficients undefined"
        )
    w = inv2(one_minus_v)
    return PropagatorCoefficients(
        j1=w @ u,
        j2=w - IDENTITY2,
        j3=dagger(u) @ w @ u - IDENTITY2,
        a=complex(det_w_inv),
    )


def _check_block(name, m):
    m = as_mat2(m)
    if np.max(np.abs(m - dagger(m))) > BLOCK_HERMITICITY_TOL:
        raise InvariantViolation(f"{name} block is not Hermitian")
    eigs = np.linalg.eigvalsh(0.5 * (m + dagger(m)))
    if eigs.min() < -POSITIVITY_TOL:
        raise InvariantViolation(
            f"{name} block has negative eigenvalue {eigs.min():.3e}"
        )
    return m


@dataclass
class DensityBlocks:
    """rho1 over {|vac>, |1_1 1_2>}, rho2 over {|1_1>, |1_2>}."""

    rho1: np.ndarray
    rho2: np.ndarray

    def __post_init__(self):
        self.rho1 = _check_block("rho1", self.rho1)
        self.rho2 = _check_block("rho2", self.rho2)
        total = self.total_trace
        if abs(total - 1.0) > TRACE_TOL:
            raise InvariantViolation(f"total trace {total} != 1")

    @property
    def total_trace(self) -> float:
        return float(np.trace(self.rho1).real + np.trace(self.rho2).real)

    def occupations(self):
        """Mean occupation of each mode (single + double contributions)."""
        p_double = self.rho1[1, 1].real
        return (self.rho2[0, 0].real + p_double, self.rho2[1, 1].real + p_double)

    def purity(self) -> float:
        """Tr rho^2 of the block-diagonal four-level state."""
        return float(
            np.trace(self.rho1 @ self.rho1).real
            + np.trace(self.rho2 @ self.rho2).real
        )

    @classmethod
    def vacuum(cls) -> "DensityBlocks":
        return cls(np.diag([1.0, 0.0]), np.zeros((2, 2)))

    @classmethod
    def single(cls, mode: int) -> "DensityBlocks":
        """One electron in mode 1 or mode 2."""
        if mode not in (1, 2):
            raise ValueError(f"mode must be 1 or 2, got {mode}")
        r2 = np.zeros((2, 2))
        r2[mode - 1, mode - 1] = 1.0
        return cls(np.zeros((2, 2)), r2)

    @classmethod
    def bell(cls, sign: int = +1) -> "DensityBlocks":
        """(|1_1> + sign |1_2>)/sqrt(2), a maximally entangled single electron."""
        if sign not in (+1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign}")
        r2 = 0.5 * np.array([[1.0, sign], [sign, 1.0]])
        return cls(np.zeros((2, 2)), r2)

    @classmethod
    def double_occupied(cls) -> "DensityBlocks":
        return cls(np.diag([0.0, 1.0]), np.zeros((2, 2)))


def evolve_density(
    rho0: DensityBlocks, coeffs: PropagatorCoefficients
) -> DensityBlocks:
    """Propagate the density blocks with the coefficient matrices.

    Literal evaluation of the propagating-function result; no algebraic
    shortcuts, since the mixture of determinants, traces and sigma_y
    transposes is where sign errors hide. The identity coefficients
    (I, 0, 0, 1) return the input unchanged.
    """
    j1, j2, j3, a = coeffs.j1, coeffs.j2, coeffs.j3, coeffs.a
    r1, r2 = rho0.rho1, rho0.rho2

    det_j1 = det2(j1)
    det_j2 = det2(j2)
    det_j3 = det2(j3)
    p_vac = r1[0, 0]
    p_dbl = r1[1, 1]
    tr_r2_j3 = np.trace(r2 @ j3)

    j1_tilde = np.diag([1.0, det_j1])
    sy_j2t_sy = SIGMA_Y @ j2.T @ SIGMA_Y
    sy_j3t_sy = SIGMA_Y @ j3.T @ SIGMA_Y

    rho1_f = a * (
        j1_tilde
        @ (r1 + (p_dbl * det_j3 - tr_r2_j3) * (SIGMA_PLUS @ SIGMA_MINUS))
        @ dagger(j1_tilde)
    )
    scalar = (
        np.trace(sy_j2t_sy @ j1 @ r2 @ dagger(j1))
        - p_dbl * np.trace(sy_j2t_sy @ j1 @ sy_j3t_sy @ dagger(j1))
        + (p_vac - tr_r2_j3 + p_dbl * det_j3) * det_j2
    )
    rho1_f = rho1_f + a * scalar * (SIGMA_MINUS @ SIGMA_PLUS)

    rho2_f = a * (j1 @ (r2 - p_dbl * sy_j3t_sy) @ dagger(j1)) + a * (
        p_vac + p_dbl * det_j3 - tr_r2_j3
    ) * j2

    return DensityBlocks(rho1_f, rho2_f)


def steady_state_density(v_s) -> DensityBlocks:
    """Thermalized blocks determined by the stationary fluctuation matrix.

    rho1 = diag(1 + det V - tr V, det V), rho2 = V - (det V) I; the
    vacuum/double coherence is exactly zero in the steady state.
    """
    v = as_mat2(v_s)
    det_v = det2(v).real
    tr_v = np.trace(v).real
    rho1 = np.diag([1.0 + det_v - tr_v, det_v]).astype(complex)
    rho2 = v - det_v * IDENTITY2
    return DensityBlocks(rho1, rho2)
