"""Feedback gain design by pole assignment, and its round-level realization.

The design moves the slow complex pair of the open-loop spectrum by b while
pinning the other three poles, using single-input placement through the
channel B = (0,0,0,1,1). Sign convention, fixed against the reference gain
table: closed loop J + outer(B, K) with input u = K . (x - anchor).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import game
from .dynamics import JacobianMatrix, VectorField, eigs, jacobian, replicator_field, replicator_velocity

CHANNEL = np.array([0.0, 0.0, 0.0, 1.0, 1.0])

# Real-part shift applied to the leading pair per unit b.
SHIFT_PATTERN = np.array([1.0, 1.0, 0.0, 0.0, 0.0])

# Stability margin: the pair starts at real part -1/3, so the closed loop
# loses stability exactly when b exceeds 1/3.
STABILITY_MARGIN = 1 / 3


class Uncontrollable(ValueError):
    """Placement impossible: controllability matrix is rank deficient."""

    def __init__(self, rank: int):
        super().__init__(f"controllability rank {rank} < 5")
        self.rank = rank


class ConjugationViolation(ValueError):
    """Target spectrum is not closed under complex conjugation."""


@dataclass(frozen=True, eq=False)
class ControlDesign:
    b: float
    B: np.ndarray
    K: np.ndarray
    lambda_target: np.ndarray
    anchor: np.ndarray


@dataclass(frozen=True)
class ControlMode:
    """How the feedback acts: 'velocity' bends the flow, 'payoff' pays agents.

    gain_scale multiplies the scalar feedback into per-round points and only
    applies in payoff mode; default 4 matches the number of opponents met
    per round, keeping control terms comparable to game earnings.
    """

    kind: str = "payoff"
    gain_scale: float = 4.0

    def __post_init__(self):
        if self.kind not in ("velocity", "payoff"):
            raise ValueError(f"unknown control mode {self.kind!r}")
        if self.kind == "payoff" and self.gain_scale <= 0:
            raise ValueError("gain_scale must be positive")


def target_spectrum(lambda_open, b: float) -> np.ndarray:
    """Shift the real parts of the leading complex pair by b, keep the rest."""
    lam = np.array(lambda_open, dtype=complex)
    return lam + b * SHIFT_PATTERN


def place_poles(J, B, lambda_target) -> np.ndarray:
    """Unique single-input gain K making J + outer(B, K) carry the targets.

    Ackermann's construction: K = -e5' C^-1 phi(J) where C is the
    controllability matrix of (J, B) and phi the target characteristic
    polynomial.
    """
    J = np.asarray(J, dtype=float)
    B = np.asarray(B, dtype=float)
    lam = np.array(lambda_target, dtype=complex)
    if not np.allclose(np.sort_complex(lam), np.sort_complex(np.conj(lam)), atol=1e-9):
        raise ConjugationViolation("targets must come in conjugate pairs")
    n = J.shape[0]
    C = np.column_stack([np.linalg.matrix_power(J, i) @ B for i in range(n)])
    rank = int(np.linalg.matrix_rank(C))
    if rank < n:
        raise Uncontrollable(rank)
    coeffs = np.poly(lam).real
    phi = np.zeros_like(J)
    for c in coeffs:
        phi = phi @ J + c * np.eye(n)
    last_row_of_inv = np.linalg.solve(C.T, np.eye(n)[:, n - 1])
    return -(last_row_of_inv @ phi)


def closed_loop_jacobian(J, B, K) -> JacobianMatrix:
    """Rank-one closed loop J + outer(B, K)."""
    entries = np.asarray(J, dtype=float) + np.outer(B, K)
    if isinstance(J, JacobianMatrix):
        return JacobianMatrix(entries, J.base_point, J.step)
    return JacobianMatrix(entries, None, float("nan"))


def design_controller(A, b: float, h: float = 1e-6) -> ControlDesign:
    """Full design chain at the interior equilibrium: Jacobian, spectrum,
    shifted targets, gain. b = 0 yields the exact zero gain."""
    anchor = np.asarray(game.NASH_1, dtype=float)
    J = jacobian(replicator_field(A), anchor, h)
    lambda_open = eigs(J).eigenvalues
    lam = target_spectrum(lambda_open, b)
    if b == 0:
        K = np.zeros(game.N_STRATEGIES)
    else:
        K = place_poles(J, CHANNEL, lam)
    return ControlDesign(b=float(b), B=CHANNEL.copy(), K=K, lambda_target=lam, anchor=anchor)


def feedback_input(design: ControlDesign, x) -> float:
    """Scalar feedback u = K . (x - anchor)."""
    return float(design.K @ (np.asarray(x, dtype=float) - design.anchor))


def control_payoffs(design: ControlDesign, mode: ControlMode, counts) -> tuple[np.ndarray, np.ndarray]:
    """Per-strategy (reward, tax) for one round at social state counts.

    The scalar feedback at the realized state is injected through the
    channel: c_i = gain_scale * B_i * u, split into reward (positive part)
    and tax (negative part). A player choosing i receives reward_i + tax_i
    on top of the round game payoff.
    """
    if mode.kind != "payoff":
        raise ValueError("control_payoffs applies to payoff mode")
    counts = np.asarray(counts)
    u = feedback_input(design, counts / counts.sum())
    c = mode.gain_scale * design.B * u
    return np.maximum(c, 0.0), np.minimum(c, 0.0)


def controlled_velocity(A, x, design: ControlDesign) -> np.ndarray:
    """Velocity-mode closed loop: replicator flow plus B times the feedback.

    No renormalization here; the channel does not sum to zero, so the
    integrator's projection handles simplex leakage.
    """
    return replicator_velocity(A, x) + design.B * feedback_input(design, x)


def closed_loop_field(A, design: ControlDesign) -> VectorField:
    return VectorField(lambda x: controlled_velocity(A, x, design), label=f"closed-loop(b={design.b:g})")


def permute_design(design: ControlDesign, perm: game.StrategyPermutation) -> ControlDesign:
    """Relabel all design vectors so control follows a permuted game."""
    return ControlDesign(
        b=design.b,
        B=perm.vector(design.B),
        K=perm.vector(design.K),
        lambda_target=design.lambda_target.copy(),
        anchor=perm.vector(design.anchor),
    )


def closed_loop_max_real(A, b: float, h: float = 1e-6) -> float:
    """Max real part of the achieved closed-loop spectrum at the anchor."""
    design = design_controller(A, b, h)
    J = jacobian(replicator_field(A), design.anchor, h)
    achieved = eigs(closed_loop_jacobian(J, design.B, design.K)).eigenvalues
    return float(achieved.real.max())


def stability_boundary(A, lo: float = 0.0, hi: float = 1.0, tol: float = 1e-3,
                       h: float = 1e-6) -> float:
    """Bisect for the b where the closed loop loses stability (expect 1/3)."""
    f_lo = closed_loop_max_real(A, lo, h)
    f_hi = closed_loop_max_real(A, hi, h)
    if f_lo >= 0 or f_hi <= 0:
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if closed_loop_max_real(A, mid, h) < 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def _complex_pairs(values) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in np.asarray(values, dtype=complex)]


def design_report(A, b: float, h: float = 1e-6) -> dict:
    """JSON-ready report of one design: gains, spectra, controllability."""
    anchor = np.asarray(game.NASH_1, dtype=float)
    J = jacobian(replicator_field(A), anchor, h)
    lambda_open = eigs(J).eigenvalues
    design = design_controller(A, b, h)
    achieved = eigs(closed_loop_jacobian(J, design.B, design.K)).eigenvalues
    return {
        "b": float(b),
        "B": [float(v) for v in design.B],
        "K": [float(v) for v in design.K],
        "lambda_open": _complex_pairs(lambda_open),
        "lambda_target": _complex_pairs(design.lambda_target),
        "lambda_achieved": _complex_pairs(achieved),
        "max_real_part_achieved": float(achieved.real.max()),
        "controllability_rank": _controllability_rank(J, design.B),
        "sign_convention": "closed loop J + outer(B, K), input u = K.(x - anchor)",
    }


def _controllability_rank(J, B) -> int:
    J = np.asarray(J, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.column_stack([np.linalg.matrix_power(J, i) @ B for i in range(J.shape[0])])
    return int(np.linalg.matrix_rank(C))
