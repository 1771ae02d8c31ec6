"""Replicator vector field, numerical Jacobians, spectra, and integration.

Everything here works in ambient 5-space: Jacobian perturbations leave the
simplex on purpose (the five-eigenvalue bookkeeping needs the full matrix),
and the integrator optionally projects back after each step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .game import N_STRATEGIES, on_simplex


class BlowUp(RuntimeError):
    """Raised when an integrated component leaves the |x| <= 10 guard box."""

    def __init__(self, step: int):
        super().__init__(f"trajectory blew up at step {step}")
        self.step = step


@dataclass(frozen=True)
class VectorField:
    """A deterministic velocity field over population states, with a label."""

    fn: Callable[[np.ndarray], np.ndarray]
    label: str = "open-loop"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.fn(x)


@dataclass(frozen=True)
class JacobianMatrix:
    """Finite-difference Jacobian with its base point and step size."""

    entries: np.ndarray
    base_point: np.ndarray
    step: float

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self.entries.astype(dtype)
        return self.entries


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in canonical order with phase-normalized eigenvectors.

    Order: descending real part, ties broken by descending imaginary part.
    Eigenvector i is the column eigenvectors[:, i], unit norm, rotated so its
    largest-magnitude component is real and positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def leading(self) -> complex:
        return complex(self.eigenvalues[np.argmax(self.eigenvalues.real)])


def replicator_velocity(A, x) -> np.ndarray:
    """Growth of above-average strategies: x_i * ((A x)_i - x.A x)."""
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    payoffs = A @ x
    return x * (payoffs - x @ payoffs)


def replicator_field(A) -> VectorField:
    return VectorField(lambda x: replicator_velocity(A, x), label="open-loop")


def jacobian(f: Callable, x0, h: float = 1e-6) -> JacobianMatrix:
    """Central-difference Jacobian in ambient 5-space, no renormalization."""
    if h <= 0:
        raise ValueError("step h must be positive")
    x0 = np.asarray(x0, dtype=float)
    J = np.empty((N_STRATEGIES, N_STRATEGIES))
    for j in range(N_STRATEGIES):
        e = np.zeros(N_STRATEGIES)
        e[j] = h
        J[:, j] = (np.asarray(f(x0 + e), dtype=float) - np.asarray(f(x0 - e), dtype=float)) / (2 * h)
    return JacobianMatrix(J, x0, h)


def _phase_normalize(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    phase = v[k] / abs(v[k])
    return v * np.conj(phase)


def eigs(J) -> Spectrum:
    """Full complex eigendecomposition in the canonical order."""
    J = np.asarray(J, dtype=float)
    w, V = np.linalg.eig(J)
    order = np.lexsort((-w.imag, -w.real))
    w = w[order]
    V = V[:, order]
    V = np.column_stack([_phase_normalize(V[:, i]) for i in range(V.shape[1])])
    return Spectrum(w, V)


def integrate(f: Callable, x0, dt: float, steps: int, renormalize: bool = True) -> np.ndarray:
    """Fixed-step 4th-order integration; returns an array of steps+1 states.

    With `renormalize`, each step is projected back onto the simplex by
    clipping negatives to zero and rescaling to unit sum. Components beyond
    magnitude 10 abort with BlowUp.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.asarray(x0, dtype=float)
    if not on_simplex(x, tol=1e-9):
        raise ValueError("x0 must lie on the simplex")
    traj = np.empty((steps + 1, N_STRATEGIES))
    traj[0] = x
    for s in range(steps):
        k1 = np.asarray(f(x), dtype=float)
        k2 = np.asarray(f(x + dt / 2 * k1), dtype=float)
        k3 = np.asarray(f(x + dt / 2 * k2), dtype=float)
        k4 = np.asarray(f(x + dt * k3), dtype=float)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if renormalize:
            x = np.clip(x, 0, None)
            x = x / x.sum()
        if np.abs(x).max() > 10:
            raise BlowUp(s + 1)
        traj[s + 1] = x
    return traj


def renormalized_field(f: Callable) -> VectorField:
    """Project a field onto constant-sum flow: g(x) = f(x) - x * sum(f(x)).

    States that are fixed only up to rescaling (the ambient field pushes mass
    uniformly in or out) become genuine zeros of g.
    """
    def g(x):
        v = np.asarray(f(x), dtype=float)
        return v - np.asarray(x, dtype=float) * v.sum()

    label = getattr(f, "label", "field")
    return VectorField(g, label=f"renormalized({label})")


def _tangent_basis() -> np.ndarray:
    # Orthonormal basis of the sum-zero subspace, fixed by SVD of the
    # all-ones row so it is deterministic across calls.
    return np.linalg.svd(np.ones((1, N_STRATEGIES)))[2][1:].T


def tangent_spectrum(f: Callable, x0, h: float = 1e-6) -> np.ndarray:
    """Eigenvalues of the renormalized field restricted to the sum-zero
    tangent space at x0; four complex values in canonical order."""
    g = renormalized_field(f)
    J = jacobian(g, x0, h).entries
    V = _tangent_basis()
    w = np.linalg.eigvals(V.T @ J @ V)
    return w[np.lexsort((-w.imag, -w.real))]


def save_trajectory(traj: np.ndarray, dt: float, path) -> None:
    """CSV export with header t,x1..x5; time column is step*dt; 12 significant digits."""
    traj = np.asarray(traj, dtype=float)
    with open(path, "w") as fh:
        fh.write("t,x1,x2,x3,x4,x5\n")
        for s, row in enumerate(traj):
            cells = ",".join(f"{v:.11e}" for v in row)
            fh.write(f"{s * dt:.11e},{cells}\n")
