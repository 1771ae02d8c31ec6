"""Frozen regression references for the design chain.

Open-loop spectrum and eigenvector table at the interior equilibrium, the
gain rows for the five standard treatments, and the open-loop spectrum at the
two-strategy equilibrium. These are oracles computed once and pinned: the
spectrum against its closed form, the gains against an independent placement
route. `verify` (CLI) and the regression tests recompute everything from the
game matrix and compare against this module.
"""

from __future__ import annotations

import numpy as np

TREATMENT_BS = (-0.8, -0.4, 0.0, 0.4, 0.8)

# Interior-equilibrium open-loop eigenvalues, canonical order (descending
# real part, complex pair first). The leading pair is (-1 +/- sqrt(3) i)/3.
OPEN_LOOP_EIGENVALUES = np.array([
    complex(-1 / 3, np.sqrt(3) / 3),
    complex(-1 / 3, -np.sqrt(3) / 3),
    -2 / 3,
    -1.0,
    -2.0,
])

# Eigenvector table at the interior equilibrium, columns matching the
# eigenvalue order above, rounded to 3 decimals. Comparisons align phase by
# inner product first; columns 1-3 have three equal-magnitude components, so
# argmax-based phase picking is unstable across linear-algebra builds.
EIGENVECTOR_TABLE = np.array([
    [complex(-.289, -.5), complex(-.289, .5), .577, .151, -.161],
    [complex(-.289, .5), complex(-.289, -.5), .577, -.030, -.462],
    [.577, .577, .577, -.757, -.221],
    [0, 0, 0, .636, 0],
    [0, 0, 0, 0, .844],
], dtype=complex)

# Column 4 recomputed at full precision (the 3-decimal table rounds it).
EIGENVECTOR_4_PRECISE = np.array([0.15132, -0.03026, -0.75662, 0.63556, 0.0])

# Gain rows K(b) for the five standard treatments, 4 decimals. Exact
# invariants: k1+k2+k3 = 0 and k4+k5 = 2b for every row.
GAIN_TABLE = {
    -0.8: np.array([0.5247, 0.9485, -1.4732, -1.8335, 0.2335]),
    -0.4: np.array([0.3834, 0.2623, -0.6458, -0.8476, 0.0476]),
    0.0: np.zeros(5),
    0.4: np.array([-0.6256, 0.1614, 0.4641, 0.7092, 0.0908]),
    0.8: np.array([-1.4933, 0.7467, 0.7467, 1.28, 0.32]),
}

# Open-loop spectrum at the two-strategy equilibrium (ambient). The zero is
# the radial direction; the tangent part is strictly stable.
NASH_2_OPEN_SPECTRUM = np.array([0.0, -0.5, -0.5, -1.5, -1.5])

# Distances from the uniform state to the two equilibria, closed form.
UNIFORM_TO_NASH_1 = np.sqrt(30) / 15
UNIFORM_TO_NASH_2 = np.sqrt(30) / 10


def phase_align(column, reference) -> np.ndarray:
    """Rotate and scale a unit eigenvector to best match the reference."""
    column = np.asarray(column, dtype=complex)
    reference = np.asarray(reference, dtype=complex)
    inner = np.vdot(column, reference)
    if abs(inner) == 0:
        return column
    return column * (inner / abs(inner)) * (np.linalg.norm(reference) / np.linalg.norm(column))
