"""The five-strategy game: payoffs, Nash verification, strategy relabeling.

Payoffs are kept as exact integers and rationals (`fractions.Fraction` inside
object arrays) so that equilibrium identities hold without tolerances; floats
enter only at the dynamics boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

import numpy as np

N_STRATEGIES = 5

# Strategies are X1..X5; matrix entry [i][j] is the payoff of playing i
# against j (row player), in points.
PAYOFF_MATRIX = np.array([
    [0, 0, 2, 0, -2],
    [2, 0, 0, -2, 0],
    [0, 2, 0, 2, -1],
    [-2, 0, 1, 0, 1],
    [0, -2, -2, 1, 0],
])


def exact(numerators, denominator=1) -> np.ndarray:
    """Vector of Fractions in an object array, so matmul stays exact."""
    return np.array([Fraction(int(n), denominator) for n in numerators], dtype=object)


NASH_1 = exact([1, 1, 1, 0, 0], 3)
NASH_2 = exact([0, 0, 0, 1, 1], 2)
UNIFORM = exact([1, 1, 1, 1, 1], 5)


def on_simplex(x, tol: float = 1e-12) -> bool:
    x = np.asarray(x, dtype=float)
    return x.shape == (N_STRATEGIES,) and (x >= -tol).all() and abs(x.sum() - 1) <= tol


def to_simplex(counts) -> np.ndarray:
    """Exact population shares counts/N for an integer count vector."""
    counts = np.asarray(counts)
    n = int(counts.sum())
    if n < 1:
        raise ValueError("empty population")
    return exact(counts, n)


def expected_payoffs(A, x) -> np.ndarray:
    """Per-strategy payoff against the mixed population x: component i is (A x)_i."""
    return np.asarray(A) @ np.asarray(x)


def mean_payoff(A, x):
    """Population average payoff x . A x."""
    x = np.asarray(x)
    return x @ (np.asarray(A) @ x)


def round_payoffs(A, counts) -> np.ndarray:
    """Round earnings per strategy when each player meets every other once.

    counts includes the focal player, so a player on strategy i earns
    sum_j (counts[j] - delta_ij) * A[i][j]: self-play excluded.
    """
    counts = np.asarray(counts)
    if counts.sum() < 2:
        raise ValueError("need at least 2 players")
    if (counts < 0).any():
        raise ValueError("negative counts")
    A = np.asarray(A)
    return A @ counts - np.diagonal(A)


@dataclass(frozen=True)
class NashCheck:
    """Outcome of a Nash verification: truthy iff the point passed."""

    ok: bool
    payoffs: np.ndarray
    violator: int | None  # 1-based support strategy paying furthest below max

    def __bool__(self) -> bool:
        return self.ok


def is_nash(A, x, tol: float = 1e-9) -> NashCheck:
    """Check that every support strategy of x attains the maximum payoff.

    Weak equilibria are accepted: off-support strategies may tie the maximum.
    Comparisons use >= -tol, never strict inequality.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.asarray(x)
    payoffs = expected_payoffs(A, x)
    best = max(payoffs)
    support = [i for i in range(N_STRATEGIES) if x[i] > 0]
    losers = [i for i in support if payoffs[i] < best - tol]
    if not losers:
        return NashCheck(True, payoffs, None)
    worst = min(losers, key=lambda i: payoffs[i])
    return NashCheck(False, payoffs, worst + 1)


EQUILIBRIA = (("Nash_1", NASH_1), ("Nash_2", NASH_2))

# The seven relabelings used by session tooling: identity plus one swap of a
# low strategy {1,2,3} with a high one {4,5}.
CANONICAL_PERMUTATION_CODES = ("00", "14", "15", "24", "25", "34", "35")


@dataclass(frozen=True)
class StrategyPermutation:
    """Strategy relabeling: identity ("00") or a transposition ("ij").

    A transposition is its own inverse, so applying the same permutation
    de-permutes. The library accepts any swap of two distinct strategies;
    session tooling restricts codes to CANONICAL_PERMUTATION_CODES.
    """

    code: str

    def __post_init__(self):
        if self.code != "00":
            if (
                len(self.code) != 2
                or not self.code.isdigit()
                or self.code[0] == self.code[1]
                or "0" in self.code
            ):
                raise ValueError(f"malformed permutation code {self.code!r}")

    @property
    def mapping(self) -> np.ndarray:
        """0-based index array p with p[k] the strategy relabeled onto slot k."""
        p = np.arange(N_STRATEGIES)
        if self.code != "00":
            i, j = int(self.code[0]) - 1, int(self.code[1]) - 1
            p[i], p[j] = p[j], p[i]
        return p

    @property
    def is_identity(self) -> bool:
        return self.code == "00"

    @property
    def is_canonical(self) -> bool:
        return self.code in CANONICAL_PERMUTATION_CODES

    def matrix(self, A) -> np.ndarray:
        """Two-sided relabeling A'[k][l] = A[p(k)][p(l)]."""
        p = self.mapping
        return np.asarray(A)[np.ix_(p, p)]

    def vector(self, v) -> np.ndarray:
        """One-sided relabeling v'[k] = v[p(k)]."""
        return np.asarray(v)[self.mapping]

    def strategy(self, choice: int) -> int:
        """Relabel a 1-based strategy index."""
        if not 1 <= choice <= N_STRATEGIES:
            raise ValueError(f"strategy index {choice} out of range")
        return int(self.mapping[choice - 1]) + 1


def apply_permutation(perm: StrategyPermutation, objects: dict) -> dict:
    """Relabel a bundle of game objects; matrices two-sided, vectors one-sided."""
    out = {}
    for key, value in objects.items():
        arr = np.asarray(value)
        if arr.ndim == 2:
            out[key] = perm.matrix(arr)
        elif arr.ndim == 1:
            out[key] = perm.vector(arr)
        else:
            raise ValueError(f"cannot permute object {key!r} of ndim {arr.ndim}")
    return out


def load_game(path=None):
    """Load a game file: (payoff matrix, [(label, shares), ...]).

    The file is a JSON object with keys `payoff_matrix` and `equilibria`;
    the bundled default is the canonical five-strategy game.
    """
    if path is None:
        text = resources.files("evoctrl.data").joinpath("game.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    raw = json.loads(text)
    A = np.array(raw["payoff_matrix"])
    if A.shape != (N_STRATEGIES, N_STRATEGIES):
        raise ValueError(f"payoff matrix must be 5x5, got {A.shape}")
    if np.issubdtype(A.dtype, np.floating) and (A == A.astype(int)).all():
        A = A.astype(int)
    equilibria = [(e["label"], np.array(e["shares"], dtype=float)) for e in raw.get("equilibria", [])]
    return A, equilibria
