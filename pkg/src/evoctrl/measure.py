"""Session measurements: mean distributions, distance-to-equilibrium curves,
angular momentum over the ten coordinate planes, and cycle strength.

All operations accept either a StateSeries or a plain (T, 5) array of simplex
points. Aggregation works on session logs and emits the three figure tables
(long-run distributions, convergence curves, cycle strengths) as CSV.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import game
from .agents import SessionLog

# Coordinate-plane pairs (m, n), 1-based, m > n, in fixed column order.
PAIRS: tuple[tuple[int, int], ...] = tuple(
    (m, n) for m in range(2, game.N_STRATEGIES + 1) for n in range(1, m)
)

# Pairs lying inside the {1,2,3} face; rotation concentrates here open loop.
FACE_PAIRS: tuple[tuple[int, int], ...] = ((2, 1), (3, 1), (3, 2))

DEFAULT_SMOOTHING = 20

# Selection threshold on b: above it the design destabilizes the interior
# equilibrium and the two-strategy equilibrium becomes the target.
TARGET_SWITCH_B = 1 / 3


@dataclass(frozen=True)
class StateSeries:
    """Ordered simplex points rho(t), t = 1..T, with the frame they live in."""

    states: np.ndarray
    frame: str = "canonical"

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[1] != game.N_STRATEGIES:
            raise ValueError(f"series must be (T, {game.N_STRATEGIES})")
        if len(states) < 1:
            raise ValueError("series must hold at least one state")
        for row in states:
            if not game.on_simplex(row, tol=1e-9):
                raise ValueError("series entries must lie on the simplex")
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return len(self.states)


def as_states(series) -> np.ndarray:
    if isinstance(series, StateSeries):
        return series.states
    return StateSeries(np.asarray(series, dtype=float)).states


def log_series(log: SessionLog, frame: str = "canonical") -> StateSeries:
    return StateSeries(log.state_series(frame), frame=frame)


@dataclass(frozen=True)
class DistributionSummary:
    """Windowed mean state, per session and pooled across sessions."""

    rho_bar: np.ndarray       # cross-session mean, on the simplex
    per_session: np.ndarray   # (sessions, 5)
    se: np.ndarray            # cross-session standard error, zeros if 1 session
    b: float | None = None


@dataclass(frozen=True)
class ConvergenceCurve:
    target_label: str
    d: np.ndarray          # raw distances, one per round
    smoothed: np.ndarray   # centered moving average, edge-corrected
    window: int = DEFAULT_SMOOTHING


@dataclass(frozen=True)
class AngularMomentumSet:
    """Mean rotation in each of the ten (m, n) planes, ordered as PAIRS."""

    L: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        if L.shape != (len(PAIRS),):
            raise ValueError(f"need {len(PAIRS)} entries, got {L.shape}")
        object.__setattr__(self, "L", L)

    def value(self, m: int, n: int) -> float:
        """L for plane (m, n); order flip negates."""
        if m == n:
            raise ValueError("plane needs two distinct strategies")
        if m > n:
            return float(self.L[PAIRS.index((m, n))])
        return -float(self.L[PAIRS.index((n, m))])

    @property
    def strength(self) -> float:
        return float(np.sqrt((self.L ** 2).sum()))


@dataclass(frozen=True)
class EigencycleSet:
    """Predicted plane rotation pattern of one complex eigenvector."""

    sigma: np.ndarray

    def value(self, m: int, n: int) -> float:
        if m > n:
            return float(self.sigma[PAIRS.index((m, n))])
        return -float(self.sigma[PAIRS.index((n, m))])


def mean_distribution(series, window: tuple[int, int] | None = None,
                      b: float | None = None) -> DistributionSummary:
    """Arithmetic mean of rho(t) over a 1-based inclusive round window."""
    states = as_states(series)
    T = len(states)
    if window is None:
        lo, hi = 1, T
    else:
        lo, hi = int(window[0]), int(window[1])
    if not (1 <= lo <= hi <= T):
        raise ValueError(f"empty or out-of-range window [{lo}, {hi}] for T={T}")
    rho = states[lo - 1:hi].mean(axis=0)
    return DistributionSummary(rho_bar=rho, per_session=rho[None, :],
                               se=np.zeros(game.N_STRATEGIES), b=b)


def smooth(values, window: int = DEFAULT_SMOOTHING) -> np.ndarray:
    """Centered moving average; edges divide by the actual overlap count."""
    values = np.asarray(values, dtype=float)
    if window <= 1:
        return values.copy()
    kernel = np.ones(min(window, len(values)))
    num = np.convolve(values, kernel, mode="same")
    den = np.convolve(np.ones(len(values)), kernel, mode="same")
    return num / den


def target_for(b: float) -> tuple[str, np.ndarray]:
    if b > TARGET_SWITCH_B:
        return "Nash_2", np.asarray(game.NASH_2, dtype=float)
    return "Nash_1", np.asarray(game.NASH_1, dtype=float)


def _target_label(target: np.ndarray) -> str:
    if np.allclose(target, np.asarray(game.NASH_1, dtype=float), atol=1e-12):
        return "Nash_1"
    if np.allclose(target, np.asarray(game.NASH_2, dtype=float), atol=1e-12):
        return "Nash_2"
    return "custom"


def distance_curve(series, target, window: int = DEFAULT_SMOOTHING) -> ConvergenceCurve:
    """Euclidean distance of each state to a fixed simplex target."""
    states = as_states(series)
    target = np.asarray(target, dtype=float)
    if not game.on_simplex(target, tol=1e-9):
        raise ValueError("target must lie on the simplex")
    d = np.linalg.norm(states - target, axis=1)
    return ConvergenceCurve(target_label=_target_label(target), d=d,
                            smoothed=smooth(d, window), window=window)


def angular_momentum(series, center=None) -> AngularMomentumSet:
    """Mean signed area swept per transition in each coordinate plane.

    For pair (m, n): mean over t of rho_m(t) rho_n(t+1) - rho_n(t) rho_m(t+1),
    divided by the number of transitions T-1. `center` subtracts a fixed point
    first (off by default; the raw-position reading is the contract).
    """
    states = as_states(series)
    if len(states) < 2:
        raise ValueError("angular momentum needs at least two states")
    if center is not None:
        states = states - np.asarray(center, dtype=float)
    a, bb = states[:-1], states[1:]
    L = np.empty(len(PAIRS))
    for k, (m, n) in enumerate(PAIRS):
        i, j = m - 1, n - 1
        L[k] = (a[:, i] * bb[:, j] - a[:, j] * bb[:, i]).mean()
    return AngularMomentumSet(L)


def cycle_strength(L) -> float:
    """Euclidean norm over the ten planes."""
    if isinstance(L, AngularMomentumSet):
        return L.strength
    L = np.asarray(L, dtype=float)
    if L.shape != (len(PAIRS),):
        raise ValueError(f"need {len(PAIRS)} entries")
    return float(np.sqrt((L ** 2).sum()))


def eigencycle(eta, normalize: bool = True) -> EigencycleSet:
    """Plane rotation pattern sigma_mn = Im(conj(eta_m) eta_n) of an eigenvector.

    Real eigenvectors give all zeros (returned unnormalized); otherwise the
    set is scaled so the absolute entries sum to 1.
    """
    eta = np.asarray(eta, dtype=complex)
    if eta.shape != (game.N_STRATEGIES,):
        raise ValueError("eigenvector must have 5 components")
    if np.linalg.norm(eta) == 0:
        raise ValueError("zero vector has no cycle pattern")
    sigma = np.empty(len(PAIRS))
    for k, (m, n) in enumerate(PAIRS):
        sigma[k] = np.imag(np.conj(eta[m - 1]) * eta[n - 1])
    mass = np.abs(sigma).sum()
    if normalize and mass > 0:
        sigma = sigma / mass
    return EigencycleSet(sigma)


@dataclass(frozen=True)
class MeasurementReport:
    """Per-treatment aggregate: everything one figure row needs."""

    b: float
    n_sessions: int
    rounds: int
    distribution: DistributionSummary
    target_label: str
    d_mean: np.ndarray          # cross-session mean of raw per-session d(t)
    d_se: np.ndarray
    centroid_curve: ConvergenceCurve  # distances of the smoothed mean state
    momentum_per_session: np.ndarray  # (sessions, 10)
    momentum_mean: np.ndarray
    momentum_se: np.ndarray
    strengths: np.ndarray       # per-session |L|
    strength_mean: float
    strength_se: float


def _se(values: np.ndarray, axis: int = 0) -> np.ndarray:
    n = values.shape[axis]
    if n < 2:
        return np.zeros(values.shape[1 - axis] if values.ndim > 1 else ())
    return values.std(axis=axis, ddof=1) / np.sqrt(n)


def aggregate_treatment(logs: list[SessionLog], frame: str = "canonical",
                        window: int = DEFAULT_SMOOTHING) -> MeasurementReport:
    """Pool the sessions of one treatment into figure-ready statistics.

    Distances are averaged per-session-first (that is what the convergence
    figure plots); the centroid curve additionally smooths the cross-session
    mean state before taking distances, which is the threshold-crossing
    reading used by the convergence checks. Momentum is computed per session
    and averaged, with cross-session standard errors.
    """
    if not logs:
        raise ValueError("no logs")
    bs = {log.config.b for log in logs}
    if len(bs) > 1:
        raise ValueError(f"mixed treatments {sorted(bs)}")
    b = logs[0].config.b
    T = min(len(log.records) for log in logs)
    states = np.stack([log.state_series(frame)[:T] for log in logs])

    per_session_rho = states.mean(axis=1)
    distribution = DistributionSummary(
        rho_bar=per_session_rho.mean(axis=0),
        per_session=per_session_rho,
        se=_se(per_session_rho),
        b=b,
    )

    label, target = target_for(b)
    d_all = np.linalg.norm(states - target, axis=2)
    d_mean = d_all.mean(axis=0)
    d_se = _se(d_all)
    centroid = states.mean(axis=0)
    centroid_smooth = np.column_stack(
        [smooth(centroid[:, i], window) for i in range(game.N_STRATEGIES)])
    centroid_d = np.linalg.norm(centroid_smooth - target, axis=1)
    centroid_curve = ConvergenceCurve(target_label=label, d=centroid_d,
                                      smoothed=centroid_d, window=window)

    momentum = np.stack([angular_momentum(states[s]).L for s in range(len(logs))])
    strengths = np.sqrt((momentum ** 2).sum(axis=1))

    return MeasurementReport(
        b=b,
        n_sessions=len(logs),
        rounds=T,
        distribution=distribution,
        target_label=label,
        d_mean=d_mean,
        d_se=d_se,
        centroid_curve=centroid_curve,
        momentum_per_session=momentum,
        momentum_mean=momentum.mean(axis=0),
        momentum_se=_se(momentum),
        strengths=strengths,
        strength_mean=float(strengths.mean()),
        strength_se=float(_se(strengths[:, None])[0]),
    )


def first_crossing(values, threshold: float = 0.15) -> int | None:
    """1-based index of the first entry below threshold, None if never."""
    below = np.flatnonzero(np.asarray(values, dtype=float) < threshold)
    if len(below) == 0:
        return None
    return int(below[0]) + 1


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def write_distribution_table(reports: list[MeasurementReport], path) -> None:
    """Long-run distribution table: b, rho1..rho5, se1..se5."""
    with open(path, "w") as fh:
        fh.write("b,rho1,rho2,rho3,rho4,rho5,se1,se2,se3,se4,se5\n")
        for rep in reports:
            cells = [_fmt(rep.b)]
            cells += [_fmt(v) for v in rep.distribution.rho_bar]
            cells += [_fmt(v) for v in rep.distribution.se]
            fh.write(",".join(cells) + "\n")


def write_convergence_table(reports: list[MeasurementReport], path) -> None:
    """Convergence curve table: b, target, t, d_mean, d_se."""
    with open(path, "w") as fh:
        fh.write("b,target,t,d_mean,d_se\n")
        for rep in reports:
            for t in range(rep.rounds):
                fh.write(f"{_fmt(rep.b)},{rep.target_label},{t + 1},"
                         f"{_fmt(rep.d_mean[t])},{_fmt(rep.d_se[t])}\n")


def write_cycle_table(reports: list[MeasurementReport], path) -> None:
    """Cycle table: b, the ten mean plane momenta, |L| mean and SE."""
    header = ["b"] + [f"L_{m}{n}" for m, n in PAIRS] + ["absL", "absL_se"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for rep in reports:
            cells = [_fmt(rep.b)]
            cells += [_fmt(v) for v in rep.momentum_mean]
            cells += [_fmt(rep.strength_mean), _fmt(rep.strength_se)]
            fh.write(",".join(cells) + "\n")


def write_figure_tables(reports: list[MeasurementReport], out_dir) -> dict[str, str]:
    """All three tables; reports sorted by b. Returns name -> path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = sorted(reports, key=lambda r: r.b)
    paths = {
        "fig3": out / "fig3.csv",
        "fig4": out / "fig4.csv",
        "fig5": out / "fig5.csv",
    }
    write_distribution_table(reports, paths["fig3"])
    write_convergence_table(reports, paths["fig4"])
    write_cycle_table(reports, paths["fig5"])
    return {k: str(v) for k, v in paths.items()}
