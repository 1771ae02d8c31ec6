"""Finite-population round engine: bot sessions producing measurement-ready logs.

Five agents play the permuted game for a fixed number of rounds; each round
they see the same feedback a human seat would (own strategy, social state,
game earn, reward, tax, totals) and revise by a configurable decision rule.
Everything is deterministic given the config seed: each agent draws from its
own counter-based substream, so logs are reproducible bit for bit across
platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import game
from .control import ControlDesign, ControlMode, control_payoffs, design_controller, permute_design

TREATMENTS = {"N2": -0.8, "N1": -0.4, "o": 0.0, "P1": 0.4, "P2": 0.8}

# Session counts of the reference experiment design, per treatment label.
TREATMENT_SESSIONS = {"N2": 8, "N1": 8, "o": 8, "P1": 12, "P2": 12}


def treatment_label(b: float) -> str | None:
    for label, value in TREATMENTS.items():
        if abs(value - b) < 1e-12:
            return label
    return None


@dataclass(frozen=True)
class AgentPolicy:
    """Decision rule for bot agents.

    pairwise-imitation: pick a peer; adopt its last choice with probability
    max(0, total_peer - total_own) / payoff_span, clipped at 1. The peer is
    uniform over the other players (peer_selection "uniform", the default)
    or the top earner of the round (peer_selection "best").
    logit: softmax with intensity beta over estimated per-strategy totals.
    noisy-best-response: argmax of the same estimate, uniform with prob epsilon.

    The estimate used by logit and noisy-best-response is built from feedback
    alone, one of two ways. estimator "experience" (default) keeps a running
    mean of the realized totals observed per strategy, moved by learning_rate
    toward each round's realized value; strategies nobody played drift back
    toward the optimistic prior (payoff_span) at forget_rate, so no strategy
    is ever ruled out forever. It remembers how strategies paid across whole
    cycles rather than chasing the current state, and it is common to all
    seats because every seat sees the same feedback. estimator "state" values
    each strategy against the displayed social state and adds a shared
    reward/tax belief tracking what holders of each strategy were just paid,
    decaying at learning_rate per round where nobody played. Agents never see
    the gain vector itself.

    Each round an agent revises with probability revision_rate, otherwise
    repeats its last choice. Every rule mutates to a uniform random strategy
    with prob mutation_rate (independent of revision).
    """

    rule: str = "logit"
    beta: float = 3.0
    epsilon: float = 0.1
    mutation_rate: float = 0.01
    revision_rate: float = 1.0
    learning_rate: float = 0.5
    forget_rate: float = 0.02
    estimator: str = "experience"
    peer_selection: str = "uniform"
    payoff_span: float = 4.0

    def __post_init__(self):
        if self.rule not in (
            "pairwise-imitation",
            "logit",
            "noisy-best-response",
        ):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must be in [0, 1]")
        if not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation_rate must be in [0, 1]")
        if not 0 <= self.revision_rate <= 1:
            raise ValueError("revision_rate must be in [0, 1]")
        if not 0 <= self.learning_rate <= 1:
            raise ValueError("learning_rate must be in [0, 1]")
        if not 0 <= self.forget_rate <= 1:
            raise ValueError("forget_rate must be in [0, 1]")
        if self.estimator not in ("state", "experience"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.peer_selection not in ("best", "uniform"):
            raise ValueError(f"unknown peer_selection {self.peer_selection!r}")
        if self.payoff_span <= 0:
            raise ValueError("payoff_span must be positive")

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "beta": self.beta,
            "epsilon": self.epsilon,
            "mutation_rate": self.mutation_rate,
            "revision_rate": self.revision_rate,
            "learning_rate": self.learning_rate,
            "forget_rate": self.forget_rate,
            "estimator": self.estimator,
            "peer_selection": self.peer_selection,
            "payoff_span": self.payoff_span,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "AgentPolicy":
        return cls(**raw)


@dataclass(frozen=True)
class SessionConfig:
    b: float = 0.0
    permutation: str = "00"
    rounds: int = 360
    players: int = 5
    policy: AgentPolicy = field(default_factory=AgentPolicy)
    mode: ControlMode = field(default_factory=ControlMode)
    seed: int = 0
    session_id: str | None = None

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.players < 2:
            raise ValueError("players must be >= 2")
        perm = game.StrategyPermutation(self.permutation)
        if not perm.is_canonical:
            raise ValueError(f"session permutation must be one of {game.CANONICAL_PERMUTATION_CODES}")

    @property
    def perm(self) -> game.StrategyPermutation:
        return game.StrategyPermutation(self.permutation)

    @property
    def treatment(self) -> str | None:
        return treatment_label(self.b)

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "permutation": self.permutation,
            "rounds": self.rounds,
            "players": self.players,
            "policy": self.policy.to_dict(),
            "mode": {"kind": self.mode.kind, "gain_scale": self.mode.gain_scale},
            "seed": self.seed,
            "session_id": self.session_id,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SessionConfig":
        raw = dict(raw)
        raw["policy"] = AgentPolicy.from_dict(raw["policy"])
        raw["mode"] = ControlMode(**raw["mode"])
        return cls(**raw)


@dataclass(frozen=True)
class RoundRecord:
    """One resolved round, in the session's (permuted) strategy frame."""

    t: int
    choices: tuple[int, ...]  # 1-based strategies, one per player
    counts: tuple[int, ...]
    game_payoffs: tuple[float, ...]
    rewards: tuple[float, ...]
    taxes: tuple[float, ...]
    totals: tuple[float, ...]
    cumulative: tuple[float, ...]
    counts_canonical: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "choices": list(self.choices),
            "counts": list(self.counts),
            "game_payoffs": list(self.game_payoffs),
            "rewards": list(self.rewards),
            "taxes": list(self.taxes),
            "totals": list(self.totals),
            "cumulative": list(self.cumulative),
            "counts_canonical": list(self.counts_canonical),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RoundRecord":
        return cls(
            t=raw["t"],
            choices=tuple(raw["choices"]),
            counts=tuple(raw["counts"]),
            game_payoffs=tuple(raw["game_payoffs"]),
            rewards=tuple(raw["rewards"]),
            taxes=tuple(raw["taxes"]),
            totals=tuple(raw["totals"]),
            cumulative=tuple(raw["cumulative"]),
            counts_canonical=tuple(raw["counts_canonical"]),
        )


@dataclass
class SessionLog:
    config: SessionConfig
    records: list[RoundRecord]
    session_id: str

    def counts_series(self, frame: str = "canonical") -> np.ndarray:
        """Per-round count vectors as an array of shape (rounds, 5)."""
        if frame == "canonical":
            return np.array([r.counts_canonical for r in self.records])
        if frame == "permuted":
            return np.array([r.counts for r in self.records])
        raise ValueError(f"unknown frame {frame!r}")

    def state_series(self, frame: str = "canonical") -> np.ndarray:
        """Per-round population shares, rounds x 5."""
        counts = self.counts_series(frame)
        return counts / counts.sum(axis=1, keepdims=True)


def resolve_round(A_perm, design: ControlDesign, mode: ControlMode, perm: game.StrategyPermutation,
                  t: int, choices: list[int], cumulative: np.ndarray) -> RoundRecord:
    """Score one round of submitted choices; shared by simulator and server.

    choices are 1-based strategies in the permuted frame. The design must
    already be permuted to the same frame.
    """
    choices = [int(c) for c in choices]
    idx = np.array(choices) - 1
    counts = np.bincount(idx, minlength=game.N_STRATEGIES)
    game_vec = game.round_payoffs(A_perm, counts).astype(float)
    if mode.kind == "payoff":
        reward_vec, tax_vec = control_payoffs(design, mode, counts)
    else:
        reward_vec = np.zeros(game.N_STRATEGIES)
        tax_vec = np.zeros(game.N_STRATEGIES)
    gp = game_vec[idx]
    rw = reward_vec[idx]
    tx = tax_vec[idx]
    totals = gp + rw + tx
    new_cumulative = cumulative + totals
    counts_canonical = perm.vector(counts)
    return RoundRecord(
        t=t,
        choices=tuple(choices),
        counts=tuple(int(c) for c in counts),
        game_payoffs=tuple(float(v) for v in gp),
        rewards=tuple(float(v) for v in rw),
        taxes=tuple(float(v) for v in tx),
        totals=tuple(float(v) for v in totals),
        cumulative=tuple(float(v) for v in new_cumulative),
        counts_canonical=tuple(int(c) for c in counts_canonical),
    )


class BotSeat:
    """One bot agent: holds its RNG substream and picks strategies."""

    def __init__(self, policy: AgentPolicy, seed_seq: np.random.SeedSequence):
        self.policy = policy
        self.rng = np.random.Generator(np.random.Philox(seed_seq))

    def first_choice(self) -> int:
        return int(self.rng.integers(1, game.N_STRATEGIES + 1))

    def next_choice(self, me: int, last: RoundRecord, A_perm,
                    control_belief: np.ndarray, exp_values: np.ndarray) -> int:
        p = self.policy
        if self.rng.random() < p.mutation_rate:
            return int(self.rng.integers(1, game.N_STRATEGIES + 1))
        own = last.choices[me]
        if p.revision_rate < 1 and self.rng.random() >= p.revision_rate:
            return own
        if p.rule == "pairwise-imitation":
            others = [i for i in range(len(last.choices)) if i != me]
            if p.peer_selection == "best":
                best = max(last.totals[i] for i in others)
                pool = [i for i in others if last.totals[i] == best]
            else:
                pool = others
            peer = pool[int(self.rng.integers(len(pool)))]
            gain = last.totals[peer] - last.totals[me]
            if gain > 0 and self.rng.random() < min(1.0, gain / p.payoff_span):
                return last.choices[peer]
            return own
        # Estimated per-strategy totals. Feedback is the only channel through
        # which the controller reaches agents.
        if p.estimator == "experience":
            values = exp_values
        else:
            counts = np.array(last.counts)
            values = (np.asarray(A_perm, dtype=float) @ counts) + control_belief
        if p.rule == "logit":
            if p.beta == 0:
                return int(self.rng.integers(1, game.N_STRATEGIES + 1))
            z = p.beta * (values - values.max())
            probs = np.exp(z)
            probs /= probs.sum()
            return int(self.rng.choice(game.N_STRATEGIES, p=probs)) + 1
        if p.rule == "noisy-best-response":
            if self.rng.random() < p.epsilon:
                return int(self.rng.integers(1, game.N_STRATEGIES + 1))
            return int(np.argmax(values)) + 1
        raise AssertionError(p.rule)


class SessionState:
    """Mutable in-flight session: permuted materials, seats, record history."""

    def __init__(self, config: SessionConfig, A=None):
        self.config = config
        self.A = game.PAYOFF_MATRIX if A is None else np.asarray(A)
        self.perm = config.perm
        self.A_perm = self.perm.matrix(self.A)
        design = design_controller(self.A, config.b)
        self.design = permute_design(design, self.perm)
        self.mode = config.mode
        seat_seqs = np.random.SeedSequence(config.seed).spawn(config.players)
        self.seats = [BotSeat(config.policy, sq) for sq in seat_seqs]
        self.records: list[RoundRecord] = []
        self.cumulative = np.zeros(config.players)
        # Beliefs are common to all seats: every seat sees the same feedback.
        # exp_values starts optimistic so each strategy gets tried before
        # being ruled out; control_belief serves the "state" estimator.
        self.exp_values = np.full(game.N_STRATEGIES, config.policy.payoff_span,
                                  dtype=float)
        self.control_belief = np.zeros(game.N_STRATEGIES)

    @property
    def t(self) -> int:
        return len(self.records) + 1

    def bot_choices(self) -> list[int]:
        if not self.records:
            return [seat.first_choice() for seat in self.seats]
        last = self.records[-1]
        return [
            seat.next_choice(i, last, self.A_perm, self.control_belief,
                             self.exp_values)
            for i, seat in enumerate(self.seats)
        ]

    def resolve(self, choices: list[int]) -> RoundRecord:
        record = resolve_round(self.A_perm, self.design, self.mode, self.perm,
                               self.t, choices, self.cumulative)
        self.records.append(record)
        self.cumulative = np.array(record.cumulative)
        # Reward/tax levels oscillate with the social state, so the belief
        # tracks the current level: exact where observed this round, fading
        # toward ignorance where stale.
        policy = self.config.policy
        seen = np.zeros(game.N_STRATEGIES, dtype=bool)
        paid = np.zeros(game.N_STRATEGIES)
        earned = np.zeros(game.N_STRATEGIES)
        for j, ch in enumerate(record.choices):
            seen[ch - 1] = True
            paid[ch - 1] = record.rewards[j] + record.taxes[j]
            earned[ch - 1] = record.totals[j]
        keep = 1.0 - policy.learning_rate
        self.control_belief = np.where(seen, paid, keep * self.control_belief)
        V = self.exp_values
        self.exp_values = np.where(
            seen, V + policy.learning_rate * (earned - V),
            V + policy.forget_rate * (policy.payoff_span - V))
        return record


def step_round(state: SessionState) -> RoundRecord:
    """Advance one bot round: draw choices per policy, resolve, append."""
    return state.resolve(state.bot_choices())


def run_session(config: SessionConfig, A=None) -> SessionLog:
    """Play a full bot session; deterministic given config.seed."""
    state = SessionState(config, A)
    for _ in range(config.rounds):
        step_round(state)
    session_id = config.session_id or default_session_id(config)
    return SessionLog(config=config, records=state.records, session_id=session_id)


def default_session_id(config: SessionConfig) -> str:
    label = config.treatment or f"b{config.b:+g}"
    return f"sim-{label}-{config.permutation}-seed{config.seed}"


def run_treatment(config_template: SessionConfig, n_sessions: int, seed_base: int, A=None) -> list[SessionLog]:
    """Independent sessions with seeds seed_base, seed_base+1, ..."""
    if n_sessions < 1:
        raise ValueError("n_sessions must be >= 1")
    logs = []
    for k in range(n_sessions):
        config = replace(config_template, seed=seed_base + k, session_id=None)
        logs.append(run_session(config, A))
    return logs


def log_lines(log: SessionLog, extra_header: dict | None = None) -> list[str]:
    """JSONL lines: the config header (with session id), then one per round."""
    header = log.config.to_dict()
    header["session_id"] = log.session_id
    if extra_header:
        header.update(extra_header)
    lines = [json.dumps(header, separators=(",", ":"))]
    lines.extend(json.dumps(r.to_dict(), separators=(",", ":")) for r in log.records)
    return lines


def save_log(log: SessionLog, path, extra_header: dict | None = None) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(log_lines(log, extra_header)) + "\n")


def load_log(path) -> SessionLog:
    with open(path) as fh:
        lines = [line for line in fh.read().splitlines() if line]
    header = json.loads(lines[0])
    header.pop("partial", None)
    session_id = header.pop("session_id", None)
    config = SessionConfig.from_dict({**header, "session_id": session_id})
    records = [RoundRecord.from_dict(json.loads(line)) for line in lines[1:]]
    return SessionLog(config=config, records=records, session_id=session_id or "")


def save_counts_csv(log: SessionLog, path, frame: str = "canonical") -> None:
    """Flat per-round counts: header t,n1..n5."""
    counts = log.counts_series(frame)
    with open(path, "w") as fh:
        fh.write("t,n1,n2,n3,n4,n5\n")
        for t, row in enumerate(counts, start=1):
            fh.write(f"{t}," + ",".join(str(int(v)) for v in row) + "\n")
