/**
 * Pure render model for the three panel zones.
 *
 * Zone A: strategy choice buttons with a countdown when the round has a
 *         submission deadline.
 * Zone B: the numbers fed back after each round, exactly as the server
 *         reported them. The client never computes payoffs.
 * Zone C: running total and, once finished, the final standings.
 *
 * ClientView is the single piece of client state. It starts from a /state
 * (or join) response and then evolves only through applyEvent, so every
 * displayed number originates from a server message. Nothing here touches
 * the DOM; main.ts renders these structures.
 */

import type { Feedback, RankingRow, SessionEvent, SessionView } from "./client.js";

export const STRATEGY_LABELS = ["X1", "X2", "X3", "X4", "X5"] as const;

export interface ClientView {
  sessionId: string;
  token: string;
  phase: string;
  round: number;
  rounds: number;
  timeoutS: number | null;
  joined: number;
  needed: number;
  seat: number | null;
  /** zone B: verbatim copy of the last round_result feedback */
  feedback: Feedback | null;
  /** zone C: cumulative score, always a server-sent number */
  cumulative: number | null;
  ranking: RankingRow[] | null;
  /** round this seat last submitted for; null before the first confirm */
  submittedRound: number | null;
  /** true only in round_open before this seat has submitted */
  choiceEnabled: boolean;
}

const enabled = (phase: string, round: number, submittedRound: number | null): boolean =>
  phase === "round_open" && submittedRound !== round;

/** Build the initial view from a /state or join response. */
export function clientView(token: string, state: SessionView): ClientView {
  const submittedRound = state.submitted === true ? state.t : null;
  return {
    sessionId: state.session_id,
    token,
    phase: state.phase,
    round: state.t,
    rounds: state.rounds,
    timeoutS: state.timeout_s,
    joined: state.joined,
    needed: state.needed,
    seat: state.seat,
    feedback: state.feedback,
    cumulative: state.cumulative,
    ranking: state.ranking,
    submittedRound,
    choiceEnabled: enabled(state.phase, state.t, submittedRound),
  };
}

/** Fold one pushed event into the view. Reapplying the same event is a no-op. */
export function applyEvent(view: ClientView, event: SessionEvent): ClientView {
  switch (event.type) {
    case "lobby":
      return { ...view, phase: "lobby", joined: event.joined, needed: event.needed,
               choiceEnabled: false };
    case "phase": {
      const round = event.t ?? view.round;
      return {
        ...view,
        phase: event.phase,
        round,
        choiceEnabled: enabled(event.phase, round, view.submittedRound),
      };
    }
    case "round_open":
      return {
        ...view,
        phase: "round_open",
        round: event.t,
        choiceEnabled: enabled("round_open", event.t, view.submittedRound),
      };
    case "round_result":
      return {
        ...view,
        phase: "round_resolved",
        round: event.t,
        feedback: event.feedback,
        cumulative: event.feedback.cumulative,
        choiceEnabled: false,
      };
    case "finished":
      return { ...view, phase: "finished", ranking: event.ranking, choiceEnabled: false };
  }
}

/** The confirm button was pressed: lock choices until the next round opens. */
export function markSubmitted(view: ClientView): ClientView {
  return { ...view, submittedRound: view.round, choiceEnabled: false };
}

export interface ChoicePanel {
  round: number;
  rounds: number;
  strategies: { label: string; value: number }[];
  enabled: boolean;
  /** seconds remaining, mirroring the server deadline; null when untimed */
  countdown: number | null;
  note: string;
}

export function choicePanel(view: ClientView, secondsLeft?: number | null): ChoicePanel {
  const open = view.phase === "round_open";
  let note: string;
  if (view.phase === "lobby") {
    note = `waiting for players (${view.joined} joined, ${view.needed} more needed)`;
  } else if (view.phase === "finished") {
    note = "session finished";
  } else if (!open) {
    note = `round ${view.round} resolved, next round coming up`;
  } else if (!view.choiceEnabled) {
    note = `round ${view.round} of ${view.rounds}: choice locked in`;
  } else {
    note = `round ${view.round} of ${view.rounds}: pick a strategy`;
  }
  return {
    round: view.round,
    rounds: view.rounds,
    strategies: STRATEGY_LABELS.map((label, i) => ({ label, value: i + 1 })),
    enabled: view.choiceEnabled,
    countdown: open && view.timeoutS !== null ? (secondsLeft ?? view.timeoutS) : null,
    note,
  };
}

export interface FeedbackPanel {
  rows: { label: string; value: string }[];
  /** raw numbers, untouched, for anything that needs them verbatim */
  numbers: Feedback | null;
}

const fmt = (x: number): string => x.toFixed(2);

export function feedbackPanel(feedback: Feedback | null): FeedbackPanel {
  if (feedback === null) {
    return { rows: [{ label: "Last round", value: "no results yet" }], numbers: null };
  }
  const label = STRATEGY_LABELS[feedback.strategy - 1] ?? `X${feedback.strategy}`;
  return {
    numbers: feedback,
    rows: [
      { label: "Your choice", value: label },
      { label: "Players per strategy", value: `[${feedback.counts.join(",")}]` },
      { label: "Game earnings", value: fmt(feedback.game_earn) },
      { label: "Reward", value: fmt(feedback.reward) },
      { label: "Tax", value: fmt(feedback.tax) },
      { label: "Round total", value: fmt(feedback.round_sum) },
      { label: "Cumulative", value: fmt(feedback.cumulative) },
    ],
  };
}

export interface StandingPanel {
  cumulative: string;
  finished: boolean;
  rows: { place: string; name: string; total: string; you: boolean }[];
}

export function standingPanel(view: ClientView): StandingPanel {
  const rows = (view.ranking ?? [])
    .slice()
    .sort((a, b) => a.rank - b.rank || a.seat - b.seat)
    .map((row: RankingRow) => ({
      place: Number.isInteger(row.rank) ? String(row.rank) : row.rank.toFixed(1),
      name: row.token ?? `${row.kind} ${row.seat + 1}`,
      total: fmt(row.cumulative),
      you: view.seat !== null && row.seat === view.seat,
    }));
  return {
    cumulative: view.cumulative === null ? "0.00" : fmt(view.cumulative),
    finished: view.phase === "finished",
    rows,
  };
}
