/**
 * Browser entry point. Joins a session, then renders every update straight
 * from the pushed events; /state is consulted only to (re)establish the
 * view after joining or after a dropped connection.
 */

import { SessionClient } from "./client.js";
import {
  applyEvent,
  choicePanel,
  clientView,
  feedbackPanel,
  markSubmitted,
  standingPanel,
  type ClientView,
} from "./view.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function mount(root: HTMLElement, base = ""): void {
  const client = new SessionClient(base);

  const form = el("form", "join-form");
  const sidInput = el("input");
  sidInput.placeholder = "experiment code";
  const tokenInput = el("input");
  tokenInput.placeholder = "personal code";
  const joinButton = el("button", "", "join");
  const joinError = el("p", "error");
  form.append(sidInput, tokenInput, joinButton, joinError);

  const zoneA = el("section", "zone-choice");
  const zoneB = el("section", "zone-feedback");
  const zoneC = el("section", "zone-standing");
  root.append(form, zoneA, zoneB, zoneC);

  let view: ClientView | undefined;
  let deadline: number | null = null;
  let ticker: ReturnType<typeof setInterval> | undefined;

  function render(): void {
    if (!view) return;
    const secondsLeft = deadline === null ? null : (deadline - Date.now()) / 1000;
    const choices = choicePanel(view, secondsLeft);
    zoneA.replaceChildren(el("p", "note", choices.note));
    for (const s of choices.strategies) {
      const button = el("button", "strategy", s.label);
      button.disabled = !choices.enabled;
      button.onclick = () => submit(s.value);
      zoneA.append(button);
    }
    if (choices.countdown !== null) {
      zoneA.append(el("p", "countdown", `${Math.max(0, choices.countdown).toFixed(0)}s left`));
    }

    const feedback = feedbackPanel(view.feedback);
    const table = el("table");
    for (const row of feedback.rows) {
      const tr = el("tr");
      tr.append(el("td", "label", row.label), el("td", "value", row.value));
      table.append(tr);
    }
    zoneB.replaceChildren(table);

    const standing = standingPanel(view);
    zoneC.replaceChildren(el("p", "total", `your total: ${standing.cumulative}`));
    if (standing.finished) {
      const board = el("table");
      for (const row of standing.rows) {
        const tr = el("tr", row.you ? "you" : "");
        tr.append(el("td", "", row.place), el("td", "", row.name), el("td", "", row.total));
        board.append(tr);
      }
      zoneC.append(board);
    }
  }

  function submit(strategy: number): void {
    // lock synchronously so a double-click cannot send twice
    if (!view || !view.choiceEnabled) return;
    view = markSubmitted(view);
    render();
    client.submitChoice(view.sessionId, view.token, strategy).catch(() => {
      // out-of-phase clicks are no-ops; anything else will surface on the
      // next event or reconnect
    });
  }

  function armCountdown(): void {
    if (ticker) clearInterval(ticker);
    deadline = null;
    if (!view || view.timeoutS === null || view.phase !== "round_open") return;
    deadline = Date.now() + view.timeoutS * 1000;
    ticker = setInterval(render, 250);
  }

  async function follow(sid: string, token: string): Promise<void> {
    // one stream per seat; on a drop, re-fetch /state and resume
    for (;;) {
      try {
        for await (const event of client.events(sid, token)) {
          if (!view) break;
          const before = view.round;
          view = applyEvent(view, event);
          if (view.phase === "round_open" && view.round !== before) armCountdown();
          if (view.phase === "finished" && ticker) clearInterval(ticker);
          render();
          if (event.type === "finished") return;
        }
        return;
      } catch {
        await new Promise((resolve) => setTimeout(resolve, 1000));
        view = clientView(token, await client.state(sid, token));
        armCountdown();
        render();
      }
    }
  }

  form.onsubmit = async (ev) => {
    ev.preventDefault();
    const sid = sidInput.value.trim();
    const token = tokenInput.value.trim();
    try {
      const joined = await client.join(sid, token);
      view = clientView(token, joined);
    } catch (err) {
      joinError.textContent = err instanceof Error ? err.message : String(err);
      return;
    }
    joinError.textContent = "";
    form.querySelectorAll("input,button").forEach((n) => ((n as HTMLButtonElement).disabled = true));
    armCountdown();
    render();
    await follow(sid, token);
  };
}

declare global {
  interface Window {
    evoctrlMount?: typeof mount;
  }
}

if (typeof window !== "undefined") {
  window.evoctrlMount = mount;
}
