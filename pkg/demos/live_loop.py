"""
Drive the live session server end to end over plain HTTP.

Starts the server in a background thread, then does two things:

1. creates a bot-only session and checks the exported log is byte-for-byte
   what the offline simulator produces for the same config, and
2. joins a mixed session as a human player, watches the event stream while
   submitting scripted choices, and prints each round's feedback.

Only the standard library talks to the server here; the same calls work
from curl or any HTTP client.
"""

import json
import socket
import threading
import time
import urllib.request

import uvicorn

from evoctrl import agents, control, server

ROUNDS = 3


def post(url, payload):
    req = urllib.request.Request(url, data=json.dumps(payload).encode(),
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as r:
        return json.loads(r.read())


def get(url):
    with urllib.request.urlopen(url) as r:
        return r.read().decode()


def sse_events(url, out):
    # minimal SSE reader: every event is one "data: {...}" line
    with urllib.request.urlopen(url) as stream:
        for raw in stream:
            line = raw.decode().strip()
            if line.startswith("data:"):
                event = json.loads(line[5:])
                out.append(event)
                if event.get("type") == "finished":
                    return


def main():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    app = server.create_app(server_code="77")
    srv = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port,
                                        log_level="warning"))
    thread = threading.Thread(target=srv.run, daemon=True)
    thread.start()
    while not srv.started:
        time.sleep(0.02)
    base = f"http://127.0.0.1:{port}"

    # --- bot-only parity -------------------------------------------------
    cfg_kwargs = dict(b=-0.8, permutation="00", rounds=60, players=5, seed=7,
                      session_id="demo-parity")
    post(f"{base}/sessions", {"config": cfg_kwargs, "seat_plan": ["bot"] * 5,
                              "timeout_s": None})
    via_http = get(f"{base}/sessions/demo-parity/log")
    cfg = agents.SessionConfig(policy=agents.AgentPolicy(), mode=control.ControlMode(),
                               **cfg_kwargs)
    direct = "\n".join(agents.log_lines(agents.run_session(cfg))) + "\n"
    print(f"bot session parity: {via_http == direct} ({len(direct)} bytes)")

    # --- human in the loop ------------------------------------------------
    made = post(f"{base}/sessions", {
        "config": dict(b=0.8, permutation="00", rounds=ROUNDS, players=5, seed=9),
        "seat_plan": ["human", "bot", "bot", "bot", "bot"], "timeout_s": None})
    sid = made["session_id"]
    print(f"\njoined session {sid} as 'pilot'")
    post(f"{base}/sessions/{sid}/join", {"token": "pilot"})

    events = []
    watcher = threading.Thread(
        target=sse_events, args=(f"{base}/sessions/{sid}/events?token=pilot", events),
        daemon=True)
    watcher.start()
    while not events:  # wait for the snapshot so no round result is missed
        time.sleep(0.02)

    for t in range(1, ROUNDS + 1):
        post(f"{base}/sessions/{sid}/choice", {"token": "pilot", "strategy": 1 + t % 5})
    watcher.join(timeout=10)

    for ev in events:
        if ev.get("type") == "round_result":
            fb = ev["feedback"]
            print(f"  round {ev['t']}: chose {fb['strategy']}, counts {fb['counts']}, "
                  f"game {fb['game_earn']:+.2f}, reward {fb['reward']:+.2f}, "
                  f"tax {fb['tax']:+.2f}, cumulative {fb['cumulative']:+.2f}")
        elif ev.get("type") == "finished":
            print(f"  finished, ranking {ev['ranking']}")

    srv.should_exit = True
    thread.join(timeout=5)


if __name__ == "__main__":
    main()
