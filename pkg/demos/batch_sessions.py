"""
Run a small batch of bot sessions for each treatment and print where the
population mass ends up.

The full treatment sizes live in TREATMENT_SESSIONS; this demo trims both
the session count and the round count so it finishes in a few seconds.
Logs and per-round count tables land under --out.
"""

import argparse
import pathlib

import evoctrl as ec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sessions", type=int, default=4)
    ap.add_argument("--rounds", type=int, default=120)
    ap.add_argument("--seed", type=int, default=500)
    ap.add_argument("--out", default="demo_out/sessions")
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for i, (label, b) in enumerate(ec.TREATMENTS.items()):
        template = ec.SessionConfig(b=b, rounds=args.rounds)
        logs = ec.run_treatment(template, args.sessions, seed_base=args.seed + 1000 * i)
        tail = slice_masses(logs, args.rounds)
        print(f"{label}  b={b:+.1f}   mass on 1-3: {tail[:3].sum():.3f}   "
              f"mass on 4-5: {tail[3:].sum():.3f}")
        for log in logs:
            ec.save_log(log, out / f"{log.session_id}.jsonl")
            ec.save_counts_csv(log, out / f"{log.session_id}_counts.csv")

    print(f"\nlogs written to {out}/")


def slice_masses(logs, rounds):
    # average distribution over the last third of each session
    lo = max(1, rounds - rounds // 3 + 1)
    out = 0.0
    for log in logs:
        out = out + ec.mean_distribution(ec.log_series(log), window=(lo, rounds)).rho_bar
    return out / len(logs)


if __name__ == "__main__":
    main()
