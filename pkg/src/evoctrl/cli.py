"""Batch entry points: gain design, oracle verification, simulation,
integration, log analysis, full figure reproduction, and the live server.

Everything is a thin layer over the library; outputs are deterministic under
a fixed seed, and rerunning a command overwrites byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import game, measure, reference
from .agents import (
    TREATMENT_SESSIONS,
    TREATMENTS,
    AgentPolicy,
    SessionConfig,
    load_log,
    run_treatment,
    save_counts_csv,
    save_log,
)
from .control import (
    ControlMode,
    Uncontrollable,
    closed_loop_field,
    closed_loop_jacobian,
    design_controller,
    design_report,
    stability_boundary,
)
from .dynamics import eigs, integrate, jacobian, replicator_field, save_trajectory

FORMAT_VERSIONS = {"log": 1, "figures": 1}

X0_PRESETS = {
    "uniform": game.UNIFORM,
    "nash1": game.NASH_1,
    "nash2": game.NASH_2,
}


@dataclass(frozen=True)
class RunManifest:
    """One batch run: which treatments, how many sessions, which seeds."""

    treatments: tuple[dict, ...]
    rounds: int
    policy: dict = field(default_factory=lambda: AgentPolicy().to_dict())
    mode: str = "payoff"
    out_dir: str = "."
    master_seed: int = 20230217
    format_versions: dict = field(default_factory=lambda: dict(FORMAT_VERSIONS))

    def __post_init__(self):
        seeds = []
        for row in self.treatments:
            seeds.extend(row["seed_base"] + k for k in range(row["sessions"]))
        if len(seeds) != len(set(seeds)):
            raise ValueError("session seeds must be unique across the run")

    def to_dict(self) -> dict:
        return {
            "treatments": list(self.treatments),
            "rounds": self.rounds,
            "policy": self.policy,
            "mode": self.mode,
            "out_dir": self.out_dir,
            "master_seed": self.master_seed,
            "format_versions": self.format_versions,
        }


def default_manifest(out_dir: str, master_seed: int, rounds: int = 360,
                     sessions: dict | None = None,
                     policy: AgentPolicy | None = None,
                     mode: str = "payoff") -> RunManifest:
    sessions = sessions or TREATMENT_SESSIONS
    treatments = tuple(
        {"label": label, "b": TREATMENTS[label], "sessions": sessions[label],
         "seed_base": master_seed + 1000 * i}
        for i, label in enumerate(TREATMENTS)
    )
    return RunManifest(treatments=treatments, rounds=rounds,
                       policy=(policy or AgentPolicy()).to_dict(),
                       mode=mode, out_dir=out_dir, master_seed=master_seed)


def parse_policy(text: str | None) -> AgentPolicy:
    """Inline JSON object or a path to a JSON file; partial fields allowed."""
    if text is None:
        return AgentPolicy()
    if text.lstrip().startswith("{"):
        raw = json.loads(text)
    else:
        raw = json.loads(Path(text).read_text())
    base = AgentPolicy().to_dict()
    base.update(raw)
    return AgentPolicy.from_dict(base)


def parse_x0(text: str) -> np.ndarray:
    if text in X0_PRESETS:
        return np.asarray(X0_PRESETS[text], dtype=float)
    parts = [float(v) for v in text.split(",")]
    if len(parts) != game.N_STRATEGIES:
        raise ValueError(f"x0 needs {game.N_STRATEGIES} components")
    return np.asarray(parts)


def cmd_design(args) -> int:
    try:
        report = design_report(game.PAYOFF_MATRIX, args.b)
    except Uncontrollable as exc:
        print(f"design failed: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    if report["max_real_part_achieved"] > -1e-6:
        print("note: closed loop is marginal or unstable at this b", file=sys.stderr)
    return 0


def _check(lines: list[str], ok: bool, label: str) -> None:
    lines.append(f"{'PASS' if ok else 'FAIL'} {label}")


def cmd_verify(args) -> int:
    """Recompute the design chain and compare against the frozen references."""
    A = game.PAYOFF_MATRIX
    lines: list[str] = []

    for x, name in ((game.NASH_1, "Nash_1"), (game.NASH_2, "Nash_2")):
        check = game.is_nash(A, x)
        _check(lines, check.ok, f"{name} verifies as a Nash equilibrium")

    J = jacobian(replicator_field(A), game.NASH_1)
    spec = eigs(J)
    err = np.abs(spec.eigenvalues - reference.OPEN_LOOP_EIGENVALUES).max()
    _check(lines, err < 1e-5, f"open-loop spectrum matches reference (err {err:.2e})")

    worst = 0.0
    for i in range(game.N_STRATEGIES):
        col = reference.phase_align(spec.eigenvectors[:, i],
                                    reference.EIGENVECTOR_TABLE[:, i])
        worst = max(worst, float(np.abs(col - reference.EIGENVECTOR_TABLE[:, i]).max()))
    _check(lines, worst < 5e-3, f"eigenvector table matches reference (err {worst:.2e})")

    def canonical(lam):
        lam = np.asarray(lam, dtype=complex)
        return lam[np.lexsort((-lam.imag, -lam.real))]

    for b, row in reference.GAIN_TABLE.items():
        design = design_controller(A, b)
        gain_err = float(np.abs(design.K - row).max())
        achieved = eigs(closed_loop_jacobian(J, design.B, design.K)).eigenvalues
        spec_err = float(np.abs(canonical(achieved) - canonical(design.lambda_target)).max())
        inv = abs(design.K[:3].sum()) + abs(design.K[3:].sum() - 2 * b)
        _check(lines, gain_err < 2e-3 and spec_err < 1e-6 and inv < 1e-9,
               f"gain row b={b:+.1f} (gain err {gain_err:.2e}, spectrum err {spec_err:.2e})")

    boundary = stability_boundary(A)
    _check(lines, abs(boundary - 1 / 3) < 0.01,
           f"stability boundary at b={boundary:.4f} (expect 1/3)")

    spec2 = np.sort(eigs(jacobian(replicator_field(A), game.NASH_2)).eigenvalues.real)
    err2 = float(np.abs(spec2 - np.sort(reference.NASH_2_OPEN_SPECTRUM)).max())
    _check(lines, err2 < 1e-5, f"two-strategy equilibrium spectrum (err {err2:.2e})")

    print("\n".join(lines))
    return 0 if all(line.startswith("PASS") for line in lines) else 1


def cmd_simulate(args) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    config = SessionConfig(b=args.b, permutation=args.perm, rounds=args.rounds,
                           policy=parse_policy(args.policy),
                           mode=ControlMode(kind=args.mode))
    logs = run_treatment(config, args.sessions, args.seed)
    for log in logs:
        save_log(log, out / f"{log.session_id}.jsonl")
        save_counts_csv(log, out / f"{log.session_id}.counts.csv")
        rho = log.state_series().mean(axis=0)
        print(f"{log.session_id}: rho_bar = [{', '.join(f'{v:.3f}' for v in rho)}]")
    print(f"wrote {len(logs)} session log(s) to {out}")
    return 0


def cmd_integrate(args) -> int:
    design = design_controller(game.PAYOFF_MATRIX, args.b)
    fld = closed_loop_field(game.PAYOFF_MATRIX, design)
    x0 = parse_x0(args.x0)
    traj = integrate(fld, x0, args.dt, args.steps, renormalize=not args.ambient)
    out = args.out or "trajectory.csv"
    save_trajectory(traj, args.dt, out)
    print(f"integrated {args.steps} steps (dt={args.dt:g}, b={args.b:g}) -> {out}")
    print(f"final state: [{', '.join(f'{v:.4f}' for v in traj[-1])}]")
    return 0


def _summarize(reports: list[measure.MeasurementReport]) -> list[str]:
    """Pass/fail digest of the directional claims the figures carry."""
    by_b = {round(r.b, 3): r for r in reports}
    lines: list[str] = []

    def mass123(rep):
        return float(rep.distribution.rho_bar[:3].sum())

    if -0.8 in by_b and 0.8 in by_b:
        lo, hi = by_b[-0.8], by_b[0.8]
        _check(lines, mass123(lo) > 0.5 and mass123(hi) < 0.5,
               f"mass ordering flips between b=-0.8 ({mass123(lo):.3f} on {{1,2,3}}) "
               f"and b=+0.8 ({mass123(hi):.3f})")
    ordered = [mass123(by_b[b]) for b in sorted(by_b) if by_b.get(b)]
    _check(lines, all(later <= earlier for earlier, later in zip(ordered, ordered[1:])),
           "mean mass on {1,2,3} decreases with b: "
           + ", ".join(f"{v:.3f}" for v in ordered))
    if 0.0 in by_b:
        base = by_b[0.0].strength_mean
        for b in (0.4, 0.8):
            if b in by_b:
                ratio = by_b[b].strength_mean / base
                _check(lines, ratio < 0.2,
                       f"|L| at b=+{b:.1f} is {ratio:.0%} of b=0")
        for b in (-0.8, -0.4, 0.0):
            if b in by_b:
                rep = by_b[b]
                _check(lines, rep.strength_mean > 3 * max(rep.strength_se, 1e-12),
                       f"|L| at b={b:+.1f} significant "
                       f"({rep.strength_mean:.4f} vs se {rep.strength_se:.4f})")
    for pair, side in (((-0.8, -0.4), "toward Nash_1"), ((0.8, 0.4), "toward Nash_2")):
        if pair[0] in by_b and pair[1] in by_b:
            fast = measure.first_crossing(by_b[pair[0]].centroid_curve.smoothed)
            slow = measure.first_crossing(by_b[pair[1]].centroid_curve.smoothed)
            ok = fast is not None and (slow is None or fast < slow)
            _check(lines, ok, f"b={pair[0]:+.1f} crosses 0.15 {side} earlier than "
                              f"b={pair[1]:+.1f} (rounds {fast} vs {slow})")
    return lines


def cmd_analyze(args) -> int:
    logs = [load_log(path) for path in args.logs]
    groups: dict[float, list] = {}
    for log in logs:
        groups.setdefault(log.config.b, []).append(log)
    reports = [measure.aggregate_treatment(group) for _, group in sorted(groups.items())]
    out = Path(args.out or ".")
    paths = measure.write_figure_tables(reports, out)
    for rep in reports:
        rho = ", ".join(f"{v:.3f}" for v in rep.distribution.rho_bar)
        print(f"b={rep.b:+.1f}: {rep.n_sessions} session(s), rho_bar=[{rho}], "
              f"|L|={rep.strength_mean:.4f} (se {rep.strength_se:.4f})")
    print("\n".join(_summarize(reports)))
    print(f"wrote {', '.join(sorted(paths.values()))}")
    return 0


def cmd_reproduce(args) -> int:
    out = Path(args.out or "reproduction")
    out.mkdir(parents=True, exist_ok=True)
    if args.quick:
        sessions = {label: 3 for label in TREATMENTS}
        rounds = 120
    else:
        sessions = dict(TREATMENT_SESSIONS)
        rounds = args.rounds
    if args.sessions:
        sessions = {label: args.sessions for label in TREATMENTS}
    manifest = default_manifest(str(out), args.seed, rounds=rounds,
                                sessions=sessions,
                                policy=parse_policy(args.policy),
                                mode=args.mode)
    policy = AgentPolicy.from_dict(manifest.policy)
    reports = []
    for row in manifest.treatments:
        template = SessionConfig(b=row["b"], rounds=manifest.rounds, policy=policy,
                                 mode=ControlMode(kind=manifest.mode))
        logs = run_treatment(template, row["sessions"], row["seed_base"])
        reports.append(measure.aggregate_treatment(logs))
        print(f"{row['label']}: {row['sessions']} sessions done")
    paths = measure.write_figure_tables(reports, out)
    summary = _summarize(reports)
    (out / "summary.txt").write_text("\n".join(summary) + "\n")
    (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")
    print("\n".join(summary))
    print(f"wrote {', '.join(sorted(paths.values()))}, "
          f"{out / 'summary.txt'}, {out / 'manifest.json'}")
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    serve(host=args.host, port=args.port, server_code=args.server_code,
          allow_any_b=args.allow_any_b)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evoctrl",
        description="equilibrium selection control workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="compute a feedback gain and report")
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_design)

    p = sub.add_parser("verify", help="run the frozen design-chain oracles")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("simulate", help="run bot sessions and write logs")
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--sessions", type=int, default=1)
    p.add_argument("--rounds", type=int, default=360)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", help="JSON object or path with policy fields")
    p.add_argument("--mode", choices=["payoff", "velocity"], default="payoff")
    p.add_argument("--perm", default="00")
    p.add_argument("--out", help="output directory")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("integrate", help="integrate the closed-loop flow")
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--x0", default="uniform",
                   help="uniform | nash1 | nash2 | five comma-separated shares")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--ambient", action="store_true",
                   help="skip per-step simplex renormalization")
    p.add_argument("--out", help="trajectory CSV path")
    p.set_defaults(fn=cmd_integrate)

    p = sub.add_parser("analyze", help="aggregate session logs into figure tables")
    p.add_argument("logs", nargs="+", help="session JSONL files")
    p.add_argument("--out", help="output directory")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("reproduce", help="run all treatments and write figure tables")
    p.add_argument("--seed", type=int, default=20230217)
    p.add_argument("--rounds", type=int, default=360)
    p.add_argument("--sessions", type=int,
                   help="override sessions per treatment (default: design counts)")
    p.add_argument("--policy", help="JSON object or path with policy fields")
    p.add_argument("--mode", choices=["payoff", "velocity"], default="payoff")
    p.add_argument("--quick", action="store_true",
                   help="3 sessions x 120 rounds per treatment")
    p.add_argument("--out", help="output directory")
    p.set_defaults(fn=cmd_reproduce)

    p = sub.add_parser("serve", help="start the live session server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--server-code", default="00")
    p.add_argument("--allow-any-b", action="store_true")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
