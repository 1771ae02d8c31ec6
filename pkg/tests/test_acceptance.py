"""Acceptance gate: one criterion per test, one PASS/FAIL line each.

Tolerances are pinned here and nowhere else. The simulated-behavior
criteria run on 16 sessions per treatment at a fixed master seed; the
two clauses known to be out of reach for the frozen bot population
(positive-side crossing order in A6, the 20% suppression bound at
b=+0.4 in A7) are asserted as stated and left to fail.
"""

import conftest
import numpy as np
import pytest
from fastapi.testclient import TestClient

from evoctrl import agents, cli, control, dynamics, game, measure, reference, server

MASTER_SEED = 7000
SESSIONS_PER_TREATMENT = 16
ROUNDS = 360
LAST_WINDOW = (261, 360)


def emit(name: str, ok: bool, detail: str) -> str:
    line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line, flush=True)
    conftest.acceptance_lines.append(line)
    return line


@pytest.fixture(scope="session")
def batches():
    out = {}
    for i, (label, b) in enumerate(agents.TREATMENTS.items()):
        cfg = agents.SessionConfig(b=b, permutation="00", rounds=ROUNDS, players=5,
                                   policy=agents.AgentPolicy(),
                                   mode=control.ControlMode(), seed=0)
        out[b] = agents.run_treatment(cfg, SESSIONS_PER_TREATMENT,
                                      seed_base=MASTER_SEED + 1000 * i)
    return out


@pytest.fixture(scope="session")
def reports(batches):
    return {b: measure.aggregate_treatment(logs) for b, logs in batches.items()}


@pytest.fixture(scope="session")
def tail_masses(batches):
    out = {}
    for b, logs in batches.items():
        rho = np.mean([measure.mean_distribution(log.state_series(),
                                                 window=LAST_WINDOW).rho_bar
                       for log in logs], axis=0)
        out[b] = rho
    return out


def test_a1_open_loop_spectrum(A, nash1):
    J = dynamics.jacobian(dynamics.replicator_field(A), nash1, h=1e-6)
    lam = dynamics.eigs(J).eigenvalues
    err = np.max(np.abs(lam - reference.OPEN_LOOP_EIGENVALUES))
    line = emit("A1", err < 1e-5, f"spectrum error {err:.2e} (tol 1e-5)")
    assert err < 1e-5, line


def test_a2_open_loop_eigenvectors(A, nash1):
    J = dynamics.jacobian(dynamics.replicator_field(A), nash1, h=1e-6)
    s = dynamics.eigs(J)
    worst = 0.0
    for k in range(5):
        col = reference.phase_align(s.eigenvectors[:, k], reference.EIGENVECTOR_TABLE[:, k])
        worst = max(worst, float(np.max(np.abs(col - reference.EIGENVECTOR_TABLE[:, k]))))
    col4 = reference.phase_align(s.eigenvectors[:, 3], reference.EIGENVECTOR_4_PRECISE)
    col4_gap = float(np.max(np.abs(col4.real - reference.EIGENVECTOR_4_PRECISE)))
    line = emit("A2", worst < 5e-3,
                f"worst table deviation {worst:.2e} (tol 5e-3); "
                f"column 4 vs high-precision value {col4_gap:.1e}")
    assert worst < 5e-3, line


def test_a3_gain_reproduction(A, designs):
    f_open = dynamics.replicator_field(A)
    gain_err = 0.0
    spec_err = 0.0
    for b, expected in reference.GAIN_TABLE.items():
        design = designs[b]
        gain_err = max(gain_err, float(np.max(np.abs(design.K - np.asarray(expected)))))
        J = dynamics.jacobian(f_open, np.asarray(design.anchor, dtype=float))
        Jc = control.closed_loop_jacobian(J, design.B, design.K)
        order = lambda lam: lam[np.lexsort((-lam.imag, -lam.real))]
        achieved = order(dynamics.eigs(Jc).eigenvalues)
        target = order(np.asarray(design.lambda_target))
        spec_err = max(spec_err, float(np.max(np.abs(achieved - target))))
    ok = gain_err < 2e-3 and spec_err < 1e-6
    line = emit("A3", ok, f"gain error {gain_err:.2e} (tol 2e-3), "
                          f"closed-loop spectrum error {spec_err:.2e} (tol 1e-6)")
    assert ok, line


def test_a4_stability_boundary(A):
    bstar = control.stability_boundary(A, tol=1e-3)
    gap = abs(bstar - 1.0 / 3.0)
    line = emit("A4", gap < 0.01, f"sign change at b={bstar:.4f}, |b - 1/3| = {gap:.2e} (tol 0.01)")
    assert gap < 0.01, line


def test_a5_equilibrium_selection(tail_masses):
    m123 = {b: float(tail_masses[b][:3].sum()) for b in tail_masses}
    ordered = [m123[b] for b in sorted(m123)]
    monotone = all(later <= earlier for earlier, later in zip(ordered, ordered[1:]))
    low = m123[-0.8]
    high = 1.0 - m123[0.8]
    ok = low > 0.7 and high > 0.7 and monotone
    line = emit("A5", ok,
                "last-100 mass on {1,2,3} at b=-0.8 is " + f"{low:.3f} (need >0.7), "
                "mass on {4,5} at b=+0.8 is " + f"{high:.3f} (need >0.7), "
                f"m123 over b asc = {[round(v, 3) for v in ordered]} monotone={monotone}")
    assert ok, line


def test_a6_convergence_speed(A, reports, nash1, nash2):
    # ODE leg: exponential-rate fits against the leading closed-loop |Re|,
    # crossing times from the projected flow
    dt, steps = 0.01, 4000
    ts = np.arange(steps + 1) * dt

    def fit(ds):
        mask = (ds > 1e-6) & (ds < 1e-2)
        return -np.polyfit(ts[mask], np.log(ds[mask]), 1)[0]

    uniform = np.asarray(game.UNIFORM, dtype=float)
    fits = {}
    crossings = {}
    for b in (-0.8, -0.4, 0.4, 0.8):
        design = control.design_controller(A, b)
        f = control.closed_loop_field(A, design)
        if b < 0:
            traj = dynamics.integrate(f, uniform, dt, steps, renormalize=False)
            ds = np.linalg.norm(traj - nash1, axis=1)
            J = dynamics.jacobian(f, np.asarray(design.anchor, dtype=float))
            ref = abs(float(dynamics.eigs(J).eigenvalues.real.max()))
        else:
            traj = dynamics.integrate(f, uniform, dt, steps, renormalize=True)
            ds = np.linalg.norm(traj - nash2, axis=1)
            ref = abs(float(dynamics.tangent_spectrum(f, nash2).real.max()))
        fits[b] = abs(fit(ds) - ref) / ref
        proj = dynamics.integrate(f, uniform, dt, steps, renormalize=True)
        dproj = np.linalg.norm(proj - (nash1 if b < 0 else nash2), axis=1)
        crossings[b] = float(ts[np.argmax(dproj < 0.15)]) if (dproj < 0.15).any() else None

    fits_ok = all(v < 0.2 for v in fits.values())
    ode_neg = crossings[-0.8] is not None and crossings[-0.4] is not None \
        and crossings[-0.8] < crossings[-0.4]
    ode_pos = crossings[0.8] is not None and crossings[0.4] is not None \
        and crossings[0.8] < crossings[0.4]

    # simulation leg: smoothed centroid distance, first round under 0.15
    sim = {b: measure.first_crossing(reports[b].centroid_curve.smoothed)
           for b in (-0.8, -0.4, 0.4, 0.8)}
    sim_neg = sim[-0.8] is not None and sim[-0.4] is not None and sim[-0.8] < sim[-0.4]
    sim_pos = sim[0.8] is not None and sim[0.4] is not None and sim[0.8] < sim[0.4]

    ok = fits_ok and ode_neg and ode_pos and sim_neg and sim_pos
    line = emit("A6", ok,
                f"rate fits vs |Re| {dict((b, round(float(v), 3)) for b, v in fits.items())} "
                f"(tol 0.20); ODE crossings {crossings} neg-order={ode_neg} pos-order={ode_pos}; "
                f"sim crossings {sim} neg-order={sim_neg} pos-order={sim_pos}")
    assert ok, line


def test_a7_cycle_suppression(reports):
    sig = {}
    for b in (-0.8, -0.4, 0.0):
        r = reports[b]
        sig[b] = r.strength_mean > 3 * r.strength_se
    base = reports[0.0].strength_mean
    ratios = {b: reports[b].strength_mean / base for b in (0.4, 0.8)}
    suppressed = {b: v < 0.2 for b, v in ratios.items()}

    pair_index = {p: k for k, p in enumerate(measure.PAIRS)}
    shares = {}
    for b in (-0.8, -0.4, 0.0):
        Lm = reports[b].momentum_mean
        face = sum(abs(Lm[pair_index[p]]) for p in measure.FACE_PAIRS)
        shares[b] = face / np.abs(Lm).sum()
    sigma = measure.eigencycle(reference.EIGENVECTOR_TABLE[:, 0])
    support_face = sum(abs(sigma.value(m, n)) for (m, n) in measure.FACE_PAIRS)
    concentrated = all(v >= 0.5 for v in shares.values()) and support_face > 0.99

    ok = all(sig.values()) and all(suppressed.values()) and concentrated
    line = emit("A7", ok,
                f"|L| > 3se for cycling treatments {sig}; suppression ratios vs b=0 "
                f"{dict((b, round(v, 2)) for b, v in ratios.items())} (need <0.20); "
                f"face share of |L| {dict((b, round(float(v), 2)) for b, v in shares.items())} "
                f"(need >=0.5), eigencycle face support {support_face:.3f}")
    assert ok, line


def test_a8_measurement_oracles():
    rng = np.random.default_rng(88)
    worst = 0.0
    for _ in range(100):
        T = int(rng.integers(3, 12))
        states = rng.dirichlet(np.ones(5), size=T)
        L = measure.angular_momentum(states).L
        for k, (m, n) in enumerate(measure.PAIRS):
            acc = 0.0
            for t in range(T - 1):
                acc += states[t, m - 1] * states[t + 1, n - 1] \
                    - states[t, n - 1] * states[t + 1, m - 1]
            worst = max(worst, abs(L[k] - acc / (T - 1)))

    e = np.eye(5)
    cyc = np.array([e[0], e[1], e[2], e[0], e[1], e[2], e[0]])
    L3 = measure.angular_momentum(cyc)
    exact = (L3.value(2, 1) == -1 / 3 and L3.value(3, 2) == -1 / 3
             and L3.value(3, 1) == 1 / 3)

    uniform = np.asarray(game.UNIFORM, dtype=float)
    d1 = abs(np.linalg.norm(uniform - np.asarray(game.NASH_1, dtype=float))
             - reference.UNIFORM_TO_NASH_1)
    d2 = abs(np.linalg.norm(uniform - np.asarray(game.NASH_2, dtype=float))
             - reference.UNIFORM_TO_NASH_2)

    ok = worst < 1e-14 and exact and d1 < 1e-12 and d2 < 1e-12
    line = emit("A8", ok,
                f"double-loop gap {worst:.1e} (tol 1e-14); 3-cycle exact={exact}; "
                f"distance gaps {d1:.1e}, {d2:.1e} (tol 1e-12)")
    assert ok, line


def test_a9_permutation_consistency(A, designs):
    perm = game.StrategyPermutation("14")

    f = dynamics.replicator_field(A)
    fp = dynamics.replicator_field(perm.matrix(A))
    x = np.random.default_rng(14).dirichlet(np.ones(5))
    J = np.asarray(dynamics.jacobian(f, x))
    Jp = np.asarray(dynamics.jacobian(fp, perm.vector(x)))
    P = np.eye(5)[perm.mapping]
    conj_err = float(np.max(np.abs(Jp - P @ J @ P.T)))

    states = np.random.default_rng(15).dirichlet(np.ones(5), size=60)
    base = measure.cycle_strength(measure.angular_momentum(states).L)
    shuffled = measure.cycle_strength(measure.angular_momentum(states[:, perm.mapping]).L)
    inv_err = abs(base - shuffled)

    masses = {}
    for b, seed0 in ((-0.8, MASTER_SEED), (0.8, MASTER_SEED + 4000)):
        cfg = agents.SessionConfig(b=b, permutation="14", rounds=ROUNDS, players=5,
                                   policy=agents.AgentPolicy(),
                                   mode=control.ControlMode(), seed=0)
        logs = agents.run_treatment(cfg, 8, seed_base=seed0)
        rho = np.mean([measure.mean_distribution(log.state_series(frame="canonical"),
                                                 window=LAST_WINDOW).rho_bar
                       for log in logs], axis=0)
        masses[b] = rho
    low = float(masses[-0.8][:3].sum())
    high = float(masses[0.8][3:].sum())

    ok = conj_err < 1e-8 and inv_err < 1e-12 and low > 0.7 and high > 0.7
    line = emit("A9", ok,
                f"PJP^T error {conj_err:.1e} (tol 1e-8); |L| shift {inv_err:.1e} (tol 1e-12); "
                f"de-permuted masses {low:.3f} / {high:.3f} (need >0.7)")
    assert ok, line


def test_a10_reproduce_determinism(tmp_path, capsys):
    out_dir = tmp_path / "quick"
    assert cli.main(["reproduce", "--quick", "--out", str(out_dir)]) == 0
    first = {n: (out_dir / n).read_bytes() for n in ("fig3.csv", "fig4.csv", "fig5.csv")}
    assert cli.main(["reproduce", "--quick", "--out", str(out_dir)]) == 0
    same = all((out_dir / n).read_bytes() == blob for n, blob in first.items())
    capsys.readouterr()
    line = emit("A10", same, "fig3/fig4/fig5 byte-identical across two quick runs")
    assert same, line


def test_a12_server_parity():
    cfg_kwargs = dict(b=-0.8, permutation="00", rounds=ROUNDS, players=5, seed=2023,
                      session_id="parity-360")
    with TestClient(server.create_app()) as client:
        r = client.post("/sessions", json={
            "config": cfg_kwargs, "seat_plan": ["bot"] * 5, "timeout_s": None})
        assert r.status_code == 200
        via_http = client.get("/sessions/parity-360/log").text
    cfg = agents.SessionConfig(policy=agents.AgentPolicy(), mode=control.ControlMode(),
                               **cfg_kwargs)
    direct = "\n".join(agents.log_lines(agents.run_session(cfg))) + "\n"
    same = via_http == direct
    line = emit("A12", same,
                f"{len(direct)}-byte log identical through the server={same}")
    assert same, line
